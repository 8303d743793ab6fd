import numpy as np
import pytest

import cubelap as cl


def random_smooth_field(grid, rng, n_bumps=4, max_center=None):
    """Random superposition of well-separated gaussians, smooth and decaying."""
    if max_center is None:
        max_center = grid.half_length / 3.0
    x = grid.x
    vals = np.zeros_like(x)
    for _ in range(n_bumps):
        amp = rng.uniform(-2.0, 2.0)
        width = rng.uniform(0.5, 2.0)
        center = rng.uniform(-max_center, max_center)
        vals += amp * np.exp(-(((x - center) / width) ** 2))
    return cl.Field(grid, vals, "physical")


@pytest.fixture(scope="session")
def certified_problem():
    """Certified nonlinear fixture: gaussian kernel, saturating reaction with
    the Lipschitz constant tuned so the contraction constant is 0.5 at the
    chosen window, gaussian initial state, a=0, b=1."""
    grid = cl.make_grid(20.0, 256)
    kernel = cl.gaussian_kernel(0.01, 2.0)
    q = cl.kernel_strength(kernel)
    T = 0.4
    # C = q*l*sqrt(9 T^2 + 2) at a=0, |b|=1; solve for l at C = 0.5
    ell = 0.5 / (q * np.sqrt(9.0 * T * T + 2.0))
    nonlinearity = cl.saturating(ell, cl.source_gaussian(0.1, 1.0))
    u0 = cl.field_from_function(grid, lambda x: np.exp(-(x**2) / 2.0))
    prob = cl.ProblemSpec(
        a=0.0, b=1.0, kernel=kernel, nonlinearity=nonlinearity, u0=u0, grid=grid
    )
    cert = cl.Certificate.for_window(q, ell, 0.0, 1.0, T)
    return prob, cert, T
