import numpy as np
import pytest

import cubelap as cl

from conftest import random_smooth_field


# --------------------------------------------------------------------------
# kernel catalog and its L1 sizes
# --------------------------------------------------------------------------


def test_gaussian_kernel_l1_is_sqrt_pi():
    k = cl.gaussian_kernel(1.0, 1.0)
    assert abs(k.l1 - np.sqrt(np.pi)) <= 1e-10


def _gaussian_d6_l1_exact():
    """Independent oracle for ||d^6/dx^6 e^{-x^2}||_L1.

    The sixth derivative is H6(x) e^{-x^2} (physicists' Hermite), which
    changes sign exactly at the roots of H6; between consecutive roots the
    integral telescopes to differences of the fifth derivative -H5 e^{-x^2}.
    """
    roots = np.sort(np.polynomial.hermite.hermgauss(6)[0])

    def g5(x):
        return -(32 * x**5 - 160 * x**3 + 120 * x) * np.exp(-(x**2))

    pts = np.concatenate(([-np.inf], roots, [np.inf]))
    vals = [0.0 if np.isinf(t) else g5(t) for t in pts]
    return float(sum(abs(vals[i + 1] - vals[i]) for i in range(len(vals) - 1)))


def test_gaussian_kernel_strength_vs_root_splitting_oracle():
    k = cl.gaussian_kernel(1.0, 1.0)
    q_exact = np.hypot(np.sqrt(np.pi), _gaussian_d6_l1_exact())
    assert abs(cl.kernel_strength(k) - q_exact) <= 1e-9 * q_exact


def test_kernel_strength_homogeneous_in_amplitude():
    base = cl.kernel_strength(cl.gaussian_kernel(1.0, 1.3))
    scaled = cl.kernel_strength(cl.gaussian_kernel(2.5, 1.3))
    assert abs(scaled - 2.5 * base) <= 1e-9 * scaled


def test_synthetic_three_four_five_kernel():
    k = cl.KernelSpec(
        name="synthetic",
        g=lambda x: np.exp(-np.asarray(x) ** 2),
        l1=3.0,
        l1_d6=4.0,
        norm_method="declared",
    )
    assert cl.kernel_strength(k) == 5.0


def test_sech_kernel_l1_and_sixth_derivative():
    a, w = 0.7, 0.8
    k = cl.sech_kernel(a, w)
    assert np.isclose(k.l1, a * w * np.pi, rtol=1e-12)
    # Euler number: d^6 sech(0) = -61
    assert np.isclose(k.d6g(0.0), -61.0 * a / w**6, rtol=1e-12)
    # cross-check the analytic rule against the spectral derivative
    g = cl.make_grid(40.0, 1024)
    d6_spec = cl.to_physical(
        cl.spectral_derivative(cl.field_from_function(g, k.g), 6)
    ).values.real
    assert np.max(np.abs(d6_spec - k.d6g(g.x))) <= 1e-8 * np.max(np.abs(d6_spec))


def test_gaussian_d6_rule_matches_spectral_derivative():
    k = cl.gaussian_kernel(1.0, 1.0)
    g = cl.make_grid(20.0, 512)
    d6_spec = cl.to_physical(
        cl.spectral_derivative(cl.field_from_function(g, k.g), 6)
    ).values.real
    assert np.max(np.abs(d6_spec - k.d6g(g.x))) <= 1e-7 * np.max(np.abs(d6_spec))


def test_bandlimited_kernel_support_is_exact():
    g = cl.make_grid(20.0, 256)
    k = cl.bandlimited_kernel(g, amplitude=1.0, cutoff=2.0)
    ghat = k.spectrum_on(g)
    outside = np.abs(g.wavenumbers) > 2.0
    assert np.all(ghat[outside] == 0)
    assert np.max(np.abs(ghat)) > 0
    report = cl.validate_kernel(k, g)
    assert report.compact_spectral_support
    assert any("compact spectral support" in note for note in report.notes)


def test_bandlimited_kernel_grid_binding():
    g = cl.make_grid(20.0, 256)
    other = cl.make_grid(20.0, 128)
    k = cl.bandlimited_kernel(g, 1.0, 2.0)
    with pytest.raises(ValueError):
        k.spectrum_on(other)


def test_tabulated_kernel_roundtrip(tmp_path):
    # samples aligned with the grid: the spectral fallback is clean
    g = cl.make_grid(20.0, 512)
    path = tmp_path / "kern.csv"
    with open(path, "w") as fh:
        for x in g.x:
            fh.write(f"{float(x)!r},{float(np.exp(-x * x))!r}\n")
    k = cl.tabulated_kernel_from_csv(g, path)
    ref = cl.gaussian_kernel(1.0, 1.0)
    assert abs(k.l1 - ref.l1) <= 1e-3 * ref.l1
    assert abs(k.l1_d6 - ref.l1_d6) <= 5e-2 * ref.l1_d6
    report = cl.validate_kernel(k, g)
    assert report.spectral_tail_fraction is not None
    assert report.spectral_tail_fraction < 1e-8


def test_tabulated_kernel_misaligned_samples_are_flagged(tmp_path):
    # linear interpolation corners pollute the sixth derivative; the p^6
    # spectral tail diagnostic must expose that the fallback was unresolved
    g = cl.make_grid(20.0, 512)
    xs = np.linspace(-20.0, 19.9, 700)  # not on the grid nodes
    k = cl.tabulated_kernel(g, xs, np.exp(-(xs**2)))
    report = cl.validate_kernel(k, g)
    assert report.spectral_tail_fraction > 1e-3


def test_tabulated_kernel_rejects_bad_samples():
    g = cl.make_grid(10.0, 64)
    with pytest.raises(ValueError):
        cl.tabulated_kernel(g, np.array([0.0, 1.0, 1.5]), np.array([1.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        cl.tabulated_kernel(g, np.array([0.0, -1.0, -2.0]), np.array([1.0, 1.0, 1.0]))


def test_zero_kernel_fails_validation():
    g = cl.make_grid(10.0, 64)
    k = cl.tabulated_kernel(g, np.array([-1.0, 0.0, 1.0]), np.zeros(3))
    with pytest.raises(cl.KernelAssumptionError):
        cl.validate_kernel(k, g)
    with pytest.raises(cl.KernelAssumptionError):
        cl.kernel_strength(k)


# --------------------------------------------------------------------------
# nonlinearity catalog
# --------------------------------------------------------------------------


def test_linear_plus_source_values():
    g = cl.make_grid(10.0, 64)
    n = cl.linear_plus_source(0.5)
    u = cl.Field(g, 2.0 * np.ones(64), "physical")
    out = cl.apply_nonlinearity(u, n)
    assert np.allclose(out.values.real, 1.0)


def test_saturating_at_zero_state():
    g = cl.make_grid(10.0, 64)
    zero = cl.Field(g, np.zeros(64), "physical")
    plain = cl.saturating(1.0)
    assert np.all(cl.apply_nonlinearity(zero, plain).values == 0)
    with_src = cl.saturating(1.0, cl.source_gaussian(1.0, 1.0))
    out = cl.apply_nonlinearity(zero, with_src)
    assert np.allclose(out.values.real, np.exp(-(g.x**2)))


def test_linear_nonlinearity_is_affine():
    g = cl.make_grid(10.0, 64)
    rng = np.random.default_rng(12)
    n = cl.linear_plus_source(0.7, cl.source_gaussian(0.3, 1.5))
    u1 = rng.normal(size=64)
    u2 = rng.normal(size=64)
    alpha = 0.3
    lhs = n.fn(alpha * u1 + (1 - alpha) * u2, g.x)
    rhs = alpha * n.fn(u1, g.x) + (1 - alpha) * n.fn(u2, g.x)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (np.max(np.abs(rhs)) + 1.0)


@pytest.mark.parametrize(
    "make",
    [
        lambda: cl.linear_plus_source(0.8, cl.source_gaussian(0.5, 1.0)),
        lambda: cl.saturating(1.7, cl.source_gaussian(0.5, 1.0)),
        lambda: cl.logistic_clip(2.0, 1.5, cl.source_gaussian(0.5, 1.0)),
    ],
)
def test_growth_bound_on_random_states(make):
    g = cl.make_grid(15.0, 128)
    n = make()
    rng = np.random.default_rng(8)
    h_norm = cl.l2_norm(cl.Field(g, n.source(g.x), "physical"))
    for _ in range(20):
        u = random_smooth_field(g, rng)
        out = cl.apply_nonlinearity(u, n)
        assert cl.l2_norm(out) <= n.growth_k * cl.l2_norm(u) + h_norm + 1e-9


def test_apply_nonlinearity_requires_physical():
    g = cl.make_grid(10.0, 64)
    spec = cl.forward_transform(cl.Field(g, np.ones(64), "physical"))
    with pytest.raises(cl.RepresentationError):
        cl.apply_nonlinearity(spec, cl.saturating(1.0))


def test_apply_nonlinearity_flags_nan():
    g = cl.make_grid(10.0, 64)
    bad = cl.NonlinearitySpec(
        name="bad",
        fn=lambda u, x: np.where(x > 5.0, np.nan, u),
        source=cl.source_zero(),
        growth_k=1.0,
        lipschitz_l=1.0,
    )
    u = cl.Field(g, np.ones(64), "physical")
    with pytest.raises(cl.ModelEvaluationError, match="x\\["):
        cl.apply_nonlinearity(u, bad)


def test_lipschitz_sampling_linear_exact():
    n = cl.linear_plus_source(0.6)
    ratio = cl.check_lipschitz_sampling(n, trials=500, seed=1)
    assert np.isclose(ratio, 0.6, rtol=1e-12)


def test_lipschitz_sampling_saturating_tight():
    n = cl.saturating(1.4)
    ratio = cl.check_lipschitz_sampling(n, trials=5000, seed=2)
    assert ratio <= 1.4 * (1 + 1e-12)
    assert ratio >= 1.4 * (1 - 1e-4)  # near-zero pairs approach the constant


def test_lipschitz_sampling_catches_wrong_declaration():
    n = cl.linear_plus_source(2.0, lipschitz=1.0)
    with pytest.raises(cl.LipschitzDeclarationError, match="u1="):
        cl.check_lipschitz_sampling(n, trials=200, seed=3)


def test_logistic_clip_slope_inside_clip():
    n = cl.logistic_clip(3.0, 1.0)
    # slope at u = -u_max is the declared constant
    eps = 1e-7
    x = np.zeros(1)
    slope = abs(n.fn(np.array([-1.0 + eps]), x) - n.fn(np.array([-1.0]), x)) / eps
    assert np.isclose(slope[0], 3.0, rtol=1e-5)
    ratio = cl.check_lipschitz_sampling(n, trials=4000, seed=4)
    assert ratio <= 3.0 * (1 + 1e-12)


# --------------------------------------------------------------------------
# nontriviality overlap
# --------------------------------------------------------------------------


def test_overlap_zero_when_source_vanishes():
    g = cl.make_grid(20.0, 256)
    k = cl.gaussian_kernel(1.0, 1.0)
    n = cl.saturating(1.0)  # F(0, .) == 0
    with pytest.warns(UserWarning, match="identically zero"):
        assert cl.nontriviality_overlap(k, n, g) == 0.0


def test_overlap_zero_for_disjoint_bands():
    g = cl.make_grid(20.0, 256)
    k = cl.bandlimited_kernel(g, 1.0, 1.0)
    n = cl.linear_plus_source(0.0, cl.source_bandlimited(g, 1.0, 2.0, 3.0))
    assert cl.nontriviality_overlap(k, n, g) == 0.0


def test_overlap_positive_for_gaussians():
    g = cl.make_grid(20.0, 256)
    k = cl.gaussian_kernel(1.0, 1.0)
    n = cl.saturating(1.0, cl.source_gaussian(0.5, 1.0))
    assert cl.nontriviality_overlap(k, n, g) > 0.0


def test_overlap_monotone_in_threshold():
    g = cl.make_grid(20.0, 256)
    k = cl.gaussian_kernel(1.0, 1.0)
    n = cl.saturating(1.0, cl.source_gaussian(0.5, 2.0))
    vals = [cl.nontriviality_overlap(k, n, g, eps_supp=e) for e in (1e-12, 1e-8, 1e-4, 1e-1)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


# --------------------------------------------------------------------------
# problem assembly
# --------------------------------------------------------------------------


def test_problem_spec_rejects_negative_a():
    g = cl.make_grid(10.0, 64)
    u0 = cl.Field(g, np.zeros(64), "physical")
    with pytest.raises(cl.AssumptionViolation, match="a must be"):
        cl.ProblemSpec(
            a=-1.0, b=0.0, kernel=cl.gaussian_kernel(), nonlinearity=cl.saturating(1.0),
            u0=u0, grid=g,
        )


def test_problem_spec_rejects_grid_mismatch():
    g = cl.make_grid(10.0, 64)
    other = cl.make_grid(10.0, 128)
    u0 = cl.Field(other, np.zeros(128), "physical")
    with pytest.raises(ValueError, match="different grid"):
        cl.ProblemSpec(
            a=0.0, b=0.0, kernel=cl.gaussian_kernel(), nonlinearity=cl.saturating(1.0),
            u0=u0, grid=g,
        )
