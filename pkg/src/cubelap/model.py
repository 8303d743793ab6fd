"""Model data: interaction kernel, reaction nonlinearity, problem assembly.

The evolution couples a sixth-order diffusion with drift and a nonlocal
reaction term (G * F(u, .)): the kernel G redistributes the reaction output
F(u(y), y) across the domain. Admissible model data satisfy two structural
requirements that everything downstream leans on:

  * the kernel must not vanish identically, and both G and its sixth
    derivative need finite L1 size (their combined magnitude is the kernel
    factor of the contraction certificate);
  * the nonlinearity F(u, x) must be globally Lipschitz in u with a declared
    constant, and grow at most linearly, |F(u, x)| <= k|u| + h(x) with a
    square-integrable source profile h.

Lipschitz constants are declared per catalog entry (they are analytically
known), never estimated; random sampling exists only to falsify wrong
declarations.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .grid import (
    CORE_FRACTION,
    Field,
    RepresentationError,
    SpectralGrid,
    forward_transform,
    h6_norm,
    inverse_transform,
    l2_norm,
    tail_mass_fraction,
    to_physical,
)

#: Declared Lipschitz/growth floor for entries that are constant in u, so the
#: certificate arithmetic (which requires positive constants) stays in-domain.
MIN_DECLARED_CONSTANT = 1e-12

#: Relative modulus threshold below which a spectral coefficient counts as
#: "not in the support" for the overlap criterion.
DEFAULT_SUPPORT_EPS = 1e-12


class AssumptionViolation(ValueError):
    """A structural requirement on the model data failed."""


class KernelAssumptionError(AssumptionViolation):
    """Kernel is identically zero or has no usable L1 size."""


class LipschitzDeclarationError(AssumptionViolation):
    """Sampling found a difference quotient above the declared constant."""


class ModelEvaluationError(RuntimeError):
    """Nonlinearity produced NaN/Inf."""


# ---------------------------------------------------------------------------
# kernel catalog
# ---------------------------------------------------------------------------

# physicists' Hermite polynomials entering d^n/dx^n exp(-x^2)
def _hermite5(x):
    return 32 * x**5 - 160 * x**3 + 120 * x


def _hermite6(x):
    return 64 * x**6 - 480 * x**4 + 720 * x**2 - 120


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Interaction kernel G with cached L1 sizes and spectral access.

    ``l1`` and ``l1_d6`` are computed once at construction (catalog
    constructors) or injected directly for synthetic test kernels;
    ``norm_method`` records how.
    """

    name: str
    g: object  # vectorized callable x -> G(x)
    l1: float
    l1_d6: float
    norm_method: str
    d6g: object | None = None
    spectrum_fn: object | None = None
    grid_spectrum: np.ndarray | None = field(default=None, repr=False)
    bound_grid: SpectralGrid | None = field(default=None, repr=False)
    spectral_cutoff: float | None = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_spectrum_cache", {})
        if self.grid_spectrum is not None:
            gs = np.asarray(self.grid_spectrum, dtype=np.complex128)
            gs.flags.writeable = False
            object.__setattr__(self, "grid_spectrum", gs)

    def spectrum_on(self, grid: SpectralGrid) -> np.ndarray:
        """Spectral coefficients of G on the given grid.

        Uses the analytic transform when the catalog entry ships one, the
        construction-time profile for grid-built kernels, and the grid
        transform of the samples otherwise.
        """
        key = (grid.half_length, grid.n_points)
        cached = self._spectrum_cache.get(key)
        if cached is not None:
            return cached
        if self.grid_spectrum is not None:
            bg = self.bound_grid
            if bg.half_length != grid.half_length or bg.n_points != grid.n_points:
                raise ValueError(
                    "kernel was built on a different grid; rebuild it for this one"
                )
            out = self.grid_spectrum
        elif self.spectrum_fn is not None:
            out = np.asarray(self.spectrum_fn(grid.wavenumbers), dtype=np.complex128)
        else:
            out = forward_transform(Field(grid, self.g(grid.x))).values
        out.flags.writeable = False
        self._spectrum_cache[key] = out
        return out


def _quad_l1(fn, half_width: float) -> float:
    """Adaptive quadrature of |fn| over a window that contains all its mass."""
    val, _ = quad(
        lambda t: abs(fn(t)),
        -half_width,
        half_width,
        limit=800,
        epsabs=1e-13,
        epsrel=1e-12,
    )
    return val


def gaussian_kernel(amplitude: float = 1.0, width: float = 1.0) -> KernelSpec:
    """G(x) = amplitude * exp(-(x/width)^2), with analytic sixth derivative."""
    if amplitude == 0:
        raise KernelAssumptionError("gaussian kernel amplitude must be nonzero")
    if width <= 0:
        raise ValueError("gaussian kernel width must be positive")
    a, w = float(amplitude), float(width)

    def g(x):
        return a * np.exp(-((x / w) ** 2))

    def d6g(x):
        xi = np.asarray(x) / w
        return (a / w**6) * _hermite6(xi) * np.exp(-(xi**2))

    def spectrum(p):
        return (a * w / np.sqrt(2.0)) * np.exp(-((w * p) ** 2) / 4.0)

    l1 = abs(a) * w * np.sqrt(np.pi)
    l1_d6 = _quad_l1(d6g, 10.0 * w)
    return KernelSpec(
        name="gaussian",
        g=g,
        d6g=d6g,
        spectrum_fn=spectrum,
        l1=l1,
        l1_d6=l1_d6,
        norm_method="analytic",
        params={"amplitude": a, "width": w},
    )


def sech_kernel(amplitude: float = 1.0, width: float = 1.0) -> KernelSpec:
    """G(x) = amplitude * sech(x/width), with analytic sixth derivative."""
    if amplitude == 0:
        raise KernelAssumptionError("sech kernel amplitude must be nonzero")
    if width <= 0:
        raise ValueError("sech kernel width must be positive")
    a, w = float(amplitude), float(width)

    def g(x):
        return a / np.cosh(np.asarray(x) / w)

    def d6g(x):
        s = 1.0 / np.cosh(np.asarray(x) / w)
        return (a / w**6) * s * (1 - 182 * s**2 + 840 * s**4 - 720 * s**6)

    def spectrum(p):
        return a * w * np.sqrt(np.pi / 2.0) / np.cosh(np.pi * w * p / 2.0)

    l1 = abs(a) * w * np.pi
    l1_d6 = _quad_l1(d6g, 60.0 * w)
    return KernelSpec(
        name="sech",
        g=g,
        d6g=d6g,
        spectrum_fn=spectrum,
        l1=l1,
        l1_d6=l1_d6,
        norm_method="analytic",
        params={"amplitude": a, "width": w},
    )


def _trig_poly(grid: SpectralGrid, coeffs: np.ndarray):
    """Callable evaluating the band-limited interpolant sum_k c_k exp(i p_k x)."""
    p = grid.wavenumbers
    dp = grid.dp

    def fn(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        osc = np.exp(1j * np.outer(x, p))
        return (osc @ coeffs).real * (dp / np.sqrt(2.0 * np.pi))

    return fn


def bandlimited_kernel(
    grid: SpectralGrid, amplitude: float = 1.0, cutoff: float = 1.0
) -> KernelSpec:
    """Kernel with exactly compact spectral support |p| <= cutoff.

    Built directly in spectral space on the target grid (raised-cosine
    profile), so the support statement holds at grid level exactly, not just
    up to truncation leakage. The physical kernel is the corresponding
    band-limited trigonometric interpolant; its L1 sizes are box norms.
    """
    if amplitude == 0:
        raise KernelAssumptionError("bandlimited kernel amplitude must be nonzero")
    p = grid.wavenumbers
    p_max = np.max(np.abs(p))
    if not 0 < cutoff < p_max:
        raise ValueError(f"cutoff must lie inside the resolved band (0, {p_max:g})")
    profile = np.where(
        np.abs(p) <= cutoff,
        amplitude * np.cos(np.pi * p / (2.0 * cutoff)) ** 2,
        0.0,
    ).astype(np.complex128)
    if np.count_nonzero(profile) < 3:
        raise ValueError("cutoff resolves fewer than three modes; refine the grid")
    g_samp = inverse_transform(Field(grid, profile, "spectral")).values.real
    d6_samp = inverse_transform(
        Field(grid, (1j * p) ** 6 * profile, "spectral")
    ).values.real
    l1 = float(np.sum(np.abs(g_samp)) * grid.dx)
    l1_d6 = float(np.sum(np.abs(d6_samp)) * grid.dx)
    return KernelSpec(
        name="bandlimited",
        g=_trig_poly(grid, profile),
        d6g=_trig_poly(grid, (1j * p) ** 6 * profile),
        grid_spectrum=profile,
        bound_grid=grid,
        l1=l1,
        l1_d6=l1_d6,
        norm_method="grid-spectral",
        spectral_cutoff=float(cutoff),
        params={"amplitude": float(amplitude), "cutoff": float(cutoff)},
    )


def tabulated_kernel(
    grid: SpectralGrid, x_samples: np.ndarray, g_samples: np.ndarray
) -> KernelSpec:
    """Kernel given by uniform samples; zero outside the tabulated range.

    L1 sizes come from the spectral fallback (grid transform, multiply by
    (i p)^6, transform back, rectangle rule); the report carries the p^6
    spectral tail so a caller can judge whether that fallback was resolved.
    """
    xs = np.asarray(x_samples, dtype=float)
    gs = np.asarray(g_samples, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or xs.shape != gs.shape:
        raise ValueError("need two equal-length 1-d sample arrays")
    steps = np.diff(xs)
    if np.any(steps <= 0):
        raise ValueError("tabulated x samples must be strictly increasing")
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValueError("tabulated x samples must be uniformly spaced")

    def g(x):
        return np.interp(np.asarray(x, dtype=float), xs, gs, left=0.0, right=0.0)

    on_grid = g(grid.x)
    if np.max(np.abs(on_grid)) == 0.0 and np.max(np.abs(gs)) == 0.0:
        # leave construction possible; validate_kernel raises on use
        l1 = 0.0
        l1_d6 = 0.0
    else:
        ghat = forward_transform(Field(grid, on_grid)).values
        d6 = inverse_transform(
            Field(grid, (1j * grid.wavenumbers) ** 6 * ghat, "spectral")
        ).values.real
        l1 = float(np.sum(np.abs(on_grid)) * grid.dx)
        l1_d6 = float(np.sum(np.abs(d6)) * grid.dx)
    return KernelSpec(
        name="tabulated",
        g=g,
        l1=l1,
        l1_d6=l1_d6,
        norm_method="spectral-fallback",
        bound_grid=grid,
        params={"n_samples": int(xs.size)},
    )


def tabulated_kernel_from_csv(grid: SpectralGrid, path) -> KernelSpec:
    """Load a two-column CSV (x, G(x)): strictly increasing, uniform x."""
    xs, gs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise ValueError(f"expected two columns in {path}, got {row!r}")
            xs.append(float(row[0]))
            gs.append(float(row[1]))
    return tabulated_kernel(grid, np.asarray(xs), np.asarray(gs))


@dataclass(frozen=True)
class KernelValidationReport:
    nonvanishing: bool
    l1: float
    l1_d6: float
    norm_method: str
    tail_fraction: float
    spectral_tail_fraction: float | None
    compact_spectral_support: bool
    notes: tuple[str, ...]


def validate_kernel(kernel: KernelSpec, grid: SpectralGrid) -> KernelValidationReport:
    """Check the structural kernel requirements at grid level.

    Hard-fails (KernelAssumptionError) for an identically vanishing kernel;
    everything else is reported, including the physical tail mass on the box
    and, for spectral-fallback entries, how much of |p^6 Ghat| sits in the
    outer wavenumber band.
    """
    samples = np.asarray(kernel.g(grid.x), dtype=float)
    notes = []
    if np.max(np.abs(samples)) == 0.0:
        raise KernelAssumptionError("kernel vanishes identically on the grid")
    if not (np.isfinite(kernel.l1) and np.isfinite(kernel.l1_d6)) or kernel.l1 <= 0:
        raise KernelAssumptionError(
            f"kernel L1 sizes unusable: l1={kernel.l1}, l1_d6={kernel.l1_d6}"
        )
    tail = tail_mass_fraction(Field(grid, samples))
    spectral_tail = None
    if kernel.norm_method == "spectral-fallback":
        ghat = kernel.spectrum_on(grid)
        weighted = np.abs(grid.wavenumbers**6 * ghat)
        total = float(np.sum(weighted))
        p_cut = CORE_FRACTION * np.max(np.abs(grid.wavenumbers))
        outer = float(np.sum(weighted[np.abs(grid.wavenumbers) >= p_cut]))
        spectral_tail = outer / total if total > 0 else 0.0
        notes.append("sixth-derivative L1 obtained via spectral fallback")
    if kernel.spectral_cutoff is not None:
        notes.append(
            f"compact spectral support by construction: |p| <= {kernel.spectral_cutoff:g}"
        )
    return KernelValidationReport(
        nonvanishing=True,
        l1=kernel.l1,
        l1_d6=kernel.l1_d6,
        norm_method=kernel.norm_method,
        tail_fraction=tail,
        spectral_tail_fraction=spectral_tail,
        compact_spectral_support=kernel.spectral_cutoff is not None,
        notes=tuple(notes),
    )


def kernel_strength(kernel: KernelSpec) -> float:
    """Euclidean combination of the kernel's two L1 sizes.

    This is the kernel factor of the contraction certificate; it is
    positively homogeneous of degree one in the kernel amplitude.
    """
    if not (np.isfinite(kernel.l1) and np.isfinite(kernel.l1_d6)) or kernel.l1 <= 0:
        raise KernelAssumptionError(
            f"kernel L1 sizes unusable: l1={kernel.l1}, l1_d6={kernel.l1_d6}"
        )
    return float(np.hypot(kernel.l1, kernel.l1_d6))


# ---------------------------------------------------------------------------
# source profiles (the u-independent part of the reaction)
# ---------------------------------------------------------------------------


def source_zero():
    def h(x):
        return np.zeros_like(np.asarray(x, dtype=float))

    return h


def source_gaussian(amplitude: float = 1.0, width: float = 1.0, center: float = 0.0):
    def h(x):
        return amplitude * np.exp(-(((np.asarray(x, dtype=float) - center) / width) ** 2))

    return h


def source_bandlimited(
    grid: SpectralGrid, amplitude: float, p_lo: float, p_hi: float
):
    """Real source whose spectrum is supported exactly in p_lo <= |p| <= p_hi.

    Same grid-spectral construction as bandlimited_kernel, so disjointness
    against a band-limited kernel is exact at grid level.
    """
    p = grid.wavenumbers
    p_max = np.max(np.abs(p))
    if not 0 <= p_lo < p_hi < p_max:
        raise ValueError("need 0 <= p_lo < p_hi inside the resolved band")
    center = 0.5 * (p_lo + p_hi)
    halfwidth = 0.5 * (p_hi - p_lo)
    inside = (np.abs(p) >= p_lo) & (np.abs(p) <= p_hi)
    profile = np.where(
        inside,
        amplitude * np.cos(np.pi * (np.abs(p) - center) / (2.0 * halfwidth)) ** 2,
        0.0,
    ).astype(np.complex128)
    if np.count_nonzero(profile) < 2:
        raise ValueError("band resolves fewer than two modes; refine the grid")
    return _trig_poly(grid, profile)


# ---------------------------------------------------------------------------
# nonlinearity catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NonlinearitySpec:
    """Reaction rate F(u, x) with declared growth and Lipschitz constants.

    fn is vectorized over (u, x); source is the u-independent profile h(x),
    so fn(0, x) == source(x) for every catalog member.
    """

    name: str
    fn: object
    source: object
    growth_k: float
    lipschitz_l: float
    params: dict = field(default_factory=dict, compare=False)


def linear_plus_source(kappa: float, source=None, lipschitz: float | None = None) -> NonlinearitySpec:
    """F(u, x) = kappa*u + h(x). Exact Lipschitz constant |kappa|.

    ``lipschitz`` overrides the declared constant (used to exercise the
    falsification path); by default it is |kappa|, floored at a tiny positive
    value so certificate arithmetic stays defined for pure sources.
    """
    h = source if source is not None else source_zero()
    kap = float(kappa)

    def fn(u, x):
        return kap * np.asarray(u, dtype=float) + h(x)

    ell = float(lipschitz) if lipschitz is not None else max(abs(kap), MIN_DECLARED_CONSTANT)
    return NonlinearitySpec(
        name="linear_plus_source",
        fn=fn,
        source=h,
        growth_k=max(abs(kap), MIN_DECLARED_CONSTANT),
        lipschitz_l=ell,
        params={"kappa": kap},
    )


def saturating(lipschitz: float, source=None) -> NonlinearitySpec:
    """F(u, x) = l*sin(u) + h(x). Lipschitz constant exactly l, growth too."""
    if lipschitz <= 0:
        raise ValueError("lipschitz must be positive")
    h = source if source is not None else source_zero()
    ell = float(lipschitz)

    def fn(u, x):
        return ell * np.sin(np.asarray(u, dtype=float)) + h(x)

    return NonlinearitySpec(
        name="saturating",
        fn=fn,
        source=h,
        growth_k=ell,
        lipschitz_l=ell,
        params={"lipschitz": ell},
    )


def logistic_clip(lipschitz: float, u_max: float, source=None) -> NonlinearitySpec:
    """Clipped logistic reaction (l/3)*c*(1 - c/u_max), c = clip(u, +-u_max).

    The clip makes the quadratic globally Lipschitz; the slope maximum
    (attained at u = -u_max) is exactly the declared l, and the growth
    constant is 2l/3.
    """
    if lipschitz <= 0 or u_max <= 0:
        raise ValueError("lipschitz and u_max must be positive")
    h = source if source is not None else source_zero()
    ell, um = float(lipschitz), float(u_max)
    rate = ell / 3.0

    def fn(u, x):
        c = np.clip(np.asarray(u, dtype=float), -um, um)
        return rate * c * (1.0 - c / um) + h(x)

    return NonlinearitySpec(
        name="logistic_clip",
        fn=fn,
        source=h,
        growth_k=2.0 * ell / 3.0,
        lipschitz_l=ell,
        params={"lipschitz": ell, "u_max": um},
    )


def apply_nonlinearity(u: Field, nonlinearity: NonlinearitySpec) -> Field:
    """Pointwise F(u(x_j), x_j) on physical samples.

    Hard-fails on NaN/Inf, naming the offending location. In debug runs the
    linear growth bound ||F(u,.)|| <= k||u|| + ||h|| is asserted as well.
    """
    if u.rep != "physical":
        raise RepresentationError("apply_nonlinearity expects a physical field")
    x = u.grid.x
    vals = nonlinearity.fn(u.values.real, x)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise ModelEvaluationError(
            f"nonlinearity produced {vals[j]!r} at x[{j}] = {x[j]:g}"
        )
    out = Field(u.grid, vals, "physical")
    if __debug__:
        h_norm = l2_norm(Field(u.grid, nonlinearity.source(x), "physical"))
        bound = nonlinearity.growth_k * l2_norm(u) + h_norm
        assert l2_norm(out) <= bound * (1 + 1e-9) + 1e-300, (
            f"growth bound violated: ||F(u)|| = {l2_norm(out):g} > "
            f"k||u|| + ||h|| = {bound:g}"
        )
    return out


def check_lipschitz_sampling(
    nonlinearity: NonlinearitySpec, trials: int = 2000, seed: int = 0
) -> float:
    """Max observed difference quotient over random (u1, u2, x) triples.

    Falsification only: a quotient above the declared constant raises with
    the witness triple; staying below proves nothing.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    # mix magnitudes so near-zero pairs (where smooth saturating entries are
    # steepest) are well represented
    scales = 10.0 ** rng.uniform(-4, 1, size=trials)
    u1 = rng.normal(0.0, 1.0, size=trials) * scales
    u2 = u1 + rng.normal(0.0, 1.0, size=trials) * scales
    degenerate = u1 == u2
    u2[degenerate] = u1[degenerate] + scales[degenerate]
    x = rng.uniform(-20.0, 20.0, size=trials)
    quot = np.abs(nonlinearity.fn(u1, x) - nonlinearity.fn(u2, x)) / np.abs(u1 - u2)
    worst = int(np.argmax(quot))
    ratio = float(quot[worst])
    if ratio > nonlinearity.lipschitz_l * (1 + 1e-12):
        raise LipschitzDeclarationError(
            f"declared Lipschitz constant {nonlinearity.lipschitz_l:g} is wrong: "
            f"|F(u1,x)-F(u2,x)|/|u1-u2| = {ratio:g} at "
            f"u1={u1[worst]:g}, u2={u2[worst]:g}, x={x[worst]:g}"
        )
    return ratio


def nontriviality_overlap(
    kernel: KernelSpec,
    nonlinearity: NonlinearitySpec,
    grid: SpectralGrid,
    eps_supp: float = DEFAULT_SUPPORT_EPS,
) -> float:
    """Grid measure of supp Fhat(0,.) intersected with supp Ghat.

    A positive value realizes, at grid level, the hypothesis under which the
    solution cannot vanish identically. Support is detected relative to each
    spectrum's max modulus with threshold eps_supp.
    """
    if eps_supp <= 0:
        raise ValueError("eps_supp must be positive")
    zero_state = Field(grid, np.zeros(grid.n_points), "physical")
    f0 = nonlinearity.fn(zero_state.values.real, grid.x)
    if np.max(np.abs(f0)) == 0.0:
        warnings.warn(
            "F(0, .) is identically zero: the nontriviality hypothesis cannot hold",
            stacklevel=2,
        )
        return 0.0
    f0_hat = forward_transform(Field(grid, f0, "physical")).values
    g_hat = kernel.spectrum_on(grid)
    g_mask = np.abs(g_hat) > eps_supp * np.max(np.abs(g_hat))
    f_mask = np.abs(f0_hat) > eps_supp * np.max(np.abs(f0_hat))
    return float(np.count_nonzero(g_mask & f_mask) * grid.dp)


# ---------------------------------------------------------------------------
# problem assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Everything the evolution needs: constants, kernel, reaction, state."""

    a: float
    b: float
    kernel: KernelSpec
    nonlinearity: NonlinearitySpec
    u0: Field
    grid: SpectralGrid

    def __post_init__(self):
        if self.a < 0:
            raise AssumptionViolation(f"linear rate a must be >= 0, got {self.a}")
        u0 = to_physical(self.u0)
        if u0.grid is not self.grid and (
            u0.grid.half_length != self.grid.half_length
            or u0.grid.n_points != self.grid.n_points
        ):
            raise ValueError("initial condition lives on a different grid")
        n0 = h6_norm(u0)
        if not np.isfinite(n0):
            raise AssumptionViolation("initial condition has non-finite Sobolev norm")
        object.__setattr__(self, "u0", u0)
