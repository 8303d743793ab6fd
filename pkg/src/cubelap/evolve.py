"""Fixed-point evolution: propagator, mild-solution map, Picard iteration.

Each Fourier mode evolves linearly under the symbol

    lam(p) = -p^6 + i*b*p + a,

and the nonlocal reaction enters through the mild-solution (variation of
constants) form

    u_hat(p, t) = e^{t lam} u0_hat(p)
                + int_0^t e^{(t-s) lam} sqrt(2*pi) Ghat(p) fhat_v(p, s) ds,

where fhat_v is the transform of F(v(., s), .). Freezing the trajectory v on
the right makes this an affine map v -> u; under a valid certificate that map
contracts, and Picard iteration converges geometrically to the mild solution.

The s-integral is evaluated per substep by interpolating fhat_v linearly and
integrating it against the exact exponential using phi-weights, so the
quadrature is second order in the frame spacing and exact whenever fhat_v is
constant in s (pure source reactions, and the zero reaction). An independent
integrating-factor Heun marcher is kept alongside as a cross-validation
oracle; it deliberately shares no quadrature with the mild-solution map.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace as dc_replace

import numpy as np

import math

from .certify import Certificate, NoAdmissibleWindow, WindowSchedule, window_schedule
from .grid import (
    Field,
    RepresentationError,
    SpacetimeField,
    SpectralGrid,
    TAIL_TOL,
    forward_transform,
    inverse_transform,
    l2_norm,
    spacetime_sobolev_norm,
    tail_mass_fraction,
    to_spectral,
)
from .model import (
    ProblemSpec,
    apply_nonlinearity,
    kernel_strength,
    nontriviality_overlap,
    validate_kernel,
)

SQRT_2PI = np.sqrt(2.0 * np.pi)

#: Measured Picard ratios may exceed the certified constant by at most this
#: factor before the solve is treated as defective (quadrature slack).
RATIO_SLACK = 1.05

DEFAULT_FRAMES = 64
DEFAULT_MAX_ITER = 200


class SolverError(RuntimeError):
    pass


class CertificateRefusedError(SolverError):
    """Solve requested with an invalid certificate and no override."""


class PicardConvergenceError(SolverError):
    def __init__(self, msg: str, trace: "PicardTrace"):
        super().__init__(msg)
        self.trace = trace


class ContractionRatioError(SolverError):
    """A measured ratio exceeded C * slack: coarse discretization or a bug."""

    def __init__(self, msg: str, trace: "PicardTrace"):
        super().__init__(msg)
        self.trace = trace


class ReferenceInstabilityError(SolverError):
    """The cross-validation marcher blew up."""


class MarchWindowError(SolverError):
    def __init__(self, window_index: int, cause: Exception):
        super().__init__(f"window {window_index} failed: {cause}")
        self.window_index = window_index


def phi1(z):
    """(e^z - 1)/z, stably: series below |z| = 1e-4, expm1-based above.

    Scalar in, scalar out; arrays elementwise. Both branches agree to better
    than 1e-14 relative at the seam.
    """
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = (
        1.0
        + zs / 2.0
        + zs**2 / 6.0
        + zs**3 / 24.0
        + zs**4 / 120.0
        + zs**5 / 720.0
        + zs**6 / 5040.0
    )
    zb = z[~small]
    out[~small] = _expm1_complex(zb) / zb
    return complex(out[0]) if scalar else out


def _expm1_complex(z: np.ndarray) -> np.ndarray:
    # e^z - 1 without cancellation: real part expm1(x)cos(y) - 2 sin^2(y/2)
    x, y = z.real, z.imag
    return (np.expm1(x) * np.cos(y) - 2.0 * np.sin(y / 2.0) ** 2) + 1j * (
        np.exp(x) * np.sin(y)
    )


def phi2(z):
    """(e^z - 1 - z)/z^2 with a series branch below |z| = 0.5."""
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    small = np.abs(z) < 0.5
    zs = z[small]
    acc = np.full(zs.shape, 0.5, dtype=np.complex128)
    term = np.full(zs.shape, 0.5, dtype=np.complex128)
    for k in range(1, 24):
        term = term * zs / (k + 2)
        acc = acc + term
    out[small] = acc
    zb = z[~small]
    out[~small] = (_expm1_complex(zb) - zb) / zb**2
    return complex(out[0]) if scalar else out


@dataclass(frozen=True, eq=False)
class SymbolTable:
    """Per-mode linear symbol lam(p) = -p^6 + i*b*p + a with propagator cache."""

    grid: SpectralGrid
    a: float
    b: float
    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=np.complex128)
        lam.flags.writeable = False
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "_exp_cache", {})

    def propagator(self, t: float) -> np.ndarray:
        """e^{t*lam(p_j)}; cached per t since windows reuse one substep."""
        key = float(t)
        cached = self._exp_cache.get(key)
        if cached is None:
            cached = np.exp(key * self.lam)
            cached.flags.writeable = False
            self._exp_cache[key] = cached
        return cached


def build_symbol(grid: SpectralGrid, a: float, b: float) -> SymbolTable:
    if a < 0:
        raise ValueError(f"a must be nonnegative, got {a}")
    p = grid.wavenumbers
    lam = -(p**6) + 1j * b * p + a
    return SymbolTable(grid=grid, a=float(a), b=float(b), lam=lam)


def propagate(f: Field, sym: SymbolTable, t: float) -> Field:
    """Multiply a spectral field by e^{t*lam}; identity at t = 0."""
    if f.rep != "spectral":
        raise RepresentationError("propagate expects a spectral field")
    if t < 0:
        raise ValueError(f"propagation time must be nonnegative, got {t}")
    if t == 0:
        return f
    return Field(f.grid, sym.propagator(t) * f.values, "spectral")


def _forcing_history(v: SpacetimeField, prob: ProblemSpec) -> np.ndarray:
    """Transforms of F(v(., t_j), .) for every frame, shape (M+1, N)."""
    out = np.empty_like(v.frames)
    for j in range(v.n_frames):
        phys = inverse_transform(v.frame(j))
        out[j] = forward_transform(apply_nonlinearity(phys, prob.nonlinearity)).values
    return out


def duhamel_map(
    v: SpacetimeField,
    prob: ProblemSpec,
    sym: SymbolTable,
    return_history: bool = False,
):
    """One application of the mild-solution map to the trajectory v.

    Walks the frames with the semigroup recursion

        u_{j+1} = e^{dt lam} u_j
                + sqrt(2 pi) Ghat * dt * [(phi1 - phi2) f_j + phi2 f_{j+1}],

    which is the windowed integral with fhat_v interpolated linearly on each
    substep and the exponential integrated exactly. With return_history the
    forcing transforms are handed back so the time derivative of the result
    can be formed algebraically.
    """
    fh = _forcing_history(v, prob)
    if not np.all(np.isfinite(fh)):
        raise SolverError("forcing history contains non-finite values")
    g_hat = prob.kernel.spectrum_on(v.grid)
    dt = v.dt
    z = dt * sym.lam
    e_dt = sym.propagator(dt)
    w_prev = dt * (phi1(z) - phi2(z))
    w_next = dt * phi2(z)
    u = np.empty_like(v.frames)
    u[0] = to_spectral(prob.u0).values
    for j in range(v.n_frames - 1):
        u[j + 1] = e_dt * u[j] + SQRT_2PI * g_hat * (
            w_prev * fh[j] + w_next * fh[j + 1]
        )
    out = SpacetimeField(v.grid, v.time_grid, u)
    if return_history:
        return out, fh
    return out


def time_derivative(
    u: SpacetimeField,
    prob: ProblemSpec,
    sym: SymbolTable,
    f_hat_history: np.ndarray,
) -> SpacetimeField:
    """Exact algebraic du_hat/dt = lam*u_hat + sqrt(2 pi)*Ghat*fhat.

    Requires the forcing history saved from the map application that produced
    u; no finite differencing is ever involved.
    """
    if f_hat_history is None:
        raise ValueError("forcing history is required; rerun the map with return_history")
    fh = np.asarray(f_hat_history)
    if fh.shape != u.frames.shape:
        raise ValueError(
            f"forcing history shape {fh.shape} does not match frames {u.frames.shape}"
        )
    g_hat = prob.kernel.spectrum_on(u.grid)
    d = sym.lam[None, :] * u.frames + SQRT_2PI * g_hat[None, :] * fh
    return SpacetimeField(u.grid, u.time_grid, d)


@dataclass(frozen=True, eq=False)
class PicardTrace:
    """Per-iteration contraction-norm distances and their measured ratios.

    ratios[n] = distances[n+1]/distances[n]; entries are NaN where the ratio
    is not reported (last iteration, or the base distance already sits at the
    noise floor 10*eps*d_1).
    """

    distances: np.ndarray
    ratios: np.ndarray
    iterations: int
    converged: bool

    def reported_ratios(self) -> np.ndarray:
        return self.ratios[np.isfinite(self.ratios)]


@dataclass(eq=False)
class SolveReport:
    """Everything a window solve produced, plus diagnostics."""

    field: SpacetimeField
    dudt: SpacetimeField
    trace: PicardTrace
    certificate: Certificate
    t_offset: float
    l2_per_frame: np.ndarray
    d6_l2_per_frame: np.ndarray
    dudt_l2_per_frame: np.ndarray
    tail_warnings: tuple[str, ...]
    oracle_rel_deviation: float | None = None
    overlap: float | None = None

    @property
    def final_state(self) -> Field:
        return self.field.frame(self.field.n_frames - 1)


def _frame_norms(u: SpacetimeField) -> tuple[np.ndarray, np.ndarray]:
    dp = u.grid.dp
    l2 = np.sqrt(np.sum(np.abs(u.frames) ** 2, axis=1) * dp)
    p12 = u.grid.wavenumbers**12
    d6 = np.sqrt(np.sum(p12 * np.abs(u.frames) ** 2, axis=1) * dp)
    return l2, d6


def _tail_check(u: SpacetimeField, t_offset: float) -> tuple[str, ...]:
    warnings_out = []
    fractions = [
        tail_mass_fraction(Field(u.grid, inverse_transform(u.frame(j)).values))
        for j in (0, u.n_frames - 1)
    ]
    worst = max(fractions)
    if worst > TAIL_TOL:
        warnings_out.append(
            f"tail mass fraction {worst:.3e} exceeds {TAIL_TOL:g} on the window "
            f"starting at t = {t_offset:g}; the box truncation is suspect"
        )
    return tuple(warnings_out)


def picard_solve(
    prob: ProblemSpec,
    window_length: float,
    cert: Certificate,
    tol_fix: float | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    n_frames: int = DEFAULT_FRAMES,
    override_certificate: bool = False,
    t_offset: float = 0.0,
) -> SolveReport:
    """Iterate the mild-solution map to its fixed point on one window.

    Starts from the pure propagation of the initial state (the exact solution
    of the reaction-free problem) and stops when the contraction-norm distance
    between consecutive iterates falls below tol_fix (default
    1e-10 * max(1, norm of the first iterate)). With a valid certificate every
    measured ratio must stay below C * 1.05; a violation is raised as a
    defect, not smoothed over.
    """
    if window_length <= 0:
        raise ValueError(f"window length must be positive, got {window_length}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    if not cert.valid:
        if not override_certificate:
            raise CertificateRefusedError(
                f"contraction constant C = {cert.constant:.6g} >= 1; "
                "refusing to iterate (pass override_certificate=True to force)"
            )
        warnings.warn(
            f"OVERRIDE: iterating without a valid certificate (C = {cert.constant:.6g}); "
            "convergence is not guaranteed and results are experimental",
            stacklevel=2,
        )
    grid = prob.grid
    sym = build_symbol(grid, prob.a, prob.b)
    tg = np.linspace(0.0, window_length, n_frames + 1)
    u0_hat = to_spectral(prob.u0).values

    free_frames = np.exp(np.outer(tg, sym.lam)) * u0_hat[None, :]
    u_prev = SpacetimeField(grid, tg, free_frames)
    dudt_prev = SpacetimeField(grid, tg, sym.lam[None, :] * free_frames)

    distances: list[float] = []
    tol = tol_fix
    converged = False
    for _ in range(max_iter):
        u_new, fh = duhamel_map(u_prev, prob, sym, return_history=True)
        dudt_new = time_derivative(u_new, prob, sym, fh)
        diff = SpacetimeField(grid, tg, u_new.frames - u_prev.frames)
        ddiff = SpacetimeField(grid, tg, dudt_new.frames - dudt_prev.frames)
        d = spacetime_sobolev_norm(diff, ddiff)
        distances.append(d)
        if tol is None:
            first_norm = spacetime_sobolev_norm(u_new, dudt_new)
            tol = 1e-10 * max(1.0, first_norm)
        if d < tol:
            converged = True
            break
        u_prev, dudt_prev = u_new, dudt_new

    dists = np.asarray(distances)
    ratios = np.full(dists.shape, np.nan)
    if dists.size >= 2:
        floor = 10.0 * np.finfo(float).eps * dists[0]
        base_ok = dists[:-1] > floor
        ratios[:-1] = np.where(base_ok, dists[1:] / dists[:-1], np.nan)
    trace = PicardTrace(
        distances=dists,
        ratios=ratios,
        iterations=len(distances),
        converged=converged,
    )
    if not converged:
        raise PicardConvergenceError(
            f"no fixed point within {max_iter} iterations "
            f"(last distance {dists[-1]:.3e}, tol {tol:.3e})",
            trace,
        )
    if cert.valid:
        reported = trace.reported_ratios()
        if reported.size and np.max(reported) > cert.constant * RATIO_SLACK:
            raise ContractionRatioError(
                f"measured ratio {np.max(reported):.6g} exceeds "
                f"C * {RATIO_SLACK} = {cert.constant * RATIO_SLACK:.6g}; "
                "discretization too coarse or a defect",
                trace,
            )

    l2, d6 = _frame_norms(u_new)
    dudt_l2, _ = _frame_norms(dudt_new)
    return SolveReport(
        field=u_new,
        dudt=dudt_new,
        trace=trace,
        certificate=cert,
        t_offset=t_offset,
        l2_per_frame=l2,
        d6_l2_per_frame=d6,
        dudt_l2_per_frame=dudt_l2,
        tail_warnings=_tail_check(u_new, t_offset),
    )


def etd_reference_solve(
    prob: ProblemSpec,
    window_length: float,
    substeps: int,
    n_frames: int = DEFAULT_FRAMES,
) -> SpacetimeField:
    """Independent cross-validation marcher: integrating-factor Heun.

    Advances u_hat with the two-stage scheme

        pred   = e^{h lam} (u_n + h N_n)
        u_next = e^{h lam} u_n + (h/2) (e^{h lam} N_n + N(pred)),

    N(u) = sqrt(2 pi) Ghat fhat_u. Genuinely second order (including against
    constant forcing, where the mild-solution quadrature is exact), and free
    of phi-weights by design so the two solvers share no quadrature path.
    """
    if substeps < 4 * n_frames:
        raise ValueError(
            f"substeps = {substeps} must be at least 4x the frame count {n_frames}"
        )
    if substeps % n_frames != 0:
        raise ValueError("substeps must be an integer multiple of the frame count")
    grid = prob.grid
    sym = build_symbol(grid, prob.a, prob.b)
    g_hat = prob.kernel.spectrum_on(grid)
    h = window_length / substeps
    e_h = sym.propagator(h)

    def reaction(u_hat: np.ndarray) -> np.ndarray:
        phys = inverse_transform(Field(grid, u_hat, "spectral"))
        f = apply_nonlinearity(phys, prob.nonlinearity)
        return SQRT_2PI * g_hat * forward_transform(f).values

    u_hat = to_spectral(prob.u0).values.copy()
    stride = substeps // n_frames
    frames = np.empty((n_frames + 1, grid.n_points), dtype=np.complex128)
    frames[0] = u_hat
    scale0 = l2_norm(Field(grid, u_hat, "spectral"))
    blowup_ref = None
    for n in range(substeps):
        nn = reaction(u_hat)
        pred = e_h * (u_hat + h * nn)
        u_hat = e_h * u_hat + 0.5 * h * (e_h * nn + reaction(pred))
        norm_now = l2_norm(Field(grid, u_hat, "spectral"))
        if blowup_ref is None:
            blowup_ref = max(scale0, norm_now, 1e-12)
        if not np.isfinite(norm_now) or norm_now > 1e8 * blowup_ref:
            raise ReferenceInstabilityError(
                f"reference marcher unstable at step {n + 1}: "
                f"norm {norm_now:.3e} vs initial {blowup_ref:.3e}"
            )
        if (n + 1) % stride == 0:
            frames[(n + 1) // stride] = u_hat
    tg = np.linspace(0.0, window_length, n_frames + 1)
    return SpacetimeField(grid, tg, frames)


def global_march(
    prob: ProblemSpec,
    t_total: float,
    safety: float = 0.9,
    n_frames: int = DEFAULT_FRAMES,
    tol_fix: float | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    max_window_length: float | None = None,
    override_certificate: bool = False,
    run_oracle: bool = False,
    oracle_substeps_factor: int = 4,
) -> list[SolveReport]:
    """Chain certified windows across the whole horizon.

    The contraction constant does not depend on the initial state, so one
    certificate (at the uniform marching window length) covers every window;
    what is re-checked per window is the part the analysis cannot see, the
    box-truncation tail mass. The final report carries the support-overlap
    measure for the nontriviality criterion.
    """
    validate_kernel(prob.kernel, prob.grid)
    q = kernel_strength(prob.kernel)
    ell = prob.nonlinearity.lipschitz_l
    try:
        schedule: WindowSchedule = window_schedule(
            t_total, q, ell, prob.a, prob.b, safety=safety,
            max_window_length=max_window_length,
        )
    except NoAdmissibleWindow:
        if not (override_certificate and max_window_length):
            raise
        # experimental path: no certified window exists, but the caller
        # insists and supplies a window length of their own
        count = max(1, math.ceil(t_total / max_window_length))
        schedule = WindowSchedule(
            t_total=float(t_total),
            t_w=float(max_window_length),
            count=count,
            safety=safety,
        )
    t_win = schedule.window_length
    cert = Certificate.for_window(q, ell, prob.a, prob.b, t_win)
    reports: list[SolveReport] = []
    current = prob
    for k in range(schedule.count):
        try:
            rep = picard_solve(
                current,
                t_win,
                cert,
                tol_fix=tol_fix,
                max_iter=max_iter,
                n_frames=n_frames,
                override_certificate=override_certificate,
                t_offset=k * t_win,
            )
            if run_oracle:
                ref = etd_reference_solve(
                    current, t_win, oracle_substeps_factor * n_frames, n_frames
                )
                num = l2_norm(
                    Field(prob.grid, rep.field.frames[-1] - ref.frames[-1], "spectral")
                )
                den = l2_norm(rep.final_state)
                rep.oracle_rel_deviation = num / den if den > 0 else num
        except (SolverError, ValueError) as exc:
            raise MarchWindowError(k, exc) from exc
        reports.append(rep)
        end_state = inverse_transform(rep.final_state)
        current = dc_replace(current, u0=end_state)
    reports[-1].overlap = nontriviality_overlap(
        prob.kernel, prob.nonlinearity, prob.grid
    )
    return reports
