"""Periodic spectral discretization of the real line.

The line is truncated to the box [-L, L) with N uniform samples, paired with
the dual wavenumber set {k*pi/L : k = -N/2+1, ..., N/2}. The forward
transform is scaled so that it converges, for smooth rapidly decaying
functions, to the unitary continuum transform

    fhat(p) = (1/sqrt(2*pi)) * int f(x) exp(-i*p*x) dx

as L and N grow. That convention is fixed here once; every downstream
constant (Sobolev norms, the sqrt(2*pi) convolution factor, the contraction
certificate) depends on it, so no other module touches raw FFTs.

Truncation to a periodic box is policed rather than assumed: fields are
expected to keep essentially all of their mass away from the box edges, and
``tail_mass_fraction`` quantifies the violation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Fraction of total L2 mass allowed in the outer region of the box before a
#: solve reports a truncation warning.
TAIL_TOL = 1e-8

#: Default core fraction: the outer 10% of the box counts as tail.
CORE_FRACTION = 0.9

PHYSICAL = "physical"
SPECTRAL = "spectral"

_MAX_DERIVATIVE_ORDER = 8


class RepresentationError(ValueError):
    """Raised when a field arrives in the wrong representation."""


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform sampling of [-L, L) with its FFT-ordered wavenumber set.

    Attributes:
        half_length: L > 0, the box is [-L, L).
        n_points: N, even, at least 8.
    """

    half_length: float
    n_points: int
    x: np.ndarray = field(init=False, repr=False, compare=False)
    wavenumbers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        L, N = self.half_length, self.n_points
        if not L > 0:
            raise ValueError(f"half_length must be positive, got {L}")
        if N % 2 != 0 or N < 8:
            raise ValueError(f"n_points must be even and >= 8, got {N}")
        x = -L + self.dx * np.arange(N)
        # FFT ordering with the Nyquist slot labelled +N/2 so the wavenumber
        # set is exactly {k*pi/L : -N/2 < k <= N/2}.
        k = np.empty(N, dtype=np.int64)
        k[: N // 2] = np.arange(N // 2)
        k[N // 2] = N // 2
        k[N // 2 + 1 :] = np.arange(-N // 2 + 1, 0)
        p = k * (np.pi / L)
        x.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "wavenumbers", p)
        object.__setattr__(self, "_mode_index", k)
        object.__setattr__(self, "_phase", np.where(k % 2 == 0, 1.0, -1.0))

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @property
    def dp(self) -> float:
        """Wavenumber spacing pi/L."""
        return np.pi / self.half_length


def make_grid(half_length: float, n_points: int) -> SpectralGrid:
    """Build the periodic grid; rejects odd N, N < 8 and nonpositive L."""
    return SpectralGrid(float(half_length), int(n_points))


@dataclass(frozen=True, eq=False)
class Field:
    """A single-time field, either physical samples or spectral coefficients.

    Values are immutable after construction; operations return new fields.
    """

    grid: SpectralGrid
    values: np.ndarray
    rep: str = PHYSICAL

    def __post_init__(self):
        if self.rep not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {self.rep!r}")
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.grid.n_points,):
            raise ValueError(
                f"values shape {v.shape} does not match grid N={self.grid.n_points}"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def field_from_function(grid: SpectralGrid, fn) -> Field:
    """Sample a callable f(x) on the grid as a physical field."""
    return Field(grid, np.asarray(fn(grid.x)), PHYSICAL)


def forward_transform(f: Field) -> Field:
    """Physical samples -> spectral coefficients under the unitary scaling.

    The DFT output is multiplied by dx/sqrt(2*pi) together with the phase
    accounting for the box origin at -L, so the result approximates the
    continuum transform evaluated at the grid wavenumbers.
    """
    if f.rep != PHYSICAL:
        raise RepresentationError("forward_transform expects a physical field")
    g = f.grid
    coeff = g.dx / np.sqrt(2.0 * np.pi)
    vhat = coeff * g._phase * np.fft.fft(f.values)
    return Field(g, vhat, SPECTRAL)


def inverse_transform(f: Field) -> Field:
    """Spectral coefficients -> physical samples; exact inverse of forward."""
    if f.rep != SPECTRAL:
        raise RepresentationError("inverse_transform expects a spectral field")
    g = f.grid
    coeff = g.dp * g.n_points / np.sqrt(2.0 * np.pi)
    v = coeff * np.fft.ifft(g._phase * f.values)
    return Field(g, v, PHYSICAL)


def to_spectral(f: Field) -> Field:
    return f if f.rep == SPECTRAL else forward_transform(f)


def to_physical(f: Field) -> Field:
    return f if f.rep == PHYSICAL else inverse_transform(f)


def spectral_derivative(f: Field, order: int) -> Field:
    """Differentiate by multiplying the spectrum with (i*p)**order.

    Orders above 8 are rejected: nothing in the model needs them, and the
    roundoff amplification p_max**order would be unchecked.
    """
    if not 0 <= order <= _MAX_DERIVATIVE_ORDER:
        raise ValueError(f"derivative order must be in [0, 8], got {order}")
    fh = to_spectral(f)
    if order == 0:
        return fh
    mult = (1j * f.grid.wavenumbers) ** order
    return Field(f.grid, mult * fh.values, SPECTRAL)


def l2_norm(f: Field) -> float:
    """Discrete L2 norm; identical (Parseval) in either representation."""
    w = f.grid.dx if f.rep == PHYSICAL else f.grid.dp
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * w))


def l1_norm(f: Field) -> float:
    """Discrete L1 norm of the physical samples (rectangle rule)."""
    fp = to_physical(f)
    return float(np.sum(np.abs(fp.values)) * f.grid.dx)


def h6_norm(f: Field) -> float:
    """Sobolev norm sqrt(||f||^2 + ||d^6 f/dx^6||^2).

    Evaluated on the spectral side as sum (1 + p^12) |fhat|^2 dp, which is
    the same thing and avoids a transform pair.
    """
    fh = to_spectral(f)
    p = f.grid.wavenumbers
    total = np.sum((1.0 + p**12) * np.abs(fh.values) ** 2) * f.grid.dp
    return float(np.sqrt(total))


def transform_linf_bound(f: Field) -> tuple[float, float]:
    """Diagnostic pair (max |fhat|, ||f||_L1 / sqrt(2*pi)).

    For every field the first entry must not exceed the second (up to
    roundoff); equality is attained at p=0 for nonnegative f.
    """
    lhs = float(np.max(np.abs(to_spectral(f).values)))
    rhs = l1_norm(f) / np.sqrt(2.0 * np.pi)
    return lhs, rhs


def tail_mass_fraction(f: Field, core_fraction: float = CORE_FRACTION) -> float:
    """Fraction of L2 mass outside the central core of the box.

    Returns 0 for an identically zero field.
    """
    fp = to_physical(f)
    dens = np.abs(fp.values) ** 2
    total = float(np.sum(dens))
    if total == 0.0:
        return 0.0
    cut = core_fraction * f.grid.half_length
    outer = float(np.sum(dens[np.abs(f.grid.x) >= cut]))
    return outer / total


@dataclass(frozen=True, eq=False)
class SpacetimeField:
    """Spectral frames u_hat(p, t_j) on a uniform time grid t_0=0 < ... < t_M.

    frames has shape (M+1, N); all frames share one grid.
    """

    grid: SpectralGrid
    time_grid: np.ndarray
    frames: np.ndarray

    def __post_init__(self):
        tg = np.asarray(self.time_grid, dtype=float)
        fr = np.asarray(self.frames, dtype=np.complex128)
        if tg.ndim != 1 or tg.size < 2:
            raise ValueError("time_grid needs at least two points")
        if tg[0] != 0.0 or np.any(np.diff(tg) <= 0):
            raise ValueError("time_grid must start at 0 and strictly increase")
        dts = np.diff(tg)
        if not np.allclose(dts, dts[0], rtol=1e-12, atol=0.0):
            raise ValueError("time_grid must be uniform")
        if fr.shape != (tg.size, self.grid.n_points):
            raise ValueError(
                f"frames shape {fr.shape} != ({tg.size}, {self.grid.n_points})"
            )
        tg = tg.copy()
        fr = fr.copy()
        tg.flags.writeable = False
        fr.flags.writeable = False
        object.__setattr__(self, "time_grid", tg)
        object.__setattr__(self, "frames", fr)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def horizon(self) -> float:
        return float(self.time_grid[-1])

    @property
    def dt(self) -> float:
        return float(self.time_grid[1] - self.time_grid[0])

    def frame(self, j: int) -> Field:
        return Field(self.grid, self.frames[j], SPECTRAL)


def _check_same_layout(u: SpacetimeField, v: SpacetimeField):
    if u.grid is not v.grid and (
        u.grid.half_length != v.grid.half_length or u.grid.n_points != v.grid.n_points
    ):
        raise ValueError("spacetime fields live on different grids")
    if u.time_grid.shape != v.time_grid.shape or not np.array_equal(
        u.time_grid, v.time_grid
    ):
        raise ValueError("spacetime fields live on different time grids")


def l2_spacetime_norm(u: SpacetimeField) -> float:
    """L2 norm over the box times [0, T], trapezoid rule in time."""
    per_frame = np.sum(np.abs(u.frames) ** 2, axis=1) * u.grid.dp
    return float(np.sqrt(np.trapezoid(per_frame, u.time_grid)))


def spacetime_sobolev_norm(u: SpacetimeField, du_dt: SpacetimeField) -> float:
    """The solve's contraction norm over the window:

        sqrt(||du/dt||^2 + ||d^6 u/dx^6||^2 + ||u||^2),

    all three in L2 over box x [0, T]. The sixth derivative is spectral, the
    time derivative is supplied (never finite-differenced here), and the time
    integral is the composite trapezoid rule.
    """
    _check_same_layout(u, du_dt)
    p12 = u.grid.wavenumbers**12
    per_frame = (
        np.sum((1.0 + p12) * np.abs(u.frames) ** 2, axis=1)
        + np.sum(np.abs(du_dt.frames) ** 2, axis=1)
    ) * u.grid.dp
    return float(np.sqrt(np.trapezoid(per_frame, u.time_grid)))
