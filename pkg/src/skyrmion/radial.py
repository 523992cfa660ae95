"""Uniform radial grids, parity-aware finite differences, quadrature,
interpolation and a classical Runge-Kutta stepper.

Fields living on ``[0, R_max]`` are continued through the origin by their
declared parity (``f(-r) = -f(r)`` for odd fields, ``f(-r) = f(r)`` for even
ones), which supplies the ghost values needed by centered stencils near
``r = 0``. Near the outer end one-sided stencils of the same order are used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ODD = "odd"
EVEN = "even"

_STENCIL_HALF = 2  # 5-point centered stencils
_INTERP_POINTS = 6  # degree-5 local interpolant


class NonFiniteError(FloatingPointError):
    """Raised when a field or a right-hand side contains NaN or inf."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


def _first_bad_index(values):
    bad = np.flatnonzero(~np.isfinite(np.ravel(values)))
    return int(bad[0]) if bad.size else None


def check_finite(values, what="values"):
    idx = _first_bad_index(values)
    if idx is not None:
        raise NonFiniteError(f"non-finite {what} at flat index {idx}", index=idx)


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid ``r_i = i*h`` (or ``(i + 1/2)*h`` when staggered)."""

    h: float
    n: int
    staggered: bool = False

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if self.n < 16:
            raise ValueError(f"grid needs at least 16 points, got {self.n}")

    @classmethod
    def from_extent(cls, r_max, h, staggered=False):
        """Smallest grid with spacing ``h`` whose outer radius reaches ``r_max``."""
        offset = 0.5 if staggered else 0.0
        n = int(np.ceil(r_max / h - offset - 1e-9)) + 1
        return cls(h=float(h), n=max(n, 16), staggered=staggered)

    @property
    def offset(self):
        return 0.5 if self.staggered else 0.0

    @property
    def r(self):
        return (np.arange(self.n) + self.offset) * self.h

    @property
    def r_max(self):
        return self.h * (self.n - 1 + self.offset)

    def index_of(self, r):
        """Index of the grid point closest to ``r``."""
        return int(np.clip(np.rint(r / self.h - self.offset), 0, self.n - 1))


@dataclass
class ScalarField:
    grid: RadialGrid
    values: np.ndarray
    parity: str = ODD

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError(
                f"field has {self.values.shape} values for a grid of {self.grid.n} points"
            )
        if self.parity not in (ODD, EVEN):
            raise ValueError(f"parity must be 'odd' or 'even', got {self.parity!r}")
        check_finite(self.values, "field values")

    @property
    def r(self):
        return self.grid.r


@dataclass
class TimeSeries:
    t: np.ndarray
    values: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t.shape != self.values.shape or self.t.ndim != 1:
            raise ValueError("time and value arrays must be 1-D and of equal length")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("time samples must be strictly increasing")

    def __len__(self):
        return self.t.size

    def window(self, t1, t2):
        mask = (self.t >= t1) & (self.t <= t2)
        return self.t[mask], self.values[mask]


def fd_weights(x0, xs, m):
    """Fornberg weights for the derivatives 0..m at ``x0`` from nodes ``xs``.

    Returns an array of shape ``(m + 1, len(xs))``.
    """
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _with_ghosts(f: ScalarField, nghost):
    """Values extended to the left by ``nghost`` parity-reflected ghosts."""
    v = f.values
    sign = -1.0 if f.parity == ODD else 1.0
    if f.grid.staggered:
        ghosts = sign * v[nghost - 1::-1]
    else:
        ghosts = sign * v[nghost:0:-1]
    return np.concatenate([ghosts, v])


def _flip(parity):
    return EVEN if parity == ODD else ODD


# centered 4th-order stencils on offsets -2..2
_D1_CENTER = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_CENTER = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def spatial_derivative(f: ScalarField, order=1) -> ScalarField:
    """Fourth-order accurate first or second radial derivative of ``f``.

    The result carries the parity of the derivative (odd -> even for the first
    derivative, unchanged for the second).
    """
    if order not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    check_finite(f.values, "input to spatial_derivative")
    h = f.grid.h
    n = f.grid.n
    ext = _with_ghosts(f, _STENCIL_HALF)
    stencil = _D1_CENTER if order == 1 else _D2_CENTER
    out = np.zeros(n)
    # interior and near-origin points: centered stencil over ghost-extended data
    m = n - _STENCIL_HALF
    for k, wgt in enumerate(stencil):
        out[:m] += wgt * ext[k:k + m]
    # outer end: one-sided stencils, 6 nodes keep 4th order for both derivatives
    nodes = np.arange(6)
    for j in range(1, _STENCIL_HALF + 1):
        x0 = 5 - (j - 1)  # position of point n-j counted from n-6
        wts = fd_weights(x0, nodes, order)[order]
        out[n - j] = wts @ f.values[n - 6:]
    out /= h**order
    return ScalarField(f.grid, out, _flip(f.parity) if order == 1 else f.parity)


def _interp_weights(x0, nodes):
    return fd_weights(x0, nodes, 0)[0]


def interpolation_stencil(grid: RadialGrid, r, parity=ODD):
    """Indices and weights of the degree-5 interpolant at one radius.

    Weights already carry the parity sign of any ghost node, so
    ``weights @ values[indices]`` is the interpolated value.
    """
    if r < 0 or r > grid.r_max * (1 + 1e-14):
        raise ValueError(f"interpolation radius {r} outside [0, {grid.r_max}]")
    x = r / grid.h - grid.offset
    if abs(x - round(x)) < 1e-12:
        return np.array([int(round(x))]), np.ones(1)
    start = int(np.floor(x)) - (_INTERP_POINTS // 2 - 1)
    start = min(start, grid.n - _INTERP_POINTS)
    nodes = np.arange(start, start + _INTERP_POINTS)
    wts = _interp_weights(x, nodes)
    # ghost node -k mirrors node k (or k-1 on a staggered grid)
    mirror = -nodes - (1 if grid.staggered else 0)
    ghost = nodes < 0
    if ghost.any() and parity == ODD:
        wts = np.where(ghost, -wts, wts)
    idx = np.where(ghost, mirror, nodes)
    return idx, wts


def interpolate(f: ScalarField, r):
    """Evaluate ``f`` at radius (or radii) ``r`` with a local degree-5 interpolant.

    Grid points are reproduced exactly. Near the origin the stencil draws on
    parity-reflected ghost values.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty_like(r_arr)
    for q, rq in enumerate(r_arr):
        idx, wts = interpolation_stencil(f.grid, rq, f.parity)
        out[q] = wts @ f.values[idx]
    return out if np.ndim(r) else float(out[0])


# 4-point Gauss-Legendre nodes on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _cell_interp_matrix(frac):
    """Weights of the 6 nodes around a cell for sample points at ``frac`` in [0, 1)."""
    nodes = np.arange(-2, 4)
    return np.array([_interp_weights(x, nodes) for x in frac])


def definite_integral(f: ScalarField, r_lo, r_hi):
    """Integral of ``f`` over ``[r_lo, r_hi]``.

    Each grid cell is integrated by 4-point Gauss-Legendre applied to the local
    degree-5 interpolant, so the rule is 6th-order accurate and endpoints need
    not coincide with grid points.
    """
    grid = f.grid
    if not r_lo < r_hi:
        raise ValueError(f"need r_lo < r_hi, got {r_lo}, {r_hi}")
    if r_lo < 0 or r_hi > grid.r_max * (1 + 1e-14):
        raise ValueError(f"integration bounds outside [0, {grid.r_max}]")
    r0 = grid.offset * grid.h
    x_lo = (r_lo - r0) / grid.h
    x_hi = (r_hi - r0) / grid.h
    i_lo = max(int(np.ceil(x_lo - 1e-12)), 0)
    i_hi = int(np.floor(x_hi + 1e-12))
    if i_hi < i_lo:
        # no grid point inside: both ends in the same cell (or before the first node)
        return _integrate_by_samples(f, r_lo, r_hi)
    total = _full_cells(f, i_lo, i_hi) if i_hi > i_lo else 0.0
    a = r0 + i_lo * grid.h
    b = r0 + i_hi * grid.h
    if r_lo < a - 1e-12 * grid.h:
        total += _integrate_by_samples(f, r_lo, a)
    if r_hi > b + 1e-12 * grid.h:
        total += _integrate_by_samples(f, b, r_hi)
    return total


def _full_cells(f, i_lo, i_hi):
    """Integral over the whole cells between grid indices i_lo and i_hi."""
    grid = f.grid
    ext = _with_ghosts(f, 3)
    cells = np.arange(i_lo, i_hi)
    # stencil of nodes cell-2 .. cell+3, shifted inwards at the outer end
    starts = np.minimum(cells - 2, grid.n - 6)
    shift = cells - 2 - starts
    total = 0.0
    for s in np.unique(shift):
        sel = cells[shift == s]
        wmat = _cell_interp_matrix(_GL_X + s)  # (4, 6)
        cell_w = _GL_W @ wmat  # (6,)
        base = sel - 2 - s + 3  # index into ext
        vals = np.stack([ext[base + k] for k in range(6)], axis=1)
        total += float(np.sum(vals @ cell_w))
    return total * grid.h


def _integrate_by_samples(f, a, b):
    pts = a + (b - a) * _GL_X
    return float((b - a) * (_GL_W @ interpolate(f, pts)))


def time_step(state, rhs: Callable, t, dt):
    """One classical fourth-order Runge-Kutta step of ``y' = rhs(t, y)``.

    ``state`` may be any numpy array (scalars are promoted). A non-finite stage
    derivative raises :class:`NonFiniteError` naming the offending flat index.
    """
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    y = np.asarray(state, dtype=float)
    k1 = _checked(rhs(t, y), t)
    k2 = _checked(rhs(t + 0.5 * dt, y + 0.5 * dt * k1), t)
    k3 = _checked(rhs(t + 0.5 * dt, y + 0.5 * dt * k2), t)
    k4 = _checked(rhs(t + dt, y + dt * k3), t)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _checked(k, t):
    k = np.asarray(k, dtype=float)
    idx = _first_bad_index(k)
    if idx is not None:
        raise NonFiniteError(f"non-finite right-hand side at t={t:.6g}, flat index {idx}", index=idx)
    return k
