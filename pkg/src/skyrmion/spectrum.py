"""Linear perturbations of the Skyrmion: effective potential and the
fundamental quasinormal mode.

The mode is found by matching logarithmic derivatives ``g = psi'/psi`` at an
intermediate radius ``r0``: the regular solution is integrated out from the
origin and the outgoing solution is brought in from large radii through the
Riccati equation ``g' + g^2 - 2/r^2 - V + k^2 = 0``.

Beyond ``r_switch`` the potential is replaced by its analytic tail
``-v6 / r**6``. The outgoing solution of that tail problem is known as an
asymptotic series in ``1/r`` (the Riccati-Hankel function dressed by the
tail), which is used as the seed. With ``seed="hankel"`` the bare
Riccati-Hankel function is used instead; this seed misses the tail, and the
backward flow amplifies the error like ``exp(2*Gamma*(R - r0))``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import make_interp_spline

from .radial import EVEN, RadialGrid, ScalarField

logger = logging.getLogger(__name__)

_RTOL = 1e-12
_ATOL = 1e-14


class NodeError(RuntimeError):
    """The regular solution vanished before the matching radius."""

    def __init__(self, message, r_node):
        super().__init__(message)
        self.r_node = r_node


class PoleError(RuntimeError):
    """The backward Riccati solution hit a pole of ``psi'/psi``."""

    def __init__(self, message, r_pole):
        super().__init__(message)
        self.r_pole = r_pole


class ConvergenceError(RuntimeError):
    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


def potential_of(a):
    """Effective potential as a function of ``a = sin S / r``."""
    a2 = np.asarray(a, dtype=float) ** 2
    return -4 * a2 * (1 + 3 * a2 + 3 * a2 * a2) / (1 + 2 * a2) ** 2


@dataclass
class PotentialTable:
    """Tabulated potential on ``[0, r_switch]`` plus the tail ``-v6/r**6``.

    ``v6`` is fixed by continuity at ``r_switch``; for the Skyrmion it agrees
    with ``4 c**2`` to a few parts per million.
    """

    V: ScalarField
    r_switch: float
    v6: float
    _spline: object = field(default=None, repr=False)

    def __post_init__(self):
        if self._spline is None:
            r = self.V.grid.r
            keep = r <= self.r_switch + 6 * self.V.grid.h
            self._spline = make_interp_spline(r[keep], self.V.values[keep], k=5)

    @classmethod
    def zero(cls, r_switch=25.0, h=0.05):
        grid = RadialGrid.from_extent(r_switch + 1.0, h)
        return cls(ScalarField(grid, np.zeros(grid.n), EVEN), r_switch, 0.0)

    @property
    def value_at_origin(self):
        return float(self.V.values[0])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inner = r <= self.r_switch
        with np.errstate(divide="ignore"):
            tail = -self.v6 / r**6
        out = np.where(inner, self._spline(np.minimum(r, self.r_switch)), tail)
        return float(out) if out.ndim == 0 else out

    def on_grid(self, grid: RadialGrid):
        r = grid.r
        vals = np.empty(grid.n)
        inner = r <= self.r_switch
        vals[inner] = self._spline(r[inner])
        vals[~inner] = -self.v6 / r[~inner] ** 6
        return ScalarField(grid, vals, EVEN)


def effective_potential(profile, r_switch=25.0):
    """Build the potential table for a converged static profile."""
    if profile is None or not np.isfinite(getattr(profile, "b", np.nan)):
        raise ValueError("effective_potential needs a converged Skyrmion profile")
    grid = profile.S.grid
    if grid.r_max < r_switch + 1.0:
        raise ValueError(f"profile grid ends at {grid.r_max}, below r_switch={r_switch}")
    r = grid.r
    S = profile.S.values
    a = np.empty_like(r)
    pos = r > 0
    a[pos] = np.sin(S[pos]) / r[pos]
    a[~pos] = profile.b
    V = potential_of(a)
    i_s = grid.index_of(r_switch)
    r_s = r[i_s]
    v6 = -V[i_s] * r_s**6
    return PotentialTable(ScalarField(grid, V, EVEN), float(r_s), float(v6))


# -- outgoing solutions ------------------------------------------------------

def hankel_log_derivative(k, r):
    """``k h1'(k r) / h1(k r)`` for ``h1(z) = (-i + 1/z) exp(i z)``."""
    z = k * r
    return k * (1 + 1j / z - 1 / z**2) / (-1j + 1 / z)


def outgoing_log_derivative(k, r, v6, max_terms=400):
    """Log-derivative of the outgoing solution of ``psi'' + (k^2 - 2/r^2 + v6/r^6) psi = 0``.

    Uses ``psi = exp(i k r) sum_m a_m r**-m`` truncated at its smallest term.
    Returns ``(g, last_term)``; ``last_term`` is the relative size of the
    first omitted term and bounds the truncation error.
    """
    k = complex(k)
    coeffs = [1.0 + 0j]
    u = 1.0 + 0j
    du = 0.0 + 0j
    prev = np.inf
    last = 0.0
    for m in range(1, max_terms):
        num = (m - 2) * (m + 1) * coeffs[m - 1]
        if m >= 5:
            num += v6 * coeffs[m - 5]
        am = num / (2j * k * m)
        term = am * r ** (-m)
        size = abs(term)
        coeffs.append(am)
        if size == 0.0 and m > 6:
            last = 0.0
            break
        if size > prev and m > 6:
            last = size
            break
        u += term
        du += -m * am * r ** (-m - 1)
        prev = size if size > 0 else prev
        last = size
        if size < 1e-18 * abs(u) and m > 6:
            break
    return 1j * k + du / u, last / abs(u)


# -- the two integrations ----------------------------------------------------

def _regular_start(k, V0, r1):
    c2 = (V0 - k * k) / 10.0
    psi = r1**2 * (1 + c2 * r1**2)
    dpsi = 2 * r1 + 4 * c2 * r1**3
    return psi, dpsi


def integrate_from_origin(Omega, Gamma, r0, potential, method="complex", r_start=1e-3):
    """Log-derivative ``A'/A + i phi'`` of the regular solution at ``r0``.

    ``method="complex"`` integrates ``psi'' = (2/r^2 + V - k^2) psi`` directly;
    ``method="amplitude_phase"`` integrates the real amplitude-phase pair
    started from ``A ~ r^2``, ``phi ~ Omega Gamma r^2 / 5``. The two agree
    wherever ``A`` stays positive; the amplitude-phase form raises
    :class:`NodeError` if ``A`` reaches zero before ``r0``.
    """
    if not 0 < r0:
        raise ValueError("matching radius must be positive")
    k = complex(Omega, -Gamma)
    k2 = k * k
    psi1, dpsi1 = _regular_start(k, potential.value_at_origin, r_start)

    if method == "complex":
        def rhs(r, y):
            return [y[1], (2 / r**2 + potential(r) - k2) * y[0]]

        # nodes of a real solution are harmless here; only psi(r0) = 0 matters
        sol = solve_ivp(rhs, (r_start, r0), [psi1, dpsi1], method="DOP853",
                        rtol=_RTOL, atol=1e-30)
        psi, dpsi = sol.y[:, -1]
        return complex(dpsi / psi)

    if method == "amplitude_phase":
        g1 = dpsi1 / psi1
        A1 = abs(psi1)
        y0 = [A1, A1 * g1.real, g1.imag]
        shift = Gamma**2 - Omega**2

        def rhs(r, y):
            A, dA, dphi = y
            d2A = A * dphi**2 + (2 / r**2 + potential(r) + shift) * A
            d2phi = (2 * Omega * Gamma * A - 2 * dA * dphi) / A
            return [dA, d2A, d2phi]

        def node(r, y):
            return y[0]
        node.terminal = True
        sol = solve_ivp(rhs, (r_start, r0), y0, method="DOP853", rtol=_RTOL, atol=1e-30,
                        events=[node])
        if sol.t_events[0].size:
            rn = float(sol.t_events[0][0])
            raise NodeError(f"amplitude vanishes at r={rn:.6g} < r0={r0}", rn)
        A, dA, dphi = sol.y[:, -1]
        return complex(dA / A, dphi)

    raise ValueError(f"unknown method {method!r}")


def _riccati_integrate(k, g_start, r_from, r_to, potential, pole_bound=1e8):
    k2 = k * k

    def rhs(r, y):
        g = y[0]
        return [-g * g + 2 / r**2 + potential(r) - k2]

    def blowup(r, y):
        return abs(y[0]) - pole_bound
    blowup.terminal = True

    sol = solve_ivp(rhs, (r_from, r_to), [complex(g_start)], method="DOP853",
                    rtol=_RTOL, atol=_ATOL, events=[blowup])
    if sol.t_events[0].size:
        rp = float(sol.t_events[0][0])
        raise PoleError(f"Riccati solution blows up near r={rp:.6g}; shift r0", rp)
    return complex(sol.y[0, -1])


def integrate_riccati_backward(Omega, Gamma, R, r0, potential, seed="series"):
    """Log-derivative of the outgoing solution at ``r0``.

    Parameters
    ----------
    R : float
        Outer seed radius, beyond ``r_switch``.
    seed : {"series", "hankel"}
        ``"series"`` seeds with the exact outgoing solution of the tail
        problem. Because that seed solves the equation exactly wherever the
        tail form holds, the numerical integration only has to cover
        ``[r0, r_switch]`` and the result does not depend on ``R``.
        ``"hankel"`` seeds ``g(R) = k h1'(kR)/h1(kR)`` and integrates all the
        way from ``R``.
    """
    if not R > r0:
        raise ValueError(f"need R > r0, got R={R}, r0={r0}")
    k = complex(Omega, -Gamma)
    if seed == "hankel":
        return _riccati_integrate(k, hankel_log_derivative(k, R), R, r0, potential)
    if seed != "series":
        raise ValueError(f"unknown seed {seed!r}")
    r_seed = min(R, potential.r_switch)
    if potential.v6 != 0:
        # the series is asymptotic: its smallest term is ~exp(-2|k|r)
        r_seed = max(r_seed, 15.0 / max(abs(k), 1e-12))
    g_seed, err = outgoing_log_derivative(k, r_seed, potential.v6)
    if err > 1e-10:
        logger.warning("outgoing series truncation error %.2g at r=%.4g", err, r_seed)
    if r_seed <= r0:
        return g_seed
    return _riccati_integrate(k, g_seed, r_seed, r0, potential)


def matching_residual(Omega, Gamma, potential, r0=8.0, R=40.0, seed="series"):
    """``g_left(r0) - g_right(r0)``; vanishes at a quasinormal frequency."""
    if not 0 < r0 < R:
        raise ValueError(f"need 0 < r0 < R, got r0={r0}, R={R}")
    g_left = integrate_from_origin(Omega, Gamma, r0, potential)
    g_right = integrate_riccati_backward(Omega, Gamma, R, r0, potential, seed=seed)
    return g_left - g_right


@dataclass
class QuasinormalMode:
    Omega: float
    Gamma: float
    residual: float
    r0: float
    R: float
    iterations: int = 0
    trace: list = field(default_factory=list, repr=False)

    @property
    def k(self):
        return complex(self.Omega, -self.Gamma)


def find_qnm(potential, guess=(0.6, 0.3), tolerance=1e-10, r0=8.0, R=40.0, max_iter=50,
             seed="series", fd_step=1e-7):
    """Newton iteration on the real 2-vector ``(Re, Im)`` of the matching residual.

    The Jacobian is formed by forward differences in ``Omega`` and ``Gamma``.
    Steps are halved while they would push ``Gamma`` below ``1e-4`` or fail to
    reduce the residual.
    """
    x = np.array(guess, dtype=float)

    def F(v):
        m = matching_residual(v[0], v[1], potential, r0=r0, R=R, seed=seed)
        return np.array([m.real, m.imag])

    fx = F(x)
    trace = [(x[0], x[1], float(np.hypot(*fx)))]
    for it in range(1, max_iter + 1):
        J = np.empty((2, 2))
        for j in range(2):
            dx = np.zeros(2)
            dx[j] = fd_step * max(1.0, abs(x[j]))
            J[:, j] = (F(x + dx) - fx) / dx[j]
        step = np.linalg.solve(J, -fx)
        lam = 1.0
        norm0 = np.hypot(*fx)
        while True:
            trial = x + lam * step
            if trial[1] > 1e-4:
                try:
                    ft = F(trial)
                except (NodeError, PoleError):
                    ft = None
                if ft is not None and (np.hypot(*ft) < norm0 or lam < 1e-3):
                    break
            lam *= 0.5
            if lam < 1e-6:
                raise ConvergenceError("line search failed in find_qnm", trace)
        x, fx = trial, ft
        res = float(np.hypot(*fx))
        trace.append((x[0], x[1], res))
        if res < tolerance or np.hypot(*(lam * step)) < 1e-13:
            return QuasinormalMode(float(x[0]), float(x[1]), res, r0, R, it, trace)
    raise ConvergenceError(f"find_qnm did not converge in {max_iter} iterations", trace)


def predicted_linear_exponent(l, beta):
    """Linear late-time decay exponent ``2 l + beta`` for a ``r**-beta`` potential."""
    if int(l) != l or l < 0:
        raise ValueError(f"l must be a non-negative integer, got {l}")
    if not beta > 3:
        raise ValueError(f"the decay law holds for beta > 3, got {beta}")
    return 2 * int(l) + beta


def zero_energy_nodes(potential, r_max=60.0, r_start=1e-3):
    """Number of sign changes of the regular ``k = 0`` solution on ``(0, r_max]``.

    By Sturm oscillation this counts the bound states; zero means none.
    """
    psi1, dpsi1 = _regular_start(0.0, potential.value_at_origin, r_start)

    def rhs(r, y):
        return [y[1], (2 / r**2 + potential(r)) * y[0]]

    sol = solve_ivp(rhs, (r_start, r_max), [psi1.real, dpsi1.real], method="DOP853",
                    rtol=_RTOL, atol=1e-30, dense_output=True)
    r = np.linspace(r_start, r_max, 20001)
    psi = sol.sol(r)[0]
    return int(np.count_nonzero(np.diff(np.sign(psi)) != 0))
