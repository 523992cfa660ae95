"""Degree-one static solution (the Skyrmion) by shooting from the origin.

The static field equation is integrated outward from ``r_min`` with the
linear launch ``S = b r``; the slope ``b`` is bracketed between an undershoot
(``S'`` turns negative below ``pi``) and an overshoot (``S`` crosses ``pi``)
and bisected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .radial import EVEN, ODD, RadialGrid, ScalarField, spatial_derivative

OVERSHOOT = "overshoot"
UNDERSHOOT = "undershoot"
CONVERGED = "converged"

_RTOL = 1e-13
_ATOL = 1e-15


class ShootingError(RuntimeError):
    pass


def static_rhs(r, S, dS):
    """Second derivative ``S''`` of a static solution at ``r > 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("static_rhs needs r > 0; launch from the origin with the series")
    s = np.sin(S)
    s2 = np.sin(2 * S)
    w = r * r + 2 * s * s
    assert np.all(w > 0)
    return (s2 * (1 + (s / r) ** 2 + dS * dS) - (2 * r + 2 * s2 * dS) * dS) / w


def _ode(r, y):
    return [y[1], static_rhs(r, y[0], y[1])]


def _cross_pi(r, y):
    return y[0] - np.pi


_cross_pi.terminal = True
_cross_pi.direction = 1


def _turn_back(r, y):
    return y[1]


_turn_back.terminal = True
_turn_back.direction = -1


@dataclass
class ShotOutcome:
    kind: str
    b: float
    r_end: float
    solution: object = field(repr=False, default=None)


def shoot(b_trial, r_max=1e6, r_min=1e-4, tol=1e-6):
    """Integrate the static equation from the origin with slope ``b_trial``.

    Returns an :class:`ShotOutcome` whose ``kind`` is ``"overshoot"`` when ``S``
    passes ``pi``, ``"undershoot"`` when ``S'`` changes sign below ``pi``, and
    ``"converged"`` when neither happens before ``r_max`` and the solution sits
    within ``tol`` of ``pi`` with a flat slope there.
    """
    if not b_trial > 0:
        raise ValueError(f"trial slope must be positive, got {b_trial}")
    sol = solve_ivp(
        _ode,
        (r_min, r_max),
        [b_trial * r_min, b_trial],
        method="DOP853",
        rtol=_RTOL,
        atol=_ATOL,
        events=[_cross_pi, _turn_back],
        dense_output=True,
    )
    if sol.status == -1 or not np.all(np.isfinite(sol.y)):
        good = np.isfinite(sol.y).all(axis=0)
        last = sol.t[good][-1] if good.any() else r_min
        raise ShootingError(f"integration failed for b={b_trial!r}; last good r={last:.6g}")
    if sol.t_events[0].size:
        return ShotOutcome(OVERSHOOT, b_trial, float(sol.t_events[0][0]), sol.sol)
    if sol.t_events[1].size:
        return ShotOutcome(UNDERSHOOT, b_trial, float(sol.t_events[1][0]), sol.sol)
    S_end, dS_end = sol.y[:, -1]
    if np.pi - tol < S_end < np.pi and abs(dS_end) < tol:
        return ShotOutcome(CONVERGED, b_trial, float(sol.t[-1]), sol.sol)
    # ran out of radius while still drifting; report which way it is heading
    kind = OVERSHOOT if dS_end > 0 and S_end > np.pi - tol else UNDERSHOOT
    return ShotOutcome(kind, b_trial, float(sol.t[-1]), sol.sol)


def far_field(r, c):
    """Large-``r`` expansion ``pi - c/r**2 + c**3/(21 r**6)`` and its derivative."""
    r = np.asarray(r, dtype=float)
    e = c**3 / 21.0
    S = np.pi - c / r**2 + e / r**6
    dS = 2 * c / r**3 - 6 * e / r**7
    return S, dS


def extract_far_coefficient(r, S, r_far=20.0, r_hi=None):
    """Least-squares fit of ``(pi - S) r**2 = c + d/r**2`` over ``r > r_far``.

    Returns ``c``.
    """
    r = np.asarray(r, dtype=float)
    S = np.asarray(S, dtype=float)
    mask = r > r_far
    if r_hi is not None:
        mask &= r <= r_hi
    if mask.sum() < 10:
        raise ValueError(f"far region r > {r_far} has only {mask.sum()} points (need 10)")
    x = 1.0 / r[mask] ** 2
    y = (np.pi - S[mask]) * r[mask] ** 2
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[0])


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10 - 15 * x + 6 * x * x)


@dataclass
class StaticProfile:
    """The Skyrmion with its origin slope ``b`` and far-field coefficient ``c``.

    ``S`` and ``dS`` sample the profile on ``grid``; :meth:`evaluate` returns it
    at arbitrary radii, switching smoothly to the far-field expansion beyond
    the radius where the shot is trustworthy.
    """

    b: float
    c: float
    grid: RadialGrid
    S: ScalarField
    dS: ScalarField
    r_join: float
    bracket: tuple = (np.nan, np.nan)
    _shot: object = field(repr=False, default=None)
    r_min: float = 1e-4

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        S = np.empty_like(r)
        dS = np.empty_like(r)
        tiny = r < self.r_min
        S[tiny] = self.b * r[tiny]
        dS[tiny] = self.b
        blend_lo = 0.75 * self.r_join
        inner = ~tiny & (r <= self.r_join)
        if inner.any():
            y = self._shot(r[inner])
            S[inner], dS[inner] = y[0], y[1]
        outer = r > blend_lo
        if outer.any():
            Sf, dSf = far_field(r[outer], self.c)
            lam = _smoothstep((r[outer] - blend_lo) / (self.r_join - blend_lo))
            dlam = np.where(
                (r[outer] > blend_lo) & (r[outer] < self.r_join),
                30 * ((r[outer] - blend_lo) / (self.r_join - blend_lo)) ** 2
                * (1 - (r[outer] - blend_lo) / (self.r_join - blend_lo)) ** 2
                / (self.r_join - blend_lo),
                0.0,
            )
            Sin = np.where(inner[outer], S[outer], Sf)
            dSin = np.where(inner[outer], dS[outer], dSf)
            S[outer] = (1 - lam) * Sin + lam * Sf
            dS[outer] = (1 - lam) * dSin + lam * dSf + dlam * (Sf - Sin)
        if scalar:
            return float(S[0]), float(dS[0])
        return S, dS

    def on_grid(self, grid: RadialGrid):
        S, dS = self.evaluate(grid.r)
        if not grid.staggered:
            S[0] = 0.0
        return ScalarField(grid, S, ODD), ScalarField(grid, dS, EVEN)


def _join_radius(lo_shot, hi_shot, r_cap=150.0):
    """Largest radius (<= r_cap) where the two bracketing shots still agree."""
    rs = np.linspace(5.0, min(r_cap, lo_shot.r_end, hi_shot.r_end), 400)
    S_lo = lo_shot.solution(rs)[0]
    S_hi = hi_shot.solution(rs)[0]
    gap = np.abs(S_lo - S_hi) / (np.pi - 0.5 * (S_lo + S_hi))
    bad = np.flatnonzero(gap > 1e-7)
    r_join = rs[bad[0]] if bad.size else rs[-1]
    return float(max(r_join, 30.0))


def solve_skyrmion(tolerance=1e-8, bracket=(0.1, 10.0), h=0.01, r_max=60.0, r_min=1e-4,
                   r_far=20.0, max_iter=200):
    """Bisect the launch slope between an undershoot and an overshoot.

    Bisection always runs down to floating-point resolution of ``b`` because
    the far field of a shot drifts visibly once ``b`` is off by ~1e-9;
    ``tolerance`` is the widest final bracket accepted.

    Parameters
    ----------
    tolerance : float
        Maximum width of the final undershoot/overshoot bracket on ``b``.
    bracket : (float, float)
        Initial undershoot and overshoot slopes.
    h, r_max : float
        Spacing and outer radius of the sampling grid stored on the profile.

    Returns
    -------
    StaticProfile
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    lo, hi = bracket
    shot_lo = shoot(lo, r_min=r_min)
    shot_hi = shoot(hi, r_min=r_min)
    if shot_lo.kind != UNDERSHOOT or shot_hi.kind != OVERSHOOT:
        raise ShootingError(
            f"initial bracket does not straddle the Skyrmion: b={lo} -> {shot_lo.kind}, "
            f"b={hi} -> {shot_hi.kind}"
        )
    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        shot = shoot(mid, r_min=r_min)
        if shot.kind == CONVERGED:
            best = shot
            break
        if shot.kind == OVERSHOOT:
            hi, shot_hi = mid, shot
        else:
            lo, shot_lo = mid, shot
    if best is None and hi - lo >= tolerance:
        raise ShootingError(f"bracket [{lo!r}, {hi!r}] did not shrink below {tolerance}")
    if best is None:
        b = 0.5 * (lo + hi)
        best = shoot(b, r_min=r_min)
        r_join = _join_radius(shot_lo, shot_hi)
    else:
        b = best.b
        r_join = 150.0
    grid = RadialGrid.from_extent(r_max, h)
    r = grid.r
    inner = (r > r_min) & (r <= r_join)
    c = extract_far_coefficient(r[inner], best.solution(r[inner])[0], r_far=r_far)
    profile = StaticProfile(b=b, c=c, grid=grid, S=None, dS=None, r_join=r_join,
                            bracket=(lo, hi), _shot=best.solution, r_min=r_min)
    profile.S, profile.dS = profile.on_grid(grid)
    return profile


def static_residual(S: ScalarField) -> ScalarField:
    """``(w S')' - sin 2S (1 + sin^2 S / r^2 + S'^2)`` on the grid (zero at r=0)."""
    r = S.grid.r
    dS = spatial_derivative(S, 1).values
    d2S = spatial_derivative(S, 2).values
    s = np.sin(S.values)
    s2 = np.sin(2 * S.values)
    w = r * r + 2 * s * s
    with np.errstate(divide="ignore", invalid="ignore"):
        sr = np.where(r > 0, s / np.where(r > 0, r, 1.0), dS)
    res = w * d2S + (2 * r + 2 * s2 * dS) * dS - s2 * (1 + sr * sr + dS * dS)
    if r[0] == 0:
        res[0] = 0.0
    return ScalarField(S.grid, res, ODD)
