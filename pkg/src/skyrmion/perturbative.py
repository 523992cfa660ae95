"""Third-order perturbation theory for small topologically trivial data.

For ``F = e F1 + e^3 F3 + ...`` about the vacuum, ``F1`` solves the free
``l = 1`` wave equation and is generated by a single odd function ``a``:

    F1(t, r) = [a'(t-r) + a'(t+r)] / r + [a(t-r) - a(t+r)] / r^2

``F3`` is sourced by ``(4 / 3r^2) F1^3`` (plus a subleading term ``h``) and
decays at fixed ``r`` as ``c r t^-5`` with ``c = -(64/9) int a'(u)^3 du``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import make_interp_spline

_SPLINE_DEGREE = 7
_SERIES_RADIUS = 1e-2
_DECAY = 1e-14


class QuadratureError(RuntimeError):
    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved


@dataclass
class GeneratingFunction:
    """Odd generating function ``a(u)`` of a regular free ``l = 1`` wave.

    Built from the even-order data of ``g = F(0, r)`` through
    ``d/dr (a/r) = g/2``. Internally ``a = u q(u)`` with
    ``q(u) = -1/2 int_u^inf g``, so ``a' = q + u g / 2`` and every higher
    derivative is a combination of ``g`` and its derivatives. Everything
    vanishes identically for ``|u| > u_max``.
    """

    u_max: float
    _g: object
    _G: object
    _G_total: float
    scale: float = 1.0

    def _q(self, x):
        return -0.5 * (self._G_total - self._G(x))

    def _parts(self, u, orders):
        u = np.asarray(u, dtype=float)
        x = np.abs(u)
        inside = x <= self.u_max
        xs = np.where(inside, x, 0.0)
        out = []
        for n in orders:
            if n == 0:
                val = np.sign(u) * xs * self._q(xs)
            elif n == 1:
                val = self._q(xs) + 0.5 * xs * self._g(xs)
            else:
                # a^(n) = (n/2) g^(n-2) + (x/2) g^(n-1), odd n even in u
                val = 0.5 * n * self._g(xs, n - 2) + 0.5 * xs * self._g(xs, n - 1)
                if n % 2 == 0:
                    val = np.sign(u) * val
            out.append(self.scale * np.where(inside, val, 0.0))
        return out

    def a(self, u):
        return self._parts(u, (0,))[0]

    def da(self, u, order=1):
        """Derivative of ``a`` of the given order (1 to 5)."""
        if not 1 <= order <= 5:
            raise ValueError("derivative order must be between 1 and 5")
        return self._parts(u, (order,))[0]

    def scaled(self, factor) -> "GeneratingFunction":
        return GeneratingFunction(self.u_max, self._g, self._G, self._G_total, self.scale * factor)


def _support_length(g, start=8.0, limit=1e3):
    L = start
    while True:
        x = np.linspace(0.0, L, 4001)
        vals = np.abs(g(x))
        peak = vals.max()
        if peak == 0.0:
            return L, 0.0
        tail = vals[x >= 0.5 * L].max() * L**2
        if tail < 1e-18 * peak:
            return L, peak
        if L >= limit:
            raise ValueError(f"initial data do not decay: |g| r^2 ~ {tail:.3g} at r={L:g}")
        L *= 2


def invert_initial_data(g, du=1e-3) -> GeneratingFunction:
    """Generating function for time-symmetric data ``F(0, r) = g(r)``.

    Parameters
    ----------
    g : callable
        Vectorized ``g(r)`` for ``r >= 0``; ``O(r^3)`` at the origin and
        rapidly decaying.
    du : float
        Spacing of the spline table.
    """
    L, peak = _support_length(g)
    u = np.arange(0.0, L + 0.5 * du, du)
    gv = np.asarray(g(u), dtype=float)
    if peak == 0.0:
        zero = make_interp_spline(u[:16], np.zeros(16), k=_SPLINE_DEGREE)
        return GeneratingFunction(0.0, zero, zero.antiderivative(), 0.0)
    # g is odd; tabulate across the origin so the spline respects that
    uu = np.concatenate((-u[:0:-1], u))
    gg = np.concatenate((-gv[:0:-1], gv))
    spl = make_interp_spline(uu, gg, k=_SPLINE_DEGREE)
    G = spl.antiderivative()
    G_total = float(G(L))
    gen = GeneratingFunction(L, spl, G, G_total)
    mag = np.maximum(np.abs(gen.a(u)), np.abs(gen.da(u)))
    big = np.flatnonzero(mag >= _DECAY * mag.max())
    gen.u_max = float(u[min(big[-1] + 1, u.size - 1)])
    return gen


def free_wave_eval(a: GeneratingFunction, t, r):
    """``F1(t, r)``; below ``r = 1e-2`` the Taylor form ``(2/3) a''' r + (1/15) a^(5) r^3``."""
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    if np.any(r < 0):
        raise ValueError("free_wave_eval needs r >= 0")
    out = np.empty(t.shape)
    small = r < _SERIES_RADIUS
    if small.any():
        ts, rs = t[small], r[small]
        out[small] = (2.0 / 3.0) * rs * a.da(ts, 3) + rs**3 * a.da(ts, 5) / 15.0
    big = ~small
    if big.any():
        tb, rb = t[big], r[big]
        am, dm = a.a(tb - rb), a.da(tb - rb)
        ap, dp = a.a(tb + rb), a.da(tb + rb)
        out[big] = (dm + dp) / rb + (am - ap) / rb**2
    return out if out.ndim else float(out)


def free_wave_derivatives(a: GeneratingFunction, t, r):
    """``(dF1/dt, dF1/dr)`` for ``r > 0``."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    am, ap = a.a(t - r), a.a(t + r)
    d1m, d1p = a.da(t - r), a.da(t + r)
    d2m, d2p = a.da(t - r, 2), a.da(t + r, 2)
    Ft = (d2m + d2p) / r + (d1m - d1p) / r**2
    Fr = (d2p - d2m) / r - 2 * (d1m + d1p) / r**2 - 2 * (am - ap) / r**3
    return Ft, Fr


def third_order_source(a: GeneratingFunction, u, v):
    """``F1^3`` at ``t' = (u+v)/2``, ``r' = (v-u)/2``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(v < u):
        raise ValueError("null coordinates need u <= v")
    return free_wave_eval(a, 0.5 * (u + v), 0.5 * (v - u)) ** 3


def _h_term(a, u, v):
    t, r = 0.5 * (u + v), 0.5 * (v - u)
    F = free_wave_eval(a, t, r)
    Ft, Fr = free_wave_derivatives(a, t, r)
    return 2.0 / r**4 * (F**3 - 2 * r * F * F * Fr + r * r * F * (Fr * Fr - Ft * Ft))


def green_convolve(a: GeneratingFunction, t, r, include_h=False, epsabs=1e-15, epsrel=1e-10,
                   tolerance=None):
    """``F3(t, r)`` from the double-null Duhamel integral.

    ``F3 = 2/(3 r^2) int_{|t-r|}^{t+r} dv int_{-v}^{t-r} du K(u, v) F1(u, v)^3``
    with ``K = [(v - t)(t - u) + r^2] / (v - u)^2``. Both integrals are
    clipped to where the source can be nonzero: ``|u| <= u_max`` or
    ``|v| <= u_max``.

    Parameters
    ----------
    include_h : bool
        Add the subleading source ``h`` that carries derivatives of ``F1``.
    tolerance : float, optional
        Largest acceptable absolute error estimate; defaults to
        ``max(epsabs, epsrel |F3|) * 100``.

    Raises
    ------
    QuadratureError
        If the estimated error exceeds ``tolerance``.
    """
    if not (t > 0 and r > 0):
        raise ValueError("green_convolve needs t > 0 and r > 0")
    U = a.u_max
    if U == 0.0 or a.scale == 0.0:
        return 0.0
    v_lo, v_hi = abs(t - r), t + r
    err_total = 0.0

    def inner(v):
        nonlocal err_total
        lo, hi = -v, t - r
        if v > U:
            lo, hi = max(lo, -U), min(hi, U)
        if hi <= lo:
            return 0.0

        def f(u):
            kern = ((v - t) * (t - u) + r * r) / (v - u) ** 2
            val = (4.0 / 3.0) * third_order_source(a, u, v)
            if include_h:
                val = val + 0.25 * (v - u) ** 2 * _h_term(a, u, v)
            return kern * val

        pts = [p for p in (-U, 0.0, U) if lo < p < hi]
        val, err = quad(f, lo, hi, points=pts or None, epsabs=epsabs, epsrel=epsrel, limit=200)
        err_total += err
        return val

    breaks = [p for p in (-U, 0.0, U, t - r) if v_lo < p < v_hi]
    edges = [v_lo, *sorted(breaks), v_hi]
    total, err_outer = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = quad(inner, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=200)
        total += val
        err_outer += err
    result = 0.5 * total / r**2
    achieved = 0.5 * err_outer / r**2
    if tolerance is None:
        tolerance = 100 * max(epsabs, epsrel * abs(result))
    if achieved > tolerance:
        raise QuadratureError(f"F3({t:g}, {r:g}) error estimate {achieved:.3g} exceeds {tolerance:.3g}",
                              achieved)
    return result


@dataclass(frozen=True)
class TailPrediction:
    """Late-time law ``F3 ~ c r t^-5`` at fixed radius."""

    c: float

    def __call__(self, t, r):
        return self.c * np.asarray(r) * np.asarray(t, dtype=float) ** -5


def asymptotic_coefficient(a: GeneratingFunction) -> TailPrediction:
    """``c = -(64/9) int a'(u)^3 du`` over ``[-u_max, u_max]``."""
    if a.u_max == 0.0:
        return TailPrediction(0.0)
    # a' is even
    half, _ = quad(lambda u: a.da(u) ** 3, 0.0, a.u_max, epsabs=0.0, epsrel=1e-13, limit=400)
    return TailPrediction(float(-64.0 / 9.0 * 2.0 * half))


def gaussian_cubed(A=1.0):
    """``g(r) = A r^3 exp(-r^2)``, the default degree-zero data."""
    return lambda r: A * np.asarray(r, dtype=float) ** 3 * np.exp(-np.asarray(r, dtype=float) ** 2)
