"""Decay-law fits for observer time series.

Two regimes are handled: the exponentially damped ringing at intermediate
times, fitted by a damped sinusoid, and the late polynomial tail, fitted by
``ln|v| = a - b ln t + c/t``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .radial import TimeSeries

logger = logging.getLogger(__name__)

FLOOR_RELATIVE = 1e-13
FLOOR_MARGIN = 1e3
MONOTONE_RUN = 50
NOISE_MARGIN = 10.0


class FitError(ValueError):
    """The series does not support the requested fit."""


@dataclass(frozen=True)
class RingdownFit:
    """``A exp(-Gamma t) sin(Omega t + delta)`` fitted over ``window``."""

    A: float
    Gamma: float
    Omega: float
    delta: float
    window: tuple
    residual: float

    @property
    def k(self) -> complex:
        return complex(self.Omega, -self.Gamma)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.A * np.exp(-self.Gamma * t) * np.sin(self.Omega * t + self.delta)


@dataclass(frozen=True)
class PowerLawFit:
    """``ln|v| = a - b ln t + c/t`` fitted over ``window``."""

    a: float
    b: float
    c: float
    window: tuple
    residual: float

    def log_model(self, t):
        t = np.asarray(t, dtype=float)
        return self.a - self.b * np.log(t) + self.c / t


@dataclass(frozen=True)
class TailCoefficient:
    """Median of ``v t^p / r0`` over a window with its interquartile band."""

    value: float
    lower: float
    upper: float
    window: tuple
    exponent: float


def _windowed(series: TimeSeries, window):
    t1, t2 = window
    if not t1 < t2:
        raise FitError(f"fit window must satisfy t1 < t2, got {window}")
    t, v = series.window(t1, t2)
    if t.size < 4:
        raise FitError(f"window {window} holds only {t.size} samples")
    return t, v


def sign_changes(values) -> int:
    v = np.asarray(values)
    v = v[v != 0]
    return int(np.count_nonzero(np.signbit(v[1:]) != np.signbit(v[:-1])))


def _ringdown_guess(t, v):
    """Frequency from zero-crossing spacing, decay from the peak envelope."""
    s = np.signbit(v)
    idx = np.flatnonzero(s[1:] != s[:-1])
    # linear interpolation of each crossing
    zeros = t[idx] - v[idx] * (t[idx + 1] - t[idx]) / (v[idx + 1] - v[idx])
    Omega = np.pi / np.mean(np.diff(zeros))
    peaks_t, peaks_v = [], []
    for lo, hi in zip(idx[:-1], idx[1:]):
        j = lo + 1 + np.argmax(np.abs(v[lo + 1:hi + 1]))
        peaks_t.append(t[j])
        peaks_v.append(abs(v[j]))
    if len(peaks_t) >= 2:
        Gamma = -np.polyfit(peaks_t, np.log(peaks_v), 1)[0]
    else:
        Gamma = 0.1 * Omega
    return Omega, max(Gamma, 1e-6)


def _linear_amplitudes(t, v, Gamma, Omega, t_ref):
    env = np.exp(-Gamma * (t - t_ref))
    design = np.column_stack((env * np.sin(Omega * t), env * np.cos(Omega * t)))
    coef, *_ = np.linalg.lstsq(design, v, rcond=None)
    return coef


def fit_ringdown(series: TimeSeries, window=(20.0, 60.0)) -> RingdownFit:
    """Fit a damped sinusoid to the raw samples inside ``window``.

    Nonlinear least squares in the variables ``(Gamma, Omega, p, q)`` of
    ``exp(-Gamma (t - t1)) (p sin(Omega t) + q cos(Omega t))``, which is
    better conditioned than amplitude and phase; ``A`` and ``delta`` are
    recovered at the end with ``A > 0``.

    Raises
    ------
    FitError
        If the window holds fewer than two sign changes.
    """
    t, v = _windowed(series, window)
    n_changes = sign_changes(v)
    if n_changes < 2:
        raise FitError(f"only {n_changes} sign changes in window {window}; nothing to fit")
    if n_changes < 10:
        logger.info("window %s spans fewer than five periods (%d sign changes)", window, n_changes)
    t_ref = t[0]
    Omega0, Gamma0 = _ringdown_guess(t, v)
    p0, q0 = _linear_amplitudes(t, v, Gamma0, Omega0, t_ref)
    scale = np.max(np.abs(v))

    def resid(x):
        G, W, p, q = x
        env = np.exp(-G * (t - t_ref))
        return (env * (p * np.sin(W * t) + q * np.cos(W * t)) - v) / scale

    sol = least_squares(resid, [Gamma0, Omega0, p0, q0], method="lm", xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, max_nfev=20000)
    G, W, p, q = sol.x
    if W < 0:
        W, q = -W, -q
    A_ref = np.hypot(p, q)
    delta = float(np.mod(np.arctan2(q, p), 2 * np.pi))
    A = A_ref * np.exp(G * t_ref)
    res = float(np.linalg.norm(sol.fun) * scale / np.linalg.norm(v))
    if not G > 0:
        raise FitError(f"fitted decay rate {G:.4g} is not positive")
    return RingdownFit(float(A), float(G), float(W), delta, (float(t[0]), float(t[-1])), res)


def noise_level(values):
    """Robust standard deviation of sample-to-sample noise.

    Uses fourth differences, which remove smooth trends: for white noise of
    deviation ``s`` they have deviation ``s sqrt(70)``. The median absolute
    value keeps isolated features from inflating the estimate.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 5:
        return 0.0
    d4 = np.diff(v, 4)
    return float(1.4826 * np.median(np.abs(d4)) / np.sqrt(70.0))


def floor_mask(values, reference=None, noise=None):
    """Samples that sit safely above the rounding floor and the noise.

    The rounding floor is ``1e-13 max|v|`` (``reference`` overrides
    ``max|v|``) and samples must exceed it by a factor 1e3. Callers pass the
    peak of the tail segment as ``reference`` so that early ringing does not
    set the scale. Samples must also exceed ``NOISE_MARGIN`` times the noise
    level, estimated from ``values`` by :func:`noise_level` unless given.
    """
    a = np.abs(np.asarray(values))
    ref = a.max() if reference is None else reference
    if noise is None:
        noise = noise_level(values)
    return (a > FLOOR_MARGIN * FLOOR_RELATIVE * ref) & (a > NOISE_MARGIN * noise)


def suggest_tail_window(series: TimeSeries, run=MONOTONE_RUN, reference=None):
    """Pick a late-time window for a power-law fit.

    The series is cut at its sign changes. In each piece the window may open
    at the first sample from which ``|v|`` decreases for ``run`` consecutive
    samples, and it closes at the end of the piece or at the last sample
    the rounding floor and the noise (see :func:`floor_mask`). The floor scale ``reference`` defaults to
    ``|v|`` at the opening sample. Among these candidates the one spanning
    the largest ratio ``t2/t1`` wins: ringing half-periods and rounding noise
    flip sign quickly, the tail does not.
    """
    t = np.asarray(series.t)
    v = np.asarray(series.values)
    a = np.abs(v)
    s = np.signbit(v)
    cuts = np.flatnonzero(s[1:] != s[:-1]) + 1
    bounds = np.concatenate(([0], cuts, [v.size]))
    best, best_span = None, 0.0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi - lo <= run:
            continue
        falling = np.diff(a[lo:hi]) < 0
        # first index whose next `run` differences are all negative
        window_sum = np.convolve(falling, np.ones(run, dtype=int), mode="valid")
        ok = np.flatnonzero(window_sum == run)
        if ok.size == 0:
            continue
        start = lo + int(ok[0])
        ref = a[start] if reference is None else reference
        above = np.flatnonzero(floor_mask(v[start:hi], ref, noise_level(v[start:hi])))
        if above.size == 0:
            continue
        end = start + int(above[-1])
        if end - start < run or t[start] <= 0:
            continue
        span = t[end] / t[start]
        if span > best_span:
            best, best_span = (float(t[start]), float(t[end])), span
    if best is None:
        raise FitError("no sign-definite, monotone stretch above the rounding floor and noise")
    return best


def late_tail_window(series: TimeSeries, span=3.0, reference=None):
    """The last factor-``span`` stretch of :func:`suggest_tail_window`.

    The suggested window opens as soon as the ringing stops; the pure power
    law only holds once ``t`` is large compared with the observer radius, so
    coefficient estimates use the late end only.
    """
    lo, hi = suggest_tail_window(series, reference=reference)
    t = np.asarray(series.t)
    # last sample at or before hi / span, so the window spans the full factor
    i = max(int(np.searchsorted(t, hi / span * (1 + 1e-12), side="right")) - 1, 0)
    return max(lo, float(t[i])), hi


def fit_power_law(series: TimeSeries, window=None, min_span=3.0, reference=None) -> PowerLawFit:
    """Linear least squares of ``ln|v|`` against ``a - b ln t + c/t``.

    Parameters
    ----------
    window : (float, float), optional
        Fit interval; chosen by :func:`suggest_tail_window` when omitted.
    min_span : float
        Smallest accepted ratio ``t2/t1``.
    reference : float, optional
        Magnitude used for the rounding-floor estimate; defaults to the peak
        of ``|v|`` inside the window. Samples inside the noise are dropped as
        well, so a window reaching into the noise may end up too short.
    """
    if window is None:
        window = suggest_tail_window(series, reference=reference)
    t, v = _windowed(series, window)
    if sign_changes(v):
        raise FitError(f"series changes sign inside {window}; the ringing is not over")
    keep = floor_mask(v, np.max(np.abs(v)) if reference is None else reference)
    t, v = t[keep], v[keep]
    if t.size < 4:
        raise FitError("fewer than four samples above the rounding floor and noise")
    if t[-1] / t[0] < min_span * (1 - 1e-9):
        raise FitError(f"window ({t[0]:g}, {t[-1]:g}) spans less than a factor {min_span}")
    if t[0] <= 0:
        raise FitError("power-law windows need t > 0")
    design = np.column_stack((np.ones_like(t), -np.log(t), 1.0 / t))
    y = np.log(np.abs(v))
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    res = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return PowerLawFit(float(coef[0]), float(coef[1]), float(coef[2]), (float(t[0]), float(t[-1])), res)


def estimate_tail_coefficient(series: TimeSeries, r0, window, exponent=5.0) -> TailCoefficient:
    """``median(v t^exponent / r0)`` over ``window`` with the quartiles as a band.

    Raises
    ------
    FitError
        If ``|v|`` is not monotone inside the window.
    """
    t, v = _windowed(series, window)
    d = np.diff(np.abs(v))
    if not (np.all(d <= 0) or np.all(d >= 0)):
        raise FitError(f"|v| is not monotone in {window}; not a pure tail")
    x = v * t**exponent / r0
    q25, q50, q75 = np.percentile(x, [25, 50, 75])
    return TailCoefficient(float(q50), float(q25), float(q75), (float(t[0]), float(t[-1])),
                           float(exponent))
