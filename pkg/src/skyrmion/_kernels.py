"""Compiled stencil sweeps for the time-dependent equations.

Both kernels use the 5-point fourth-order stencils of :mod:`skyrmion.radial`
on the grid ``r_i = i h`` with parity ghosts at the origin. They only fill
points ``1 .. n-3``; the origin and the last two points are left at zero, and
callers decide what happens there.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def nonlinear_sweep(F, P, h, dF, dP):
    n = F.shape[0]
    i12 = 1.0 / (12.0 * h)
    i12h2 = 1.0 / (12.0 * h * h)
    dF[0] = 0.0
    dP[0] = 0.0
    for i in range(1, n - 2):
        r = i * h
        # F is odd: F(-r) = -F(r)
        fm2 = -F[1] if i == 1 else F[i - 2]
        fm1 = F[i - 1]
        f0 = F[i]
        fp1 = F[i + 1]
        fp2 = F[i + 2]
        d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) * i12
        d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) * i12h2
        s = np.sin(f0)
        s2 = 2.0 * s * np.cos(f0)
        w = r * r + 2.0 * s * s
        ft = P[i] / w
        sr = s / r
        dF[i] = ft
        dP[i] = w * d2 + (2.0 * r + 2.0 * s2 * d1) * d1 - s2 * (1.0 + sr * sr + d1 * d1 - ft * ft)
    dF[n - 2] = 0.0
    dF[n - 1] = 0.0
    dP[n - 2] = 0.0
    dP[n - 1] = 0.0


@njit(cache=True)
def deviation_sweep(u, P, sA, cA, A1, A2, h, du, dP):
    """:func:`nonlinear_sweep` for ``F = A + u`` about a static background ``A``.

    ``sA, cA`` are ``sin A, cos A`` and ``A1, A2`` the stencil derivatives of
    ``A``. Every term is written as its difference from the background value,
    using ``sin F - sin A = cA sin u - 2 sA sin^2(u/2)`` and the like, so the
    rounding error scales with ``|u|`` and ``u = P = 0`` is an exact fixed
    point. The background residual itself is dropped.
    """
    n = u.shape[0]
    i12 = 1.0 / (12.0 * h)
    i12h2 = 1.0 / (12.0 * h * h)
    du[0] = 0.0
    dP[0] = 0.0
    for i in range(1, n - 2):
        r = i * h
        # u is odd like F
        um2 = -u[1] if i == 1 else u[i - 2]
        e1 = (um2 - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) * i12
        e2 = (-um2 + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) * i12h2
        a1 = A1[i]
        d1 = a1 + e1
        d2 = A2[i] + e2
        sa = sA[i]
        ca = cA[i]
        su = np.sin(u[i])
        hv = np.sin(0.5 * u[i])
        hv = 2.0 * hv * hv
        ds = ca * su - sa * hv
        dc = -sa * su - ca * hv
        s = sa + ds
        c = ca + dc
        s2a = 2.0 * sa * ca
        ds2 = 2.0 * (ds * c + sa * dc)
        ssum = s + sa
        dw = 2.0 * ds * ssum
        wa = r * r + 2.0 * sa * sa
        w = wa + dw
        ft = P[i] / w
        dd1 = e1 * (d1 + a1)
        q = 1.0 + (s / r) ** 2 + d1 * d1 - ft * ft
        dq = ds * ssum / (r * r) + dd1 - ft * ft
        du[i] = ft
        dP[i] = (dw * d2 + wa * e2 + 2.0 * r * e1 + 2.0 * (ds2 * d1 * d1 + s2a * dd1)
                 - ds2 * q - s2a * dq)
    du[n - 2] = 0.0
    du[n - 1] = 0.0
    dP[n - 2] = 0.0
    dP[n - 1] = 0.0


@njit(cache=True)
def linear_sweep(v, pi, V, h, dv, dpi):
    """``v_tt = v'' - (2/r^2 + V) v`` with ``v`` even and ``v(0) = 0``."""
    n = v.shape[0]
    i12h2 = 1.0 / (12.0 * h * h)
    dv[0] = 0.0
    dpi[0] = 0.0
    for i in range(1, n - 2):
        r = i * h
        vm2 = v[1] if i == 1 else v[i - 2]
        d2 = (-vm2 + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) * i12h2
        dv[i] = pi[i]
        dpi[i] = d2 - (2.0 / (r * r) + V[i]) * v[i]
    dv[n - 2] = 0.0
    dv[n - 1] = 0.0
    dpi[n - 2] = 0.0
    dpi[n - 1] = 0.0


@njit(cache=True)
def vacuum_linear_sweep(F, P, h, dF, dP):
    """Linearization of :func:`nonlinear_sweep` about ``F = 0``."""
    n = F.shape[0]
    i12 = 1.0 / (12.0 * h)
    i12h2 = 1.0 / (12.0 * h * h)
    dF[0] = 0.0
    dP[0] = 0.0
    for i in range(1, n - 2):
        r = i * h
        fm2 = -F[1] if i == 1 else F[i - 2]
        d1 = (fm2 - 8.0 * F[i - 1] + 8.0 * F[i + 1] - F[i + 2]) * i12
        d2 = (-fm2 + 16.0 * F[i - 1] - 30.0 * F[i] + 16.0 * F[i + 1] - F[i + 2]) * i12h2
        dF[i] = P[i] / (r * r)
        dP[i] = r * r * d2 + 2.0 * r * d1 - 2.0 * F[i]
    dF[n - 2] = 0.0
    dF[n - 1] = 0.0
    dP[n - 2] = 0.0
    dP[n - 1] = 0.0
