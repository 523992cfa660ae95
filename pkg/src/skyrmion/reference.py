"""Published reference numbers and the tolerances used to compare against them.

One table shared by the ``compare`` command and the acceptance tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Reference:
    name: str
    value: float
    abs_tol: float | None = None
    rel_tol: float | None = None
    note: str = ""

    def accepts(self, x: float) -> bool:
        dev = abs(x - self.value)
        if self.abs_tol is not None and dev > self.abs_tol:
            return False
        if self.rel_tol is not None and dev > self.rel_tol * abs(self.value):
            return False
        return math.isfinite(x)

    def band(self) -> tuple:
        width = self.abs_tol if self.abs_tol is not None else self.rel_tol * abs(self.value)
        return self.value - width, self.value + width


TAIL_COEFFICIENT_EXACT = 35 * math.sqrt(3 * math.pi) / 1458

REFERENCES = {
    r.name: r
    for r in (
        Reference("skyrmion_slope_b", 2.0075, abs_tol=0.002, note="S ~ b r near the origin"),
        Reference("skyrmion_far_c", 2.1596, abs_tol=0.005, note="S ~ pi - c/r^2"),
        Reference("qnm_Omega", 0.610, abs_tol=0.010, note="fundamental resonance, real part"),
        Reference("qnm_Gamma", 0.260, abs_tol=0.010, note="fundamental resonance, damping"),
        Reference("ringdown_Omega", 0.610, rel_tol=0.02, note="damped-sinusoid fit at r0=10, t in (20,60)"),
        Reference("ringdown_Gamma", 0.260, rel_tol=0.04, note="damped-sinusoid fit at r0=10, t in (20,60)"),
        Reference("degree1_P_exponent", 6.05, abs_tol=0.5, note="ln|P| ~ a - b ln t + c/t, degree one"),
        Reference("degree0_tail_coefficient", TAIL_COEFFICIENT_EXACT, rel_tol=0.10,
                  note="F ~ c r t^-5 for F(0,r) = r^3 exp(-r^2)"),
        Reference("tail_coefficient_quadrature", TAIL_COEFFICIENT_EXACT, abs_tol=1e-4,
                  note="-(64/9) int a'^3"),
        Reference("linear_exponent", 8.0, abs_tol=0.8, note="linearized l=1 tail with the Skyrmion potential"),
        Reference("nonlinear_exponent", 5.0, abs_tol=0.2, note="F - S ~ t^-5"),
    )
}


def verdict(name: str, x: float) -> bool:
    return REFERENCES[name].accepts(x)
