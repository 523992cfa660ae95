import numpy as np
import pytest

from skyrmion.radial import RadialGrid
from skyrmion.static import (
    CONVERGED,
    OVERSHOOT,
    UNDERSHOOT,
    ShootingError,
    extract_far_coefficient,
    shoot,
    solve_skyrmion,
    static_residual,
    static_rhs,
)


@pytest.mark.parametrize("S, r", [(0.0, 0.7), (np.pi, 3.0), (np.pi / 2, 1.0)])
def test_rhs_vanishes_at_static_points(S, r):
    assert static_rhs(r, S, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_rhs_rejects_origin():
    with pytest.raises(ValueError):
        static_rhs(0.0, 0.0, 2.0)


def test_shooting_classification():
    assert shoot(10.0).kind == OVERSHOOT
    assert shoot(0.1).kind == UNDERSHOOT


def test_shoot_rejects_nonpositive_slope():
    with pytest.raises(ValueError):
        shoot(0.0)


def test_outcome_switches_once_across_bracket():
    kinds = [shoot(b, r_max=200.0).kind for b in np.linspace(0.5, 4.0, 21)]
    flips = sum(k1 != k2 for k1, k2 in zip(kinds[:-1], kinds[1:]))
    assert kinds[0] == UNDERSHOOT and kinds[-1] == OVERSHOOT
    assert flips == 1


def test_profile_constants(profile):
    assert profile.b == pytest.approx(2.0075, abs=2e-3)
    assert profile.c == pytest.approx(2.1596, abs=5e-3)


def test_bisected_slope_converges_on_a_finite_range(profile):
    assert shoot(profile.b, r_max=50.0, tol=1e-3).kind == CONVERGED


def test_profile_shape(profile):
    S = profile.S.values
    r = profile.S.grid.r
    assert S[0] == 0.0
    assert np.all((S[1:] > 0) & (S[1:] < np.pi))
    assert np.all(np.diff(S) > 0)
    assert abs(S[-1] - np.pi) < 1e-3
    small = (r > 0) & (r < 0.05)
    cubic = np.abs(S[small] - profile.b * r[small]) / r[small] ** 3
    assert cubic.max() < 5.0
    far = r > 40
    np.testing.assert_allclose((np.pi - S[far]) * r[far] ** 2, profile.c, rtol=2e-3)


def test_profile_satisfies_static_equation(profile):
    assert np.max(np.abs(static_residual(profile.S).values)) < 1e-6


def test_residual_converges_at_fourth_order(profile):
    peaks = []
    for h in (0.04, 0.02):
        grid = RadialGrid.from_extent(10.0, h)
        S, _ = profile.on_grid(grid)
        res = static_residual(S).values
        peaks.append(np.max(np.abs(res[grid.r < 5])))
    assert peaks[0] / peaks[1] > 12


def test_launch_radius_does_not_move_slope(profile):
    half = solve_skyrmion(r_min=5e-5)
    assert abs(half.b - profile.b) < 1e-8


def test_bad_bracket_is_rejected():
    with pytest.raises(ShootingError, match="bracket"):
        solve_skyrmion(bracket=(3.0, 10.0))


def test_far_coefficient_of_exact_model():
    r = np.linspace(20, 60, 400)
    assert extract_far_coefficient(r, np.pi - 2.5 / r**2) == pytest.approx(2.5, abs=1e-10)
    assert extract_far_coefficient(r, np.pi - 2.5 / r**2 + 1 / r**4) == pytest.approx(2.5, abs=1e-3)


def test_far_coefficient_needs_points():
    r = np.linspace(5, 21, 50)
    with pytest.raises(ValueError):
        extract_far_coefficient(r, np.pi - 1 / r**2)
