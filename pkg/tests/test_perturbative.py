import numpy as np
import pytest

from skyrmion.perturbative import (
    QuadratureError,
    asymptotic_coefficient,
    free_wave_derivatives,
    free_wave_eval,
    gaussian_cubed,
    green_convolve,
    invert_initial_data,
    third_order_source,
)
from skyrmion.reference import TAIL_COEFFICIENT_EXACT


@pytest.fixture(scope="module")
def gen():
    return invert_initial_data(gaussian_cubed())


@pytest.fixture(scope="module")
def zero():
    return invert_initial_data(lambda r: np.zeros_like(np.asarray(r, dtype=float)))


def test_zero_data(zero):
    u = np.linspace(-5, 5, 11)
    assert np.all(zero.a(u) == 0)
    assert free_wave_eval(zero, 3.0, 2.0) == 0.0
    assert third_order_source(zero, -1.0, 2.0) == 0.0
    assert green_convolve(zero, 50.0, 10.0) == 0.0
    assert asymptotic_coefficient(zero).c == 0.0


def test_generating_function_closed_form(gen):
    u = np.linspace(-7, 7, 2001)
    exact = -(u / 4) * (u * u + 1) * np.exp(-u * u)
    np.testing.assert_allclose(gen.a(u), exact, atol=1e-13)
    assert gen.a(0.0) == 0.0
    assert np.max(np.abs(gen.a(u) + gen.a(-u))) < 1e-12


def test_support_radius(gen):
    assert 5.0 < gen.u_max < 10.0
    u = np.linspace(0, gen.u_max, 4001)
    peak = np.max(np.abs(gen.da(u)))
    beyond = np.linspace(gen.u_max, gen.u_max + 5, 100)
    assert np.max(np.abs(gen.da(beyond))) < 1e-14 * peak


def test_round_trip_to_initial_data(gen):
    r = np.linspace(0.0, 8.0, 4001)
    np.testing.assert_allclose(free_wave_eval(gen, 0.0 * r, r), gaussian_cubed()(r), atol=1e-10)
    Ft, _ = free_wave_derivatives(gen, 0.0 * r[1:], r[1:])
    assert np.max(np.abs(Ft)) < 1e-10


def test_series_branch_is_continuous(gen):
    t = 0.7
    below = free_wave_eval(gen, t, 0.999e-2) / 0.999e-2
    above = free_wave_eval(gen, t, 1.001e-2) / 1.001e-2
    assert below == pytest.approx(above, rel=1e-6)


def test_huygens(gen):
    r = 10.0
    t = r + gen.u_max + 0.5
    assert abs(free_wave_eval(gen, t, r)) < 1e-13


@pytest.mark.parametrize("t, r", [(1.0, 0.5), (2.0, 1.3), (0.3, 2.0), (5.0, 4.0)])
def test_free_wave_solves_l1_equation(gen, t, r):
    h = 1e-3

    def F(tt, rr):
        return free_wave_eval(gen, tt, rr)

    Ftt = (F(t + h, r) - 2 * F(t, r) + F(t - h, r)) / h**2
    Frr = (F(t, r + h) - 2 * F(t, r) + F(t, r - h)) / h**2
    Fr = (F(t, r + h) - F(t, r - h)) / (2 * h)
    assert abs(Ftt - Frr - 2 * Fr / r + 2 * F(t, r) / r**2) < 1e-6


def test_source_rejects_reversed_null_coordinates(gen):
    with pytest.raises(ValueError):
        third_order_source(gen, 2.0, 1.0)


def test_source_vanishes_outside_support(gen):
    U = gen.u_max
    assert third_order_source(gen, U + 1, U + 3) == 0.0
    assert third_order_source(gen, -U - 5, -U - 1) == 0.0


def test_source_is_cubic(gen):
    scaled = gen.scaled(1.7)
    assert third_order_source(scaled, -0.4, 1.1) == pytest.approx(
        1.7**3 * third_order_source(gen, -0.4, 1.1), rel=1e-13)


def test_asymptotic_coefficient(gen):
    c = asymptotic_coefficient(gen).c
    assert c == pytest.approx(TAIL_COEFFICIENT_EXACT, abs=1e-4)
    assert c == pytest.approx(0.0737, abs=1e-4)
    assert asymptotic_coefficient(gen.scaled(-2.0)).c == pytest.approx(-8 * c, rel=1e-13)


def test_invert_rejects_slow_decay():
    with pytest.raises(ValueError, match="decay"):
        invert_initial_data(lambda r: np.asarray(r, dtype=float) ** 3 / (1 + np.asarray(r) ** 4))


def test_convolution_approaches_asymptotic_law(gen):
    c = asymptotic_coefficient(gen).c
    ratios = [green_convolve(gen, t, 10.0) / (c * 10 * t**-5.0) for t in (60.0, 100.0, 150.0)]
    # the approach to the leading law is monotone from above
    assert ratios[0] > ratios[1] > ratios[2] > 1.0
    assert ratios[2] - 1 < 0.03


def test_convolution_is_cubic(gen):
    base = green_convolve(gen, 40.0, 5.0)
    assert green_convolve(gen.scaled(0.5), 40.0, 5.0) == pytest.approx(base / 8, rel=1e-9)


def test_convolution_refinement(gen):
    coarse = green_convolve(gen, 60.0, 10.0, epsrel=1e-6)
    fine = green_convolve(gen, 60.0, 10.0, epsrel=1e-10)
    assert coarse == pytest.approx(fine, rel=1e-5)


def test_convolution_reports_unmet_tolerance(gen):
    with pytest.raises(QuadratureError) as err:
        green_convolve(gen, 60.0, 10.0, epsrel=1e-4, tolerance=1e-30)
    assert err.value.achieved > 0


def test_h_term_is_subleading(gen):
    plain = green_convolve(gen, 100.0, 10.0)
    with_h = green_convolve(gen, 100.0, 10.0, include_h=True)
    assert abs(with_h - plain) < 0.01 * abs(plain)
