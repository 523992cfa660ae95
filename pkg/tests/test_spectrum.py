import numpy as np
import pytest

from skyrmion.spectrum import (
    _riccati_integrate,
    NodeError,
    PotentialTable,
    effective_potential,
    find_qnm,
    hankel_log_derivative,
    integrate_from_origin,
    integrate_riccati_backward,
    matching_residual,
    potential_of,
    predicted_linear_exponent,
    zero_energy_nodes,
)


def free_regular_log_derivative(k, r):
    # r j1(kr) with j1 the spherical Bessel function
    z = k * r
    psi = np.sin(z) / z - np.cos(z)
    dpsi = k * (np.cos(z) / z - np.sin(z) / z**2 + np.sin(z))
    return dpsi / psi


def test_vacuum_potential_is_zero():
    assert potential_of(0.0) == 0.0


def test_potential_constants(profile, potential):
    assert potential.value_at_origin == pytest.approx(float(potential_of(profile.b)), abs=1e-12)
    assert potential.value_at_origin == pytest.approx(-12.1, abs=0.05)
    assert potential(40.0) * 40.0**6 == pytest.approx(-4 * profile.c**2, rel=0.05)


def test_potential_is_continuous_at_switch(potential):
    rs = potential.r_switch
    inside = potential(rs)
    outside = potential(rs * (1 + 1e-12))
    assert abs(inside - outside) <= 1e-8 * abs(inside)


def test_effective_potential_rejects_missing_profile():
    with pytest.raises(ValueError):
        effective_potential(None)


def test_free_regular_solution():
    V0 = PotentialTable.zero()
    g = integrate_from_origin(1.0, 0.0, 8.0, V0)
    assert g == pytest.approx(free_regular_log_derivative(1.0, 8.0), abs=1e-8)


def test_phase_decouples_for_real_k():
    V0 = PotentialTable.zero()
    g = integrate_from_origin(1.0, 0.0, 3.0, V0, method="amplitude_phase")
    assert g.imag == 0.0
    assert g.real == pytest.approx(free_regular_log_derivative(1.0, 3.0), abs=1e-8)


def test_amplitude_phase_reports_nodes():
    V0 = PotentialTable.zero()
    # r j1(r) vanishes at r = 4.4934
    with pytest.raises(NodeError) as err:
        integrate_from_origin(1.0, 0.0, 8.0, V0, method="amplitude_phase")
    assert err.value.r_node == pytest.approx(4.4934, abs=1e-3)


def test_two_formulations_agree(potential):
    a = integrate_from_origin(0.61, 0.26, 8.0, potential, method="complex")
    b = integrate_from_origin(0.61, 0.26, 8.0, potential, method="amplitude_phase")
    assert abs(a - b) < 1e-10


def test_left_solution_is_self_convergent(potential):
    a = integrate_from_origin(0.61, 0.26, 8.0, potential, r_start=1e-3)
    b = integrate_from_origin(0.61, 0.26, 8.0, potential, r_start=5e-4)
    assert abs(a - b) < 1e-8


@pytest.mark.parametrize("seed", ["series", "hankel"])
def test_free_riccati_matches_hankel(seed):
    V0 = PotentialTable.zero()
    k = complex(0.61, -0.26)
    g = integrate_riccati_backward(k.real, -k.imag, 40.0, 8.0, V0, seed=seed)
    assert abs(g - hankel_log_derivative(k, 8.0)) < 1e-8


def test_real_k_free_riccati():
    V0 = PotentialTable.zero()
    g = integrate_riccati_backward(0.8, 0.0, 40.0, 8.0, V0, seed="hankel")
    assert abs(g.imag - hankel_log_derivative(0.8, 8.0).imag) < 1e-10


def test_riccati_conjugation_symmetry(potential):
    k = complex(0.61, -0.26)
    seed = hankel_log_derivative(k, 30.0)
    g = _riccati_integrate(k, seed, 30.0, 8.0, potential)
    g_conj = _riccati_integrate(np.conj(k), np.conj(seed), 30.0, 8.0, potential)
    assert abs(g_conj - np.conj(g)) < 1e-12 * abs(g)


def test_regular_solution_conjugation_symmetry(potential):
    g = integrate_from_origin(0.61, 0.26, 8.0, potential)
    assert abs(integrate_from_origin(0.61, -0.26, 8.0, potential) - np.conj(g)) < 1e-12 * abs(g)


def test_outgoing_solution_is_independent_of_seed_radius(potential):
    gs = [integrate_riccati_backward(0.61, 0.26, R, 8.0, potential) for R in (30.0, 40.0, 60.0)]
    assert max(abs(g - gs[0]) for g in gs) < 1e-6


def test_mismatch_away_from_modes(potential):
    assert 0.1 < abs(matching_residual(5.0, 0.01, potential)) < 100


def test_fundamental_mode(fundamental_mode, potential):
    m = fundamental_mode
    assert 0.600 <= m.Omega <= 0.620
    assert 0.250 <= m.Gamma <= 0.270
    assert m.Gamma > 0
    assert abs(matching_residual(m.Omega, m.Gamma, potential)) < 1e-6


def test_mode_is_a_fixed_point(fundamental_mode, potential):
    again = find_qnm(potential, guess=(fundamental_mode.Omega, fundamental_mode.Gamma))
    assert abs(again.k - fundamental_mode.k) < 1e-8


@pytest.mark.parametrize("r0, R", [(6.0, 40.0), (10.0, 60.0)])
def test_mode_is_robust_to_matching_setup(fundamental_mode, potential, r0, R):
    other = find_qnm(potential, r0=r0, R=R)
    assert abs(other.k - fundamental_mode.k) < 1e-4


@pytest.mark.parametrize("r0", [5.0, 8.0, 12.0])
def test_mismatch_vanishes_at_every_matching_point(fundamental_mode, potential, r0):
    m = fundamental_mode
    assert abs(matching_residual(m.Omega, m.Gamma, potential, r0=r0)) < 1e-5


def test_no_bound_states(potential):
    assert zero_energy_nodes(potential) == 0


@pytest.mark.parametrize("l, beta, gamma", [(1, 6, 8), (0, 4, 4), (2, 5, 9)])
def test_linear_exponent(l, beta, gamma):
    assert predicted_linear_exponent(l, beta) == gamma


def test_linear_exponent_needs_fast_decay():
    with pytest.raises(ValueError):
        predicted_linear_exponent(1, 3)
