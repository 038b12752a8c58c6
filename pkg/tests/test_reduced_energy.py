import math
from fractions import Fraction

import numpy as np
import pytest

from bubble_lab.exponents import ExponentPair, UnsupportedRegimeError
from bubble_lab.energy_constants import compute_constants
from bubble_lab.domain_green import DomainModel
from bubble_lab.reduced_energy import (assemble_coefficients, evaluate_J,
                                       inner_critical_point, inner_energy,
                                       grid_search_minimum, Configuration,
                                       find_configuration,
                                       slow_interaction_integral,
                                       MissingConstantError,
                                       NoInteriorMinimumError,
                                       InsufficientCriticalPointsError)


@pytest.fixture(scope="module")
def coeffs_fast(profile_fast):
    pair = ExponentPair.from_p0(4, Fraction(5, 2), alpha=1.0, beta=1.0,
                                epsilon=0.01)
    ec = compute_constants(profile_fast)
    return assemble_coefficients(ec, pair,
                                 (profile_fast.tail_a, profile_fast.tail_b))


def annulus():
    return DomainModel(shape="shifted_annulus", n=4, center=(3, 0, 0, 0),
                       r_in=1.0, r_out=2.0, weight_exponents=(2,))


def test_coefficient_identities(coeffs_fast):
    # c1 = c4 = 2 A1/n and c6/c2 = -(n-2)/(n-1)
    assert coeffs_fast.c1 == coeffs_fast.c4
    assert coeffs_fast.c6 / coeffs_fast.c2 == pytest.approx(-2.0 / 3.0,
                                                            rel=1e-14)
    assert coeffs_fast.m_exponent == 2.0
    assert coeffs_fast.interaction == coeffs_fast.c5
    assert coeffs_fast.c5 > 0 and coeffs_fast.c6 > 0


def test_log_pair_rejected(profile_talenti):
    pair = ExponentPair.from_p0(4, 2)
    ec = compute_constants(profile_talenti)
    with pytest.raises(UnsupportedRegimeError):
        assemble_coefficients(ec, pair, (8.0, 8.0))


def test_slow_needs_interaction(profile_slow):
    pair = profile_slow.pair
    ec = compute_constants(profile_slow)
    with pytest.raises(MissingConstantError):
        assemble_coefficients(ec, pair,
                              (profile_slow.tail_a, profile_slow.tail_b))
    I = slow_interaction_integral(profile_slow, 20.0)
    assert I > 0
    co = assemble_coefficients(ec, pair,
                               (profile_slow.tail_a, profile_slow.tail_b),
                               interaction_integral=I)
    assert co.interaction == co.c5_prime
    assert math.isnan(co.c5)


def test_slow_interaction_regime_guard(profile_fast):
    with pytest.raises(UnsupportedRegimeError):
        slow_interaction_integral(profile_fast, 10.0)


def test_closed_form_critical_point(coeffs_fast):
    a_val, g_val = 2.0, 3.0
    lam, t, definite = inner_critical_point(coeffs_fast, a_val, g_val)
    assert definite
    assert t == pytest.approx(coeffs_fast.c6 * a_val
                              / (coeffs_fast.c4 * g_val))
    # halving the slope of the weight doubles both scales
    lam2, t2, _ = inner_critical_point(coeffs_fast, a_val, g_val / 2)
    assert t2 == pytest.approx(2 * t, rel=1e-14)
    assert lam2 == pytest.approx(2 * lam, rel=1e-14)


def test_nonpositive_slope_rejected(coeffs_fast):
    with pytest.raises(NoInteriorMinimumError):
        inner_critical_point(coeffs_fast, 1.0, 0.0)
    with pytest.raises(NoInteriorMinimumError):
        inner_critical_point(coeffs_fast, 1.0, -2.0)


def test_minimum_against_grid(coeffs_fast):
    a_val, g_val = 2.0, 3.0
    lam, t, _ = inner_critical_point(coeffs_fast, a_val, g_val)
    gl, gt, gv = grid_search_minimum(coeffs_fast, a_val, g_val, lam, t)
    assert gl == pytest.approx(lam, rel=1e-6)
    assert gt == pytest.approx(t, rel=1e-6)
    assert gv <= inner_energy(coeffs_fast, a_val, g_val, lam, t) + 1e-12


def test_energy_blows_up_at_extremes(coeffs_fast):
    a_val, g_val = 2.0, 3.0
    lam, t, _ = inner_critical_point(coeffs_fast, a_val, g_val)
    f0 = inner_energy(coeffs_fast, a_val, g_val, lam, t)
    for bad_lam in (1e-6, 1e6):
        assert inner_energy(coeffs_fast, a_val, g_val, bad_lam, t) > f0
    for bad_t in (1e-8, 1e8):
        assert inner_energy(coeffs_fast, a_val, g_val, lam, bad_t) > f0


def test_configuration_validation():
    with pytest.raises(ValueError):
        Configuration(xi_list=((1.0, 0.0), (1.0, 0.0)),
                      Lambda_list=(1.0, 1.0), t_list=(1.0, 1.0),
                      epsilon=0.01)
    with pytest.raises(ValueError):
        Configuration(xi_list=((1.0, 0.0),), Lambda_list=(-1.0,),
                      t_list=(1.0,), epsilon=0.01)


def test_evaluate_J_additivity(coeffs_fast):
    # a kappa=2 configuration contributes the sum of its single bubbles
    c1 = Configuration(xi_list=((1.0, 0.0, 0.0, 0.0),),
                       Lambda_list=(0.5,), t_list=(1.0,), epsilon=0.01)
    c2 = Configuration(xi_list=((4.0, 0.0, 0.0, 0.0),),
                       Lambda_list=(0.7,), t_list=(2.0,), epsilon=0.01)
    both = Configuration(xi_list=c1.xi_list + c2.xi_list,
                         Lambda_list=(0.5, 0.7), t_list=(1.0, 2.0),
                         epsilon=0.01)
    w1, w2 = (1.0, 2.0), (16.0, 8.0)
    J1, _ = evaluate_J(coeffs_fast, [w1], c1)
    J2, _ = evaluate_J(coeffs_fast, [w2], c2)
    J12, margin = evaluate_J(coeffs_fast, [w1, w2], both)
    assert J12 == pytest.approx(J1 + J2, rel=1e-14)
    assert margin == pytest.approx(0.01 ** 1.25)


def test_find_configuration_annulus(coeffs_fast):
    pair = ExponentPair.from_p0(4, Fraction(5, 2), alpha=1.0, beta=1.0,
                                epsilon=0.01)
    config, diag = find_configuration(annulus(), coeffs_fast, pair,
                                      kappa=2, epsilon=0.01)
    assert len(config.xi_list) == 2
    assert sorted(round(x[0]) for x in config.xi_list) == [1, 4]
    for b in diag["bubbles"]:
        assert b["hessian_definite"]
        assert b["delta_pred"] == pytest.approx(
            0.01 ** 1.5 * b["Lambda_star"], rel=1e-14)
    with pytest.raises(InsufficientCriticalPointsError):
        find_configuration(annulus(), coeffs_fast, pair, kappa=3,
                           epsilon=0.01)
