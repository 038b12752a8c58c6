import math

import numpy as np
import pytest

from bubble_lab.domain_green import DomainModel, BoundaryPoint
from bubble_lab.exponents import concentration_exponent
from bubble_lab.projection import (BubblePlacement, make_placement,
                                   bubble_value, poisson_extension,
                                   project_bubble, remainder_R1,
                                   default_targets, external_norm_scaling,
                                   predicted_external_slope,
                                   project_bubble_mc)


def unit_ball(n=4):
    return DomainModel(shape="ball", n=n, center=(0,) * n, R=1.0)


def axis_bp(n=4):
    x = np.zeros(n)
    x[0] = 1.0
    nu = np.zeros(n)
    nu[0] = -1.0
    return BoundaryPoint(x=x, nu=nu, d_to_other_component=math.inf)


def test_placement_derived_quantities(profile_fast):
    pair = profile_fast.pair
    pl = make_placement(pair, axis_bp(), t=2.0, Lambda=0.5, epsilon=0.1)
    rate = concentration_exponent(pair)
    assert pl.eta == pytest.approx(0.2)
    assert pl.delta == pytest.approx(0.5 * 0.1 ** rate)
    assert pl.xi_eps[0] == pytest.approx(1.0 - 0.2)
    # the concentration scale separates from the distance scale
    assert pl.delta < pl.eta


def test_placement_validation(profile_fast):
    pair = profile_fast.pair
    with pytest.raises(ValueError):
        make_placement(pair, axis_bp(), t=-1.0, Lambda=1.0, epsilon=0.1)
    with pytest.raises(ValueError):
        BubblePlacement(xi_boundary=axis_bp(), t=1.0, Lambda=1.0,
                        epsilon=0.1, rate=0.5)


def test_bubble_value_at_center(profile_fast):
    pair = profile_fast.pair
    pl = make_placement(pair, axis_bp(), 1.0, 1.0, 0.05)
    val = bubble_value(profile_fast, pl, pl.xi_eps[None, :], "U")[0]
    expect = pl.delta ** (-pair.n / (float(pair.q0) + 1))
    assert val == pytest.approx(expect, rel=1e-10)
    vv = bubble_value(profile_fast, pl, pl.xi_eps[None, :], "V")[0]
    assert vv == pytest.approx(
        pl.delta ** (-pair.n / (float(pair.p0) + 1)) * profile_fast.v0,
        rel=1e-10)


def test_poisson_extension_of_constant(profile_fast):
    # harmonic extension of constant boundary data is that constant
    ball = unit_ball()
    pl = make_placement(profile_fast.pair, axis_bp(), 1.0, 1.0, 0.05)
    for x in ([0.0, 0, 0, 0], [0.5, 0.3, 0, 0], [0.95, 0, 0, 0]):
        val = poisson_extension(ball, lambda s: np.full(np.shape(s), 2.5),
                                pl.xi_eps, np.asarray(x, dtype=float))
        assert val == pytest.approx(2.5, rel=1e-8)


def test_projection_ordering(profile_fast):
    ball = unit_ball()
    pl = make_placement(profile_fast.pair, axis_bp(), 1.0, 1.0, 0.05)
    targets = default_targets(ball, pl)
    PU, PV = project_bubble(ball, profile_fast, pl, targets)
    U = bubble_value(profile_fast, pl, targets, "U")
    V = bubble_value(profile_fast, pl, targets, "V")
    assert np.all(PU >= -1e-12) and np.all(PU <= U + 1e-12)
    assert np.all(PV >= -1e-12) and np.all(PV <= V + 1e-12)


def test_remainder_is_subleading(profile_fast):
    # |R1| must be small against the subtracted image term
    ball = unit_ball()
    pair = profile_fast.pair
    pl = make_placement(pair, axis_bp(), 1.0, 1.0, 0.05)
    x = np.array([0.4, 0, 0, 0])
    r1 = remainder_R1(ball, profile_fast, pl, x)
    image_scale = profile_fast.tail_a \
        * pl.delta ** (pair.n / (float(pair.p0) + 1)) \
        * np.linalg.norm(x - pl.xi_eps) ** (2.0 - pair.n)
    assert abs(r1) < 0.2 * image_scale


def test_default_targets_inside(profile_fast):
    ball = unit_ball()
    pl = make_placement(profile_fast.pair, axis_bp(), 1.0, 1.0, 0.05)
    targets = default_targets(ball, pl)
    assert len(targets) >= 6
    for x in targets:
        assert ball.contains(x)
    # the random fill-ins stay clear of the concentration core
    dists = [np.linalg.norm(x - pl.xi_eps) for x in targets[6:]]
    assert all(d > 20 * pl.delta for d in dists)


def test_mc_cross_check(profile_fast):
    ball = unit_ball()
    pl = make_placement(profile_fast.pair, axis_bp(), 1.0, 1.0, 0.1)
    x = np.array([0.2, 0, 0, 0])
    quad_val = project_bubble(ball, profile_fast, pl, x[None, :])[0][0]
    mc_val = project_bubble_mc(ball, profile_fast, pl, x,
                               n_samples=200_000,
                               rng=np.random.default_rng(11))
    assert mc_val == pytest.approx(quad_val, rel=2e-2)


def test_narrow_ratio_span_rejected(profile_fast):
    with pytest.raises(ValueError):
        external_norm_scaling(profile_fast, "U", np.geomspace(1e-2, 5e-2, 5))
    with pytest.raises(ValueError):
        external_norm_scaling(profile_fast, "W", np.geomspace(1e-3, 1e-1, 5))


def test_predicted_slopes(profile_fast, profile_slow):
    # FAST n=4: q0 = 7/3 so the U-side exponent is 2 q0 - 4 q0/(3 q0 + 3)
    pair = profile_fast.pair
    q0 = float(pair.q0)
    assert predicted_external_slope(pair, "U") == \
        pytest.approx(2 * q0 - 4 * q0 / (q0 + 1))
    s = profile_slow.pair
    assert predicted_external_slope(s, "U") == \
        pytest.approx(5 * 1.4 * float(s.q0) / (float(s.q0) + 1))
    assert predicted_external_slope(s, "V") == \
        pytest.approx(1.4 * 3 - 5 * 1.4 / 2.4)
