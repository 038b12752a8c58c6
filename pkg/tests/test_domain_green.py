import json
import math

import numpy as np
import pytest

from bubble_lab.domain_green import (DomainModel, DomainError,
                                     OutsideCollarError, BoundaryPoint,
                                     gamma_n, green_ball, regular_part_ball,
                                     harmonicity_residual, lemH_bound_check,
                                     boundary_critical_points,
                                     lift_to_full_domain)


def ball(n=4, R=1.0):
    return DomainModel(shape="ball", n=n, center=(0,) * n, R=R)


def annulus(n=4):
    return DomainModel(shape="shifted_annulus", n=n,
                       center=(3,) + (0,) * (n - 1),
                       r_in=1.0, r_out=2.0, weight_exponents=(2,))


def test_gamma_n():
    assert gamma_n(3) == pytest.approx(1.0 / (4 * math.pi))
    assert gamma_n(4) == pytest.approx(1.0 / (4 * math.pi ** 2))


def test_model_validation():
    with pytest.raises(DomainError):
        DomainModel(shape="cube", n=4, center=(0, 0, 0, 0), R=1.0)
    with pytest.raises(DomainError):
        DomainModel(shape="ball", n=4, center=(0, 0, 0), R=1.0)
    with pytest.raises(DomainError):
        DomainModel(shape="shifted_annulus", n=4, center=(3, 0, 0, 0),
                    r_in=2.0, r_out=1.0)
    # weighted coordinate must stay positive on the closure
    with pytest.raises(DomainError):
        DomainModel(shape="ball", n=4, center=(0.5, 0, 0, 0), R=1.0,
                    weight_exponents=(2,))


def test_signed_distance_and_projection():
    b = ball()
    assert b.boundary_distance([0.4, 0, 0, 0]) == pytest.approx(0.6)
    assert b.boundary_distance([1.2, 0, 0, 0]) == pytest.approx(-0.2)
    x0, nu = b.boundary_project([0.9, 0, 0, 0])
    assert np.allclose(x0, [1, 0, 0, 0])
    assert np.allclose(nu, [-1, 0, 0, 0])
    a = annulus()
    assert a.boundary_distance([4.5, 0, 0, 0]) == pytest.approx(0.5)
    x0, nu = a.boundary_project([4.1, 0, 0, 0])
    assert np.allclose(x0, [4, 0, 0, 0])
    assert np.allclose(nu, [1, 0, 0, 0])  # inward from the inner sphere


def test_reflect_both_sides():
    b = ball()
    inside = np.array([0.9, 0, 0, 0])
    outside = np.array([1.1, 0, 0, 0])
    assert np.allclose(b.reflect(inside), [1.1, 0, 0, 0])
    assert np.allclose(b.reflect(outside), [0.9, 0, 0, 0])
    assert np.allclose(b.reflect(b.reflect(inside)), inside)
    with pytest.raises(OutsideCollarError):
        b.reflect([0.2, 0, 0, 0])   # deeper than the collar
    a = annulus()
    assert np.allclose(a.reflect([4.1, 0, 0, 0]), [3.9, 0, 0, 0])


def test_boundary_point_normal_check():
    with pytest.raises(DomainError):
        BoundaryPoint(x=np.array([1.0, 0, 0, 0]),
                      nu=np.array([2.0, 0, 0, 0]),
                      d_to_other_component=math.inf)


def test_green_symmetry_and_positivity():
    b = ball()
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.normal(size=4)
        x *= 0.8 * rng.random() / np.linalg.norm(x)
        y = rng.normal(size=4)
        y *= 0.8 * rng.random() / np.linalg.norm(y)
        if np.linalg.norm(x - y) < 1e-2:
            continue
        gxy = green_ball(b, x, y)
        assert gxy == pytest.approx(green_ball(b, y, x), abs=1e-12)
        assert gxy > 0
        assert regular_part_ball(b, x, y) > 0


def test_green_scaling():
    # G scales like R^{2-n} under dilation of both arguments
    n = 4
    small, big = ball(n, 1.0), ball(n, 2.0)
    x = np.array([0.3, 0.1, 0, 0])
    y = np.array([-0.2, 0.4, 0, 0])
    assert green_ball(big, 2 * x, 2 * y) == \
        pytest.approx(green_ball(small, x, y) / 4.0, rel=1e-12)


def test_harmonicity():
    b = ball()
    x = np.array([0.3, 0.2, 0.0, 0.1])
    y = np.array([-0.1, 0.4, 0.2, 0.0])
    assert harmonicity_residual(b, x, y) < 1e-6


def test_reflected_charge_levels():
    rep = lemH_bound_check(ball(), rng=np.random.default_rng(0))
    assert rep["passes"]
    assert rep["H_min"] >= 0
    assert len(rep["level_max_ratio"]) == 4


def test_green_requires_ball():
    with pytest.raises(DomainError):
        green_ball(annulus(), [3.5, 0, 0, 0], [3.6, 0, 0, 0])


def test_boundary_critical_points_annulus():
    pts = boundary_critical_points(annulus())
    assert len(pts) == 4
    firsts = [round(bp.x[0]) for bp, _ in pts]
    assert firsts == [1, 2, 4, 5]
    tagged = [round(bp.x[0]) for bp, ok in pts if ok]
    assert tagged == [1, 4]
    for bp, _ in pts:
        assert bp.d_to_other_component == pytest.approx(1.0)


def test_boundary_critical_points_edge_cases():
    const = DomainModel(shape="ball", n=4, center=(0, 0, 0, 0), R=1.0)
    assert boundary_critical_points(const) == []
    multi = DomainModel(shape="shifted_annulus", n=4, center=(3, 3, 0, 0),
                        r_in=1.0, r_out=2.0, weight_exponents=(1, 1))
    with pytest.raises(DomainError):
        boundary_critical_points(multi)


def test_lift_to_full_domain():
    a = annulus()
    # model x1 comes from a 3-block of the full space (k_1 = 2)
    y = np.array([3.0, 0.0, 0.0, 1.5, 0.0, 0.0])
    val = lift_to_full_domain(a, lambda x: x[0], y, partition=(2,))
    assert val == pytest.approx(3.0)
    with pytest.raises(DomainError):
        lift_to_full_domain(a, lambda x: 0.0,
                            np.array([9.0, 0, 0, 0, 0, 0]), partition=(2,))


def test_from_json_round_trip(tmp_path):
    path = tmp_path / "dom.json"
    path.write_text(json.dumps({"shape": "shifted_annulus", "n": 4,
                                "center": [3, 0, 0, 0], "radii": [1.0, 2.0],
                                "weight_exponents": [2]}))
    d = DomainModel.from_json(str(path))
    assert d.r_in == 1.0 and d.r_out == 2.0
    assert d.weight([4.0, 0, 0, 0]) == pytest.approx(16.0)
    assert np.allclose(d.weight_gradient([4.0, 0, 0, 0]), [8.0, 0, 0, 0])
