"""Bundled acceptance checks shared by the test suite and the CLI.

Each check returns (passed: bool, detail: str).  A ProfileCache keeps
the ground-state solves shared across checks, since several criteria
reuse the same pairs.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np

from .exponents import ExponentPair, Regime
from .ground_state import solve_ground_state
from . import linearization, energy_constants
from .domain_green import (DomainModel, BoundaryPoint, green_ball, gamma_n,
                           harmonicity_residual, lemH_bound_check,
                           regular_part_ball)
from . import projection, reduced_energy

TALENTI_PAIRS = [(3, 5), (4, 3), (5, Fraction(7, 3))]
FAST_ASYM = (4, Fraction(5, 2))
SLOW_PAIR = (5, Fraction(7, 5))
ACCEPTANCE_PAIRS = TALENTI_PAIRS + [FAST_ASYM, SLOW_PAIR]


class ProfileCache:
    def __init__(self):
        self._profiles = {}
        self.solve_seconds = {}

    def get(self, n, p0):
        key = (n, p0)
        if key not in self._profiles:
            t0 = time.time()
            pair = ExponentPair.from_p0(n, p0)
            self._profiles[key] = solve_ground_state(pair)
            self.solve_seconds[key] = time.time() - t0
        return self._profiles[key]


def check_talenti(cache: ProfileCache):
    """Closed-form symmetric bubble, sup relative error and runtime."""
    worst = 0.0
    slowest = 0.0
    for n, p0 in TALENTI_PAIRS:
        prof = cache.get(n, p0)
        slowest = max(slowest, cache.solve_seconds[(n, p0)])
        r = np.linspace(0.0, 10.0, 801)
        exact = (1.0 + r ** 2 / (n * (n - 2))) ** (-(n - 2) / 2)
        worst = max(worst, float(np.max(np.abs(prof.eval_U(r) - exact) / exact)))
    ok = worst <= 1e-4 and slowest <= 10.0
    return ok, f"sup rel err {worst:.2e} (<=1e-4), slowest solve {slowest:.1f}s (<=10s)"


def check_constant_oracle(cache: ProfileCache):
    """A1 against the closed form at (4,3,3); A1=B1 on asymmetric pairs."""
    ec = energy_constants.compute_constants(cache.get(4, 3))
    oracle = 32.0 * math.pi ** 2 / 3.0
    gap0 = abs(ec.A1 - oracle) / oracle
    gaps = []
    for n, p0 in (FAST_ASYM, SLOW_PAIR):
        e = energy_constants.compute_constants(cache.get(n, p0))
        gaps.append(abs(e.A1 - e.B1) / e.A1)
    ok = gap0 <= 1e-3 and max(gaps) <= 1e-2
    return ok, (f"|A1-32pi^2/3|/A1 = {gap0:.2e} (<=1e-3), "
                f"max |A1-B1|/A1 = {max(gaps):.2e} (<=1e-2)")


def check_slow_identity(cache: ProfileCache):
    """b^{p0} = a ((n-2)p0-2)(n-(n-2)p0) for the slow-decay pair."""
    n, p0 = SLOW_PAIR
    prof = cache.get(n, p0)
    k = (n - 2) * float(p0)
    lhs = prof.tail_b ** float(p0)
    rhs = prof.tail_a * (k - 2.0) * (n - k)
    gap = abs(lhs - rhs) / lhs
    return gap <= 0.02, f"identity rel gap {gap:.2e} (<=2e-2)"


def check_decay_slopes(cache: ProfileCache):
    """Fitted tail exponents against the regime predictions."""
    worst = 0.0
    for n, p0 in ACCEPTANCE_PAIRS:
        prof = cache.get(n, p0)
        pred = prof.tail_exponent_U
        worst = max(worst, abs(prof.fitted_exponent_U - pred) / pred)
        worst = max(worst, abs(prof.fitted_exponent_V - (n - 2.0)) / (n - 2.0))
    return worst <= 0.01, f"max exponent rel gap {worst:.2e} (<=1e-2)"


def check_nondegeneracy(cache: ProfileCache):
    """Kernel residuals and mode dimensions (1,1,0)."""
    worst_res = 0.0
    dims_ok = True
    for n, p0 in ACCEPTANCE_PAIRS:
        prof = cache.get(n, p0)
        for kp in linearization.kernel_basis(prof):
            worst_res = max(worst_res,
                            linearization.linearized_residual(prof, kp))
        dims = tuple(linearization.mode_kernel_dimension(prof, ell)
                     for ell in range(3))
        dims_ok = dims_ok and dims == (1, 1, 0)
    ok = worst_res <= 1e-6 and dims_ok
    return ok, (f"max kernel residual {worst_res:.2e} (<=1e-6), "
                f"mode dims (1,1,0): {dims_ok}")


def check_green(rng=None):
    """Ball Green's function: symmetry, boundary vanishing, harmonicity,
    and the reflected-charge comparison along a d(x)-refinement."""
    if rng is None:
        rng = np.random.default_rng(42)
    n = 4
    ball = DomainModel(shape="ball", n=n, center=(0,) * n, R=1.0)
    sym = 0.0
    bvals = 0.0
    for _ in range(100):
        x = rng.normal(size=n)
        x *= 0.85 * rng.random() ** (1.0 / n) / np.linalg.norm(x)
        y = rng.normal(size=n)
        y *= 0.85 * rng.random() ** (1.0 / n) / np.linalg.norm(y)
        if np.linalg.norm(x - y) < 1e-3:
            continue
        sym = max(sym, abs(green_ball(ball, x, y) - green_ball(ball, y, x)))
        u = x / np.linalg.norm(x)
        bvals = max(bvals, abs(green_ball(ball, (1.0 - 1e-12) * u, y)))
    harm = 0.0
    for _ in range(20):
        x = rng.normal(size=n)
        x *= 0.5 * rng.random() / np.linalg.norm(x)
        y = rng.normal(size=n)
        y *= 0.5 * rng.random() / np.linalg.norm(y)
        harm = max(harm, harmonicity_residual(ball, x, y))
    rep = lemH_bound_check(ball, rng=rng)
    ok = sym <= 1e-10 and bvals <= 1e-10 and harm <= 1e-6 and rep["passes"]
    return ok, (f"symmetry {sym:.1e}, boundary {bvals:.1e} (<=1e-10), "
                f"harmonicity {harm:.1e} (<=1e-6), "
                f"reflected-charge levels {['%.3f' % v for v in rep['level_max_ratio']]} "
                f"bounded: {rep['passes']}")


def _ball_placements(pair, epsilons):
    n = pair.n
    ball = DomainModel(shape="ball", n=n, center=(0,) * n, R=1.0)
    x = np.zeros(n)
    x[0] = 1.0
    nu = np.zeros(n)
    nu[0] = -1.0
    bp = BoundaryPoint(x=x, nu=nu, d_to_other_component=math.inf)
    pls = [projection.make_placement(pair, bp, 1.0, 1.0, e) for e in epsilons]
    return ball, pls


def check_projection_bounds(cache: ProfileCache):
    """Maximum-principle ordering plus boundedness of the scaled R1."""
    n, p0 = FAST_ASYM
    prof = cache.get(n, p0)
    pair = prof.pair
    ball, pls = _ball_placements(pair, [0.1, 0.05, 0.025])
    order_ok = True
    detail_min = math.inf
    for pl in pls:
        targets = projection.default_targets(ball, pl)
        PU, PV = projection.project_bubble(ball, prof, pl, targets)
        U = projection.bubble_value(prof, pl, targets, "U")
        V = projection.bubble_value(prof, pl, targets, "V")
        m = min(PU.min(), PV.min(), (U - PU).min(), (V - PV).min())
        detail_min = min(detail_min, m)
        order_ok = order_ok and m >= -1e-12
    _, pls4 = _ball_placements(pair, [0.1, 0.05, 0.025, 0.0125])
    rep = projection.lemP_residual_sweep(ball, prof, pls4)
    ratios = [r["scaled_ratio"] for r in rep["rows"]]
    ok = order_ok and rep["passes"]
    return ok, (f"min of (PU, PV, U-PU, V-PV) = {detail_min:.2e} (>=0), "
                f"scaled R1 {['%.3f' % v for v in ratios]} bounded: {rep['passes']}")


def check_error_scaling(cache: ProfileCache):
    """External-norm slopes against the published exponents."""
    worst = 0.0
    slowest = 0.0
    ratios = np.geomspace(1e-3, 1e-1, 9)
    for n, p0 in (FAST_ASYM, SLOW_PAIR):
        prof = cache.get(n, p0)
        for side in ("U", "V"):
            t0 = time.time()
            slope, _ = projection.external_norm_scaling(prof, side, ratios)
            slowest = max(slowest, time.time() - t0)
            pred = projection.predicted_external_slope(prof.pair, side)
            worst = max(worst, abs(slope - pred) / pred)
    ok = worst <= 0.05 and slowest <= 60.0
    return ok, (f"max slope rel gap {worst:.2e} (<=5e-2), "
                f"slowest sweep {slowest:.1f}s (<=60s)")


def check_reduced_energy(cache: ProfileCache):
    """Closed-form inner minimizer against analytic gradient and grid."""
    n, p0 = FAST_ASYM
    prof = cache.get(n, p0)
    pair = ExponentPair(n=n, p0=p0,
                        q0=prof.pair.q0, alpha=1.0, beta=1.0, epsilon=0.01)
    ec = energy_constants.compute_constants(prof)
    co = reduced_energy.assemble_coefficients(ec, pair,
                                              (prof.tail_a, prof.tail_b))
    a_val, g_val = 2.0, 3.0
    lam, t, definite = reduced_energy.inner_critical_point(co, a_val, g_val)
    dl, dt = reduced_energy._inner_gradient(co, a_val, g_val, lam, t)
    scale = co.c6 * a_val
    grad_res = max(abs(dl) * lam, abs(dt) * t) / scale
    gl, gt, _ = reduced_energy.grid_search_minimum(co, a_val, g_val, lam, t)
    grid_gap = max(abs(gl - lam) / lam, abs(gt - t) / t)
    try:
        reduced_energy.inner_critical_point(co, a_val, 0.0)
        g_rejected = False
    except reduced_energy.NoInteriorMinimumError:
        g_rejected = True
    # weight rescaling a -> c a scales both a(xi) and <grad a, nu> by c
    lam2, t2, _ = reduced_energy.inner_critical_point(co, 5 * a_val, 5 * g_val)
    inv = max(abs(lam2 - lam) / lam, abs(t2 - t) / t)
    ok = (grad_res <= 1e-12 and grid_gap <= 1e-6 and g_rejected
          and inv <= 1e-12 and definite)
    return ok, (f"stationarity {grad_res:.1e} (<=1e-12), grid gap "
                f"{grid_gap:.1e} (<=1e-6), g<=0 rejected: {g_rejected}, "
                f"rescale invariance {inv:.1e} (<=1e-12)")


def figure_annulus(n=4):
    return DomainModel(shape="shifted_annulus", n=n, center=(3,) + (0,) * (n - 1),
                       r_in=1.0, r_out=2.0, weight_exponents=(2,))


def check_end_to_end(cache: ProfileCache):
    """Two-bubble configuration on the annulus template."""
    n, p0 = FAST_ASYM
    prof = cache.get(n, p0)
    pair = ExponentPair(n=n, p0=p0, q0=prof.pair.q0,
                        alpha=1.0, beta=1.0, epsilon=0.01)
    ec = energy_constants.compute_constants(prof)
    co = reduced_energy.assemble_coefficients(ec, pair,
                                              (prof.tail_a, prof.tail_b))
    eps = 0.01
    config, diag = reduced_energy.find_configuration(
        figure_annulus(n), co, pair, kappa=2, epsilon=eps)
    x1s = sorted(round(b["xi"][0]) for b in diag["bubbles"])
    pts_ok = x1s == [1, 4]
    pd_ok = all(b["hessian_definite"] for b in diag["bubbles"])
    rate = (n - 1) / (n - 2)
    rate_gap = max(abs(b["delta_pred"] / (eps ** rate * b["Lambda_star"]) - 1.0)
                   for b in diag["bubbles"])
    ok = pts_ok and pd_ok and rate_gap <= 1e-12
    return ok, (f"points x1={x1s} (expect [1, 4]), Hessians PD: {pd_ok}, "
                f"delta rate gap {rate_gap:.1e} (<=1e-12)")


ALL_CHECKS = [
    ("1 closed-form bubble oracle", check_talenti),
    ("2 energy-constant oracle", check_constant_oracle),
    ("3 slow-decay tail identity", check_slow_identity),
    ("4 decay slopes", check_decay_slopes),
    ("5 non-degeneracy", check_nondegeneracy),
    ("6 ball Green function", lambda cache: check_green()),
    ("7 projection bounds", check_projection_bounds),
    ("8 error-component scaling", check_error_scaling),
    ("9 reduced energy", check_reduced_energy),
    ("10 end-to-end annulus", check_end_to_end),
]


def run_all(cache: ProfileCache = None):
    if cache is None:
        cache = ProfileCache()
    results = []
    for name, fn in ALL_CHECKS:
        passed, detail = fn(cache)
        results.append({"name": name, "passed": bool(passed), "detail": detail})
    return results
