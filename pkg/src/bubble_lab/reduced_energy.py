"""Finite-dimensional reduced energy and its critical points.

The reduced energy of a kappa-bubble configuration splits per bubble:

    J = sum_i (c1 + c2 eps log eps) a(xi_i)
        + eps [ c3 a(xi_i) + c4 <grad a, nu> t_i
                + c5 a(xi_i) (Lambda_i / 2 t_i)^m - c6 a(xi_i) log Lambda_i ]

with m = n-2 in the FAST regime and (n-2)p0 - 2 in the SLOW regime
(where c5 is replaced by the placement-frozen c5').  For a boundary
point with positive inward weight derivative g = <grad a, nu> the inner
minimization in (Lambda, t) has the closed form

    t* = c6 a / (c4 g),      (Lambda*/2t*)^m = c6 / (m c5),

with an always-positive-definite 2x2 Hessian; g <= 0 pushes the
minimum out to t = infinity and is rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exponents import ExponentPair, Regime, UnsupportedRegimeError, \
    concentration_exponent
from .energy_constants import EnergyConstants
from .domain_green import DomainModel, boundary_critical_points, gamma_n
from .ground_state import RadialProfile


class MissingConstantError(ValueError):
    """A regime-required constant (B2 or I_i) is unavailable."""


class NoInteriorMinimumError(ArithmeticError):
    """Inner minimization escapes to t -> infinity (condition (a) fails)."""


class InsufficientCriticalPointsError(RuntimeError):
    """Domain offers fewer condition-(a) points than requested bubbles."""


@dataclass(frozen=True)
class ReducedCoefficients:
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float          # FAST interaction constant, NaN in SLOW
    c6: float
    c5_prime: float    # SLOW interaction constant, NaN in FAST
    m_exponent: float  # n-2 (FAST) or (n-2)p0-2 (SLOW)
    sigma_margin: float = 1.0

    @property
    def interaction(self) -> float:
        return self.c5 if math.isfinite(self.c5) else self.c5_prime


@dataclass(frozen=True)
class Configuration:
    xi_list: tuple
    Lambda_list: tuple
    t_list: tuple
    epsilon: float

    def __post_init__(self):
        if min(self.Lambda_list) <= 0 or min(self.t_list) <= 0:
            raise ValueError("scales and offsets must be positive")
        pts = [tuple(np.asarray(x, dtype=float)) for x in self.xi_list]
        if len(set(pts)) != len(pts):
            raise ValueError("boundary points must be pairwise distinct")


def slow_interaction_integral(profile: RadialProfile, ratio: float) -> float:
    """Placement-frozen interaction integral of the SLOW regime.

    I = int_{|z| < L} V^{p0}(|z|) |z + 2 L nu|^{-(n-(n-2)p0)} dz with
    L = eta/delta; bounded uniformly in L because the kernel exponent
    n - (n-2)p0 lies in (0, 2).
    """
    pair = profile.pair
    if pair.regime is not Regime.SLOW:
        raise UnsupportedRegimeError("interaction integral is SLOW-only")
    n, p0 = pair.n, float(pair.p0)
    s_exp = n - (n - 2) * p0
    L = float(ratio)
    from .energy_constants import sphere_area
    tt, wt = np.polynomial.legendre.leggauss(48)
    theta = 0.5 * math.pi * (tt + 1.0)
    wth = 0.5 * math.pi * wt
    r_edges = np.geomspace(1e-6, L, 600)
    r_mid = 0.5 * (r_edges[1:] + r_edges[:-1])
    dr = np.diff(r_edges)
    Vp = profile.eval_V(r_mid) ** p0
    ang = np.zeros_like(r_mid)
    for th, w in zip(theta, wth):
        dist2 = r_mid ** 2 + 4 * L * L + 4 * L * r_mid * math.cos(th)
        ang += w * math.sin(th) ** (n - 2) * dist2 ** (-s_exp / 2)
    return float(sphere_area(n - 1) * np.sum(Vp * r_mid ** (n - 1) * ang * dr))


def assemble_coefficients(constants: EnergyConstants, pair: ExponentPair,
                          tail, interaction_integral: float = None,
                          sigma_margin: float = 1.0) -> ReducedCoefficients:
    """Bundle c1..c6 from the energy constants and tail amplitudes.

    tail is (a, b); interaction_integral supplies I_i in the SLOW
    regime (the FAST regime uses B2 instead).
    """
    if pair.regime is Regime.LOG:
        raise UnsupportedRegimeError("no reduced energy at the LOG boundary")
    n, p0, q0 = pair.n, float(pair.p0), float(pair.q0)
    A1, B1 = constants.A1, constants.B1
    S = A1 / (q0 + 1) ** 2 + B1 / (p0 + 1) ** 2
    _, b = tail
    g = gamma_n(n)
    if pair.regime is Regime.FAST:
        if not constants.B2_defined or not math.isfinite(constants.B2):
            raise MissingConstantError("B2 needed in the FAST regime")
        c5, c5p = b * constants.B2 / g, math.nan
        m = float(n - 2)
    else:
        if interaction_integral is None:
            raise MissingConstantError(
                "SLOW regime needs the interaction integral I_i")
        c5, c5p = math.nan, b * interaction_integral / g
        m = (n - 2) * p0 - 2.0
    c3 = -(pair.beta * A1 / (q0 + 1) ** 2 + pair.alpha * B1 / (p0 + 1) ** 2) \
        + (constants.A3 / (q0 + 1) + constants.B3 / (p0 + 1))
    return ReducedCoefficients(
        c1=2 * A1 / n,
        c2=-(n * (n - 1) / (n - 2)) * S,
        c3=c3,
        c4=2 * A1 / n,
        c5=c5,
        c6=n * S,
        c5_prime=c5p,
        m_exponent=m,
        sigma_margin=sigma_margin)


def evaluate_J(coeffs: ReducedCoefficients, weight_data, config: Configuration):
    """Model value of the reduced energy (remainder excluded).

    weight_data: per bubble, (a(xi_i), <grad a(xi_i), nu(xi_i)>).
    Returns (J, margin) with margin = sigma_margin * eps^{1.25}, a
    display band for the unmodeled remainder.
    """
    eps = config.epsilon
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    m = coeffs.m_exponent
    c5 = coeffs.interaction
    J = 0.0
    for (a_val, g_val), lam, t in zip(weight_data, config.Lambda_list,
                                      config.t_list):
        J += (coeffs.c1 + coeffs.c2 * eps * math.log(eps)) * a_val
        J += eps * (coeffs.c3 * a_val + coeffs.c4 * g_val * t
                    + c5 * a_val * (lam / (2 * t)) ** m
                    - coeffs.c6 * a_val * math.log(lam))
    return J, coeffs.sigma_margin * eps ** 1.25


def _inner_gradient(coeffs, a_val, g_val, lam, t):
    """Analytic (d/dLambda, d/dt) of the per-bubble epsilon-bracket."""
    m = coeffs.m_exponent
    c5 = coeffs.interaction
    core = c5 * a_val * (lam / (2 * t)) ** m
    dlam = m * core / lam - coeffs.c6 * a_val / lam
    dt = coeffs.c4 * g_val - m * core / t
    return dlam, dt


def inner_critical_point(coeffs: ReducedCoefficients, a_val: float,
                         g_val: float):
    """Closed-form interior minimizer (Lambda*, t*) for one bubble.

    Returns (Lambda_star, t_star, hessian_definite).  Raises
    NoInteriorMinimumError when g_val <= 0.
    """
    if a_val <= 0:
        raise ValueError("weight value must be positive")
    if g_val <= 0:
        raise NoInteriorMinimumError(
            "inner energy decreases for ever-deeper placement when "
            "<grad a, nu> <= 0")
    m = coeffs.m_exponent
    c5 = coeffs.interaction
    if not (c5 > 0 and coeffs.c6 > 0):
        raise MissingConstantError("interaction and log coefficients must be positive")
    t_star = coeffs.c6 * a_val / (coeffs.c4 * g_val)
    lam_star = 2.0 * t_star * (coeffs.c6 / (m * c5)) ** (1.0 / m)
    # analytic Hessian at the critical point
    f_ll = a_val * coeffs.c6 * m / lam_star ** 2
    f_tt = a_val * coeffs.c6 * (m + 1) / t_star ** 2
    f_lt = -a_val * coeffs.c6 * m / (lam_star * t_star)
    hess = np.array([[f_ll, f_lt], [f_lt, f_tt]])
    definite = bool(np.all(np.linalg.eigvalsh(hess) > 0))
    return lam_star, t_star, definite


def inner_energy(coeffs: ReducedCoefficients, a_val, g_val, lam, t) -> float:
    """Per-bubble epsilon-bracket (without the c3 constant)."""
    m = coeffs.m_exponent
    return (coeffs.c4 * g_val * t
            + coeffs.interaction * a_val * (lam / (2 * t)) ** m
            - coeffs.c6 * a_val * math.log(lam))


def grid_search_minimum(coeffs: ReducedCoefficients, a_val, g_val,
                        lam_center, t_center, span: float = 4.0,
                        points: int = 401):
    """Brute-force minimizer of the inner energy on a log grid.

    The grid is centered on (lam_center, t_center) with half-width
    `span` multiplicatively; an odd point count keeps the center
    exactly on the grid.
    """
    lams = np.exp(np.linspace(math.log(lam_center / span),
                              math.log(lam_center * span), points))
    ts = np.exp(np.linspace(math.log(t_center / span),
                            math.log(t_center * span), points))
    m = coeffs.m_exponent
    c5 = coeffs.interaction
    L, T = np.meshgrid(lams, ts, indexing="ij")
    F = (coeffs.c4 * g_val * T + c5 * a_val * (L / (2 * T)) ** m
         - coeffs.c6 * a_val * np.log(L))
    k = np.unravel_index(np.argmin(F), F.shape)
    return float(lams[k[0]]), float(ts[k[1]]), float(F[k])


def find_configuration(domain: DomainModel, coeffs: ReducedCoefficients,
                       pair: ExponentPair, kappa: int, epsilon: float):
    """Assemble the predicted kappa-bubble configuration on a domain.

    Picks kappa condition-(a) boundary critical points (stable order by
    coordinates), solves the inner problem at each, and reports the
    concentration data delta_i = eps^rate Lambda_i*.
    """
    cands = [bp for bp, ok in boundary_critical_points(domain) if ok]
    if len(cands) < kappa:
        raise InsufficientCriticalPointsError(
            f"need {kappa} condition-(a) points, found {len(cands)}")
    rate = concentration_exponent(pair)
    chosen = cands[:kappa]
    lams, ts, diags = [], [], []
    for bp in chosen:
        a_val = domain.weight(bp.x)
        g_val = float(np.dot(domain.weight_gradient(bp.x), bp.nu))
        lam, t, definite = inner_critical_point(coeffs, a_val, g_val)
        lams.append(lam)
        ts.append(t)
        diags.append({"xi": [float(v) for v in bp.x],
                      "a": a_val, "g": g_val,
                      "Lambda_star": lam, "t_star": t,
                      "hessian_definite": definite,
                      "delta_pred": epsilon ** rate * lam,
                      "xi_eps": [float(v) for v in
                                 bp.x + epsilon * t * bp.nu]})
    config = Configuration(xi_list=tuple(tuple(bp.x) for bp in chosen),
                           Lambda_list=tuple(lams), t_list=tuple(ts),
                           epsilon=epsilon)
    weight_data = [(d["a"], d["g"]) for d in diags]
    J, margin = evaluate_J(coeffs, weight_data, config)
    return config, {"rate": rate, "J_model": J, "margin": margin,
                    "bubbles": diags}


def configuration_to_json(config: Configuration, diagnostics: dict, path):
    payload = {"epsilon": config.epsilon,
               "xi_list": [list(x) for x in config.xi_list],
               "Lambda_star": list(config.Lambda_list),
               "t_star": list(config.t_list),
               "delta_pred": [b["delta_pred"] for b in diagnostics["bubbles"]],
               "J_model": diagnostics["J_model"],
               "margin": diagnostics["margin"],
               "bubbles": diagnostics["bubbles"]}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
