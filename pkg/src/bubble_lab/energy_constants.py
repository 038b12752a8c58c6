"""Quadrature of the tail-sensitive energy integrals.

The six constants

    A1 = int U^{q0+1},  A2 = int U^{q0},  A3 = int U^{q0+1} log U,
    B1 = int V^{p0+1},  B2 = int V^{p0},  B3 = int V^{p0+1} log V,

over R^n reduce to radial integrals with weight |S^{n-1}| r^{n-1}.
The grid part is integrated adaptively from the profile splines; the
part beyond the fit window start uses the fitted tail model (power law
times exp(c r^{-s}), with a log factor in the LOG regime), integrated
in the variable s = log r where the integrand decays exponentially.
Each integral is prechecked for convergence: the integrand's tail
power must exceed n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .exponents import ExponentPair, Regime
from .ground_state import RadialProfile

CONSTANT_IDS = ("A1", "A2", "A3", "B1", "B2", "B3")


class DivergentIntegralError(ArithmeticError):
    """Requested constant fails the integrability precheck."""


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1}."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True)
class EnergyConstants:
    A1: float
    A2: float
    A3: float
    B1: float
    B2: float
    B3: float
    B2_defined: bool
    quad_error: float

    def to_json(self, pair: ExponentPair, path):
        payload = {"n": pair.n, "p0": float(pair.p0), "q0": float(pair.q0),
                   "A1": self.A1, "A2": self.A2, "A3": self.A3,
                   "B1": self.B1, "B2": self.B2, "B3": self.B3,
                   "B2_defined": self.B2_defined,
                   "quad_error": self.quad_error}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def _tail_power(pair: ExponentPair, which: str) -> float:
    """Decay power of the integrand of the named constant at infinity."""
    kU = pair.tail_exponent_U()
    kV = float(pair.n - 2)
    p0, q0 = float(pair.p0), float(pair.q0)
    return {"A1": kU * (q0 + 1), "A2": kU * q0, "A3": kU * (q0 + 1),
            "B1": kV * (p0 + 1), "B2": kV * p0, "B3": kV * (p0 + 1)}[which]


def integrability_precheck(pair: ExponentPair, which: str) -> bool:
    """True iff the tail power of the integrand strictly exceeds n."""
    if which not in CONSTANT_IDS:
        raise ValueError(f"unknown constant id {which!r}")
    return _tail_power(pair, which) > pair.n


def _log_component(profile, r, is_U):
    """log U (or log V) with the tail evaluated from the fitted model,
    avoiding underflow of the raw profile at large radii."""
    r = np.asarray(r, dtype=float)
    if is_U:
        amp, kappa = profile.tail_a, profile.tail_exponent_U
        corr, s = profile.tail_corr_U, profile.tail_corr_power_U
        log_extra = profile.pair.regime is Regime.LOG
        inner = profile.eval_U
    else:
        amp, kappa = profile.tail_b, float(profile.pair.n - 2)
        corr, s = profile.tail_corr_V, profile.tail_corr_power_V
        log_extra = False
        inner = profile.eval_V
    out = np.empty(np.shape(r))
    near = r <= profile.config.tail_fit_window[0]
    out[near] = np.log(inner(r[near]))
    far = ~near
    if np.any(far):
        rf = r[far]
        val = math.log(amp) - kappa * np.log(rf) + corr * rf ** (-s)
        if log_extra:
            val = val + np.log(np.log(rf))
        out[far] = val
    return out


def _integrand(profile, which):
    p0, q0 = float(profile.pair.p0), float(profile.pair.q0)

    def f(r):
        if which == "A1":
            return np.exp((q0 + 1) * _log_component(profile, r, True))
        if which == "A2":
            return np.exp(q0 * _log_component(profile, r, True))
        if which == "A3":
            lu = _log_component(profile, r, True)
            return np.exp((q0 + 1) * lu) * lu
        if which == "B1":
            return np.exp((p0 + 1) * _log_component(profile, r, False))
        if which == "B2":
            return np.exp(p0 * _log_component(profile, r, False))
        lv = _log_component(profile, r, False)
        return np.exp((p0 + 1) * lv) * lv

    return f


def _radial_integral(profile, which):
    """|S^{n-1}| int_0^inf f(r) r^{n-1} dr for the named integrand.

    Split at the tail-window start; the far part runs in s = log r out
    to infinity on the fitted tail model.
    """
    n = profile.pair.n
    r_split = profile.config.tail_fit_window[0]
    f = _integrand(profile, which)
    near, err_near = quad(lambda r: f(r) * r ** (n - 1), 0.0, r_split,
                          limit=200, epsabs=0.0, epsrel=1e-9)

    p0 = float(profile.pair.p0)
    q0 = float(profile.pair.q0)
    power, is_U, with_log = {
        "A1": (q0 + 1, True, False), "A2": (q0, True, False),
        "A3": (q0 + 1, True, True), "B1": (p0 + 1, False, False),
        "B2": (p0, False, False), "B3": (p0 + 1, False, True),
    }[which]

    def far_integrand(s):
        # work in log space: exp(power*log f + n s) decays like
        # exp(-(P-n)s), so large s underflows harmlessly to zero
        if s > 600.0:
            return 0.0
        lc = float(_log_component(profile, math.exp(s), is_U))
        expo = power * lc + n * s
        val = 0.0 if expo < -745.0 else math.exp(expo)
        return val * lc if with_log else val

    far, err_far = quad(far_integrand, math.log(r_split), np.inf, limit=200,
                        epsabs=abs(near) * 1e-12, epsrel=1e-9)
    area = sphere_area(n)
    total = area * (near + far)
    return total, area * (err_near + err_far)


def compute_constants(profile: RadialProfile) -> EnergyConstants:
    """All six constants for one profile; B2 is NaN when divergent."""
    pair = profile.pair
    vals = {}
    errs = []
    b2_ok = integrability_precheck(pair, "B2")
    for which in CONSTANT_IDS:
        if not integrability_precheck(pair, which):
            if which == "B2":
                vals[which] = math.nan
                continue
            raise DivergentIntegralError(
                f"{which} diverges for (n, p0, q0)="
                f"({pair.n}, {pair.p0}, {pair.q0})")
        val, err = _radial_integral(profile, which)
        vals[which] = val
        errs.append(abs(err) / max(abs(val), 1e-300))
    return EnergyConstants(A1=vals["A1"], A2=vals["A2"], A3=vals["A3"],
                           B1=vals["B1"], B2=vals["B2"], B3=vals["B3"],
                           B2_defined=b2_ok, quad_error=max(errs))


def gradient_pairing(profile: RadialProfile) -> float:
    """int grad U . grad V over R^n, by radial quadrature of U'V'.

    Integration by parts against either equation turns this into A1 or
    B1, so all three should agree; the comparison is a solver check.
    """
    n = profile.pair.n
    dU = profile._spline("dU")
    dV = profile._spline("dV")
    R = profile.R_max
    val, _ = quad(lambda r: float(dU(r)) * float(dV(r)) * r ** (n - 1),
                  0.0, R, limit=200, epsrel=1e-9)
    # tail beyond the grid from the fitted power laws
    kU = profile.tail_exponent_U
    kV = float(n - 2)
    tail_power = kU + kV + 2 - n
    tail = (profile.tail_a * kU * profile.tail_b * kV
            * R ** (-tail_power) / tail_power)
    return sphere_area(n) * (val + tail)
