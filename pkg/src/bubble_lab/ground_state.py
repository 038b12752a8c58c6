"""Radial ground-state solver for the strongly coupled bubble system.

Solves, on [0, R_max],

    -U'' - (n-1)/r U' = |V|^{p0-1} V,
    -V'' - (n-1)/r V' = |U|^{q0-1} U,
    U(0) = 1,  U'(0) = V'(0) = 0,

by bisection on the free value v0 = V(0).  The dichotomy separating the
two sides of the critical v0: on one side a component crosses zero
before R_max, on the other a component levels off to a positive
constant (its far-field harmonic part A + B r^{2-n} has A > 0, so decay
fails).  Near the critical value neither event fires inside R_max and
the side is decided by comparing the two far-field constants.

After convergence the tail amplitudes of the decay laws

    V ~ b r^{2-n},   U ~ a r^{-kappa}  (kappa regime-dependent)

are extracted by least squares on a far-field window.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .exponents import ExponentPair, Regime

_SAMPLE_RTOL = 1e-13   # final sampling pass runs tighter than the search pass
_SAMPLE_ATOL = 1e-16


class ShootingError(RuntimeError):
    """Shooting failed (no bracket, or bisection did not converge)."""


class TailFitError(RuntimeError):
    """Tail window is not in the asymptotic range."""


@dataclass(frozen=True)
class ShootingConfig:
    R_max: float = 200.0
    ode_tolerance: float = 1e-10
    bisection_tolerance: float = 1e-12
    max_bisections: int = 120
    tail_fit_window: Optional[tuple] = None  # defaults to (0.3, 0.95)*R_max
    grid_points: int = 4000

    def __post_init__(self):
        if self.R_max < 50:
            raise ValueError("R_max must be >= 50")
        if self.ode_tolerance <= 0 or self.bisection_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        window = self.tail_fit_window
        if window is None:
            window = (0.3 * self.R_max, 0.95 * self.R_max)
            object.__setattr__(self, "tail_fit_window", window)
        if window[0] < self.R_max / 4:
            raise ValueError("tail window must start at R_max/4 or beyond")


@dataclass
class RadialProfile:
    """Sampled ground state with fitted tail data.

    grid starts at 0; U, V and their radial derivatives are sampled on
    it.  tail_a / tail_b are the asymptotic amplitudes, tail_corr_* the
    1/r correction coefficients of the fitted tail model
    a * r^{-kappa} * exp(c/r).
    """

    pair: ExponentPair
    grid: np.ndarray
    U_samples: np.ndarray
    V_samples: np.ndarray
    dU_samples: np.ndarray
    dV_samples: np.ndarray
    v0: float
    tail_a: float = math.nan
    tail_b: float = math.nan
    tail_exponent_U: float = math.nan
    fitted_exponent_U: float = math.nan
    fitted_exponent_V: float = math.nan
    tail_corr_U: float = 0.0
    tail_corr_V: float = 0.0
    tail_corr_power_U: float = 1.0
    tail_corr_power_V: float = 1.0
    ode_residual: float = math.nan
    config: ShootingConfig = field(default_factory=ShootingConfig)
    _interp: dict = field(default_factory=dict, repr=False)

    @property
    def R_max(self) -> float:
        return float(self.grid[-1])

    def _spline(self, key):
        if key not in self._interp:
            data = {"U": self.U_samples, "V": self.V_samples,
                    "dU": self.dU_samples, "dV": self.dV_samples}[key]
            self._interp[key] = PchipInterpolator(self.grid, data, extrapolate=False)
        return self._interp[key]

    def _eval_component(self, r, key, amp, kappa, corr, corr_power, log_tail):
        r = np.asarray(r, dtype=float)
        out = np.empty(r.shape)
        inside = r <= self.R_max
        out[inside] = self._spline(key)(r[inside])
        far = ~inside
        if np.any(far):
            rf = r[far]
            tail = amp * rf ** (-kappa) * np.exp(corr * rf ** (-corr_power))
            if log_tail:
                tail = tail * np.log(rf)
            out[far] = tail
        return out

    def eval_U(self, r):
        """U(r), tail model beyond the grid."""
        return self._eval_component(
            r, "U", self.tail_a, self.tail_exponent_U, self.tail_corr_U,
            self.tail_corr_power_U, log_tail=self.pair.regime is Regime.LOG)

    def eval_V(self, r):
        return self._eval_component(
            r, "V", self.tail_b, self.pair.n - 2.0, self.tail_corr_V,
            self.tail_corr_power_V, log_tail=False)


def _rhs(n, p0, q0):
    def rhs(r, y):
        U, dU, V, dV = y
        sV = np.sign(V) * np.abs(V) ** p0
        sU = np.sign(U) * np.abs(U) ** q0
        return [dU, -(n - 1) / r * dU - sV,
                dV, -(n - 1) / r * dV - sU]
    return rhs


def _series_start(n, p0, q0, v0, r0):
    U = 1.0 - v0 ** p0 * r0 * r0 / (2 * n)
    dU = -(v0 ** p0) * r0 / n
    V = v0 - r0 * r0 / (2 * n)
    dV = -r0 / n
    return [U, dU, V, dV]


@dataclass(frozen=True)
class ShotResult:
    """Outcome of a single outward integration."""

    crossed: Optional[str]        # "U", "V", or None
    r_stop: float
    A_U: float                    # far-field constant of U at r_stop
    A_V: float
    solution: object = None

    @property
    def side(self) -> int:
        """+1 for v0 above critical (U crosses zero, or V levels off with
        a positive far-field constant), -1 below.  The sign of A_V alone
        decides the no-crossing case: the slow algebraic tail of U makes
        A_U nonzero at finite R_max even for the true ground state, so
        comparing A_U against A_V would bias the bisection limit."""
        if self.crossed == "U":
            return +1
        if self.crossed == "V":
            return -1
        return +1 if self.A_V > 0 else -1


def shoot_once(pair: ExponentPair, v0: float, cfg: ShootingConfig,
               rtol: Optional[float] = None, dense: bool = False) -> ShotResult:
    """Integrate outward from the series start and classify the outcome."""
    n, p0, q0 = pair.n, float(pair.p0), float(pair.q0)
    r0 = 1e-4
    y0 = _series_start(n, p0, q0, v0, r0)

    def hit_U(r, y):
        return y[0]

    def hit_V(r, y):
        return y[2]

    hit_U.terminal = True
    hit_V.terminal = True
    sol = solve_ivp(_rhs(n, p0, q0), (r0, cfg.R_max), y0, method="DOP853",
                    rtol=rtol if rtol is not None else cfg.ode_tolerance,
                    atol=_SAMPLE_ATOL, events=(hit_U, hit_V),
                    dense_output=dense)
    if not sol.success:
        raise ShootingError(f"integration failed at v0={v0}: {sol.message}")
    crossed = None
    if sol.t_events[0].size:
        crossed = "U"
    if sol.t_events[1].size and (crossed is None or sol.t_events[1][0] < sol.t_events[0][0]):
        crossed = "V"
    U, dU, V, dV = sol.y[:, -1]
    r_stop = sol.t[-1]
    A_U = U + r_stop * dU / (n - 2)
    A_V = V + r_stop * dV / (n - 2)
    return ShotResult(crossed=crossed, r_stop=r_stop, A_U=A_U, A_V=A_V,
                      solution=sol if dense else None)


def _find_bracket(pair, cfg):
    lo, hi = 0.5, 2.0
    side_lo = shoot_once(pair, lo, cfg, rtol=1e-8).side
    side_hi = shoot_once(pair, hi, cfg, rtol=1e-8).side
    for _ in range(40):
        if side_lo != side_hi:
            return (lo, hi) if side_lo < side_hi else (hi, lo)
        lo /= 1.6
        hi *= 1.6
        if lo < 1e-4 or hi > 1e4:
            break
        side_lo = shoot_once(pair, lo, cfg, rtol=1e-8).side
        side_hi = shoot_once(pair, hi, cfg, rtol=1e-8).side
    raise ShootingError(
        f"no shooting bracket for (n, p0, q0)=({pair.n}, {pair.p0}, {pair.q0})")


def _bisect(pair, cfg):
    lo, hi = _find_bracket(pair, cfg)
    # lo sits on side -1, hi on side +1 (or mirrored); orientation fixed here
    side_hi = shoot_once(pair, hi, cfg, rtol=1e-8).side
    # bisect all the way to floating-point exhaustion: any leftover bracket
    # width excites the non-decaying far-field mode and pollutes the tail fit
    for k in range(cfg.max_bisections):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        # coarse tolerance until the bracket is tight, then full tolerance
        rtol = 1e-8 if abs(hi - lo) > 1e-6 else _SAMPLE_RTOL
        if shoot_once(pair, mid, cfg, rtol=rtol).side == side_hi:
            hi = mid
        else:
            lo = mid
    if abs(hi - lo) > cfg.bisection_tolerance * max(1.0, abs(lo)):
        raise ShootingError("bisection did not converge within max_bisections")
    return 0.5 * (lo + hi)


def _ode_residual(pair, sol, grid):
    """Sup-norm collocation residual via 5-point differentiation of the
    dense output."""
    n, p0, q0 = pair.n, float(pair.p0), float(pair.q0)
    rs = np.geomspace(0.01, 0.99 * grid[-1], 150)
    worst = 0.0
    for r in rs:
        h = min(2e-3 * (1.0 + r), 0.4 * r)
        pts = sol.sol(np.array([r - 2 * h, r - h, r, r + h, r + 2 * h]))
        dU = pts[1]
        dV = pts[3]
        ddU = (-dU[4] + 8 * dU[3] - 8 * dU[1] + dU[0]) / (12 * h)
        ddV = (-dV[4] + 8 * dV[3] - 8 * dV[1] + dV[0]) / (12 * h)
        U, V = pts[0][2], pts[2][2]
        resU = ddU + (n - 1) / r * dU[2] + np.sign(V) * abs(V) ** p0
        resV = ddV + (n - 1) / r * dV[2] + np.sign(U) * abs(U) ** q0
        worst = max(worst, abs(resU), abs(resV))
    return worst


def _fit_tail(r, vals, kappa_theory, log_tail, corr_powers=(1.0, 2.0)):
    """Free-slope and fixed-slope fits of log(vals) on the window.

    corr_powers are the exponents of the relative correction columns
    r^{-s}; the leading one is kept for extrapolation.  Returns
    (amplitude, fitted_kappa, corr, rms_residual).
    """
    y = np.log(vals)
    if log_tail:
        y = y - np.log(np.log(r))
    corr_cols = [r ** (-s) for s in corr_powers]
    X_free = np.column_stack([np.ones_like(r), np.log(r)] + corr_cols)
    coef_free, *_ = np.linalg.lstsq(X_free, y, rcond=None)
    fitted_kappa = -coef_free[1]
    # amplitude from the theory-slope fit so that a is the true limit constant
    X_fix = np.column_stack([np.ones_like(r)] + corr_cols)
    y_fix = y + kappa_theory * np.log(r)
    coef_fix, *_ = np.linalg.lstsq(X_fix, y_fix, rcond=None)
    resid = y_fix - X_fix @ coef_fix
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return float(np.exp(coef_fix[0])), float(fitted_kappa), float(coef_fix[1]), rms


def solve_ground_state(pair: ExponentPair, cfg: ShootingConfig = None) -> RadialProfile:
    """Shoot on V(0), sample the converged profile, fit the tails."""
    if cfg is None:
        cfg = ShootingConfig()
    if pair.is_symmetric:
        v0 = 1.0   # U == V by symmetry
    else:
        v0 = _bisect(pair, cfg)

    shot = shoot_once(pair, v0, cfg, rtol=_SAMPLE_RTOL, dense=True)
    if shot.crossed is not None:
        raise ShootingError(
            f"converged v0={v0} still crosses component {shot.crossed}")
    sol = shot.solution
    grid = np.concatenate([[0.0], np.geomspace(1e-3, cfg.R_max, cfg.grid_points)])
    vals = sol.sol(grid[1:])
    U = np.concatenate([[1.0], vals[0]])
    dU = np.concatenate([[0.0], vals[1]])
    V = np.concatenate([[v0], vals[2]])
    dV = np.concatenate([[0.0], vals[3]])
    if np.any(U <= 0) or np.any(V <= 0):
        raise ShootingError("converged profile not positive on the grid")

    profile = RadialProfile(pair=pair, grid=grid, U_samples=U, V_samples=V,
                            dU_samples=dU, dV_samples=dV, v0=v0, config=cfg)
    profile.ode_residual = _ode_residual(pair, sol, grid)
    if profile.ode_residual > 10 * cfg.ode_tolerance:
        raise ShootingError(
            f"ODE residual {profile.ode_residual:.3g} exceeds 10*tolerance")
    extract_tail_constants(profile)
    return profile


def extract_tail_constants(profile: RadialProfile, fit_tolerance: float = 0.02):
    """Fit the far-field amplitudes a, b and the decay exponent of U.

    The fitted free slope must agree with the regime's predicted
    exponent within fit_tolerance, and the fixed-slope fit must be tight
    (window inside the asymptotic range), else TailFitError.
    Returns (a, b, exponent).
    """
    cfg = profile.config
    r_lo, r_hi = cfg.tail_fit_window
    mask = (profile.grid >= r_lo) & (profile.grid <= r_hi)
    r = profile.grid[mask]
    if r.size < 20:
        raise TailFitError("tail window contains too few grid points")
    regime = profile.pair.regime
    kappa_U = profile.pair.tail_exponent_U()

    n = profile.pair.n
    powers_U = (1.0, 2.0)
    if regime is Regime.SLOW:
        # relative corrections to the slow tail decay like r^{-gap} with
        # gap = (n-2) - kappa_U, from the subleading harmonic mode
        gap = (n - 2.0) - kappa_U
        powers_U = (gap, 2 * gap) if gap < 0.95 else (gap, 2.0)
    a, kU, corrU, rmsU = _fit_tail(r, profile.U_samples[mask], kappa_U,
                                   log_tail=regime is Regime.LOG,
                                   corr_powers=powers_U)
    b, kV, corrV, rmsV = _fit_tail(r, profile.V_samples[mask],
                                   profile.pair.n - 2.0, log_tail=False)
    if max(rmsU, rmsV) > 1e-3:
        raise TailFitError(
            f"tail fit residual too large (rms U {rmsU:.2e}, V {rmsV:.2e})")
    if regime is not Regime.LOG:
        if abs(kU - kappa_U) > fit_tolerance * kappa_U:
            raise TailFitError(
                f"fitted U exponent {kU:.4f} vs predicted {kappa_U:.4f}")
    if abs(kV - (profile.pair.n - 2.0)) > fit_tolerance * (profile.pair.n - 2.0):
        raise TailFitError(
            f"fitted V exponent {kV:.4f} vs predicted {profile.pair.n - 2.0:.4f}")

    profile.tail_a = a
    profile.tail_b = b
    profile.tail_exponent_U = kappa_U
    profile.fitted_exponent_U = kU
    profile.fitted_exponent_V = kV
    profile.tail_corr_U = corrU
    profile.tail_corr_V = corrV
    profile.tail_corr_power_U = powers_U[0]
    profile.tail_corr_power_V = 1.0
    return a, b, kappa_U


def rescale_evaluate(profile: RadialProfile, xi, lam: float, y):
    """Evaluate the rescaled bubble pair at a point y.

    (U, V) -> (lam^{n/(q0+1)} U(lam|y-xi|), lam^{n/(p0+1)} V(lam|y-xi|)).
    """
    if lam <= 0:
        raise ValueError("scale lambda must be positive")
    pair = profile.pair
    xi = np.asarray(xi, dtype=float)
    y = np.asarray(y, dtype=float)
    r = lam * np.linalg.norm(y - xi, axis=-1)
    r = np.atleast_1d(r)
    U_val = lam ** (pair.n / (float(pair.q0) + 1)) * profile.eval_U(r)
    V_val = lam ** (pair.n / (float(pair.p0) + 1)) * profile.eval_V(r)
    if U_val.size == 1:
        return float(U_val[0]), float(V_val[0])
    return U_val, V_val


def export_profile(profile: RadialProfile, csv_path, json_path=None):
    """Write r,U,V samples as CSV plus a JSON sidecar with the scalars."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["r", "U", "V"])
        for r, u, v in zip(profile.grid, profile.U_samples, profile.V_samples):
            writer.writerow([f"{r:.12g}", f"{u:.12g}", f"{v:.12g}"])
    if json_path is not None:
        sidecar = {
            "n": profile.pair.n,
            "p0": float(profile.pair.p0),
            "q0": float(profile.pair.q0),
            "v0": profile.v0,
            "tail_a": profile.tail_a,
            "tail_b": profile.tail_b,
            "tail_exponent": profile.tail_exponent_U,
        }
        with open(json_path, "w") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")
