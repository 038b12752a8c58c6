"""Command-line front end: config ingestion, CSV/JSON artifact emission.

Exit codes: 0 on success, 1 when a computation fails or a check does
not pass, 2 on usage errors (bad flags, malformed config files).

Every artifact records the seed that produced it.  CSV output uses
'.' as the decimal separator and '\\n' line endings regardless of
locale, so identical configs give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .exponents import (ExponentPair, ExponentError, UnsupportedRegimeError,
                        Regime, concentration_exponent)
from .ground_state import (ShootingConfig, ShootingError, TailFitError,
                           solve_ground_state, export_profile)
from . import linearization, energy_constants, projection, reduced_energy
from .domain_green import (DomainModel, DomainError, lemH_bound_check,
                           green_ball, harmonicity_residual)
from . import report as report_mod

_FMT = "%.17g"


class UsageError(Exception):
    """Bad flag values or malformed config files (exit code 2)."""


def _threads() -> int | None:
    """Worker cap from BUBBLE_LAB_THREADS; also exported to the BLAS."""
    raw = os.environ.get("BUBBLE_LAB_THREADS")
    if raw is None:
        return None
    try:
        k = int(raw)
    except ValueError:
        raise UsageError(f"BUBBLE_LAB_THREADS={raw!r} is not an integer")
    if k < 1:
        raise UsageError("BUBBLE_LAB_THREADS must be >= 1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(k))
    return k


def _parse_p0(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse exponent {text!r}")


def _pair(args) -> ExponentPair:
    try:
        return ExponentPair.from_p0(args.n, _parse_p0(args.p0),
                                    alpha=getattr(args, "alpha", 0.0),
                                    beta=getattr(args, "beta", 0.0),
                                    epsilon=getattr(args, "epsilon", 0.0))
    except ExponentError as exc:
        raise UsageError(str(exc))


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_FMT % v if isinstance(v, float) else v for v in row])


def _solve(args):
    cfg = ShootingConfig(R_max=args.r_max) if args.r_max else ShootingConfig()
    return solve_ground_state(_pair(args), cfg)


# -- subcommands -------------------------------------------------------

def cmd_ground_state(args):
    prof = _solve(args)
    out = _outdir(args)
    export_profile(prof, out / "profile.csv", out / "profile.json")
    print(f"n={prof.pair.n} p0={prof.pair.p0} v0={prof.v0:.12f} "
          f"a={prof.tail_a:.6g} b={prof.tail_b:.6g}")
    print(f"wrote {out / 'profile.csv'} and {out / 'profile.json'}")
    return 0


def cmd_tail(args):
    prof = _solve(args)
    pair = prof.pair
    payload = {"n": pair.n, "p0": float(pair.p0), "q0": float(pair.q0),
               "regime": pair.regime.name,
               "tail_a": prof.tail_a, "tail_b": prof.tail_b,
               "tail_exponent_U": prof.tail_exponent_U,
               "tail_exponent_V": float(pair.n - 2),
               "fitted_exponent_U": prof.fitted_exponent_U,
               "fitted_exponent_V": prof.fitted_exponent_V,
               "seed": args.seed}
    if pair.regime is Regime.SLOW:
        k = (pair.n - 2) * float(pair.p0)
        rhs = prof.tail_a * (k - 2.0) * (pair.n - k)
        payload["slow_identity_rel_gap"] = \
            abs(prof.tail_b ** float(pair.p0) - rhs) / rhs
    out = _outdir(args)
    _write_json(out / "tail.json", payload)
    print(f"a={prof.tail_a:.6g} b={prof.tail_b:.6g} "
          f"kappa_U={prof.fitted_exponent_U:.6g} "
          f"(theory {prof.tail_exponent_U:.6g})")
    print(f"wrote {out / 'tail.json'}")
    return 0


def cmd_kernel_check(args):
    prof = _solve(args)
    residuals = [linearization.linearized_residual(prof, kp)
                 for kp in linearization.kernel_basis(prof)]
    dims = [linearization.mode_kernel_dimension(prof, ell)
            for ell in range(3)]
    payload = {"n": prof.pair.n, "p0": float(prof.pair.p0),
               "kernel_residuals": residuals,
               "mode_dimensions": dims, "seed": args.seed}
    out = _outdir(args)
    _write_json(out / "kernel.json", payload)
    print(f"max kernel residual {max(residuals):.3e}, "
          f"mode dimensions {tuple(dims)}")
    print(f"wrote {out / 'kernel.json'}")
    return 0 if max(residuals) <= 1e-6 and dims == [1, 1, 0] else 1


def cmd_constants(args):
    prof = _solve(args)
    ec = energy_constants.compute_constants(prof)
    out = _outdir(args)
    ec.to_json(prof.pair, out / "constants.json")
    print(f"A1={ec.A1:.9g} B1={ec.B1:.9g} B2={ec.B2:.9g} "
          f"(B2 defined: {ec.B2_defined})")
    print(f"wrote {out / 'constants.json'}")
    return 0


def cmd_green_check(args):
    rng = np.random.default_rng(args.seed)
    n = args.n
    ball = DomainModel(shape="ball", n=n, center=(0,) * n, R=1.0)
    sym = harm = 0.0
    for _ in range(args.samples):
        x = rng.normal(size=n)
        x *= 0.85 * rng.random() ** (1.0 / n) / np.linalg.norm(x)
        y = rng.normal(size=n)
        y *= 0.85 * rng.random() ** (1.0 / n) / np.linalg.norm(y)
        if np.linalg.norm(x - y) < 1e-3:
            continue
        sym = max(sym, abs(green_ball(ball, x, y) - green_ball(ball, y, x)))
    for _ in range(min(args.samples, 20)):
        x = rng.normal(size=n)
        x *= 0.5 * rng.random() / np.linalg.norm(x)
        y = rng.normal(size=n)
        y *= 0.5 * rng.random() / np.linalg.norm(y)
        harm = max(harm, harmonicity_residual(ball, x, y))
    rep = lemH_bound_check(ball, rng=rng)
    payload = {"n": n, "symmetry_sup": sym, "harmonicity_sup": harm,
               "reflected_charge_levels": rep["level_max_ratio"],
               "H_min": rep["H_min"], "passes": bool(rep["passes"]),
               "seed": args.seed}
    out = _outdir(args)
    _write_json(out / "green.json", payload)
    print(f"symmetry {sym:.2e}, harmonicity {harm:.2e}, "
          f"reflected-charge levels bounded: {rep['passes']}")
    print(f"wrote {out / 'green.json'}")
    return 0 if rep["passes"] else 1


def cmd_project(args):
    prof = _solve(args)
    pair = prof.pair
    n = pair.n
    ball = DomainModel(shape="ball", n=n, center=(0,) * n, R=1.0)
    x = np.zeros(n)
    x[0] = 1.0
    nu = np.zeros(n)
    nu[0] = -1.0
    from .domain_green import BoundaryPoint
    bp = BoundaryPoint(x=x, nu=nu, d_to_other_component=math.inf)
    pl = projection.make_placement(pair, bp, args.t, args.Lambda,
                                   args.epsilon)
    rng = np.random.default_rng(args.seed)
    targets = projection.default_targets(ball, pl, rng=rng)
    PU, PV = projection.project_bubble(ball, prof, pl, targets)
    U = projection.bubble_value(prof, pl, targets, "U")
    V = projection.bubble_value(prof, pl, targets, "V")
    out = _outdir(args)
    header = [f"x{k + 1}" for k in range(n)] + ["U", "PU", "V", "PV"]
    rows = [list(map(float, t)) + [float(U[i]), float(PU[i]),
                                   float(V[i]), float(PV[i])]
            for i, t in enumerate(targets)]
    _write_csv(out / "projection.csv", header, rows)
    bound_ok = bool(np.all((PU >= -1e-12) & (PU <= U + 1e-12)
                           & (PV >= -1e-12) & (PV <= V + 1e-12)))
    _write_json(out / "projection.json",
                {"n": n, "p0": float(pair.p0), "epsilon": args.epsilon,
                 "t": args.t, "Lambda": args.Lambda,
                 "delta": pl.delta, "eta": pl.eta,
                 "xi_eps": [float(v) for v in pl.xi_eps],
                 "ordering_holds": bound_ok, "seed": args.seed})
    print(f"{len(targets)} targets, 0 <= PU <= U and 0 <= PV <= V: "
          f"{bound_ok}")
    print(f"wrote {out / 'projection.csv'} and {out / 'projection.json'}")
    return 0 if bound_ok else 1


def cmd_residual_sweep(args):
    prof = _solve(args)
    pair = prof.pair
    if pair.regime.name.lower() != args.regime:
        raise UsageError(f"pair (n={pair.n}, p0={pair.p0}) is in the "
                         f"{pair.regime.name} regime, not {args.regime.upper()}")
    rate = concentration_exponent(pair)
    ratios = np.geomspace(args.ratio_min, args.ratio_max, args.points)
    slope, rows = projection.external_norm_scaling(prof, args.side, ratios)
    pred = projection.predicted_external_slope(pair, args.side)
    out = _outdir(args)
    csv_rows = []
    for row in rows:
        # with t = Lambda = 1 the ratio delta/eta fixes epsilon
        eps = row["ratio"] ** (1.0 / (rate - 1.0))
        csv_rows.append([eps, eps ** rate, eps, row["norm"], pred, slope])
    _write_csv(out / "sweep.csv",
               ["epsilon", "delta", "eta", "measured_norm",
                "predicted_exponent", "fitted_slope"], csv_rows)
    _write_json(out / "sweep.json",
                {"n": pair.n, "p0": float(pair.p0), "side": args.side,
                 "regime": pair.regime.name, "fitted_slope": slope,
                 "predicted_exponent": pred,
                 "rel_gap": abs(slope - pred) / pred, "seed": args.seed})
    print(f"fitted slope {slope:.6g}, predicted {pred:.6g} "
          f"(rel gap {abs(slope - pred) / pred:.2e})")
    print(f"wrote {out / 'sweep.csv'} and {out / 'sweep.json'}")
    return 0 if abs(slope - pred) / pred <= 0.05 else 1


def cmd_reduce(args):
    try:
        domain = DomainModel.from_json(args.domain)
    except (OSError, json.JSONDecodeError, DomainError, KeyError,
            TypeError) as exc:
        raise UsageError(f"bad domain config {args.domain}: {exc}")
    try:
        pair = ExponentPair.from_p0(domain.n, _parse_p0(args.p0),
                                    alpha=args.alpha, beta=args.beta,
                                    epsilon=args.epsilon)
    except ExponentError as exc:
        raise UsageError(str(exc))
    prof = solve_ground_state(pair)
    ec = energy_constants.compute_constants(prof)
    interaction = None
    if pair.regime is Regime.SLOW:
        ratio = pair.epsilon ** (1.0 - concentration_exponent(pair))
        interaction = reduced_energy.slow_interaction_integral(prof, ratio)
    coeffs = reduced_energy.assemble_coefficients(
        ec, pair, (prof.tail_a, prof.tail_b),
        interaction_integral=interaction)
    config, diag = reduced_energy.find_configuration(
        domain, coeffs, pair, kappa=args.kappa, epsilon=args.epsilon)
    out = _outdir(args)
    diag["seed"] = args.seed
    reduced_energy.configuration_to_json(config, diag,
                                         out / "configuration.json")
    for b in diag["bubbles"]:
        print(f"bubble at xi={b['xi']}: Lambda*={b['Lambda_star']:.6g} "
              f"t*={b['t_star']:.6g} delta={b['delta_pred']:.6g} "
              f"Hessian definite: {b['hessian_definite']}")
    print(f"wrote {out / 'configuration.json'}")
    return 0


def cmd_report(args):
    results = report_mod.run_all()
    width = max(len(r["name"]) for r in results)
    for r in results:
        flag = "PASS" if r["passed"] else "FAIL"
        print(f"{flag}  {r['name']:<{width}}  {r['detail']}")
    n_fail = sum(not r["passed"] for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    out = _outdir(args)
    _write_json(out / "report.json",
                {"results": results, "failures": n_fail, "seed": args.seed})
    print(f"wrote {out / 'report.json'}")
    return 0 if n_fail == 0 else 1


# -- argument parsing --------------------------------------------------

def _add_pair_flags(sp, with_perturbation=False):
    sp.add_argument("--n", type=int, required=True, help="dimension, >= 3")
    sp.add_argument("--p0", required=True,
                    help="smaller exponent on the critical hyperbola; "
                    "accepts fractions like 7/5")
    sp.add_argument("--r-max", type=float, default=None,
                    help="truncation radius for the radial solve")
    if with_perturbation:
        sp.add_argument("--alpha", type=float, default=0.0)
        sp.add_argument("--beta", type=float, default=0.0)


def _add_common(sp):
    sp.add_argument("-o", "--output-dir", default=".",
                    help="directory for CSV/JSON artifacts")
    sp.add_argument("--seed", type=int, default=0,
                    help="RNG seed, recorded in every output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bubble-lab",
        description="Numerical laboratory for boundary-layer bubble "
                    "solutions of near-critical elliptic systems")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ground-state", help="solve the radial profile")
    _add_pair_flags(sp)
    _add_common(sp)
    sp.set_defaults(fn=cmd_ground_state)

    sp = sub.add_parser("tail", help="tail amplitudes and decay exponents")
    _add_pair_flags(sp)
    _add_common(sp)
    sp.set_defaults(fn=cmd_tail)

    sp = sub.add_parser("kernel-check",
                        help="kernel residuals and mode dimensions")
    _add_pair_flags(sp)
    _add_common(sp)
    sp.set_defaults(fn=cmd_kernel_check)

    sp = sub.add_parser("constants", help="energy constants A1..B3")
    _add_pair_flags(sp)
    _add_common(sp)
    sp.set_defaults(fn=cmd_constants)

    sp = sub.add_parser("green-check",
                        help="ball Green's function diagnostics")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--samples", type=int, default=100)
    _add_common(sp)
    sp.set_defaults(fn=cmd_green_check)

    sp = sub.add_parser("project", help="project one bubble into the ball")
    _add_pair_flags(sp)
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--Lambda", type=float, default=1.0)
    _add_common(sp)
    sp.set_defaults(fn=cmd_project)

    sp = sub.add_parser("residual-sweep",
                        help="external-norm scaling sweep")
    sp.add_argument("--regime", choices=("slow", "fast"), required=True)
    _add_pair_flags(sp)
    sp.add_argument("--side", choices=("U", "V"), default="U")
    sp.add_argument("--ratio-min", type=float, default=1e-3)
    sp.add_argument("--ratio-max", type=float, default=1e-1)
    sp.add_argument("--points", type=int, default=9)
    _add_common(sp)
    sp.set_defaults(fn=cmd_residual_sweep)

    sp = sub.add_parser("reduce",
                        help="predicted bubble configuration on a domain")
    sp.add_argument("--domain", required=True,
                    help="JSON file describing the domain "
                    "(shape, n, center, radii, weight_exponents)")
    sp.add_argument("--kappa", type=int, required=True,
                    help="number of bubbles")
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--p0", default="5/2")
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--beta", type=float, default=1.0)
    _add_common(sp)
    sp.set_defaults(fn=cmd_reduce)

    sp = sub.add_parser("report", help="run the bundled acceptance checks")
    _add_common(sp)
    sp.set_defaults(fn=cmd_report)

    return ap


def main(argv=None) -> int:
    try:
        _threads()
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ExponentError, UnsupportedRegimeError, ShootingError,
            TailFitError, DomainError, energy_constants.DivergentIntegralError,
            reduced_energy.MissingConstantError,
            reduced_energy.NoInteriorMinimumError,
            reduced_energy.InsufficientCriticalPointsError,
            linearization.InconclusiveRankError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
