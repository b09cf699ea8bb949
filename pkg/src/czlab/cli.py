"""Command-line entry point: ``czlab <command> [options]``.

Every command writes CSV tables and a JSON summary under ``--out`` and
exits with status 0 only when the checks made during the run pass.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import _fastops
from .decomposition import (DecompositionParams, decompose, decompose_adregular,
                            decompose_measure, level_at_percentile, unit_phase)
from .experiments import (ExperimentRecord, cross_norm_failure, default_eps_grid,
                          half_min_spacing, make_scenario, maximal_bound_check, norm_growth,
                          random_function, scaling_identities, smooth_function, weak_type_scan,
                          SUITE_COUNTS)
from .geometry import (Scenario, cantor_measure, halfplane_scenario, lipschitz_scenario,
                       random_slopes, section5_measures)
from .io import read_measure_csv, write_json, write_measure_csv
from .kernels import KernelSpec
from .measures import DiscreteMeasure, FunctionOnMeasure, MeasureError
from .operators import NormConvergenceError, assemble_matrix, norm_record, operator_norm
from .verify import verify_decomposition


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _int_range(text: str) -> list[int]:
    """``"2-7"`` or ``"2,3,5"``."""
    if "-" in text and "," not in text:
        a, b = text.split("-", 1)
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--out", type=Path, default=Path("czlab-out"), help="output directory")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--threads", type=int, default=None, help="worker threads for kernel sums")
    p.add_argument("--sequential", action="store_true",
                   help="single-threaded run for bit-exact replay")
    p.add_argument("--verbose", "-v", action="store_true")


def _scenario_args(p: argparse.ArgumentParser):
    p.add_argument("--scenario", type=Path, default=None,
                   help="directory holding gamma.csv, mu.csv and nu.csv")
    p.add_argument("--family", choices=("halfplane", "lipschitz"), default="halfplane")
    p.add_argument("--counts", type=int, nargs=3, default=SUITE_COUNTS,
                   metavar=("N_GAMMA", "N_MU", "N_NU"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="czlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write seeded measures to CSV")
    g.add_argument("what", choices=("cantor", "halfplane", "lipschitz", "section5"))
    g.add_argument("--stage", type=int, default=3)
    g.add_argument("--reps", type=int, default=1)
    g.add_argument("--N", type=int, default=3, help="number of blocks for section5")
    g.add_argument("--spacing", type=float, default=100.0)
    g.add_argument("--segments", type=int, default=4)
    g.add_argument("--counts", type=int, nargs=3, default=SUITE_COUNTS)
    _common(g)

    d = sub.add_parser("decompose", help="CZ decomposition with invariant report")
    _scenario_args(d)
    d.add_argument("--variant", choices=("function", "measure", "adregular"), default="function")
    d.add_argument("--lambda", dest="lam", type=float, default=None)
    d.add_argument("--percentile", type=float, default=90.0,
                   help="level as a percentile of local ratios when --lambda is absent")
    d.add_argument("--p", type=float, default=1.0)
    _common(d)

    n = sub.add_parser("norm", help="L2 operator norm of a truncated kernel")
    n.add_argument("--kernel", default="cauchy", help="cauchy, riesz or cmpt:m")
    n.add_argument("--measure", type=Path, default=None, help="source CSV (default: Cantor)")
    n.add_argument("--target", type=Path, default=None, help="target CSV (default: source)")
    n.add_argument("--stage", type=int, default=3)
    n.add_argument("--reps", type=int, default=1)
    n.add_argument("--eps", type=float, default=None,
                   help="truncation radius (default: half the minimum interatomic distance)")
    n.add_argument("--tol", type=float, default=1e-8)
    _common(n)

    w = sub.add_parser("weaktype", help="weak-type ratio scan over an eps grid")
    _scenario_args(w)
    w.add_argument("--kernel", default="cauchy")
    w.add_argument("--p", type=float, default=1.0)
    w.add_argument("--eps", type=_float_list, default=None, help="comma-separated eps grid")
    _common(w)

    m = sub.add_parser("maximal", help="radial maximal function bound ratio")
    _scenario_args(m)
    m.add_argument("--p", type=float, default=2.0)
    m.add_argument("--q", type=float, default=None)
    _common(m)

    e = sub.add_parser("experiment", help="Cantor-block experiments")
    e.add_argument("name", choices=("section5-growth", "section5-scaling", "section5-cross"))
    e.add_argument("--kernel", default="cauchy")
    e.add_argument("--stages", type=_int_range, default=None, help="e.g. 2-7")
    e.add_argument("--stage", type=int, default=None, help="largest stage / block count")
    e.add_argument("--reps", type=int, default=1)
    e.add_argument("--lambda", dest="lam", type=_float_list, default=[0.5, 2.0, 4.0, 10.0])
    e.add_argument("--spacing", type=float, default=100.0)
    _common(e)
    return ap


# ---------------------------------------------------------------------------

def _load_scenario(args):
    if args.scenario is not None:
        return (read_measure_csv(args.scenario / "gamma.csv"),
                read_measure_csv(args.scenario / "mu.csv"),
                read_measure_csv(args.scenario / "nu.csv"))
    sc = make_scenario(args.family, args.seed, tuple(args.counts))
    return sc.boundary_measure, sc.mu, sc.nu


def _write_scenario(sc: Scenario, out: Path):
    write_measure_csv(sc.boundary_measure, out / "gamma.csv")
    write_measure_csv(sc.mu, out / "mu.csv")
    write_measure_csv(sc.nu, out / "nu.csv")
    write_json(sc.describe(), out / "scenario.json")


def cmd_generate(args) -> int:
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    if args.what == "cantor":
        m = cantor_measure(args.stage, args.reps)
        write_measure_csv(m, out / "cantor.csv")
        write_json({"stage": args.stage, "reps": args.reps, "n_atoms": len(m)},
                   out / "cantor.json")
    elif args.what == "section5":
        c = section5_measures(args.N, args.spacing, args.reps)
        write_measure_csv(c.mu, out / "mu.csv")
        write_measure_csv(c.nu, out / "nu.csv")
        write_json({"N": c.N, "spacing": c.spacing, "reps": c.reps, "lam": c.lam,
                    "z": c.z}, out / "section5.json")
    elif args.what == "halfplane":
        _write_scenario(halfplane_scenario(*args.counts, seed=args.seed), out)
    else:
        _write_scenario(lipschitz_scenario(random_slopes(args.segments, args.seed),
                                           tuple(args.counts), args.seed), out)
    print(f"wrote {args.what} to {out}")
    return 0


def cmd_decompose(args) -> int:
    gamma, mu, nu = _load_scenario(args)
    if args.variant == "measure":
        absnu = nu.abs
        phase = FunctionOnMeasure(absnu, unit_phase(nu.weights))
        lam = args.lam or level_at_percentile(phase, absnu, mu, args.percentile, 1.0)
        dec = decompose_measure(nu, mu, gamma, lam)
    else:
        f = FunctionOnMeasure.constant(nu, 1.0)
        ref = gamma if args.variant == "adregular" else mu
        lam = args.lam or level_at_percentile(f, nu, ref, args.percentile, args.p)
        params = DecompositionParams(lam, args.p)
        dec = (decompose_adregular(f, nu, gamma, params) if args.variant == "adregular"
               else decompose(f, nu, mu, gamma, params))
    rep = verify_decomposition(dec)
    args.out.mkdir(parents=True, exist_ok=True)
    rows = [{"ball": k, "center_atom": int(i), "x": b.center[0], "y": b.center[1],
             "radius": b.radius, "alpha": phi.alpha, "threshold": phi.threshold,
             "support_size": int(phi.support_indices.size)}
            for k, (i, b, phi) in enumerate(zip(dec.center_indices, dec.balls_B, dec.phis))]
    rec = ExperimentRecord("decomposition", {"variant": args.variant, "lambda": lam, "p": args.p,
                                             "seed": args.seed, "family": args.family},
                           {**dec.to_dict(), "invariants": rep.to_dict()}, rows,
                           passed=rep.passed)
    rec.write(args.out)
    for line in rep.lines():
        print(line)
    return 0 if rep.passed else 1


def cmd_norm(args) -> int:
    k = KernelSpec.parse(args.kernel)
    src = read_measure_csv(args.measure) if args.measure else cantor_measure(args.stage, args.reps)
    tgt = read_measure_csv(args.target) if args.target else src
    if args.eps is None:
        pts = np.unique(np.r_[src.atoms, tgt.atoms], axis=0)
        eps = half_min_spacing(DiscreteMeasure(pts, np.ones(len(pts))))
    else:
        eps = args.eps
    B = assemble_matrix(k, src, tgt, eps)
    try:
        est = operator_norm(B, tol=args.tol, seed=args.seed)
    except NormConvergenceError as exc:
        print(f"FAIL {exc}")
        return 1
    rec = norm_record(B, est)
    args.out.mkdir(parents=True, exist_ok=True)
    write_json(rec, args.out / "norm.json")
    print(f"norm = {est.value:.12g} ({est.iterations} iterations, residual {est.residual:.2e})")
    return 0


def cmd_weaktype(args) -> int:
    gamma, mu, nu = _load_scenario(args)
    k = KernelSpec.parse(args.kernel)
    f = random_function(nu, args.seed)
    eps = default_eps_grid(mu, nu) if args.eps is None else args.eps
    rec = weak_type_scan(mu, nu, f, args.p, eps, k)
    rec.parameters.update({"seed": args.seed, "family": args.family, "data": "complex Gaussian f"})
    rec.passed = bool(np.isfinite(rec.results["W_sup"]))
    rec.write(args.out)
    for row in rec.rows:
        print(f"eps = {row['eps']:.6g}  W = {row['W']:.6g}")
    print(f"variation over eps = {rec.results['variation']:.4g}")
    return 0 if rec.passed else 1


def cmd_maximal(args) -> int:
    gamma, mu, nu = _load_scenario(args)
    f = smooth_function(mu, args.seed)
    rec = maximal_bound_check(mu, nu, f, args.p, args.q)
    rec.parameters.update({"seed": args.seed, "family": args.family})
    rec.passed = rec.results["finite"]
    rec.write(args.out)
    print(f"||M f||_Lp(nu) / ||f||_Lp(mu) = {rec.results['ratio']:.6g}")
    return 0 if rec.passed else 1


def cmd_experiment(args) -> int:
    k = KernelSpec.parse(args.kernel)
    if args.name == "section5-growth":
        stages = args.stages or list(range(2, (args.stage or 7) + 1))
        rec = norm_growth(stages, args.reps, k, seed=args.seed)
        print(f"slope = {rec.fits['slope']:.4f} (rms residual {rec.fits['residual_rms']:.3g})")
    elif args.name == "section5-scaling":
        rec = scaling_identities(cantor_measure(args.stage or 3, args.reps), args.lam, k,
                                 seed=args.seed, translation=(3.0, -7.0))
        print(f"max relative deviation = {rec.results['max_relative_deviation']:.3g}")
    else:
        Ns = args.stages or list(range(1, (args.stage or 5) + 1))
        rec = cross_norm_failure(Ns, args.spacing, args.reps, k, seed=args.seed)
        for row in rec.rows:
            print(f"N = {row['N']}: cross = {row['cross_norm']:.9g}  "
                  f"lower = {row['lower_bound']:.9g}")
    rec.write(args.out)
    print("PASS" if rec.passed else "FAIL")
    return 0 if rec.passed else 1


COMMANDS = {"generate": cmd_generate, "decompose": cmd_decompose, "norm": cmd_norm,
            "weaktype": cmd_weaktype, "maximal": cmd_maximal, "experiment": cmd_experiment}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    _fastops.set_threads(1 if args.sequential else args.threads)
    try:
        return COMMANDS[args.command](args)
    except (MeasureError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
