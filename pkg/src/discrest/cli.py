"""Command line interface: ``discrest <gen|energy|lpnorm|incidence|fit|run> ...``.

Exit codes: 0 success, 2 config or parameter error, 3 guard violation,
4 numeric refusal (aliasing).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import energy, expsum, pipeline, pointsets
from ._exact import to_fraction
from .exceptions import DiscrestError


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for stochastic steps")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="discrest", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a point set")
    g.add_argument("--kind", choices=["lattice", "separated", "lattice_subset", "sphere_rational"], default="lattice")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--N", type=int, default=1)
    g.add_argument("--surface", default="paraboloid")
    g.add_argument("--delta", default="1/16")
    g.add_argument("--size", type=int, default=10)
    g.add_argument("--q", type=int, default=4)
    g.add_argument("--file", type=Path, default=None, help="write the point file here (default: stdout)")

    e = sub.add_parser("energy", parents=[common], help="additive energy E_k")
    e.add_argument("--points", type=Path, required=True)
    e.add_argument("--k", type=int, default=2)
    e.add_argument("--method", choices=["hashed", "bruteforce"], default="hashed")
    e.add_argument("--witnesses", action="store_true")

    lp = sub.add_parser("lpnorm", parents=[common], help="normalised L^p average of the exponential sum")
    lp.add_argument("--points", type=Path, required=True)
    lp.add_argument("--p", type=float, default=2.0)
    lp.add_argument("--R", type=float, default=100.0)
    lp.add_argument("--method", choices=["mc", "grid", "torus"], default="mc")
    lp.add_argument("--samples", type=int, default=100_000)
    lp.add_argument("--grid", type=int, default=None, help="torus grid nodes per axis")

    inc = sub.add_parser("incidence", parents=[common], help="incidence geometry checks")
    inc.add_argument("--mode", choices=["quadruples", "angles", "lines", "wolff", "e3"], required=True)
    inc.add_argument("--points", type=Path, required=True)
    inc.add_argument("--lines", type=Path, default=None)

    f = sub.add_parser("fit", parents=[common], help="log-log exponent fit")
    f.add_argument("--pairs", type=Path, required=True, help="CSV with scale,value rows")

    r = sub.add_parser("run", parents=[common], help="run an experiment config")
    r.add_argument("config", type=Path)
    r.add_argument("--format", choices=list(pipeline.FORMATS), default=None)
    return parser


def _emit(args, result: dict, text: str) -> None:
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{args.command}.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(json.dumps(result, indent=2, sort_keys=True) if args.json else text)


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def cmd_gen(args):
    seed = _seed(args)
    if args.kind == "lattice":
        ps = pointsets.gen_lattice_paraboloid(args.n, args.N)
    elif args.kind == "separated":
        ps = pointsets.gen_separated_sample(args.surface, args.n, to_fraction(args.delta), seed)
    elif args.kind == "lattice_subset":
        ps = pointsets.gen_lattice_subset(args.n, args.N, args.size, seed)
    else:
        ps = pointsets.gen_sphere_rational(args.n, args.q, args.size, seed)
    text = pointsets.format_pointset(ps)
    if args.file is not None:
        args.file.write_text(text, encoding="utf-8")
    if args.json:
        _emit(args, pipeline.pointset_payload(ps), "")
    elif args.file is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {len(ps)} points to {args.file}")


def cmd_energy(args):
    ps = pointsets.read_pointset(args.points)
    if args.method == "bruteforce" or args.witnesses:
        rep = energy.energy_bruteforce(ps, args.k, args.witnesses)
    else:
        rep = energy.energy_hashed(ps, args.k)
    _emit(args, rep.to_dict(), f"E_{rep.k} = {rep.value} ({rep.nontrivial_count} nontrivial, |L| = {rep.n_points})")


def cmd_lpnorm(args):
    ps = pointsets.read_pointset(args.points)
    if args.method == "torus":
        est = expsum.lp_norm_torus_grid(ps, None, args.p, args.grid, samples=args.samples, seed=_seed(args))
    else:
        est = expsum.lp_average_ball(ps, None, args.p, args.R, None, args.method, args.samples, _seed(args))
    for w in est.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(args, est.to_dict(), f"L^{est.p:g} average = {est.value:.10g} +/- {est.error:.3g} ({est.method}, {est.samples} samples)")


def cmd_incidence(args):
    ps = pointsets.read_pointset(args.points)
    lines = pipeline.read_lines(args.lines) if args.lines else None
    result = pipeline.incidence_mode(args.mode, ps, lines)
    _emit(args, result, "\n".join(f"{k}: {v}" for k, v in result.items() if k != "related_pairs"))


def cmd_fit(args):
    pairs = []
    with open(args.pairs, encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                pairs.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                continue  # header line
    fit = expsum.fit_exponent(pairs)
    _emit(args, fit.to_dict(), f"slope = {fit.slope:.6g}, intercept = {fit.intercept:.6g}, residual = {fit.residual:.3g}")


def cmd_run(args):
    cfg = pipeline.ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.format is not None:
        cfg.format = args.format
    out = args.out or (cfg.base_dir / cfg.output_dir if cfg.output_dir else Path("."))
    report = pipeline.run_config(cfg)
    written = pipeline.emit_report(report, cfg.format, out)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        for name, entry in report.steps.items():
            print(f"{name}: {entry['status']}")
        print(f"wrote {', '.join(str(p) for p in written)}")
    for w in report.warnings:
        print(f"warning [{w['step']}] {w['kind']}: {w['message']}", file=sys.stderr)
    return report.exit_code


COMMANDS = {
    "gen": cmd_gen,
    "energy": cmd_energy,
    "lpnorm": cmd_lpnorm,
    "incidence": cmd_incidence,
    "fit": cmd_fit,
    "run": cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args) or 0
    except DiscrestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
