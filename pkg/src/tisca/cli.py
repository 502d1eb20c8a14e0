"""Command-line interface.

Exit codes: 0 when the target power was reached, 2 when the run stopped at
``max_j``, 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigFile, parse_config
from .controller import run_tisca
from .exceptions import TiscaError, ValidationError
from .runner import persist_runs
from .stats import ALTERNATIVES, SampleSummary, estimate_welch_power
from .validation import validate_power

logger = logging.getLogger("tisca")

HISTORY_COLUMNS = ("j", "comparison", "statistic", "df", "raw_p", "adjusted_p",
                   "estimated_power")
EXIT_OK, EXIT_ERROR, EXIT_MAX_J = 0, 1, 2


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def write_outputs(report, cfg: ConfigFile, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    persist_runs(report.store, out_dir / "runs.csv")
    with open(out_dir / "power_history.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HISTORY_COLUMNS)
        for row in report.history_rows():
            writer.writerow([_fmt(row[c]) for c in HISTORY_COLUMNS])
    doc = report.to_dict()
    doc["config"] = cfg.to_dict()
    doc["power_alpha_mode"] = cfg.tisca.power_alpha
    with open(out_dir / "report.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _execute(cfg: ConfigFile, out: str | None, **builtin_kwargs) -> int:
    source = cfg.make_source(**builtin_kwargs)
    report = run_tisca(cfg.tisca, source, parallelism=cfg.parallelism)
    out_dir = Path(out or cfg.out_dir or "tisca_out")
    write_outputs(report, cfg, out_dir)

    print(f"J_final = {report.j_final} ({report.stopped_by})")
    for r in report.final.results:
        print(f"  {r.name}: t = {r.statistic:.4g}, p = {r.raw_p:.3g}, "
              f"p_adj = {r.adjusted_p:.3g}, power = {r.estimated_power:.3f}")
    print(f"outputs written to {out_dir}")
    return EXIT_OK if report.stopped_by == "power_reached" else EXIT_MAX_J


def _with_power_alpha(cfg: ConfigFile, mode: str | None) -> ConfigFile:
    if mode is None:
        return cfg
    return replace(cfg, tisca=replace(cfg.tisca, power_alpha=mode))


def cmd_run(args) -> int:
    cfg = _with_power_alpha(parse_config(args.config), args.power_alpha)
    if cfg.source is None:
        raise ValidationError("source", "'run' needs a source in the config")
    return _execute(cfg, args.out)


def cmd_demo(args) -> int:
    cfg = _with_power_alpha(parse_config(args.config), args.power_alpha)
    cfg = replace(cfg, source={"builtin": "dgp1-linear-demo"})
    return _execute(cfg, args.out, n_train=args.n_train, n_test=args.n_test)


def cmd_validate(args) -> int:
    cfg = parse_config(args.config).tisca
    alt = validate_power(cfg, reps=args.reps, sd=args.sd, base_seed=args.seed)
    nul = validate_power(cfg, reps=args.reps, sd=args.sd, base_seed=args.seed + args.reps,
                         null=True)
    print(f"{args.reps} repetitions per scenario, stream sd {args.sd}")
    print(f"{'comparison':<24} {'power':>8} {'target':>8} {'type I':>8} {'alpha':>8}")
    for name, pw, t1 in zip(alt.names, alt.rejection_rate, nul.rejection_rate):
        print(f"{name:<24} {pw:8.3f} {cfg.target_power:8.3f} {t1:8.3f} {cfg.alpha:8.3f}")
    print(f"mean J_final {alt.j_final.mean():.1f} (min {alt.j_final.min()}, "
          f"max {alt.j_final.max()})")
    return EXIT_OK


def cmd_power(args) -> int:
    n_b = args.n_b if args.n_b is not None else args.n
    est = estimate_welch_power(
        SampleSummary(args.n, 0.0, args.sd_a), SampleSummary(n_b, 0.0, args.sd_b),
        args.delta, args.alpha, args.alternative,
    )
    print(f"power = {est.power:.6f} (df = {est.df:.4f}, ncp = {est.ncp:.4f})")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # exit status 2 is reserved for "stopped at max_j"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tisca", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log every checkpoint")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the power-driven simulation loop")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides out_dir)")
    run.add_argument("--power-alpha", choices=("auto", "raw"),
                     help="estimate power at alpha/K under FWER corrections (auto) "
                          "or always at alpha (raw)")
    run.set_defaults(func=cmd_run)

    demo = sub.add_parser("demo", help="run against the built-in treatment-effect study")
    demo.add_argument("--config", required=True)
    demo.add_argument("--n-train", type=int, default=500)
    demo.add_argument("--n-test", type=int, default=1000)
    demo.add_argument("--out")
    demo.add_argument("--power-alpha", choices=("auto", "raw"))
    demo.set_defaults(func=cmd_demo)

    val = sub.add_parser("validate", help="nested Monte Carlo check of realised power")
    val.add_argument("--config", required=True)
    val.add_argument("--reps", type=int, default=500)
    val.add_argument("--sd", type=float, default=1.0)
    val.add_argument("--seed", type=int, default=0)
    val.set_defaults(func=cmd_validate)

    pw = sub.add_parser("power", help="analytic power of Welch's test")
    pw.add_argument("--n", type=int, required=True, help="runs per group")
    pw.add_argument("--n-b", type=int, help="benchmark group size if different")
    pw.add_argument("--sd-a", type=float, required=True)
    pw.add_argument("--sd-b", type=float, required=True)
    pw.add_argument("--delta", type=float, required=True)
    pw.add_argument("--alpha", type=float, default=0.05)
    pw.add_argument("--alternative", choices=ALTERNATIVES, default="two_sided")
    pw.set_defaults(func=cmd_power)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (TiscaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
