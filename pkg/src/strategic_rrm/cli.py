"""Command line entry point: ``strategic-rrm {run,sweep,verify-equilibria,print-defaults}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .equilibrium import oracle_agreement_sweep
from .experiment import AXES, run_scenario_full, run_sweep, summary_csv, timeseries_csv
from .defense import write_decisions_csv
from .netsim.engine import SimulationTrace
from .scenario import format_defaults, parse_scenario

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_FAIL = 0, 1, 2, 3

log = logging.getLogger("strategic_rrm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_run(args) -> int:
    cfg = parse_scenario(args.scenario)
    res = run_scenario_full(cfg)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "summary.csv"), summary_csv([res.report]))
    _write(os.path.join(args.out, "timeseries.csv"), timeseries_csv(res.report))
    write_decisions_csv(res.decisions, os.path.join(args.out, "decisions.csv"))
    if args.trace:
        SimulationTrace(res.sim.packets, res.sim.now).to_csv(os.path.join(args.out, "trace.csv"))
    if res.attacker is not None:
        res.attacker.write_plan_csv(os.path.join(args.out, "attack_schedule.csv"),
                                    os.path.join(args.out, "attack_plan.csv"))
    r = res.report
    print(f"{r.scenario_id}: strategy={r.strategy} loss={100 * r.loss_pct:.2f}% "
          f"avg_delay={r.avg_delay_us:.0f}us mutations={r.mutation_count} -> {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = parse_scenario(args.scenario)
    values = [v for v in args.values.split(",") if v.strip()]
    if not values:
        print("sweep: --values is empty", file=sys.stderr)
        return EXIT_USAGE
    reports = run_sweep(cfg, args.axis, values, workers=args.workers)
    text = summary_csv(reports)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, "summary.csv"), text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.samples < 1:
        print("verify-equilibria: --samples must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    rep = oracle_agreement_sweep(args.samples, args.seed, args.step)
    print(f"samples={rep.samples} seed={rep.seed} step={args.step} mismatches={len(rep.mismatches)} "
          f"forbidden_profiles={len(rep.forbidden)} skipped_near_threshold={rep.skipped_near_threshold} "
          f"seconds={rep.seconds:.2f}")
    for params, theta, brute, expected in rep.mismatches[:20]:
        print(f"  MISMATCH theta={theta:.6f} {params}: brute={brute} table={expected}")
    for params, theta, prof in rep.forbidden[:20]:
        print(f"  FORBIDDEN {prof} theta={theta:.6f} {params}")
    print("PASS" if rep.passed else "FAIL")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_defaults(args) -> int:
    sys.stdout.write(format_defaults())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="strategic-rrm", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run one scenario file")
    r.add_argument("scenario")
    r.add_argument("--out", default="out")
    r.add_argument("--trace", action="store_true", help="also write the per-packet trace.csv")
    r.set_defaults(fn=cmd_run)

    s = sub.add_parser("sweep", help="run a scenario once per value of one axis")
    s.add_argument("scenario")
    s.add_argument("--axis", required=True, choices=AXES)
    s.add_argument("--values", required=True, help="comma separated")
    s.add_argument("--out")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(fn=cmd_sweep)

    v = sub.add_parser("verify-equilibria", help="brute-force equilibria vs threshold classification")
    v.add_argument("--samples", type=int, default=1000)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--step", type=float, default=0.01)
    v.set_defaults(fn=cmd_verify)

    d = sub.add_parser("print-defaults", help="print every scenario key with its default")
    d.set_defaults(fn=cmd_defaults)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except ValueError as e:  # ScenarioError included
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
