"""Command-line workflows: simulate, minimize, compare, gen.

Exit codes: 0 for a passing verdict or successful run, 1 for a failing
test verdict (simulate only), 2 for any error.  Every command copies its
resolved manifest into the output directory so a run can be reproduced
from the artifacts alone.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import metrics, oracle, reduce, sim, trace

log = logging.getLogger("lift_ddmin")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


class CliError(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("LIFT_DDMIN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _require_files(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise CliError(f"file not found: {p}")


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, args: argparse.Namespace, command: str) -> None:
    manifest = {"command": command}
    for key, value in sorted(vars(args).items()):
        if key in ("func",):
            continue
        manifest[key] = str(value) if isinstance(value, Path) else value
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                       encoding="utf-8")


def _load_inputs(args):
    _require_files(args.building, args.fault, args.trace, args.oracle)
    building = sim.BuildingConfig.from_json(args.building)
    fault = sim.FaultConfig.from_json(args.fault)
    ti = trace.load_test_input(args.trace)
    oracle_cfg = oracle.OracleConfig.from_json(args.oracle)
    return building, fault, ti, oracle_cfg


def cmd_simulate(args) -> int:
    building, fault, ti, oracle_cfg = _load_inputs(args)
    out = _out_dir(args.out)
    _write_manifest(out, args, "simulate")
    outcome = sim.execute_test(ti, building, fault, stop_time=args.stop_time)
    verdict = oracle.judge(outcome, oracle_cfg)
    sim.write_outcome_csv(outcome, out / "outcome.csv")
    sim.write_env_jsonl(outcome, out / "env_log.jsonl")
    (out / "verdict.json").write_text(
        json.dumps(oracle.verdict_to_dict(verdict), indent=2) + "\n", encoding="utf-8")
    print(f"verdict={verdict.result} passengers={ti.np} "
          f"span=[{outcome.sim_start},{outcome.sim_end}]s")
    if verdict.failed:
        print(f"conflicting_passenger={verdict.conflicting_passenger_id} "
              f"failing_time={float(verdict.failing_time):.1f}")
    return EXIT_FAIL if verdict.failed else EXIT_PASS


def cmd_minimize(args) -> int:
    building, fault, ti, oracle_cfg = _load_inputs(args)
    out = _out_dir(args.out)
    _write_manifest(out, args, "minimize")
    try:
        ctx = reduce.prepare_context(building, fault, ti, oracle_cfg,
                                     threshold=args.threshold, budget=args.budget)
    except oracle.OracleError as exc:
        raise CliError(f"not failure-inducing: {exc}") from exc
    ctx = reduce.ReductionContext(
        building=ctx.building, fault=ctx.fault, oracle_cfg=ctx.oracle_cfg,
        original=ctx.original, original_verdict=ctx.original_verdict,
        original_outcome=ctx.original_outcome, budget=ctx.budget,
        stop_at_failure=not args.no_stop_at_failure,
    )
    result = reduce.run_algorithm(args.algorithm, ctx)
    trace.save_test_input(result.final, out / "reduced.csv")
    (out / "reduction.json").write_text(
        json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
    report = metrics.tirr_ft(ctx, result.final, checkpoint=result.checkpoint)
    (out / "tirr.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(f"{args.algorithm}, {ti.np} -> {result.final.np}, "
          f"sims={result.simulations_executed}, tirr_ft={float(report.tirr_ft):.4f}")
    if result.aborted:
        print(f"note: aborted early ({result.abort_reason}); result is the "
              "smallest confirmed failing input")
    return EXIT_PASS


def _load_scenarios(path) -> list[metrics.Scenario]:
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent
    scenarios = []
    for entry in data["scenarios"]:
        def resolve(key):
            p = Path(entry[key])
            return p if p.is_absolute() else base / p
        _require_files(resolve("building"), resolve("fault"),
                       resolve("trace"), resolve("oracle"))
        scenarios.append(metrics.Scenario(
            name=entry["name"],
            building=sim.BuildingConfig.from_json(resolve("building")),
            fault=sim.FaultConfig.from_json(resolve("fault")),
            trace=trace.load_test_input(resolve("trace")),
            oracle_cfg=oracle.OracleConfig.from_json(resolve("oracle")),
        ))
    return scenarios


def cmd_compare(args) -> int:
    _require_files(args.scenarios)
    out = _out_dir(args.out)
    _write_manifest(out, args, "compare")
    scenarios = _load_scenarios(args.scenarios)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
    table = metrics.run_comparison(scenarios, algorithms, thresholds,
                                   repetitions=args.reps, budget=args.budget)
    table.write_csv(out / "comparison.csv")
    table.write_json(out / "comparison.json")
    print(f"wrote {len(table.rows)} rows "
          f"({len(scenarios)} scenarios x {len(thresholds)} thresholds x "
          f"{len(algorithms)} algorithms, {args.reps} reps)")
    return EXIT_PASS


def cmd_gen(args) -> int:
    _require_files(args.spec)
    spec = trace.TrafficSpec.from_json(args.spec)
    ti = trace.generate_trace(spec, args.seed)
    out_path = Path(args.out)
    if out_path.suffix.lower() == ".csv":
        out_path.parent.mkdir(parents=True, exist_ok=True)
        trace.save_test_input(ti, out_path)
    else:
        out = _out_dir(out_path)
        trace.save_test_input(ti, out / "trace.csv")
    print(f"generated {ti.np} passengers (profile={spec.profile}, seed={args.seed})")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lift-ddmin",
        description="Minimize failure-inducing passenger traces for an "
                    "elevator group control SUT",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, with_oracle=True):
        p.add_argument("--building", required=True, help="building config JSON")
        p.add_argument("--fault", required=True, help="fault config JSON")
        p.add_argument("--trace", required=True, help="passenger trace CSV")
        if with_oracle:
            p.add_argument("--oracle", required=True, help="oracle config JSON")
        p.add_argument("--out", required=True, help="output directory")

    p_sim = sub.add_parser("simulate", help="run one trace and judge it")
    add_io(p_sim)
    p_sim.add_argument("--stop-time", type=int, default=None,
                       help="halt the simulation at this many seconds")
    p_sim.set_defaults(func=cmd_simulate)

    p_min = sub.add_parser("minimize", help="reduce a failing trace")
    add_io(p_min)
    p_min.add_argument("--algorithm", required=True, choices=reduce.ALGORITHMS)
    p_min.add_argument("--threshold", type=float, default=0.0,
                       help="severity degradation threshold, percent")
    p_min.add_argument("--budget", type=int, default=None,
                       help="max candidate simulations")
    p_min.add_argument("--no-stop-at-failure", action="store_true",
                       help="charge full simulated spans instead of stopping "
                            "the accounting at each candidate's failing time")
    p_min.set_defaults(func=cmd_minimize)

    p_cmp = sub.add_parser("compare", help="factorial algorithm comparison")
    p_cmp.add_argument("--scenarios", required=True,
                       help="JSON file listing scenario configs")
    p_cmp.add_argument("--out", required=True)
    p_cmp.add_argument("--algorithms", default=",".join(reduce.ALGORITHMS))
    p_cmp.add_argument("--thresholds", default="5,10,20")
    p_cmp.add_argument("--reps", type=int, default=3)
    p_cmp.add_argument("--budget", type=int, default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_gen = sub.add_parser("gen", help="generate a synthetic trace")
    p_gen.add_argument("--spec", required=True, help="traffic spec JSON")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True,
                       help="output CSV path or directory")
    p_gen.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, trace.TraceError, sim.ConfigError, sim.SimulationError,
            oracle.OracleError, reduce.ReductionError, metrics.MetricsError,
            OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
