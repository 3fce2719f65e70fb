"""Effectiveness and efficiency measures, and the comparison harness.

The primary efficiency quantity is deterministic simulated time: the
seconds of simulated clock between a run's start and the failing time.
Wall-clock seconds are also recorded (they vary between repetitions and
are summarized with median/mean/stddev).  The effect-size statistic
compares wall-time samples of two algorithms.
"""

from __future__ import annotations

import csv
import json
import logging
import statistics
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .oracle import OracleConfig, judge
from .reduce import ReductionContext, ReductionResult, prepare_context, run_algorithm
from .sim import BuildingConfig, Checkpoint, FaultConfig, execute_test
from .trace import TestInput

log = logging.getLogger(__name__)

BASELINE_ALGORITHM = "backward"

COMPARISON_CSV_FIELDS = ("test", "threshold", "algorithm", "median_s", "mean_s",
                         "std_s", "tirr_ft", "passengers")


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class TirrReport:
    """Test-execution-time reduction ratio to failure.

    tirr_ft = 1 - tet_fail(reduced) / tet_fail(original), where tet_fail is
    simulated seconds from the run's start to its failing time.
    """

    tet_fail_original: Fraction
    tet_fail_reduced: Fraction
    tirr_ft: Fraction
    wall_seconds_original: float = 0.0
    wall_seconds_reduced: float = 0.0

    def to_dict(self) -> dict:
        return {
            "tet_fail_original": float(self.tet_fail_original),
            "tet_fail_reduced": float(self.tet_fail_reduced),
            "tirr_ft": float(self.tirr_ft),
            "wall_seconds_original": self.wall_seconds_original,
            "wall_seconds_reduced": self.wall_seconds_reduced,
        }


def tirr_ft(ctx: ReductionContext, reduced: TestInput,
            checkpoint: Optional[Checkpoint] = None) -> TirrReport:
    """Measure the reduction ratio of a reduced input against the context.

    The reduced input is re-executed (with its checkpoint, if the reduction
    produced one) and must fail under the context's thresholded oracle.
    """
    t0 = time.perf_counter()
    outcome = execute_test(reduced, ctx.building, ctx.fault,
                           checkpoint=checkpoint, record_env=False)
    wall_reduced = time.perf_counter() - t0
    verdict = judge(outcome, ctx.oracle_cfg)
    if not verdict.failed:
        raise MetricsError("reduced input passes; TIRR_ft is undefined")
    tet_original = ctx.failing_time - ctx.original_outcome.sim_start
    tet_reduced = verdict.failing_time - outcome.sim_start
    return TirrReport(
        tet_fail_original=tet_original,
        tet_fail_reduced=tet_reduced,
        tirr_ft=1 - tet_reduced / tet_original,
        wall_seconds_original=0.0,
        wall_seconds_reduced=wall_reduced,
    )


def a12(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """Vargha-Delaney effect size, oriented as P(a < b) + 0.5 P(a == b).

    For running times, where smaller means faster, the returned value is
    the probability that a draw from ``sample_a`` is faster than one from
    ``sample_b``: 1.0 means A always faster, 0.5 no difference.
    """
    if not sample_a or not sample_b:
        raise MetricsError("a12 needs nonempty samples")
    wins = 0.0
    for a in sample_a:
        for b in sample_b:
            if a < b:
                wins += 1.0
            elif a == b:
                wins += 0.5
    return wins / (len(sample_a) * len(sample_b))


@dataclass(frozen=True)
class Scenario:
    """One named failure-inducing setup for the comparison harness."""

    name: str
    building: BuildingConfig
    fault: FaultConfig
    trace: TestInput
    oracle_cfg: OracleConfig


@dataclass
class ComparisonRow:
    test: str
    threshold: float
    algorithm: str
    median_s: float
    mean_s: float
    std_s: float
    tirr_ft: float
    passengers: int
    a12_vs_baseline: Optional[float]
    wall_samples: list[float]

    def csv_values(self) -> list:
        return [self.test, self.threshold, self.algorithm,
                f"{self.median_s:.6f}", f"{self.mean_s:.6f}", f"{self.std_s:.6f}",
                f"{self.tirr_ft:.6f}", self.passengers]


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]
    repetitions: int

    def write_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COMPARISON_CSV_FIELDS)
            for row in self.rows:
                writer.writerow(row.csv_values())

    def write_json(self, path) -> None:
        data = {
            "repetitions": self.repetitions,
            "rows": [
                {
                    "test": r.test,
                    "threshold": r.threshold,
                    "algorithm": r.algorithm,
                    "median_s": r.median_s,
                    "mean_s": r.mean_s,
                    "std_s": r.std_s,
                    "tirr_ft": r.tirr_ft,
                    "passengers": r.passengers,
                    "a12_vs_baseline": r.a12_vs_baseline,
                    "wall_samples": r.wall_samples,
                }
                for r in self.rows
            ],
        }
        Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def _deterministic_signature(result: ReductionResult) -> tuple:
    return (tuple(p.id for p in result.final), result.simulations_executed,
            result.simulated_seconds_total)


def run_comparison(scenarios: Sequence[Scenario], algorithms: Sequence[str],
                   thresholds: Sequence, repetitions: int,
                   budget: Optional[int] = None) -> ComparisonTable:
    """Full factorial scenario x threshold x algorithm comparison.

    Every cell repeats the reduction ``repetitions`` times for wall-time
    statistics; the deterministic columns must be identical across
    repetitions and the reduced input must still fail, otherwise the
    harness aborts.
    """
    if repetitions < 1:
        raise MetricsError("repetitions must be >= 1")
    if not scenarios:
        raise MetricsError("at least one scenario required")
    rows: list[ComparisonRow] = []
    for scenario in scenarios:
        for threshold in thresholds:
            ctx = prepare_context(scenario.building, scenario.fault, scenario.trace,
                                  scenario.oracle_cfg, threshold=threshold,
                                  budget=budget)
            cell_results: dict[str, tuple[ReductionResult, list[float]]] = {}
            for algorithm in algorithms:
                samples: list[float] = []
                reference: Optional[ReductionResult] = None
                for _ in range(repetitions):
                    result = run_algorithm(algorithm, ctx)
                    samples.append(result.wall_seconds)
                    if reference is None:
                        reference = result
                    elif _deterministic_signature(result) != _deterministic_signature(reference):
                        raise MetricsError(
                            f"nondeterministic reduction: {algorithm} on "
                            f"{scenario.name} at threshold {threshold}"
                        )
                assert reference is not None
                cell_results[algorithm] = (reference, samples)
            baseline_samples = (cell_results[BASELINE_ALGORITHM][1]
                                if BASELINE_ALGORITHM in cell_results else None)
            for algorithm in algorithms:
                result, samples = cell_results[algorithm]
                report = tirr_ft(ctx, result.final, checkpoint=result.checkpoint)
                rows.append(ComparisonRow(
                    test=scenario.name,
                    threshold=float(threshold),
                    algorithm=algorithm,
                    median_s=statistics.median(samples),
                    mean_s=statistics.fmean(samples),
                    std_s=statistics.stdev(samples) if len(samples) > 1 else 0.0,
                    tirr_ft=float(report.tirr_ft),
                    passengers=result.final.np,
                    a12_vs_baseline=(None if baseline_samples is None
                                     else a12(samples, baseline_samples)),
                    wall_samples=samples,
                ))
    return ComparisonTable(rows=rows, repetitions=repetitions)
