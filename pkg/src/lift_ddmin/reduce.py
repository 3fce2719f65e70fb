"""Failure-inducing test-input minimization.

Five algorithms over (simulator, oracle):

* ``dd_time``  - delta debugging over arrival times: candidate windows are
  halved/regrown on the time axis.
* ``dd_event`` - delta debugging over arrival order: windows counted in
  passengers instead of seconds.
* ``ewdd``     - environment-wise variant of either: first jump to the
  suffix after the latest detected static state, restarting the simulator
  from a checkpoint, then refine with the plain algorithm, carrying the
  checkpoint through every execution.
* ``backward`` - baseline that grows a suffix one passenger at a time from
  the conflict set until the failure reproduces.

All of them first truncate the trace at the failing time: passengers whose
calls were registered after the oracle already failed cannot have
influenced the failure.  Every candidate verdict uses the thresholded
oracle against the original run's references, so the result keeps the
original failure's severity class.  An empty candidate counts as Pass.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .oracle import OracleConfig, OracleError, Verdict, judge, make_reference
from .sim import (BuildingConfig, Checkpoint, FaultConfig, SimOutcome,
                  checkpoint_from, detect_static_states, execute_test)
from .trace import TestInput

log = logging.getLogger(__name__)

ALGORITHMS = ("backward", "dd-time", "dd-event", "ewdd-time", "ewdd-event")


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class ReductionContext:
    """Everything a reduction run needs, built from one original failure."""

    building: BuildingConfig
    fault: FaultConfig
    oracle_cfg: OracleConfig
    original: TestInput
    original_verdict: Verdict
    original_outcome: SimOutcome
    budget: Optional[int] = None          # max candidate simulations
    stop_at_failure: bool = True          # charge failing runs only up to their FT

    def __post_init__(self) -> None:
        if not self.original_verdict.failed or self.original_verdict.failing_time is None:
            raise ReductionError("original verdict must be Fail with a failing time")

    @property
    def failing_time(self) -> Fraction:
        return self.original_verdict.failing_time


def prepare_context(building: BuildingConfig, fault: FaultConfig, ti: TestInput,
                    oracle_cfg: OracleConfig, threshold=None,
                    budget: Optional[int] = None) -> ReductionContext:
    """Run the original input, derive references, and re-judge thresholded.

    At a zero threshold the oracle stays plain (fail = any metric above its
    limit); for a positive threshold the original run's worst values become
    references, so candidate failures must stay within the threshold of the
    original severity.  Raises OracleError when the input does not fail at
    threshold zero.
    """
    outcome = execute_test(ti, building, fault)
    refs = make_reference(outcome, oracle_cfg.requirements)
    effective = oracle_cfg.threshold if threshold is None else threshold
    if effective == 0:
        cfg = oracle_cfg.with_references({}, threshold=0)
    else:
        cfg = oracle_cfg.with_references(refs, threshold=threshold)
    verdict = judge(outcome, cfg)
    if not verdict.failed:
        # possible only for a degenerate threshold configuration
        raise OracleError("original input does not fail under the thresholded oracle")
    return ReductionContext(building=building, fault=fault, oracle_cfg=cfg,
                            original=ti, original_verdict=verdict,
                            original_outcome=outcome, budget=budget)


@dataclass(frozen=True)
class IterationRecord:
    phase: str                 # probe | search | verify
    candidate_np: int
    verdict: str               # Pass | Fail | skipped-empty
    sim_seconds: Fraction
    static_state_index: Optional[int] = None


@dataclass
class ReductionResult:
    algorithm: str
    final: TestInput
    iterations: int
    simulations_executed: int
    simulated_seconds_total: Fraction
    wall_seconds: float
    log: list[IterationRecord]
    checkpoint: Optional[Checkpoint] = None
    final_failing_time: Optional[Fraction] = None
    final_sim_start: Optional[int] = None
    aborted: bool = False
    abort_reason: Optional[str] = None
    ewdd_static_states: Optional[int] = None
    ewdd_reproduced_at: Optional[int] = None
    fell_back: bool = False

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "final_np": self.final.np,
            "final_passenger_ids": [p.id for p in self.final],
            "iterations": self.iterations,
            "simulations_executed": self.simulations_executed,
            "simulated_seconds_total": float(self.simulated_seconds_total),
            "wall_seconds": self.wall_seconds,
            "checkpoint": None if self.checkpoint is None else {
                "start_time": self.checkpoint.start_time,
                "car_positions": list(self.checkpoint.car_positions),
            },
            "final_failing_time": (None if self.final_failing_time is None
                                   else float(self.final_failing_time)),
            "final_sim_start": self.final_sim_start,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "ewdd_static_states": self.ewdd_static_states,
            "ewdd_reproduced_at": self.ewdd_reproduced_at,
            "fell_back": self.fell_back,
            "log": [
                {
                    "phase": rec.phase,
                    "candidate_np": rec.candidate_np,
                    "verdict": rec.verdict,
                    "sim_seconds": float(rec.sim_seconds),
                    "static_state_index": rec.static_state_index,
                }
                for rec in self.log
            ],
        }


# -- split primitives ------------------------------------------------------


def split_on_failure(ti: TestInput, ft, outcome: Optional[SimOutcome] = None) -> TestInput:
    """Truncate at the failing time: keep passengers with at <= ft.

    Everyone whose call was registered at or before the failing service
    time may have influenced the assignment; later passengers cannot.
    The outcome argument is accepted for callers that have it handy but
    the horizon is the failing time alone.
    """
    del outcome
    return ti.arriving_at_or_before(ft)


def split_min_time(ti: TestInput, sim_time, it: int) -> TestInput:
    """Keep passengers arriving strictly after p1.at + sim_time / 2**it."""
    if ti.np == 0:
        return ti
    split_at = ti.first.at + Fraction(sim_time) / 2 ** it
    return ti.arriving_after(split_at)


def split_max_time(ti_new: TestInput, ti_prev: TestInput, sim_time, it: int) -> TestInput:
    """Regrow: passengers of ti_prev after ti_new's start minus a window.

    With an empty ti_new the anchor falls back to ti_prev's first arrival,
    which regrows to the whole of ti_prev and lets the loop converge.
    """
    anchor = ti_new.first.at if ti_new.np else ti_prev.first.at
    split_at = anchor - Fraction(sim_time) / 2 ** it
    return ti_prev.arriving_after(split_at)


def split_min_event(ti: TestInput, split_size: int) -> TestInput:
    """Drop the first split_size - 1 passengers (keep the last np-split_size+1)."""
    return ti.suffix(max(0, split_size - 1))


def split_max_event(size_ti: int, ti_prev: TestInput, split_size: int) -> TestInput:
    """Regrow: drop the first np - (size_ti + split_size) of ti_prev."""
    to_split = ti_prev.np - (size_ti + split_size)
    return ti_prev.suffix(max(0, to_split))


# -- candidate execution ----------------------------------------------------


class _BudgetExhausted(Exception):
    pass


class _Runner:
    """Executes candidates, judges them, and keeps the books."""

    def __init__(self, ctx: ReductionContext):
        self.ctx = ctx
        self.simulations = 0
        self.sim_seconds = Fraction(0)
        self.log: list[IterationRecord] = []
        self.last_failing: Optional[TestInput] = None
        self.last_failing_ft: Optional[Fraction] = None
        self.last_failing_start: Optional[int] = None
        self.last_failing_checkpoint: Optional[Checkpoint] = None

    def execute(self, candidate: TestInput, checkpoint: Optional[Checkpoint],
                phase: str, static_state_index: Optional[int] = None) -> bool:
        """Run and judge one candidate; returns True on Fail."""
        if candidate.np == 0:
            self.log.append(IterationRecord(phase, 0, "skipped-empty", Fraction(0),
                                            static_state_index))
            return False
        if self.ctx.budget is not None and self.simulations >= self.ctx.budget:
            raise _BudgetExhausted
        outcome = execute_test(candidate, self.ctx.building, self.ctx.fault,
                               checkpoint=checkpoint, record_env=False)
        verdict = judge(outcome, self.ctx.oracle_cfg)
        self.simulations += 1
        if verdict.failed and self.ctx.stop_at_failure:
            charged = verdict.failing_time - outcome.sim_start
        else:
            charged = Fraction(outcome.sim_end - outcome.sim_start)
        self.sim_seconds += charged
        self.log.append(IterationRecord(phase, candidate.np, verdict.result,
                                        charged, static_state_index))
        if verdict.failed:
            self.last_failing = candidate
            self.last_failing_ft = verdict.failing_time
            self.last_failing_start = outcome.sim_start
            self.last_failing_checkpoint = checkpoint
        return verdict.failed

    def ensure_verified(self, final: TestInput, checkpoint: Optional[Checkpoint]) -> tuple:
        """Failing time and start of the final input's own failing run.

        Reuses the loop's last failing execution when it was this exact
        input; otherwise runs it once (phase ``verify``, not charged to the
        search total).
        """
        if (self.last_failing is not None
                and self.last_failing.passengers == final.passengers
                and self.last_failing_checkpoint == checkpoint):
            return self.last_failing_ft, self.last_failing_start
        outcome = execute_test(final, self.ctx.building, self.ctx.fault,
                               checkpoint=checkpoint, record_env=False)
        verdict = judge(outcome, self.ctx.oracle_cfg)
        self.log.append(IterationRecord("verify", final.np, verdict.result,
                                        Fraction(outcome.sim_end - outcome.sim_start)))
        if not verdict.failed:
            raise ReductionError(
                f"reduced input of {final.np} passengers does not reproduce the failure"
            )
        return verdict.failing_time, outcome.sim_start


def _result(ctx: ReductionContext, algorithm: str, final: TestInput, runner: _Runner,
            iterations: int, t0: float, checkpoint: Optional[Checkpoint] = None,
            aborted: bool = False, abort_reason: Optional[str] = None,
            **extra) -> ReductionResult:
    ft, start = runner.ensure_verified(final, checkpoint)
    return ReductionResult(
        algorithm=algorithm,
        final=final,
        iterations=iterations,
        simulations_executed=runner.simulations,
        simulated_seconds_total=runner.sim_seconds,
        wall_seconds=time.perf_counter() - t0,
        log=runner.log,
        checkpoint=checkpoint,
        final_failing_time=ft,
        final_sim_start=start,
        aborted=aborted,
        abort_reason=abort_reason,
        **extra,
    )


# -- the algorithms ----------------------------------------------------------


def _dd_time_loop(runner: _Runner, ti_prime: TestInput,
                  checkpoint: Optional[Checkpoint]) -> tuple[TestInput, int, Optional[str]]:
    """Core of the time-based delta debugging loop, from the sim-time step on.

    Returns (final, iterations, abort_reason).
    """
    if ti_prime.np == 0:
        raise ReductionError("cannot reproduce: no passengers before the failing time")
    sim_time = ti_prime.last.at - ti_prime.first.at   # fixed for the whole run
    if sim_time == 0:
        log.info("dd-time: all arrivals at one instant, nothing to split on")
        return ti_prime, 0, None
    it = 1
    max_it = math.ceil(math.log2(sim_time)) + ti_prime.np
    ti_new = split_min_time(ti_prime, sim_time, it)
    prev_candidate = None
    while ti_prime.np != ti_new.np:
        if it > max_it:
            return ti_prime, it, "iteration safeguard tripped"
        failed = runner.execute(ti_new, checkpoint, "search")
        it += 1
        if failed:
            ti_prime = ti_new
            ti_new = split_min_time(ti_new, sim_time, it)
            prev_candidate = None
        else:
            regrown = split_max_time(ti_new, ti_prime, sim_time, it)
            if prev_candidate is not None and regrown.passengers == prev_candidate:
                # the regrow window has shrunk below the arrival gap; no
                # further growth is possible at any later iteration
                return ti_prime, it, "time-split stalled in an arrival gap"
            prev_candidate = regrown.passengers
            ti_new = regrown
    return ti_prime, it, None


def dd_time(ctx: ReductionContext) -> ReductionResult:
    """Time-based delta debugging."""
    t0 = time.perf_counter()
    runner = _Runner(ctx)
    ti_prime = split_on_failure(ctx.original, ctx.failing_time)
    try:
        final, iterations, reason = _dd_time_loop(runner, ti_prime, None)
    except _BudgetExhausted:
        final, iterations, reason = _fallback_final(runner, ti_prime), len(runner.log), "budget exhausted"
    return _result(ctx, "dd-time", final, runner, iterations, t0,
                   aborted=reason is not None, abort_reason=reason)


def _dd_event_loop(runner: _Runner, ti_prime: TestInput,
                   checkpoint: Optional[Checkpoint]) -> tuple[TestInput, int, Optional[str]]:
    if ti_prime.np == 0:
        raise ReductionError("cannot reproduce: no passengers before the failing time")
    split_size = math.ceil(ti_prime.np / 2)
    ti_new = split_min_event(ti_prime, split_size)
    iterations = 0
    max_it = 2 * ti_prime.np + math.ceil(math.log2(max(2, ti_prime.np))) + 4
    while ti_prime.np != ti_new.np:
        if iterations > max_it:
            return ti_prime, iterations, "iteration safeguard tripped"
        failed = runner.execute(ti_new, checkpoint, "search")
        iterations += 1
        split_size = math.ceil(split_size / 2)
        if failed:
            ti_prime = ti_new
            ti_new = split_min_event(ti_new, split_size)
        else:
            ti_new = split_max_event(ti_new.np, ti_prime, split_size)
    return ti_prime, iterations, None


def dd_event(ctx: ReductionContext) -> ReductionResult:
    """Event-based delta debugging (splits by passenger count)."""
    t0 = time.perf_counter()
    runner = _Runner(ctx)
    ti_prime = split_on_failure(ctx.original, ctx.failing_time)
    try:
        final, iterations, reason = _dd_event_loop(runner, ti_prime, None)
    except _BudgetExhausted:
        final, iterations, reason = _fallback_final(runner, ti_prime), len(runner.log), "budget exhausted"
    return _result(ctx, "dd-event", final, runner, iterations, t0,
                   aborted=reason is not None, abort_reason=reason)


def _fallback_final(runner: _Runner, ti_prime: TestInput) -> TestInput:
    return runner.last_failing if runner.last_failing is not None else ti_prime


def ewdd(ctx: ReductionContext, flavor: str = "time") -> ReductionResult:
    """Environment-wise delta debugging.

    Probes detected static states from the last one backwards: restart the
    simulation from the state's checkpoint with only the passengers after
    it.  The first reproducing probe fixes the checkpoint and the candidate
    for the plain algorithm, which then runs with that checkpoint on every
    execution.  With no static states, or none reproducing, falls back to
    the plain algorithm on the truncated input.
    """
    if flavor not in ("time", "event"):
        raise ReductionError(f"unknown ewdd flavor {flavor!r}")
    name = f"ewdd-{flavor}"
    loop = _dd_time_loop if flavor == "time" else _dd_event_loop
    t0 = time.perf_counter()
    runner = _Runner(ctx)
    ti_prime = split_on_failure(ctx.original, ctx.failing_time)
    states = detect_static_states(ctx.original_outcome, ctx.failing_time)
    extra: dict = {"ewdd_static_states": len(states)}

    checkpoint = None
    start_input = ti_prime
    reproduced_at = None
    try:
        i = len(states)
        while i >= 1:
            state = states[i - 1]
            probe_checkpoint = checkpoint_from(state)
            candidate = ti_prime.arriving_after(state.t_end)
            failed = runner.execute(candidate, probe_checkpoint, "probe",
                                    static_state_index=state.index)
            i -= 1
            if failed:
                checkpoint = probe_checkpoint
                start_input = candidate
                reproduced_at = state.index
                break
        extra["ewdd_reproduced_at"] = reproduced_at
        extra["fell_back"] = reproduced_at is None
        if reproduced_at is None and states:
            log.info("%s: no static state reproduced the failure, falling back", name)
        final, iterations, reason = loop(runner, start_input, checkpoint)
        iterations += len([r for r in runner.log if r.phase == "probe"])
    except _BudgetExhausted:
        final = _fallback_final(runner, ti_prime)
        iterations = len(runner.log)
        reason = "budget exhausted"
        checkpoint = runner.last_failing_checkpoint
    return _result(ctx, name, final, runner, iterations, t0, checkpoint=checkpoint,
                   aborted=reason is not None, abort_reason=reason, **extra)


def backward(ctx: ReductionContext) -> ReductionResult:
    """Baseline: grow a suffix from the conflict set until failure returns.

    The first candidate is the conflicting passenger plus the later
    passengers that may have influenced its service; passengers before it
    are then prepended one at a time.  The result is the shortest failing
    suffix containing the conflict set; the truncated input itself fails
    by construction, so the loop terminates.
    """
    t0 = time.perf_counter()
    runner = _Runner(ctx)
    ti_prime = split_on_failure(ctx.original, ctx.failing_time)
    if ti_prime.np == 0:
        raise ReductionError("cannot reproduce: no passengers before the failing time")
    conflict_idx = ti_prime.index_of(ctx.original_verdict.conflicting_passenger_id)
    iterations = 0
    reason = None
    final = ti_prime
    try:
        for start in range(conflict_idx, -1, -1):
            candidate = ti_prime.suffix(start)
            iterations += 1
            if runner.execute(candidate, None, "search"):
                final = candidate
                break
        else:
            reason = "no suffix reproduced the failure"
    except _BudgetExhausted:
        final = _fallback_final(runner, ti_prime)
        reason = "budget exhausted"
    return _result(ctx, "backward", final, runner, iterations, t0,
                   aborted=reason is not None, abort_reason=reason)


def run_algorithm(name: str, ctx: ReductionContext) -> ReductionResult:
    if name == "backward":
        return backward(ctx)
    if name == "dd-time":
        return dd_time(ctx)
    if name == "dd-event":
        return dd_event(ctx)
    if name == "ewdd-time":
        return ewdd(ctx, "time")
    if name == "ewdd-event":
        return ewdd(ctx, "event")
    raise ReductionError(f"unknown algorithm {name!r}, expected one of {ALGORITHMS}")
