"""Quantitative test oracle: severity in [-1, 0] and thresholded verdicts.

A requirement caps a per-passenger metric (waiting or transit time).  The
verdict machinery supports a severity-degradation threshold: given the
worst value observed on the original failing run as a reference, a reduced
run only counts as failing while it stays within the threshold percentage
of that reference, so reduction cannot trade away failure severity.

All comparisons use exact rational arithmetic; the 285 s boundary of a
300 s reference at a 5% threshold is exact, not a float artifact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .sim import SimOutcome

MAX_WAITING_TIME = "max_waiting_time"
MAX_TRANSIT_TIME = "max_transit_time"
METRICS = (MAX_WAITING_TIME, MAX_TRANSIT_TIME)


class OracleError(ValueError):
    pass


def _exact(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


@dataclass(frozen=True)
class Requirement:
    metric: str
    limit: Fraction

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise OracleError(f"unknown metric {self.metric!r}")
        object.__setattr__(self, "limit", _exact(self.limit))
        if self.limit <= 0:
            raise OracleError("requirement limit must be positive")


@dataclass(frozen=True)
class Severity:
    """How badly a requirement is violated: 0 is a pass, -1 is the clamp."""

    value: Fraction
    observed: Fraction
    requirement: Requirement


@dataclass(frozen=True)
class Verdict:
    result: str                                  # "Pass" | "Fail"
    severities: tuple[Severity, ...]
    failing_time: Optional[Fraction] = None      # FT: earliest firing service time
    conflicting_passenger_id: Optional[int] = None

    @property
    def failed(self) -> bool:
        return self.result == "Fail"


@dataclass(frozen=True)
class OracleConfig:
    requirements: tuple[Requirement, ...]
    threshold: Fraction = Fraction(0)            # percent in [0, 100)
    references: dict = field(default_factory=dict)  # metric -> original worst value

    def __post_init__(self) -> None:
        object.__setattr__(self, "threshold", _exact(self.threshold))
        if not 0 <= self.threshold < 100:
            raise OracleError("threshold percent must be in [0, 100)")
        refs = {m: _exact(v) for m, v in self.references.items()}
        object.__setattr__(self, "references", refs)
        by_metric = {r.metric: r for r in self.requirements}
        for metric, ref in refs.items():
            req = by_metric.get(metric)
            if req is not None and ref <= req.limit:
                raise OracleError(
                    f"reference {ref} for {metric} does not exceed the limit {req.limit}"
                )

    def with_references(self, references: dict, threshold=None) -> "OracleConfig":
        return OracleConfig(
            requirements=self.requirements,
            threshold=self.threshold if threshold is None else threshold,
            references=references,
        )

    @classmethod
    def from_json(cls, path) -> "OracleConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        reqs = tuple(Requirement(metric=r["metric"], limit=_exact(r["limit"]))
                     for r in data["requirements"])
        return cls(requirements=reqs,
                   threshold=_exact(data.get("threshold", 0)),
                   references=data.get("references", {}))

    def to_json(self, path) -> None:
        data = {
            "requirements": [
                {"metric": r.metric, "limit": float(r.limit)} for r in self.requirements
            ],
            "threshold": float(self.threshold),
            "references": {m: float(v) for m, v in self.references.items()},
        }
        Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def _metric_value(outcome_record, metric: str) -> Optional[Fraction]:
    if metric == MAX_WAITING_TIME:
        return outcome_record.wt
    return outcome_record.tt   # None while in transit at a stop_time halt


def severity(outcome: SimOutcome, req: Requirement, scale=None) -> Severity:
    """Severity of the worst metric value: -min(1, (observed-limit)/scale).

    ``scale`` defaults to the limit itself, putting the -1 clamp at twice
    the limit; pass a different scale to move the clamp.
    """
    values = [v for rec in outcome.outcomes
              if (v := _metric_value(rec, req.metric)) is not None]
    observed = max(values) if values else Fraction(0)
    span = req.limit if scale is None else _exact(scale)
    value = -min(Fraction(1), max(Fraction(0), (observed - req.limit) / span))
    return Severity(value=value, observed=observed, requirement=req)


def _fires(value: Fraction, req: Requirement, cfg: OracleConfig) -> bool:
    if value <= req.limit:
        return False
    ref = cfg.references.get(req.metric)
    if ref is None:
        return True
    return value >= (1 - cfg.threshold / 100) * ref


def judge(outcome: SimOutcome, cfg: OracleConfig) -> Verdict:
    """Thresholded pass/fail with failing time and conflicting passenger.

    A requirement fires when the worst observed value exceeds its limit
    and, if a reference is set, stays within the severity threshold of it.
    The conflicting passenger is the earliest (by service time, then id)
    whose own value fires; the failing time is that service time.  With
    several firing requirements the minimum failing time wins.
    """
    severities = tuple(severity(outcome, r) for r in cfg.requirements)
    firing: list[tuple[Fraction, int]] = []
    for sev in severities:
        req = sev.requirement
        if not _fires(sev.observed, req, cfg):
            continue
        culprits = [
            (rec.t_elev_arrived, rec.passenger_id)
            for rec in outcome.outcomes
            if (v := _metric_value(rec, req.metric)) is not None and _fires(v, req, cfg)
        ]
        firing.append(min(culprits))
    if not firing:
        return Verdict(result="Pass", severities=severities)
    ft, pid = min(firing)
    return Verdict(result="Fail", severities=severities,
                   failing_time=ft, conflicting_passenger_id=pid)


def make_reference(outcome: SimOutcome, requirements) -> dict:
    """Per-metric worst values of a failing run, for thresholded judging.

    Only requirements actually violated contribute; judging the rest keeps
    plain above-limit semantics.  Raises when nothing is violated.
    """
    refs = {}
    for req in requirements:
        sev = severity(outcome, req)
        if sev.observed > req.limit:
            refs[req.metric] = sev.observed
    if not refs:
        raise OracleError("input is not failure-inducing: no requirement violated")
    return refs


def verdict_to_dict(verdict: Verdict) -> dict:
    return {
        "result": verdict.result,
        "failing_time": None if verdict.failing_time is None else float(verdict.failing_time),
        "conflicting_passenger_id": verdict.conflicting_passenger_id,
        "severities": [
            {
                "metric": s.requirement.metric,
                "limit": float(s.requirement.limit),
                "observed": float(s.observed),
                "value": float(s.value),
            }
            for s in verdict.severities
        ],
    }
