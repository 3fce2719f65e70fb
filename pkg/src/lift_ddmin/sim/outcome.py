"""Simulation result types and their file exports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

OUTCOME_CSV_FIELDS = ("id", "elevator_used", "t_elev_arrived",
                      "t_reached_destination", "wt", "tt")


@dataclass(frozen=True)
class PassengerOutcome:
    """Per-passenger service record.

    Times are exact rational seconds.  ``t_elev_arrived`` is the moment the
    doors of the serving car finish opening for the stop at which this
    passenger boards; ``t_reached_destination`` is when the passenger has
    stepped out at the destination floor (None when the run was halted
    before that).  wt = t_elev_arrived - at, tt = t_reached_destination -
    t_elev_arrived.
    """

    passenger_id: int
    elevator_used: int
    t_elev_arrived: Fraction
    t_reached_destination: Optional[Fraction]
    wt: Fraction
    tt: Optional[Fraction]

    def __post_init__(self) -> None:
        assert self.wt >= 0, f"negative waiting time for passenger {self.passenger_id}"
        if self.t_reached_destination is not None:
            assert self.tt is not None and self.tt > 0
            assert self.t_reached_destination > self.t_elev_arrived


@dataclass(frozen=True)
class CarSnapshot:
    position: float        # real-valued floor while moving
    direction: str         # up | down | idle
    door: str              # open | closed | moving
    occupants: int
    load: float


@dataclass(frozen=True)
class EnvState:
    """System state sampled at one whole second of simulated time."""

    time: int
    cars: tuple[CarSnapshot, ...]
    pending_calls: int

    @property
    def is_static(self) -> bool:
        """All cars stopped, empty, doors closed, and no calls pending."""
        return self.pending_calls == 0 and all(
            c.direction == "idle" and c.door == "closed" and c.occupants == 0
            for c in self.cars
        )


@dataclass(frozen=True)
class SimOutcome:
    outcomes: tuple[PassengerOutcome, ...]
    env_log: tuple[EnvState, ...]
    sim_start: int
    sim_end: int
    simulated_duration: int

    def outcome_for(self, passenger_id: int) -> PassengerOutcome:
        for rec in self.outcomes:
            if rec.passenger_id == passenger_id:
                return rec
        raise KeyError(f"no outcome for passenger {passenger_id}")


@dataclass(frozen=True)
class StaticState:
    """A whole-second interval in which the system was fully at rest."""

    t_start: int
    t_end: int
    car_positions: tuple[int, ...]
    index: int


@dataclass(frozen=True)
class Checkpoint:
    """A restart point: simulation clock value and resting car positions."""

    start_time: int
    car_positions: tuple[int, ...]


def _fmt_secs(value: Optional[Fraction]) -> str:
    return "" if value is None else f"{float(value):.1f}"


def write_outcome_csv(outcome: SimOutcome, path) -> None:
    """Per-passenger results, one decimal place, Elevate-report style."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(OUTCOME_CSV_FIELDS)
        for rec in outcome.outcomes:
            writer.writerow([
                rec.passenger_id,
                rec.elevator_used,
                _fmt_secs(rec.t_elev_arrived),
                _fmt_secs(rec.t_reached_destination),
                _fmt_secs(rec.wt),
                _fmt_secs(rec.tt),
            ])


def write_env_jsonl(outcome: SimOutcome, path) -> None:
    """Environment log, one EnvState JSON object per line."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for state in outcome.env_log:
            fh.write(json.dumps({
                "time": state.time,
                "pending_calls": state.pending_calls,
                "cars": [
                    {
                        "position": car.position,
                        "direction": car.direction,
                        "door": car.door,
                        "occupants": car.occupants,
                        "load": car.load,
                    }
                    for car in state.cars
                ],
            }, separators=(",", ":")) + "\n")
