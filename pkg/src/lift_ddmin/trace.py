"""Passenger traces: data model, CSV interchange, synthetic generation."""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

CSV_FIELDS = ("id", "at", "af", "df", "m", "cf", "ent", "ext")

DEFAULT_MASS = 75.0
DEFAULT_CAPACITY_FACTOR = 80.0
DEFAULT_ENTER_TIME = 1.2
DEFAULT_EXIT_TIME = 1.2

PROFILES = ("uniform", "lunch-peak", "up-peak")


class TraceError(ValueError):
    """Malformed passenger data or trace file."""


@dataclass(frozen=True, slots=True)
class Passenger:
    """One passenger request: arrival, trip, and boarding characteristics.

    Times are integer seconds since midnight; ``ent``/``ext`` are the
    seconds the passenger needs to step in/out of a car.  ``cf`` is the
    percentage of a car's rated capacity at which this passenger refuses
    to board.
    """

    id: int
    at: int
    af: int
    df: int
    m: float = DEFAULT_MASS
    cf: float = DEFAULT_CAPACITY_FACTOR
    ent: float = DEFAULT_ENTER_TIME
    ext: float = DEFAULT_EXIT_TIME

    def __post_init__(self) -> None:
        if self.id < 1:
            raise TraceError(f"passenger id must be >= 1, got {self.id}")
        if self.at < 0:
            raise TraceError(f"passenger {self.id}: arrival time must be >= 0")
        if self.af < 1 or self.df < 1:
            raise TraceError(f"passenger {self.id}: floors must be >= 1")
        if self.af == self.df:
            raise TraceError(
                f"passenger {self.id}: arrival floor equals destination floor ({self.af})"
            )
        if self.m <= 0:
            raise TraceError(f"passenger {self.id}: mass must be positive")
        if not 0 < self.cf <= 100:
            raise TraceError(f"passenger {self.id}: capacity factor must be in (0, 100]")
        if self.ent <= 0 or self.ext <= 0:
            raise TraceError(f"passenger {self.id}: ent/ext must be positive")

    @property
    def direction(self) -> int:
        """+1 for an up trip, -1 for a down trip."""
        return 1 if self.df > self.af else -1


@dataclass(frozen=True)
class TestInput:
    """An arrival-ordered, immutable sequence of passengers.

    Ordering is by arrival time with ties broken by ascending id; ids are
    unique.  Reduced inputs keep the original ids so a passenger can be
    traced back to the full trace.
    """

    passengers: tuple[Passenger, ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        prev: Passenger | None = None
        for p in self.passengers:
            if p.id in seen:
                raise TraceError(f"duplicate passenger id {p.id}")
            seen.add(p.id)
            if prev is not None and (p.at, p.id) < (prev.at, prev.id):
                raise TraceError(
                    f"passengers out of order: id {p.id} (at={p.at}) after "
                    f"id {prev.id} (at={prev.at})"
                )
            prev = p

    @classmethod
    def from_passengers(cls, passengers: Iterable[Passenger]) -> "TestInput":
        """Build a TestInput, sorting into canonical (at, id) order."""
        return cls(tuple(sorted(passengers, key=lambda p: (p.at, p.id))))

    @property
    def np(self) -> int:
        return len(self.passengers)

    def __len__(self) -> int:
        return len(self.passengers)

    def __iter__(self):
        return iter(self.passengers)

    def __getitem__(self, i: int) -> Passenger:
        return self.passengers[i]

    @property
    def first(self) -> Passenger:
        return self.passengers[0]

    @property
    def last(self) -> Passenger:
        return self.passengers[-1]

    def arriving_after(self, t) -> "TestInput":
        """Passengers with at strictly greater than t (order preserved)."""
        return TestInput(tuple(p for p in self.passengers if p.at > t))

    def arriving_at_or_before(self, t) -> "TestInput":
        return TestInput(tuple(p for p in self.passengers if p.at <= t))

    def suffix(self, start: int) -> "TestInput":
        """Drop the first ``start`` passengers (0-based slice)."""
        return TestInput(self.passengers[max(0, start):])

    def index_of(self, passenger_id: int) -> int:
        for i, p in enumerate(self.passengers):
            if p.id == passenger_id:
                return i
        raise KeyError(f"no passenger with id {passenger_id}")


def _clock(seconds: int) -> str:
    h, rem = divmod(seconds, 3600)
    m, s = divmod(rem, 60)
    return f"{h}:{m:02d}:{s:02d}"


def _fmt(value: float) -> str:
    # repr() keeps the shortest exact decimal so load(save(ti)) == ti
    return repr(float(value))


def save_test_input(ti: TestInput, path) -> None:
    """Write a trace CSV (UTF-8, LF).

    Columns are ``id,at,af,df,m,cf,ent,ext`` plus a trailing derived
    ``clock`` column for human inspection; the loader ignores it.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS + ("clock",))
        for p in ti:
            writer.writerow(
                [p.id, p.at, p.af, p.df, _fmt(p.m), _fmt(p.cf), _fmt(p.ent), _fmt(p.ext),
                 _clock(p.at)]
            )


def load_test_input(path) -> TestInput:
    """Read a trace CSV, validating rows and restoring canonical order.

    Rows out of arrival order are accepted and re-sorted (logged); a
    malformed row or an af == df row is an error naming the offender.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceError(f"{path}: empty file, expected header {','.join(CSV_FIELDS)}")
        if tuple(h.strip() for h in header[: len(CSV_FIELDS)]) != CSV_FIELDS:
            raise TraceError(
                f"{path}: bad header {header!r}, expected {','.join(CSV_FIELDS)}"
            )
        passengers = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                passengers.append(
                    Passenger(
                        id=int(row[0]),
                        at=int(row[1]),
                        af=int(row[2]),
                        df=int(row[3]),
                        m=float(row[4]),
                        cf=float(row[5]),
                        ent=float(row[6]),
                        ext=float(row[7]),
                    )
                )
            except TraceError as exc:
                raise TraceError(f"{path}:{lineno}: {exc}") from exc
            except (IndexError, ValueError) as exc:
                raise TraceError(f"{path}:{lineno}: malformed row {row!r}") from exc
    ordered = sorted(passengers, key=lambda p: (p.at, p.id))
    if ordered != passengers:
        log.info("%s: rows were out of arrival order, re-sorted on load", path)
    return TestInput(tuple(ordered))


@dataclass(frozen=True)
class TrafficSpec:
    """Parameters for synthetic trace generation."""

    floors: int
    n: int
    window: tuple[int, int]
    profile: str = "uniform"
    m: float = DEFAULT_MASS
    cf: float = DEFAULT_CAPACITY_FACTOR
    ent: float = DEFAULT_ENTER_TIME
    ext: float = DEFAULT_EXIT_TIME
    lobby_share: float = field(default=0.95)  # up-peak: fraction arriving at floor 1

    def __post_init__(self) -> None:
        if self.floors < 2:
            raise TraceError(f"floor count must be >= 2, got {self.floors}")
        if self.n < 0:
            raise TraceError("passenger count must be >= 0")
        t0, t1 = self.window
        if t0 < 0 or t1 < t0:
            raise TraceError(f"bad time window {self.window}")
        if self.profile not in PROFILES:
            raise TraceError(f"unknown profile {self.profile!r}, expected one of {PROFILES}")

    @classmethod
    def from_json(cls, path) -> "TrafficSpec":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            floors=data["floors"],
            n=data["n"],
            window=tuple(data["window"]),
            profile=data.get("profile", "uniform"),
            m=data.get("m", DEFAULT_MASS),
            cf=data.get("cf", DEFAULT_CAPACITY_FACTOR),
            ent=data.get("ent", DEFAULT_ENTER_TIME),
            ext=data.get("ext", DEFAULT_EXIT_TIME),
            lobby_share=data.get("lobby_share", 0.95),
        )


def _arrival_time(rng: random.Random, spec: TrafficSpec) -> int:
    t0, t1 = spec.window
    if t1 == t0:
        return t0
    if spec.profile == "lunch-peak":
        # triangular density peaking mid-window
        return int(round(rng.triangular(t0, t1, (t0 + t1) / 2)))
    return rng.randint(t0, t1)


def _trip(rng: random.Random, spec: TrafficSpec) -> tuple[int, int]:
    floors = spec.floors
    if spec.profile == "up-peak":
        if rng.random() < spec.lobby_share:
            return 1, rng.randint(2, floors)
        af = rng.randint(2, floors)
        df = rng.randint(1, floors - 1)
        return af, df if df < af else df + 1
    if spec.profile == "lunch-peak":
        r = rng.random()
        if r < 0.45:
            return 1, rng.randint(2, floors)
        if r < 0.90:
            return rng.randint(2, floors), 1
    af = rng.randint(1, floors)
    df = rng.randint(1, floors - 1)
    return af, df if df < af else df + 1


def generate_trace(spec: TrafficSpec, seed: int) -> TestInput:
    """Deterministically generate a synthetic trace for (spec, seed)."""
    rng = random.Random(seed)
    raw = []
    for _ in range(spec.n):
        at = _arrival_time(rng, spec)
        af, df = _trip(rng, spec)
        raw.append((at, af, df))
    raw.sort(key=lambda r: r[0])  # stable: generation order breaks at-ties
    passengers = [
        Passenger(id=i, at=at, af=af, df=df, m=spec.m, cf=spec.cf, ent=spec.ent, ext=spec.ext)
        for i, (at, af, df) in enumerate(raw, start=1)
    ]
    return TestInput(tuple(passengers))


def merge_traces(*traces: TestInput) -> TestInput:
    """Concatenate traces into one, renumbering ids in arrival order.

    Used to build multi-burst traffic (e.g. two peaks separated by a lull)
    from independently generated segments.
    """
    merged = sorted(
        (p for ti in traces for p in ti),
        key=lambda p: (p.at, p.id),
    )
    renumbered = [
        Passenger(id=i, at=p.at, af=p.af, df=p.df, m=p.m, cf=p.cf, ent=p.ent, ext=p.ext)
        for i, p in enumerate(merged, start=1)
    ]
    return TestInput(tuple(renumbered))
