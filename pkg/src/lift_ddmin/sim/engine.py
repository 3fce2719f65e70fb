"""Deterministic discrete-event simulator of an elevator group.

The dispatcher implements collective group control: every hall call is
assigned at call time to the car with the lowest estimated time-to-serve
(remaining door work + committed stops + travel), cars serve committed
stops in their travel direction before reversing, and a passenger boards
only while the car stays under that passenger's capacity threshold,
otherwise the hall call is re-issued when the car departs.  A seeded
FaultConfig perturbs exactly this assignment logic.

Internally time is integer ticks of 1/L seconds, where L is the least
common multiple of the denominators of every configured duration (door
times, per-floor travel time, passenger enter/exit times).  All event
arithmetic is exact, so a run is a pure function of its arguments.
"""

from __future__ import annotations

import heapq
import logging
import math
from fractions import Fraction
from typing import Optional

from ..trace import Passenger, TestInput
from .config import BuildingConfig, ConfigError, FaultConfig, PARK_FLOOR
from .outcome import (CarSnapshot, Checkpoint, EnvState, PassengerOutcome,
                      SimOutcome)

log = logging.getLogger(__name__)

UP, DOWN, IDLE = 1, -1, 0

# event priorities at equal ticks: physical settles before new decisions
_PRIO_CLOSED = 0
_PRIO_ARRIVE = 1
_PRIO_OPENED = 2
_PRIO_PAX = 3
_PRIO_REDISPATCH = 4

_DIR_NAMES = {UP: "up", DOWN: "down", IDLE: "idle"}


class SimulationError(RuntimeError):
    """Invalid simulation input or an internal safety valve tripping."""


def _exact(value) -> Fraction:
    """Exact rational for a duration given as int/float config value."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


def _select_stop(pos: Fraction, dirn: int, halls: set[tuple[int, int]],
                 car_calls: set[int],
                 taboo: Optional[tuple[int, int]] = None) -> Optional[tuple[int, int]]:
    """Pick the next committed stop and its service direction.

    Collective policy: continue in the travel direction serving car calls
    and same-direction hall calls; with none ahead, run to the farthest
    opposite hall call and reverse there; with nothing in the travel
    direction at all, turn around.  An idle car heads toward its nearest
    committed floor.

    ``taboo`` names a hall stop the car has just serviced: it may only be
    re-served immediately when the car has nowhere else to go, otherwise a
    full car would pin itself to one floor reopening for passengers it
    cannot take.
    """
    if taboo is not None:
        kept = {(f, d) for f, d in halls if (f, d) != taboo}
        sel = _select_stop(pos, dirn, kept, car_calls)
        if sel is not None:
            return sel
    if not halls and not car_calls:
        return None
    if dirn == IDLE:
        floors = {f for f, _ in halls} | car_calls
        best = min(sorted(floors), key=lambda g: abs(g - pos))
        if best == pos:
            here = {d for f, d in halls if f == best}
            sdir = UP if UP in here or not here else DOWN
            return int(best), sdir
        dirs = (UP, DOWN) if best > pos else (DOWN, UP)
    else:
        dirs = (dirn, -dirn)
    for d in dirs:
        in_dir = [f for f, hd in halls if hd == d and (f - pos) * d >= 0]
        in_dir += [f for f in car_calls if (f - pos) * d >= 0]
        if in_dir:
            return min(in_dir, key=lambda f: abs(f - pos)), d
        opposite = [f for f, hd in halls if hd == -d and (f - pos) * d >= 0]
        if opposite:
            return max(opposite, key=lambda f: abs(f - pos)), -d
    return None


class _Call:
    __slots__ = ("passenger", "floor", "direction", "car", "exclude")

    def __init__(self, passenger: Passenger):
        self.passenger = passenger
        self.floor = passenger.af
        self.direction = passenger.direction
        self.car: Optional[int] = None
        self.exclude: Optional[int] = None


class _Car:
    __slots__ = (
        "idx", "spec", "floor", "target", "moving", "parking", "depart_tick",
        "gen", "direction", "door", "service_dir", "open_ticks", "close_ticks",
        "dwell_ticks", "tpf_ticks", "door_open_tick", "close_begin_tick",
        "door_free_tick", "riders", "load", "assigned",
    )

    def __init__(self, idx: int, spec, start_floor: int, ticks):
        self.idx = idx
        self.spec = spec
        self.open_ticks, self.close_ticks, self.dwell_ticks, self.tpf_ticks = ticks
        self.floor = start_floor          # departure floor while moving
        self.target = start_floor
        self.moving = False
        self.parking = False
        self.depart_tick = 0
        self.gen = 0                      # bumped on every retarget
        self.direction = IDLE
        self.door = "closed"              # closed | opening | open
        self.service_dir = IDLE
        self.door_open_tick = 0
        self.close_begin_tick = 0
        self.door_free_tick = 0           # best known tick when doors are closed again
        self.riders: list[Passenger] = []
        self.load = 0.0
        self.assigned: list[_Call] = []

    def position(self, tick: int) -> Fraction:
        if not self.moving:
            return Fraction(self.floor)
        progressed = Fraction(tick - self.depart_tick, self.tpf_ticks)
        sign = UP if self.target > self.floor else DOWN
        return self.floor + sign * progressed

    def coarse_floor(self) -> int:
        return self.floor

    def hall_stops(self) -> set[tuple[int, int]]:
        return {(c.floor, c.direction) for c in self.assigned}

    def car_stops(self) -> set[int]:
        return {p.df for p in self.riders}

    def door_state_at(self, tick: int) -> str:
        if self.door == "closed":
            return "closed"
        if self.door == "opening":
            return "moving"
        return "open" if tick < self.close_begin_tick else "moving"


class _Engine:
    def __init__(self, ti: TestInput, building: BuildingConfig, fault: FaultConfig,
                 checkpoint: Optional[Checkpoint], stop_time: Optional[int],
                 record_env: bool):
        fault.validate_against(building)
        self.building = building
        self.fault = fault
        self.record_env = record_env
        self.ti = ti

        for p in ti:
            if not (1 <= p.af <= building.floors and 1 <= p.df <= building.floors):
                raise SimulationError(
                    f"passenger {p.id} uses floor outside building of {building.floors} floors"
                )

        if checkpoint is not None:
            if len(checkpoint.car_positions) != len(building.cars):
                raise SimulationError("checkpoint car_positions length mismatch")
            for g in checkpoint.car_positions:
                if not 1 <= g <= building.floors:
                    raise SimulationError(f"checkpoint position {g} outside building")
            for p in ti:
                if p.at < checkpoint.start_time:
                    raise SimulationError(
                        f"passenger {p.id} arrives at {p.at}, before checkpoint "
                        f"start {checkpoint.start_time}"
                    )
            self.start_sec = checkpoint.start_time
        elif ti.np:
            self.start_sec = ti.first.at
        elif stop_time is not None:
            self.start_sec = 0
        else:
            raise SimulationError("empty test input requires a stop_time")

        if stop_time is not None and stop_time < self.start_sec:
            raise SimulationError("stop_time precedes simulation start")
        self.stop_sec = stop_time

        durations = []
        height = _exact(building.floor_height)
        car_ticks = []
        for spec in building.cars:
            tpf = height / _exact(spec.speed)
            parts = (_exact(spec.door_open_time), _exact(spec.door_close_time),
                     _exact(spec.door_dwell), tpf)
            car_ticks.append(parts)
            durations.extend(parts)
        ent_ext = {p.id: (_exact(p.ent), _exact(p.ext)) for p in ti}
        for ent, ext in ent_ext.values():
            durations.extend((ent, ext))
        self.scale = math.lcm(1, *(d.denominator for d in durations))

        def ticks(frac: Fraction) -> int:
            scaled = frac * self.scale
            assert scaled.denominator == 1
            return scaled.numerator

        self.cars = []
        for idx, (spec, parts) in enumerate(zip(building.cars, car_ticks)):
            start = (checkpoint.car_positions[idx] if checkpoint is not None
                     else spec.home_floor)
            self.cars.append(_Car(idx, spec, start, tuple(ticks(t) for t in parts)))
        self.ent_ticks = {pid: ticks(ent) for pid, (ent, ext) in ent_ext.items()}
        self.ext_ticks = {pid: ticks(ext) for pid, (ent, ext) in ent_ext.items()}

        alive = [c for c in self.cars if not self._is_dead(c)]
        max_cap = max(c.spec.rated_capacity for c in alive)
        for p in ti:
            if p.m > p.cf / 100.0 * max_cap:
                raise SimulationError(
                    f"passenger {p.id} (m={p.m}) can never board any serviceable car"
                )

        # position snapshots taken at the start of service; the
        # stale_assignment dispatcher never refreshes them, so they diverge
        # from reality as cars move and survive idle periods
        self.believed = {c.idx: c.floor for c in self.cars}
        self.waiting: dict[int, _Call] = {}
        self.passengers = {p.id: p for p in ti}
        self.heap: list[tuple[int, int, int, int]] = []
        self.outcomes: dict[int, dict] = {}
        self.env: list[EnvState] = []
        self.start_tick = self.start_sec * self.scale
        self.next_sample = self.start_sec
        self.events_processed = 0
        self.event_budget = max(100_000, 1200 * ti.np)

    # -- helpers -------------------------------------------------------

    def _is_dead(self, car: _Car) -> bool:
        return self.fault.kind == "dead_car" and car.idx == self.fault.car_index

    def _push(self, tick: int, prio: int, key: int, gen: int = 0) -> None:
        heapq.heappush(self.heap, (tick, prio, key, gen))

    def _pending_calls(self) -> int:
        return len(self.waiting) + sum(len(c.riders) for c in self.cars)

    # -- dispatcher ----------------------------------------------------

    def _project_eta(self, car: _Car, call: _Call, now: int) -> Fraction:
        """Ticks until this car's doors would open for the call."""
        if car.door != "closed":
            pos: Fraction = Fraction(car.floor)
            dirn = car.service_dir
            t: Fraction = Fraction(max(now, car.door_free_tick))
        elif car.moving:
            pos = car.position(now)
            dirn = IDLE if car.parking else car.direction
            t = Fraction(now)
        else:
            pos = Fraction(car.floor)
            dirn = car.direction
            t = Fraction(now)
        halls = car.hall_stops() | {(call.floor, call.direction)}
        # the load-blind dispatcher models every car as empty: the stops its
        # riders still need vanish from the projected route
        car_calls = set() if self.fault.kind == "load_blind" else car.car_stops()
        cycle = car.open_ticks + car.dwell_ticks + car.close_ticks
        taboo = (car.floor, car.service_dir) if car.door != "closed" else None
        for _ in range(len(halls) + len(car_calls) + 1):
            sel = _select_stop(pos, dirn, halls, car_calls, taboo)
            taboo = None
            if sel is None:
                break
            g, sdir = sel
            t += abs(g - pos) * car.tpf_ticks
            if g == call.floor and sdir == call.direction:
                return t + car.open_ticks - now
            halls = {(f, d) for f, d in halls if not (f == g and d == sdir)}
            car_calls = car_calls - {g}
            pos = Fraction(g)
            dirn = sdir
            t += cycle
        return Fraction(1 << 40)  # unreachable commitment; effectively never

    def _assign(self, call: _Call, now: int) -> None:
        p = call.passenger
        candidates = [c for c in self.cars if not self._is_dead(c)]
        if call.exclude is not None:
            kept = [c for c in candidates if c.idx != call.exclude]
            if kept:
                candidates = kept
            call.exclude = None
        if self.fault.kind != "load_blind":
            fitting = [c for c in candidates
                       if c.load + p.m <= p.cf / 100.0 * c.spec.rated_capacity]
            if fitting:
                candidates = fitting
        if self.fault.kind == "stale_assignment":
            # cost model uses the frozen position snapshots, never live state
            best = min(candidates, key=lambda c: (
                abs(self.believed[c.idx] - call.floor) * c.tpf_ticks + c.open_ticks,
                c.idx,
            ))
        else:
            best = min(candidates,
                       key=lambda c: (self._project_eta(c, call, now), c.idx))
        call.car = best.idx
        best.assigned.append(call)
        self._after_assign(best, call, now)

    def _after_assign(self, car: _Car, call: _Call, now: int) -> None:
        if car.moving:
            if car.parking:
                d = car.direction
                progressed = now - car.depart_tick
                k = -(-progressed // car.tpf_ticks)  # ceil: next floor boundary
                boundary = car.floor + d * k
                if abs(boundary - car.floor) < abs(car.target - car.floor):
                    car.target = boundary
                    car.gen += 1
                    self._push(car.depart_tick + abs(boundary - car.floor) * car.tpf_ticks,
                               _PRIO_ARRIVE, car.idx, car.gen)
            elif call.direction == car.direction:
                d = car.direction
                pos = car.position(now)
                if (call.floor - pos) * d > 0 and (car.target - call.floor) * d > 0:
                    car.target = call.floor
                    car.gen += 1
                    self._push(car.depart_tick + abs(call.floor - car.floor) * car.tpf_ticks,
                               _PRIO_ARRIVE, car.idx, car.gen)
        elif car.door == "closed":
            self._route(car, now)
        # else: doors busy; the pending CLOSED event re-routes

    # -- car behavior ----------------------------------------------------

    def _route(self, car: _Car, now: int,
               taboo: Optional[tuple[int, int]] = None) -> None:
        sel = _select_stop(Fraction(car.floor), car.direction,
                           car.hall_stops(), car.car_stops(), taboo)
        if sel is None:
            car.direction = IDLE
            car.moving = False
            if (self.fault.kind == "parking_storm" and not self._is_dead(car)
                    and car.floor != PARK_FLOOR):
                self._start_motion(car, PARK_FLOOR, now, parking=True)
            return
        g, sdir = sel
        if g == car.floor:
            self._begin_door_cycle(car, sdir, now)
        else:
            self._start_motion(car, g, now, parking=False)

    def _start_motion(self, car: _Car, target: int, now: int, parking: bool) -> None:
        car.moving = True
        car.parking = parking
        car.depart_tick = now
        car.target = target
        car.direction = UP if target > car.floor else DOWN
        car.gen += 1
        self._push(now + abs(target - car.floor) * car.tpf_ticks,
                   _PRIO_ARRIVE, car.idx, car.gen)

    def _begin_door_cycle(self, car: _Car, sdir: int, now: int) -> None:
        car.direction = sdir
        car.service_dir = sdir
        car.door = "opening"
        car.door_open_tick = now + car.open_ticks
        car.close_begin_tick = car.door_open_tick + car.dwell_ticks
        car.door_free_tick = car.close_begin_tick + car.close_ticks
        self._push(car.door_open_tick, _PRIO_OPENED, car.idx)

    def _on_arrive(self, car: _Car, now: int, gen: int) -> None:
        if gen != car.gen:
            return
        car.moving = False
        car.parking = False
        car.floor = car.target
        self._route(car, now)

    def _on_opened(self, car: _Car, now: int) -> None:
        car.door = "open"
        floor = car.floor
        sdir = car.service_dir
        t = now

        leaving = [p for p in car.riders if p.df == floor]
        for p in leaving:
            t += self.ext_ticks[p.id]
            rec = self.outcomes[p.id]
            rec["t_reached"] = t
            car.riders.remove(p)
            car.load -= p.m

        boarders = sorted(
            (c for c in car.assigned if c.floor == floor and c.direction == sdir),
            key=lambda c: (c.passenger.at, c.passenger.id),
        )
        rejected = []
        for call in boarders:
            p = call.passenger
            if car.load + p.m <= p.cf / 100.0 * car.spec.rated_capacity:
                t += self.ent_ticks[p.id]
                car.riders.append(p)
                car.load += p.m
                car.assigned.remove(call)
                del self.waiting[p.id]
                self.outcomes[p.id] = {
                    "car": car.idx, "t_open": now, "t_reached": None,
                }
            else:
                car.assigned.remove(call)
                call.car = None
                call.exclude = car.idx
                rejected.append(call)

        close_begin = max(now + car.dwell_ticks, t)
        closed = close_begin + car.close_ticks
        car.close_begin_tick = close_begin
        car.door_free_tick = closed
        self._push(closed, _PRIO_CLOSED, car.idx)
        for call in rejected:
            self._push(closed, _PRIO_REDISPATCH, call.passenger.id)

    def _on_closed(self, car: _Car, now: int) -> None:
        serviced = (car.floor, car.service_dir)
        car.door = "closed"
        car.service_dir = IDLE
        self._route(car, now, taboo=serviced)

    # -- env sampling ----------------------------------------------------

    def _snapshot(self, second: int) -> EnvState:
        tick = second * self.scale
        snaps = []
        for car in self.cars:
            snaps.append(CarSnapshot(
                position=float(car.position(tick)),
                direction=_DIR_NAMES[car.direction],
                door=car.door_state_at(tick),
                occupants=len(car.riders),
                load=car.load,
            ))
        return EnvState(time=second, cars=tuple(snaps),
                        pending_calls=self._pending_calls())

    def _sample_before(self, tick: int) -> None:
        if not self.record_env:
            return
        while self.next_sample * self.scale < tick:
            self.env.append(self._snapshot(self.next_sample))
            self.next_sample += 1

    def _sample_through(self, second: int) -> None:
        if not self.record_env:
            return
        while self.next_sample <= second:
            self.env.append(self._snapshot(self.next_sample))
            self.next_sample += 1

    # -- main loop -------------------------------------------------------

    def run(self) -> SimOutcome:
        for p in self.ti:
            self._push(p.at * self.scale, _PRIO_PAX, p.id)
        # cars rest at their start positions until the first decision point;
        # under parking_storm only cars *becoming* idle are sent to park
        stop_tick = None if self.stop_sec is None else self.stop_sec * self.scale
        last_tick = self.start_tick
        while self.heap:
            tick, prio, key, gen = self.heap[0]
            if stop_tick is not None and tick > stop_tick:
                break
            heapq.heappop(self.heap)
            if prio == _PRIO_ARRIVE and gen != self.cars[key].gen:
                continue
            self._sample_before(tick)
            self.events_processed += 1
            if self.events_processed > self.event_budget:
                raise SimulationError(
                    f"event budget exceeded ({self.event_budget}); "
                    "simulation is not draining"
                )
            if prio == _PRIO_CLOSED:
                self._on_closed(self.cars[key], tick)
            elif prio == _PRIO_ARRIVE:
                self._on_arrive(self.cars[key], tick, gen)
            elif prio == _PRIO_OPENED:
                self._on_opened(self.cars[key], tick)
            elif prio == _PRIO_PAX:
                call = _Call(self.passengers[key])
                self.waiting[key] = call
                self._assign(call, tick)
            else:
                call = self.waiting[key]
                self._assign(call, tick)
            last_tick = tick

        if self.stop_sec is not None:
            sim_end = self.stop_sec
        else:
            sim_end = max(self.start_sec, -(-last_tick // self.scale))
        self._sample_through(sim_end)

        records = []
        for pid in sorted(self.outcomes):
            raw = self.outcomes[pid]
            p = self.passengers[pid]
            stop_cut = stop_tick is not None and (
                raw["t_reached"] is None or raw["t_reached"] > stop_tick)
            t_open = Fraction(raw["t_open"], self.scale)
            t_reached = (None if stop_cut or raw["t_reached"] is None
                         else Fraction(raw["t_reached"], self.scale))
            records.append(PassengerOutcome(
                passenger_id=pid,
                elevator_used=raw["car"],
                t_elev_arrived=t_open,
                t_reached_destination=t_reached,
                wt=t_open - p.at,
                tt=None if t_reached is None else t_reached - t_open,
            ))
        return SimOutcome(
            outcomes=tuple(records),
            env_log=tuple(self.env),
            sim_start=self.start_sec,
            sim_end=sim_end,
            simulated_duration=sim_end - self.start_sec,
        )


def execute_test(ti: TestInput, building: BuildingConfig, fault: FaultConfig,
                 checkpoint: Optional[Checkpoint] = None,
                 stop_time: Optional[int] = None,
                 record_env: bool = True) -> SimOutcome:
    """Run the SUT on a test input; pure function of its arguments.

    The clock starts at ``checkpoint.start_time`` when a checkpoint is
    given (cars placed at its positions), else at the first passenger's
    arrival time.  With ``stop_time`` the run halts there and passengers
    not yet attended have no outcome; otherwise it runs until every
    passenger has been delivered.  ``record_env=False`` skips the per-second
    environment log (reduction candidates don't need it).
    """
    return _Engine(ti, building, fault, checkpoint, stop_time, record_env).run()
