"""Static-state detection over environment logs, and checkpoint building."""

from __future__ import annotations

from .outcome import Checkpoint, SimOutcome, StaticState

DEFAULT_MIN_DWELL = 5


def detect_static_states(outcome: SimOutcome, until,
                         min_dwell: int = DEFAULT_MIN_DWELL) -> list[StaticState]:
    """Maximal fully-at-rest intervals ending no later than ``until``.

    An interval qualifies when every sampled second in it has all cars
    stopped with closed doors and empty cabins, and no hall or car call
    pending, and it lasts at least ``min_dwell`` seconds.  Returned in
    time order with 1-based indices.
    """
    if not outcome.sim_start <= until <= outcome.sim_end:
        raise ValueError(
            f"until={until} outside simulated range "
            f"[{outcome.sim_start}, {outcome.sim_end}]"
        )
    states: list[StaticState] = []
    run_start: int | None = None
    prev_time: int | None = None
    positions: tuple[int, ...] = ()

    def close_run(end: int) -> None:
        nonlocal run_start
        if run_start is not None and end - run_start >= min_dwell:
            states.append(StaticState(
                t_start=run_start, t_end=end,
                car_positions=positions, index=len(states) + 1,
            ))
        run_start = None

    for state in outcome.env_log:
        if state.time > until:
            break
        if state.is_static:
            if run_start is None:
                run_start = state.time
                positions = tuple(int(round(c.position)) for c in state.cars)
        else:
            if prev_time is not None:
                close_run(prev_time)
            run_start = None
        prev_time = state.time
    if prev_time is not None:
        close_run(prev_time)
    return states


def checkpoint_from(state: StaticState) -> Checkpoint:
    """Restart point at the end of a static interval."""
    return Checkpoint(start_time=state.t_end, car_positions=state.car_positions)
