"""Installation and fault-seeding configuration for the simulator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

FAULT_KINDS = ("none", "dead_car", "load_blind", "parking_storm", "stale_assignment")

PARK_FLOOR = 1


class ConfigError(ValueError):
    """Invalid building or fault configuration."""


@dataclass(frozen=True)
class CarSpec:
    """Physical parameters of one car.

    ``speed`` is m/s, ``rated_capacity`` kg, door times in seconds.
    ``home_floor`` is where the car rests before the simulation starts.
    """

    speed: float = 1.75
    rated_capacity: float = 630.0
    door_open_time: float = 1.0
    door_close_time: float = 1.0
    door_dwell: float = 2.0
    home_floor: int = 1

    def __post_init__(self) -> None:
        for name in ("speed", "rated_capacity", "door_open_time", "door_close_time", "door_dwell"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"CarSpec.{name} must be positive")
        if self.home_floor < 1:
            raise ConfigError("CarSpec.home_floor must be >= 1")


@dataclass(frozen=True)
class BuildingConfig:
    floors: int
    cars: tuple[CarSpec, ...]
    floor_height: float = 3.5

    def __post_init__(self) -> None:
        if self.floors < 2:
            raise ConfigError(f"building needs >= 2 floors, got {self.floors}")
        if not self.cars:
            raise ConfigError("building needs at least one car")
        if self.floor_height <= 0:
            raise ConfigError("floor_height must be positive")
        for i, car in enumerate(self.cars):
            if car.home_floor > self.floors:
                raise ConfigError(f"car {i} home floor {car.home_floor} outside building")

    @classmethod
    def from_json(cls, path) -> "BuildingConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        cars = tuple(CarSpec(**c) for c in data["cars"])
        return cls(floors=data["floors"], cars=cars,
                   floor_height=data.get("floor_height", 3.5))

    def to_json(self, path) -> None:
        data = {
            "floors": self.floors,
            "floor_height": self.floor_height,
            "cars": [
                {
                    "speed": c.speed,
                    "rated_capacity": c.rated_capacity,
                    "door_open_time": c.door_open_time,
                    "door_close_time": c.door_close_time,
                    "door_dwell": c.door_dwell,
                    "home_floor": c.home_floor,
                }
                for c in self.cars
            ],
        }
        Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class FaultConfig:
    """A seeded dispatcher defect.

    kinds:
      none            - healthy collective group control
      dead_car        - car ``car_index`` is out of service (never dispatched)
      load_blind      - assignment ignores current car load, so full cars
                        keep being sent to new calls
      parking_storm   - cars becoming idle are always sent to park at floor 1
      stale_assignment- assignment cost uses car position snapshots frozen
                        at the start of service, never re-evaluated against
                        live state; the snapshots survive idle periods
    """

    kind: str = "none"
    car_index: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in FAULT_KINDS:
            raise ConfigError(f"unknown fault kind {self.kind!r}, expected one of {FAULT_KINDS}")
        if self.kind == "dead_car" and self.car_index is None:
            raise ConfigError("dead_car fault needs car_index")

    def validate_against(self, building: BuildingConfig) -> None:
        if self.car_index is not None and not 0 <= self.car_index < len(building.cars):
            raise ConfigError(f"fault car_index {self.car_index} out of range")
        if self.kind == "dead_car" and len(building.cars) < 2:
            raise ConfigError("dead_car fault leaves no serviceable car")

    @classmethod
    def from_json(cls, path) -> "FaultConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(kind=data.get("kind", "none"), car_index=data.get("car_index"))

    def to_json(self, path) -> None:
        data: dict = {"kind": self.kind}
        if self.car_index is not None:
            data["car_index"] = self.car_index
        Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
