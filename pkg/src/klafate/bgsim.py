"""Deterministic simulator of the four-station bulk-good plant.

Stands in for the physical testbed behind the backend's data-source
interface. Production emits completion events at a recipe-driven rate; the
storage silo drains per product and is replenished per suction cycle. A
recipe whose suction time cannot keep the silo filled loses level at a fixed
deficit per minute, and once the level falls below the knee the instantaneous
rate sags with the square root of the remaining level. Faults pin the
affected variables so the matching workbook rules fire.

All dynamics beyond the published window averages are reconstructions; the
constants in ``RECIPES`` are calibrated against those averages, not measured.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .errors import InvalidParameterError, NotFoundError
from .ruledsl import Snapshot

NOMINAL_SUPPLY_PRESSURE = 6.5  # bar
INITIAL_SILO_LEVEL = 0.9
SILO_RATE_KNEE = 0.5  # below this level the rate decays as sqrt(level/knee)
CONSUMPTION_PER_PRODUCT = 0.012  # silo fraction consumed by one product

FAULT_AIR_VALVE = "air_valve_closed"
FAULT_VACUUM_PUMP = "vacuum_pump_off"
FAULT_SILO_EMPTY = "silo_empty"
FAULTS = (FAULT_AIR_VALVE, FAULT_VACUUM_PUMP, FAULT_SILO_EMPTY)


@dataclass(frozen=True)
class Recipe:
    """Machine setpoints plus the reconstructed silo-decay parameters."""

    label: str
    suction_time_s: float
    motor_rpm: float
    dosing_weight_g: float
    nominal_rate: float  # prod/min under a healthy silo
    suction_replenish_threshold: float = 3.5  # seconds of suction that keep up
    decay_per_minute: float = 0.028  # silo deficit when suction is too short
    noise_std: float = 0.15  # prod/min jitter on the emission rate

    def __post_init__(self):
        if self.nominal_rate <= 0:
            raise InvalidParameterError("nominal rate must be positive")
        if self.suction_time_s <= 0:
            raise InvalidParameterError("suction time must be positive")

    @property
    def replenishes(self) -> bool:
        return self.suction_time_s >= self.suction_replenish_threshold


RECIPES: dict[str, Recipe] = {
    r.label: r
    for r in (
        Recipe("NP", suction_time_s=3.5, motor_rpm=1200, dosing_weight_g=50, nominal_rate=3.4),
        Recipe("LP", suction_time_s=3.5, motor_rpm=900, dosing_weight_g=50, nominal_rate=3.2),
        Recipe("X1", suction_time_s=4.0, motor_rpm=800, dosing_weight_g=55, nominal_rate=2.9),
        Recipe("X2", suction_time_s=3.0, motor_rpm=1500, dosing_weight_g=50, nominal_rate=4.6),
        Recipe("X3", suction_time_s=4.0, motor_rpm=750, dosing_weight_g=55, nominal_rate=2.7),
        Recipe("X4", suction_time_s=3.0, motor_rpm=1450, dosing_weight_g=50, nominal_rate=4.4),
        Recipe("X5", suction_time_s=4.0, motor_rpm=850, dosing_weight_g=52, nominal_rate=2.86),
    )
}


def get_recipe(label: str) -> Recipe:
    try:
        return RECIPES[label]
    except KeyError:
        raise NotFoundError(f"unknown recipe {label!r}; known: {sorted(RECIPES)}") from None


@dataclass(frozen=True)
class PlantState:
    clock: float = 0.0
    silo_level: float = INITIAL_SILO_LEVEL
    product_count: int = 0
    emit_accumulator: float = 0.0
    active_faults: tuple[str, ...] = ()
    production_rate_now: float = 0.0
    last_replenishment: float = 0.0
    last_consumption: float = 0.0

    def has_fault(self, fault_id: str) -> bool:
        return fault_id in self.active_faults


def _supply_pressure(state: PlantState) -> float:
    pressure = NOMINAL_SUPPLY_PRESSURE
    if state.has_fault(FAULT_VACUUM_PUMP):
        pressure = min(pressure, 3.0)
    if state.has_fault(FAULT_AIR_VALVE):
        pressure = min(pressure, 0.8)
    return pressure


def _rate_factor(state: PlantState) -> float:
    if state.has_fault(FAULT_AIR_VALVE) or state.has_fault(FAULT_VACUUM_PUMP):
        return 0.0
    if state.silo_level >= SILO_RATE_KNEE:
        return 1.0
    if state.silo_level <= 0.0:
        return 0.0
    return (state.silo_level / SILO_RATE_KNEE) ** 0.5


def instantaneous_rate(state: PlantState, recipe: Recipe) -> float:
    """Noiseless rate in prod/min given silo level and active faults."""
    return recipe.nominal_rate * _rate_factor(state)


def tick(
    state: PlantState, recipe: Recipe, dt: float, rng: random.Random
) -> tuple[PlantState, list[float]]:
    """Advance the plant by dt seconds; returns the new state and completions."""
    if dt <= 0:
        raise InvalidParameterError("dt must be positive")
    clock = state.clock + dt
    base_rate = instantaneous_rate(state, recipe)
    noisy_rate = base_rate
    if base_rate > 0:
        noisy_rate = max(0.0, base_rate + rng.gauss(0.0, recipe.noise_std))

    accumulator = state.emit_accumulator + noisy_rate * dt / 60.0
    emitted = int(accumulator)
    accumulator -= emitted
    events = [clock] * emitted

    # consumption follows the production flow; one product costs a fixed share
    consumption = base_rate * CONSUMPTION_PER_PRODUCT * dt / 60.0
    if state.has_fault(FAULT_SILO_EMPTY):
        replenishment = 0.0
    elif recipe.replenishes:
        replenishment = consumption
    else:
        # suction too short: a fixed deficit per minute, never pumping out
        replenishment = max(0.0, consumption - recipe.decay_per_minute * dt / 60.0)
    # never consume more than is available
    consumption = min(consumption, state.silo_level + replenishment)
    level = min(1.0, state.silo_level + replenishment - consumption)

    new_state = replace(
        state,
        clock=clock,
        silo_level=level,
        product_count=state.product_count + emitted,
        emit_accumulator=accumulator,
        production_rate_now=base_rate,
        last_replenishment=replenishment,
        last_consumption=consumption,
    )
    return new_state, events


def inject_fault(state: PlantState, fault_id: str) -> PlantState:
    """Activate a registered fault; its variable effects hold until cleared."""
    if fault_id not in FAULTS:
        raise NotFoundError(f"unknown fault {fault_id!r}; known: {list(FAULTS)}")
    if state.has_fault(fault_id):
        return state
    silo = 0.05 if fault_id == FAULT_SILO_EMPTY else state.silo_level
    return replace(
        state, active_faults=state.active_faults + (fault_id,), silo_level=silo
    )


def clear_fault(state: PlantState, fault_id: Optional[str] = None) -> PlantState:
    """Clear one fault (or all) and restore nominal conditions."""
    if fault_id is not None and fault_id not in FAULTS:
        raise NotFoundError(f"unknown fault {fault_id!r}; known: {list(FAULTS)}")
    clearing = set(state.active_faults) if fault_id is None else {fault_id}
    remaining = tuple(f for f in state.active_faults if f not in clearing)
    silo = state.silo_level
    if FAULT_SILO_EMPTY in clearing and state.has_fault(FAULT_SILO_EMPTY):
        silo = INITIAL_SILO_LEVEL  # the silo was refilled
    return replace(state, active_faults=remaining, silo_level=silo)


def snapshot(state: PlantState, recipe: Recipe) -> Snapshot:
    """Flat variable map with one entry per plant variable, plus system values."""
    pressure = _supply_pressure(state)
    vacuum_interrupted = state.has_fault(FAULT_AIR_VALVE) or state.has_fault(FAULT_VACUUM_PUMP)
    loading_vacuum_ms = 0.0 if vacuum_interrupted else recipe.suction_time_s * 1000.0
    values = {
        # loading station
        "loading_vacuum_time": loading_vacuum_ms,
        "loading_discharge_flap_open_time": 2000.0,
        "loading_actual_pressure": pressure,
        "loading_filling_height_min_state": False,
        "loading_motor_on": True,
        "loading_belt_conveyor_actual_speed": 1.2,
        "loading_belt_conveyor_setpoint_speed": 1.2,
        "loading_filling_height_max_value": 0.95,
        "loading_filling_height_min_value": 0.1,
        "loading_overflow_value": state.has_fault(FAULT_VACUUM_PUMP),
        # storage station
        "storage_vacuum_time": 3200.0,
        "storage_discharge_flap_open_time": 1800.0,
        "storage_actual_pressure": pressure,
        "storage_filling_height_min_state": state.silo_level < 0.15,
        "storage_filling_height_max_value": 0.95,
        "storage_filling_height_min_value": 0.1,
        "storage_overflow_value": False,
        "storage_vibration_conveyor": True,
        # weighing station
        "weighing_vacuum_time": 2800.0,
        "weighing_discharge_flap_open_time": 1500.0,
        "weighing_actual_pressure": pressure,
        "weighing_filling_height_min_state": False,
        "weighing_filling_height_max_value": 0.95,
        "weighing_filling_height_min_value": 0.1,
        "weighing_overflow_value": False,
        "weighing_out_of_weighing_range": False,
        "weighing_dosing_motor_register": float(recipe.dosing_weight_g),
        "weighing_dosing_motor_actual_speed": float(recipe.motor_rpm),
        "weighing_dosing_motor_setpoint_speed": float(recipe.motor_rpm),
        "weighing_system_mode": 1.0,
        # filling station
        "filling_vacuum_time": 2600.0,
        "filling_discharge_flap_open_time": 1200.0,
        "filling_actual_pressure": pressure,
        "filling_container_available": True,
        # system-level values consumed by the workbook rules
        "actual_pressure": pressure,
        "suction_time": recipe.suction_time_s,
        "production_rate": state.production_rate_now,
        "silo_level": state.silo_level,
        "product_count": float(state.product_count),
    }
    return Snapshot(values, timestamp=state.clock)


# ---------------------------------------------------------------------------
# scenario scripts

_SCENARIO_LINE = re.compile(
    r"^at\s+(?P<at>\d+(?:\.\d+)?)\s+(?P<action>inject|clear|recipe)\s+(?P<arg>\S+)$"
)


@dataclass(frozen=True)
class ScenarioCommand:
    at_seconds: float
    action: str  # 'inject' | 'clear' | 'recipe'
    argument: str


def parse_scenario(text: str) -> list[ScenarioCommand]:
    """Parse a line-oriented command script.

    Lines: ``at <seconds> inject <fault_id>``, ``at <seconds> clear <fault_id>``,
    ``at <seconds> recipe <label>``. Blank lines and ``#`` comments are ignored.
    """
    commands = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _SCENARIO_LINE.match(line)
        if not match:
            raise InvalidParameterError(
                f"scenario line {number}: cannot parse {raw!r} "
                f"(expected 'at <seconds> inject|clear|recipe <arg>')"
            )
        action = match.group("action")
        argument = match.group("arg")
        if action in ("inject", "clear") and argument not in FAULTS:
            raise NotFoundError(
                f"scenario line {number}: unknown fault {argument!r}; known: {list(FAULTS)}"
            )
        if action == "recipe":
            get_recipe(argument)
        commands.append(ScenarioCommand(float(match.group("at")), action, argument))
    commands.sort(key=lambda c: c.at_seconds)
    return commands


def load_scenario(path) -> list[ScenarioCommand]:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


class Simulator:
    """Owns the ticking loop: one plant state, one recipe, queued commands."""

    def __init__(
        self,
        recipe: str = "NP",
        seed: int = 0,
        dt: float = 1.0,
        scenario: Optional[Sequence[ScenarioCommand]] = None,
    ):
        if dt <= 0:
            raise InvalidParameterError("dt must be positive")
        self.recipe = get_recipe(recipe)
        self.state = PlantState()
        self.dt = dt
        self._rng = random.Random(seed)
        self._pending = sorted(scenario or [], key=lambda c: c.at_seconds)
        self.events: list[float] = []
        self.applied_commands: list[ScenarioCommand] = []

    def _apply_due_commands(self):
        while self._pending and self._pending[0].at_seconds <= self.state.clock:
            command = self._pending.pop(0)
            if command.action == "inject":
                self.state = inject_fault(self.state, command.argument)
            elif command.action == "clear":
                self.state = clear_fault(self.state, command.argument)
            else:
                self.recipe = get_recipe(command.argument)
            self.applied_commands.append(command)

    def tick(self) -> list[float]:
        """Advance one dt; scenario commands apply at tick boundaries."""
        self._apply_due_commands()
        self.state, events = tick(self.state, self.recipe, self.dt, self._rng)
        self.events.extend(events)
        return events

    def run(self, minutes: float) -> list[float]:
        """Tick until the clock reaches ``minutes``; returns all completions."""
        end = self.state.clock + minutes * 60.0
        while self.state.clock < end - 1e-9:
            self.tick()
        return list(self.events)

    def snapshot(self) -> Snapshot:
        return snapshot(self.state, self.recipe)

    def inject(self, fault_id: str):
        self.state = inject_fault(self.state, fault_id)

    def clear(self, fault_id: Optional[str] = None):
        self.state = clear_fault(self.state, fault_id)


class SimulatorDataSource:
    """Data-source adapter: each poll advances the simulator by a fixed step.

    The backend only ever calls ``snapshot()``; swapping in an OPC-UA bridge
    with the same method leaves the engine untouched.
    """

    def __init__(self, simulator: Simulator, seconds_per_poll: float = 1.0):
        if seconds_per_poll <= 0:
            raise InvalidParameterError("seconds_per_poll must be positive")
        self.simulator = simulator
        self.seconds_per_poll = seconds_per_poll

    def snapshot(self) -> Snapshot:
        target = self.simulator.state.clock + self.seconds_per_poll
        while self.simulator.state.clock < target - 1e-9:
            self.simulator.tick()
        return self.simulator.snapshot()

    def pop_applied_commands(self) -> list[ScenarioCommand]:
        """Scenario commands applied since the previous call; lets the backend log them."""
        applied = self.simulator.applied_commands
        self.simulator.applied_commands = []
        return applied
