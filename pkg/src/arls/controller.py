"""Lamp switching logic and the emulated eight-lamp latch bank.

Each lamp is a set/reset latch standing in for a 555 bistable stage; the
bank state is exposed as the byte a parallel port would carry, lamp 0 in
the least significant bit.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, NamedTuple

from .kinematics import Calibration, TrackState, predict

LAMP_COUNT = 8


class Action(str, Enum):
    TRIGGER = "Trigger"
    RESET = "Reset"


class LampEvent(NamedTuple):
    frame_index: int
    lamp_index: int
    action: Action
    register: int  # port byte after the event


def default_positions(segment_length: float = 1.0) -> tuple[float, ...]:
    """Eight lamps evenly spaced, the first one spacing in from the entry."""
    step = segment_length / LAMP_COUNT
    return tuple(step * (i + 1) for i in range(LAMP_COUNT))


@dataclass(frozen=True)
class LampBank:
    positions: tuple[float, ...] = field(default_factory=default_positions)
    lamps: tuple[bool, ...] = (False,) * LAMP_COUNT
    events: tuple[LampEvent, ...] = ()

    def __post_init__(self):
        if len(self.positions) != LAMP_COUNT or len(self.lamps) != LAMP_COUNT:
            raise ValueError(f"a lamp bank has exactly {LAMP_COUNT} lamps")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise ValueError("lamp positions must be strictly increasing")
        if self.positions[0] < 0:
            raise ValueError("lamp positions must be >= 0")


def _check_index(i: int):
    if not 0 <= i < LAMP_COUNT:
        raise IndexError(f"lamp index {i} outside 0..{LAMP_COUNT - 1}")


def _set(bank: LampBank, i: int, on: bool, frame_index: int) -> LampBank:
    _check_index(i)
    lamps = list(bank.lamps)
    lamps[i] = on
    lamps = tuple(lamps)
    event = LampEvent(frame_index, i, Action.TRIGGER if on else Action.RESET, _register(lamps))
    return replace(bank, lamps=lamps, events=bank.events + (event,))


def trigger(bank: LampBank, i: int, frame_index: int) -> LampBank:
    return _set(bank, i, True, frame_index)


def reset(bank: LampBank, i: int, frame_index: int) -> LampBank:
    return _set(bank, i, False, frame_index)


def _register(lamps: Iterable[bool]) -> int:
    return sum(1 << i for i, on in enumerate(lamps) if on)


def port_register(bank: LampBank) -> int:
    return _register(bank.lamps)


def replay(events: Iterable[LampEvent]) -> int:
    """Fold an event log from the all-off state into a port byte."""
    value = 0
    for e in events:
        if e.action is Action.TRIGGER:
            value |= 1 << e.lamp_index
        else:
            value &= ~(1 << e.lamp_index)
    return value


@dataclass(frozen=True)
class ControllerConfig:
    lead_time: float = 0.12
    lag_margin: float = 0.05
    processing_latency: float = 0.0
    v_fallback: float = 1.5  # design maximum speed used before a speed estimate exists

    def __post_init__(self):
        for name in ("lead_time", "lag_margin", "processing_latency", "v_fallback"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def control_step(
    bank: LampBank,
    track: TrackState,
    config: ControllerConfig,
    cal: Calibration,
    frame_index: int,
) -> LampBank:
    """Switch lamps for the vehicle's current and predicted position.

    A lamp is triggered once the position predicted ``lead_time +
    processing_latency`` ahead reaches it, and reset once the vehicle is
    more than ``lag_margin`` past it.  Before any speed estimate exists,
    lamps within ``lead_time * v_fallback`` ahead are triggered.
    Frames without a detection leave the bank untouched.
    """
    if not track.detected:
        return bank
    r = track.r
    v_mean = track.v_mean
    if v_mean is not None:
        reach = predict(r, v_mean, config.lead_time + config.processing_latency)
    else:
        reach = r + config.lead_time * config.v_fallback
    for i, pos in enumerate(bank.positions):
        passed = r > pos + config.lag_margin
        if passed:
            if bank.lamps[i]:
                bank = reset(bank, i, frame_index)
        elif reach >= pos and not bank.lamps[i]:
            bank = trigger(bank, i, frame_index)
    return bank


def switch_on_offset(bank: LampBank, trajectory: Callable[[int], float], i: int) -> float:
    """Vehicle position minus lamp position at the lamp's first trigger.

    ``trajectory`` maps a frame index to the ground-truth road position at
    the moment the actuator for that frame fires.
    """
    _check_index(i)
    for e in bank.events:
        if e.lamp_index == i and e.action is Action.TRIGGER:
            return trajectory(e.frame_index) - bank.positions[i]
    raise LookupError(f"lamp {i} was never triggered")


EVENT_HEADER = ("frame_index", "lamp_index", "action", "register_hex")


def events_to_csv(events: Iterable[LampEvent]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EVENT_HEADER)
    for e in events:
        writer.writerow((e.frame_index, e.lamp_index, e.action.value, f"0x{e.register:02X}"))
    return buf.getvalue()
