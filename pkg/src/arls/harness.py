"""Monte-Carlo trials of the full detect -> track -> switch loop against ground truth."""

from __future__ import annotations

import csv
import io
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from statistics import fmean
from typing import Iterable, Iterator, Sequence

import numpy as np

from .controller import (
    Action,
    ControllerConfig,
    LampBank,
    LampEvent,
    control_step,
    default_positions,
    port_register,
    switch_on_offset,
)
from .detection import DEFAULT_MIN_AREA, DEFAULT_THRESHOLD, detect
from .imaging import (
    LCG_MODULUS,
    Frame,
    SceneConfig,
    apply_blur,
    apply_noise,
    lcg_uniform,
    render_background,
    render_scene,
)
from .kinematics import Calibration, TrackState, calibrate, update_track

# float slack when comparing an offset against the rule's limit
OFFSET_EPS = 1e-9

REPORT_HEADER = ("v_true", "v_arls", "delta_v_pct", "blur_pct", "offset_class", "performance_pct")


class FailureReason(str, Enum):
    NO_DETECTION = "NoDetection"
    NO_SPEED = "NoSpeed"
    LATE_SWITCH = "LateSwitch"
    MISSING_RESET = "MissingReset"


@dataclass(frozen=True)
class SuccessRule:
    max_offset: float = 0.0
    require_reset: bool = True


@dataclass(frozen=True)
class Scenario:
    scene: SceneConfig = field(default_factory=SceneConfig)
    calibration: Calibration | None = None
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    trials: int = 100
    seed: int = 0
    success_rule: SuccessRule = field(default_factory=SuccessRule)
    threshold: int = DEFAULT_THRESHOLD
    min_area: int = DEFAULT_MIN_AREA
    lamp_positions: tuple[float, ...] | None = None
    camera_height: float = 1.075

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.calibration is None:
            # the segment itself is the calibration target
            cal = calibrate(
                self.scene.segment_length,
                self.scene.resolution,
                self.scene.frame_rate,
                self.scene.segment_length,
                self.camera_height,
            )
            object.__setattr__(self, "calibration", cal)
        if self.lamp_positions is None:
            object.__setattr__(self, "lamp_positions", default_positions(self.scene.segment_length))
        LampBank(positions=tuple(self.lamp_positions))


@dataclass(frozen=True)
class TrialReport:
    trial_index: int
    v_true: float
    v_arls: float | None
    delta_v_pct: float | None
    blur_fraction: float
    offsets: tuple[float | None, ...]
    success: bool
    failure_reason: FailureReason | None
    events: tuple[LampEvent, ...]
    register: int
    frames: int
    blurred_frames: int

    @property
    def blur_pct(self) -> float:
        return 100.0 * self.blur_fraction


def delta_v_pct(v_s: float, v_arls: float) -> float:
    """Relative speed error in percent of the reference speed."""
    if v_s <= 0:
        raise ValueError(f"reference speed must be > 0, got {v_s}")
    return abs(v_arls - v_s) / v_s * 100.0


def correlation_band_check(pairs: Iterable[tuple[float, float]], band_pct: float) -> list[bool]:
    if band_pct <= 0:
        raise ValueError(f"band must be > 0 %, got {band_pct}")
    return [abs(v_arls - v_s) <= band_pct / 100.0 * v_s for v_s, v_arls in pairs]


def frame_seed(trial_seed: int, frame_index: int) -> int:
    return (trial_seed * 2654435761 + frame_index * 40503 + 1) % LCG_MODULUS


def blur_schedule(scene: SceneConfig, trial_seed: int, n_frames: int) -> np.ndarray:
    """Frames to blur: frame k is blurred iff its uniform draw < blur_fraction.

    The draws depend only on the seed, so raising blur_fraction only ever
    adds blurred frames.
    """
    return lcg_uniform(trial_seed, n_frames) < scene.blur_fraction


def trial_frames(scenario: Scenario, trial_index: int, frames: int | None = None) -> Iterator[Frame]:
    """Degraded frames of one traverse as the camera would deliver them."""
    scene = scenario.scene
    trial_seed = scenario.seed + trial_index
    n = scene.frame_count(frames)
    blurred = blur_schedule(scene, trial_seed, n)
    for k in range(n):
        frame = render_scene(scene, k / scene.frame_rate, k)
        if blurred[k]:
            frame = apply_blur(frame, scene.blur_radius)
        if scene.noise_amplitude:
            frame = apply_noise(frame, scene.noise_amplitude, frame_seed(trial_seed, k))
        yield frame


def run_trial(scenario: Scenario, trial_index: int) -> TrialReport:
    scene = scenario.scene
    cal = scenario.calibration
    ctl = scenario.controller
    n = scene.frame_count()
    blurred = blur_schedule(scene, scenario.seed + trial_index, n)
    reference = render_background(scene)

    track = TrackState()
    bank = LampBank(positions=tuple(scenario.lamp_positions))
    seen = False
    for k, frame in enumerate(trial_frames(scenario, trial_index)):
        d = detect(frame, reference, scenario.threshold, scenario.min_area)
        seen = seen or d.found
        track = update_track(track, d, cal)
        bank = control_step(bank, track, ctl, cal, k)

    def actuation_position(frame_index: int) -> float:
        return scene.center_position(frame_index / scene.frame_rate + ctl.processing_latency)

    offsets = []
    for i in range(len(bank.positions)):
        try:
            offsets.append(switch_on_offset(bank, actuation_position, i))
        except LookupError:
            offsets.append(None)

    v_true = scene.true_speed
    v_arls = track.v_mean
    t_end = (n - 1) / scene.frame_rate
    final_center = scene.center_position(t_end)
    final_rear = scene.front_position(t_end) - scene.vehicle_length
    rule = scenario.success_rule

    reason = None
    if v_true > 0 and not seen:
        reason = FailureReason.NO_DETECTION
    elif v_true > 0 and v_arls is None:
        reason = FailureReason.NO_SPEED
    elif any(
        pos <= final_center and (off is None or off > rule.max_offset + OFFSET_EPS)
        for pos, off in zip(bank.positions, offsets)
    ):
        reason = FailureReason.LATE_SWITCH
    elif rule.require_reset and any(
        final_rear > pos + ctl.lag_margin and (bank.lamps[i] or offsets[i] is None)
        for i, pos in enumerate(bank.positions)
    ):
        reason = FailureReason.MISSING_RESET

    return TrialReport(
        trial_index=trial_index,
        v_true=v_true,
        v_arls=v_arls,
        delta_v_pct=delta_v_pct(v_true, v_arls) if v_arls is not None and v_true > 0 else None,
        blur_fraction=scene.blur_fraction,
        offsets=tuple(offsets),
        success=reason is None,
        failure_reason=reason,
        events=bank.events,
        register=port_register(bank),
        frames=n,
        blurred_frames=int(blurred.sum()),
    )


def classify_offset(offset: float, tolerance: float) -> str:
    if abs(offset) <= tolerance:
        return "~0"
    return "<0" if offset < 0 else ">0"


@dataclass(frozen=True)
class BatchSummary:
    v_true: float
    v_arls: float | None
    delta_v_pct: float | None
    blur_pct: float
    offset_class: str
    performance_pct: float
    successes: int
    trials: int
    failures: dict[str, int]
    reports: tuple[TrialReport, ...] = field(repr=False, compare=False, default=())

    def row(self) -> tuple[str, ...]:
        return (
            f"{self.v_true:.4f}",
            "" if self.v_arls is None else f"{self.v_arls:.4f}",
            "" if self.delta_v_pct is None else f"{self.delta_v_pct:.2f}",
            f"{self.blur_pct:.1f}",
            self.offset_class,
            f"{self.performance_pct:.1f}",
        )


def summarize(scenario: Scenario, reports: Sequence[TrialReport]) -> BatchSummary:
    """Reduce trial reports in trial order.

    Speed columns average the successful trials; when none succeeded they
    fall back to every trial that produced a speed estimate.
    """
    successes = sum(r.success for r in reports)
    pool = [r for r in reports if r.success and r.v_arls is not None]
    if not pool:
        pool = [r for r in reports if r.v_arls is not None]
    v_arls = fmean(r.v_arls for r in pool) if pool else None
    dv = [r.delta_v_pct for r in pool if r.delta_v_pct is not None]

    tolerance = scenario.scene.true_speed / scenario.scene.frame_rate
    votes = Counter(
        classify_offset(o, tolerance) for r in reports for o in r.offsets if o is not None
    )
    offset_class = max(("~0", "<0", ">0"), key=lambda c: votes[c]) if votes else ""

    failures = Counter(r.failure_reason.value for r in reports if r.failure_reason is not None)
    return BatchSummary(
        v_true=scenario.scene.true_speed,
        v_arls=v_arls,
        delta_v_pct=fmean(dv) if dv else None,
        blur_pct=100.0 * scenario.scene.blur_fraction,
        offset_class=offset_class,
        performance_pct=100.0 * successes / len(reports),
        successes=successes,
        trials=len(reports),
        failures=dict(sorted(failures.items())),
        reports=tuple(reports),
    )


def _run_one(args):
    scenario, index = args
    return run_trial(scenario, index)


def run_batch(scenario: Scenario, jobs: int = 1) -> BatchSummary:
    tasks = [(scenario, i) for i in range(scenario.trials)]
    if jobs > 1 and scenario.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_one, tasks, chunksize=max(1, scenario.trials // (4 * jobs))))
    else:
        reports = [_run_one(t) for t in tasks]
    return summarize(scenario, reports)


def sweep_cells(
    speeds: Sequence[float], blur_levels: Sequence[float], diagonal: bool = False
) -> list[tuple[float, float]]:
    if not speeds or not blur_levels:
        raise ValueError("sweep needs at least one speed and one blur level")
    if diagonal:
        if len(speeds) != len(blur_levels):
            raise ValueError("diagonal pairing needs equally many speeds and blur levels")
        return list(zip(speeds, blur_levels))
    return [(v, b) for v in speeds for b in blur_levels]


def cell_scenario(base: Scenario, v: float, blur: float) -> Scenario:
    return replace(base, scene=replace(base.scene, true_speed=v, blur_fraction=blur))


def sweep(
    base: Scenario,
    speeds: Sequence[float],
    blur_levels: Sequence[float],
    diagonal: bool = False,
    jobs: int = 1,
) -> list[BatchSummary]:
    """One batch per (speed, blur) cell; the full grid unless ``diagonal``."""
    return [
        run_batch(cell_scenario(base, v, b), jobs)
        for v, b in sweep_cells(speeds, blur_levels, diagonal)
    ]


def report_csv(summaries: Iterable[BatchSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for s in summaries:
        writer.writerow(s.row())
    return buf.getvalue()


def triggered_lamps(report: TrialReport) -> list[int]:
    return sorted({e.lamp_index for e in report.events if e.action is Action.TRIGGER})
