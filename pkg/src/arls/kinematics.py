"""Pixel-to-road calibration, displacement, speed and linear position prediction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from statistics import fmean

from .detection import Detection


@dataclass(frozen=True)
class Calibration:
    c: float  # meters per pixel
    frame_rate: float
    segment_length: float = 1.0
    camera_height: float = 1.075

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError(f"scaling factor must be > 0, got {self.c}")
        if self.frame_rate <= 0:
            raise ValueError(f"frame_rate must be > 0, got {self.frame_rate}")

    @property
    def frame_interval(self) -> float:
        return 1.0 / self.frame_rate


def calibrate(
    reference_length_m: float,
    reference_length_px: float,
    frame_rate: float,
    segment_length: float,
    camera_height: float,
) -> Calibration:
    """Scaling factor from a reference object of known length seen in the image."""
    for name, value in (
        ("reference_length_m", reference_length_m),
        ("reference_length_px", reference_length_px),
        ("frame_rate", frame_rate),
        ("segment_length", segment_length),
        ("camera_height", camera_height),
    ):
        if not value > 0:
            raise ValueError(f"{name} must be > 0, got {value}")
    return Calibration(reference_length_m / reference_length_px, frame_rate, segment_length, camera_height)


def pixels_to_meters(cal: Calibration, px_x: float, px_y: float) -> tuple[float, float]:
    return cal.c * px_x, cal.c * px_y


def displacement(d1: Detection, d2: Detection, cal: Calibration) -> float:
    """Straight-line distance travelled between two detections, in meters."""
    if not (d1.found and d2.found):
        raise ValueError("displacement needs two real detections")
    if d2.frame_index <= d1.frame_index:
        raise ValueError(
            f"frame indices must increase: {d1.frame_index} -> {d2.frame_index}"
        )
    return cal.c * math.hypot(d2.centroid_x - d1.centroid_x, d2.centroid_y - d1.centroid_y)


def speed(delta_r: float, n_frames: int, cal: Calibration) -> float:
    if n_frames < 1:
        raise ValueError(f"speed needs a gap of at least one frame, got {n_frames}")
    if delta_r < 0:
        raise ValueError(f"displacement must be >= 0, got {delta_r}")
    return delta_r / (n_frames * cal.frame_interval)


def predict(r: float, v: float, dt_prime: float) -> float:
    """Road position after ``dt_prime`` seconds at constant speed ``v``."""
    if dt_prime < 0 or v < 0:
        raise ValueError("predict needs dt_prime >= 0 and v >= 0")
    return r + v * dt_prime


@dataclass(frozen=True)
class TrackState:
    """Running track of a single vehicle through the segment.

    ``previous`` is the latest real detection and sets the road position
    ``r``.  Speed samples are taken only between detections that are fully
    inside the image (``anchor`` is the last such detection); a clipped
    object's centroid moves slower than the object itself.
    """

    previous: Detection | None = None
    anchor: Detection | None = None
    r: float = 0.0
    v: float | None = None
    v_history: tuple[float, ...] = field(default_factory=tuple)
    last_index: int | None = None
    detected: bool = False

    @property
    def v_mean(self) -> float | None:
        return fmean(self.v_history) if self.v_history else None


def update_track(state: TrackState, d: Detection, cal: Calibration) -> TrackState:
    if state.last_index is not None and d.frame_index <= state.last_index:
        raise ValueError(
            f"frame index {d.frame_index} does not follow {state.last_index}"
        )
    if not d.found:
        # the anchor is kept, so the next speed sample spans the widened gap
        return replace(state, last_index=d.frame_index, detected=False)

    r = max(0.0, cal.c * d.centroid_x)
    if d.clipped:
        return replace(state, previous=d, r=r, last_index=d.frame_index, detected=True)

    v, history = state.v, state.v_history
    if state.anchor is not None:
        gap = d.frame_index - state.anchor.frame_index
        v = speed(displacement(state.anchor, d, cal), gap, cal)
        history = history + (v,)
    return TrackState(
        previous=d,
        anchor=d,
        r=r,
        v=v,
        v_history=history,
        last_index=d.frame_index,
        detected=True,
    )
