"""Background subtraction into a binary foreground mask, and centroid extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import Frame

DEFAULT_THRESHOLD = 10
DEFAULT_MIN_AREA = 4


def ceila(x: float) -> int:
    """0 for exactly zero, 1 for anything else."""
    return 0 if x == 0 else 1


@dataclass(frozen=True, eq=False)
class ForegroundMask:
    cells: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {cells.shape}")
        if cells.size and not np.isin(cells, (0, 1)).all():
            raise ValueError("mask cells must be 0 or 1")
        cells = np.array(cells, dtype=np.uint8, copy=True)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ForegroundMask):
            return NotImplemented
        return self.frame_index == other.frame_index and np.array_equal(self.cells, other.cells)

    def to_frame(self) -> Frame:
        """Debug rendering: foreground at 255, background at 0."""
        return Frame(self.cells * 255, self.frame_index)


@dataclass(frozen=True)
class Detection:
    """Centroid and area of the foreground in one frame.

    ``area == 0`` is the no-detection state; its centroid is ``None``.
    ``clipped`` flags a foreground touching the image border, whose centroid
    describes only the visible part of the object.
    """

    centroid_x: float | None
    centroid_y: float | None
    area: int
    frame_index: int
    clipped: bool = False

    @classmethod
    def none(cls, frame_index: int) -> "Detection":
        return cls(None, None, 0, frame_index)

    @property
    def found(self) -> bool:
        return self.area > 0


def _check_shapes(current: Frame, reference: Frame):
    if current.pixels.shape != reference.pixels.shape:
        raise ValueError(
            f"frame size mismatch: {current.width}x{current.height} "
            f"vs reference {reference.width}x{reference.height}"
        )


def subtract(current: Frame, reference: Frame, threshold: int = DEFAULT_THRESHOLD) -> ForegroundMask:
    """Mark pixels whose absolute difference from ``reference`` exceeds ``threshold``.

    ``threshold = 0`` marks every pixel that differs at all.
    """
    _check_shapes(current, reference)
    diff = np.abs(current.pixels.astype(np.int16) - reference.pixels.astype(np.int16))
    return ForegroundMask((diff > threshold).astype(np.uint8), current.index)


def centroid(mask: ForegroundMask) -> Detection:
    """Centre of mass of the 1-cells in 0-based pixel coordinates.

    Coordinate sums are accumulated as exact integers, so the result equals
    the plain mean over the foreground cells.
    """
    cells = mask.cells
    col_counts = cells.sum(axis=0, dtype=np.int64)
    row_counts = cells.sum(axis=1, dtype=np.int64)
    area = int(col_counts.sum())
    if area == 0:
        return Detection.none(mask.frame_index)
    sum_x = int(np.dot(col_counts, np.arange(mask.width, dtype=np.int64)))
    sum_y = int(np.dot(row_counts, np.arange(mask.height, dtype=np.int64)))
    clipped = bool(
        col_counts[0] or col_counts[-1] or row_counts[0] or row_counts[-1]
    )
    return Detection(sum_x / area, sum_y / area, area, mask.frame_index, clipped)


def detect(
    current: Frame,
    reference: Frame,
    threshold: int = DEFAULT_THRESHOLD,
    min_area: int = DEFAULT_MIN_AREA,
) -> Detection:
    d = centroid(subtract(current, reference, threshold))
    if d.found and d.area < min_area:
        return Detection.none(d.frame_index)
    return d
