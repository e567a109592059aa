"""Grayscale frames, binary PGM I/O and the synthetic road-segment renderer.

Frames hold an ``(height, width)`` ``uint8`` array.  The renderer draws the
vehicle as a filled axis-aligned rectangle moving along +X; a pixel belongs to
the vehicle iff its centre lies inside the vehicle's world rectangle
(``rear <= x < front``, ``top <= y < bottom``).

Noise comes from a 32-bit linear congruential generator so runs are
reproducible independently of numpy's generator versions::

    state[k+1] = (1664525 * state[k] + 1013904223) mod 2**32
    state[0]   = seed mod 2**32

The k-th draw is ``state[k+1]``.  An integer offset in ``[-a, a]`` is taken
from the high 16 bits: ``((draw >> 16) * (2a + 1) >> 16) - a``; a uniform in
``[0, 1)`` is ``draw / 2**32``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

LCG_MULTIPLIER = 1664525
LCG_INCREMENT = 1013904223
LCG_MODULUS = 2**32

FRAME_NAME = "frame_{:06d}.pgm"
_FRAME_RE = re.compile(r"^frame_(\d{6})\.pgm$")


class PGMError(ValueError):
    """Base class for PGM parse failures; ``offset`` is the offending byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class PGMHeaderError(PGMError):
    pass


class PGMTruncatedError(PGMError):
    pass


class PGMDepthError(PGMError):
    pass


@dataclass(frozen=True, eq=False)
class Frame:
    pixels: np.ndarray
    index: int = 0

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2 or pixels.shape[0] == 0 or pixels.shape[1] == 0:
            raise ValueError(f"frame must be a non-empty 2-D grid, got shape {pixels.shape}")
        if pixels.dtype != np.uint8:
            if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
                raise ValueError("pixel intensities must lie in [0, 255]")
            pixels = pixels.astype(np.uint8)
        if self.index < 0:
            raise ValueError(f"frame index must be >= 0, got {self.index}")
        pixels = np.array(pixels, dtype=np.uint8, copy=True)
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.index == other.index and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"Frame({self.width}x{self.height}, index={self.index})"


# ---------------------------------------------------------------------------
# PGM (P5) codec
# ---------------------------------------------------------------------------

def _header_tokens(data: bytes, count: int) -> tuple[list[tuple[int, bytes]], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments.

    Returns the tokens with their offsets and the offset of the single
    whitespace byte terminating the last token.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in b" \t\r\n":
            pos += 1
        if pos < n and data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        if pos >= n:
            raise PGMHeaderError("unexpected end of header", pos)
        start = pos
        while pos < n and data[pos] not in b" \t\r\n#":
            pos += 1
        tokens.append((start, data[start:pos]))
    if pos >= n:
        raise PGMHeaderError("header not terminated by whitespace", pos)
    if data[pos] not in b" \t\r\n":
        raise PGMHeaderError("header not terminated by whitespace", pos)
    return tokens, pos


def _positive_int(token: bytes, offset: int, what: str) -> int:
    if not token.isdigit():
        raise PGMHeaderError(f"{what} is not a decimal integer: {token!r}", offset)
    value = int(token)
    if value <= 0:
        raise PGMHeaderError(f"{what} must be positive, got {value}", offset)
    return value


def load_frame(data: bytes, index: int = 0) -> Frame:
    """Parse a binary PGM (P5, maxval 255) image."""
    data = bytes(data)
    if not data.startswith(b"P5"):
        raise PGMHeaderError("missing P5 magic number", 0)
    tokens, end = _header_tokens(data, 4)
    (_, magic), (w_off, w_tok), (h_off, h_tok), (m_off, m_tok) = tokens
    if magic != b"P5":
        raise PGMHeaderError(f"bad magic number {magic!r}", 0)
    width = _positive_int(w_tok, w_off, "width")
    height = _positive_int(h_tok, h_off, "height")
    maxval = _positive_int(m_tok, m_off, "maxval")
    if maxval != 255:
        raise PGMDepthError(f"unsupported maxval {maxval}, only 255 is accepted", m_off)
    start = end + 1
    expected = width * height
    payload = data[start:]
    if len(payload) < expected:
        raise PGMTruncatedError(
            f"expected {expected} pixel bytes, found {len(payload)}", len(data)
        )
    if len(payload) > expected:
        raise PGMError(f"{len(payload) - expected} trailing bytes after pixel data", start + expected)
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Frame(pixels, index)


def save_frame(frame: Frame) -> bytes:
    header = f"P5 {frame.width} {frame.height} 255\n".encode("ascii")
    return header + frame.pixels.tobytes()


def frame_path(directory: Path | str, index: int) -> Path:
    return Path(directory) / FRAME_NAME.format(index)


def write_sequence(frames: Iterable[Frame], directory: Path | str) -> list[Path]:
    directory = Path(directory)
    paths = []
    for frame in frames:
        path = frame_path(directory, frame.index)
        path.write_bytes(save_frame(frame))
        paths.append(path)
    return paths


def read_sequence(directory: Path | str) -> list[Frame]:
    """Load every ``frame_NNNNNN.pgm`` in ``directory``, ordered by index."""
    directory = Path(directory)
    found = []
    for path in directory.iterdir():
        m = _FRAME_RE.match(path.name)
        if m:
            found.append((int(m.group(1)), path))
    found.sort()
    return [load_frame(path.read_bytes(), index) for index, path in found]


# ---------------------------------------------------------------------------
# Deterministic pseudo-random source
# ---------------------------------------------------------------------------

def lcg_draws(seed: int, n: int) -> np.ndarray:
    """Return the first ``n`` LCG draws for ``seed`` as ``uint64`` values.

    Uses jump-ahead doubling so the cost is O(log n) vectorized steps.
    """
    mask = np.uint64(LCG_MODULUS - 1)
    first = (LCG_MULTIPLIER * (seed % LCG_MODULUS) + LCG_INCREMENT) % LCG_MODULUS
    states = np.array([first], dtype=np.uint64)
    mult, inc = LCG_MULTIPLIER, LCG_INCREMENT  # advances one step
    while states.size < n:
        # mult/inc advance len(states) steps at this point
        jump_mult, jump_inc = mult, inc
        ahead = (np.uint64(jump_mult) * states + np.uint64(jump_inc)) & mask
        states = np.concatenate([states, ahead])
        inc = (jump_mult * jump_inc + jump_inc) % LCG_MODULUS
        mult = (jump_mult * jump_mult) % LCG_MODULUS
    return states[:n]


def lcg_uniform(seed: int, n: int) -> np.ndarray:
    return lcg_draws(seed, n).astype(np.float64) / LCG_MODULUS


# ---------------------------------------------------------------------------
# Degradations
# ---------------------------------------------------------------------------

def apply_blur(frame: Frame, radius: int) -> Frame:
    """Box blur: rounded mean over the clamped Chebyshev window of ``radius``.

    Windows are truncated at the image border rather than padded, so a corner
    pixel averages only the pixels that exist.  Halves round up.
    """
    if radius < 0:
        raise ValueError(f"blur radius must be >= 0, got {radius}")
    if radius == 0:
        return frame
    h, w = frame.height, frame.width
    integral = np.zeros((h + 1, w + 1), dtype=np.int64)
    integral[1:, 1:] = frame.pixels.astype(np.int64).cumsum(axis=0).cumsum(axis=1)

    rows = np.arange(h)
    cols = np.arange(w)
    r0 = np.clip(rows - radius, 0, h)
    r1 = np.clip(rows + radius + 1, 0, h)
    c0 = np.clip(cols - radius, 0, w)
    c1 = np.clip(cols + radius + 1, 0, w)

    total = (
        integral[np.ix_(r1, c1)]
        - integral[np.ix_(r0, c1)]
        - integral[np.ix_(r1, c0)]
        + integral[np.ix_(r0, c0)]
    )
    count = np.outer(r1 - r0, c1 - c0)
    blurred = (2 * total + count) // (2 * count)
    return Frame(blurred.astype(np.uint8), frame.index)


def noise_offsets(amplitude: int, seed: int, n: int) -> np.ndarray:
    draws = lcg_draws(seed, n)
    span = np.uint64(2 * amplitude + 1)
    return ((draws >> np.uint64(16)) * span >> np.uint64(16)).astype(np.int64) - amplitude


def apply_noise(frame: Frame, amplitude: int, seed: int) -> Frame:
    """Add a seeded uniform integer offset in ``[-amplitude, amplitude]`` per pixel.

    Offsets are drawn in row-major pixel order and the result is clamped to
    ``[0, 255]``.
    """
    if amplitude < 0:
        raise ValueError(f"noise amplitude must be >= 0, got {amplitude}")
    if amplitude == 0:
        return frame
    offsets = noise_offsets(amplitude, seed, frame.pixels.size).reshape(frame.pixels.shape)
    noisy = np.clip(frame.pixels.astype(np.int64) + offsets, 0, 255)
    return Frame(noisy.astype(np.uint8), frame.index)


# ---------------------------------------------------------------------------
# Scene renderer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneConfig:
    """Geometry and appearance of one synthetic traverse.

    Defaults follow the toy setup: a 1 m segment, a 13 cm x 9.3 cm vehicle
    and a 25 fps camera.  ``height`` is derived (twice the vehicle width)
    unless given.  ``blur_radius`` defaults to a strength at which a blurred
    frame no longer separates the vehicle from the road at the default
    contrast and detection threshold.
    """

    segment_length: float = 1.0
    resolution: int = 400
    vehicle_length: float = 0.13
    vehicle_width: float = 0.093
    vehicle_intensity: int = 90
    background_intensity: int = 50
    true_speed: float = 0.93
    blur_fraction: float = 0.0
    blur_radius: int = 80
    noise_amplitude: int = 2
    frame_rate: float = 25.0
    height: int | None = None

    def __post_init__(self):
        if self.segment_length <= 0:
            raise ValueError("segment_length must be > 0")
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")
        if self.true_speed < 0:
            raise ValueError("true_speed must be >= 0")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be > 0")
        if not 0.0 <= self.blur_fraction <= 1.0:
            raise ValueError("blur_fraction must lie in [0, 1]")
        if self.blur_radius < 0 or self.noise_amplitude < 0:
            raise ValueError("blur_radius and noise_amplitude must be >= 0")
        for name in ("vehicle_intensity", "background_intensity"):
            if not 0 <= getattr(self, name) <= 255:
                raise ValueError(f"{name} must lie in [0, 255]")
        if self.vehicle_length <= 0 or self.vehicle_width <= 0:
            raise ValueError("vehicle dimensions must be > 0")
        if self.vehicle_length > self.segment_length:
            raise ValueError("vehicle_length exceeds the segment")
        if self.height is not None and self.vehicle_width > self.height * self.meters_per_pixel:
            raise ValueError("vehicle_width does not fit in the frame height")
        if abs(self.vehicle_intensity - self.background_intensity) <= 2 * self.noise_amplitude:
            raise ValueError("vehicle/background contrast must exceed twice the noise amplitude")

    @property
    def meters_per_pixel(self) -> float:
        return self.segment_length / self.resolution

    @property
    def width_px(self) -> int:
        return self.resolution

    @property
    def height_px(self) -> int:
        if self.height is not None:
            return self.height
        return max(1, math.ceil(2 * self.vehicle_width / self.meters_per_pixel - 1e-9))

    @property
    def traverse_time(self) -> float:
        if self.true_speed == 0:
            return math.inf
        return self.segment_length / self.true_speed

    def front_position(self, t: float) -> float:
        """Ground-truth road position of the vehicle's leading edge."""
        return self.true_speed * t

    def center_position(self, t: float) -> float:
        """Ground-truth road position of the vehicle's centre."""
        return self.true_speed * t - self.vehicle_length / 2

    def frame_count(self, frames: int | None = None) -> int:
        """Frames in one traverse, t = 0 .. T inclusive at the frame rate.

        A stationary vehicle never finishes; ``frames`` (default: one second
        of video plus one) bounds the sequence.
        """
        if self.true_speed == 0:
            return frames if frames is not None else int(self.frame_rate) + 1
        n = math.floor(self.traverse_time * self.frame_rate + 1e-9) + 1
        return n if frames is None else min(n, frames)


def _vehicle_mask(config: SceneConfig, front: float) -> np.ndarray:
    mpp = config.meters_per_pixel
    h, w = config.height_px, config.width_px
    xs = (np.arange(w) + 0.5) * mpp
    ys = (np.arange(h) + 0.5) * mpp
    y_mid = h * mpp / 2
    in_x = (xs >= front - config.vehicle_length) & (xs < front)
    in_y = (ys >= y_mid - config.vehicle_width / 2) & (ys < y_mid + config.vehicle_width / 2)
    return np.outer(in_y, in_x)


def render_background(config: SceneConfig, index: int = 0) -> Frame:
    pixels = np.full((config.height_px, config.width_px), config.background_intensity, dtype=np.uint8)
    return Frame(pixels, index)


def render_scene(config: SceneConfig, t: float, index: int = 0) -> Frame:
    """Render the clean frame at time ``t`` (no blur, no noise).

    The leading edge sits at road position ``true_speed * t``; at ``t = 0``
    the vehicle is just outside the segment entry.
    """
    if t < 0 or (config.true_speed > 0 and t > config.traverse_time + 1e-9):
        raise ValueError(f"t = {t} s lies outside the traverse [0, {config.traverse_time}]")
    pixels = np.full((config.height_px, config.width_px), config.background_intensity, dtype=np.uint8)
    pixels[_vehicle_mask(config, config.front_position(t))] = config.vehicle_intensity
    return Frame(pixels, index)


def render_sequence(config: SceneConfig, frames: int | None = None) -> list[Frame]:
    """Clean frames for one traverse, indexed from 0."""
    n = config.frame_count(frames)
    return [render_scene(config, k / config.frame_rate, k) for k in range(n)]
