"""Flat ``key = value`` run configuration with command-line overrides.

Every key has a default; ``auto`` selects the derived value for the keys
that support it.  Lines starting with ``#`` (or trailing ``# ...``) are
comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .controller import ControllerConfig
from .harness import Scenario, SuccessRule
from .imaging import SceneConfig
from .kinematics import calibrate

AUTO = "auto"

# key -> (type, default)
DEFAULTS: dict[str, tuple[type, Any]] = {
    "segment_length": (float, 1.0),
    "resolution": (int, 400),
    "vehicle_length": (float, 0.13),
    "vehicle_width": (float, 0.093),
    "vehicle_intensity": (int, 90),
    "background_intensity": (int, 50),
    "true_speed": (float, 0.93),
    "blur_fraction": (float, 0.0),
    "blur_radius": (int, 80),
    "noise_amplitude": (int, 2),
    "frame_rate": (float, 25.0),
    "frame_height": (int, AUTO),
    "camera_height": (float, 1.075),
    "reference_length_m": (float, AUTO),
    "reference_length_px": (float, AUTO),
    "lead_time": (float, 0.12),
    "lag_margin": (float, 0.05),
    "processing_latency": (float, 0.0),
    "v_fallback": (float, 1.5),
    "lamp_positions": (list, AUTO),
    "threshold": (int, 10),
    "min_area": (int, 4),
    "trials": (int, 100),
    "seed": (int, 0),
    "max_offset": (float, 0.0),
    "require_reset": (bool, True),
}


class ConfigError(ValueError):
    pass


def _convert(key: str, raw: Any) -> Any:
    kind, _ = DEFAULTS[key]
    if isinstance(raw, str):
        text = raw.strip()
        if text.lower() == AUTO:
            if DEFAULTS[key][1] != AUTO:
                raise ConfigError(f"{key}: 'auto' is not supported for this key")
            return AUTO
        try:
            if kind is bool:
                lowered = text.lower()
                if lowered in ("1", "true", "yes", "on"):
                    return True
                if lowered in ("0", "false", "no", "off"):
                    return False
                raise ValueError(text)
            if kind is list:
                return tuple(float(p) for p in text.split(",") if p.strip())
            return kind(text)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {text!r} as {kind.__name__}") from None
    if kind is list:
        return tuple(float(v) for v in raw)
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    return values


@dataclass
class RunConfig:
    values: dict[str, Any] = field(default_factory=lambda: {k: d for k, (_, d) in DEFAULTS.items()})

    @classmethod
    def load(cls, path: Path | str | None = None, overrides: Mapping[str, Any] | None = None) -> "RunConfig":
        cfg = cls()
        if path is not None:
            path = Path(path)
            try:
                text = path.read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
            cfg.values.update(parse_config_text(text, str(path)))
        for key, raw in (overrides or {}).items():
            if raw is None:
                continue
            if key not in DEFAULTS:
                raise ConfigError(f"unknown key {key!r}")
            cfg.values[key] = _convert(key, raw)
        cfg.scenario()  # validate eagerly
        return cfg

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def _auto(self, key: str, fallback: Any) -> Any:
        value = self.values[key]
        return fallback if value == AUTO else value

    def _build(self, key: str, factory, **kwargs):
        try:
            return factory(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None

    def scene(self) -> SceneConfig:
        v = self.values
        return self._build(
            "scene",
            SceneConfig,
            segment_length=v["segment_length"],
            resolution=v["resolution"],
            vehicle_length=v["vehicle_length"],
            vehicle_width=v["vehicle_width"],
            vehicle_intensity=v["vehicle_intensity"],
            background_intensity=v["background_intensity"],
            true_speed=v["true_speed"],
            blur_fraction=v["blur_fraction"],
            blur_radius=v["blur_radius"],
            noise_amplitude=v["noise_amplitude"],
            frame_rate=v["frame_rate"],
            height=self._auto("frame_height", None),
        )

    def calibration(self):
        v = self.values
        return self._build(
            "calibration",
            calibrate,
            reference_length_m=self._auto("reference_length_m", v["segment_length"]),
            reference_length_px=self._auto("reference_length_px", v["resolution"]),
            frame_rate=v["frame_rate"],
            segment_length=v["segment_length"],
            camera_height=v["camera_height"],
        )

    def controller(self) -> ControllerConfig:
        v = self.values
        return self._build(
            "controller",
            ControllerConfig,
            lead_time=v["lead_time"],
            lag_margin=v["lag_margin"],
            processing_latency=v["processing_latency"],
            v_fallback=v["v_fallback"],
        )

    def scenario(self) -> Scenario:
        v = self.values
        lamps = self._auto("lamp_positions", None)
        return self._build(
            "scenario",
            Scenario,
            scene=self.scene(),
            calibration=self.calibration(),
            controller=self.controller(),
            trials=v["trials"],
            seed=v["seed"],
            success_rule=SuccessRule(v["max_offset"], v["require_reset"]),
            threshold=v["threshold"],
            min_area=v["min_area"],
            lamp_positions=lamps,
            camera_height=v["camera_height"],
        )
