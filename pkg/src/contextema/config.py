"""Engine configuration: one dataclass per module section, loadable from
nested JSON or flat dotted keys (`place.eps_m`)."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .ema import DailySchedule, EmaKind, SlotSpec
from .timebase import parse_hhmm


@dataclass
class PlaceConfig:
    eps_m: float = 100.0
    min_pts: int = 5
    geofence_radius_m: float = 100.0
    gap_timeout_min: float = 30.0
    max_accuracy_m: float = 200.0
    fit_window_days: int = 14
    fit_sample_cap: int = 600
    refit_interval_days: int = 1
    dwell_credit_s: int = 300


@dataclass
class AudioConfig:
    period_s: int = 600
    active_s: int = 60
    voicing_min: float = 0.5
    energy_min_db: float = -40.0
    density_min: float = 0.25
    window_merge_gap: int = 1


@dataclass
class ContextConfig:
    home_threshold: float = 0.5
    min_conv_s: int = 60


@dataclass
class EmaConfig:
    morning: str = "08:00"
    noon: str = "12:00"
    evening: str = "18:00"
    noon_window_start: str = "06:00"
    expire_after_h: float = 4.0
    burst_weeks: tuple[int, ...] = (0, 8, 12, 18, 24)

    def schedule(self) -> DailySchedule:
        noon_s, evening_s = parse_hhmm(self.noon), parse_hhmm(self.evening)
        return DailySchedule(
            slots=(
                SlotSpec("morning", EmaKind.ACTION_PLAN, parse_hhmm(self.morning)),
                SlotSpec("noon", EmaKind.CONTEXTUAL, noon_s, (parse_hhmm(self.noon_window_start), noon_s)),
                SlotSpec("evening", EmaKind.CONTEXTUAL, evening_s, (noon_s, evening_s)),
            )
        )


@dataclass
class MessageConfig:
    personalized_share: float = 0.6


@dataclass
class ProcessingConfig:
    upload_interval_min: int = 10
    processing_interval_min: int = 10
    transit_s: int = 30


@dataclass
class EngineConfig:
    place: PlaceConfig = field(default_factory=PlaceConfig)
    audio: AudioConfig = field(default_factory=AudioConfig)
    context: ContextConfig = field(default_factory=ContextConfig)
    ema: EmaConfig = field(default_factory=EmaConfig)
    messages: MessageConfig = field(default_factory=MessageConfig)
    processing: ProcessingConfig = field(default_factory=ProcessingConfig)
    seed: int = 0
    store_path: Optional[str] = None
    listen: str = "127.0.0.1:8000"
    api_token: Optional[str] = None

    @classmethod
    def from_dict(cls, raw: dict) -> "EngineConfig":
        nested: dict = {}
        for key, value in raw.items():
            if "." in key:
                section, _, leaf = key.partition(".")
                nested.setdefault(section, {})[leaf] = value
            elif isinstance(value, dict):
                nested.setdefault(key, {}).update(value)
            else:
                nested[key] = value

        config = cls()
        for f in dataclasses.fields(cls):
            if f.name not in nested:
                continue
            value = nested[f.name]
            current = getattr(config, f.name)
            if dataclasses.is_dataclass(current) and isinstance(value, dict):
                for leaf, leaf_value in value.items():
                    if not hasattr(current, leaf):
                        raise KeyError(f"unknown config key {f.name}.{leaf}")
                    if leaf == "burst_weeks":
                        leaf_value = tuple(leaf_value)
                    setattr(current, leaf, leaf_value)
            else:
                setattr(config, f.name, value)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(nested) - known
        if unknown:
            raise KeyError(f"unknown config sections: {sorted(unknown)}")
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["ema"]["burst_weeks"] = list(self.ema.burst_weeks)
        return out
