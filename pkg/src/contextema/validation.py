"""Shared input-validation helpers used by the estimators and record types."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParams


def check_finite(value: float, name: str) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return v


def check_range(value: float, lo: float, hi: float, name: str) -> float:
    v = check_finite(value, name)
    if not (lo <= v <= hi):
        raise ValueError(f"{name} must be in [{lo}, {hi}], got {value!r}")
    return v


def check_positive(value: float, name: str) -> float:
    v = check_finite(value, name)
    if v <= 0:
        raise InvalidParams(f"{name} must be > 0, got {value!r}")
    return v


def check_at_least(value: int, minimum: int, name: str) -> int:
    v = int(value)
    if v < minimum:
        raise InvalidParams(f"{name} must be >= {minimum}, got {value!r}")
    return v


def as_latlon_array(samples: Sequence | Iterable) -> np.ndarray:
    """Coerce location inputs to a float array of shape (n, 2) in degrees.

    Accepts SensorRecords with LOC payloads, LocationSamples, (lat, lon)
    pairs, or an (n, 2+) array; extra columns beyond lat/lon are dropped.
    """
    rows = []
    for s in samples:
        payload = getattr(s, "payload", s)
        lat = getattr(payload, "lat", None)
        if lat is not None:
            rows.append((payload.lat, payload.lon))
        else:
            rows.append((float(payload[0]), float(payload[1])))
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ValueError("expected (n, 2) lat/lon input")
    if np.abs(arr[:, 0]).max(initial=0.0) > 90.0 or np.abs(arr[:, 1]).max(initial=0.0) > 180.0:
        raise ValueError("lat/lon out of range")
    return arr[:, :2]
