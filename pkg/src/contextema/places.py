"""Significant-place clustering, home labeling, and the home/away geofence timeline.

Clustering is DBSCAN over great-circle (haversine) distance; the home place
is the cluster holding the most samples captured 02:00-04:00 local; the
timeline classifies each sample against a radius around the home centroid
and run-length encodes the result, with long sensing gaps marked Unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.cluster import DBSCAN
from sklearn.exceptions import NotFittedError

from .errors import InvalidParams, NoHome
from .records import KIND_LOCATION, SensorRecord
from .timebase import SECONDS_PER_HOUR, Timestamp, local_seconds_of_day
from .validation import check_at_least, check_positive

EARTH_RADIUS_M = 6_371_000.0

NIGHT_WINDOW_START_S = 2 * SECONDS_PER_HOUR
NIGHT_WINDOW_END_S = 4 * SECONDS_PER_HOUR


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters on a spherical Earth. Accepts arrays."""
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(x, dtype=float)) for x in (lat1, lon1, lat2, lon2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    a = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def haversine_one(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Scalar haversine, cheaper than the array version for single pairs."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dlat = p2 - p1
    dlon = math.radians(lon2 - lon1)
    a = math.sin(dlat / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(min(a, 1.0)))


@dataclass(frozen=True, slots=True)
class Place:
    place_id: int
    centroid: tuple[float, float]
    member_count: int
    dwell_night_s: int


@dataclass(frozen=True)
class PlaceModel:
    places: tuple[Place, ...]
    home: Optional[int]
    geofence_radius_m: float
    eps_m: float
    min_pts: int

    def home_place(self) -> Optional[Place]:
        if self.home is None:
            return None
        return next(p for p in self.places if p.place_id == self.home)


class HomeAwayState(str, Enum):
    HOME = "home"
    AWAY = "away"
    UNKNOWN = "unknown"


@dataclass(frozen=True, slots=True)
class HomeAwayInterval:
    start: Timestamp
    end: Timestamp
    state: HomeAwayState


def _location_records(records: Iterable[SensorRecord]) -> list[SensorRecord]:
    return [r for r in records if r.kind == KIND_LOCATION]


def dbscan_labels(latlon_deg: np.ndarray, eps_m: float, min_pts: int) -> np.ndarray:
    """DBSCAN partition labels over haversine distance; noise points get -1."""
    check_positive(eps_m, "eps_m")
    check_at_least(min_pts, 1, "min_pts")
    if len(latlon_deg) == 0:
        return np.empty(0, dtype=int)
    model = DBSCAN(
        eps=eps_m / EARTH_RADIUS_M,
        min_samples=min_pts,
        metric="haversine",
        algorithm="ball_tree",
    )
    return model.fit(np.radians(latlon_deg)).labels_


def cluster_places(
    records: Sequence[SensorRecord],
    eps_m: float,
    min_pts: int,
    *,
    tz_offset_s: int = 0,
    max_accuracy_m: float | None = None,
    dwell_credit_s: int = 300,
) -> list[Place]:
    """Cluster location records into significant places.

    Records with accuracy worse than max_accuracy_m are dropped first (GPS
    outliers would fabricate places). dwell_night_s credits each member
    sample captured 02:00-04:00 local with the nominal sample spacing.
    """
    check_positive(eps_m, "eps_m")
    check_at_least(min_pts, 1, "min_pts")
    locs = _location_records(records)
    if max_accuracy_m is not None:
        locs = [r for r in locs if r.payload.accuracy_m <= max_accuracy_m]
    if not locs:
        return []
    latlon = np.array([(r.payload.lat, r.payload.lon) for r in locs], dtype=float)
    labels = dbscan_labels(latlon, eps_m, min_pts)

    places: list[Place] = []
    for label in sorted(set(labels)):
        if label < 0:
            continue
        member_idx = np.flatnonzero(labels == label)
        centroid = latlon[member_idx].mean(axis=0)
        night = sum(
            1
            for i in member_idx
            if NIGHT_WINDOW_START_S
            <= local_seconds_of_day(locs[i].captured_at, tz_offset_s)
            < NIGHT_WINDOW_END_S
        )
        places.append(
            Place(
                place_id=int(label),
                centroid=(float(centroid[0]), float(centroid[1])),
                member_count=int(len(member_idx)),
                dwell_night_s=int(night * dwell_credit_s),
            )
        )
    return places


def label_home(places: Sequence[Place]) -> Optional[int]:
    """Place with the most 02:00-04:00 dwell; ties broken by member_count,
    then lower place_id. Absent when no place has any night dwell."""
    candidates = [p for p in places if p.dwell_night_s > 0]
    if not candidates:
        return None
    best = max(candidates, key=lambda p: (p.dwell_night_s, p.member_count, -p.place_id))
    return best.place_id


def build_place_model(
    records: Sequence[SensorRecord],
    *,
    eps_m: float = 100.0,
    min_pts: int = 5,
    geofence_radius_m: float = 100.0,
    max_accuracy_m: float = 200.0,
    tz_offset_s: int = 0,
    dwell_credit_s: int = 300,
) -> PlaceModel:
    places = cluster_places(
        records,
        eps_m,
        min_pts,
        tz_offset_s=tz_offset_s,
        max_accuracy_m=max_accuracy_m,
        dwell_credit_s=dwell_credit_s,
    )
    return PlaceModel(
        places=tuple(places),
        home=label_home(places),
        geofence_radius_m=geofence_radius_m,
        eps_m=eps_m,
        min_pts=min_pts,
    )


def classify_points(
    records: Sequence[SensorRecord], model: PlaceModel
) -> list[HomeAwayState]:
    """Per-sample Home/Away against the home geofence (distance <= radius)."""
    home = model.home_place()
    if home is None:
        raise NoHome("place model has no labeled home")
    locs = _location_records(records)
    if not locs:
        return []
    radius = model.geofence_radius_m
    clat, clon = home.centroid
    if len(locs) < 200:  # numpy overhead dominates tiny batches
        return [
            HomeAwayState.HOME
            if haversine_one(r.payload.lat, r.payload.lon, clat, clon) <= radius
            else HomeAwayState.AWAY
            for r in locs
        ]
    lat = np.array([r.payload.lat for r in locs])
    lon = np.array([r.payload.lon for r in locs])
    d = haversine_m(lat, lon, clat, clon)
    return [
        HomeAwayState.HOME if dist <= radius else HomeAwayState.AWAY
        for dist in np.atleast_1d(d)
    ]


def home_away_timeline(
    records: Sequence[SensorRecord],
    model: PlaceModel,
    *,
    gap_timeout_s: int = 30 * 60,
) -> list[HomeAwayInterval]:
    """Run-length encode per-sample classifications into maximal intervals.

    A sample's state carries forward until the next sample or for
    gap_timeout_s, whichever comes first; the remainder of longer gaps is
    Unknown. The result partitions [first_sample, last_sample + 1) with no
    overlaps and no gaps.
    """
    locs = sorted(_location_records(records), key=lambda r: r.captured_at)
    states = classify_points(locs, model)
    if not locs:
        return []

    raw: list[tuple[Timestamp, Timestamp, HomeAwayState]] = []
    for i, (rec, state) in enumerate(zip(locs, states)):
        t0 = rec.captured_at
        t1 = locs[i + 1].captured_at if i + 1 < len(locs) else t0 + 1
        if t1 <= t0:
            t1 = t0 + 1  # duplicate timestamps collapse to 1 s cells
        hold_until = min(t1, t0 + gap_timeout_s)
        raw.append((t0, hold_until, state))
        if hold_until < t1:
            raw.append((hold_until, t1, HomeAwayState.UNKNOWN))

    merged: list[HomeAwayInterval] = []
    for start, end, state in raw:
        if merged and merged[-1].state == state and merged[-1].end >= start:
            merged[-1] = HomeAwayInterval(merged[-1].start, max(end, merged[-1].end), state)
        else:
            merged.append(HomeAwayInterval(start, end, state))
    return merged


def timeline_to_csv(participant_id: str, timeline: Sequence[HomeAwayInterval]) -> str:
    from .timebase import format_iso

    lines = ["participant_id,from,to,state"]
    for iv in timeline:
        lines.append(f"{participant_id},{format_iso(iv.start)},{format_iso(iv.end)},{iv.state.value}")
    return "\n".join(lines) + "\n"


class PlaceClusterer(BaseEstimator):
    """Estimator facade over place clustering and the home geofence.

    fit() learns significant places and the home label from location
    records; predict() classifies records as "home"/"away" against the
    fitted geofence. Parameters follow sklearn conventions (stored verbatim
    in __init__, validated at fit time).
    """

    def __init__(
        self,
        eps_m: float = 100.0,
        min_pts: int = 5,
        geofence_radius_m: float = 100.0,
        max_accuracy_m: float = 200.0,
        gap_timeout_min: float = 30.0,
        tz_offset_s: int = 0,
    ):
        self.eps_m = eps_m
        self.min_pts = min_pts
        self.geofence_radius_m = geofence_radius_m
        self.max_accuracy_m = max_accuracy_m
        self.gap_timeout_min = gap_timeout_min
        self.tz_offset_s = tz_offset_s

    def fit(self, X: Sequence[SensorRecord], y=None) -> "PlaceClusterer":
        self.model_ = build_place_model(
            X,
            eps_m=self.eps_m,
            min_pts=self.min_pts,
            geofence_radius_m=self.geofence_radius_m,
            max_accuracy_m=self.max_accuracy_m,
            tz_offset_s=self.tz_offset_s,
        )
        self.places_ = self.model_.places
        self.home_place_id_ = self.model_.home
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise NotFittedError("PlaceClusterer is not fitted yet")

    def predict(self, X: Sequence[SensorRecord]) -> np.ndarray:
        self._check_fitted()
        return np.array([s.value for s in classify_points(X, self.model_)], dtype=object)

    def timeline(self, X: Sequence[SensorRecord]) -> list[HomeAwayInterval]:
        self._check_fitted()
        return home_away_timeline(
            X, self.model_, gap_timeout_s=int(self.gap_timeout_min * 60)
        )
