"""Log-distance radio model producing (TA, RSSI) fingerprints."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..core import Fingerprint, RSSI_MAX_DBM, RSSI_MIN_DBM, SimTime

MIN_DISTANCE_M = 0.1

Waypoint = Tuple[int, float, float]


class DegenerateGeometry(UserWarning):
    """UE closer to the gNB than the model supports; distance was clamped."""


@dataclass(frozen=True)
class RadioModel:
    """Indoor log-distance path loss plus a quantized timing advance.

    TA carries a fixed offset so lab distances of 3-15 m land in the narrow
    30-33 sample band typical of indoor cells.
    """

    pathloss_exponent: float = 2.0
    ref_rssi_dbm_at_1m: float = -30.0
    rssi_noise_sigma_db: float = 1.5
    ta_meters_per_sample: float = 4.0
    ta_offset_samples: int = 29

    def __post_init__(self):
        if self.rssi_noise_sigma_db < 0:
            raise ValueError("rssi_noise_sigma_db must be >= 0")
        if self.pathloss_exponent <= 0:
            raise ValueError("pathloss_exponent must be > 0")
        if self.ta_meters_per_sample <= 0:
            raise ValueError("ta_meters_per_sample must be > 0")

    def mean_rssi(self, distance_m: float, tx_power_offset_db: float = 0.0) -> float:
        return (self.ref_rssi_dbm_at_1m
                - 10.0 * self.pathloss_exponent * math.log10(distance_m)
                + tx_power_offset_db)

    def ta_samples(self, distance_m: float) -> int:
        return self.ta_offset_samples + int(math.floor(distance_m / self.ta_meters_per_sample + 0.5))


def position_at(track: Sequence[Waypoint], now: SimTime) -> Tuple[float, float]:
    """Linear interpolation along waypoints; held constant outside the track."""
    if len(track) == 1 or now <= track[0][0]:
        return track[0][1], track[0][2]
    for (t0, x0, y0), (t1, x1, y1) in zip(track, track[1:]):
        if now <= t1:
            frac = (now - t0) / (t1 - t0)
            return x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
    return track[-1][1], track[-1][2]


def sample_fingerprint(model: RadioModel, ue, gnb, now: SimTime,
                       rng: np.random.Generator) -> Fingerprint:
    x, y = position_at(ue.position_track, now)
    gx, gy = gnb.position
    distance = math.hypot(x - gx, y - gy)
    if distance < MIN_DISTANCE_M:
        warnings.warn(f"UE {ue.id} at {distance:.3f} m from gNB; clamped to "
                      f"{MIN_DISTANCE_M} m", DegenerateGeometry, stacklevel=2)
        distance = MIN_DISTANCE_M
    sigma = model.rssi_noise_sigma_db if ue.rssi_sigma_db is None else ue.rssi_sigma_db
    rssi = model.mean_rssi(distance, ue.tx_power_offset_db)
    if sigma > 0:
        rssi += float(rng.normal(0.0, sigma))
    rssi = min(max(rssi, RSSI_MIN_DBM), RSSI_MAX_DBM)
    return Fingerprint(model.ta_samples(distance), rssi)


def place_for_fingerprint(model: RadioModel, ta: float, rssi: float,
                          gnb_position: Tuple[float, float] = (0.0, 0.0),
                          bearing_deg: float = 0.0) -> Tuple[float, float, float]:
    """Position and transmit offset that make ``model`` yield mean (ta, rssi).

    The UE goes to the centre of the TA bin nearest ``ta``; the power offset
    absorbs whatever path loss the geometry does not explain.
    Returns ``(x, y, tx_power_offset_db)``.
    """
    bins = max(round(ta) - model.ta_offset_samples, 0)
    distance = max(bins * model.ta_meters_per_sample, 1.0)
    if model.ta_samples(distance) != round(ta):
        raise ValueError(f"TA {ta} unreachable with offset {model.ta_offset_samples}")
    offset = rssi - model.mean_rssi(distance)
    theta = math.radians(bearing_deg)
    return (gnb_position[0] + distance * math.cos(theta),
            gnb_position[1] + distance * math.sin(theta),
            offset)

