"""Shared domain types for the RRC signaling-storm toolkit.

All times are integer milliseconds of simulated time since scenario start.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

SimTime = int

RSSI_MIN_DBM = -140.0
RSSI_MAX_DBM = 0.0


class RrcGuardError(Exception):
    """Base class for every error raised by this package."""


class ParamsError(RrcGuardError, ValueError):
    pass


class InvalidFingerprint(RrcGuardError, ValueError):
    pass


@dataclass(frozen=True)
class Fingerprint:
    """Radio fingerprint of a single MSG3: timing advance and received power."""

    ta: int
    rssi: float

    def __post_init__(self):
        if isinstance(self.ta, bool) or int(self.ta) != self.ta:
            raise InvalidFingerprint(f"ta must be an integer, got {self.ta!r}")
        if self.ta < 0:
            raise InvalidFingerprint(f"ta must be >= 0, got {self.ta}")
        if not (RSSI_MIN_DBM <= self.rssi <= RSSI_MAX_DBM):
            raise InvalidFingerprint(
                f"rssi {self.rssi} dBm outside plausible range "
                f"[{RSSI_MIN_DBM}, {RSSI_MAX_DBM}]"
            )
        object.__setattr__(self, "ta", int(self.ta))
        object.__setattr__(self, "rssi", float(self.rssi))

    def as_tuple(self) -> Tuple[int, float]:
        return (self.ta, self.rssi)


@dataclass(frozen=True)
class Centroid:
    mu_ta: float
    mu_rssi: float

    def __post_init__(self):
        if not (math.isfinite(self.mu_ta) and math.isfinite(self.mu_rssi)):
            raise InvalidFingerprint(f"non-finite centroid ({self.mu_ta}, {self.mu_rssi})")
        object.__setattr__(self, "mu_ta", float(self.mu_ta))
        object.__setattr__(self, "mu_rssi", float(self.mu_rssi))

    def as_tuple(self) -> Tuple[float, float]:
        return (self.mu_ta, self.mu_rssi)


class ObservedMsg3(NamedTuple):
    time: SimTime
    fingerprint: Fingerprint
    attempt_id: int


@dataclass
class WindowKpm:
    """Per-window message counts plus one fingerprint per observed MSG3."""

    window_id: int
    window_start: SimTime
    n3: int = 0
    n4: int = 0
    n5: int = 0
    fingerprints: List[ObservedMsg3] = field(default_factory=list)


class VerdictKind(str, enum.Enum):
    NORMAL_LOAD = "NormalLoad"
    HIGH_LOAD = "HighLoad"
    ATTACK_DETECTED = "AttackDetected"


@dataclass(frozen=True)
class DetectionVerdict:
    kind: VerdictKind
    malicious_centroids: Tuple[Centroid, ...] = ()
    ratios: Tuple[float, float] = (1.0, 1.0)
    # why the verdict was reached; "no_dense_cluster" marks the downgrade path
    reason: str = ""

    def __post_init__(self):
        if self.kind is VerdictKind.ATTACK_DETECTED and not self.malicious_centroids:
            raise ValueError("AttackDetected requires at least one centroid")
        if any(math.isnan(r) for r in self.ratios):
            raise ValueError("ratios must be NaN-free")


T3_MODES = ("static", "dynamic")
REINFORCE_MODES = ("detector", "attempt")


@dataclass(frozen=True)
class AlgorithmParams:
    """Detection and mitigation parameters.

    ``t3_mode="dynamic"`` replaces the fixed density threshold with
    ``max(0.3, 1 / (1 + n_clusters))``. ``reinforce_on="attempt"`` makes
    blocked connection attempts (rather than detector refreshes) bump the
    block-list match counter.
    """

    eps_rssi: float = 4.0
    eps_ta: float = 1.0
    min_pts: int = 3
    t1: int = 3
    t2: float = 0.25
    t3: float = 0.5
    window_ms: int = 100
    history_size_m: int = 10
    tau0_ms: int = 500
    tau_max_ms: int = 10_000
    delta_ms: int = 500
    k_reinforce: int = 5
    eps_cluster: float = 1.0
    t3_mode: str = "static"
    reinforce_on: str = "detector"

    def validate(self) -> "AlgorithmParams":
        positive = ("eps_rssi", "eps_ta", "min_pts", "t1", "t2", "t3", "window_ms",
                    "history_size_m", "tau0_ms", "tau_max_ms", "delta_ms",
                    "k_reinforce", "eps_cluster")
        for name in positive:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ParamsError(f"{name} must be numeric, got {value!r}")
            if not math.isfinite(value) or value <= 0:
                raise ParamsError(f"{name} must be strictly positive, got {value!r}")
        for name in ("min_pts", "t1", "window_ms", "history_size_m", "tau0_ms",
                     "tau_max_ms", "delta_ms", "k_reinforce"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ParamsError(f"{name} must be an integer")
        if not 0 < self.t2 <= 1:
            raise ParamsError(f"t2 must lie in (0, 1], got {self.t2}")
        if not 0 < self.t3 <= 1:
            raise ParamsError(f"t3 must lie in (0, 1], got {self.t3}")
        if self.tau0_ms > self.tau_max_ms:
            raise ParamsError("tau0_ms must not exceed tau_max_ms")
        if self.min_pts < 2:
            raise ParamsError("min_pts must be >= 2")
        if self.t3_mode not in T3_MODES:
            raise ParamsError(f"t3_mode must be one of {T3_MODES}")
        if self.reinforce_on not in REINFORCE_MODES:
            raise ParamsError(f"reinforce_on must be one of {REINFORCE_MODES}")
        return self

    def replace(self, **changes) -> "AlgorithmParams":
        return dataclasses.replace(self, **changes).validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AlgorithmParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParamsError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return cls(**data).validate()


def default_params() -> AlgorithmParams:
    return AlgorithmParams().validate()
