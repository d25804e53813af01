"""Per-window signaling-storm classifier.

Each window reports MSG3/MSG4/MSG5 counts plus the fingerprints of the
window's MSG3s. Low completion ratios on a busy window trigger clustering
of the fingerprint history; a cluster that owns more than ``t3`` of the
history capacity is reported as a malicious centroid.
"""

from __future__ import annotations

import logging
from collections import deque
from typing import Iterable, List, Optional, Tuple

from sklearn.base import BaseEstimator

from .clustering import ClusterResult, dbscan
from .core import (
    AlgorithmParams,
    Centroid,
    DetectionVerdict,
    Fingerprint,
    RrcGuardError,
    SimTime,
    VerdictKind,
    WindowKpm,
)
from .validation import check_params

log = logging.getLogger(__name__)


class InvalidKpm(RrcGuardError, ValueError):
    pass


class FingerprintHistory:
    """FIFO ring buffer of the most recent ``capacity`` fingerprints."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._buf: deque = deque(maxlen=capacity)

    def append(self, fingerprint: Fingerprint, time: SimTime) -> None:
        self._buf.append((time, fingerprint))

    def extend(self, items: Iterable[Tuple[SimTime, Fingerprint]]) -> None:
        for time, fp in items:
            self.append(fp, time)

    def fingerprints(self) -> List[Fingerprint]:
        return [fp for _, fp in self._buf]

    def snapshot(self) -> List[Tuple[SimTime, Fingerprint]]:
        return list(self._buf)

    def clear(self) -> None:
        self._buf.clear()

    def __len__(self) -> int:
        return len(self._buf)

    def __iter__(self):
        return iter(self.fingerprints())


def completion_ratio(n5: int, denom: int) -> float:
    # an empty denominator cannot evidence a storm: treat as fully completed
    return 1.0 if denom == 0 else n5 / denom


def validate_kpm(kpm: WindowKpm) -> None:
    for name in ("n3", "n4", "n5"):
        value = getattr(kpm, name)
        if not isinstance(value, int) or value < 0:
            raise InvalidKpm(f"{name} must be a non-negative integer, got {value!r}")
    if len(kpm.fingerprints) != kpm.n3:
        raise InvalidKpm(
            f"window {kpm.window_id}: {len(kpm.fingerprints)} fingerprints for n3={kpm.n3}")


def density_threshold(params: AlgorithmParams, n_clusters: int) -> float:
    if params.t3_mode == "dynamic":
        return max(0.3, 1.0 / (1 + n_clusters))
    return params.t3


def classify_counts(n3: int, n4: int, n5: int, params: AlgorithmParams) -> Tuple[str, float, float]:
    """Return ("attack" | "high" | "normal", r1, r2) from the window counts alone.

    When exactly one ratio is below ``t2`` the window counts as high load:
    both ratios must be low to suspect a storm.
    """
    r1 = completion_ratio(n5, n3)
    r2 = completion_ratio(n5, n4)
    if n3 > params.t1:
        if r1 < params.t2 and r2 < params.t2:
            return "attack", r1, r2
        return "high", r1, r2
    return "normal", r1, r2


def malicious_centroids(result: ClusterResult, params: AlgorithmParams) -> List[Centroid]:
    threshold = density_threshold(params, len(result.clusters))
    return [c.centroid for c in result.clusters if c.density_pk > threshold]


def ingest_window(kpm: WindowKpm, history: FingerprintHistory,
                  params: AlgorithmParams) -> DetectionVerdict:
    """Append the window's fingerprints to ``history`` and classify the window."""
    validate_kpm(kpm)
    for time, fp, _ in kpm.fingerprints:
        history.append(fp, time)

    branch, r1, r2 = classify_counts(kpm.n3, kpm.n4, kpm.n5, params)
    ratios = (r1, r2)
    if branch == "normal":
        return DetectionVerdict(VerdictKind.NORMAL_LOAD, ratios=ratios, reason="below_t1")
    if branch == "high":
        return DetectionVerdict(VerdictKind.HIGH_LOAD, ratios=ratios, reason="completions_ok")

    result = dbscan(history.fingerprints(), params, history.capacity)
    found = malicious_centroids(result, params)
    if not found:
        log.debug("window %d: low completion but no dense cluster", kpm.window_id)
        return DetectionVerdict(VerdictKind.HIGH_LOAD, ratios=ratios, reason="no_dense_cluster")
    return DetectionVerdict(VerdictKind.ATTACK_DETECTED, malicious_centroids=tuple(found),
                            ratios=ratios, reason="dense_cluster")


class StormDetector(BaseEstimator):
    """Stateful detector for one cell.

    ``partial_fit`` consumes one window and stores the verdict in
    ``last_verdict_``; ``fit`` resets the history and replays a sequence of
    windows. ``predict`` returns the verdict kinds for a window sequence
    without disturbing the fitted history.
    """

    def __init__(self, params: Optional[AlgorithmParams] = None):
        self.params = params

    def _ensure_history(self):
        if not hasattr(self, "history_"):
            self.params_ = check_params(self.params)
            self.history_ = FingerprintHistory(self.params_.history_size_m)
            self.verdicts_: List[DetectionVerdict] = []

    def reset(self) -> "StormDetector":
        for attr in ("history_", "params_", "verdicts_", "last_verdict_"):
            self.__dict__.pop(attr, None)
        self._ensure_history()
        return self

    def partial_fit(self, kpm: WindowKpm) -> "StormDetector":
        self._ensure_history()
        verdict = ingest_window(kpm, self.history_, self.params_)
        self.verdicts_.append(verdict)
        self.last_verdict_ = verdict
        return self

    def update(self, kpm: WindowKpm) -> DetectionVerdict:
        return self.partial_fit(kpm).last_verdict_

    def fit(self, windows: Iterable[WindowKpm], y=None) -> "StormDetector":
        self.reset()
        for kpm in windows:
            self.partial_fit(kpm)
        return self

    def predict(self, windows: Iterable[WindowKpm]) -> List[VerdictKind]:
        scratch = StormDetector(self.params).fit(windows)
        return [v.kind for v in scratch.verdicts_]
