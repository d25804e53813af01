"""DBSCAN over (TA, RSSI) fingerprints with a per-axis normalized metric.

Each axis is divided by its tolerance (``eps_ta``, ``eps_rssi``) so a
neighbourhood radius of ``eps_cluster = 1.0`` corresponds to the same notion
of "same device" used by the block-list match box.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .core import AlgorithmParams, Centroid, Fingerprint, RrcGuardError
from .validation import check_fingerprints, check_params

NOISE = -1


class EmptyInput(RrcGuardError, ValueError):
    pass


@dataclass(frozen=True)
class Cluster:
    indices: Tuple[int, ...]
    size: int
    centroid: Centroid
    density_pk: float


@dataclass(frozen=True)
class ClusterResult:
    labels: Tuple[int, ...]
    clusters: Tuple[Cluster, ...]

    @property
    def noise_count(self) -> int:
        return sum(1 for label in self.labels if label == NOISE)


def distance(a: Fingerprint, b: Fingerprint, params: AlgorithmParams) -> float:
    dta = (a.ta - b.ta) / params.eps_ta
    drssi = (a.rssi - b.rssi) / params.eps_rssi
    return float(np.hypot(dta, drssi))


def pairwise_distances(X: np.ndarray, eps_ta: float, eps_rssi: float) -> np.ndarray:
    scaled = X / np.array([eps_ta, eps_rssi])
    diff = scaled[:, None, :] - scaled[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def _dbscan_labels(dist: np.ndarray, radius: float, min_pts: int) -> np.ndarray:
    n = dist.shape[0]
    adjacency = dist <= radius
    # neighbour counts include the point itself
    is_core = adjacency.sum(axis=1) >= min_pts
    labels = np.full(n, NOISE, dtype=int)
    visited = np.zeros(n, dtype=bool)
    next_label = 0
    for i in range(n):
        if visited[i] or not is_core[i]:
            continue
        # BFS expansion; a border point keeps the first cluster that reaches it
        queue = deque([i])
        visited[i] = True
        labels[i] = next_label
        while queue:
            p = queue.popleft()
            if not is_core[p]:
                continue
            for q in np.flatnonzero(adjacency[p]):
                if labels[q] == NOISE:
                    labels[q] = next_label
                if not visited[q] and is_core[q]:
                    visited[q] = True
                    queue.append(q)
        next_label += 1
    return labels


def _summarize(X: np.ndarray, labels: np.ndarray, capacity: int) -> Tuple[Cluster, ...]:
    clusters = []
    for label in range(labels.max(initial=NOISE) + 1):
        idx = np.flatnonzero(labels == label)
        mean = X[idx].mean(axis=0)
        clusters.append(Cluster(
            indices=tuple(int(i) for i in idx),
            size=len(idx),
            centroid=Centroid(float(mean[0]), float(mean[1])),
            density_pk=len(idx) / capacity,
        ))
    return tuple(clusters)


def dbscan(points: Sequence[Fingerprint], params: AlgorithmParams,
           history_capacity: int) -> ClusterResult:
    """Cluster ``points``; densities are sizes over the history *capacity*."""
    if len(points) == 0:
        raise EmptyInput("dbscan needs at least one point")
    if history_capacity < len(points):
        raise ValueError(
            f"history_capacity {history_capacity} smaller than point count {len(points)}")
    X = check_fingerprints(points)
    dist = pairwise_distances(X, params.eps_ta, params.eps_rssi)
    labels = _dbscan_labels(dist, params.eps_cluster, params.min_pts)
    return ClusterResult(
        labels=tuple(int(v) for v in labels),
        clusters=_summarize(X, labels, history_capacity),
    )


class FingerprintDBSCAN(ClusterMixin, BaseEstimator):
    """Estimator wrapper around :func:`dbscan`.

    ``X`` is array-like of shape (n_samples, 2) holding (ta, rssi) rows.
    After ``fit`` the estimator exposes ``labels_``, ``cluster_centers_``
    (one (ta, rssi) row per cluster) and ``densities_``.
    """

    def __init__(self, eps_ta=1.0, eps_rssi=4.0, eps_cluster=1.0, min_pts=3,
                 history_capacity=None):
        self.eps_ta = eps_ta
        self.eps_rssi = eps_rssi
        self.eps_cluster = eps_cluster
        self.min_pts = min_pts
        self.history_capacity = history_capacity

    @classmethod
    def from_params(cls, params: AlgorithmParams) -> "FingerprintDBSCAN":
        params = check_params(params)
        return cls(eps_ta=params.eps_ta, eps_rssi=params.eps_rssi,
                   eps_cluster=params.eps_cluster, min_pts=params.min_pts,
                   history_capacity=params.history_size_m)

    def fit(self, X, y=None):
        X = check_fingerprints(X)
        if self.eps_ta <= 0 or self.eps_rssi <= 0 or self.eps_cluster <= 0:
            raise ValueError("eps values must be strictly positive")
        if self.min_pts < 2:
            raise ValueError("min_pts must be >= 2")
        capacity = len(X) if self.history_capacity is None else self.history_capacity
        if capacity < len(X):
            raise ValueError("history_capacity smaller than number of samples")
        dist = pairwise_distances(X, self.eps_ta, self.eps_rssi)
        labels = _dbscan_labels(dist, self.eps_cluster, self.min_pts)
        clusters = _summarize(X, labels, capacity)
        self.labels_ = labels
        self.clusters_ = clusters
        self.cluster_centers_ = np.array([c.centroid.as_tuple() for c in clusters]).reshape(-1, 2)
        self.densities_ = np.array([c.density_pk for c in clusters])
        self.n_features_in_ = 2
        return self


def partition(labels: Sequence[int]) -> frozenset:
    """Label-free view of a clustering: a set of clusters plus the noise set.

    Two labelings are equal up to renumbering iff their partitions are equal.
    """
    groups: dict = {}
    noise: List[int] = []
    for i, label in enumerate(labels):
        if label == NOISE:
            noise.append(i)
        else:
            groups.setdefault(label, []).append(i)
    return frozenset([("cluster", frozenset(g)) for g in groups.values()]
                     + [("noise", frozenset(noise))])
