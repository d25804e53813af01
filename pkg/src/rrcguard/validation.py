"""Input validation helpers shared by the estimators."""

from __future__ import annotations

from typing import Iterable, Sequence, Union

import numpy as np
from sklearn.utils.validation import check_array

from .core import AlgorithmParams, Fingerprint, ParamsError, default_params

FingerprintLike = Union[Fingerprint, Sequence[float]]


def check_fingerprints(X, *, allow_empty: bool = False) -> np.ndarray:
    """Coerce fingerprints to a float array of shape (n, 2) with columns (ta, rssi).

    Accepts a sequence of :class:`Fingerprint` or anything array-like.
    """
    if isinstance(X, np.ndarray):
        arr = X
    else:
        rows = [p.as_tuple() if isinstance(p, Fingerprint) else tuple(p) for p in X]
        arr = np.asarray(rows, dtype=float).reshape(len(rows), -1) if rows else np.empty((0, 2))
    if arr.size == 0:
        if allow_empty:
            return np.empty((0, 2), dtype=float)
        raise ValueError("expected at least one fingerprint")
    arr = check_array(arr, dtype=np.float64, ensure_2d=True)
    if arr.shape[1] != 2:
        raise ValueError(f"fingerprints must have 2 columns (ta, rssi), got {arr.shape[1]}")
    return arr


def check_params(params: AlgorithmParams | None) -> AlgorithmParams:
    if params is None:
        return default_params()
    if not isinstance(params, AlgorithmParams):
        raise ParamsError(f"expected AlgorithmParams, got {type(params).__name__}")
    return params.validate()


def as_fingerprints(points: Iterable[FingerprintLike]) -> list[Fingerprint]:
    return [p if isinstance(p, Fingerprint) else Fingerprint(int(p[0]), float(p[1])) for p in points]
