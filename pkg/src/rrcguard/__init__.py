"""Detection and mitigation of RRC signaling storms from radio fingerprints."""

from .clustering import ClusterResult, FingerprintDBSCAN, dbscan, distance
from .core import (
    AlgorithmParams,
    Centroid,
    DetectionVerdict,
    Fingerprint,
    ObservedMsg3,
    VerdictKind,
    WindowKpm,
    default_params,
)
from .detector import FingerprintHistory, StormDetector, ingest_window
from .mitigator import BlockEntry, BlockList, absorb_fingerprints, expire, screen_attempt

__version__ = "0.1.0"

__all__ = [
    "AlgorithmParams", "BlockEntry", "BlockList", "Centroid", "ClusterResult",
    "DetectionVerdict", "Fingerprint", "FingerprintDBSCAN", "FingerprintHistory",
    "ObservedMsg3", "StormDetector", "VerdictKind", "WindowKpm", "absorb_fingerprints",
    "dbscan", "default_params", "distance", "expire", "ingest_window", "screen_attempt",
]
