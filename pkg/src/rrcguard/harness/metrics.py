"""Per-run classification and aggregation into summary tables."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..core import RrcGuardError, VerdictKind
from ..ransim.config import ScenarioConfig
from ..ransim.engine import EventTrace


class IncompleteTrace(RrcGuardError):
    pass


class Classification(str, enum.Enum):
    TP = "TP"
    FP = "FP"
    TN = "TN"
    FN = "FN"


@dataclass
class RunOutcome:
    classification: Classification
    scenario: str = ""
    seed: int = 0
    attack: bool = False
    detection_time_ms: Optional[int] = None
    mitigation_time_ms: Optional[int] = None
    depletion_time_ms: Optional[int] = None
    victim_blocked: bool = False
    # label -> (first attempts accepted, first attempts made), benign UEs only
    first_attempts: Dict[str, Tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        self.classification = Classification(self.classification)
        c = self.classification
        if c in (Classification.TP, Classification.FN) and not self.attack:
            raise ValueError(f"{c.value} requires an attack run")
        if c in (Classification.FP, Classification.TN) and self.attack:
            raise ValueError(f"{c.value} only applies to runs without an attack")
        if c is Classification.TP and self.detection_time_ms is None:
            raise ValueError("TP run without a detection time")

    @property
    def response_time_ms(self) -> Optional[int]:
        """Attack start to first blocked malicious attempt."""
        if self.detection_time_ms is None or self.mitigation_time_ms is None:
            return None
        return self.detection_time_ms + self.mitigation_time_ms

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classification"] = self.classification.value
        d["response_time_ms"] = self.response_time_ms
        d["first_attempts"] = {k: list(v) for k, v in self.first_attempts.items()}
        return d


def classify_run(trace: EventTrace, config: ScenarioConfig) -> RunOutcome:
    if not trace.complete:
        raise IncompleteTrace(f"trace of {trace.scenario!r} has no end record")
    malicious = {ue.id for ue in config.ues if ue.malicious}
    benign = {ue.id: (ue.label or ue.id) for ue in config.ues if not ue.malicious}
    attack = config.attack_present
    start = config.attack_start_ms if attack else None

    detected_at = None
    for e in trace.events:
        if e["ev"] == "window" and e["verdict"] == VerdictKind.ATTACK_DETECTED.value:
            detected_at = e["t"]
            break

    rejected_ues = set()
    first_reject = None
    victim_blocked = False
    first_attempt: Dict[int, str] = {}
    accepted = set()
    first_failure = None
    for e in trace.events:
        ev = e["ev"]
        if ev == "msg1":
            if e["first"] and e["ue"] in benign:
                first_attempt[e["attempt"]] = e["ue"]
        elif ev == "rejected":
            if e["ue"] in malicious:
                rejected_ues.add(e["ue"])
                if first_reject is None:
                    first_reject = e["t"]
            else:
                victim_blocked = True
        elif ev == "alloc_failed" and first_failure is None:
            first_failure = e["t"]
        elif ev == "msg5" and e["attempt"] in first_attempt:
            accepted.add(e["attempt"])

    first_attempts: Dict[str, Tuple[int, int]] = {}
    for attempt, ue in first_attempt.items():
        ok, n = first_attempts.get(benign[ue], (0, 0))
        first_attempts[benign[ue]] = (ok + (attempt in accepted), n + 1)

    if attack:
        blocked_all = malicious <= rejected_ues
        # a run that ends before the pool runs out, with some attacker never blocked, is FN
        kind = (Classification.TP if blocked_all and first_failure is None
                else Classification.FN)
    else:
        kind = Classification.FP if detected_at is not None else Classification.TN

    detection = mitigation = depletion = None
    if attack:
        if detected_at is not None:
            detection = detected_at - start
            if first_reject is not None:
                mitigation = first_reject - detected_at
        if first_failure is not None:
            depletion = first_failure - start
    return RunOutcome(kind, config.name, config.seed, attack, detection, mitigation, depletion,
                      victim_blocked and kind is Classification.TP, first_attempts)


def depletion_time(trace: EventTrace, config: ScenarioConfig) -> Optional[int]:
    """First failed allocation relative to attack start, or ``None``."""
    first = trace.first("alloc_failed")
    start = config.attack_start_ms
    if first is None or start is None:
        return None
    return first["t"] - start


def _mean(values: Iterable[Optional[float]]) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


@dataclass
class SummaryTable:
    n_runs: int
    tp: int
    fp: int
    tn: int
    fn: int
    victim_blocked: int
    tp_rate: Optional[float]
    fn_rate: Optional[float]
    fp_rate: Optional[float]
    tn_rate: Optional[float]
    accuracy: float
    cbr: Optional[float]
    mean_detection_ms: Optional[float]
    mean_mitigation_ms: Optional[float]
    mean_response_ms: Optional[float]
    mean_depletion_ms: Optional[float]
    success_rate: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def row(self, **prefix) -> dict:
        """Flat dict for CSV output; success rates become ``success_<label>`` columns."""
        d = {**prefix, **{k: v for k, v in asdict(self).items() if k != "success_rate"}}
        for label, rate in sorted(self.success_rate.items()):
            d[f"success_{label}"] = rate
        return d


def aggregate(outcomes: Sequence[RunOutcome]) -> SummaryTable:
    if not outcomes:
        raise ValueError("aggregate needs at least one outcome")
    count = {c: sum(o.classification is c for o in outcomes) for c in Classification}
    tp, fp, tn, fn = (count[c] for c in (Classification.TP, Classification.FP,
                                         Classification.TN, Classification.FN))
    blocked = sum(o.victim_blocked for o in outcomes if o.classification is Classification.TP)
    attempts: Dict[str, List[int]] = {}
    for o in outcomes:
        for label, (ok, n) in o.first_attempts.items():
            acc = attempts.setdefault(label, [0, 0])
            acc[0] += ok
            acc[1] += n
    tps = [o for o in outcomes if o.classification is Classification.TP]
    return SummaryTable(
        n_runs=len(outcomes), tp=tp, fp=fp, tn=tn, fn=fn, victim_blocked=blocked,
        tp_rate=_ratio(tp, tp + fn), fn_rate=_ratio(fn, tp + fn),
        fp_rate=_ratio(fp, fp + tn), tn_rate=_ratio(tn, fp + tn),
        accuracy=(tp + tn) / len(outcomes),
        cbr=_ratio(blocked, tp),
        mean_detection_ms=_mean(o.detection_time_ms for o in tps),
        mean_mitigation_ms=_mean(o.mitigation_time_ms for o in tps),
        mean_response_ms=_mean(o.response_time_ms for o in tps),
        mean_depletion_ms=_mean(o.depletion_time_ms for o in outcomes),
        success_rate={k: ok / n for k, (ok, n) in attempts.items() if n},
    )
