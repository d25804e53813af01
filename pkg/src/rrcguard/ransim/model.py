"""UE, gNB and RRC context models."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..core import Fingerprint, RrcGuardError, SimTime


class ConfigError(RrcGuardError, ValueError):
    """Invalid scenario configuration; ``field`` names the offending key path."""

    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(field)
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


class UnknownAttempt(RrcGuardError, KeyError):
    pass


class Behavior(str, enum.Enum):
    BENIGN = "benign"
    MALICIOUS = "malicious"


class ContextState(str, enum.Enum):
    AWAITING_MSG5 = "AwaitingMsg5"
    COMPLETE = "Complete"
    TIMED_OUT = "TimedOut"
    REJECTED = "Rejected"


@dataclass
class UeProfile:
    """One UE population member.

    Malicious UEs send MSG1 every ``1/msg3_rate_hz`` seconds between
    ``start_ms`` and ``stop_ms`` and never answer MSG4. Benign UEs attach at
    each time in ``attempt_times_ms`` and answer MSG4 after a uniform delay
    drawn from ``msg5_delay_ms``.
    """

    id: str
    behavior: Behavior
    position_track: List[Tuple[int, float, float]]
    msg3_rate_hz: float = 0.0
    start_ms: int = 0
    stop_ms: Optional[int] = None
    arrival: str = "deterministic"
    attempt_times_ms: List[int] = field(default_factory=list)
    msg5_delay_ms: Tuple[int, int] = (5, 20)
    tx_power_offset_db: float = 0.0
    rssi_sigma_db: Optional[float] = None
    max_retries: int = 0
    label: str = ""

    def __post_init__(self):
        self.behavior = Behavior(self.behavior)
        self.position_track = [(int(t), float(x), float(y)) for t, x, y in self.position_track]
        self.msg5_delay_ms = tuple(int(v) for v in self.msg5_delay_ms)
        self.attempt_times_ms = [int(t) for t in self.attempt_times_ms]
        self.validate()

    def validate(self) -> None:
        where = f"ues[{self.id}]"
        if not self.position_track:
            raise ConfigError("at least one waypoint required", f"{where}.position_track")
        times = [t for t, _, _ in self.position_track]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("waypoint times must be strictly increasing",
                              f"{where}.position_track")
        if self.behavior is Behavior.MALICIOUS and not self.msg3_rate_hz > 0:
            raise ConfigError("malicious UEs need msg3_rate_hz > 0", f"{where}.msg3_rate_hz")
        if self.arrival not in ("deterministic", "poisson"):
            raise ConfigError("arrival must be 'deterministic' or 'poisson'", f"{where}.arrival")
        lo, hi = self.msg5_delay_ms
        if not 0 <= lo <= hi:
            raise ConfigError("msg5_delay_ms must satisfy 0 <= lo <= hi", f"{where}.msg5_delay_ms")
        if self.stop_ms is not None and self.stop_ms < self.start_ms:
            raise ConfigError("stop_ms before start_ms", f"{where}.stop_ms")
        if self.rssi_sigma_db is not None and self.rssi_sigma_db < 0:
            raise ConfigError("rssi_sigma_db must be >= 0", f"{where}.rssi_sigma_db")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0", f"{where}.max_retries")

    @property
    def malicious(self) -> bool:
        return self.behavior is Behavior.MALICIOUS


@dataclass
class RrcContext:
    attempt_id: int
    rnti: int
    fingerprint: Fingerprint
    created_at: SimTime
    state: ContextState = ContextState.AWAITING_MSG5


@dataclass
class GnbModel:
    """gNB with a bounded pool of pending RRC contexts.

    A context occupies a slot from MSG3 until MSG5, rejection or hold-timer
    expiry.
    """

    position: Tuple[float, float] = (0.0, 0.0)
    max_ue: int = 16
    context_hold_ms: int = 2000
    active_contexts: Dict[int, RrcContext] = field(default_factory=dict)

    def __post_init__(self):
        self.position = (float(self.position[0]), float(self.position[1]))
        if self.max_ue < 1:
            raise ConfigError("max_ue must be >= 1", "gnb.max_ue")
        if self.context_hold_ms < 1:
            raise ConfigError("context_hold_ms must be >= 1", "gnb.context_hold_ms")
        self._next_rnti = 0x4601
        self.allocations = 0
        self.released: Dict[ContextState, int] = {s: 0 for s in ContextState
                                                  if s is not ContextState.AWAITING_MSG5}

    def fresh(self) -> "GnbModel":
        return GnbModel(self.position, self.max_ue, self.context_hold_ms)

    @property
    def full(self) -> bool:
        return len(self.active_contexts) >= self.max_ue

    def allocate(self, attempt_id: int, fingerprint: Fingerprint, now: SimTime) -> Optional[RrcContext]:
        if self.full:
            return None
        ctx = RrcContext(attempt_id, self._next_rnti, fingerprint, now)
        self._next_rnti += 1
        self.active_contexts[attempt_id] = ctx
        self.allocations += 1
        return ctx

    def release(self, attempt_id: int, state: ContextState) -> Optional[RrcContext]:
        """Move a live context to a terminal state; no-op if it already left the pool."""
        ctx = self.active_contexts.pop(attempt_id, None)
        if ctx is None:
            return None
        ctx.state = state
        self.released[state] += 1
        return ctx

    def conserved(self) -> bool:
        return self.allocations - sum(self.released.values()) == len(self.active_contexts)


def enforce_rejection(gnb: GnbModel, attempt_id: int) -> RrcContext:
    """Drop the live context of a blocked attempt, returning its slot to the pool."""
    ctx = gnb.active_contexts.get(attempt_id)
    if ctx is None or ctx.state is not ContextState.AWAITING_MSG5:
        raise UnknownAttempt(attempt_id)
    return gnb.release(attempt_id, ContextState.REJECTED)
