"""Block list of malicious fingerprint centroids with linear aging.

Entries are reinforced whenever the detector re-reports a matching
centroid: every ``k_reinforce``-th match grows the timeout by ``delta_ms``
up to ``tau_max_ms``. An entry idle for at least its timeout is removed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Union

from .core import AlgorithmParams, Centroid, Fingerprint, SimTime


@dataclass
class BlockEntry:
    centroid: Centroid
    match_count: int
    tau_ms: int
    t_last: SimTime
    entry_id: int = 0

    def expired(self, now: SimTime) -> bool:
        return now - self.t_last >= self.tau_ms

    def reinforce(self, now: SimTime, params: AlgorithmParams) -> None:
        self.match_count += 1
        self.t_last = now
        if self.match_count % params.k_reinforce == 0:
            self.tau_ms = min(self.tau_ms + params.delta_ms, params.tau_max_ms)

    def to_dict(self) -> dict:
        return {
            "id": self.entry_id,
            "mu_ta": self.centroid.mu_ta,
            "mu_rssi": self.centroid.mu_rssi,
            "c": self.match_count,
            "tau_ms": self.tau_ms,
            "t_last": self.t_last,
        }


def in_box(ta: float, rssi: float, centroid: Centroid, params: AlgorithmParams) -> bool:
    return (abs(ta - centroid.mu_ta) <= params.eps_ta
            and abs(rssi - centroid.mu_rssi) <= params.eps_rssi)


class Accept:
    __slots__ = ()

    def __bool__(self):
        return False

    def __repr__(self):
        return "Accept"


ACCEPT = Accept()


@dataclass(frozen=True)
class Reject:
    entry: BlockEntry


Decision = Union[Accept, Reject]


class BlockList:
    """Ordered set of :class:`BlockEntry`; iteration follows insertion order."""

    def __init__(self, entries: Optional[Iterable[BlockEntry]] = None):
        self.entries: List[BlockEntry] = list(entries or [])
        self._next_id = max((e.entry_id for e in self.entries), default=0) + 1

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[BlockEntry]:
        return iter(self.entries)

    def find(self, ta: float, rssi: float, params: AlgorithmParams) -> Optional[BlockEntry]:
        for entry in self.entries:
            if in_box(ta, rssi, entry.centroid, params):
                return entry
        return None

    def absorb(self, f_set: Iterable[Centroid], now: SimTime,
               params: AlgorithmParams) -> List[BlockEntry]:
        """Reinforce or insert one entry per centroid; returns the new entries."""
        added = []
        for mu in f_set:
            entry = self.find(mu.mu_ta, mu.mu_rssi, params)
            if entry is not None:
                # keep the older centroid so jitter cannot walk the entry away
                entry.reinforce(now, params)
                continue
            entry = BlockEntry(mu, match_count=1, tau_ms=params.tau0_ms, t_last=now,
                               entry_id=self._next_id)
            self._next_id += 1
            self.entries.append(entry)
            added.append(entry)
        return added

    def expire(self, now: SimTime) -> List[BlockEntry]:
        """Drop entries idle for at least their timeout; returns the removed ones."""
        removed = [e for e in self.entries if e.expired(now)]
        if removed:
            self.entries = [e for e in self.entries if not e.expired(now)]
        return removed

    def screen(self, fingerprint: Fingerprint, now: SimTime,
               params: AlgorithmParams) -> Decision:
        self.expire(now)
        entry = self.find(fingerprint.ta, fingerprint.rssi, params)
        if entry is None:
            return ACCEPT
        if params.reinforce_on == "attempt":
            entry.reinforce(now, params)
        return Reject(entry)

    def snapshot(self) -> List[dict]:
        return [e.to_dict() for e in self.entries]


def absorb_fingerprints(blocklist: BlockList, f_set: Iterable[Centroid], now: SimTime,
                        params: AlgorithmParams) -> BlockList:
    blocklist.absorb(f_set, now, params)
    return blocklist


def expire(blocklist: BlockList, now: SimTime) -> BlockList:
    blocklist.expire(now)
    return blocklist


def screen_attempt(blocklist: BlockList, f: Fingerprint, now: SimTime,
                   params: AlgorithmParams) -> Decision:
    return blocklist.screen(f, now, params)
