"""Seeded discrete-event simulation of the MSG1-MSG5 exchange at one gNB.

The gNB allocates an RRC context when MSG3 is decoded and holds it until
MSG5, rejection, or the hold timer. Every ``window_ms`` the cell emits a
:class:`~rrcguard.core.WindowKpm` to a controller (the xApp side); attack
verdicts come back as centroid sets that are absorbed into the cell's block
list ``loop_delay_ms`` later.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import logging
import contextlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from ..core import Centroid, DetectionVerdict, ObservedMsg3, SimTime, VerdictKind, WindowKpm
from ..detector import StormDetector
from ..mitigator import BlockList, Reject
from .config import ScenarioConfig
from .model import ContextState, GnbModel, UeProfile, enforce_rejection
from .radio import sample_fingerprint

log = logging.getLogger(__name__)

# same-millisecond ordering: block-list updates, then expiry, then window close, then UEs
_PRIO_CONTROL, _PRIO_EXPIRY, _PRIO_WINDOW, _PRIO_UE = range(4)


class Controller(Protocol):
    def on_window(self, kpm: WindowKpm) -> Optional[DetectionVerdict]:
        """Classify one window; ``None`` means no answer arrived (degraded loop)."""

    def on_control_applied(self, window_id: int, blocklist_size: int) -> None:
        ...


class LocalXapp:
    """In-process controller: a :class:`StormDetector` called directly."""

    def __init__(self, params):
        self.detector = StormDetector(params).reset()

    def on_window(self, kpm: WindowKpm) -> DetectionVerdict:
        return self.detector.update(kpm)

    def on_control_applied(self, window_id: int, blocklist_size: int) -> None:
        pass


@dataclass
class EventTrace:
    scenario: str
    seed: int
    cell_id: int
    events: List[Dict[str, Any]] = field(default_factory=list)
    windows: List[Dict[str, Any]] = field(default_factory=list)
    complete: bool = False

    def of(self, *kinds: str) -> List[Dict[str, Any]]:
        return [e for e in self.events if e["ev"] in kinds]

    def first(self, kind: str, **match) -> Optional[Dict[str, Any]]:
        for e in self.events:
            if e["ev"] == kind and all(e.get(k) == v for k, v in match.items()):
                return e
        return None

    def verdicts(self) -> List[Tuple[int, Optional[str]]]:
        return [(w["window_id"], w["verdict"]) for w in self.windows]

    def final_blocklist(self) -> List[dict]:
        end = self.first("end")
        return end["blocklist"] if end else []

    def to_jsonl(self) -> str:
        header = {"ev": "header", "scenario": self.scenario, "seed": self.seed,
                  "cell_id": self.cell_id}
        lines = [json.dumps(header, sort_keys=True)]
        lines += [json.dumps(e, sort_keys=True) for e in self.events]
        return "\n".join(lines) + "\n"

    def write_jsonl(self, path) -> None:
        Path(path).write_text(self.to_jsonl())

    WINDOW_COLUMNS = ("window_id", "start", "n3", "n4", "n5", "r1", "r2", "verdict",
                      "reason", "n_centroids", "blocklist_size", "live_contexts")

    def windows_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.WINDOW_COLUMNS, extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        for w in self.windows:
            writer.writerow({**w, "n_centroids": len(w["centroids"])})
        return buf.getvalue()

    def write_windows_csv(self, path) -> None:
        Path(path).write_text(self.windows_csv())

    @classmethod
    def from_jsonl(cls, text: str) -> "EventTrace":
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not records or records[0].get("ev") != "header":
            raise ValueError("trace lacks a header record")
        head, events = records[0], records[1:]
        trace = cls(head["scenario"], head["seed"], head["cell_id"], events)
        trace.windows = [{k: v for k, v in e.items() if k not in ("ev", "t")}
                         for e in events if e["ev"] == "window"]
        trace.complete = any(e["ev"] == "end" for e in events)
        return trace


@dataclass
class _Attempt:
    attempt_id: int
    ue: UeProfile
    retries_left: int
    first: bool
    msg1_at: SimTime
    t300_running: bool = True


class Simulator:
    """One cell, one run. ``pacer(t)`` is called before each event (live mode)."""

    def __init__(self, config: ScenarioConfig, controller: Optional[Controller] = None,
                 pacer: Optional[Callable[[SimTime], None]] = None,
                 blocklist: Optional[BlockList] = None, lock=None):
        self.config = config.validate()
        self.params = config.params
        self.gnb: GnbModel = config.gnb.fresh()
        # a transport may share the block list and apply controls from another thread
        self.blocklist = blocklist if blocklist is not None else BlockList()
        self.lock = lock if lock is not None else contextlib.nullcontext()
        if controller is None and config.closed_loop:
            controller = LocalXapp(config.params)
        self.controller = controller if config.closed_loop else None
        self.pacer = pacer
        self.now: SimTime = 0
        self.trace = EventTrace(config.name, config.seed, config.cell_id)

        self._queue: List[tuple] = []
        self._seq = 0
        self._attempts: Dict[int, _Attempt] = {}
        self._next_attempt = 1
        self._windows: Dict[int, WindowKpm] = {}
        seeds = np.random.SeedSequence(config.seed).spawn(len(config.ues))
        self._rng = {ue.id: np.random.default_rng(s) for ue, s in zip(config.ues, seeds)}
        self._mal_index: Dict[str, int] = {}

    # -- scheduling -----------------------------------------------------------------
    def _at(self, t: SimTime, prio: int, handler, *args) -> None:
        heapq.heappush(self._queue, (int(t), prio, self._seq, handler, args))
        self._seq += 1

    def _log(self, ev: str, **fields) -> None:
        self.trace.events.append({"t": self.now, "ev": ev, **fields})

    def _window(self, t: SimTime) -> WindowKpm:
        k = t // self.params.window_ms
        kpm = self._windows.get(k)
        if kpm is None:
            kpm = self._windows[k] = WindowKpm(k, k * self.params.window_ms)
        return kpm

    # -- run --------------------------------------------------------------------------
    def run(self) -> EventTrace:
        cfg = self.config
        for ue in cfg.ues:
            if ue.malicious:
                self._mal_index[ue.id] = 0
                self._at(ue.start_ms, _PRIO_UE, self._msg1, ue, 0, True)
            else:
                for t in ue.attempt_times_ms:
                    self._at(t, _PRIO_UE, self._msg1, ue, ue.max_retries, True)
        if cfg.params.window_ms <= cfg.duration_ms:
            self._at(cfg.params.window_ms, _PRIO_WINDOW, self._close_window, 0)

        while self._queue and self._queue[0][0] <= cfg.duration_ms:
            t, _, _, handler, args = heapq.heappop(self._queue)
            if self.pacer is not None:
                self.pacer(t)
            self.now = t
            handler(*args)

        self.now = cfg.duration_ms
        self._log("end", live_contexts=len(self.gnb.active_contexts),
                  blocklist=self.blocklist.snapshot())
        self.trace.complete = True
        return self.trace

    # -- UE side ----------------------------------------------------------------------
    def _next_malicious_msg1(self, ue: UeProfile) -> Optional[SimTime]:
        n = self._mal_index[ue.id] = self._mal_index[ue.id] + 1
        if ue.arrival == "poisson":
            gap = self._rng[ue.id].exponential(1000.0 / ue.msg3_rate_hz)
            t = self.now + max(1, int(round(gap)))
        else:
            t = ue.start_ms + int(round(n * 1000.0 / ue.msg3_rate_hz))
        stop = ue.stop_ms if ue.stop_ms is not None else self.config.duration_ms
        return t if t < stop else None

    def _msg1(self, ue: UeProfile, retries_left: int, first: bool) -> None:
        attempt = _Attempt(self._next_attempt, ue, retries_left, first, self.now)
        self._next_attempt += 1
        self._attempts[attempt.attempt_id] = attempt
        self._log("msg1", ue=ue.id, attempt=attempt.attempt_id, first=first)
        if ue.malicious:
            nxt = self._next_malicious_msg1(ue)
            if nxt is not None:
                self._at(nxt, _PRIO_UE, self._msg1, ue, 0, False)
        else:
            self._at(self.now + self.config.t300_ms, _PRIO_UE, self._t300, attempt)
        self._at(self.now + self.config.msg_delays_ms["msg2"], _PRIO_UE, self._msg2, attempt)

    def _msg2(self, attempt: _Attempt) -> None:
        self._log("msg2", attempt=attempt.attempt_id)
        self._at(self.now + self.config.msg_delays_ms["msg3"], _PRIO_UE, self._msg3, attempt)

    def _t300(self, attempt: _Attempt) -> None:
        if attempt.t300_running:
            attempt.t300_running = False
            self._log("t300_expiry", attempt=attempt.attempt_id)

    # -- gNB side ---------------------------------------------------------------------
    def _msg3(self, attempt: _Attempt) -> None:
        ue = attempt.ue
        fp = sample_fingerprint(self.config.radio, ue, self.gnb, self.now, self._rng[ue.id])
        kpm = self._window(self.now)
        kpm.n3 += 1
        kpm.fingerprints.append(ObservedMsg3(self.now, fp, attempt.attempt_id))
        self._log("msg3", attempt=attempt.attempt_id, ue=ue.id, ta=fp.ta, rssi=fp.rssi)

        delay4 = self.config.msg_delays_ms["msg4"]
        ctx = self.gnb.allocate(attempt.attempt_id, fp, self.now)
        if ctx is None:
            self._log("alloc_failed", attempt=attempt.attempt_id, ue=ue.id,
                      live=len(self.gnb.active_contexts))
            self._at(self.now + delay4, _PRIO_UE, self._msg4, attempt, False)
            return
        self._log("context_alloc", attempt=attempt.attempt_id, rnti=ctx.rnti,
                  live=len(self.gnb.active_contexts))
        self._at(self.now + self.gnb.context_hold_ms, _PRIO_UE, self._hold_timer, attempt)

        if self.controller is not None:
            with self.lock:
                self._expire_locked()
                decision = self.blocklist.screen(fp, self.now, self.params)
            if isinstance(decision, Reject):
                enforce_rejection(self.gnb, attempt.attempt_id)
                self._log("rejected", attempt=attempt.attempt_id, ue=ue.id,
                          entry=decision.entry.entry_id, live=len(self.gnb.active_contexts))
                if self.params.reinforce_on == "attempt":
                    self._schedule_expiry(decision.entry)
                self._at(self.now + delay4, _PRIO_UE, self._msg4, attempt, False)
                return
        self._at(self.now + delay4, _PRIO_UE, self._msg4, attempt, True)

    def _msg4(self, attempt: _Attempt, setup: bool) -> None:
        # RRC Setup and RRC Reject both occupy the MSG4 slot
        self._window(self.now).n4 += 1
        attempt.t300_running = False
        ue = attempt.ue
        self._log("msg4", attempt=attempt.attempt_id, kind="setup" if setup else "reject")
        if ue.malicious:
            return
        if setup:
            lo, hi = ue.msg5_delay_ms
            delay = int(self._rng[ue.id].integers(lo, hi + 1))
            self._at(self.now + delay, _PRIO_UE, self._msg5, attempt)
        elif attempt.retries_left > 0:
            self._at(self.now + self.config.t300_ms, _PRIO_UE, self._msg1, ue,
                     attempt.retries_left - 1, False)

    def _msg5(self, attempt: _Attempt) -> None:
        ctx = self.gnb.release(attempt.attempt_id, ContextState.COMPLETE)
        if ctx is None:
            self._log("msg5_stale", attempt=attempt.attempt_id)
            return
        self._window(self.now).n5 += 1
        self._log("msg5", attempt=attempt.attempt_id, ue=attempt.ue.id,
                  live=len(self.gnb.active_contexts))

    def _hold_timer(self, attempt: _Attempt) -> None:
        if self.gnb.release(attempt.attempt_id, ContextState.TIMED_OUT) is not None:
            self._log("timeout", attempt=attempt.attempt_id,
                      live=len(self.gnb.active_contexts))

    # -- control loop -------------------------------------------------------------------
    def _close_window(self, k: int) -> None:
        kpm = self._windows.pop(k, None) or WindowKpm(k, k * self.params.window_ms)
        self._expire()
        verdict = self.controller.on_window(kpm) if self.controller is not None else None
        record = {
            "window_id": k, "start": kpm.window_start, "n3": kpm.n3, "n4": kpm.n4,
            "n5": kpm.n5,
            "verdict": verdict.kind.value if verdict else None,
            "reason": verdict.reason if verdict else ("no_reply" if self.controller else "off"),
            "r1": verdict.ratios[0] if verdict else None,
            "r2": verdict.ratios[1] if verdict else None,
            "centroids": [list(c.as_tuple()) for c in verdict.malicious_centroids] if verdict else [],
            "blocklist_size": len(self.blocklist),
            "live_contexts": len(self.gnb.active_contexts),
        }
        self.trace.windows.append(record)
        self._log("window", **record)
        if verdict is not None and verdict.kind is VerdictKind.ATTACK_DETECTED:
            self._at(self.now + self.config.loop_delay_ms, _PRIO_CONTROL, self._apply_control,
                     k, verdict.malicious_centroids)
        nxt = self.now + self.params.window_ms
        if nxt <= self.config.duration_ms:
            self._at(nxt, _PRIO_WINDOW, self._close_window, k + 1)

    def _apply_control(self, window_id: int, centroids: Sequence[Centroid]) -> None:
        with self.lock:
            self._expire_locked()
            added = self.blocklist.absorb(centroids, self.now, self.params)
            size = len(self.blocklist)
            self._log("control", window_id=window_id, added=[e.entry_id for e in added],
                      blocklist=self.blocklist.snapshot())
            for entry in self.blocklist:
                self._schedule_expiry(entry)
        self.controller.on_control_applied(window_id, size)

    def _schedule_expiry(self, entry) -> None:
        self._at(entry.t_last + entry.tau_ms, _PRIO_EXPIRY, self._expire)

    def _expire(self) -> None:
        with self.lock:
            self._expire_locked()

    def _expire_locked(self) -> None:
        for entry in self.blocklist.expire(self.now):
            self._log("entry_expired", entry=entry.entry_id, c=entry.match_count,
                      tau_ms=entry.tau_ms, t_last=entry.t_last)


def run_scenario(config: ScenarioConfig, controller: Optional[Controller] = None) -> EventTrace:
    return Simulator(config, controller).run()
