"""gNB side of the E2-lite loop.

:class:`E2Server` accepts xApp connections and routes their messages to
per-cell :class:`CellEndpoint` objects. A simulator drives a cell through a
:class:`GnbBridge`, which implements the simulator's controller interface:
each closed window becomes an Indication, and the simulator waits for the
matching Control before moving on. Because the loop runs in lockstep with
sim time, the verdict sequence does not depend on wall-clock latency.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
from typing import Dict, Optional

from ..core import AlgorithmParams, DetectionVerdict, RrcGuardError, SimTime, WindowKpm
from ..mitigator import BlockList
from ..ransim.config import ScenarioConfig
from ..ransim.engine import EventTrace, Simulator
from .codec import (
    E2Error,
    E2Message,
    MalformedBody,
    MsgType,
    UnsupportedVersion,
    centroids_from_payload,
    kpm_to_payload,
    verdict_from_payload,
)
from .transport import Connection

log = logging.getLogger(__name__)

_LOST = object()


class UnknownCell(RrcGuardError):
    code = "UnknownCell"


class DuplicateSubscription(RrcGuardError):
    code = "DuplicateSubscription"


class CellEndpoint:
    """State of one served cell: its block list, lock and current subscriber."""

    def __init__(self, cell_id: int, params: AlgorithmParams):
        self.cell_id = cell_id
        self.params = params
        self.blocklist = BlockList()
        self.lock = threading.RLock()
        self.subscriber: Optional[Connection] = None
        self.window_ms: Optional[int] = None
        self.subscribed = threading.Event()
        self.replies: "queue.Queue" = queue.Queue()
        self.simulator: Optional[Simulator] = None
        self.indications_sent = 0

    def now(self) -> SimTime:
        return self.simulator.now if self.simulator is not None else 0

    def apply_control(self, centroids) -> int:
        """Absorb centroids immediately, serialized against attempt screening."""
        with self.lock:
            now = self.now()
            if self.simulator is not None:
                self.simulator._expire_locked()
            added = self.blocklist.absorb(centroids, now, self.params)
            if self.simulator is not None:
                self.simulator._log("control", window_id=None,
                                    added=[e.entry_id for e in added],
                                    blocklist=self.blocklist.snapshot())
                for entry in self.blocklist:
                    self.simulator._schedule_expiry(entry)
            return len(self.blocklist)


class E2Server:
    def __init__(self, host: str = "127.0.0.1", port: int = 0, heartbeat_s: float = 1.0,
                 degraded_after_s: float = 3.0):
        self.cells: Dict[int, CellEndpoint] = {}
        self.heartbeat_s = heartbeat_s
        self.degraded_after_s = degraded_after_s
        self._sock = socket.create_server((host, port))
        self.address = self._sock.getsockname()[:2]
        self._conns = []
        self._stop = threading.Event()
        self._accept_thread = threading.Thread(target=self._accept_loop, name="e2-accept",
                                               daemon=True)

    def add_cell(self, cell_id: int, params: AlgorithmParams) -> CellEndpoint:
        endpoint = self.cells[cell_id] = CellEndpoint(cell_id, params)
        return endpoint

    def start(self) -> "E2Server":
        self._accept_thread.start()
        return self

    def close(self) -> None:
        self._stop.set()
        try:
            self._sock.close()
        except OSError:
            pass
        for conn in list(self._conns):
            conn.close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.close()

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, peer = self._sock.accept()
            except OSError:
                return
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = Connection(sock, f"gnb<-{peer[0]}:{peer[1]}", self._on_message,
                              self._on_error, self._on_close, self.heartbeat_s,
                              self.degraded_after_s)
            self._conns.append(conn)
            log.info("xApp connected from %s:%s", *peer)
            conn.start()

    # -- message handling (serialized per connection by its reader thread) ------------
    def _on_error(self, conn: Connection, exc: E2Error) -> None:
        cell = exc.cell_id if isinstance(exc, UnsupportedVersion) else 0
        log.warning("%s: %s", conn.name, exc)
        conn.send_error(cell, exc.code, str(exc))

    def _on_close(self, conn: Connection) -> None:
        for endpoint in self.cells.values():
            if endpoint.subscriber is conn:
                endpoint.subscriber = None
                endpoint.subscribed.clear()
                endpoint.replies.put(_LOST)
                log.warning("cell %d: subscriber disconnected", endpoint.cell_id)

    def _on_message(self, conn: Connection, msg: E2Message) -> None:
        try:
            if msg.msg_type is MsgType.SUBSCRIBE:
                self._subscribe(conn, msg)
            elif msg.msg_type is MsgType.CONTROL:
                self._control(conn, msg)
            else:
                raise MalformedBody(f"unexpected {msg.msg_type.name} from xApp")
        except (E2Error, UnknownCell, DuplicateSubscription) as exc:
            conn.send_error(msg.cell_id, exc.code, str(exc))

    def _endpoint(self, cell_id: int) -> CellEndpoint:
        endpoint = self.cells.get(cell_id)
        if endpoint is None:
            raise UnknownCell(f"cell {cell_id} is not served here")
        return endpoint

    def _subscribe(self, conn: Connection, msg: E2Message) -> None:
        endpoint = self._endpoint(msg.cell_id)
        if endpoint.subscriber is not None:
            raise DuplicateSubscription(f"cell {msg.cell_id} already has a subscriber")
        window_ms = msg.payload.get("window_ms", endpoint.params.window_ms)
        if window_ms != endpoint.params.window_ms:
            raise MalformedBody(f"cell {msg.cell_id} reports every "
                                f"{endpoint.params.window_ms} ms, not {window_ms}")
        endpoint.subscriber = conn
        endpoint.window_ms = window_ms
        conn.send(MsgType.SUBSCRIBE_ACK, msg.cell_id,
                  {"window_ms": window_ms, "params": endpoint.params.to_dict()})
        endpoint.subscribed.set()
        log.info("cell %d: subscribed, W=%d ms", msg.cell_id, window_ms)

    def _control(self, conn: Connection, msg: E2Message) -> None:
        endpoint = self._endpoint(msg.cell_id)
        if endpoint.subscriber is not conn:
            raise UnknownCell(f"no subscription to cell {msg.cell_id} on this connection")
        if msg.payload.get("window_id") is not None:
            # reply to an Indication; the simulator applies it loop_delay_ms later
            endpoint.replies.put(msg.payload)
            return
        centroids = centroids_from_payload(msg.payload.get("centroids", []))
        size = endpoint.apply_control(centroids)
        conn.send(MsgType.CONTROL_ACK, msg.cell_id, {"window_id": None, "blocklist_size": size})


class GnbBridge:
    """Simulator controller that forwards windows to the subscribed xApp."""

    def __init__(self, endpoint: CellEndpoint, reply_timeout_s: float = 5.0):
        self.endpoint = endpoint
        self.reply_timeout_s = reply_timeout_s

    def on_window(self, kpm: WindowKpm) -> Optional[DetectionVerdict]:
        ep = self.endpoint
        conn = ep.subscriber
        if conn is None:
            return None
        try:
            conn.send(MsgType.INDICATION, ep.cell_id, kpm_to_payload(kpm))
        except ConnectionError:
            return None
        ep.indications_sent += 1
        while True:
            try:
                reply = ep.replies.get(timeout=self.reply_timeout_s)
            except queue.Empty:
                log.warning("cell %d: no Control for window %d", ep.cell_id, kpm.window_id)
                return None
            if reply is _LOST:
                return None
            if reply.get("window_id") != kpm.window_id:
                continue  # late answer to a window we already gave up on
            try:
                return verdict_from_payload(reply)
            except MalformedBody as exc:
                conn.send_error(ep.cell_id, exc.code, str(exc))
                return None

    def on_control_applied(self, window_id: int, blocklist_size: int) -> None:
        conn = self.endpoint.subscriber
        if conn is None:
            return
        log.info("cell %d: control for window %d applied, %d entries", self.endpoint.cell_id,
                 window_id, blocklist_size)
        try:
            conn.send(MsgType.CONTROL_ACK, self.endpoint.cell_id,
                      {"window_id": window_id, "blocklist_size": blocklist_size})
        except ConnectionError:
            pass


def simulate_cell(config: ScenarioConfig, endpoint: CellEndpoint, pacer=None,
                  reply_timeout_s: float = 5.0) -> EventTrace:
    """Run ``config`` with its control loop closed through ``endpoint``."""
    sim = Simulator(config, GnbBridge(endpoint, reply_timeout_s), pacer=pacer,
                    blocklist=endpoint.blocklist, lock=endpoint.lock)
    endpoint.simulator = sim
    return sim.run()
