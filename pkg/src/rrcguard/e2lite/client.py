"""xApp side of the E2-lite loop: subscribe, classify each Indication, reply."""

from __future__ import annotations

import logging
import queue
import socket
import threading
from typing import Dict, Iterable, List, Optional

from ..core import AlgorithmParams, Centroid, RrcGuardError, VerdictKind
from ..detector import StormDetector
from .codec import (
    E2Error,
    E2Message,
    MsgType,
    centroids_to_payload,
    kpm_from_payload,
    verdict_to_payload,
)
from .server import DuplicateSubscription, UnknownCell
from .transport import Connection

log = logging.getLogger(__name__)

_ERRORS = {cls.code: cls for cls in (UnknownCell, DuplicateSubscription)}


class RemoteError(RrcGuardError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def _raise_remote(payload: dict) -> None:
    code, text = payload.get("code", "Error"), payload.get("message", "")
    if code in _ERRORS:
        raise _ERRORS[code](text)
    raise RemoteError(code, text)


class XappClient:
    """Blocking client. Replies and Indications are demultiplexed into queues."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, timeout_s: float = 10.0,
                 heartbeat_s: float = 1.0, degraded_after_s: float = 3.0):
        self.address = (host, port)
        self.timeout_s = timeout_s
        self.heartbeat_s = heartbeat_s
        self.degraded_after_s = degraded_after_s
        self.conn: Optional[Connection] = None
        self.detectors: Dict[int, StormDetector] = {}
        self.verdicts: Dict[int, List[tuple]] = {}
        self.acks: List[dict] = []
        self._replies: "queue.Queue" = queue.Queue()
        self._indications: "queue.Queue" = queue.Queue()

    def connect(self) -> "XappClient":
        sock = socket.create_connection(self.address, timeout=self.timeout_s)
        sock.settimeout(None)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.conn = Connection(sock, "xapp", self._on_message, self._on_error, self._on_close,
                               self.heartbeat_s, self.degraded_after_s).start()
        return self

    def close(self) -> None:
        if self.conn is not None:
            self.conn.close()

    def __enter__(self):
        return self.connect()

    def __exit__(self, *exc):
        self.close()

    def _on_message(self, conn: Connection, msg: E2Message) -> None:
        if msg.msg_type is MsgType.INDICATION:
            self._indications.put(msg)
        elif msg.msg_type is MsgType.CONTROL_ACK and msg.payload.get("window_id") is not None:
            # acknowledgement of a verdict applied by the simulator
            self.acks.append(msg.payload)
        else:
            self._replies.put(msg)

    def _on_error(self, conn: Connection, exc: E2Error) -> None:
        log.warning("bad frame from gNB: %s", exc)

    def _on_close(self, conn: Connection) -> None:
        self._indications.put(None)
        self._replies.put(None)

    def _await(self, *types: MsgType) -> E2Message:
        try:
            msg = self._replies.get(timeout=self.timeout_s)
        except queue.Empty:
            raise TimeoutError(f"no {'/'.join(t.name for t in types)} within "
                               f"{self.timeout_s} s") from None
        if msg is None:
            raise ConnectionError("connection closed by gNB")
        if msg.msg_type is MsgType.ERROR:
            _raise_remote(msg.payload)
        if msg.msg_type not in types:
            raise RemoteError("Unexpected", f"got {msg.msg_type.name}")
        return msg

    def subscribe(self, cell_id: int, window_ms: Optional[int] = None,
                  params: Optional[AlgorithmParams] = None) -> dict:
        """Subscribe to a cell; the detector uses ``params`` or the cell's own."""
        body = {} if window_ms is None else {"window_ms": window_ms}
        self.conn.send(MsgType.SUBSCRIBE, cell_id, body)
        ack = self._await(MsgType.SUBSCRIBE_ACK).payload
        if params is None:
            params = AlgorithmParams.from_dict(ack["params"])
        self.detectors[cell_id] = StormDetector(params).reset()
        self.verdicts[cell_id] = []
        return ack

    def send_control(self, cell_id: int, centroids: Iterable[Centroid]) -> int:
        """Push centroids to the cell's block list; returns the acked list size."""
        self.conn.send(MsgType.CONTROL, cell_id,
                       {"window_id": None, "centroids": centroids_to_payload(list(centroids))})
        return self._await(MsgType.CONTROL_ACK).payload["blocklist_size"]

    def handle_indication(self, msg: E2Message) -> None:
        detector = self.detectors.get(msg.cell_id)
        if detector is None:
            log.warning("Indication for unsubscribed cell %d dropped", msg.cell_id)
            return
        kpm = kpm_from_payload(msg.payload)
        verdict = detector.update(kpm)
        self.verdicts[msg.cell_id].append((kpm.window_id, verdict.kind.value))
        if verdict.kind is VerdictKind.ATTACK_DETECTED:
            log.info("cell %d window %d: AttackDetected, %d centroid(s)", msg.cell_id,
                     kpm.window_id, len(verdict.malicious_centroids))
            log.info("cell %d window %d: Control sent", msg.cell_id, kpm.window_id)
        self.conn.send(MsgType.CONTROL, msg.cell_id, verdict_to_payload(kpm.window_id, verdict))

    def run(self, stop: Optional[threading.Event] = None, poll_s: float = 0.2) -> None:
        """Serve Indications until the gNB closes the connection or ``stop`` is set."""
        while stop is None or not stop.is_set():
            try:
                msg = self._indications.get(timeout=poll_s)
            except queue.Empty:
                continue
            if msg is None:
                return
            try:
                self.handle_indication(msg)
            except ConnectionError:
                return
