"""Socket plumbing shared by both ends: framed send/receive and liveness."""

from __future__ import annotations

import logging
import socket
import threading
import time
from typing import Callable, Dict, Optional

from .codec import E2Error, E2Message, FrameReader, MsgType, encode

log = logging.getLogger(__name__)

HEARTBEAT_S = 1.0
DEGRADED_AFTER_S = 3.0


class Connection:
    """One framed TCP connection.

    A reader thread decodes frames and hands them to ``on_message``; decode
    errors go to ``on_error`` with the stream still aligned. A heartbeat
    thread sends a Heartbeat every second and flags the link degraded after
    three seconds without any inbound frame.
    """

    def __init__(self, sock: socket.socket, name: str,
                 on_message: Callable[["Connection", E2Message], None],
                 on_error: Optional[Callable[["Connection", E2Error], None]] = None,
                 on_close: Optional[Callable[["Connection"], None]] = None,
                 heartbeat_s: float = HEARTBEAT_S, degraded_after_s: float = DEGRADED_AFTER_S):
        self.sock = sock
        self.name = name
        self.on_message = on_message
        self.on_error = on_error
        self.on_close = on_close
        self.heartbeat_s = heartbeat_s
        self.degraded_after_s = degraded_after_s
        self.degraded = False
        self.closed = threading.Event()
        self._send_lock = threading.Lock()
        self._seq: Dict[int, int] = {}
        self._last_rx = time.monotonic()
        self._threads = [
            threading.Thread(target=self._read_loop, name=f"{name}-rx", daemon=True),
            threading.Thread(target=self._heartbeat_loop, name=f"{name}-hb", daemon=True),
        ]

    def start(self) -> "Connection":
        for t in self._threads:
            t.start()
        return self

    def send(self, msg_type: MsgType, cell_id: int, payload: Optional[dict] = None) -> int:
        with self._send_lock:
            seq = self._seq.get(cell_id, 0) + 1
            self._seq[cell_id] = seq
            frame = encode(E2Message(msg_type, cell_id, seq, payload or {}))
            try:
                self.sock.sendall(frame)
            except OSError:
                self.close()
                raise ConnectionError(f"{self.name}: connection lost") from None
        return seq

    def send_error(self, cell_id: int, code: str, message: str) -> None:
        try:
            self.send(MsgType.ERROR, cell_id, {"code": code, "message": message})
        except ConnectionError:
            pass

    def close(self) -> None:
        if self.closed.is_set():
            return
        self.closed.set()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()
        if self.on_close is not None:
            self.on_close(self)

    def _read_loop(self) -> None:
        reader = FrameReader()
        try:
            while not self.closed.is_set():
                try:
                    data = self.sock.recv(65536)
                except OSError:
                    break
                if not data:
                    break
                self._last_rx = time.monotonic()
                if self.degraded:
                    self.degraded = False
                    log.info("%s: link recovered", self.name)
                reader.feed(data)
                while True:
                    try:
                        msg = reader.next()
                    except E2Error as exc:
                        if self.on_error is not None:
                            self.on_error(self, exc)
                        continue
                    if msg is None:
                        break
                    if msg.msg_type is not MsgType.HEARTBEAT:
                        self.on_message(self, msg)
        finally:
            self.close()

    def _heartbeat_loop(self) -> None:
        while not self.closed.wait(self.heartbeat_s):
            try:
                self.send(MsgType.HEARTBEAT, 0, {"t": round(time.time(), 3)})
            except ConnectionError:
                return
            silent = time.monotonic() - self._last_rx
            if silent > self.degraded_after_s and not self.degraded:
                self.degraded = True
                log.warning("%s: degraded, no frame from peer for %.1f s", self.name, silent)
