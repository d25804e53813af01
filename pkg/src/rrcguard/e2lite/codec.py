"""Framing and payload mapping for the E2-lite protocol.

Frame layout (all integers big-endian)::

    offset size field
    0      4    length   number of bytes that follow this field (14 + body)
    4      1    version  protocol version, currently 1
    5      1    type     MsgType
    6      4    cell_id  u32
    10     8    seq      u64, strictly increasing per (cell_id, direction)
    18     n    body     canonical JSON (UTF-8, sorted keys, no whitespace)

Frames larger than 1 MiB in total are refused.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence

from ..core import (
    Centroid,
    DetectionVerdict,
    Fingerprint,
    ObservedMsg3,
    RrcGuardError,
    VerdictKind,
    WindowKpm,
)

VERSION = 1
LENGTH = struct.Struct(">I")
HEADER = struct.Struct(">BBIQ")
MAX_FRAME = 1 << 20


class E2Error(RrcGuardError):
    code = "Error"


class FrameTooLarge(E2Error):
    code = "FrameTooLarge"


class MalformedBody(E2Error):
    code = "MalformedBody"


class UnknownType(E2Error):
    code = "UnknownType"


class UnsupportedVersion(E2Error):
    code = "UnsupportedVersion"

    def __init__(self, version: int, cell_id: int, seq: int):
        super().__init__(f"unsupported protocol version {version}")
        self.version, self.cell_id, self.seq = version, cell_id, seq


class MsgType(enum.IntEnum):
    SUBSCRIBE = 1
    SUBSCRIBE_ACK = 2
    INDICATION = 3
    CONTROL = 4
    HEARTBEAT = 5
    ERROR = 6
    CONTROL_ACK = 7


@dataclass(frozen=True)
class E2Message:
    msg_type: MsgType
    cell_id: int
    seq: int
    payload: Dict[str, Any] = field(default_factory=dict)
    version: int = VERSION


def _canonical(payload: Dict[str, Any]) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False,
                      allow_nan=False).encode("utf-8")


def encode(msg: E2Message) -> bytes:
    if not 0 <= msg.cell_id < 2 ** 32:
        raise ValueError("cell_id must fit in u32")
    if not 0 <= msg.seq < 2 ** 64:
        raise ValueError("seq must fit in u64")
    body = _canonical(msg.payload)
    length = HEADER.size + len(body)
    if LENGTH.size + length > MAX_FRAME:
        raise FrameTooLarge(f"frame of {LENGTH.size + length} bytes exceeds {MAX_FRAME}")
    return LENGTH.pack(length) + HEADER.pack(msg.version, int(msg.msg_type), msg.cell_id,
                                             msg.seq) + body


def _decode_frame(frame: bytes) -> E2Message:
    """Decode one frame without its length prefix."""
    if len(frame) < HEADER.size:
        raise MalformedBody(f"frame of {len(frame)} bytes is shorter than the header")
    version, raw_type, cell_id, seq = HEADER.unpack_from(frame)
    if version != VERSION:
        raise UnsupportedVersion(version, cell_id, seq)
    try:
        msg_type = MsgType(raw_type)
    except ValueError:
        raise UnknownType(f"unknown message type {raw_type}") from None
    try:
        payload = json.loads(frame[HEADER.size:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedBody(f"body is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise MalformedBody("body must be a JSON object")
    return E2Message(msg_type, cell_id, seq, payload, version)


def decode(data: bytes) -> E2Message:
    """Decode exactly one complete frame."""
    if len(data) < LENGTH.size:
        raise MalformedBody("truncated length prefix")
    (length,) = LENGTH.unpack_from(data)
    if LENGTH.size + length > MAX_FRAME:
        raise FrameTooLarge(f"declared frame of {LENGTH.size + length} bytes")
    if len(data) != LENGTH.size + length:
        raise MalformedBody(f"expected {LENGTH.size + length} bytes, got {len(data)}")
    return _decode_frame(data[LENGTH.size:])


class FrameReader:
    """Incremental decoder for a byte stream.

    A bad frame is consumed before its error is raised, so the stream stays
    aligned and the caller can reply with an Error and keep reading.
    """

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> None:
        self._buf.extend(data)

    def __iter__(self) -> Iterator[E2Message]:
        while True:
            msg = self.next()
            if msg is None:
                return
            yield msg

    def next(self) -> Optional[E2Message]:
        if len(self._buf) < LENGTH.size:
            return None
        (length,) = LENGTH.unpack_from(self._buf)
        if LENGTH.size + length > MAX_FRAME:
            # cannot resynchronise on an absurd length; drop everything buffered
            self._buf.clear()
            raise FrameTooLarge(f"declared frame of {LENGTH.size + length} bytes")
        end = LENGTH.size + length
        if len(self._buf) < end:
            return None
        frame = bytes(self._buf[LENGTH.size:end])
        del self._buf[:end]
        return _decode_frame(frame)


# -- payload mapping ----------------------------------------------------------------

def kpm_to_payload(kpm: WindowKpm) -> Dict[str, Any]:
    return {
        "window_id": kpm.window_id,
        "window_start": kpm.window_start,
        "n3": kpm.n3,
        "n4": kpm.n4,
        "n5": kpm.n5,
        "fingerprints": [[obs.time, obs.fingerprint.ta, obs.fingerprint.rssi, obs.attempt_id]
                         for obs in kpm.fingerprints],
    }


def kpm_from_payload(payload: Dict[str, Any]) -> WindowKpm:
    try:
        fps = [ObservedMsg3(int(t), Fingerprint(int(ta), float(rssi)), int(aid))
               for t, ta, rssi, aid in payload["fingerprints"]]
        return WindowKpm(int(payload["window_id"]), int(payload["window_start"]),
                         int(payload["n3"]), int(payload["n4"]), int(payload["n5"]), fps)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedBody(f"bad indication payload: {exc}") from None


def centroids_to_payload(centroids: Sequence[Centroid]) -> List[List[float]]:
    return [[c.mu_ta, c.mu_rssi] for c in centroids]


def centroids_from_payload(items) -> List[Centroid]:
    try:
        return [Centroid(float(ta), float(rssi)) for ta, rssi in items]
    except (TypeError, ValueError) as exc:
        raise MalformedBody(f"bad centroid list: {exc}") from None


def verdict_to_payload(window_id: Optional[int], verdict: DetectionVerdict) -> Dict[str, Any]:
    return {
        "window_id": window_id,
        "verdict": verdict.kind.value,
        "reason": verdict.reason,
        "ratios": list(verdict.ratios),
        "centroids": centroids_to_payload(verdict.malicious_centroids),
    }


def verdict_from_payload(payload: Dict[str, Any]) -> DetectionVerdict:
    try:
        return DetectionVerdict(
            VerdictKind(payload["verdict"]),
            tuple(centroids_from_payload(payload.get("centroids", []))),
            tuple(float(r) for r in payload["ratios"]),
            payload.get("reason", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedBody(f"bad control payload: {exc}") from None
