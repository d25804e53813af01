"""Framed TCP protocol carrying window KPMs to the xApp and block-list controls back."""

from .client import RemoteError, XappClient
from .codec import (
    MAX_FRAME,
    VERSION,
    E2Error,
    E2Message,
    FrameReader,
    FrameTooLarge,
    MalformedBody,
    MsgType,
    UnknownType,
    UnsupportedVersion,
    decode,
    encode,
)
from .server import CellEndpoint, DuplicateSubscription, E2Server, GnbBridge, UnknownCell, simulate_cell

__all__ = [
    "CellEndpoint", "DuplicateSubscription", "E2Error", "E2Message", "E2Server",
    "FrameReader", "FrameTooLarge", "GnbBridge", "MAX_FRAME", "MalformedBody", "MsgType",
    "RemoteError", "UnknownCell", "UnknownType", "UnsupportedVersion", "VERSION",
    "XappClient", "decode", "encode", "simulate_cell",
]
