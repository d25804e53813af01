import logging
import socket
import struct
import threading
import time

import pytest
from hypothesis import given, strategies as st

from rrcguard.core import Centroid, Fingerprint, ObservedMsg3, WindowKpm, default_params
from rrcguard.e2lite import (
    MAX_FRAME,
    DuplicateSubscription,
    E2Message,
    E2Server,
    FrameReader,
    FrameTooLarge,
    MalformedBody,
    MsgType,
    UnknownCell,
    UnknownType,
    UnsupportedVersion,
    XappClient,
    decode,
    encode,
    simulate_cell,
)
from rrcguard.e2lite.codec import (
    centroids_from_payload,
    centroids_to_payload,
    kpm_from_payload,
    kpm_to_payload,
)
from rrcguard.ransim import ScenarioConfig, build_preset, run_scenario

P = default_params()


def _kpm(n):
    fps = [ObservedMsg3(i, Fingerprint(31 + i % 3, -50.25 - i / 7), i) for i in range(n)]
    return WindowKpm(4, 400, n, n, 2, fps)


# -- codec -------------------------------------------------------------------------------

def test_indication_round_trip():
    kpm = _kpm(40)
    msg = E2Message(MsgType.INDICATION, 1, 9, kpm_to_payload(kpm))
    back = decode(encode(msg))
    assert back == msg
    assert kpm_from_payload(back.payload) == kpm


def test_header_layout():
    frame = encode(E2Message(MsgType.CONTROL, 7, 3, {}))
    assert frame[:4] == struct.pack(">I", len(frame) - 4)
    assert frame[4:18] == struct.pack(">BBIQ", 1, 4, 7, 3)
    assert frame[18:] == b"{}"


def test_truncated_frame_is_malformed():
    frame = encode(E2Message(MsgType.HEARTBEAT, 1, 1, {"t": 1}))
    for cut in (2, 10, len(frame) - 1):
        with pytest.raises(MalformedBody):
            decode(frame[:cut])


def test_control_centroid_order_preserved():
    cs = [Centroid(32, -41), Centroid(34, -44)]
    back = decode(encode(E2Message(MsgType.CONTROL, 1, 1, {"centroids": centroids_to_payload(cs)})))
    assert centroids_from_payload(back.payload["centroids"]) == cs


def test_oversized_frames_refused():
    big = E2Message(MsgType.INDICATION, 1, 1, {"x": "a" * MAX_FRAME})
    with pytest.raises(FrameTooLarge):
        encode(big)
    with pytest.raises(FrameTooLarge):
        decode(struct.pack(">I", MAX_FRAME) + b"\0" * 14)


def test_unknown_type_and_version():
    frame = bytearray(encode(E2Message(MsgType.HEARTBEAT, 1, 1)))
    frame[5] = 99
    with pytest.raises(UnknownType):
        decode(bytes(frame))
    frame[4] = 2
    with pytest.raises(UnsupportedVersion):
        decode(bytes(frame))


def test_non_object_body_is_malformed():
    body = b"[1,2]"
    frame = struct.pack(">I", 14 + len(body)) + struct.pack(">BBIQ", 1, 5, 1, 1) + body
    with pytest.raises(MalformedBody):
        decode(frame)


def test_frame_reader_reassembles_and_stays_aligned():
    good = encode(E2Message(MsgType.HEARTBEAT, 1, 1, {"a": 1}))
    bad = bytearray(encode(E2Message(MsgType.HEARTBEAT, 1, 2)))
    bad[5] = 77
    stream = good + bytes(bad) + good
    reader = FrameReader()
    out, errors = [], []
    for i in range(0, len(stream), 5):
        reader.feed(stream[i:i + 5])
        while True:
            try:
                msg = reader.next()
            except UnknownType as exc:
                errors.append(exc)
                continue
            if msg is None:
                break
            out.append(msg)
    assert len(out) == 2 and len(errors) == 1


@given(st.integers(0, 2 ** 16), st.floats(-140, 0, allow_nan=False))
def test_fingerprint_codec_round_trip(ta, rssi):
    kpm = WindowKpm(0, 0, 1, 0, 0, [ObservedMsg3(0, Fingerprint(ta, rssi), 1)])
    back = kpm_from_payload(decode(encode(E2Message(MsgType.INDICATION, 1, 1,
                                                    kpm_to_payload(kpm)))).payload)
    fp = back.fingerprints[0].fingerprint
    assert fp.ta == ta and abs(fp.rssi - rssi) <= 1e-9


# -- transport -----------------------------------------------------------------------------

@pytest.fixture
def server():
    srv = E2Server().start()
    yield srv
    srv.close()


def _serve(client):
    t = threading.Thread(target=client.run, daemon=True)
    t.start()
    return t


def _quiet(cell_id=1, duration_ms=1000):
    return ScenarioConfig(cell_id=cell_id, duration_ms=duration_ms)


def test_one_indication_per_window(server):
    ep = server.add_cell(1, P)
    with XappClient(*server.address) as client:
        client.subscribe(1, window_ms=100)
        t = _serve(client)
        simulate_cell(_quiet(), ep)
        assert ep.indications_sent == 10
        client.close()
        t.join(2)
    assert [w for w, _ in client.verdicts[1]] == list(range(10))


def test_no_subscription_no_indications(server):
    ep = server.add_cell(1, P)
    trace = simulate_cell(_quiet(), ep)
    assert ep.indications_sent == 0
    assert {w["reason"] for w in trace.windows} == {"no_reply"}


def test_cells_are_isolated(server):
    eps = {c: server.add_cell(c, P) for c in (1, 2)}
    clients = {}
    for c in (1, 2):
        clients[c] = XappClient(*server.address).connect()
        clients[c].subscribe(c)
        _serve(clients[c])
    threads = [threading.Thread(target=simulate_cell, args=(_quiet(c, 500 * c), eps[c]))
               for c in (1, 2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(10)
    assert list(clients[1].verdicts) == [1] and len(clients[1].verdicts[1]) == 5
    assert list(clients[2].verdicts) == [2] and len(clients[2].verdicts[2]) == 10
    for c in clients.values():
        c.close()


def test_send_control_and_reinforcement(server):
    ep = server.add_cell(1, P)
    with XappClient(*server.address) as client:
        client.subscribe(1)
        assert client.send_control(1, [Centroid(32, -41)]) == 1
        assert client.send_control(1, [Centroid(32, -41)]) == 1
        assert ep.blocklist.entries[0].match_count == 2


def test_control_to_unsubscribed_cell(server):
    server.add_cell(1, P)
    with XappClient(*server.address) as client:
        with pytest.raises(UnknownCell):
            client.send_control(1, [Centroid(32, -41)])
        with pytest.raises(UnknownCell):
            client.subscribe(5)


def test_duplicate_subscription(server):
    server.add_cell(1, P)
    with XappClient(*server.address) as a, XappClient(*server.address) as b:
        a.subscribe(1)
        with pytest.raises(DuplicateSubscription):
            b.subscribe(1)


def test_bad_version_gets_error_and_connection_survives(server):
    server.add_cell(1, P)
    with XappClient(*server.address) as client:
        frame = bytearray(encode(E2Message(MsgType.SUBSCRIBE, 1, 99, {})))
        frame[4] = 9
        client.conn.sock.sendall(bytes(frame))
        err = client._replies.get(timeout=5)
        assert err.msg_type is MsgType.ERROR and err.payload["code"] == "UnsupportedVersion"
        assert client.subscribe(1)["window_ms"] == 100


def test_transport_matches_in_process(server):
    config = build_preset("attack-2mue", 5)
    ep = server.add_cell(config.cell_id, config.params)
    with XappClient(*server.address) as client:
        client.subscribe(config.cell_id)
        _serve(client)
        remote = simulate_cell(config, ep)
    local = run_scenario(config)
    assert remote.verdicts() == local.verdicts()
    assert remote.final_blocklist() == local.final_blocklist()
    assert remote.to_jsonl() == local.to_jsonl()


class _DyingXapp(XappClient):
    """Stops answering (and hangs up) after a few indications."""

    def __init__(self, *a, die_after=8, **kw):
        super().__init__(*a, **kw)
        self.die_after = die_after
        self.seen = 0

    def handle_indication(self, msg):
        self.seen += 1
        if self.seen > self.die_after:
            self.close()
            return
        super().handle_indication(msg)


def test_xapp_loss_lets_the_pool_deplete(server):
    config = build_preset("attack-1mue", 7)
    ep = server.add_cell(config.cell_id, config.params)
    client = _DyingXapp(*server.address).connect()
    client.subscribe(config.cell_id)
    _serve(client)
    trace = simulate_cell(config, ep, reply_timeout_s=2.0)
    assert trace.of("rejected")
    assert trace.of("entry_expired")
    assert trace.of("alloc_failed")
    assert trace.first("alloc_failed")["t"] > trace.first("entry_expired")["t"]


def test_heartbeat_loss_marks_degraded(caplog):
    caplog.set_level(logging.WARNING)
    srv = E2Server(heartbeat_s=0.1, degraded_after_s=0.3).start()
    try:
        mute = socket.create_connection(srv.address)  # connects, never speaks
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline and "degraded" not in caplog.text:
            time.sleep(0.05)
        assert "degraded" in caplog.text
        mute.close()
    finally:
        srv.close()


def test_client_degraded_when_gnb_silent(caplog):
    caplog.set_level(logging.WARNING)
    listener = socket.create_server(("127.0.0.1", 0))
    client = XappClient(*listener.getsockname(), heartbeat_s=0.1, degraded_after_s=0.3).connect()
    peer, _ = listener.accept()
    try:
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline and not client.conn.degraded:
            time.sleep(0.05)
        assert client.conn.degraded and "degraded" in caplog.text
    finally:
        client.close()
        peer.close()
        listener.close()
