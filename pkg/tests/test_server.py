import pytest

from syncroom import media, server
from syncroom.harness import ManualClock, fold_states
from syncroom.protocol import ControlEventMessage, MediaEventMessage
from syncroom.server import (
    DuplicateClientError,
    LogCorruptionError,
    NotJoinedError,
    SeqGapError,
    SessionServer,
    SubmissionDeniedError,
    UnknownMediaError,
    UnknownSessionError,
    decode_entry,
    encode_entry,
    load_log,
)


@pytest.fixture
def clock():
    return ManualClock()


@pytest.fixture
def srv(clock):
    return SessionServer(clock=clock)


def add_material(srv, sid, client, seq, media_id, media_type, source):
    return srv.submit(sid, client, ControlEventMessage(
        "add-material", seq, 0, "",
        {"media-id": media_id, "media-type": media_type, "source": source}))


def test_create_session_initial(srv):
    sid = srv.create_session("alice")
    assert srv.log_entries(sid) == []
    assert srv.snapshot_states(sid) == {}
    assert srv.create_session("alice") != sid


def test_unknown_session(srv):
    with pytest.raises(UnknownSessionError):
        srv.join("nope", "alice", "presenter")


def test_join_fresh_session(srv):
    sid = srv.create_session("alice")
    ack = srv.join(sid, "alice", "presenter")
    assert ack.materials == [] and ack.states == {} and ack.global_seq == 0
    with pytest.raises(DuplicateClientError):
        srv.join(sid, "alice", "audience")


def test_submit_orders_and_echoes(srv, clock):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    srv.join(sid, "bob", "audience")
    add_material(srv, sid, "alice", 0, "v", "video", "t.mp4")
    clock.advance_to(1000)
    r = srv.submit(sid, "alice", MediaEventMessage("video", "v", "play", 1, 1000))
    assert r.error is None
    entries = srv.log_entries(sid)
    seqs = [e.global_seq for e in entries]
    assert seqs == list(range(len(entries)))
    # everyone received the identical sequence, sender included
    states = srv.snapshot_states(sid)
    assert states["v"].entries["playing"] is True


def test_seq_gap_rejected(srv):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    add_material(srv, sid, "alice", 0, "v", "video", "t.mp4")
    with pytest.raises(SeqGapError) as exc:
        srv.submit(sid, "alice", MediaEventMessage("video", "v", "play", 5, 0))
    assert exc.value.expected == 1
    # nothing was logged for the rejected message
    assert all(e.message.seq_id != 5 for e in srv.log_entries(sid))


def test_audience_cannot_submit_media_events(srv):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    srv.join(sid, "bob", "audience")
    add_material(srv, sid, "alice", 0, "v", "video", "t.mp4")
    with pytest.raises(SubmissionDeniedError):
        srv.submit(sid, "bob", MediaEventMessage("video", "v", "play", 0, 0))
    all_srv = SessionServer(clock=ManualClock(), role_policy=server.POLICY_ALL)
    sid2 = all_srv.create_session("a")
    all_srv.join(sid2, "a", "presenter")
    all_srv.join(sid2, "b", "audience")
    add_material(all_srv, sid2, "a", 0, "v", "video", "t.mp4")
    assert all_srv.submit(sid2, "b", MediaEventMessage("video", "v", "play", 0, 0)).error is None


def test_dispatch_error_logged_with_mark(srv):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    r = srv.submit(sid, "alice", MediaEventMessage("video", "ghost", "play", 0, 0))
    assert r.error is not None
    entry = srv.log_entries(sid)[-1]
    assert entry.error is not None
    assert srv.snapshot_states(sid) == {}


def test_navigation_policy(srv):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    add_material(srv, sid, "alice", 0, "w", "webpage", "https://example.org/start")
    ok = srv.submit(sid, "alice", MediaEventMessage(
        "webpage", "w", "navigate", 1, 0, "", {"url": "https://example.org/deeper"}))
    assert ok.error is None  # same origin
    denied = srv.submit(sid, "alice", MediaEventMessage(
        "webpage", "w", "navigate", 2, 0, "", {"url": "https://evil.example.com/x"}))
    assert denied.error is not None
    assert srv.snapshot_states(sid)["w"].entries["url"] == "https://example.org/deeper"


def test_late_join_snapshot_equals_fold(srv, clock):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    add_material(srv, sid, "alice", 0, "v", "video", "t.mp4")
    for i in range(50):
        clock.advance_to(100 * i)
        srv.submit(sid, "alice", MediaEventMessage(
            "video", "v", "seek", i + 1, 100 * i, "", {"current_time": float(i)}))
    ack = srv.join(sid, "late", "audience")
    oracle = fold_states(srv.log_entries(sid))
    assert ack.states == {mid: media.serialize_state(s) for mid, s in oracle.items()}


def test_resync(srv, clock):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    add_material(srv, sid, "alice", 0, "v", "video", "t.mp4")
    msg = srv.resync(sid, "alice", "v")
    assert msg.control_type == "resync"
    assert msg.data["media-id"] == "v"
    state = media.deserialize_state(msg.data["media-state"])
    assert state.entries["current_time"] == 0
    with pytest.raises(UnknownMediaError):
        srv.resync(sid, "alice", "ghost")
    with pytest.raises(NotJoinedError):
        srv.resync(sid, "stranger", "v")


def test_add_material_visible_to_next_joiner(srv):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    add_material(srv, sid, "alice", 0, "img", "image", "x.png")
    ack = srv.join(sid, "bob", "audience")
    assert [m.media_id for m in ack.materials] == ["img"]
    assert "img" in ack.states


def test_entry_round_trip(srv, clock):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    add_material(srv, sid, "alice", 0, "v", "video", "t.mp4")
    for entry in srv.log_entries(sid):
        assert decode_entry(encode_entry(entry)) == entry


def test_persist_and_load(tmp_path, srv, clock):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    add_material(srv, sid, "alice", 0, "v", "video", "t.mp4")
    clock.advance_to(500)
    srv.submit(sid, "alice", MediaEventMessage("video", "v", "play", 1, 500))
    path = srv.persist_log(sid, tmp_path / "session.log")
    entries = load_log(path)
    assert entries == srv.log_entries(sid)
    # file size is the sum of line lengths plus newlines
    total = sum(len(encode_entry(e)) + 1 for e in entries)
    assert path.stat().st_size == total


def test_load_log_corruption_line_number(tmp_path, srv, clock):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    add_material(srv, sid, "alice", 0, "v", "video", "t.mp4")
    clock.advance_to(100)
    srv.submit(sid, "alice", MediaEventMessage("video", "v", "play", 1, 100))
    path = srv.persist_log(sid, tmp_path / "session.log")
    lines = path.read_bytes().split(b"\n")
    lines[1] = lines[1][:10] + b"X" + lines[1][11:]
    (tmp_path / "bad.log").write_bytes(b"\n".join(lines))
    with pytest.raises(LogCorruptionError) as exc:
        load_log(tmp_path / "bad.log")
    assert exc.value.line_number == 2
    # truncated final line
    (tmp_path / "trunc.log").write_bytes(path.read_bytes()[:-5])
    with pytest.raises(LogCorruptionError) as exc:
        load_log(tmp_path / "trunc.log")
    assert exc.value.line_number == len(lines) - 1


def test_received_at_non_decreasing(srv, clock):
    sid = srv.create_session("alice")
    srv.join(sid, "alice", "presenter")
    add_material(srv, sid, "alice", 0, "v", "video", "t.mp4")
    clock.advance_to(2000)
    srv.submit(sid, "alice", MediaEventMessage("video", "v", "play", 1, 2000))
    clock.now_ms = 500  # clock jumps backwards
    srv.submit(sid, "alice", MediaEventMessage("video", "v", "pause", 2, 2500))
    received = [e.received_at for e in srv.log_entries(sid)]
    assert received == sorted(received)
