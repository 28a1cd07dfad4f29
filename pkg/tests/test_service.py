import json

import pytest
from starlette.testclient import TestClient

from syncroom.harness import ManualClock
from syncroom.protocol import ControlEventMessage, MediaEventMessage, serialize
from syncroom.server import SessionServer
from syncroom.service import create_app


@pytest.fixture
def client():
    srv = SessionServer(clock=ManualClock())
    app = create_app(srv)
    with TestClient(app) as tc:
        yield tc


def _join_frame(session_id, client_id, role, seq=0):
    return serialize(ControlEventMessage(
        "join", seq, 0, "",
        {"session-id": session_id, "client-id": client_id, "role": role})).decode()


def _create(client, presenter="alice"):
    resp = client.post("/sessions", json={"presenter-id": presenter})
    assert resp.status_code == 200
    return resp.json()["session-id"]


def test_create_and_list_sessions(client):
    sid = _create(client)
    assert sid in client.get("/sessions").json()["sessions"]
    assert client.post("/sessions", json={}).status_code == 400


def test_join_handshake_and_submit(client):
    sid = _create(client)
    with client.websocket_connect("/ws") as ws:
        ws.send_text(_join_frame(sid, "alice", "presenter"))
        ack = json.loads(ws.receive_text())
        assert ack["kind"] == "join-ack"
        assert ack["session-id"] == sid
        assert ack["materials"] == []
        ws.send_text(serialize(ControlEventMessage(
            "add-material", 0, 0, "",
            {"media-id": "v", "media-type": "video", "source": "t.mp4"})).decode())
        frames = [json.loads(ws.receive_text()) for _ in range(3)]
        kinds = {f.get("kind") for f in frames}
        assert "submit-ack" in kinds
        # echoed envelopes: the server's own join event, then add-material
        envelopes = [f for f in frames if "global-seq" in f and "message" in f]
        assert [e["message"].get("control-type") for e in envelopes] == \
            ["join", "add-material"]
        ws.send_text(serialize(MediaEventMessage("video", "v", "play", 1, 0)).decode())
        frames = [json.loads(ws.receive_text()) for _ in range(2)]
        echo = next(f for f in frames if "message" in f)
        assert echo["sender-id"] == "alice"
        assert echo["message"]["event-type"] == "play"


def test_seq_gap_reported_with_expected(client):
    sid = _create(client)
    with client.websocket_connect("/ws") as ws:
        ws.send_text(_join_frame(sid, "alice", "presenter"))
        ws.receive_text()
        ws.send_text(serialize(ControlEventMessage(
            "add-material", 0, 0, "",
            {"media-id": "v", "media-type": "video", "source": "t.mp4"})).decode())
        for _ in range(3):
            ws.receive_text()
        ws.send_text(serialize(MediaEventMessage("video", "v", "play", 7, 0)).decode())
        err = json.loads(ws.receive_text())
        assert err["kind"] == "error"
        assert err["expected-seq"] == 1


def test_resync_request(client):
    sid = _create(client)
    with client.websocket_connect("/ws") as ws:
        ws.send_text(_join_frame(sid, "alice", "presenter"))
        ws.receive_text()
        ws.send_text(serialize(ControlEventMessage(
            "add-material", 0, 0, "",
            {"media-id": "v", "media-type": "video", "source": "t.mp4"})).decode())
        for _ in range(3):
            ws.receive_text()
        ws.send_text(serialize(ControlEventMessage(
            "resync", 1, 0, "", {"media-id": "v"})).decode())
        reply = json.loads(ws.receive_text())
        assert reply["control-type"] == "resync"
        assert reply["data"]["media-id"] == "v"
        assert "media-state" in reply["data"]


def test_bad_first_frame_rejected(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_text("not canonical")
        assert json.loads(ws.receive_text())["kind"] == "error"
    sid = _create(client)
    with client.websocket_connect("/ws") as ws:
        ws.send_text(serialize(MediaEventMessage("video", "v", "play", 0, 0)).decode())
        assert json.loads(ws.receive_text())["kind"] == "error"
    with client.websocket_connect("/ws") as ws:
        ws.send_text(_join_frame("no-such-session", "alice", "presenter"))
        assert json.loads(ws.receive_text())["kind"] == "error"


def test_log_endpoint_serves_ndjson(client):
    sid = _create(client)
    with client.websocket_connect("/ws") as ws:
        ws.send_text(_join_frame(sid, "alice", "presenter"))
        ws.receive_text()
        ws.send_text(serialize(ControlEventMessage(
            "add-material", 0, 0, "",
            {"media-id": "v", "media-type": "video", "source": "t.mp4"})).decode())
        for _ in range(3):
            ws.receive_text()
    resp = client.get(f"/sessions/{sid}/log")
    assert resp.status_code == 200
    lines = resp.text.rstrip("\n").split("\n")
    seqs = [json.loads(line)["global-seq"] for line in lines]
    assert seqs == list(range(len(lines)))
    assert client.get("/sessions/nope/log").status_code == 404


def test_two_clients_see_same_order(client):
    sid = _create(client)
    with client.websocket_connect("/ws") as a, client.websocket_connect("/ws") as b:
        a.send_text(_join_frame(sid, "alice", "presenter"))
        a.receive_text()
        b.send_text(_join_frame(sid, "bob", "audience"))
        b.receive_text()
        a.receive_text()  # bob's join event echoed to alice
        a.send_text(serialize(ControlEventMessage(
            "add-material", 0, 0, "",
            {"media-id": "v", "media-type": "video", "source": "t.mp4"})).decode())
        a.send_text(serialize(MediaEventMessage("video", "v", "play", 1, 0)).decode())
        a_envs, b_envs = [], []
        while len(a_envs) < 2:
            f = json.loads(a.receive_text())
            if "message" in f and f["message"].get("kind") == "media-event" or \
               f.get("message", {}).get("control-type") == "add-material":
                a_envs.append(f)
        while len(b_envs) < 2:
            f = json.loads(b.receive_text())
            if "message" in f and f["message"].get("kind") == "media-event" or \
               f.get("message", {}).get("control-type") == "add-material":
                b_envs.append(f)
        assert a_envs == b_envs
