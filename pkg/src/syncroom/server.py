"""In-process session server: sequencing, fanout, resync, and the event log.

One server hosts many sessions.  Within a session every event passes through
a single sequencer: the server stamps each accepted message with a
contiguous global sequence number, appends it to the append-only log,
applies media events to the authoritative states through the handler tree,
and broadcasts the stamped envelope to every joined client (including the
sender — the echo is what confirms ordering).

The wall clock is injectable so harnesses can drive sessions on a virtual
timeline and get byte-identical logs for a given seed.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable
from urllib.parse import urlsplit

from . import handlers, media, protocol
from .handlers import HandlerTree
from .media import MediaState
from .protocol import (
    ControlEventMessage,
    EventMessage,
    MediaEventMessage,
    ParseError,
    canonical_json,
)

SERVER_SENDER = "server"

ROLE_PRESENTER = "presenter"
ROLE_AUDIENCE = "audience"
ROLES = (ROLE_PRESENTER, ROLE_AUDIENCE)

POLICY_PRESENTER_ONLY = "presenter-only"
POLICY_ALL = "all"

ENTRY_FIELD_ORDER = ("global-seq", "sender-id", "received-at")


class SessionError(Exception):
    pass


class UnknownSessionError(SessionError):
    pass


class DuplicateClientError(SessionError):
    pass


class NotJoinedError(SessionError):
    pass


class SubmissionDeniedError(SessionError):
    pass


class SeqGapError(SessionError):
    """Per-sender seq_id was not the next expected value; carries the expectation."""

    def __init__(self, expected: int, got: int):
        super().__init__(f"expected seq-id {expected}, got {got}; resync required")
        self.expected = expected
        self.got = got


class UnknownMediaError(SessionError):
    pass


class LogCorruptionError(Exception):
    """A persisted log failed to load; `line_number` is 1-based."""

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"corrupt log at line {line_number}: {reason}")
        self.line_number = line_number


@dataclass(frozen=True)
class SessionLogEntry:
    """Server-stamped envelope around an EventMessage; the unit of replay."""

    global_seq: int
    sender_id: str
    received_at: int
    message: EventMessage
    error: str | None = None


def encode_entry(entry: SessionLogEntry) -> bytes:
    body = protocol.serialize(entry.message).decode("utf-8")
    text = (f'{{"global-seq":{entry.global_seq},'
            f'"sender-id":{canonical_json(entry.sender_id)},'
            f'"received-at":{entry.received_at},'
            f'"message":{body}')
    if entry.error is not None:
        text += f',"error":{canonical_json(entry.error)}'
    return (text + "}").encode("utf-8")


def decode_entry(raw: bytes | str) -> SessionLogEntry:
    obj = protocol.parse_json(raw, "log entry")
    if not isinstance(obj, dict):
        raise ParseError("log entry must be a JSON object")
    for name in ENTRY_FIELD_ORDER + ("message",):
        if name not in obj:
            raise ParseError(f"missing required field {name!r} in log entry")
    extra = set(obj) - set(ENTRY_FIELD_ORDER) - {"message", "error"}
    if extra:
        raise ParseError(f"unexpected field {sorted(extra)[0]!r} in log entry")
    for name in ("global-seq", "received-at"):
        if not isinstance(obj[name], int) or isinstance(obj[name], bool) or obj[name] < 0:
            raise ParseError(f"field {name!r} must be a non-negative integer")
    if not isinstance(obj["sender-id"], str) or not obj["sender-id"]:
        raise ParseError("sender-id must be a non-empty string")
    error = obj.get("error")
    if error is not None and not isinstance(error, str):
        raise ParseError("error must be a string")
    entry = SessionLogEntry(
        global_seq=obj["global-seq"],
        sender_id=obj["sender-id"],
        received_at=obj["received-at"],
        message=protocol.message_from_obj(obj["message"]),
        error=error,
    )
    given = raw.encode("utf-8") if isinstance(raw, str) else raw
    if encode_entry(entry) != given:
        raise ParseError("non-canonical log entry encoding")
    return entry


@dataclass(frozen=True)
class MaterialDescriptor:
    media_id: str
    media_type: str
    source: str
    added_at: int

    def as_obj(self) -> dict:
        return {"media-id": self.media_id, "media-type": self.media_type,
                "source": self.source, "added-at": self.added_at}


@dataclass
class ClientConnection:
    client_id: str
    role: str
    next_seq: int = 0  # next expected per-sender seq_id
    inbox: list[SessionLogEntry] = field(default_factory=list)
    on_entry: Callable[[SessionLogEntry], None] | None = None

    def deliver(self, entry: SessionLogEntry) -> None:
        self.inbox.append(entry)
        if self.on_entry is not None:
            self.on_entry(entry)


@dataclass(frozen=True)
class JoinAck:
    """Everything a (late) joiner needs to initialize every block to live state."""

    session_id: str
    session_start_ms: int
    materials: list[MaterialDescriptor]
    states: dict[str, str]  # media_id -> serialized state string
    global_seq: int

    def encode(self) -> bytes:
        return canonical_json({
            "kind": "join-ack",
            "session-id": self.session_id,
            "session-start": self.session_start_ms,
            "materials": [m.as_obj() for m in self.materials],
            "states": dict(self.states),
            "global-seq": self.global_seq,
        }).encode("utf-8")


@dataclass
class SubmitResult:
    global_seq: int
    error: str | None = None  # dispatch error notice, returned to the sender only


@dataclass
class Session:
    session_id: str
    started_at_ms: int
    materials: dict[str, MaterialDescriptor] = field(default_factory=dict)
    states: dict[str, MediaState] = field(default_factory=dict)
    clients: dict[str, ClientConnection] = field(default_factory=dict)
    log: list[SessionLogEntry] = field(default_factory=list)
    next_global_seq: int = 0
    server_seq: int = 0  # per-sender counter for server-synthesized events
    last_received_at: int = 0


class SessionServer:
    """Sequencer, state keeper and broadcaster for any number of sessions."""

    def __init__(self, clock: Callable[[], float] | None = None,
                 role_policy: str = POLICY_PRESENTER_ONLY,
                 tree: HandlerTree | None = None):
        if role_policy not in (POLICY_PRESENTER_ONLY, POLICY_ALL):
            raise ValueError(f"unknown role policy {role_policy!r}")
        self._clock = clock or (lambda: time.time() * 1000.0)
        self._role_policy = role_policy
        self._tree = tree or handlers.build_tree()
        self._sessions: dict[str, Session] = {}
        self._lock = threading.RLock()

    # -- helpers -------------------------------------------------------------

    def _session(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSessionError(f"unknown session {session_id!r}") from None

    def _now_ms(self, sess: Session) -> int:
        now = max(0, int(self._clock() - sess.started_at_ms))
        # received_at is non-decreasing along the log even if the clock jumps.
        now = max(now, sess.last_received_at)
        sess.last_received_at = now
        return now

    def _append(self, sess: Session, sender_id: str, msg: EventMessage,
                received_at: int, error: str | None = None) -> SessionLogEntry:
        entry = SessionLogEntry(sess.next_global_seq, sender_id, received_at, msg, error)
        sess.next_global_seq += 1
        sess.log.append(entry)
        for client in sess.clients.values():
            client.deliver(entry)
        return entry

    def _server_control(self, sess: Session, control_type: str, description: str,
                        data: dict | None, received_at: int) -> SessionLogEntry:
        msg = ControlEventMessage(control_type, sess.server_seq, received_at,
                                  description, data)
        sess.server_seq += 1
        return self._append(sess, SERVER_SENDER, msg, received_at)

    # -- session lifecycle ---------------------------------------------------

    def create_session(self, presenter_id: str, session_id: str | None = None) -> str:
        with self._lock:
            sid = session_id or uuid.uuid4().hex[:12]
            if sid in self._sessions:
                raise SessionError(f"session {sid!r} already exists")
            self._sessions[sid] = Session(sid, int(self._clock()))
            return sid

    def session_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)

    def join(self, session_id: str, client_id: str, role: str) -> JoinAck:
        with self._lock:
            sess = self._session(session_id)
            if role not in ROLES:
                raise SessionError(f"unknown role {role!r}")
            if client_id == SERVER_SENDER:
                raise SessionError(f"client id {SERVER_SENDER!r} is reserved")
            if client_id in sess.clients:
                raise DuplicateClientError(f"client {client_id!r} already joined")
            ack = JoinAck(
                session_id=session_id,
                session_start_ms=sess.started_at_ms,
                materials=sorted(sess.materials.values(), key=lambda m: m.added_at),
                states={mid: media.serialize_state(s) for mid, s in sess.states.items()},
                global_seq=sess.next_global_seq,
            )
            sess.clients[client_id] = ClientConnection(client_id, role)
            received_at = self._now_ms(sess)
            self._server_control(sess, "join", f"{client_id} joined",
                                 {"client-id": client_id, "role": role,
                                  "session-id": session_id}, received_at)
            return ack

    def leave(self, session_id: str, client_id: str) -> None:
        with self._lock:
            sess = self._session(session_id)
            if client_id not in sess.clients:
                raise NotJoinedError(f"client {client_id!r} not joined")
            del sess.clients[client_id]
            received_at = self._now_ms(sess)
            self._server_control(sess, "leave", f"{client_id} left",
                                 {"client-id": client_id, "session-id": session_id},
                                 received_at)

    def set_on_entry(self, session_id: str, client_id: str,
                     callback: Callable[[SessionLogEntry], None] | None) -> None:
        with self._lock:
            sess = self._session(session_id)
            if client_id not in sess.clients:
                raise NotJoinedError(f"client {client_id!r} not joined")
            conn = sess.clients[client_id]
            conn.on_entry = callback
            if callback is not None:
                # Entries delivered between join and callback registration (the
                # client's own join event, at minimum) would otherwise be lost.
                for entry in conn.inbox:
                    callback(entry)

    # -- event intake --------------------------------------------------------

    def _check_navigation(self, sess: Session, state: MediaState,
                          msg: MediaEventMessage) -> str | None:
        if msg.media_type != "webpage" or msg.event_type != "navigate":
            return None
        url = (msg.data or {}).get("url")
        if not isinstance(url, str):
            return None  # apply_event will reject it
        declared = {m.source for m in sess.materials.values() if m.media_type == "webpage"}
        if url in declared:
            return None
        origin = urlsplit(state.entries.get("url", "")).netloc
        if origin and urlsplit(url).netloc == origin:
            return None
        return f"navigation to undeclared cross-origin url {url!r} denied"

    def _apply_control(self, sess: Session, msg: ControlEventMessage,
                       received_at: int) -> str | None:
        data = dict(msg.data or {})
        if msg.control_type == "add-material":
            for key in ("media-id", "media-type", "source"):
                if key not in data or not isinstance(data[key], str):
                    raise SubmissionDeniedError(f"add-material requires string data key {key!r}")
            media_id, media_type, source = data["media-id"], data["media-type"], data["source"]
            if media_type not in protocol.MEDIA_TYPES:
                raise SubmissionDeniedError(f"unknown media-type {media_type!r}")
            if media_id in sess.materials:
                raise SubmissionDeniedError(f"material {media_id!r} already exists")
            sess.materials[media_id] = MaterialDescriptor(media_id, media_type, source,
                                                          received_at)
            sess.states[media_id] = media.initial_state(media_id, media_type, source)
        elif msg.control_type == "resync":
            if "media-id" not in data or "media-state" not in data:
                raise SubmissionDeniedError("resync requires media-id and media-state data")
        elif msg.control_type in ("start-replay", "end-replay"):
            pass
        else:
            raise SubmissionDeniedError(
                f"control type {msg.control_type!r} is server-generated only")
        return None

    def submit(self, session_id: str, client_id: str, msg: EventMessage) -> SubmitResult:
        with self._lock:
            sess = self._session(session_id)
            client = sess.clients.get(client_id)
            if client is None:
                raise NotJoinedError(f"client {client_id!r} not joined")
            protocol.validate_message(msg)
            if msg.seq_id != client.next_seq:
                raise SeqGapError(client.next_seq, msg.seq_id)
            if (isinstance(msg, MediaEventMessage)
                    and self._role_policy == POLICY_PRESENTER_ONLY
                    and client.role != ROLE_PRESENTER):
                raise SubmissionDeniedError("only presenters may submit media events")
            received_at = self._now_ms(sess)

            error: str | None = None
            if isinstance(msg, MediaEventMessage):
                state = sess.states.get(msg.media_id)
                if state is None:
                    error = f"no media block {msg.media_id!r}"
                else:
                    error = self._check_navigation(sess, state, msg)
                    if error is None:
                        try:
                            result = handlers.dispatch(self._tree, sess.states, msg)
                            sess.states[msg.media_id] = result.new_state
                        except (handlers.HandlerTreeError,
                                media.MediaModelError) as exc:
                            error = str(exc)
            else:
                self._apply_control(sess, msg, received_at)

            client.next_seq += 1
            entry = self._append(sess, client_id, msg, received_at, error)
            return SubmitResult(entry.global_seq, error)

    # -- resync and snapshots ------------------------------------------------

    def resync(self, session_id: str, client_id: str, media_id: str) -> ControlEventMessage:
        with self._lock:
            sess = self._session(session_id)
            if client_id not in sess.clients:
                raise NotJoinedError(f"client {client_id!r} not joined")
            state = sess.states.get(media_id)
            if state is None:
                raise UnknownMediaError(f"no media block {media_id!r}")
            received_at = self._now_ms(sess)
            msg = ControlEventMessage(
                "resync", sess.server_seq, received_at, "Resync a media block",
                {"media-id": media_id, "media-state": media.serialize_state(state)})
            sess.server_seq += 1
            return msg

    def snapshot_states(self, session_id: str) -> dict[str, MediaState]:
        with self._lock:
            sess = self._session(session_id)
            return {mid: state.copy() for mid, state in sess.states.items()}

    def log_entries(self, session_id: str) -> list[SessionLogEntry]:
        with self._lock:
            return list(self._session(session_id).log)

    def materials(self, session_id: str) -> list[MaterialDescriptor]:
        with self._lock:
            sess = self._session(session_id)
            return sorted(sess.materials.values(), key=lambda m: m.added_at)

    # -- persistence ---------------------------------------------------------

    def persist_log(self, session_id: str, path: str | Path) -> Path:
        with self._lock:
            entries = self.log_entries(session_id)
        return write_log(entries, path)


def write_log(entries: list[SessionLogEntry], path: str | Path) -> Path:
    path = Path(path)
    with path.open("wb") as fh:
        for entry in entries:
            fh.write(encode_entry(entry))
            fh.write(b"\n")
    return path


def load_log(path: str | Path) -> list[SessionLogEntry]:
    """Load a persisted log; any corrupt line fails with its 1-based line number."""
    entries: list[SessionLogEntry] = []
    raw = Path(path).read_bytes()
    if raw and not raw.endswith(b"\n"):
        lines = raw.split(b"\n")
        raise LogCorruptionError(len(lines), "truncated final line (missing newline)")
    for number, line in enumerate(raw.split(b"\n")[:-1] if raw else [], start=1):
        try:
            entry = decode_entry(line)
        except ParseError as exc:
            raise LogCorruptionError(number, str(exc)) from exc
        expected = number - 1
        if entry.global_seq != expected:
            raise LogCorruptionError(number, f"global-seq {entry.global_seq}, "
                                             f"expected {expected}")
        if entries and entry.received_at < entries[-1].received_at:
            raise LogCorruptionError(number, "received-at went backwards")
        entries.append(entry)
    return entries
