"""Wire protocol for collaboration event messages.

Two kinds of message cross the wire: media events (an action on one media
block, e.g. pausing a video) and control events (session-level actions such
as resync or adding material).  Both are encoded as canonical UTF-8 JSON:
fixed top-level key order, no insignificant whitespace, numbers with at most
six fractional digits and trailing zeros trimmed.  Equal messages always
produce identical bytes, so byte accounting and log diffing are meaningful.

Framing is transport-level: one message per socket text frame, one message
per line in log files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

MEDIA_TYPES = ("video", "image", "pdf", "webpage", "whiteboard")
CONTROL_TYPES = ("resync", "join", "leave", "add-material", "start-replay", "end-replay")

# Scalar values allowed inside a message's data map (or arrays thereof).
Scalar = bool | int | float | str
DataMap = dict[str, "Scalar | list[Scalar]"]

MEDIA_FIELD_ORDER = ("media-type", "media-id", "event-type", "seq-id", "timestamp", "description")
CONTROL_FIELD_ORDER = ("control-type", "seq-id", "timestamp", "description")


class ProtocolError(Exception):
    """Base class for wire-format failures."""


class EncodeError(ProtocolError):
    """Message cannot be encoded: bad enumerant, malformed data map, etc."""


class ParseError(ProtocolError):
    """Byte sequence is not a canonical encoding of a valid message."""


def quantize(value):
    """Round floats (including inside lists) to the wire resolution (1e-6).

    Integers, strings and booleans pass through unchanged.  Everything that
    enters a message or a media state goes through this, which is what makes
    serialization lossless: any stored float is exactly representable in the
    six-fractional-digit wire form.
    """
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise EncodeError(f"non-finite number {value!r}")
        q = round(value, 6)
        return 0.0 if q == 0 else q
    if isinstance(value, list):
        return [quantize(v) for v in value]
    if isinstance(value, dict):
        return {k: quantize(v) for k, v in value.items()}
    return value


def format_number(value) -> str:
    """Canonical decimal text for a number: ≤6 fractional digits, no trailing zeros."""
    if isinstance(value, bool):
        raise EncodeError("bool is not a number")
    if isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        raise EncodeError(f"non-finite number {value!r}")
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    if text in ("", "-0"):
        text = "0"
    return text


def _encode_value(value, parts: list[str]) -> None:
    if isinstance(value, bool):
        parts.append("true" if value else "false")
    elif isinstance(value, (int, float)):
        parts.append(format_number(value))
    elif isinstance(value, str):
        parts.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, list):
        parts.append("[")
        for i, item in enumerate(value):
            if i:
                parts.append(",")
            _encode_value(item, parts)
        parts.append("]")
    elif isinstance(value, dict):
        parts.append("{")
        for i, key in enumerate(sorted(value)):
            if i:
                parts.append(",")
            parts.append(json.dumps(key, ensure_ascii=False))
            parts.append(":")
            _encode_value(value[key], parts)
        parts.append("}")
    else:
        raise EncodeError(f"unencodable value of type {type(value).__name__}")


def canonical_json(value) -> str:
    """Canonical JSON text for a plain value tree; dict keys sorted lexicographically."""
    parts: list[str] = []
    _encode_value(value, parts)
    return "".join(parts)


@dataclass(frozen=True)
class MediaEventMessage:
    """An action on one media block (Table-style fields, hyphenated on the wire)."""

    media_type: str
    media_id: str
    event_type: str
    seq_id: int
    timestamp: int
    description: str = ""
    data: DataMap | None = None

    kind = "media-event"

    def __post_init__(self):
        if self.data is not None:
            object.__setattr__(self, "data", quantize(dict(self.data)))


@dataclass(frozen=True)
class ControlEventMessage:
    """A session-level action: resync, join/leave, add-material, replay markers."""

    control_type: str
    seq_id: int
    timestamp: int
    description: str = ""
    data: DataMap | None = None

    kind = "control-event"

    def __post_init__(self):
        if self.data is not None:
            object.__setattr__(self, "data", quantize(dict(self.data)))


EventMessage = MediaEventMessage | ControlEventMessage


def _check_common(msg: EventMessage) -> None:
    if not isinstance(msg.seq_id, int) or isinstance(msg.seq_id, bool) or msg.seq_id < 0:
        raise EncodeError("seq-id must be a non-negative integer")
    if not isinstance(msg.timestamp, int) or isinstance(msg.timestamp, bool) or msg.timestamp < 0:
        raise EncodeError("timestamp must be a non-negative integer")
    if not isinstance(msg.description, str):
        raise EncodeError("description must be a string")
    if msg.data is not None:
        _check_data(msg.data)


def _check_data(data: DataMap) -> None:
    if not isinstance(data, dict):
        raise EncodeError("data must be a map")
    for key, value in data.items():
        if not isinstance(key, str) or not key:
            raise EncodeError("data keys must be non-empty strings")
        if isinstance(value, list):
            for item in value:
                if not isinstance(item, (bool, int, float, str)):
                    raise EncodeError(f"data key {key!r} has a non-scalar array element")
        elif not isinstance(value, (bool, int, float, str)):
            raise EncodeError(f"data key {key!r} has a non-scalar value")


def validate_message(msg: EventMessage) -> None:
    """Raise EncodeError unless the message satisfies its wire-type invariants."""
    if isinstance(msg, MediaEventMessage):
        if msg.media_type not in MEDIA_TYPES:
            raise EncodeError(f"unknown media-type {msg.media_type!r}")
        if not isinstance(msg.media_id, str) or not msg.media_id:
            raise EncodeError("media-id must be a non-empty string")
        if not isinstance(msg.event_type, str) or not msg.event_type:
            raise EncodeError("event-type must be a non-empty string")
    elif isinstance(msg, ControlEventMessage):
        if msg.control_type not in CONTROL_TYPES:
            raise EncodeError(f"unknown control-type {msg.control_type!r}")
    else:
        raise EncodeError(f"not an event message: {type(msg).__name__}")
    _check_common(msg)


def serialize(msg: EventMessage) -> bytes:
    """Canonical wire encoding of a message.  Deterministic: equal messages, equal bytes."""
    validate_message(msg)
    parts = ['{"kind":', json.dumps(msg.kind)]
    if isinstance(msg, MediaEventMessage):
        ordered = zip(MEDIA_FIELD_ORDER,
                      (msg.media_type, msg.media_id, msg.event_type,
                       msg.seq_id, msg.timestamp, msg.description))
    else:
        ordered = zip(CONTROL_FIELD_ORDER,
                      (msg.control_type, msg.seq_id, msg.timestamp, msg.description))
    for name, value in ordered:
        parts.append(f',"{name}":')
        _encode_value(value, parts)
    if msg.data is not None:
        parts.append(',"data":')
        _encode_value(msg.data, parts)
    parts.append("}")
    return "".join(parts).encode("utf-8")


def wire_size(msg: EventMessage) -> int:
    """Bytes this message occupies on the wire (one frame, no transport overhead)."""
    return len(serialize(msg))


def _reject_constant(name):
    raise ParseError(f"non-standard JSON constant {name}")


def parse_json(raw: bytes | str, what: str = "message"):
    """Parse one canonical JSON document into a plain object tree."""
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"{what} is not valid UTF-8: {exc}") from exc
    else:
        text = raw
    if not text:
        raise ParseError("missing document")
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed {what}: {exc.msg} at position {exc.pos}") from exc


def _pop_field(obj: dict, name: str, types, where: str):
    if name not in obj:
        raise ParseError(f"missing required field {name!r} in {where}")
    value = obj.pop(name)
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ParseError(f"field {name!r} has wrong type in {where}")
    if not isinstance(value, types):
        raise ParseError(f"field {name!r} has wrong type in {where}")
    return value


def message_from_obj(obj) -> EventMessage:
    """Build an EventMessage from a parsed JSON object, rejecting anything malformed."""
    if not isinstance(obj, dict):
        raise ParseError("message must be a JSON object")
    obj = dict(obj)
    kind = _pop_field(obj, "kind", str, "message")
    if kind == "media-event":
        msg = MediaEventMessage(
            media_type=_pop_field(obj, "media-type", str, "media event"),
            media_id=_pop_field(obj, "media-id", str, "media event"),
            event_type=_pop_field(obj, "event-type", str, "media event"),
            seq_id=_pop_field(obj, "seq-id", int, "media event"),
            timestamp=_pop_field(obj, "timestamp", int, "media event"),
            description=_pop_field(obj, "description", str, "media event"),
            data=obj.pop("data", None),
        )
    elif kind == "control-event":
        msg = ControlEventMessage(
            control_type=_pop_field(obj, "control-type", str, "control event"),
            seq_id=_pop_field(obj, "seq-id", int, "control event"),
            timestamp=_pop_field(obj, "timestamp", int, "control event"),
            description=_pop_field(obj, "description", str, "control event"),
            data=obj.pop("data", None),
        )
    else:
        raise ParseError(f"unknown kind tag {kind!r}")
    if obj:
        raise ParseError(f"unexpected field {sorted(obj)[0]!r} in message")
    try:
        validate_message(msg)
    except EncodeError as exc:
        raise ParseError(str(exc)) from exc
    return msg


def deserialize(raw: bytes | str) -> EventMessage:
    """Inverse of serialize.  Only canonical encodings of valid messages are accepted."""
    obj = parse_json(raw, "message")
    msg = message_from_obj(obj)
    canonical = serialize(msg)
    given = raw.encode("utf-8") if isinstance(raw, str) else raw
    if canonical != given:
        raise ParseError("non-canonical encoding (key order, whitespace, or number format)")
    return msg
