"""Per-media-type state snapshots and the event taxonomy.

A media block (video, image, PDF, webpage, whiteboard) carries a small
key-value state.  User actions arrive as media event messages; `apply_event`
is the single source of truth for how an event transforms a state.  It is a
pure function: the input state is never mutated, and all numeric results are
quantized to the wire resolution so that state strings round-trip exactly
and independently computed folds compare byte-identical.

Events are captured in one of three modes:
- object-based: the action targets a UI element (play button, page control);
- proportion-based: positions normalized to the media block's box, in [0,1];
- value-based: a scalar change such as a wheel delta.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .protocol import (
    MEDIA_TYPES,
    MediaEventMessage,
    ParseError,
    canonical_json,
    parse_json,
    quantize,
)

OBJECT_BASED = "object-based"
PROPORTION_BASED = "proportion-based"
VALUE_BASED = "value-based"

ZOOM_MIN, ZOOM_MAX = 0.05, 50.0
RATE_MIN, RATE_MAX = 0.0625, 16.0
DEFAULT_STROKE_COLOR = "#000000"
DEFAULT_STROKE_WIDTH = 0.004


class MediaModelError(Exception):
    pass


class UnknownEventError(MediaModelError):
    """(media_type, event_type) is not in the taxonomy."""


class EventRejected(MediaModelError):
    """The event cannot be applied; the caller keeps the old state."""


@dataclass(frozen=True)
class EventTaxonomyEntry:
    media_type: str
    event_type: str
    capture_mode: str
    required_data_keys: tuple[str, ...] = ()
    optional_data_keys: tuple[str, ...] = ()


_STROKE_KEYS = ("stroke_id", "points")
_STROKE_OPT = ("color", "width")

_TAXONOMY = (
    EventTaxonomyEntry("video", "play", OBJECT_BASED),
    EventTaxonomyEntry("video", "pause", OBJECT_BASED),
    EventTaxonomyEntry("video", "seek", OBJECT_BASED, ("current_time",)),
    EventTaxonomyEntry("video", "set-volume", OBJECT_BASED, ("volume",)),
    EventTaxonomyEntry("video", "toggle-mute", OBJECT_BASED),
    EventTaxonomyEntry("video", "set-rate", OBJECT_BASED, ("rate",)),
    EventTaxonomyEntry("video", "draw", PROPORTION_BASED, _STROKE_KEYS, _STROKE_OPT),
    EventTaxonomyEntry("image", "mouse-scroll", VALUE_BASED, ("delta",)),
    EventTaxonomyEntry("image", "move", PROPORTION_BASED, ("center_x", "center_y")),
    EventTaxonomyEntry("image", "draw", PROPORTION_BASED, _STROKE_KEYS, _STROKE_OPT),
    EventTaxonomyEntry("pdf", "page-next", OBJECT_BASED),
    EventTaxonomyEntry("pdf", "page-prev", OBJECT_BASED),
    EventTaxonomyEntry("pdf", "scroll", VALUE_BASED, ("scroll",)),
    EventTaxonomyEntry("pdf", "comment", OBJECT_BASED, ("page", "text")),
    EventTaxonomyEntry("webpage", "navigate", OBJECT_BASED, ("url",)),
    EventTaxonomyEntry("webpage", "scroll", VALUE_BASED, ("scroll",)),
    EventTaxonomyEntry("webpage", "highlight", OBJECT_BASED, ("selector",), ("note",)),
    EventTaxonomyEntry("whiteboard", "draw", PROPORTION_BASED, _STROKE_KEYS, _STROKE_OPT),
    EventTaxonomyEntry("whiteboard", "erase", OBJECT_BASED, ("stroke_id",)),
)

_BY_KEY = {(e.media_type, e.event_type): e for e in _TAXONOMY}

REQUIRED_STATE_KEYS = {
    "video": ("source", "current_time", "playing", "muted", "volume", "playback_rate", "annotations"),
    "image": ("source", "zoom", "center_x", "center_y", "annotations"),
    "pdf": ("source", "page", "scroll", "annotations"),
    "webpage": ("url", "scroll", "highlights"),
    "whiteboard": ("strokes",),
}


def taxonomy() -> list[EventTaxonomyEntry]:
    return list(_TAXONOMY)


def taxonomy_entry(media_type: str, event_type: str) -> EventTaxonomyEntry:
    try:
        return _BY_KEY[(media_type, event_type)]
    except KeyError:
        raise UnknownEventError(f"no taxonomy entry for ({media_type}, {event_type})") from None


@dataclass(frozen=True)
class Stroke:
    """One free-drawing stroke: proportional points with a pen color and width."""

    stroke_id: str
    points: tuple[float, ...]  # flat x0,y0,x1,y1,... in [0,1]
    color: str = DEFAULT_STROKE_COLOR
    width: float = DEFAULT_STROKE_WIDTH

    def as_entry(self) -> dict:
        return {
            "stroke_id": self.stroke_id,
            "points": list(self.points),
            "color": self.color,
            "width": self.width,
        }


@dataclass(frozen=True)
class Highlight:
    """A highlighted element or text range on a webpage block."""

    selector: str
    note: str = ""

    def as_entry(self) -> dict:
        entry = {"selector": self.selector}
        if self.note:
            entry["note"] = self.note
        return entry


@dataclass
class MediaState:
    """Snapshot of one media block, used for resync and replay verification."""

    media_id: str
    media_type: str
    entries: dict

    def copy(self) -> "MediaState":
        return MediaState(self.media_id, self.media_type, copy.deepcopy(self.entries))


def initial_state(media_id: str, media_type: str, source: str) -> MediaState:
    if media_type == "video":
        entries = {"source": source, "current_time": 0.0, "playing": False, "muted": False,
                   "volume": 1.0, "playback_rate": 1.0, "annotations": []}
    elif media_type == "image":
        entries = {"source": source, "zoom": 1.0, "center_x": 0.5, "center_y": 0.5,
                   "annotations": []}
    elif media_type == "pdf":
        entries = {"source": source, "page": 1, "scroll": 0.0, "annotations": []}
    elif media_type == "webpage":
        entries = {"url": source, "scroll": 0.0, "highlights": []}
    elif media_type == "whiteboard":
        entries = {"strokes": []}
    else:
        raise MediaModelError(f"unknown media type {media_type!r}")
    return MediaState(media_id, media_type, entries)


def _clamp(value: float, lo: float, hi: float) -> float:
    return quantize(float(min(hi, max(lo, value))))


def _number(data: dict, key: str) -> float:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise EventRejected(f"data key {key!r} must be a number")
    return float(value)


def _check_data_keys(entry: EventTaxonomyEntry, data: dict) -> None:
    for key in entry.required_data_keys:
        if key not in data:
            raise EventRejected(f"missing data key {key!r} for {entry.event_type}")
    allowed = set(entry.required_data_keys) | set(entry.optional_data_keys)
    for key in data:
        if key not in allowed:
            raise EventRejected(f"data key {key!r} not permitted for "
                                f"({entry.media_type}, {entry.event_type})")


def _stroke_from_data(data: dict) -> Stroke:
    stroke_id = data["stroke_id"]
    if not isinstance(stroke_id, str) or not stroke_id:
        raise EventRejected("stroke_id must be a non-empty string")
    raw = data["points"]
    if not isinstance(raw, list) or not raw or len(raw) % 2:
        raise EventRejected("points must be a non-empty flat list of x,y pairs")
    for p in raw:
        if isinstance(p, bool) or not isinstance(p, (int, float)):
            raise EventRejected("points must contain only numbers")
    points = tuple(_clamp(p, 0.0, 1.0) for p in raw)
    color = data.get("color", DEFAULT_STROKE_COLOR)
    if not isinstance(color, str) or not color:
        raise EventRejected("color must be a non-empty string")
    width = data.get("width", DEFAULT_STROKE_WIDTH)
    if isinstance(width, bool) or not isinstance(width, (int, float)) or width <= 0:
        raise EventRejected("width must be a positive number")
    return Stroke(stroke_id, points, color, quantize(float(width)))


def _apply_draw(entries: dict, key: str, data: dict) -> None:
    stroke = _stroke_from_data(data)
    for existing in entries[key]:
        if existing["stroke_id"] == stroke.stroke_id:
            # Continuation batch of a streamed stroke: extend, keep pen settings.
            existing["points"].extend(stroke.points)
            return
    entries[key].append(stroke.as_entry())


def apply_event(state: MediaState, msg: MediaEventMessage) -> MediaState:
    """Apply one media event, returning the successor state.

    Continuous controls (volume, zoom, page, coordinates) clamp out-of-range
    values the way physical UI controls do; wrong discrete identifiers
    (unknown stroke on erase, taxonomy mismatches) reject, leaving the
    caller's state untouched.
    """
    if msg.media_id != state.media_id:
        raise EventRejected(f"message targets {msg.media_id!r}, state is {state.media_id!r}")
    if msg.media_type != state.media_type:
        raise EventRejected(f"message media type {msg.media_type!r} does not match "
                            f"state type {state.media_type!r}")
    entry = taxonomy_entry(msg.media_type, msg.event_type)
    data = dict(msg.data or {})
    _check_data_keys(entry, data)

    new = state.copy()
    e = new.entries
    mt, et = msg.media_type, msg.event_type

    if mt == "video":
        if et == "play":
            e["playing"] = True
        elif et == "pause":
            e["playing"] = False
        elif et == "seek":
            e["current_time"] = quantize(max(0.0, _number(data, "current_time")))
        elif et == "set-volume":
            e["volume"] = _clamp(_number(data, "volume"), 0.0, 1.0)
        elif et == "toggle-mute":
            e["muted"] = not e["muted"]
        elif et == "set-rate":
            e["playback_rate"] = _clamp(_number(data, "rate"), RATE_MIN, RATE_MAX)
        elif et == "draw":
            _apply_draw(e, "annotations", data)
    elif mt == "image":
        if et == "mouse-scroll":
            e["zoom"] = _clamp(e["zoom"] * 2 ** (_number(data, "delta") / 10), ZOOM_MIN, ZOOM_MAX)
        elif et == "move":
            e["center_x"] = _clamp(_number(data, "center_x"), 0.0, 1.0)
            e["center_y"] = _clamp(_number(data, "center_y"), 0.0, 1.0)
        elif et == "draw":
            _apply_draw(e, "annotations", data)
    elif mt == "pdf":
        if et == "page-next":
            e["page"] = e["page"] + 1
        elif et == "page-prev":
            e["page"] = max(1, e["page"] - 1)
        elif et == "scroll":
            e["scroll"] = _clamp(_number(data, "scroll"), 0.0, 1.0)
        elif et == "comment":
            page = _number(data, "page")
            text = data["text"]
            if not isinstance(text, str):
                raise EventRejected("comment text must be a string")
            e["annotations"].append({"page": max(1, int(page)), "text": text})
    elif mt == "webpage":
        if et == "navigate":
            url = data["url"]
            if not isinstance(url, str) or not url:
                raise EventRejected("url must be a non-empty string")
            e["url"] = url
            e["scroll"] = 0.0
        elif et == "scroll":
            e["scroll"] = _clamp(_number(data, "scroll"), 0.0, 1.0)
        elif et == "highlight":
            selector = data["selector"]
            if not isinstance(selector, str) or not selector:
                raise EventRejected("selector must be a non-empty string")
            note = data.get("note", "")
            if not isinstance(note, str):
                raise EventRejected("note must be a string")
            e["highlights"].append(Highlight(selector, note).as_entry())
    elif mt == "whiteboard":
        if et == "draw":
            _apply_draw(e, "strokes", data)
        elif et == "erase":
            stroke_id = data["stroke_id"]
            remaining = [s for s in e["strokes"] if s["stroke_id"] != stroke_id]
            if len(remaining) == len(e["strokes"]):
                raise EventRejected(f"unknown stroke_id {stroke_id!r}")
            e["strokes"] = remaining
    return new


def serialize_state(state: MediaState) -> str:
    """Canonical state string: one JSON object, keys sorted lexicographically."""
    return canonical_json({
        "media-id": state.media_id,
        "media-type": state.media_type,
        "entries": state.entries,
    })


_RANGE_CHECKS = {
    "video": (("volume", 0.0, 1.0), ("playback_rate", 1e-9, None), ("current_time", 0.0, None)),
    "image": (("zoom", 1e-9, None), ("center_x", 0.0, 1.0), ("center_y", 0.0, 1.0)),
    "pdf": (("page", 1, None), ("scroll", 0.0, 1.0)),
    "webpage": (("scroll", 0.0, 1.0),),
    "whiteboard": (),
}


def _validate_entries(media_type: str, entries: dict) -> None:
    required = REQUIRED_STATE_KEYS[media_type]
    if set(entries) != set(required):
        missing = set(required) - set(entries)
        extra = set(entries) - set(required)
        raise ParseError(f"state keys mismatch for {media_type}: "
                         f"missing {sorted(missing)}, unexpected {sorted(extra)}")
    for key, lo, hi in _RANGE_CHECKS[media_type]:
        value = entries[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"{key} must be a number")
        if value < lo or (hi is not None and value > hi):
            raise ParseError(f"{key} out of range")
    if media_type == "pdf" and not isinstance(entries["page"], int):
        raise ParseError("page must be an integer")
    for key in ("annotations", "highlights", "strokes"):
        if key in entries and not isinstance(entries[key], list):
            raise ParseError(f"{key} must be an array")


def deserialize_state(text: str) -> MediaState:
    """Inverse of serialize_state; rejects non-canonical or invariant-violating strings."""
    obj = parse_json(text, "state")
    if not isinstance(obj, dict):
        raise ParseError("state must be a JSON object")
    for key in ("media-id", "media-type", "entries"):
        if key not in obj:
            raise ParseError(f"missing required field {key!r} in state")
    media_type = obj["media-type"]
    if media_type not in MEDIA_TYPES:
        raise ParseError(f"unknown media-type {media_type!r} in state")
    if not isinstance(obj["media-id"], str) or not obj["media-id"]:
        raise ParseError("media-id must be a non-empty string")
    if not isinstance(obj["entries"], dict):
        raise ParseError("entries must be a map")
    if set(obj) != {"media-id", "media-type", "entries"}:
        raise ParseError("unexpected field in state")
    state = MediaState(obj["media-id"], media_type, obj["entries"])
    _validate_entries(media_type, state.entries)
    if serialize_state(state) != text:
        raise ParseError("non-canonical state encoding")
    return state
