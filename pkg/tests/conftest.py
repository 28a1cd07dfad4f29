import random

from syncroom import media
from syncroom.harness import _fuzz_event
from syncroom.protocol import ControlEventMessage, MediaEventMessage

CONTROL_SAMPLES = [
    ("resync", {"media-id": "video-block", "media-state": "{}"}),
    ("join", {"client-id": "alice", "role": "presenter", "session-id": "s1"}),
    ("leave", {"client-id": "alice", "session-id": "s1"}),
    ("add-material", {"media-id": "img", "media-type": "image", "source": "x.png"}),
    ("start-replay", None),
    ("end-replay", None),
]

_BLOCKS = {
    "video": "video-block", "image": "image-block", "pdf": "pdf-block",
    "webpage": "webpage-block", "whiteboard": "whiteboard-block",
}


def generate_messages(seed: int, count: int):
    """Deterministic stream of valid messages covering every taxonomy entry
    and every control type, then random taxonomy events."""
    rng = random.Random(seed)
    strokes = {mid: [f"s{i}" for i in range(3)] for mid in _BLOCKS.values()}
    out = []
    for entry in media.taxonomy():
        data = _coverage_data(entry, rng)
        out.append(MediaEventMessage(entry.media_type, _BLOCKS[entry.media_type],
                                     entry.event_type, rng.randint(0, 999),
                                     rng.randint(0, 60000), f"cover {entry.event_type}",
                                     data))
    for control_type, data in CONTROL_SAMPLES:
        out.append(ControlEventMessage(control_type, rng.randint(0, 999),
                                       rng.randint(0, 60000), control_type, data))
    while len(out) < count:
        media_type = rng.choice(list(_BLOCKS))
        msg = _fuzz_event(rng, _BLOCKS[media_type], media_type,
                          rng.randint(0, 60000), strokes)
        if msg is not None:
            out.append(msg)
    return out[:count]


def _coverage_data(entry, rng):
    values = {
        "current_time": 12.5, "volume": 0.4, "rate": 1.25, "delta": -1.5,
        "center_x": 0.25, "center_y": 0.75, "scroll": 0.5, "page": 3,
        "text": "a note", "url": "https://example.org/a", "selector": "#p1",
        "stroke_id": "s0", "points": [0.1, 0.2, 0.3, 0.4],
    }
    if not entry.required_data_keys:
        return None
    return {key: values[key] for key in entry.required_data_keys}
