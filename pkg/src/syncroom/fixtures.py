"""The four shipped one-minute scenarios: video, PDF, image, webpage.

Each script encodes a plausible presenter minute for its media type (play
and pause a talk, leaf through slides, pan and zoom a figure, browse and
highlight a page) plus an audience member present from the start and a late
joiner at the 30-second mark.  The webpage scenario accounts its page loads
as bootstrap traffic, separate from event bytes.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .harness import BootstrapLoad, Expectation, Scenario, ScenarioClient, ScheduledEvent
from .protocol import MediaEventMessage

FIXTURE_NAMES = ("video-minute", "pdf-minute", "image-minute", "webpage-minute")

_PRESENTER = "alice"
_CLIENTS = [
    ScenarioClient("alice", "presenter", 0),
    ScenarioClient("bob", "audience", 0),
    ScenarioClient("carol", "audience", 30000),
]


def _ev(media_type: str, media_id: str, event_type: str, at_ms: int,
        data: dict | None = None, description: str = "") -> ScheduledEvent:
    return ScheduledEvent(_PRESENTER, at_ms,
                          MediaEventMessage(media_type, media_id, event_type, 0,
                                            at_ms, description, data))


def _drawing_burst(media_type: str, media_id: str, start_ms: int, seconds: int,
                   strokes: int) -> list[ScheduledEvent]:
    """Streamed free drawing: 4 messages/s, 20 points per message.

    Coordinates are kept at centi-precision (the capture layer samples a
    coarse grid) so a batch stays well under the per-message size bound.
    """
    events = []
    messages = seconds * 4
    per_stroke = messages // strokes
    for i in range(messages):
        at_ms = start_ms + i * 250
        stroke_index, batch_index = divmod(i, per_stroke)
        points = []
        for j in range(20):
            t = batch_index * 20 + j
            points.append(round(0.1 * ((t // 2) % 10), 2))
            points.append(round(0.3 + 0.05 * stroke_index
                                + (0.05 if (t // 20) % 2 else 0.0), 2))
        events.append(_ev(media_type, media_id, "draw", at_ms,
                          {"stroke_id": f"s{stroke_index}", "points": points}))
    return events


def video_minute() -> Scenario:
    mid = "v"
    script = [
        _ev("video", mid, "play", 1000, description="start the talk"),
        _ev("video", mid, "seek", 8000, {"current_time": 42.5}),
        _ev("video", mid, "seek", 15000, {"current_time": 90.0}),
        _ev("video", mid, "pause", 20000),
        _ev("video", mid, "toggle-mute", 22000),
        _ev("video", mid, "toggle-mute", 24000),
        _ev("video", mid, "set-volume", 26000, {"volume": 0.6}),
        _ev("video", mid, "seek", 28000, {"current_time": 30.0}),
        _ev("video", mid, "play", 32000),
    ]
    script += _drawing_burst("video", mid, 35000, seconds=10, strokes=5)
    script.append(_ev("video", mid, "pause", 58000))
    return Scenario(
        name="video-minute",
        materials=[(mid, "video", "assets/talk.mp4")],
        clients=list(_CLIENTS),
        script=script,
        expected=[Expectation(mid, "playing", False),
                  Expectation(mid, "volume", 0.6),
                  Expectation(mid, "current_time", 30.0)],
    )


def pdf_minute() -> Scenario:
    mid = "p"
    script = []
    at = 2000
    for i in range(5):
        script.append(_ev("pdf", mid, "page-next", at))
        at += 2000
        for j in range(4):
            script.append(_ev("pdf", mid, "scroll", at,
                              {"scroll": round(0.25 * (j + 1), 2)}))
            at += 1500
    script.append(_ev("pdf", mid, "page-prev", at)); at += 2000
    script.append(_ev("pdf", mid, "page-prev", at)); at += 2000
    script.append(_ev("pdf", mid, "comment", 48000, {"page": 4, "text": "key result"}))
    script.append(_ev("pdf", mid, "comment", 52000, {"page": 4, "text": "check proof"}))
    script.append(_ev("pdf", mid, "comment", 56000, {"page": 2, "text": "cite this"}))
    return Scenario(
        name="pdf-minute",
        materials=[(mid, "pdf", "assets/slides.pdf")],
        clients=list(_CLIENTS),
        script=script,
        expected=[Expectation(mid, "page", 4)],
    )


def image_minute() -> Scenario:
    mid = "i"
    script = []
    at = 1000
    for delta in (-1.5, -1.5, 3.0, 1.5, -2.0, 2.0, 1.0, -1.0, 0.5, -0.5):
        script.append(_ev("image", mid, "mouse-scroll", at, {"delta": delta}))
        at += 1200
    for k in range(8):
        script.append(_ev("image", mid, "move", at,
                          {"center_x": round(0.3 + 0.05 * k, 2),
                           "center_y": round(0.6 - 0.04 * k, 2)}))
        at += 1500
    script += _drawing_burst("image", mid, 40000, seconds=5, strokes=4)
    return Scenario(
        name="image-minute",
        materials=[(mid, "image", "assets/figure.png")],
        clients=list(_CLIENTS),
        script=script,
        expected=[Expectation(mid, "center_x", 0.65)],
    )


def webpage_minute() -> Scenario:
    mid = "w"
    script = []
    at = 2000
    for j in range(12):
        script.append(_ev("webpage", mid, "scroll", at,
                          {"scroll": round(0.08 * (j + 1), 2)}))
        at += 1800
    script.append(_ev("webpage", mid, "highlight", at, {"selector": "#intro"})); at += 2000
    script.append(_ev("webpage", mid, "navigate", 28000,
                      {"url": "https://example.org/details"}))
    at = 30000
    for j in range(13):
        script.append(_ev("webpage", mid, "scroll", at,
                          {"scroll": round(0.07 * (j + 1), 2)}))
        at += 1600
    script.append(_ev("webpage", mid, "highlight", at, {"selector": "#figure-2"})); at += 1500
    script.append(_ev("webpage", mid, "highlight", at, {"selector": "#conclusion"})); at += 1500
    script.append(_ev("webpage", mid, "navigate", 56000,
                      {"url": "https://example.org/summary"}))
    script.append(_ev("webpage", mid, "highlight", 58000, {"selector": "#abstract"}))
    return Scenario(
        name="webpage-minute",
        materials=[(mid, "webpage", "https://example.org/start")],
        clients=list(_CLIENTS),
        script=script,
        # The two navigations each pull a page; those bytes are bootstrap, not events.
        bootstrap_loads=[BootstrapLoad(28000, 1_150_000, "page-load"),
                         BootstrapLoad(56000, 1_150_000, "page-load")],
        expected=[Expectation(mid, "url", "https://example.org/summary")],
    )


_BUILDERS = {
    "video-minute": video_minute,
    "pdf-minute": pdf_minute,
    "image-minute": image_minute,
    "webpage-minute": webpage_minute,
}


def build(name: str) -> Scenario:
    return _BUILDERS[name]()


def all_scenarios() -> list[Scenario]:
    return [build(name) for name in FIXTURE_NAMES]


def fixture_path(name: str) -> Path:
    """Path of the shipped scenario file for `name`."""
    return Path(resources.files("syncroom") / "scenarios" / f"{name}.txt")


def write_fixture_files(directory: str | Path) -> list[Path]:
    from .harness import save_scenario
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [save_scenario(build(name), directory / f"{name}.txt")
            for name in FIXTURE_NAMES]
