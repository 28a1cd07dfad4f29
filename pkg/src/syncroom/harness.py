"""Scripted virtual-client harness against the in-process session server.

A scenario is a list of scheduled events from named clients plus the
materials the session starts with.  The harness drives the script on a
virtual clock, then checks the three core properties after quiescence:

- every client received the same gap-free global order,
- every client's folded states match the server and the independent fold
  oracle (plain apply_event over the log, no handler tree),
- replaying the persisted log reproduces the live final states.

Scenario files are line-oriented text: one canonical-encoded event per line,
prefixed by the sending client and the session time in milliseconds.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import bandwidth, handlers, media, protocol, replay, server as server_mod
from .bandwidth import BandwidthReport, DOWN, UP
from .media import MediaState
from .protocol import ControlEventMessage, EventMessage, MediaEventMessage
from .replay import ReplaySchedule
from .server import (
    JoinAck,
    SessionLogEntry,
    SessionServer,
    encode_entry,
)

logger = logging.getLogger(__name__)


class ScenarioError(Exception):
    pass


class ManualClock:
    """A settable wall clock in milliseconds."""

    def __init__(self, start_ms: float = 0.0):
        self.now_ms = float(start_ms)

    def __call__(self) -> float:
        return self.now_ms

    def advance_to(self, at_ms: float) -> None:
        self.now_ms = max(self.now_ms, float(at_ms))


@dataclass(frozen=True)
class ScheduledEvent:
    client_id: str
    at_ms: int
    message: EventMessage


@dataclass(frozen=True)
class ScenarioClient:
    client_id: str
    role: str
    join_at_ms: int = 0


@dataclass(frozen=True)
class BootstrapLoad:
    """Out-of-band bytes (e.g. a page load) accounted in the bootstrap bucket."""

    at_ms: int
    nbytes: int
    label: str = ""


@dataclass(frozen=True)
class Expectation:
    media_id: str
    key: str
    value: object


@dataclass
class Scenario:
    name: str
    materials: list[tuple[str, str, str]] = field(default_factory=list)  # id, type, source
    clients: list[ScenarioClient] = field(default_factory=list)
    script: list[ScheduledEvent] = field(default_factory=list)
    bootstrap_loads: list[BootstrapLoad] = field(default_factory=list)
    expected: list[Expectation] = field(default_factory=list)

    def validate(self) -> None:
        last_at: dict[str, int] = {}
        for ev in self.script:
            if ev.at_ms < last_at.get(ev.client_id, 0):
                raise ScenarioError(f"script not sorted by time for client {ev.client_id}")
            last_at[ev.client_id] = ev.at_ms
        ids = [c.client_id for c in self.clients]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate client id")


def save_scenario(scenario: Scenario, path: str | Path) -> Path:
    path = Path(path)
    lines = [f"name {scenario.name}"]
    for media_id, media_type, source in scenario.materials:
        lines.append(f"material {media_id} {media_type} {source}")
    for client in scenario.clients:
        lines.append(f"join {client.client_id} {client.role} {client.join_at_ms}")
    for load in scenario.bootstrap_loads:
        lines.append(f"bootstrap {load.at_ms} {load.nbytes} {load.label}".rstrip())
    for ev in scenario.script:
        encoded = protocol.serialize(ev.message).decode("utf-8")
        lines.append(f"event {ev.client_id} {ev.at_ms} {encoded}")
    for exp in scenario.expected:
        lines.append(f"expect {exp.media_id} {exp.key} {protocol.canonical_json(exp.value)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_scenario(path: str | Path) -> Scenario:
    scenario = Scenario(name=Path(path).stem)
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, _, rest = line.partition(" ")
        try:
            if word == "name":
                scenario.name = rest.strip()
            elif word == "material":
                media_id, media_type, source = rest.split(" ", 2)
                scenario.materials.append((media_id, media_type, source))
            elif word == "join":
                client_id, role, at = rest.split(" ")
                scenario.clients.append(ScenarioClient(client_id, role, int(at)))
            elif word == "bootstrap":
                parts = rest.split(" ", 2)
                scenario.bootstrap_loads.append(
                    BootstrapLoad(int(parts[0]), int(parts[1]),
                                  parts[2] if len(parts) > 2 else ""))
            elif word == "event":
                client_id, at, encoded = rest.split(" ", 2)
                scenario.script.append(
                    ScheduledEvent(client_id, int(at), protocol.deserialize(encoded)))
            elif word == "expect":
                media_id, key, encoded = rest.split(" ", 2)
                scenario.expected.append(
                    Expectation(media_id, key, protocol.parse_json(encoded, "expectation")))
            else:
                raise ScenarioError(f"unknown directive {word!r}")
        except (ValueError, protocol.ParseError) as exc:
            raise ScenarioError(f"{path}:{number}: {exc}") from exc
    scenario.validate()
    return scenario


# -- the independent fold oracle ---------------------------------------------


def fold_states(entries: list[SessionLogEntry]) -> dict[str, MediaState]:
    """Reference computation: sequential apply_event over the log, no handler tree."""
    states: dict[str, MediaState] = {}
    for entry in entries:
        if entry.error is not None:
            continue
        msg = entry.message
        if isinstance(msg, ControlEventMessage):
            if msg.control_type == "add-material":
                data = msg.data or {}
                states[data["media-id"]] = media.initial_state(
                    data["media-id"], data["media-type"], data["source"])
        elif isinstance(msg, MediaEventMessage):
            states[msg.media_id] = media.apply_event(states[msg.media_id], msg)
    return states


def serialize_states(states: dict[str, MediaState]) -> dict[str, str]:
    return {mid: media.serialize_state(s) for mid, s in sorted(states.items())}


# -- virtual clients ---------------------------------------------------------


class VirtualClient:
    """A scripted participant: sends with its own seq counter, folds its echoes."""

    def __init__(self, client_id: str, role: str):
        self.client_id = client_id
        self.role = role
        self.next_send_seq = 0
        self.ack: JoinAck | None = None
        self.received: list[SessionLogEntry] = []
        self.tree = handlers.build_tree()

    def init_from_ack(self, ack: JoinAck) -> None:
        self.ack = ack

    def final_states(self) -> dict[str, MediaState]:
        assert self.ack is not None
        states = {mid: media.deserialize_state(s) for mid, s in self.ack.states.items()}
        skipped: list = []
        for entry in self.received:
            replay._apply_entry(states, self.tree, entry, skipped)
        return states


@dataclass
class HarnessResult:
    scenario: str
    ok: bool
    divergence: str | None
    report: BandwidthReport
    received_counts: dict[str, int]
    final_states: dict[str, str]  # media_id -> canonical state string (server side)
    client_states: dict[str, dict[str, str]] = field(default_factory=dict)
    log_path: Path | None = None
    entries: list[SessionLogEntry] = field(default_factory=list)


def _first_divergence(name: str, a: dict[str, str], b: dict[str, str]) -> str:
    for key in sorted(set(a) | set(b)):
        if a.get(key) != b.get(key):
            return (f"{name}: first differing media block {key!r}: "
                    f"{a.get(key)!r} != {b.get(key)!r}")
    return f"{name}: states differ"


def run_scenario(scenario: Scenario, client_count: int = 0, seed: int = 0,
                 out_dir: str | Path | None = None,
                 role_policy: str = server_mod.POLICY_PRESENTER_ONLY) -> HarnessResult:
    """Execute a scenario and assert consistency, replay equivalence, bandwidth.

    `client_count` adds silent audience members beyond the scripted clients.
    """
    scenario.validate()
    clock = ManualClock()
    srv = SessionServer(clock=clock, role_policy=role_policy)

    clients = list(scenario.clients)
    scripted = {c.client_id for c in clients}
    for i in range(max(0, client_count - len(clients))):
        clients.append(ScenarioClient(f"extra-{i}", server_mod.ROLE_AUDIENCE, 0))

    presenters = [c for c in clients if c.role == server_mod.ROLE_PRESENTER
                  and c.join_at_ms == 0]
    if not presenters:
        raise ScenarioError("scenario needs a presenter joining at t=0")
    creator = presenters[0]

    session_id = srv.create_session(creator.client_id, session_id=scenario.name)
    report = BandwidthReport(session_id)

    # Timeline: joins sort before events at the same instant; materials are
    # added by the session creator right after joining.
    timeline: list[tuple[int, int, int, object]] = []
    for i, client in enumerate(clients):
        timeline.append((client.join_at_ms, 0, i, client))
    material_events = [
        ScheduledEvent(creator.client_id, 0, ControlEventMessage(
            "add-material", 0, 0, f"add {media_id}",
            {"media-id": media_id, "media-type": media_type, "source": source}))
        for media_id, media_type, source in scenario.materials]
    for i, ev in enumerate(material_events):
        timeline.append((0, 1, i, ev))
    for i, ev in enumerate(scenario.script):
        timeline.append((ev.at_ms, 2, i, ev))
    for i, load in enumerate(scenario.bootstrap_loads):
        timeline.append((load.at_ms, 3, i, load))
    timeline.sort(key=lambda item: item[:3])

    virtual: dict[str, VirtualClient] = {}
    divergences: list[str] = []

    for at_ms, _, _, item in timeline:
        clock.advance_to(at_ms)
        if isinstance(item, ScenarioClient):
            vc = VirtualClient(item.client_id, item.role)
            ack = srv.join(session_id, item.client_id, item.role)
            vc.init_from_ack(ack)
            srv.set_on_entry(session_id, item.client_id, vc.received.append)
            virtual[item.client_id] = vc
            report.record_bootstrap(DOWN, len(ack.encode()), at_ms, "join-ack")
            if item.join_at_ms > 0:
                # Mid-session resync must match the fold oracle at this point.
                oracle = serialize_states(fold_states(srv.log_entries(session_id)))
                for material_id in oracle:
                    msg = srv.resync(session_id, item.client_id, material_id)
                    got = msg.data["media-state"]
                    if got != oracle[material_id]:
                        divergences.append(
                            f"resync divergence on {material_id!r} at {at_ms} ms")
        elif isinstance(item, ScheduledEvent):
            vc = virtual[item.client_id]
            msg = replace(item.message, seq_id=vc.next_send_seq)
            vc.next_send_seq += 1
            result = srv.submit(session_id, item.client_id, msg)
            if result.error:
                logger.info("dispatch error at global-seq %d: %s",
                            result.global_seq, result.error)
            payload = protocol.wire_size(msg)
            event_type = getattr(msg, "event_type", None) or msg.control_type
            report.record(UP, payload, event_type, at_ms)
            envelope = len(encode_entry(vc.received[-1])) - payload
            report.record_overhead(UP, envelope, at_ms)
        elif isinstance(item, BootstrapLoad):
            report.record_bootstrap(DOWN, item.nbytes, at_ms, item.label)

    # Downlink: whole frames delivered to the first scripted client.
    reference = virtual[clients[0].client_id]
    for entry in reference.received:
        report.record(DOWN, len(encode_entry(entry)), "frame", entry.received_at)

    entries = srv.log_entries(session_id)
    live = serialize_states(srv.snapshot_states(session_id))

    # (a) identical, gap-free received sequences; late joiners see a suffix.
    full = [e.global_seq for e in entries]
    for vc in virtual.values():
        seqs = [e.global_seq for e in vc.received]
        if any(b - a != 1 for a, b in zip(seqs, seqs[1:])):
            divergences.append(f"client {vc.client_id}: gap in received global_seq")
        if seqs != full[len(full) - len(seqs):]:
            divergences.append(f"client {vc.client_id}: received sequence is not a "
                               f"suffix of the log")

    # (b) every client's folded states equal the server's, which equal the oracle.
    oracle = serialize_states(fold_states(entries))
    if live != oracle:
        divergences.append(_first_divergence("server vs fold oracle", live, oracle))
    client_states: dict[str, dict[str, str]] = {}
    for vc in virtual.values():
        folded = serialize_states(vc.final_states())
        client_states[vc.client_id] = folded
        if folded != live:
            divergences.append(_first_divergence(f"client {vc.client_id} vs server",
                                                 folded, live))

    # (c) replay of the persisted log reproduces the live final states.
    out_dir = Path(out_dir) if out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        log_path = out_dir / f"{scenario.name}.log"
    else:
        import os
        import tempfile
        fd, name = tempfile.mkstemp(prefix=f"{scenario.name}-", suffix=".log")
        os.close(fd)
        log_path = Path(name)
    srv.persist_log(session_id, log_path)
    loaded = server_mod.load_log(log_path)
    schedule = ReplaySchedule(loaded)
    replayed: dict[str, MediaState] = {}
    replay.replay_to(schedule, replayed, handlers.build_tree(),
                     schedule.span_ms)
    if serialize_states(replayed) != live:
        divergences.append(_first_divergence("replay vs live",
                                             serialize_states(replayed), live))

    # Scenario-declared expectations on final entry values.
    for exp in scenario.expected:
        state = srv.snapshot_states(session_id).get(exp.media_id)
        actual = None if state is None else state.entries.get(exp.key)
        if actual != exp.value:
            divergences.append(f"expectation failed: {exp.media_id}.{exp.key} = "
                               f"{actual!r}, expected {exp.value!r}")

    return HarnessResult(
        scenario=scenario.name,
        ok=not divergences,
        divergence="; ".join(divergences) if divergences else None,
        report=report,
        received_counts={cid: len(vc.received) for cid, vc in virtual.items()},
        final_states=live,
        client_states=client_states,
        log_path=log_path,
        entries=entries,
    )


# -- fuzzing -----------------------------------------------------------------

_FUZZ_MATERIALS = [
    ("video-block", "video", "assets/talk.mp4"),
    ("image-block", "image", "assets/figure.png"),
    ("pdf-block", "pdf", "assets/slides.pdf"),
    ("webpage-block", "webpage", "https://example.org/start"),
    ("whiteboard-block", "whiteboard", ""),
]

_FUZZ_URLS = ["https://example.org/a", "https://example.org/b",
              "https://example.org/start"]

_COLORS = ["#000000", "#d62728", "#1f77b4", "#2ca02c"]


def _fuzz_event(rng: random.Random, media_id: str, media_type: str, at_ms: int,
                strokes: dict[str, list[str]]) -> MediaEventMessage | None:
    entries = [e for e in media.taxonomy() if e.media_type == media_type]
    entry = rng.choice(entries)
    et = entry.event_type
    data: dict | None = None
    if et == "seek":
        data = {"current_time": round(rng.uniform(0, 600), 3)}
    elif et == "set-volume":
        data = {"volume": round(rng.random(), 3)}
    elif et == "set-rate":
        data = {"rate": round(rng.uniform(0.25, 4.0), 3)}
    elif et == "draw":
        stroke_id = f"s{len(strokes[media_id])}-{rng.randrange(1000)}"
        npoints = rng.randint(2, 10)
        points = [round(rng.random(), 3) for _ in range(2 * npoints)]
        data = {"stroke_id": stroke_id, "points": points,
                "color": rng.choice(_COLORS), "width": 0.004}
        strokes[media_id].append(stroke_id)
    elif et == "erase":
        if not strokes[media_id]:
            return None
        stroke_id = rng.choice(strokes[media_id])
        strokes[media_id].remove(stroke_id)
        data = {"stroke_id": stroke_id}
    elif et == "mouse-scroll":
        data = {"delta": round(rng.uniform(-5, 5), 3)}
    elif et == "move":
        data = {"center_x": round(rng.random(), 3), "center_y": round(rng.random(), 3)}
    elif et == "scroll":
        data = {"scroll": round(rng.random(), 3)}
    elif et == "comment":
        data = {"page": rng.randint(1, 9), "text": f"note {rng.randrange(100)}"}
    elif et == "navigate":
        data = {"url": rng.choice(_FUZZ_URLS)}
    elif et == "highlight":
        data = {"selector": f"#p{rng.randrange(50)}"}
    return MediaEventMessage(media_type, media_id, et, 0, at_ms, "", data)


def make_fuzz_scenario(seed: int, event_count: int, client_count: int) -> Scenario:
    """Deterministically generate a random valid session script."""
    rng = random.Random(seed)
    clients = [ScenarioClient(f"c{i}", server_mod.ROLE_PRESENTER, 0)
               for i in range(max(1, client_count))]
    strokes: dict[str, list[str]] = {mid: [] for mid, _, _ in _FUZZ_MATERIALS}
    script: list[ScheduledEvent] = []
    at_ms = 0
    while len(script) < event_count:
        at_ms += rng.randint(0, 400)
        client = rng.choice(clients)
        media_id, media_type, _ = rng.choice(_FUZZ_MATERIALS)
        msg = _fuzz_event(rng, media_id, media_type, at_ms, strokes)
        if msg is not None:
            script.append(ScheduledEvent(client.client_id, at_ms, msg))
    return Scenario(name=f"fuzz-{seed}", materials=list(_FUZZ_MATERIALS),
                    clients=clients, script=script)


def fuzz_session(seed: int, event_count: int, client_count: int,
                 out_dir: str | Path | None = None) -> HarnessResult:
    """Random valid event streams; on divergence, a minimized script is saved."""
    scenario = make_fuzz_scenario(seed, event_count, client_count)
    result = run_scenario(scenario, seed=seed, out_dir=out_dir)
    if not result.ok:
        minimized = _minimize(scenario, seed, out_dir)
        target = Path(out_dir or ".") / f"fuzz-{seed}-failing.txt"
        save_scenario(minimized, target)
        logger.error("fuzz seed %d diverged; minimized script at %s", seed, target)
    return result


def _minimize(scenario: Scenario, seed: int, out_dir) -> Scenario:
    """Greedy chunk removal while the failure persists (bounded ddmin)."""
    script = list(scenario.script)
    chunk = max(1, len(script) // 2)
    while chunk >= 1:
        i = 0
        while i < len(script):
            candidate = script[:i] + script[i + chunk:]
            trial = Scenario(scenario.name, scenario.materials, scenario.clients,
                             candidate, scenario.bootstrap_loads)
            try:
                ok = run_scenario(trial, seed=seed).ok
            except Exception:
                ok = False
            if not ok:
                script = candidate
            else:
                i += chunk
        chunk //= 2
    return Scenario(scenario.name, scenario.materials, scenario.clients, script,
                    scenario.bootstrap_loads)
