"""Message-based real-time multimedia collaboration.

Media controls (play, seek, zoom, scroll, draw, navigate) travel as small
canonical JSON messages; a session server totally orders and fans them out,
keeps authoritative per-block state snapshots, records an append-only log,
and replays it deterministically.  A whole session fits in kilobytes.
"""

from .protocol import (
    ControlEventMessage,
    EventMessage,
    MediaEventMessage,
    deserialize,
    serialize,
    wire_size,
)
from .media import MediaState, apply_event, initial_state, taxonomy
from .handlers import DispatchResult, HandlerTree, build_tree, dispatch
from .server import SessionLogEntry, SessionServer, load_log
from .replay import ReplaySchedule, replay_to, run_timed, seek
from .bandwidth import BandwidthReport, emit_report
from .harness import Scenario, fuzz_session, load_scenario, run_scenario

__version__ = "0.1.0"

__all__ = [
    "BandwidthReport", "ControlEventMessage", "DispatchResult", "EventMessage",
    "HandlerTree", "MediaEventMessage", "MediaState", "ReplaySchedule", "Scenario",
    "SessionLogEntry", "SessionServer", "apply_event", "build_tree", "deserialize",
    "dispatch", "emit_report", "fuzz_session", "initial_state", "load_log",
    "load_scenario", "replay_to", "run_scenario", "run_timed", "seek", "serialize",
    "taxonomy", "wire_size",
]
