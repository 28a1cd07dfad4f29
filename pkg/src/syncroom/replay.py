"""Deterministic replay of a recorded session log.

Entries are queued by the server-stamped receive time (the authoritative
timeline; client timestamps may skew) and popped in order into the handler
tree.  Rewinding re-folds from the beginning: transitions like webpage
navigation are not invertible, and logs are small enough that a full re-fold
is cheap.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

from . import handlers, media
from .handlers import HandlerTree
from .media import MediaState
from .protocol import ControlEventMessage, MediaEventMessage
from .server import SessionLogEntry

DEFAULT_TOLERANCE_MS = 50.0


class ReplayError(Exception):
    pass


class SinkError(ReplayError):
    """The sink refused an entry; the schedule position is preserved for resume."""


@dataclass
class ReplaySchedule:
    entries: list[SessionLogEntry]
    pace: float = 1.0
    position: int = 0
    watermark_ms: int = 0  # highest replay time reached so far

    def __post_init__(self):
        self.entries = sorted(self.entries, key=lambda e: (e.received_at, e.global_seq))

    @property
    def current_time_ms(self) -> int:
        if self.position:
            return max(self.watermark_ms, self.entries[self.position - 1].received_at)
        return self.watermark_ms

    @property
    def span_ms(self) -> int:
        return self.entries[-1].received_at if self.entries else 0


def _apply_entry(states: dict[str, MediaState], tree: HandlerTree,
                 entry: SessionLogEntry, skipped: list) -> None:
    if entry.error is not None:
        # The live session logged this as a failed dispatch; reproduce the skip.
        skipped.append(entry)
        return
    msg = entry.message
    if isinstance(msg, ControlEventMessage):
        if msg.control_type == "add-material":
            data = msg.data or {}
            mid = data.get("media-id")
            states[mid] = media.initial_state(mid, data.get("media-type"),
                                              data.get("source"))
        return
    if isinstance(msg, MediaEventMessage):
        try:
            result = handlers.dispatch(tree, states, msg)
        except (handlers.HandlerTreeError, media.MediaModelError):
            skipped.append(entry)
            return
        states[msg.media_id] = result.new_state


def replay_to(schedule: ReplaySchedule, states: dict[str, MediaState],
              tree: HandlerTree, target_time_ms: int) -> tuple[dict[str, MediaState],
                                                               list[SessionLogEntry]]:
    """Pop every entry with received_at <= target_time_ms, in order.

    Mutates `states` in place (replacing per-block snapshots) and advances the
    schedule position.  Calling again with the same target emits nothing.
    """
    if target_time_ms < schedule.current_time_ms:
        raise ReplayError("replay_to cannot move backwards; use seek")
    emitted: list[SessionLogEntry] = []
    skipped: list[SessionLogEntry] = []
    while (schedule.position < len(schedule.entries)
           and schedule.entries[schedule.position].received_at <= target_time_ms):
        entry = schedule.entries[schedule.position]
        schedule.position += 1
        _apply_entry(states, tree, entry, skipped)
        emitted.append(entry)
    schedule.watermark_ms = max(schedule.watermark_ms, target_time_ms)
    return states, emitted


def seek(schedule: ReplaySchedule, states: dict[str, MediaState],
         tree: HandlerTree, target_time_ms: int) -> dict[str, MediaState]:
    """Position the replay at target_time_ms, rewinding by re-fold if needed."""
    if target_time_ms < schedule.current_time_ms:
        states.clear()
        schedule.position = 0
        schedule.watermark_ms = 0
    replay_to(schedule, states, tree, target_time_ms)
    return states


def run_timed(schedule: ReplaySchedule, states: dict[str, MediaState],
              tree: HandlerTree, pace: float,
              sink: Callable[[SessionLogEntry], None],
              now: Callable[[], float] = time.monotonic,
              sleep: Callable[[float], None] = time.sleep) -> dict[str, MediaState]:
    """Emit remaining entries to the sink at origin + received_at/pace.

    `now`/`sleep` default to the real clock; tests inject virtual ones.  Final
    states are identical to replay_to(end) regardless of pace.  A sink failure
    aborts with the position preserved, so the run can resume.
    """
    if pace <= 0:
        raise ReplayError("pace must be positive")
    origin = now() - schedule.current_time_ms / 1000.0 / pace
    skipped: list[SessionLogEntry] = []
    while schedule.position < len(schedule.entries):
        entry = schedule.entries[schedule.position]
        due = origin + entry.received_at / 1000.0 / pace
        delay = due - now()
        if delay > 0:
            sleep(delay)
        try:
            sink(entry)
        except Exception as exc:
            raise SinkError(f"sink failed at global-seq {entry.global_seq}: {exc}") from exc
        schedule.position += 1
        _apply_entry(states, tree, entry, skipped)
    return states
