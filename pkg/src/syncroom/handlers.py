"""Hierarchical event dispatch: root dispatcher → media handler → action leaf.

The tree is fixed at three levels to keep routing overhead flat.  Each leaf
consumes exactly one (media_type, event_type) pair: it delegates the state
math to `media.apply_event` (single source of truth) and synthesizes UI
directives — plain data records that a client interprets, e.g. triggering a
click on the element bound to the play control or setting a slider value.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from . import media
from .media import EventTaxonomyEntry, MediaState
from .protocol import MediaEventMessage


class HandlerTreeError(Exception):
    pass


class DuplicateHandlerError(HandlerTreeError):
    pass


class RoutingError(HandlerTreeError):
    """No handler consumed the message; `level` says where routing stopped."""

    def __init__(self, message: str, level: int):
        super().__init__(message)
        self.level = level


class MissingBlockError(HandlerTreeError):
    """The states map has no entry for the message's media_id."""


@dataclass
class DispatchResult:
    media_id: str
    new_state: MediaState
    ui_directives: list[dict]


LeafHandler = Callable[[MediaState, MediaEventMessage], DispatchResult]


def _element_id(msg: MediaEventMessage) -> str:
    return f"{msg.media_id}:{msg.event_type}"


def _directives_for(entry: EventTaxonomyEntry, msg: MediaEventMessage,
                    new_state: MediaState) -> list[dict]:
    data = msg.data or {}
    et = entry.event_type
    element = _element_id(msg)
    if et in ("play", "pause", "toggle-mute", "page-next", "page-prev"):
        return [{"op": "trigger-click", "element": element}]
    if et == "seek":
        return [{"op": "trigger-click", "element": element},
                {"op": "set-slider", "element": f"{msg.media_id}:progress",
                 "value": new_state.entries["current_time"]}]
    if et == "set-volume":
        return [{"op": "set-slider", "element": element, "value": new_state.entries["volume"]}]
    if et == "set-rate":
        return [{"op": "set-slider", "element": element,
                 "value": new_state.entries["playback_rate"]}]
    if et == "mouse-scroll":
        return [{"op": "set-zoom", "element": msg.media_id, "value": new_state.entries["zoom"]}]
    if et == "move":
        return [{"op": "set-center", "element": msg.media_id,
                 "x": new_state.entries["center_x"], "y": new_state.entries["center_y"]}]
    if et == "draw":
        return [{"op": "render-stroke", "element": msg.media_id,
                 "stroke_id": data.get("stroke_id")}]
    if et == "erase":
        return [{"op": "remove-stroke", "element": msg.media_id,
                 "stroke_id": data.get("stroke_id")}]
    if et == "scroll":
        return [{"op": "set-scroll", "element": msg.media_id,
                 "value": new_state.entries["scroll"]}]
    if et == "comment":
        return [{"op": "add-comment", "element": msg.media_id,
                 "page": data.get("page"), "text": data.get("text")}]
    if et == "navigate":
        return [{"op": "load-url", "element": msg.media_id, "url": data.get("url")}]
    if et == "highlight":
        return [{"op": "apply-highlight", "element": msg.media_id,
                 "selector": data.get("selector")}]
    return []


def _make_leaf(entry: EventTaxonomyEntry) -> LeafHandler:
    def leaf(state: MediaState, msg: MediaEventMessage) -> DispatchResult:
        new_state = media.apply_event(state, msg)
        return DispatchResult(msg.media_id, new_state, _directives_for(entry, msg, new_state))
    return leaf


@dataclass
class HandlerTree:
    """Root → per-media-type handler → per-action leaf.  Immutable after build."""

    children: dict[str, dict[str, LeafHandler]]
    leaf_invocations: Counter = field(default_factory=Counter)

    def media_types(self) -> list[str]:
        return sorted(self.children)


def build_tree(entries: list[EventTaxonomyEntry] | None = None) -> HandlerTree:
    """Build the dispatch tree from taxonomy entries (defaults to the full taxonomy)."""
    if entries is None:
        entries = media.taxonomy()
    children: dict[str, dict[str, LeafHandler]] = {}
    for entry in entries:
        leaves = children.setdefault(entry.media_type, {})
        if entry.event_type in leaves:
            raise DuplicateHandlerError(
                f"duplicate handler for ({entry.media_type}, {entry.event_type})")
        leaves[entry.event_type] = _make_leaf(entry)
    return HandlerTree(children)


def dispatch(tree: HandlerTree, states: dict[str, MediaState],
             msg: MediaEventMessage) -> DispatchResult:
    """Route one media event to its single leaf handler.

    Errors never mutate `states`; the caller decides whether to commit the
    returned new_state.
    """
    if msg.media_id not in states:
        raise MissingBlockError(f"no media block {msg.media_id!r}")
    media_level = tree.children.get(msg.media_type)
    if media_level is None:
        raise RoutingError(f"no handler for media type {msg.media_type!r}", level=1)
    leaf = media_level.get(msg.event_type)
    if leaf is None:
        raise RoutingError(
            f"no handler for event type {msg.event_type!r} on {msg.media_type}", level=2)
    result = leaf(states[msg.media_id], msg)
    tree.leaf_invocations[(msg.media_type, msg.event_type)] += 1
    return result
