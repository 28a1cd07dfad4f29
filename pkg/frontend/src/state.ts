// Per-media-block state and the pure event-application function, mirroring
// the server's transition rules (same clamps, same quantization) so that a
// client folding the echoed event stream lands on the same state the server
// snapshots for resync.

import {
  canonicalJson,
  MediaEventMessage,
  MediaType,
  quantize,
} from "./protocol";

export const ZOOM_MIN = 0.05;
export const ZOOM_MAX = 50.0;
export const RATE_MIN = 0.0625;
export const RATE_MAX = 16.0;
export const DEFAULT_STROKE_COLOR = "#000000";
export const DEFAULT_STROKE_WIDTH = 0.004;

export class EventRejected extends Error {}

export interface MediaState {
  mediaId: string;
  mediaType: MediaType;
  entries: Record<string, unknown>;
}

export function initialState(mediaId: string, mediaType: MediaType,
                             source: string): MediaState {
  let entries: Record<string, unknown>;
  switch (mediaType) {
    case "video":
      entries = { source, current_time: 0, playing: false, muted: false,
                  volume: 1, playback_rate: 1, annotations: [] };
      break;
    case "image":
      entries = { source, zoom: 1, center_x: 0.5, center_y: 0.5, annotations: [] };
      break;
    case "pdf":
      entries = { source, page: 1, scroll: 0, annotations: [] };
      break;
    case "webpage":
      entries = { url: source, scroll: 0, highlights: [] };
      break;
    case "whiteboard":
      entries = { strokes: [] };
      break;
    default:
      throw new EventRejected(`unknown media type ${mediaType}`);
  }
  return { mediaId, mediaType, entries };
}

function clamp(value: number, lo: number, hi: number): number {
  return quantize(Math.min(hi, Math.max(lo, value)));
}

function num(data: Record<string, unknown>, key: string): number {
  const value = data[key];
  if (typeof value !== "number") {
    throw new EventRejected(`data key ${key} must be a number`);
  }
  return value;
}

interface StrokeEntry {
  stroke_id: string;
  points: number[];
  color: string;
  width: number;
}

function strokeFromData(data: Record<string, unknown>): StrokeEntry {
  const strokeId = data.stroke_id;
  if (typeof strokeId !== "string" || !strokeId) {
    throw new EventRejected("stroke_id must be a non-empty string");
  }
  const raw = data.points;
  if (!Array.isArray(raw) || raw.length === 0 || raw.length % 2) {
    throw new EventRejected("points must be a non-empty flat list of x,y pairs");
  }
  const points = raw.map((p) => {
    if (typeof p !== "number") throw new EventRejected("points must contain only numbers");
    return clamp(p, 0, 1);
  });
  const color = data.color ?? DEFAULT_STROKE_COLOR;
  if (typeof color !== "string" || !color) {
    throw new EventRejected("color must be a non-empty string");
  }
  const width = data.width ?? DEFAULT_STROKE_WIDTH;
  if (typeof width !== "number" || width <= 0) {
    throw new EventRejected("width must be a positive number");
  }
  return { stroke_id: strokeId, points, color, width: quantize(width) };
}

function applyDraw(list: StrokeEntry[], data: Record<string, unknown>): void {
  const stroke = strokeFromData(data);
  const existing = list.find((s) => s.stroke_id === stroke.stroke_id);
  if (existing) {
    // Continuation batch of a streamed stroke: extend, keep pen settings.
    existing.points.push(...stroke.points);
    return;
  }
  list.push(stroke);
}

/**
 * Apply one media event, returning the successor state (the input is never
 * mutated).  Continuous controls clamp; bad discrete identifiers reject.
 */
export function applyEvent(state: MediaState, msg: MediaEventMessage): MediaState {
  if (msg.mediaId !== state.mediaId) {
    throw new EventRejected(`message targets ${msg.mediaId}, state is ${state.mediaId}`);
  }
  if (msg.mediaType !== state.mediaType) {
    throw new EventRejected("message media type does not match state type");
  }
  const data: Record<string, unknown> = { ...(msg.data ?? {}) };
  const next: MediaState = {
    mediaId: state.mediaId,
    mediaType: state.mediaType,
    entries: JSON.parse(JSON.stringify(state.entries)),
  };
  const e = next.entries;
  const et = msg.eventType;

  if (state.mediaType === "video") {
    if (et === "play") e.playing = true;
    else if (et === "pause") e.playing = false;
    else if (et === "seek") e.current_time = quantize(Math.max(0, num(data, "current_time")));
    else if (et === "set-volume") e.volume = clamp(num(data, "volume"), 0, 1);
    else if (et === "toggle-mute") e.muted = !e.muted;
    else if (et === "set-rate") e.playback_rate = clamp(num(data, "rate"), RATE_MIN, RATE_MAX);
    else if (et === "draw") applyDraw(e.annotations as StrokeEntry[], data);
    else throw new EventRejected(`unknown video event ${et}`);
  } else if (state.mediaType === "image") {
    if (et === "mouse-scroll") {
      e.zoom = clamp((e.zoom as number) * 2 ** (num(data, "delta") / 10), ZOOM_MIN, ZOOM_MAX);
    } else if (et === "move") {
      e.center_x = clamp(num(data, "center_x"), 0, 1);
      e.center_y = clamp(num(data, "center_y"), 0, 1);
    } else if (et === "draw") applyDraw(e.annotations as StrokeEntry[], data);
    else throw new EventRejected(`unknown image event ${et}`);
  } else if (state.mediaType === "pdf") {
    if (et === "page-next") e.page = (e.page as number) + 1;
    else if (et === "page-prev") e.page = Math.max(1, (e.page as number) - 1);
    else if (et === "scroll") e.scroll = clamp(num(data, "scroll"), 0, 1);
    else if (et === "comment") {
      const text = data.text;
      if (typeof text !== "string") throw new EventRejected("comment text must be a string");
      (e.annotations as unknown[]).push({ page: Math.max(1, Math.trunc(num(data, "page"))), text });
    } else throw new EventRejected(`unknown pdf event ${et}`);
  } else if (state.mediaType === "webpage") {
    if (et === "navigate") {
      const url = data.url;
      if (typeof url !== "string" || !url) throw new EventRejected("url must be a non-empty string");
      e.url = url;
      e.scroll = 0;
    } else if (et === "scroll") e.scroll = clamp(num(data, "scroll"), 0, 1);
    else if (et === "highlight") {
      const selector = data.selector;
      if (typeof selector !== "string" || !selector) {
        throw new EventRejected("selector must be a non-empty string");
      }
      const entry: Record<string, unknown> = { selector };
      if (typeof data.note === "string" && data.note) entry.note = data.note;
      (e.highlights as unknown[]).push(entry);
    } else throw new EventRejected(`unknown webpage event ${et}`);
  } else if (state.mediaType === "whiteboard") {
    if (et === "draw") applyDraw(e.strokes as StrokeEntry[], data);
    else if (et === "erase") {
      const strokes = e.strokes as StrokeEntry[];
      const remaining = strokes.filter((s) => s.stroke_id !== data.stroke_id);
      if (remaining.length === strokes.length) {
        throw new EventRejected(`unknown stroke_id ${String(data.stroke_id)}`);
      }
      e.strokes = remaining;
    } else throw new EventRejected(`unknown whiteboard event ${et}`);
  }
  return next;
}

/** Canonical state string, identical to the server's resync payloads. */
export function serializeState(state: MediaState): string {
  return canonicalJson({
    "media-id": state.mediaId,
    "media-type": state.mediaType,
    entries: state.entries,
  });
}

/** Parse a resync/join-ack state string into a MediaState. */
export function parseState(text: string): MediaState {
  const obj = JSON.parse(text);
  return { mediaId: obj["media-id"], mediaType: obj["media-type"], entries: obj.entries };
}
