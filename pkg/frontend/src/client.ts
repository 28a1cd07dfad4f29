// Session client: joins over a transport, folds the ordered entry stream
// into per-block states, and drives the views.  Locally captured events are
// applied optimistically and sent; the echo carries the authoritative order
// and overwrites the local result (deterministic transitions make the echo a
// no-op in the common case).

import { CaptureLayer } from "./capture";
import { UiRegistry } from "./dom";
import {
  ControlEventMessage,
  DataMap,
  EventMessage,
  MediaEventMessage,
  MediaType,
  canonicalJson,
  deserialize,
  serialize,
} from "./protocol";
import {
  EventRejected,
  MediaState,
  applyEvent,
  initialState,
  parseState,
  serializeState,
} from "./state";
import { MediaBlockView, directivesFor } from "./views";

export interface Transport {
  send(frame: string): void;
  onFrame(cb: (frame: string) => void): void;
}

interface Envelope {
  "global-seq": number;
  "sender-id": string;
  "received-at": number;
  message: Record<string, unknown>;
  error?: string;
}

export type Role = "presenter" | "audience";

export class CollabClient {
  readonly clientId: string;
  readonly role: Role;
  readonly registry = new UiRegistry();
  readonly states = new Map<string, MediaState>();
  readonly views = new Map<string, MediaBlockView>();
  readonly captures = new Map<string, CaptureLayer>();
  /** Every media event frame this client has sent; tests count these. */
  readonly sent: string[] = [];
  joined = false;
  replayMode = false;
  private transport: Transport;
  /** Per-sender counter for submitted events; the server rejects gaps. */
  private seq = 0;

  constructor(clientId: string, role: Role, transport: Transport) {
    this.clientId = clientId;
    this.role = role;
    this.transport = transport;
    transport.onFrame((frame) => this.handleFrame(frame));
  }

  join(sessionId: string): void {
    // The join handshake and resync requests bypass the submission sequencer,
    // so they do not consume per-sender seq ids.
    const msg: ControlEventMessage = {
      kind: "control-event",
      controlType: "join",
      seqId: 0,
      timestamp: 0,
      description: `${this.clientId} joining`,
      data: { "session-id": sessionId, "client-id": this.clientId, role: this.role },
    };
    this.transport.send(serialize(msg));
  }

  /** Declare a new media block (presenter action); echoed back to everyone. */
  addMaterial(mediaId: string, mediaType: MediaType, source: string): void {
    const msg: ControlEventMessage = {
      kind: "control-event",
      controlType: "add-material",
      seqId: this.seq,
      timestamp: 0,
      description: `add ${mediaType} block`,
      data: { "media-id": mediaId, "media-type": mediaType, source },
    };
    this.seq += 1;
    this.transport.send(serialize(msg));
  }

  /** Serialized state of one block — the equality probe used by tests. */
  probeState(mediaId: string): string {
    const state = this.states.get(mediaId);
    if (!state) throw new Error(`no block ${mediaId}`);
    return serializeState(state);
  }

  probeAll(): Record<string, string> {
    const out: Record<string, string> = {};
    for (const id of [...this.states.keys()].sort()) out[id] = this.probeState(id);
    return out;
  }

  /** Capture callback: optimistic local application, then send. */
  emitLocal = (partial: {
    mediaType: MediaType; mediaId: string; eventType: string;
    description: string; data?: DataMap;
  }): void => {
    const msg: MediaEventMessage = {
      kind: "media-event",
      mediaType: partial.mediaType,
      mediaId: partial.mediaId,
      eventType: partial.eventType,
      seqId: this.seq,
      timestamp: Date.now() % 1_000_000_000,
      description: partial.description,
      ...(partial.data !== undefined ? { data: partial.data } : {}),
    };
    const state = this.states.get(msg.mediaId);
    if (state) {
      try {
        this.applyToView(applyEvent(state, msg), msg, true);
      } catch (err) {
        if (!(err instanceof EventRejected)) throw err;
        return; // invalid locally; never send what the server would refuse
      }
    }
    this.seq += 1;
    const frame = serialize(msg);
    this.sent.push(frame);
    this.transport.send(frame);
  };

  private mountBlock(mediaId: string, mediaType: MediaType, state: MediaState): void {
    this.states.set(mediaId, state);
    const view = new MediaBlockView(this.registry, mediaId, mediaType);
    this.views.set(mediaId, view);
    const capture = new CaptureLayer(view, this.emitLocal);
    capture.enabled = !this.replayMode;
    this.captures.set(mediaId, capture);
  }

  private applyToView(newState: MediaState, msg: MediaEventMessage,
                      optimistic: boolean): void {
    const view = this.views.get(msg.mediaId);
    const capture = this.captures.get(msg.mediaId);
    if (!optimistic) this.states.set(msg.mediaId, newState);
    if (!view || !capture) {
      this.requestResync(msg.mediaId);
      return;
    }
    capture.suppressed = true;
    try {
      for (const d of directivesFor(msg, newState)) {
        if (!view.applyDirective(d)) this.requestResync(msg.mediaId);
      }
    } finally {
      capture.suppressed = false;
    }
  }

  private requestResync(mediaId: string): void {
    const msg: ControlEventMessage = {
      kind: "control-event",
      controlType: "resync",
      seqId: 0,
      timestamp: 0,
      description: "request block state",
      data: { "media-id": mediaId },
    };
    this.transport.send(serialize(msg));
  }

  private handleControl(msg: ControlEventMessage): void {
    const data = msg.data ?? {};
    if (msg.controlType === "add-material") {
      const mediaId = data["media-id"] as string;
      const mediaType = data["media-type"] as MediaType;
      this.mountBlock(mediaId, mediaType,
                      initialState(mediaId, mediaType, data.source as string));
    } else if (msg.controlType === "resync" && typeof data["media-state"] === "string") {
      const state = parseState(data["media-state"]);
      if (this.states.has(state.mediaId)) {
        this.states.set(state.mediaId, state);
      } else {
        this.mountBlock(state.mediaId, state.mediaType, state);
      }
    } else if (msg.controlType === "start-replay") {
      this.replayMode = true;
      for (const c of this.captures.values()) c.enabled = false;
    } else if (msg.controlType === "end-replay") {
      this.replayMode = false;
      for (const c of this.captures.values()) c.enabled = true;
    }
  }

  private handleFrame(frame: string): void {
    const obj = JSON.parse(frame) as Record<string, unknown>;
    if (obj.kind === "join-ack") {
      this.joined = true;
      const states = (obj.states ?? {}) as Record<string, string>;
      for (const text of Object.values(states)) {
        const state = parseState(text);
        this.mountBlock(state.mediaId, state.mediaType, state);
      }
      return;
    }
    if (obj.kind === "submit-ack" || obj.kind === "error") return;
    if (obj.kind === "control-event") {
      // direct reply (resync payload), not part of the broadcast order
      this.handleControl(deserialize(frame) as ControlEventMessage);
      return;
    }
    const envelope = obj as unknown as Envelope;
    if (envelope.message === undefined) return;
    if (envelope.error !== undefined) return; // error-marked: ordered but stateless
    const msg: EventMessage = deserialize(canonicalOf(envelope.message));
    if (msg.kind === "control-event") {
      this.handleControl(msg);
      return;
    }
    const state = this.states.get(msg.mediaId);
    if (!state) {
      this.requestResync(msg.mediaId);
      return;
    }
    try {
      this.applyToView(applyEvent(state, msg), msg, false);
    } catch (err) {
      if (!(err instanceof EventRejected)) throw err;
      this.requestResync(msg.mediaId);
    }
  }
}

function canonicalOf(message: Record<string, unknown>): string {
  // Envelope payloads arrive re-parsed; rebuild the canonical frame before
  // running it through the strict deserializer.
  const order = message.kind === "media-event"
    ? ["kind", "media-type", "media-id", "event-type", "seq-id", "timestamp", "description", "data"]
    : ["kind", "control-type", "seq-id", "timestamp", "description", "data"];
  const parts: string[] = [];
  for (const key of order) {
    if (!(key in message)) continue;
    parts.push(`${JSON.stringify(key)}:${canonicalJson(message[key])}`);
  }
  return `{${parts.join(",")}}`;
}
