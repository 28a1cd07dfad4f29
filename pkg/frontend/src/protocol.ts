// Wire codec for collaboration event messages, matching the session server's
// canonical JSON byte-for-byte: fixed top-level key order, no whitespace,
// numbers with at most six fractional digits and trailing zeros trimmed.

export const MEDIA_TYPES = ["video", "image", "pdf", "webpage", "whiteboard"] as const;
export const CONTROL_TYPES = [
  "resync", "join", "leave", "add-material", "start-replay", "end-replay",
] as const;

export type MediaType = (typeof MEDIA_TYPES)[number];
export type ControlType = (typeof CONTROL_TYPES)[number];

export type Scalar = boolean | number | string;
export type DataMap = { [key: string]: Scalar | Scalar[] };

export interface MediaEventMessage {
  kind: "media-event";
  mediaType: MediaType;
  mediaId: string;
  eventType: string;
  seqId: number;
  timestamp: number;
  description: string;
  data?: DataMap;
}

export interface ControlEventMessage {
  kind: "control-event";
  controlType: ControlType;
  seqId: number;
  timestamp: number;
  description: string;
  data?: DataMap;
}

export type EventMessage = MediaEventMessage | ControlEventMessage;

export class ProtocolError extends Error {}
export class EncodeError extends ProtocolError {}
export class ParseError extends ProtocolError {}

/** Round to the wire resolution (1e-6) so encoding is lossless. */
export function quantize(value: number): number {
  if (!Number.isFinite(value)) throw new EncodeError(`non-finite number ${value}`);
  const q = Math.round(value * 1e6) / 1e6;
  return q === 0 ? 0 : q;
}

/** Canonical decimal text: at most six fractional digits, no trailing zeros. */
export function formatNumber(value: number): string {
  if (!Number.isFinite(value)) throw new EncodeError(`non-finite number ${value}`);
  if (Number.isInteger(value)) return String(value);
  let text = value.toFixed(6);
  text = text.replace(/0+$/, "").replace(/\.$/, "");
  if (text === "" || text === "-0") text = "0";
  return text;
}

function encodeValue(value: unknown, parts: string[]): void {
  if (typeof value === "boolean") {
    parts.push(value ? "true" : "false");
  } else if (typeof value === "number") {
    parts.push(formatNumber(value));
  } else if (typeof value === "string") {
    parts.push(JSON.stringify(value));
  } else if (Array.isArray(value)) {
    parts.push("[");
    value.forEach((item, i) => {
      if (i) parts.push(",");
      encodeValue(item, parts);
    });
    parts.push("]");
  } else if (value !== null && typeof value === "object") {
    parts.push("{");
    Object.keys(value).sort().forEach((key, i) => {
      if (i) parts.push(",");
      parts.push(JSON.stringify(key), ":");
      encodeValue((value as Record<string, unknown>)[key], parts);
    });
    parts.push("}");
  } else {
    throw new EncodeError(`unencodable value ${String(value)}`);
  }
}

/** Canonical JSON text for a plain value tree; object keys sorted. */
export function canonicalJson(value: unknown): string {
  const parts: string[] = [];
  encodeValue(value, parts);
  return parts.join("");
}

function quantizeData(data: DataMap): DataMap {
  const out: DataMap = {};
  for (const key of Object.keys(data)) {
    const value = data[key];
    if (Array.isArray(value)) {
      out[key] = value.map((v) => (typeof v === "number" ? quantize(v) : v));
    } else {
      out[key] = typeof value === "number" ? quantize(value) : value;
    }
  }
  return out;
}

function checkCommon(msg: EventMessage): void {
  if (!Number.isInteger(msg.seqId) || msg.seqId < 0) {
    throw new EncodeError("seq-id must be a non-negative integer");
  }
  if (!Number.isInteger(msg.timestamp) || msg.timestamp < 0) {
    throw new EncodeError("timestamp must be a non-negative integer");
  }
  if (typeof msg.description !== "string") {
    throw new EncodeError("description must be a string");
  }
}

export function validateMessage(msg: EventMessage): void {
  if (msg.kind === "media-event") {
    if (!(MEDIA_TYPES as readonly string[]).includes(msg.mediaType)) {
      throw new EncodeError(`unknown media-type ${msg.mediaType}`);
    }
    if (!msg.mediaId) throw new EncodeError("media-id must be a non-empty string");
    if (!msg.eventType) throw new EncodeError("event-type must be a non-empty string");
  } else if (msg.kind === "control-event") {
    if (!(CONTROL_TYPES as readonly string[]).includes(msg.controlType)) {
      throw new EncodeError(`unknown control-type ${msg.controlType}`);
    }
  } else {
    throw new EncodeError("unknown kind tag");
  }
  checkCommon(msg);
}

/** Canonical wire encoding; equal messages produce identical strings. */
export function serialize(msg: EventMessage): string {
  validateMessage(msg);
  const parts: string[] = ['{"kind":', JSON.stringify(msg.kind)];
  const ordered: [string, unknown][] =
    msg.kind === "media-event"
      ? [["media-type", msg.mediaType], ["media-id", msg.mediaId],
         ["event-type", msg.eventType], ["seq-id", msg.seqId],
         ["timestamp", msg.timestamp], ["description", msg.description]]
      : [["control-type", msg.controlType], ["seq-id", msg.seqId],
         ["timestamp", msg.timestamp], ["description", msg.description]];
  for (const [name, value] of ordered) {
    parts.push(`,"${name}":`);
    encodeValue(value, parts);
  }
  if (msg.data !== undefined) {
    parts.push(',"data":');
    encodeValue(quantizeData(msg.data), parts);
  }
  parts.push("}");
  return parts.join("");
}

function popField<T>(obj: Record<string, unknown>, name: string,
                     check: (v: unknown) => v is T): T {
  if (!(name in obj)) throw new ParseError(`missing required field ${name}`);
  const value = obj[name];
  delete obj[name];
  if (!check(value)) throw new ParseError(`field ${name} has wrong type`);
  return value;
}

const isString = (v: unknown): v is string => typeof v === "string";
const isInt = (v: unknown): v is number => Number.isInteger(v);

function checkDataMap(value: unknown): DataMap {
  if (value === null || typeof value !== "object" || Array.isArray(value)) {
    throw new ParseError("data must be a map");
  }
  for (const [key, v] of Object.entries(value)) {
    if (!key) throw new ParseError("data keys must be non-empty strings");
    const items = Array.isArray(v) ? v : [v];
    for (const item of items) {
      if (!["boolean", "number", "string"].includes(typeof item)) {
        throw new ParseError(`data key ${key} has a non-scalar value`);
      }
    }
  }
  return value as DataMap;
}

/** Inverse of serialize; only canonical encodings of valid messages parse. */
export function deserialize(raw: string): EventMessage {
  if (!raw) throw new ParseError("missing document");
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch (err) {
    throw new ParseError(`malformed message: ${String(err)}`);
  }
  if (parsed === null || typeof parsed !== "object" || Array.isArray(parsed)) {
    throw new ParseError("message must be a JSON object");
  }
  const obj = { ...(parsed as Record<string, unknown>) };
  const kind = popField(obj, "kind", isString);
  let msg: EventMessage;
  if (kind === "media-event") {
    msg = {
      kind,
      mediaType: popField(obj, "media-type", isString) as MediaType,
      mediaId: popField(obj, "media-id", isString),
      eventType: popField(obj, "event-type", isString),
      seqId: popField(obj, "seq-id", isInt),
      timestamp: popField(obj, "timestamp", isInt),
      description: popField(obj, "description", isString),
    };
  } else if (kind === "control-event") {
    msg = {
      kind,
      controlType: popField(obj, "control-type", isString) as ControlType,
      seqId: popField(obj, "seq-id", isInt),
      timestamp: popField(obj, "timestamp", isInt),
      description: popField(obj, "description", isString),
    };
  } else {
    throw new ParseError(`unknown kind tag ${kind}`);
  }
  if ("data" in obj) {
    msg.data = checkDataMap(obj.data);
    delete obj.data;
  }
  const leftover = Object.keys(obj);
  if (leftover.length) throw new ParseError(`unexpected field ${leftover.sort()[0]}`);
  try {
    validateMessage(msg);
  } catch (err) {
    throw new ParseError((err as Error).message);
  }
  if (serialize(msg) !== raw) {
    throw new ParseError("non-canonical encoding (key order, whitespace, or number format)");
  }
  return msg;
}
