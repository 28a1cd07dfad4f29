// Media block views: one mounted view per media id, with the overlay/control
// elements the capture layer listens on, and directive application driven by
// received events.  Directive application sets absolute values, so applying
// the echo of an optimistically applied event is a no-op on the view.

import { UiElement, UiRegistry } from "./dom";
import { MediaEventMessage } from "./protocol";
import { MediaState } from "./state";

export interface Directive {
  op: string;
  element: string;
  [key: string]: unknown;
}

const CONTROL_ELEMENTS: Record<string, string[]> = {
  video: ["play", "pause", "seek", "set-volume", "toggle-mute", "set-rate", "progress"],
  image: ["surface"],
  pdf: ["page-next", "page-prev", "surface"],
  webpage: ["frame"],
  whiteboard: ["surface"],
};

export class MediaBlockView {
  readonly mediaId: string;
  readonly mediaType: string;
  /** Mutable display properties; probes read these, never pixels. */
  readonly props: Record<string, unknown> = {};
  readonly registry: UiRegistry;
  /** Proportional box the capture layer normalizes coordinates against. */
  width = 800;
  height = 600;

  constructor(registry: UiRegistry, mediaId: string, mediaType: string) {
    this.registry = registry;
    this.mediaId = mediaId;
    this.mediaType = mediaType;
    for (const name of CONTROL_ELEMENTS[mediaType] ?? []) {
      registry.create(`${mediaId}:${name}`);
    }
    registry.create(mediaId);
  }

  element(name?: string): UiElement | undefined {
    return this.registry.get(name ? `${this.mediaId}:${name}` : this.mediaId);
  }

  /**
   * Apply one directive.  Returns false when the target element is missing,
   * which the client turns into a resync request for this block.
   */
  applyDirective(d: Directive): boolean {
    const el = this.registry.get(d.element);
    if (!el) return false;
    switch (d.op) {
      case "trigger-click":
        el.click();
        break;
      case "set-slider":
        el.value = d.value as number;
        this.props[d.element.split(":")[1] ?? d.element] = d.value;
        break;
      case "set-zoom":
        this.props.zoom = d.value;
        break;
      case "set-center":
        this.props.center = [d.x, d.y];
        break;
      case "set-scroll":
        this.props.scroll = d.value;
        break;
      case "render-stroke":
        this.props.lastStroke = d.stroke_id;
        break;
      case "remove-stroke":
        this.props.lastErased = d.stroke_id;
        break;
      case "add-comment":
        this.props.lastComment = { page: d.page, text: d.text };
        break;
      case "load-url":
        this.props.url = d.url;
        this.props.scroll = 0;
        break;
      case "apply-highlight":
        this.props.lastHighlight = d.selector;
        break;
      default:
        return false;
    }
    return true;
  }
}

const elementId = (msg: MediaEventMessage) => `${msg.mediaId}:${msg.eventType}`;

/**
 * Directives a received event implies, mirroring the server-side handler
 * leaves: click-style controls trigger the bound element, continuous ones
 * carry the authoritative post-event value.
 */
export function directivesFor(msg: MediaEventMessage, newState: MediaState): Directive[] {
  const data = msg.data ?? {};
  const e = newState.entries;
  switch (msg.eventType) {
    case "play":
    case "pause":
    case "toggle-mute":
    case "page-next":
    case "page-prev":
      return [{ op: "trigger-click", element: elementId(msg) }];
    case "seek":
      return [
        { op: "trigger-click", element: elementId(msg) },
        { op: "set-slider", element: `${msg.mediaId}:progress`, value: e.current_time },
      ];
    case "set-volume":
      return [{ op: "set-slider", element: elementId(msg), value: e.volume }];
    case "set-rate":
      return [{ op: "set-slider", element: elementId(msg), value: e.playback_rate }];
    case "mouse-scroll":
      return [{ op: "set-zoom", element: msg.mediaId, value: e.zoom }];
    case "move":
      return [{ op: "set-center", element: msg.mediaId, x: e.center_x, y: e.center_y }];
    case "draw":
      return [{ op: "render-stroke", element: msg.mediaId, stroke_id: data.stroke_id }];
    case "erase":
      return [{ op: "remove-stroke", element: msg.mediaId, stroke_id: data.stroke_id }];
    case "scroll":
      return [{ op: "set-scroll", element: msg.mediaId, value: e.scroll }];
    case "comment":
      return [{ op: "add-comment", element: msg.mediaId, page: data.page, text: data.text }];
    case "navigate":
      return [{ op: "load-url", element: msg.mediaId, url: data.url }];
    case "highlight":
      return [{ op: "apply-highlight", element: msg.mediaId, selector: data.selector }];
    default:
      return [];
  }
}
