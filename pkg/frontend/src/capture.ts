// Capture layer: translates native UI events on a media block into taxonomy
// messages.  Three modes: object-based (a control element was operated),
// proportion-based (coordinates normalized to the block's box), value-based
// (a scalar delta).  While the client applies remote directives the layer is
// suppressed, so replaying a peer's action never re-emits it.

import { NativeEvent } from "./dom";
import { DataMap, MediaType, quantize } from "./protocol";
import { MediaBlockView } from "./views";

export type Emit = (partial: {
  mediaType: MediaType;
  mediaId: string;
  eventType: string;
  description: string;
  data?: DataMap;
}) => void;

export class CaptureLayer {
  suppressed = false;
  /** In replay viewing mode capture is disabled outright. */
  enabled = true;
  private emit: Emit;
  private view: MediaBlockView;
  private dragStart: { x: number; y: number } | null = null;
  private strokePoints: number[] = [];
  private strokeCounter = 0;

  constructor(view: MediaBlockView, emit: Emit) {
    this.view = view;
    this.emit = emit;
    this.attach();
  }

  private send(eventType: string, description: string, data?: DataMap): void {
    if (this.suppressed || !this.enabled) return;
    this.emit({
      mediaType: this.view.mediaType as MediaType,
      mediaId: this.view.mediaId,
      eventType,
      description,
      data,
    });
  }

  private norm(ev: NativeEvent): { x: number; y: number } {
    return {
      x: quantize(Math.min(1, Math.max(0, (ev.clientX ?? 0) / this.view.width))),
      y: quantize(Math.min(1, Math.max(0, (ev.clientY ?? 0) / this.view.height))),
    };
  }

  private attach(): void {
    const on = (name: string, type: string, fn: (ev: NativeEvent) => void) => {
      this.view.element(name)?.addEventListener(type, fn);
    };

    if (this.view.mediaType === "video") {
      on("play", "click", () => this.send("play", "play the video"));
      on("pause", "click", () => this.send("pause", "pause the video"));
      on("toggle-mute", "click", () => this.send("toggle-mute", "toggle mute"));
      on("seek", "change", (ev) =>
        this.send("seek", "seek the video", { current_time: ev.value as number }));
      on("set-volume", "change", (ev) =>
        this.send("set-volume", "change the volume", { volume: ev.value as number }));
      on("set-rate", "change", (ev) =>
        this.send("set-rate", "change playback rate", { rate: ev.value as number }));
      this.attachDrawing("annotate the video");
    } else if (this.view.mediaType === "image") {
      on("surface", "wheel", (ev) => {
        const delta = quantize(-(ev.deltaY ?? 0) / 100);
        this.send("mouse-scroll",
                  delta < 0 ? "zoom out an image" : "zoom in an image",
                  { delta });
      });
      on("surface", "pointerdown", (ev) => { this.dragStart = this.norm(ev); });
      on("surface", "pointerup", (ev) => {
        if (!this.dragStart) return;
        const end = this.norm(ev);
        this.dragStart = null;
        this.send("move", "move the image", { center_x: end.x, center_y: end.y });
      });
      this.attachDrawing("annotate the image");
    } else if (this.view.mediaType === "pdf") {
      on("page-next", "click", () => this.send("page-next", "next page"));
      on("page-prev", "click", () => this.send("page-prev", "previous page"));
      on("surface", "scroll", (ev) =>
        this.send("scroll", "scroll the document", { scroll: ev.value as number }));
    } else if (this.view.mediaType === "webpage") {
      on("frame", "scroll", (ev) =>
        this.send("scroll", "scroll the page", { scroll: ev.value as number }));
      on("frame", "navigate", (ev) =>
        this.send("navigate", "open a page", { url: ev.url as string }));
    } else if (this.view.mediaType === "whiteboard") {
      this.attachDrawing("draw on the whiteboard");
    }
  }

  private attachDrawing(description: string): void {
    const surface = this.view.element("surface") ?? this.view.element();
    if (!surface) return;
    surface.addEventListener("drawstart", () => {
      this.strokePoints = [];
      this.strokeCounter += 1;
    });
    surface.addEventListener("drawpoint", (ev) => {
      const p = this.norm(ev);
      this.strokePoints.push(p.x, p.y);
    });
    surface.addEventListener("drawend", () => {
      if (!this.strokePoints.length) return;
      this.send("draw", description, {
        stroke_id: `${this.view.mediaId}-s${this.strokeCounter}`,
        points: this.strokePoints,
      });
      this.strokePoints = [];
    });
  }
}
