// Capture fidelity: native UI events on the block views must come out as
// taxonomy-conformant messages with the right capture mode semantics.

import { describe, expect, it } from "vitest";

import { CaptureLayer, Emit } from "../src/capture";
import { UiRegistry } from "../src/dom";
import { deserialize, serialize } from "../src/protocol";
import { MediaBlockView } from "../src/views";

function captured(mediaType: string, mediaId: string) {
  const registry = new UiRegistry();
  const view = new MediaBlockView(registry, mediaId, mediaType);
  const emitted: Parameters<Emit>[0][] = [];
  const layer = new CaptureLayer(view, (partial) => emitted.push(partial));
  return { view, layer, emitted };
}

describe("capture layer", () => {
  it("object-based: play button click becomes a (video, play) event", () => {
    const { view, emitted } = captured("video", "v");
    view.element("play")!.click();
    expect(emitted).toEqual([
      { mediaType: "video", mediaId: "v", eventType: "play",
        description: "play the video", data: undefined },
    ]);
  });

  it("value-based: wheel over an image becomes mouse-scroll with the delta", () => {
    const { view, emitted } = captured("image", "image-block");
    view.element("surface")!.dispatchEvent({ type: "wheel", deltaY: 150 });
    expect(emitted).toHaveLength(1);
    const msg = { kind: "media-event" as const, seqId: 8, timestamp: 5000,
                  ...emitted[0], data: emitted[0].data };
    expect(serialize(msg)).toBe(
      '{"kind":"media-event","media-type":"image","media-id":"image-block",'
      + '"event-type":"mouse-scroll","seq-id":8,"timestamp":5000,'
      + '"description":"zoom out an image","data":{"delta":-1.5}}');
  });

  it("proportion-based: dragging to the block center becomes move (0.5, 0.5)", () => {
    const { view, emitted } = captured("image", "img");
    const surface = view.element("surface")!;
    surface.dispatchEvent({ type: "pointerdown", clientX: 10, clientY: 10 });
    surface.dispatchEvent({ type: "pointerup",
                            clientX: view.width / 2, clientY: view.height / 2 });
    expect(emitted).toEqual([
      { mediaType: "image", mediaId: "img", eventType: "move",
        description: "move the image", data: { center_x: 0.5, center_y: 0.5 } },
    ]);
  });

  it("drawing gestures batch into a draw event with normalized points", () => {
    const { view, emitted } = captured("whiteboard", "wb");
    const surface = view.element("surface")!;
    surface.dispatchEvent({ type: "drawstart" });
    surface.dispatchEvent({ type: "drawpoint", clientX: 0, clientY: 0 });
    surface.dispatchEvent({ type: "drawpoint", clientX: 400, clientY: 300 });
    surface.dispatchEvent({ type: "drawend" });
    expect(emitted).toEqual([
      { mediaType: "whiteboard", mediaId: "wb", eventType: "draw",
        description: "draw on the whiteboard",
        data: { stroke_id: "wb-s1", points: [0, 0, 0.5, 0.5] } },
    ]);
    // the emitted payload serializes into a valid taxonomy message
    const frame = serialize({ kind: "media-event", seqId: 0, timestamp: 0, ...emitted[0] });
    expect(deserialize(frame).kind).toBe("media-event");
  });

  it("emits nothing while suppressed or in replay mode", () => {
    const { view, layer, emitted } = captured("video", "v");
    layer.suppressed = true;
    view.element("play")!.click();
    layer.suppressed = false;
    layer.enabled = false;
    view.element("pause")!.click();
    expect(emitted).toEqual([]);
  });

  it("ignores events outside the taxonomy", () => {
    const { view, emitted } = captured("video", "v");
    view.element("play")!.dispatchEvent({ type: "dblclick" });
    view.element()!.dispatchEvent({ type: "hover" });
    expect(emitted).toEqual([]);
  });
});
