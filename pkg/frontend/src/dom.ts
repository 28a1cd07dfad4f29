// Minimal element abstraction the views and capture layer are written
// against.  In a browser these are real DOM nodes; tests use this in-memory
// implementation directly.

export type Listener = (ev: NativeEvent) => void;

export interface NativeEvent {
  type: string;
  target?: string;
  deltaY?: number;
  clientX?: number;
  clientY?: number;
  [key: string]: unknown;
}

export class UiElement {
  readonly id: string;
  value: number | string | boolean = 0;
  private listeners = new Map<string, Listener[]>();

  constructor(id: string) {
    this.id = id;
  }

  addEventListener(type: string, fn: Listener): void {
    const list = this.listeners.get(type) ?? [];
    list.push(fn);
    this.listeners.set(type, list);
  }

  dispatchEvent(ev: NativeEvent): void {
    for (const fn of this.listeners.get(ev.type) ?? []) fn({ ...ev, target: this.id });
  }

  click(): void {
    this.dispatchEvent({ type: "click" });
  }
}

export class UiRegistry {
  private elements = new Map<string, UiElement>();

  create(id: string): UiElement {
    const el = new UiElement(id);
    this.elements.set(id, el);
    return el;
  }

  get(id: string): UiElement | undefined {
    return this.elements.get(id);
  }
}
