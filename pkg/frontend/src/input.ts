// Pointer/keyboard events -> outbound protocol messages.
//
// Click on an agent selects it as the priority agent; dragging anywhere sets
// the selected agent's target to the cursor's world position, throttled to at
// most 30 messages per second.  Space toggles pause/resume, "r" resets.
// Everything is ignored while disconnected.

import { ClientMsg } from "./protocol.js";
import { Throttle } from "./throttle.js";
import { Viewport, screenToWorld, scale } from "./transform.js";
import { ViewModel } from "./viewmodel.js";

export type InputEvent =
  | { kind: "pointerdown"; x: number; y: number }
  | { kind: "pointermove"; x: number; y: number; buttons: number }
  | { kind: "pointerup" }
  | { kind: "key"; key: string };

const DRAG_RATE_LIMIT_MS = 1000 / 30;
const PICK_SLOP_PX = 4; // clicking slightly off a small disc still picks it

export class InputHandler {
  private dragging = false;
  private paused = false;
  private throttle = new Throttle(DRAG_RATE_LIMIT_MS);

  constructor(private vm: ViewModel, private now: () => number = () => performance.now()) {}

  private pickAgent(vp: Viewport, sx: number, sy: number): number | null {
    const frame = this.vm.frame;
    const hello = this.vm.hello;
    if (!frame || !hello) return null;
    const rPx = hello.params.r_agent * scale(vp) + PICK_SLOP_PX;
    const [wx, wy] = screenToWorld(vp, sx, sy);
    const s = scale(vp);
    let best: number | null = null;
    let bestD = Infinity;
    frame.positions.forEach(([px, py], i) => {
      const d = Math.hypot(px - wx, py - wy) * s;
      if (d <= rPx && d < bestD) {
        best = i;
        bestD = d;
      }
    });
    return best;
  }

  dispatch(ev: InputEvent, vp: Viewport): ClientMsg | null {
    if (this.vm.status !== "open") return null;
    switch (ev.kind) {
      case "pointerdown": {
        const hit = this.pickAgent(vp, ev.x, ev.y);
        this.dragging = true;
        if (hit !== null) {
          this.vm.selected = hit;
          return { type: "set_priority", agent: hit };
        }
        return this.dragTarget(ev.x, ev.y, vp);
      }
      case "pointermove": {
        if (!this.dragging || (ev.buttons & 1) === 0) return null;
        return this.dragTarget(ev.x, ev.y, vp);
      }
      case "pointerup":
        this.dragging = false;
        return null;
      case "key":
        if (ev.key === " ") {
          if (this.vm.frame?.halted) return null; // halted sessions resume via reset
          this.paused = !this.paused;
          return { type: this.paused ? "pause" : "resume" };
        }
        if (ev.key === "r" || ev.key === "R") {
          this.paused = false;
          return { type: "reset" };
        }
        return null;
    }
  }

  private dragTarget(sx: number, sy: number, vp: Viewport): ClientMsg | null {
    if (!this.throttle.allow(this.now())) return null;
    const [wx, wy] = screenToWorld(vp, sx, sy);
    return { type: "set_target", agent: this.vm.selected, target: [wx, wy] };
  }
}
