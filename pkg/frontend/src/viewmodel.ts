// Client state between socket and renderer.  The socket callbacks only mutate
// this object; rendering happens on animation frames and never blocks on the
// network.  Stale frames (older sim time than the latest) are dropped.

import { HelloFrame, ServerMsg, StateFrame } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface EigSample {
  t: number;
  eigs: number[];
}

const HISTORY_SECONDS = 10;

export class ViewModel {
  status: ConnectionStatus = "connecting";
  hello: HelloFrame | null = null;
  frame: StateFrame | null = null;
  selected = 0; // agent the next drag steers; follows set_priority clicks
  lastError = "";
  eigHistory: EigSample[] = [];

  get agentCount(): number {
    return this.hello ? this.hello.p : 0;
  }

  pushMessage(msg: ServerMsg): void {
    if (msg.type === "hello") {
      this.hello = msg;
      this.selected = msg.params.priority_agent ?? 0;
      return;
    }
    if (msg.type === "error") {
      this.lastError = msg.msg;
      return;
    }
    this.pushFrame(msg);
  }

  pushFrame(frame: StateFrame): void {
    if (this.frame && frame.t < this.frame.t) return; // stale, newest wins
    this.frame = frame;
    const hist = this.eigHistory;
    if (hist.length === 0 || frame.t > hist[hist.length - 1].t) {
      hist.push({ t: frame.t, eigs: frame.lap_eigs.slice() });
      const cutoff = frame.t - HISTORY_SECONDS;
      while (hist.length > 0 && hist[0].t < cutoff) hist.shift();
    }
  }

  reset(): void {
    this.frame = null;
    this.eigHistory = [];
    this.lastError = "";
  }
}
