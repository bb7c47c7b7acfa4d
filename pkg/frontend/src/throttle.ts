// Rate gate for outbound drag messages.

export class Throttle {
  private last = -Infinity;

  constructor(private minIntervalMs: number) {}

  // true if an event at time nowMs may pass the gate (and consumes the slot)
  allow(nowMs: number): boolean {
    if (nowMs - this.last >= this.minIntervalMs) {
      this.last = nowMs;
      return true;
    }
    return false;
  }
}
