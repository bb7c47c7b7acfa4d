// Wire protocol of the steering bridge: JSON text frames over a websocket.

export type Vec2 = [number, number];

export interface HelloFrame {
  type: "hello";
  p: number;
  params: {
    R: number;
    eps: number;
    r_agent: number;
    k_gain: number;
    dt: number;
    priority_agent: number;
    [key: string]: unknown;
  };
}

export interface StateFrame {
  type: "state";
  t: number;
  positions: Vec2[];
  u: Vec2[];
  lap_eigs: number[];
  refs: Vec2[];
  priority: number;
  halted: boolean;
}

export interface ErrorFrame {
  type: "error";
  msg: string;
}

export type ServerMsg = HelloFrame | StateFrame | ErrorFrame;

export type ClientMsg =
  | { type: "set_target"; agent: number; target: Vec2 }
  | { type: "set_priority"; agent: number }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "reset" };

export function parseServerMsg(raw: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as { type?: unknown };
  if (msg.type === "hello" || msg.type === "state" || msg.type === "error") {
    return data as ServerMsg;
  }
  return null;
}
