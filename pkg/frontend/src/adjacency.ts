// Client-side recomputation of connectivity edges from agent positions.
// Mirrors the simulator's proximity weighting: exp(1 - d^2/R^2) - 1 inside
// range, zero at and beyond it, so an edge exists exactly when d < R.

import { Vec2 } from "./protocol.js";

export function weight(dist: number, R: number): number {
  if (dist > R) return 0;
  return Math.exp(1 - (dist * dist) / (R * R)) - 1;
}

export interface Edge {
  i: number;
  j: number;
  w: number;
}

export function edges(positions: Vec2[], R: number): Edge[] {
  const out: Edge[] = [];
  for (let i = 0; i < positions.length; i++) {
    for (let j = i + 1; j < positions.length; j++) {
      const dx = positions[i][0] - positions[j][0];
      const dy = positions[i][1] - positions[j][1];
      const w = weight(Math.hypot(dx, dy), R);
      if (w > 0) out.push({ i, j, w });
    }
  }
  return out;
}
