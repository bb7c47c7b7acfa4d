// World <-> screen mapping. World y points up, screen y points down.

export interface Viewport {
  centerX: number;
  centerY: number;
  halfSpan: number; // world half-width of the shorter screen dimension
  width: number; // canvas pixels
  height: number;
}

export function defaultViewport(width: number, height: number): Viewport {
  return { centerX: 0, centerY: 0, halfSpan: 2, width, height };
}

export function scale(vp: Viewport): number {
  return Math.min(vp.width, vp.height) / (2 * vp.halfSpan);
}

export function worldToScreen(vp: Viewport, wx: number, wy: number): [number, number] {
  const s = scale(vp);
  return [vp.width / 2 + (wx - vp.centerX) * s, vp.height / 2 - (wy - vp.centerY) * s];
}

export function screenToWorld(vp: Viewport, sx: number, sy: number): [number, number] {
  const s = scale(vp);
  return [vp.centerX + (sx - vp.width / 2) / s, vp.centerY - (sy - vp.height / 2) / s];
}

// Zoom about a fixed screen point so the world point under the cursor stays put.
export function zoomAt(vp: Viewport, sx: number, sy: number, factor: number): Viewport {
  const [wx, wy] = screenToWorld(vp, sx, sy);
  const halfSpan = Math.min(50, Math.max(0.1, vp.halfSpan * factor));
  const out = { ...vp, halfSpan };
  const [nx, ny] = screenToWorld(out, sx, sy);
  out.centerX += wx - nx;
  out.centerY += wy - ny;
  return out;
}
