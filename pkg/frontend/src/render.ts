// Canvas renderer.  Draws against a minimal 2D-context interface so tests can
// substitute a recording fake; the browser passes the real
// CanvasRenderingContext2D, which satisfies it structurally.

import { edges } from "./adjacency.js";
import { Viewport, scale, worldToScreen } from "./transform.js";
import { ViewModel } from "./viewmodel.js";

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

const AGENT_COLORS = ["#e4572e", "#17bebb", "#ffc914", "#76b041", "#8d6a9f",
                      "#4f86c6", "#d81159", "#2e933c"];
const SPARK_HEIGHT = 90;

export function renderFrame(vm: ViewModel, ctx: Ctx2D, vp: Viewport): void {
  ctx.globalAlpha = 1;
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, vp.width, vp.height);
  if (vm.status !== "open" || !vm.hello) {
    banner(ctx, vp, vm.status === "connecting" ? "connecting..." : "disconnected", "#b33");
    return;
  }
  const frame = vm.frame;
  if (!frame) {
    banner(ctx, vp, "waiting for first state frame", "#888");
    return;
  }
  const { R, r_agent } = vm.hello.params;
  const s = scale(vp);

  // connectivity edges, recomputed locally from positions
  ctx.lineWidth = 1;
  for (const e of edges(frame.positions, R)) {
    const [x1, y1] = worldToScreen(vp, ...frame.positions[e.i]);
    const [x2, y2] = worldToScreen(vp, ...frame.positions[e.j]);
    ctx.strokeStyle = "#3d4c5a";
    ctx.globalAlpha = Math.min(1, 0.25 + e.w);
    ctx.beginPath();
    ctx.moveTo(x1, y1);
    ctx.lineTo(x2, y2);
    ctx.stroke();
  }
  ctx.globalAlpha = 1;

  // reference markers
  frame.refs.forEach(([rx, ry], i) => {
    const [x, y] = worldToScreen(vp, rx, ry);
    ctx.strokeStyle = AGENT_COLORS[i % AGENT_COLORS.length];
    ctx.lineWidth = 1;
    cross(ctx, x, y, 5);
  });

  // agents as discs at world scale, priority ringed
  frame.positions.forEach(([px, py], i) => {
    const [x, y] = worldToScreen(vp, px, py);
    ctx.fillStyle = AGENT_COLORS[i % AGENT_COLORS.length];
    ctx.beginPath();
    ctx.arc(x, y, Math.max(2, r_agent * s), 0, 2 * Math.PI);
    ctx.fill();
    if (i === frame.priority) {
      ctx.strokeStyle = "#ffffff";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(x, y, Math.max(4, r_agent * s + 4), 0, 2 * Math.PI);
      ctx.stroke();
    }
  });

  sparkline(vm, ctx, vp);

  ctx.fillStyle = "#9ab";
  ctx.font = "12px monospace";
  ctx.fillText(`t = ${frame.t.toFixed(2)} s   priority = ${frame.priority + 1}`, 10, 16);
  if (vm.lastError) ctx.fillText(`error: ${vm.lastError}`, 10, 32);
  if (frame.halted) banner(ctx, vp, "HALTED: filter infeasible (press R to reset)", "#b33");
}

// eigenvalue history, second-smallest and up (the smallest is structurally 0)
function sparkline(vm: ViewModel, ctx: Ctx2D, vp: Viewport): void {
  const hist = vm.eigHistory;
  if (hist.length < 2) return;
  const top = vp.height - SPARK_HEIGHT - 8;
  const t1 = hist[hist.length - 1].t;
  const t0 = t1 - 10;
  const n = hist[0].eigs.length;
  let maxEig = 1e-9;
  for (const sample of hist) maxEig = Math.max(maxEig, ...sample.eigs);
  ctx.fillStyle = "#181f26";
  ctx.fillRect(0, top, vp.width, SPARK_HEIGHT);
  for (let j = 1; j < n; j++) {
    ctx.strokeStyle = AGENT_COLORS[j % AGENT_COLORS.length];
    ctx.lineWidth = 1;
    ctx.beginPath();
    hist.forEach((sample, k) => {
      const x = ((sample.t - t0) / 10) * vp.width;
      const y = top + SPARK_HEIGHT - (sample.eigs[j] / maxEig) * (SPARK_HEIGHT - 6) - 3;
      if (k === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
  const eps = vm.hello ? vm.hello.params.eps : 0;
  if (eps > 0) {
    const y = top + SPARK_HEIGHT - (eps / maxEig) * (SPARK_HEIGHT - 6) - 3;
    ctx.strokeStyle = "#b33";
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(vp.width, y);
    ctx.stroke();
  }
}

function banner(ctx: Ctx2D, vp: Viewport, text: string, color: string): void {
  ctx.fillStyle = color;
  ctx.fillRect(0, 0, vp.width, 26);
  ctx.fillStyle = "#fff";
  ctx.font = "13px monospace";
  ctx.fillText(text, 10, 17);
}

function cross(ctx: Ctx2D, x: number, y: number, r: number): void {
  ctx.beginPath();
  ctx.moveTo(x - r, y);
  ctx.lineTo(x + r, y);
  ctx.moveTo(x, y - r);
  ctx.lineTo(x, y + r);
  ctx.stroke();
}
