// Browser entry point: socket wiring, input listeners, animation loop.

import { InputHandler } from "./input.js";
import { ClientMsg, parseServerMsg } from "./protocol.js";
import { renderFrame } from "./render.js";
import { Viewport, defaultViewport, zoomAt } from "./transform.js";
import { ViewModel } from "./viewmodel.js";

const params = new URLSearchParams(location.search);
const wsUrl = params.get("ws") ?? `ws://${location.hostname || "127.0.0.1"}:8799`;

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const vm = new ViewModel();
const input = new InputHandler(vm);
let vp: Viewport = defaultViewport(canvas.width, canvas.height);

function resize() {
  canvas.width = window.innerWidth;
  canvas.height = window.innerHeight;
  vp = { ...vp, width: canvas.width, height: canvas.height };
}
window.addEventListener("resize", resize);
resize();

let socket: WebSocket;

function send(msg: ClientMsg | null) {
  if (msg && socket.readyState === WebSocket.OPEN) socket.send(JSON.stringify(msg));
  if (msg && msg.type === "reset") vm.reset();
}

function connect() {
  socket = new WebSocket(wsUrl);
  socket.addEventListener("open", () => {
    vm.status = "open";
  });
  socket.addEventListener("close", () => {
    vm.status = "closed";
    setTimeout(connect, 1000);
  });
  socket.addEventListener("error", () => socket.close());
  socket.addEventListener("message", (ev) => {
    const msg = parseServerMsg(String(ev.data));
    if (msg) vm.pushMessage(msg);
  });
}
connect();

canvas.addEventListener("pointerdown", (ev) => {
  canvas.setPointerCapture(ev.pointerId);
  send(input.dispatch({ kind: "pointerdown", x: ev.offsetX, y: ev.offsetY }, vp));
});
canvas.addEventListener("pointermove", (ev) => {
  send(input.dispatch({ kind: "pointermove", x: ev.offsetX, y: ev.offsetY,
                        buttons: ev.buttons }, vp));
});
canvas.addEventListener("pointerup", () => send(input.dispatch({ kind: "pointerup" }, vp)));
window.addEventListener("keydown", (ev) => {
  if (ev.key === " ") ev.preventDefault();
  send(input.dispatch({ kind: "key", key: ev.key }, vp));
});
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  vp = zoomAt(vp, ev.offsetX, ev.offsetY, ev.deltaY > 0 ? 1.1 : 1 / 1.1);
});

function loop() {
  renderFrame(vm, ctx, vp);
  requestAnimationFrame(loop);
}
requestAnimationFrame(loop);
