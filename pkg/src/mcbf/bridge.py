"""Realtime steering bridge: advances the simulation at a fixed rate, streams
state frames over a websocket, and applies user reference/priority updates
between steps.

The session logic is plain synchronous code (fully testable by feeding it
message dicts); the websocket layer on top only moves JSON in and out.  Two
activities communicate exclusively through an inbound message queue and an
outbound broadcast: shared mutable state lives in the tick loop alone.
Reference updates are applied between steps, never mid-step, and sim time is
authoritative: if solving falls behind the wall clock, frames lag, the step
size never changes.
"""

from __future__ import annotations

import asyncio
import errno
import json
import logging
from typing import Optional

import numpy as np

from .errors import ConfigError, PortInUse
from .scenarios import connectivity_scenario
from .sim import Trace, evaluate_step, step, trace_header

log = logging.getLogger("mcbf.bridge")

FRAME_RATE = 60.0  # broadcast ceiling, frames per second


class SteerSession:
    """One authoritative simulation clock plus mutable references and priority.

    In a steering session every reference is a static point with zero
    feed-forward rate; the initial points are the scenario references at t=0.
    """

    def __init__(self, cfg):
        if cfg.scenario not in ("connectivity", "custom"):
            raise ConfigError("steering drives the connectivity scenarios only")
        if cfg.filter_variant == "none":
            raise ConfigError("steering without a filter defeats the point; pick a variant")
        self.cfg = cfg
        from .scenarios import five_agent_references

        if cfg.scenario == "connectivity":
            positions = (np.asarray(cfg.initial_positions, dtype=float)
                         if cfg.initial_positions is not None
                         else five_agent_references(0.0)[0])
            init_refs = five_agent_references(0.0)[0]
        else:
            positions = np.asarray(cfg.initial_positions, dtype=float)
            init_refs = np.asarray(cfg.targets if cfg.targets is not None
                                   else cfg.initial_positions, dtype=float)
        self._initial_refs = np.array(init_refs, dtype=float)
        self.refs = self._initial_refs.copy()
        self.scn = connectivity_scenario(
            cfg.conn, cfg.filter_variant, classK=cfg.classK, c_perp=cfg.c_perp,
            initial_positions=positions,
            refs_fn=lambda t: (self.refs, np.zeros_like(self.refs)),
            extra_pins=cfg.extra_pins, name=cfg.scenario)
        self._initial_priority = self.scn.priority_agent
        self.state = self.scn.initial_state
        self.step_index = 0
        self.paused = False
        self.halted = False
        self.records = []
        self._solver = cfg.sim.solver
        self._dt = cfg.sim.dt

    @property
    def p(self) -> int:
        return self.scn.p

    @property
    def sim_time(self) -> float:
        return self.step_index * self._dt

    def handle_message(self, msg) -> Optional[dict]:
        """Apply one client message; returns an error frame or None on success."""
        if not isinstance(msg, dict) or "type" not in msg:
            return {"type": "error", "msg": "malformed message"}
        kind = msg["type"]
        if kind in ("set_target", "set_priority"):
            agent = msg.get("agent")
            if not isinstance(agent, int) or not 0 <= agent < self.p:
                return {"type": "error", "msg": "agent out of range"}
            if kind == "set_priority":
                self.scn.priority_agent = agent
                return None
            target = msg.get("target")
            try:
                target = np.asarray(target, dtype=float).reshape(2)
            except (TypeError, ValueError):
                return {"type": "error", "msg": "target must be a 2-vector"}
            if not np.isfinite(target).all():
                return {"type": "error", "msg": "target must be finite"}
            new_refs = self.refs.copy()
            new_refs[agent] = target
            self.refs = new_refs
            return None
        if kind == "pause":
            self.paused = True
            return None
        if kind == "resume":
            if not self.halted:
                self.paused = False
            return None
        if kind == "reset":
            self.reset()
            return None
        return {"type": "error", "msg": f"unknown message type {kind!r}"}

    def reset(self) -> None:
        self.state = self.scn.initial_state
        self.refs = self._initial_refs.copy()
        self.scn.priority_agent = self._initial_priority
        self.step_index = 0
        self.paused = False
        self.halted = False
        self.records = []

    def advance(self, n_steps: int) -> bool:
        """Advance up to n_steps; returns False if the session halted."""
        if self.paused or self.halted:
            return not self.halted
        for _ in range(n_steps):
            ev = evaluate_step(self.scn, self.state, self.sim_time, self._solver)
            self.records.append(ev.record)
            if not ev.ok:
                log.warning("session halted at t=%.4f: %s", self.sim_time, ev.reason)
                self.halted = True
                self.paused = True
                return False
            self.state = step(self.state, ev.u, self._dt)
            self.step_index += 1
        return True

    def hello_frame(self) -> dict:
        return {"type": "hello", "p": self.p,
                "params": {**self.scn.params_echo, "dt": self._dt,
                           "priority_agent": self.scn.priority_agent}}

    def state_frame(self) -> dict:
        if self.records:
            rec = self.records[-1]
            t, pos, u, eigs = rec.t, rec.positions, rec.u_filtered, rec.spectrum
        else:
            t, pos = self.sim_time, self.state.positions
            u, eigs = np.zeros(self.scn.m), self.scn.spectrum(self.state)
        return {"type": "state", "t": t,
                "positions": [list(map(float, q)) for q in pos],
                "u": [[float(u[2 * i]), float(u[2 * i + 1])] for i in range(self.p)],
                "lap_eigs": [float(v) for v in eigs],
                "refs": [list(map(float, q)) for q in self.refs],
                "priority": self.scn.priority_agent,
                "halted": self.halted}

    def to_trace(self) -> Trace:
        header = trace_header(self.scn, self.cfg.sim, self.cfg.filter_variant,
                              getattr(self.cfg, "echo", None))
        header["classK"] = self.cfg.classK.to_dict()
        header["session"] = "steer"
        return Trace(header, list(self.records))


async def _serve(session: SteerSession, host: str, port: int,
                 stop: Optional[asyncio.Event] = None):
    from websockets.asyncio.server import serve as ws_serve

    inbound: asyncio.Queue = asyncio.Queue()
    clients = set()

    async def handler(ws):
        clients.add(ws)
        log.info("client connected (%d total)", len(clients))
        try:
            await ws.send(json.dumps(session.hello_frame()))
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    msg = None
                await inbound.put((ws, msg))
        except Exception as exc:  # client hiccups are logged, never fatal
            log.info("client connection ended: %s", exc)
        finally:
            clients.discard(ws)

    async def broadcast(frame: dict):
        if not clients:
            return
        data = json.dumps(frame)
        for ws in list(clients):
            try:
                await ws.send(data)
            except Exception:
                clients.discard(ws)

    async def tick_loop():
        period = 1.0 / FRAME_RATE
        steps_per_tick = max(1, round(period / session._dt))
        loop = asyncio.get_running_loop()
        next_tick = loop.time()
        while stop is None or not stop.is_set():
            while not inbound.empty():
                ws, msg = inbound.get_nowait()
                reply = session.handle_message(msg)
                if reply is not None:
                    try:
                        await ws.send(json.dumps(reply))
                    except Exception:
                        clients.discard(ws)
            was_running = not (session.paused or session.halted)
            session.advance(steps_per_tick)
            if was_running:
                # halt frames included: the session pauses rather than exits
                await broadcast(session.state_frame())
            next_tick += period
            await asyncio.sleep(max(0.0, next_tick - loop.time()))

    try:
        server = await ws_serve(handler, host, port)
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUse(f"{host}:{port} is already bound") from exc
        raise
    log.info("steer bridge listening on ws://%s:%d", host, port)
    async with server:
        await tick_loop()


def run_bridge(cfg, host: str = "127.0.0.1", port: int = 8799) -> int:
    """Serve a steering session until interrupted; flush the trace on shutdown."""
    session = SteerSession(cfg)
    try:
        asyncio.run(_serve(session, host, port))
    except KeyboardInterrupt:
        pass
    if cfg.output is not None and session.records:
        cfg.output.mkdir(parents=True, exist_ok=True)
        trace = session.to_trace()
        trace.to_csv(cfg.output / "trace.csv")
        trace.eigenvalues_to_csv(cfg.output / "eigenvalues.csv")
        from .sim import write_summary
        write_summary(trace, cfg.output / "summary.json")
        print(f"session trace ({len(trace)} records) written to {cfg.output}")
    return 0
