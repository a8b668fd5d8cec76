"""Teleoperation service: WebSocket sessions feeding a single-writer sim loop.

Layering: the sim loop (low level) advances the world in fixed ticks; graph,
sequences, and IK sit in the middle; network clients are the high level.
All mutating commands serialize through one queue in arrival order; telemetry
and snapshots fan out through bounded per-session queues that drop oldest
batches rather than ever blocking the sim loop.
"""

from __future__ import annotations

import asyncio
import os
import queue
import threading
import time
from concurrent.futures import Future
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from . import protocol, ws
from .actuator import ActuatorParams, InputMode
from .errors import (
    AuthFailed,
    BusyError,
    ConfigError,
    LimbsimError,
    ProtocolError,
    RateOutOfRange,
)
from .graph import parse_port
from .kinematics import Pose
from .runtime import SimConfig, World

import numpy as np

_MUTATING = {"joint", "ik", "gripper", "attach", "detach", "run_sequence", "set_mode"}


@dataclass
class ServiceConfig:
    fleet: dict
    host: str = "127.0.0.1"
    port: int = 8765
    token: Optional[str] = None
    sim: Optional[SimConfig] = None
    actuator: Optional[ActuatorParams] = None
    realtime: bool = True
    batch_ticks: int = 10
    queue_limit: int = 64  # batches buffered per session before dropping
    snapshot_period_s: float = 0.5

    @classmethod
    def from_dict(cls, doc: dict) -> "ServiceConfig":
        if "fleet" not in doc:
            raise ConfigError("service config needs a 'fleet'")
        host, port = doc.get("host", "127.0.0.1"), int(doc.get("port", 8765))
        bind = os.environ.get("LIMBSIM_BIND")
        if bind:
            host, _, port_text = bind.partition(":")
            port = int(port_text or port)
        token = os.environ.get("LIMBSIM_TOKEN", doc.get("token"))
        sim = SimConfig.from_dict(doc["sim"]) if doc.get("sim") else None
        act = ActuatorParams(**doc["actuator"]) if doc.get("actuator") else None
        return cls(
            fleet=doc["fleet"],
            host=host,
            port=port,
            token=token,
            sim=sim,
            actuator=act,
            realtime=doc.get("realtime", True),
            batch_ticks=int(doc.get("batch_ticks", 10)),
        )


class _Session:
    _next_id = 0

    def __init__(self, conn: ws.WebSocketConnection, loop):
        _Session._next_id += 1
        self.id = _Session._next_id
        self.conn = conn
        self.loop = loop
        self.authenticated = False
        self.events: asyncio.Queue = asyncio.Queue()
        self.telemetry_rate: Optional[float] = None
        self.telemetry_cursor = 0
        self.next_flush_tick = 0
        self.dropped = 0
        self.queue_limit = 64

    def push_threadsafe(self, payload: str) -> None:
        def _put():
            while self.events.qsize() >= self.queue_limit:
                try:
                    self.events.get_nowait()
                    self.dropped += 1
                except asyncio.QueueEmpty:
                    break
            self.events.put_nowait(payload)

        try:
            self.loop.call_soon_threadsafe(_put)
        except RuntimeError:
            pass  # loop already closed during shutdown; the session is gone


@dataclass
class _Command:
    seq: int
    session: _Session
    msg: dict
    reply: Future


class TeleopService:
    """Running service handle: owns the sim thread and the network loop."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        if config.batch_ticks < 1:
            raise ConfigError("batch_ticks must be >= 1")
        self.world = World.from_fleet(config.fleet, sim=config.sim, actuator=config.actuator)
        self.commands: "queue.Queue[_Command]" = queue.Queue()
        self.sessions: Dict[int, _Session] = {}
        self._sessions_lock = threading.Lock()
        self._stop = threading.Event()
        self._fatal: Optional[BaseException] = None
        self._seq = 0
        self._snapshot_dirty = True
        self._last_snapshot_tick = 0
        self._motion_watch: List[Tuple[object, _Session, Dict[str, float]]] = []
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._server = None
        self._net_thread: Optional[threading.Thread] = None
        self._sim_thread: Optional[threading.Thread] = None
        self._started = threading.Event()
        self.address: Optional[Tuple[str, int]] = None

    # -- lifecycle ------------------------------------------------------------

    def start(self) -> "TeleopService":
        self._net_thread = threading.Thread(target=self._net_main, daemon=True, name="limbsim-net")
        self._net_thread.start()
        if not self._started.wait(5.0):
            raise ConfigError("service failed to start (bind error?)")
        if self._fatal:
            raise self._fatal
        self._sim_thread = threading.Thread(target=self._sim_main, daemon=True, name="limbsim-sim")
        self._sim_thread.start()
        return self

    def stop(self) -> None:
        if getattr(self, "_stopped", False):
            return
        self._stopped = True
        self._stop.set()
        if self._loop is not None:
            self._loop.call_soon_threadsafe(lambda: None)  # wake the loop
        if self._sim_thread:
            self._sim_thread.join(10.0)
        if self._loop is not None:
            async def _shutdown():
                if self._server is not None:
                    self._server.close()
                    await self._server.wait_closed()
                for task in asyncio.all_tasks():
                    if task is not asyncio.current_task():
                        task.cancel()

            fut = asyncio.run_coroutine_threadsafe(_shutdown(), self._loop)
            try:
                fut.result(5.0)
            except Exception:
                pass
            self._loop.call_soon_threadsafe(self._loop.stop)
        if self._net_thread:
            self._net_thread.join(5.0)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    # -- network side -----------------------------------------------------------

    def _net_main(self):
        loop = asyncio.new_event_loop()
        asyncio.set_event_loop(loop)
        self._loop = loop

        async def _start_server():
            try:
                self._server = await asyncio.start_server(
                    self._handle_conn, self.config.host, self.config.port
                )
                sock = self._server.sockets[0]
                self.address = sock.getsockname()[:2]
            except OSError as exc:
                self._fatal = ConfigError(f"cannot bind {self.config.host}:{self.config.port}: {exc}")
            finally:
                self._started.set()

        loop.run_until_complete(_start_server())
        if self._fatal is None:
            loop.run_forever()
        pending = asyncio.all_tasks(loop)
        for task in pending:
            task.cancel()
        if pending:
            loop.run_until_complete(asyncio.gather(*pending, return_exceptions=True))
        loop.close()

    async def _handle_conn(self, reader, writer):
        try:
            await ws.server_handshake(reader, writer)
        except (ProtocolError, asyncio.IncompleteReadError, ConnectionResetError):
            writer.close()
            return
        conn = ws.WebSocketConnection(reader, writer, is_client=False)
        session = _Session(conn, asyncio.get_running_loop())
        session.queue_limit = self.config.queue_limit
        with self._sessions_lock:
            self.sessions[session.id] = session
        sender = asyncio.create_task(self._send_loop(session))
        try:
            await self._recv_loop(session)
        finally:
            sender.cancel()
            with self._sessions_lock:
                self.sessions.pop(session.id, None)
            await conn.close()

    async def _send_loop(self, session: _Session):
        while True:
            payload = await session.events.get()
            try:
                await session.conn.send_text(payload)
            except (ProtocolError, ConnectionResetError, BrokenPipeError):
                return

    async def _recv_loop(self, session: _Session):
        needs_auth = self.config.token is not None
        while not self._stop.is_set():
            raw = await session.conn.recv_text()
            if raw is None:
                return
            try:
                msg = protocol.parse_command(raw)
            except ProtocolError as exc:
                await session.conn.send_text(protocol.error(None, exc.code, str(exc)))
                continue
            if msg["type"] == "auth":
                if not needs_auth or msg.get("token") == self.config.token:
                    session.authenticated = True
                    await session.conn.send_text(protocol.ack(msg["id"], {"authenticated": True}))
                else:
                    await session.conn.send_text(
                        protocol.error(msg["id"], AuthFailed.code, "bad token")
                    )
                continue
            if needs_auth and not session.authenticated:
                await session.conn.send_text(
                    protocol.error(msg["id"], AuthFailed.code, "authenticate first")
                )
                continue
            reply = await self._dispatch(session, msg)
            if reply is not None:
                await session.conn.send_text(reply)

    async def _dispatch(self, session: _Session, msg: dict) -> Optional[str]:
        mtype = msg["type"]
        if mtype == "query" and msg["what"] in ("snapshot", "telemetry", "stop_telemetry"):
            return self._handle_query(session, msg)
        self._seq += 1
        command = _Command(self._seq, session, msg, Future())
        self.commands.put(command)
        try:
            payload = await asyncio.wrap_future(command.reply)
        except asyncio.CancelledError:
            raise
        return payload

    def _handle_query(self, session: _Session, msg: dict) -> str:
        what = msg["what"]
        if what == "snapshot":
            return protocol.ack(msg["id"], {"snapshot": protocol.world_snapshot(self.world)})
        if what == "telemetry":
            rate = float(msg.get("rate_hz", 10.0))
            max_rate = 1.0 / self.world.sim.tick_s
            if not (0 < rate <= max_rate):
                return protocol.error(
                    msg["id"], RateOutOfRange.code, f"rate must be in (0, {max_rate}] Hz"
                )
            session.telemetry_rate = rate
            session.telemetry_cursor = len(self.world.telemetry)
            session.next_flush_tick = self.world.state.step_count
            return protocol.ack(msg["id"], {"streaming": True, "rate_hz": rate})
        session.telemetry_rate = None
        return protocol.ack(msg["id"], {"streaming": False})

    # -- sim side -----------------------------------------------------------------

    def _sim_main(self):
        self.world.on_batch.append(self._on_batch)
        period = self.world.sim.tick_s * self.config.batch_ticks
        next_deadline = time.monotonic() + period
        try:
            while not self._stop.is_set():
                self._drain_commands(reject_mutations=False)
                self.world.step(self.config.batch_ticks * self.world.sim.tick_s)
                if self.config.realtime:
                    now = time.monotonic()
                    delay = next_deadline - now
                    next_deadline = max(next_deadline + period, now)
                    if delay > 0:
                        time.sleep(delay)
                else:
                    next_deadline = time.monotonic()
        except BaseException as exc:  # invariant breach or internal bug: fatal
            self._fatal = exc
            self._broadcast(
                protocol.error(
                    None,
                    exc.code if isinstance(exc, LimbsimError) else "INTERNAL",
                    str(exc),
                )
            )
            self._stop.set()

    def _drain_commands(self, reject_mutations: bool):
        while True:
            try:
                command = self.commands.get_nowait()
            except queue.Empty:
                return
            msg = command.msg
            mutates = msg["type"] in _MUTATING or (
                msg["type"] == "query" and msg.get("what") == "wheel"
            )
            if reject_mutations and mutates:
                command.reply.set_result(
                    protocol.error(
                        msg["id"], BusyError.code, f"sequence {self.world.busy_with!r} running"
                    )
                )
                continue
            try:
                result = self._apply(command)
                command.reply.set_result(protocol.ack(msg["id"], result))
                self._snapshot_dirty = True
            except LimbsimError as exc:
                command.reply.set_result(
                    protocol.error(msg["id"], exc.code, str(exc), exc.details)
                )
            except Exception as exc:  # pragma: no cover - defensive
                command.reply.set_result(protocol.error(msg["id"], "INTERNAL", repr(exc)))

    def _apply(self, command: _Command) -> dict:
        msg = command.msg
        world = self.world
        mtype = msg["type"]
        if mtype == "joint":
            mode = InputMode(msg.get("mode", "trapezoidal"))
            world.apply_joint_command(msg["joint"], float(msg["target_rev"]), mode)
            self._motion_watch.append(
                (msg["id"], command.session, {msg["joint"]: float(msg["target_rev"])})
            )
            return {"joint": msg["joint"], "target_rev": msg["target_rev"], "seq": command.seq}
        if mtype == "ik":
            root, tip = parse_port(msg["root"]), parse_port(msg["tip"])
            if "delta_m" in msg:
                targets = world.apply_ik_command(root, tip, delta_m=msg["delta_m"])
            else:
                target = Pose(
                    np.asarray(msg["target"]["position_m"], dtype=float),
                    np.asarray(msg["target"]["orientation_wxyz"], dtype=float),
                )
                targets = world.apply_ik_command(root, tip, target=target)
            self._motion_watch.append((msg["id"], command.session, dict(targets)))
            return {"targets_rev": targets, "seq": command.seq}
        if mtype == "gripper":
            port = parse_port(msg["port"])
            if msg["action"] == "close":
                world.set_gripper(port, closed=True)
            else:
                edge = world.graph.edge_at(port)
                if edge is None:
                    world.set_gripper(port, closed=False)
                else:
                    world.detach(*edge.endpoints())
            return {"port": msg["port"], "action": msg["action"], "seq": command.seq}
        if mtype == "attach":
            world.attach(parse_port(msg["port_a"]), parse_port(msg["port_b"]))
            return {"edge": [msg["port_a"], msg["port_b"]], "seq": command.seq}
        if mtype == "detach":
            report = world.detach(parse_port(msg["port_a"]), parse_port(msg["port_b"]))
            return {
                "split": report.split,
                "free_floating": [sorted(c) for c in report.free_floating],
                "seq": command.seq,
            }
        if mtype == "run_sequence":
            from .sequences import run_sequence_by_name

            t0 = world.time_s
            try:
                events = run_sequence_by_name(world, msg["name"], overrides=msg.get("overrides"))
            except LimbsimError as exc:
                command.session.push_threadsafe(
                    protocol.sequence_event(
                        msg["id"], "failed", {"code": exc.code, "message": str(exc)}
                    )
                )
                raise
            command.session.push_threadsafe(
                protocol.sequence_event(
                    msg["id"],
                    "completed",
                    {
                        "name": msg["name"],
                        "t_start_s": t0,
                        "t_end_s": world.time_s,
                        "steps": [
                            {
                                "step": e.step,
                                "op": e.op,
                                "t_start_s": e.t_start_s,
                                "t_end_s": e.t_end_s,
                                "detail": e.detail,
                            }
                            for e in events
                        ],
                    },
                )
            )
            return {"name": msg["name"], "sim_seconds": world.time_s - t0, "seq": command.seq}
        if mtype == "set_mode":
            from .sequences import vehicle_mode_transition

            report = vehicle_mode_transition(world, msg["mode"], member=msg.get("member"))
            return {**report, "seq": command.seq}
        if mtype == "query" and msg["what"] == "wheel":
            clamped = world.set_wheel_speed(msg["axis"], float(msg["speed_rad_s"]))
            return {"axis": msg["axis"], "speed_rad_s": clamped, "seq": command.seq}
        raise ProtocolError(f"unhandled command {mtype!r}")

    # -- publications ------------------------------------------------------------------

    def _on_batch(self, world: World) -> None:
        # runs on the sim thread after every stepped batch, including batches
        # driven from inside sequences: keep commands drained (BUSY while a
        # sequence owns the loop), stream telemetry, and pace wall clock
        if world.busy_with is not None:
            self._drain_commands(reject_mutations=True)
            if self.config.realtime:
                time.sleep(self.config.batch_ticks * world.sim.tick_s)
        self._publish_streams()
        self._check_motions()

    def _publish_streams(self) -> None:
        world = self.world
        tick = world.sim.tick_s
        step = world.state.step_count
        snapshot_due = self._snapshot_dirty or (
            (step - self._last_snapshot_tick) * tick >= self.config.snapshot_period_s
        )
        snapshot_payload = None
        with self._sessions_lock:
            sessions = list(self.sessions.values())
        for session in sessions:
            if session.telemetry_rate is None:
                continue
            period_ticks = max(1, round(1.0 / (session.telemetry_rate * tick)))
            if step < session.next_flush_tick + period_ticks:
                continue
            session.next_flush_tick = step
            rows = world.telemetry[session.telemetry_cursor :]
            session.telemetry_cursor = len(world.telemetry)
            batch = [[r.time_s, r.joint_id, r.pos_rev, r.vel_rev_s, r.current_a] for r in rows]
            dropped, session.dropped = session.dropped, 0
            session.push_threadsafe(protocol.telemetry_event(batch, dropped, world.time_s))
            if snapshot_payload is None:
                snapshot_payload = protocol.snapshot_event(protocol.world_snapshot(world))
            session.push_threadsafe(snapshot_payload)
        if snapshot_due:
            if snapshot_payload is None:
                snapshot_payload = protocol.snapshot_event(protocol.world_snapshot(world))
            for session in sessions:
                if session.telemetry_rate is not None:
                    session.push_threadsafe(snapshot_payload)
            self._snapshot_dirty = False
            self._last_snapshot_tick = step

    def _check_motions(self) -> None:
        if not self._motion_watch:
            return
        world = self.world
        done = []
        for item in self._motion_watch:
            cmd_id, session, targets = item
            if world._settled(list(targets), world.sim.settle_tol_rev):
                done.append(item)
                session.push_threadsafe(
                    protocol.sequence_event(
                        cmd_id,
                        "completed",
                        {"targets_rev": targets, "t_s": world.time_s},
                    )
                )
        for item in done:
            self._motion_watch.remove(item)

    def _broadcast(self, payload: str) -> None:
        with self._sessions_lock:
            sessions = list(self.sessions.values())
        for session in sessions:
            session.push_threadsafe(payload)


def serve(config: ServiceConfig) -> TeleopService:
    """Start the teleoperation service; returns the running handle."""
    return TeleopService(config).start()
