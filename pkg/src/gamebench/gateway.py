"""WebSocket gateway: environments served to agents, humans, observers, and
emulator adapters.

One JSON-message protocol serves every client.  Controlling clients (agent or
human) submit raw action-DSL text which is parsed by the exact same grammar
the in-process harness uses; observers receive the frame stream; adapter
clients expose a remote emulator which the gateway re-presents as a local
:class:`~gamebench.environment.EnvironmentContract`.

Frames travel as lossless PNG payloads, base64-inside-JSON.
"""

from __future__ import annotations

import asyncio
import base64
import concurrent.futures
import io
import itertools
import json
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from PIL import Image
from websockets.asyncio.client import connect
from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from .actions import ActionError, parse_command, serialize
from .checkpoints import CheckpointPack, ProgressState, match_frame, progress_score
from .clock import ClockMode, GameClock
from .environment import CommandRejected, EnvironmentContract, execute
from .phash import Frame

PROTOCOL_VERSION = 1
ROLES = ("agent", "human", "observer", "adapter")
DEFAULT_ADAPTER_TIMEOUT = 5.0


class ProtocolViolation(Exception):
    """Ill-formed or out-of-order message; closes only the offending session."""


class AdapterTimeout(Exception):
    """Adapter produced no reply within the deadline."""


class BindFailure(Exception):
    """Gateway could not bind its listen address."""


# ---- wire helpers ----


def encode_frame(frame: Frame) -> dict:
    buf = io.BytesIO()
    Image.fromarray(frame.to_array()).save(buf, format="PNG")
    return {
        "image": base64.b64encode(buf.getvalue()).decode("ascii"),
        "width": frame.width,
        "height": frame.height,
        "captured_at_ms": frame.captured_at_ms,
    }


def decode_frame(doc: dict) -> Frame:
    raw = base64.b64decode(doc["image"])
    rgb = np.asarray(Image.open(io.BytesIO(raw)).convert("RGB"), dtype=np.uint8)
    return Frame.from_array(rgb, captured_at_ms=int(doc.get("captured_at_ms", 0)))


def _frame_message(frame: Frame, step: int, game_time_ms: int, score: float, label: str) -> str:
    doc = {
        "type": "frame",
        "step": step,
        "game_time_ms": game_time_ms,
        "score": score,
        "furthest_label": label,
        **encode_frame(frame),
    }
    return json.dumps(doc)


# ---- server-side session state ----


@dataclass
class GameSession:
    """One served game: env, clock, scoring, and its attached clients."""

    game_id: str
    env: EnvironmentContract
    clock: GameClock
    pack: Optional[CheckpointPack] = None
    progress: ProgressState = field(default_factory=ProgressState)
    controller: Optional[object] = None  # websocket of the controlling client
    observers: set = field(default_factory=set)
    step: int = 0
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    terminated: bool = False

    def score(self) -> tuple[float, str]:
        if self.pack is not None:
            fraction = progress_score(self.progress, self.pack)
            label = ""
            if self.progress.furthest_index is not None:
                label = self.pack.checkpoints[self.progress.furthest_index].label
            return fraction, label
        raw = getattr(self.env, "score", 0)
        return raw / 10.0, f"{raw}/10"

    def track(self, frame: Frame) -> None:
        if self.pack is not None:
            match_frame(self.progress, self.pack, frame)


class _AdapterSession:
    """Server-side handle on one connected adapter client."""

    def __init__(self, ws, game_id: str, bounds: tuple[int, int]) -> None:
        self.ws = ws
        self.game_id = game_id
        self.bounds = bounds
        self.latest_frame: Optional[Frame] = None
        self._req_ids = itertools.count(1)
        self._pending: dict[int, asyncio.Future] = {}
        self.closed = asyncio.Event()

    async def call(self, op: str, **payload) -> dict:
        req = next(self._req_ids)
        future: asyncio.Future = asyncio.get_running_loop().create_future()
        self._pending[req] = future
        try:
            await self.ws.send(json.dumps({"type": "env", "op": op, "req": req, **payload}))
            return await future
        finally:
            self._pending.pop(req, None)

    def dispatch(self, doc: dict) -> None:
        if doc.get("type") == "env_result":
            future = self._pending.get(doc.get("req"))
            if future is not None and not future.done():
                future.set_result(doc)
            if "image" in doc:
                self.latest_frame = decode_frame(doc)
        elif doc.get("type") == "frame":
            self.latest_frame = decode_frame(doc)


class BridgedEnvironment(EnvironmentContract):
    """A remote adapter presented as a local environment.

    Methods are thread-safe: they marshal onto the gateway's event loop and
    block on the reply, raising :class:`AdapterTimeout` past the deadline.
    """

    def __init__(
        self,
        session: _AdapterSession,
        loop: asyncio.AbstractEventLoop,
        timeout: float = DEFAULT_ADAPTER_TIMEOUT,
    ) -> None:
        self._session = session
        self._loop = loop
        self._timeout = timeout
        self._terminal = False
        self._locked = False

    def _call(self, op: str, **payload) -> dict:
        future = asyncio.run_coroutine_threadsafe(
            self._session.call(op, **payload), self._loop
        )
        try:
            result = future.result(timeout=self._timeout)
        except (TimeoutError, concurrent.futures.TimeoutError):
            future.cancel()
            raise AdapterTimeout(f"adapter gave no reply to {op!r}") from None
        if result.get("error"):
            raise CommandRejected(result["error"])
        return result

    def reset(self, seed: int) -> Frame:
        self._call("reset", seed=seed)
        return self.snapshot()

    def apply(self, command) -> None:
        self._call("apply", command=serialize(command))

    def advance(self, dt_ms: int) -> None:
        self._call("advance", dt_ms=dt_ms)

    def snapshot(self) -> Frame:
        result = self._call("snapshot")
        return decode_frame(result)

    def surface_bounds(self) -> tuple[int, int]:
        return self._session.bounds

    def is_terminal(self) -> bool:
        status = self._call("status")
        self._locked = bool(status.get("locked", False))
        return bool(status.get("terminal", False))

    def is_locked(self) -> bool:
        return self._locked


class Gateway:
    """The message-protocol server; one instance can host many sessions."""

    def __init__(
        self,
        registry: dict[str, Callable[[], EnvironmentContract]],
        packs: Optional[dict[str, CheckpointPack]] = None,
        adapter_timeout: float = DEFAULT_ADAPTER_TIMEOUT,
        allow_human_realtime: bool = False,
    ) -> None:
        if not registry:
            raise ValueError("at least one environment must be registered")
        self.registry = dict(registry)
        self.packs = dict(packs or {})
        self.adapter_timeout = adapter_timeout
        self.allow_human_realtime = allow_human_realtime
        self.sessions: dict[str, GameSession] = {}
        self.adapters: dict[str, _AdapterSession] = {}
        self._adapter_ready: dict[str, asyncio.Event] = {}
        self._server = None

    # -- session setup --

    def _game_session(self, game_id: str, seed: int) -> GameSession:
        if game_id in self.sessions:
            return self.sessions[game_id]
        if game_id not in self.registry:
            raise ProtocolViolation(f"unknown game {game_id!r}")
        env = self.registry[game_id]()
        env.reset(seed)
        session = GameSession(
            game_id=game_id,
            env=env,
            clock=GameClock(mode=ClockMode.LITE),
            pack=self.packs.get(game_id),
        )
        self.sessions[game_id] = session
        return session

    async def _handler(self, ws) -> None:
        try:
            raw = await ws.recv()
        except ConnectionClosed:
            return
        try:
            hello = json.loads(raw)
            if hello.get("type") != "hello":
                raise ProtocolViolation("first message must be hello")
            role = hello.get("role")
            if role not in ROLES:
                raise ProtocolViolation(f"unknown role {hello.get('role')!r}")
            if hello.get("protocol", PROTOCOL_VERSION) != PROTOCOL_VERSION:
                raise ProtocolViolation("protocol version mismatch")
            if role == "adapter":
                await self._serve_adapter(ws, hello)
            else:
                await self._serve_client(ws, hello, role)
        except ProtocolViolation as exc:
            try:
                await ws.send(json.dumps({"type": "error", "message": str(exc), "fatal": True}))
                await ws.close()
            except ConnectionClosed:
                pass
        except ConnectionClosed:
            pass

    # -- adapter role --

    async def _serve_adapter(self, ws, hello: dict) -> None:
        game_id = hello.get("game")
        bounds = hello.get("bounds")
        if not game_id or not isinstance(bounds, (list, tuple)) or len(bounds) != 2:
            raise ProtocolViolation("adapter hello needs game and bounds")
        session = _AdapterSession(ws, game_id, (int(bounds[0]), int(bounds[1])))
        self.adapters[game_id] = session
        self._adapter_ready.setdefault(game_id, asyncio.Event()).set()
        await ws.send(json.dumps({"type": "hello", "role": "adapter", "game": game_id}))
        try:
            async for raw in ws:
                try:
                    session.dispatch(json.loads(raw))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise ProtocolViolation(f"bad adapter message: {exc}") from None
        finally:
            session.closed.set()
            if self.adapters.get(game_id) is session:
                del self.adapters[game_id]
                self._adapter_ready[game_id] = asyncio.Event()

    async def bridged_environment(self, game_id: str, wait: float = 5.0) -> BridgedEnvironment:
        event = self._adapter_ready.setdefault(game_id, asyncio.Event())
        try:
            await asyncio.wait_for(event.wait(), timeout=wait)
        except asyncio.TimeoutError:
            raise AdapterTimeout(f"no adapter registered for {game_id!r}") from None
        return BridgedEnvironment(
            self.adapters[game_id], asyncio.get_running_loop(), self.adapter_timeout
        )

    # -- agent / human / observer roles --

    async def _serve_client(self, ws, hello: dict, role: str) -> None:
        game_id = hello.get("game")
        if not game_id:
            raise ProtocolViolation("hello needs a game")
        if role == "human" and hello.get("mode") == "realtime" and not self.allow_human_realtime:
            raise ProtocolViolation("human sessions are lite-mode only on this gateway")
        session = self._game_session(game_id, int(hello.get("seed", 0)))
        controlling = role in ("agent", "human")
        if controlling:
            if session.controller is not None:
                raise ProtocolViolation("session already has a controlling client")
            session.controller = ws
        else:
            session.observers.add(ws)
        score, label = session.score()
        await ws.send(
            json.dumps(
                {
                    "type": "hello",
                    "role": role,
                    "game": game_id,
                    "mode": session.clock.mode.value,
                    "protocol": PROTOCOL_VERSION,
                    "bounds": list(session.env.surface_bounds()),
                }
            )
        )
        # Both a fresh controller and a late-joining observer get the current
        # frame immediately.
        await ws.send(
            _frame_message(
                session.env.snapshot(), session.step, session.clock.game_time_ms, score, label
            )
        )
        try:
            async for raw in ws:
                try:
                    doc = json.loads(raw)
                except json.JSONDecodeError:
                    raise ProtocolViolation("message is not JSON") from None
                mtype = doc.get("type")
                if mtype == "bye":
                    break
                if mtype == "action":
                    if not controlling:
                        await ws.send(
                            json.dumps({"type": "error", "message": "observers cannot act"})
                        )
                        continue
                    await self._handle_action(ws, session, str(doc.get("text", "")))
                elif mtype in ("pause", "resume"):
                    # Lite sessions are implicitly paused between actions.
                    await ws.send(json.dumps({"type": "ack", "step": session.step}))
                else:
                    raise ProtocolViolation(f"unexpected message type {mtype!r}")
        finally:
            if controlling and session.controller is ws:
                session.controller = None
            session.observers.discard(ws)

    async def _handle_action(self, ws, session: GameSession, text: str) -> None:
        """Parse with the shared grammar, execute, ack with the next frame."""
        if session.terminated:
            await ws.send(
                json.dumps({"type": "error", "message": "run terminated", "step": session.step})
            )
            return
        try:
            command = parse_command(text, bounds=session.env.surface_bounds())
        except ActionError as exc:
            await ws.send(
                json.dumps(
                    {"type": "error", "message": f"{type(exc).__name__}: {exc}"}
                )
            )
            return
        async with session.lock:
            try:
                execute(session.env, session.clock, command)
            except CommandRejected as exc:
                await ws.send(
                    json.dumps({"type": "error", "message": f"ExecutionRejected: {exc}"})
                )
                return
            frame = session.env.snapshot()
            session.track(frame)
            session.step += 1
            if session.env.is_terminal():
                session.terminated = True
            score, label = session.score()
        await ws.send(json.dumps({"type": "ack", "step": session.step}))
        message = _frame_message(frame, session.step, session.clock.game_time_ms, score, label)
        await ws.send(message)
        await ws.send(
            json.dumps(
                {"type": "score", "progress": score, "furthest_label": label, "step": session.step}
            )
        )
        for observer in list(session.observers):
            try:
                await observer.send(message)
            except ConnectionClosed:
                session.observers.discard(observer)

    # -- lifecycle --

    async def serve(self, host: str = "127.0.0.1", port: int = 0):
        try:
            self._server = await serve(self._handler, host, port)
        except OSError as exc:
            raise BindFailure(str(exc)) from None
        return self._server

    @property
    def port(self) -> int:
        sock = next(iter(self._server.sockets))
        return sock.getsockname()[1]


# ---- adapter client ----


async def serve_adapter(
    uri: str, env: EnvironmentContract, game_id: str, stop: Optional[asyncio.Event] = None
) -> None:
    """Run a loopback adapter: expose a local env to a gateway over the wire."""
    async with connect(uri, max_size=16 * 1024 * 1024) as ws:
        await ws.send(
            json.dumps(
                {
                    "type": "hello",
                    "role": "adapter",
                    "protocol": PROTOCOL_VERSION,
                    "game": game_id,
                    "bounds": list(env.surface_bounds()),
                    "capabilities": ["reset", "apply", "advance", "snapshot", "status"],
                }
            )
        )
        await ws.recv()  # hello ack
        async for raw in ws:
            if stop is not None and stop.is_set():
                break
            doc = json.loads(raw)
            if doc.get("type") != "env":
                continue
            op, req = doc.get("op"), doc.get("req")
            reply: dict = {"type": "env_result", "op": op, "req": req}
            try:
                if op == "reset":
                    env.reset(int(doc.get("seed", 0)))
                elif op == "apply":
                    command = parse_command(doc["command"], bounds=env.surface_bounds())
                    env.apply(command)
                elif op == "advance":
                    env.advance(int(doc["dt_ms"]))
                elif op == "snapshot":
                    reply.update(encode_frame(env.snapshot()))
                elif op == "status":
                    reply["terminal"] = env.is_terminal()
                    reply["locked"] = env.is_locked()
                else:
                    reply["error"] = f"unknown op {op!r}"
            except (ActionError, CommandRejected, ValueError) as exc:
                reply["error"] = f"{type(exc).__name__}: {exc}"
            await ws.send(json.dumps(reply))


# ---- synchronous facade ----


class GatewayServer:
    """Runs a Gateway on a background thread; handy for tests and the CLI."""

    def __init__(
        self,
        registry: dict[str, Callable[[], EnvironmentContract]],
        packs: Optional[dict[str, CheckpointPack]] = None,
        host: str = "127.0.0.1",
        port: int = 0,
        adapter_timeout: float = DEFAULT_ADAPTER_TIMEOUT,
    ) -> None:
        self.gateway = Gateway(registry, packs, adapter_timeout=adapter_timeout)
        self.host = host
        self._requested_port = port
        self.port: Optional[int] = None
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._thread: Optional[threading.Thread] = None
        self._started = threading.Event()
        self._stop: Optional[asyncio.Event] = None

    def start(self) -> "GatewayServer":
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        if not self._started.wait(timeout=10):
            raise BindFailure("gateway failed to start")
        return self

    def _run(self) -> None:
        asyncio.run(self._main())

    async def _main(self) -> None:
        self._loop = asyncio.get_running_loop()
        self._stop = asyncio.Event()
        await self.gateway.serve(self.host, self._requested_port)
        self.port = self.gateway.port
        self._started.set()
        await self._stop.wait()
        self.gateway._server.close()
        await self.gateway._server.wait_closed()

    def stop(self) -> None:
        if self._loop is not None and self._stop is not None:
            self._loop.call_soon_threadsafe(self._stop.set)
        if self._thread is not None:
            self._thread.join(timeout=10)

    @property
    def uri(self) -> str:
        return f"ws://{self.host}:{self.port}"

    def bridged_env(self, game_id: str, wait: float = 5.0) -> BridgedEnvironment:
        future = asyncio.run_coroutine_threadsafe(
            self.gateway.bridged_environment(game_id, wait), self._loop
        )
        return future.result(timeout=wait + 1)

    def start_adapter(self, env: EnvironmentContract, game_id: str) -> threading.Thread:
        """Spawn a loopback adapter client on its own thread."""
        thread = threading.Thread(
            target=lambda: asyncio.run(serve_adapter(self.uri, env, game_id)),
            daemon=True,
        )
        thread.start()
        return thread
