"""Game clocks: wall time, deterministic virtual time, and the realtime ticker.

Realtime mode is modeled on a swappable time source so the full realtime
semantics run deterministically (and much faster than wall time) in tests.
Virtual time only advances when every registered participant is blocked in
``sleep`` — compute between sleeps is instantaneous, which makes tick counts
during simulated agent latency exact.
"""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from enum import Enum
from queue import Empty, Queue
from typing import Callable, Optional, Protocol


class ClockMode(Enum):
    REALTIME = "realtime"
    LITE = "lite"


class TimeSource(Protocol):
    def now(self) -> float: ...
    def sleep(self, seconds: float) -> None: ...


class WallTime:
    """Real monotonic time."""

    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class VirtualTime:
    """Deterministic fake clock shared by cooperating threads.

    Threads that live across multiple sleeps (tickers, controllers, stub
    agents) should register via :meth:`participant`; time advances to the
    earliest pending deadline only once every participant is asleep.  A thread
    that sleeps without registering is counted as a participant just for that
    sleep.
    """

    def __init__(self) -> None:
        self._now = 0.0
        self._cond = threading.Condition()
        self._participants: set[int] = set()
        self._sleeping: dict[int, float] = {}
        self._interrupt_gen = 0

    def now(self) -> float:
        with self._cond:
            return self._now

    @contextmanager
    def participant(self):
        ident = threading.get_ident()
        with self._cond:
            self._participants.add(ident)
            self._cond.notify_all()
        try:
            yield self
        finally:
            with self._cond:
                self._participants.discard(ident)
                self._cond.notify_all()

    def register(self) -> None:
        with self._cond:
            self._participants.add(threading.get_ident())
            self._cond.notify_all()

    def unregister(self) -> None:
        with self._cond:
            self._participants.discard(threading.get_ident())
            self._cond.notify_all()

    def interrupt_sleepers(self) -> None:
        """Wake every current sleeper early; used for shutdown."""
        with self._cond:
            self._interrupt_gen += 1
            self._cond.notify_all()

    def sleep(self, seconds: float) -> None:
        ident = threading.get_ident()
        with self._cond:
            transient = ident not in self._participants
            if transient:
                self._participants.add(ident)
            gen = self._interrupt_gen
            deadline = self._now + max(seconds, 0.0)
            self._sleeping[ident] = deadline
            try:
                while self._now < deadline and self._interrupt_gen == gen:
                    if len(self._sleeping) == len(self._participants):
                        earliest = min(self._sleeping.values())
                        if earliest > self._now:
                            self._now = earliest
                            self._cond.notify_all()
                        else:
                            # Another sleeper's deadline was reached; wait for
                            # it to wake up and leave before advancing again.
                            self._cond.wait()
                    else:
                        self._cond.wait()
            finally:
                del self._sleeping[ident]
                if transient:
                    self._participants.discard(ident)
                self._cond.notify_all()


class GameClock:
    """Accumulated in-game time under either clock discipline.

    In Lite mode game time advances only through explicit :meth:`advance`
    calls made while executing actions or observation delays.  In Realtime
    mode the :class:`RealtimeDriver` is the sole advancer.
    """

    def __init__(
        self,
        mode: ClockMode = ClockMode.LITE,
        tick_ms: int = 50,
        time_source: Optional[TimeSource] = None,
    ) -> None:
        if tick_ms <= 0:
            raise ValueError("tick_ms must be positive")
        self.mode = mode
        self.tick_ms = tick_ms
        self.time_source: TimeSource = time_source if time_source is not None else WallTime()
        self.game_time_ms = 0
        self.env_lock = threading.RLock()

    def advance(self, dt_ms: int) -> None:
        if dt_ms < 0:
            raise ValueError("cannot advance the clock backwards")
        self.game_time_ms += dt_ms


class RealtimeDriver:
    """Continuously advances an environment at tick granularity.

    Commands submitted through :meth:`submit` are executed on a dedicated
    worker in arrival order, never interleaved mid-chord.  The environment is
    advanced regardless of agent activity.
    """

    def __init__(self, env, clock: GameClock) -> None:
        if clock.mode is not ClockMode.REALTIME:
            raise ValueError("RealtimeDriver requires a realtime clock")
        self.env = env
        self.clock = clock
        self.tick_count = 0
        self._running = False
        self._ticker: Optional[threading.Thread] = None
        self._worker: Optional[threading.Thread] = None
        self._queue: Queue = Queue()

    def start(self) -> None:
        self._running = True
        self._ticker = threading.Thread(target=self._tick_loop, daemon=True)
        self._worker = threading.Thread(target=self._work_loop, daemon=True)
        self._ticker.start()
        self._worker.start()

    def stop(self) -> None:
        self._running = False
        ts = self.clock.time_source
        if isinstance(ts, VirtualTime):
            ts.interrupt_sleepers()
        for t in (self._ticker, self._worker):
            if t is not None:
                t.join(timeout=10)
        self._ticker = self._worker = None

    def submit(self, fn: Callable[[], None]) -> threading.Event:
        """Queue a command closure; returns an event set once it has run."""
        done = threading.Event()
        self._queue.put((fn, done))
        return done

    def _tick_loop(self) -> None:
        ts = self.clock.time_source
        register = isinstance(ts, VirtualTime)
        if register:
            ts.register()
        try:
            while self._running:
                ts.sleep(self.clock.tick_ms / 1000.0)
                if not self._running:
                    break
                with self.clock.env_lock:
                    self.env.advance(self.clock.tick_ms)
                    self.clock.advance(self.clock.tick_ms)
                self.tick_count += 1
        finally:
            if register:
                ts.unregister()

    def _work_loop(self) -> None:
        while self._running:
            try:
                fn, done = self._queue.get(timeout=0.05)
            except Empty:
                continue
            try:
                fn()
            finally:
                done.set()
