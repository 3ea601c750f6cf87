"""Environment contract and timed command execution.

Every game implements :class:`EnvironmentContract`; the harness drives it
through :func:`execute` and :func:`observe`, which own all timing.  In Lite
mode game time advances only inside these calls; in Realtime mode the
:class:`~gamebench.clock.RealtimeDriver` advances the environment and these
calls consume (possibly virtual) wall time instead.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

from .actions import (
    ActionCommand,
    ButtonSequence,
    HoldKey,
    KeySequence,
    command_duration_ms,
)
from .clock import ClockMode, GameClock
from .phash import Frame


class CommandRejected(Exception):
    """Environment-specific invalid input."""


class EnvironmentContract(ABC):
    """Interface every game implements.

    ``snapshot`` must be side-effect free and ``advance(0)`` must change
    nothing; state evolves only via apply/advance/reset.
    """

    @abstractmethod
    def reset(self, seed: int) -> Frame: ...

    @abstractmethod
    def apply(self, command: ActionCommand) -> None: ...

    @abstractmethod
    def advance(self, dt_ms: int) -> None: ...

    @abstractmethod
    def snapshot(self) -> Frame: ...

    @abstractmethod
    def surface_bounds(self) -> tuple[int, int]: ...

    @abstractmethod
    def is_terminal(self) -> bool:
        """True once the game's core objective is complete (or failed)."""

    def is_locked(self) -> bool:
        """True if the agent put the game in an unrecoverable state."""
        return False

    def poll_loss(self) -> bool:
        """Consume and report one pending in-game loss event, if any."""
        return False


@dataclass(frozen=True)
class ObservationPolicy:
    """How frames are captured after an action."""

    frames_per_observation: int = 1
    frame_spacing_ms: int = 0
    post_action_delay_ms: int = 0

    def __post_init__(self) -> None:
        if self.frames_per_observation < 1:
            raise ValueError("need at least one frame per observation")
        if self.frame_spacing_ms < 0 or self.post_action_delay_ms < 0:
            raise ValueError("observation delays must be non-negative")


def _wait(env: EnvironmentContract, clock: GameClock, dt_ms: int) -> None:
    if dt_ms <= 0:
        return
    if clock.mode is ClockMode.LITE:
        with clock.env_lock:
            env.advance(dt_ms)
            clock.advance(dt_ms)
    else:
        clock.time_source.sleep(dt_ms / 1000.0)


def _pieces(command: ActionCommand):
    """Split a command into atomic (sub-command, duration_ms) steps."""
    if isinstance(command, ButtonSequence):
        for chord in command.chords:
            yield ButtonSequence((chord,)), round(chord.duration * 1000)
    elif isinstance(command, KeySequence):
        for chord in command.chords:
            yield KeySequence((chord,)), round(chord.duration * 1000)
    else:
        yield command, command_duration_ms(command)


def execute(env: EnvironmentContract, clock: GameClock, command: ActionCommand) -> None:
    """Apply a command chord by chord, advancing the clock per mode.

    Inputs are asserted for each chord's duration and released at chord end.
    An empty sequence advances nothing.
    """
    for piece, dt_ms in _pieces(command):
        with clock.env_lock:
            env.apply(piece)
            if clock.mode is ClockMode.LITE and dt_ms > 0:
                env.advance(dt_ms)
                clock.advance(dt_ms)
        if clock.mode is ClockMode.REALTIME and dt_ms > 0:
            clock.time_source.sleep(dt_ms / 1000.0)


def observe(
    env: EnvironmentContract, clock: GameClock, policy: ObservationPolicy
) -> list[Frame]:
    """Capture the policy's frames; returned frames are immutable values."""
    _wait(env, clock, policy.post_action_delay_ms)
    frames: list[Frame] = []
    for i in range(policy.frames_per_observation):
        if i:
            _wait(env, clock, policy.frame_spacing_ms)
        with clock.env_lock:
            frames.append(env.snapshot())
    return frames
