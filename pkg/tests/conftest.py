"""Shared test helpers: deterministic frames, packs, and scripted agents."""

from __future__ import annotations

import random
from collections import deque
from typing import Callable, Optional, Sequence

import numpy as np

from gamebench.actions import (
    DEFAULT_TIMINGS,
    ActionCommand,
    KeyChord,
    KeySequence,
)
from gamebench.checkpoints import Checkpoint, CheckpointPack
from gamebench.environment import EnvironmentContract
from gamebench.phash import Frame, PerceptualHash, hash_frame
from gamebench.scaffold import AgentTurn


def noise_frame(rng: random.Random, width: int = 64, height: int = 64) -> Frame:
    data = bytes(rng.randrange(256) for _ in range(width * height * 3))
    return Frame(width=width, height=height, pixels=data)


def stripe_frame(position: int, width: int = 32, height: int = 32) -> Frame:
    """White frame with a black vertical stripe; distinct positions differ."""
    img = np.full((height, width, 3), 255, dtype=np.uint8)
    x = (position * 4) % (width - 4)
    img[:, x : x + 4] = 0
    return Frame.from_array(img)


def pack_of(
    hashes: Sequence[PerceptualHash],
    walkthrough_length_ms: int = 1_000_000,
    threshold: int = 12,
    game_id: str = "test-game",
) -> CheckpointPack:
    step = walkthrough_length_ms // (len(hashes) + 1) if hashes else 1
    return CheckpointPack(
        game_id=game_id,
        walkthrough_length_ms=walkthrough_length_ms,
        checkpoints=tuple(
            Checkpoint(
                index=i,
                hash=h,
                timestamp_ms=(i + 1) * step,
                threshold=threshold,
                label=f"cp{i}",
            )
            for i, h in enumerate(hashes)
        ),
        default_threshold=threshold,
        algorithm=hashes[0].algorithm if hashes else "dhash",
    )


def empty_pack(walkthrough_length_ms: int = 1_000_000) -> CheckpointPack:
    return CheckpointPack(
        game_id="test-game",
        walkthrough_length_ms=walkthrough_length_ms,
        checkpoints=(),
    )


def unmatched_pack(walkthrough_length_ms: int = 1_000_000) -> CheckpointPack:
    """Pack whose single checkpoint matches nothing at threshold 1."""
    far = hash_frame(noise_frame(random.Random(987654)), "dhash")
    return pack_of([far], walkthrough_length_ms, threshold=1)


class StripeEnv(EnvironmentContract):
    """Tiny scripted environment whose frame encodes a counter.

    ``advance_by_key`` controls whether key presses move the stripe; a static
    stripe makes every observation identical (stuck scenarios).
    """

    def __init__(self, moving: bool = True) -> None:
        self.moving = moving
        self.state = 0
        self.time_ms = 0
        self.tick_advances = 0
        self.terminal_after: Optional[int] = None
        self.locked = False
        self.loss_queue: deque = deque()

    def reset(self, seed: int) -> Frame:
        self.state = seed % 7
        self.time_ms = 0
        self.tick_advances = 0
        return self.snapshot()

    def apply(self, command: ActionCommand) -> None:
        if self.moving:
            self.state += 1

    def advance(self, dt_ms: int) -> None:
        self.time_ms += dt_ms
        if dt_ms > 0:
            self.tick_advances += 1

    def snapshot(self) -> Frame:
        base = stripe_frame(self.state)
        return Frame(base.width, base.height, base.pixels, captured_at_ms=self.time_ms)

    def surface_bounds(self) -> tuple[int, int]:
        return (32, 32)

    def is_terminal(self) -> bool:
        return self.terminal_after is not None and self.state >= self.terminal_after

    def is_locked(self) -> bool:
        return self.locked

    def poll_loss(self) -> bool:
        if self.loss_queue:
            return self.loss_queue.popleft()
        return False


def key_press(name: str = "KeyA", duration: Optional[float] = None) -> KeySequence:
    dur = duration if duration is not None else DEFAULT_TIMINGS.key_press_default
    return KeySequence((KeyChord((name,), dur),))


class ScriptedAgent:
    """Duck-typed stand-in for VgAgent driven by a per-turn callable.

    ``policy(turn_index, frames)`` returns the commands for that turn.
    """

    def __init__(
        self,
        policy: Callable[[int, Sequence[Frame]], list[ActionCommand]],
        think: Optional[Callable[[], None]] = None,
        tokens_per_turn: tuple[int, int] = (0, 0),
    ) -> None:
        self.timings = DEFAULT_TIMINGS
        self.policy = policy
        self.think = think
        self.tokens_per_turn = tokens_per_turn
        self.turn_index = 0

    def step(self, frames: Sequence[Frame]) -> AgentTurn:
        if self.think is not None:
            self.think()
        commands = self.policy(self.turn_index, frames)
        self.turn_index += 1
        return AgentTurn(
            thought="",
            action_name="scripted",
            action_input="",
            memory_update="",
            raw_response="",
            parsed=commands,
            prompt_tokens=self.tokens_per_turn[0],
            completion_tokens=self.tokens_per_turn[1],
        )


class ScriptReplayAgent(ScriptedAgent):
    """Plays back a fixed list of command batches, then no-ops."""

    def __init__(self, batches: Sequence[list[ActionCommand]]) -> None:
        super().__init__(lambda i, frames: list(batches[i]) if i < len(batches) else [])
