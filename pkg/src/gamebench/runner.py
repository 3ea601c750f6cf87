"""Run orchestration: wiring, caps, termination rules, and run logs.

One run loops observe -> agent step -> execute -> track until a termination
rule fires or the final checkpoint matches.  Runs survive in-game losses; the
priority order of termination reasons is total and deterministic.
"""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .actions import parse_command, serialize
from .checkpoints import CheckpointPack, ProgressState, match_frame, progress_score
from .clock import ClockMode, GameClock, RealtimeDriver, TimeSource, VirtualTime
from .environment import (
    CommandRejected,
    EnvironmentContract,
    ObservationPolicy,
    execute,
    observe,
)
from .phash import PerceptualHash, hash_frame
from .scaffold import ModelUnavailable, VgAgent

DEFAULT_STUCK_STEP_LIMIT = 100
DEFAULT_NO_PROGRESS_STEP_LIMIT = 2000
DEFAULT_SAME_SPOT_LOSS_LIMIT = 3
TIME_CAP_WALKTHROUGH_MULTIPLE = 20
LITE_STEP_MS = 1000  # one Lite step is one second of playtime

LOG_FORMAT_VERSION = 1


class TerminationReason(Enum):
    COMPLETED = "completed"
    TIME_CAP = "time_cap"
    STEP_CAP = "step_cap"
    STUCK = "stuck"
    NO_PROGRESS = "no_progress"
    REPEATED_LOSS = "repeated_loss"
    LOCKED_STATE = "locked_state"
    MODEL_UNAVAILABLE = "model_unavailable"
    ABORTED = "aborted"


class CorruptLog(Exception):
    """Run log that cannot be decoded back into a RunRecord."""


@dataclass
class RunConfig:
    game_id: str
    mode: ClockMode = ClockMode.LITE
    seed: int = 0
    max_game_time_ms: Optional[int] = None  # default: 20x walkthrough length
    max_lite_steps: Optional[int] = None  # default: walkthrough seconds x 20
    stuck_step_limit: int = DEFAULT_STUCK_STEP_LIMIT
    no_progress_step_limit: int = DEFAULT_NO_PROGRESS_STEP_LIMIT
    same_spot_loss_limit: int = DEFAULT_SAME_SPOT_LOSS_LIMIT
    observation: ObservationPolicy = field(default_factory=ObservationPolicy)
    cost_budget_usd: Optional[float] = None
    price_per_1k_prompt: float = 0.0
    price_per_1k_completion: float = 0.0
    tick_ms: int = 50

    def __post_init__(self) -> None:
        for name in ("stuck_step_limit", "no_progress_step_limit", "same_spot_loss_limit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def resolved_time_cap_ms(self, pack: CheckpointPack) -> int:
        if self.max_game_time_ms is not None:
            return self.max_game_time_ms
        return TIME_CAP_WALKTHROUGH_MULTIPLE * pack.walkthrough_length_ms

    def resolved_lite_step_cap(self, pack: CheckpointPack) -> int:
        if self.max_lite_steps is not None:
            return self.max_lite_steps
        return TIME_CAP_WALKTHROUGH_MULTIPLE * (pack.walkthrough_length_ms // 1000)

    def to_dict(self) -> dict:
        return {
            "game_id": self.game_id,
            "mode": self.mode.value,
            "seed": self.seed,
            "max_game_time_ms": self.max_game_time_ms,
            "max_lite_steps": self.max_lite_steps,
            "stuck_step_limit": self.stuck_step_limit,
            "no_progress_step_limit": self.no_progress_step_limit,
            "same_spot_loss_limit": self.same_spot_loss_limit,
            "observation": {
                "frames_per_observation": self.observation.frames_per_observation,
                "frame_spacing_ms": self.observation.frame_spacing_ms,
                "post_action_delay_ms": self.observation.post_action_delay_ms,
            },
            "cost_budget_usd": self.cost_budget_usd,
            "price_per_1k_prompt": self.price_per_1k_prompt,
            "price_per_1k_completion": self.price_per_1k_completion,
            "tick_ms": self.tick_ms,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        obs = doc.get("observation", {})
        return cls(
            game_id=doc["game_id"],
            mode=ClockMode(doc["mode"]),
            seed=doc["seed"],
            max_game_time_ms=doc.get("max_game_time_ms"),
            max_lite_steps=doc.get("max_lite_steps"),
            stuck_step_limit=doc.get("stuck_step_limit", DEFAULT_STUCK_STEP_LIMIT),
            no_progress_step_limit=doc.get(
                "no_progress_step_limit", DEFAULT_NO_PROGRESS_STEP_LIMIT
            ),
            same_spot_loss_limit=doc.get(
                "same_spot_loss_limit", DEFAULT_SAME_SPOT_LOSS_LIMIT
            ),
            observation=ObservationPolicy(
                frames_per_observation=obs.get("frames_per_observation", 1),
                frame_spacing_ms=obs.get("frame_spacing_ms", 0),
                post_action_delay_ms=obs.get("post_action_delay_ms", 0),
            ),
            cost_budget_usd=doc.get("cost_budget_usd"),
            price_per_1k_prompt=doc.get("price_per_1k_prompt", 0.0),
            price_per_1k_completion=doc.get("price_per_1k_completion", 0.0),
            tick_ms=doc.get("tick_ms", 50),
        )


class StuckDetector:
    """Counts consecutive turns showing the exact same frame hash."""

    def __init__(self) -> None:
        self.last_hash: Optional[PerceptualHash] = None
        self.repeat_count = 0

    def update(self, frame_hash: PerceptualHash) -> None:
        if frame_hash == self.last_hash:
            self.repeat_count += 1
        else:
            self.last_hash = frame_hash
            self.repeat_count = 0


@dataclass
class RunStatus:
    """Everything the termination rules look at, updated once per turn."""

    completed: bool = False
    locked: bool = False
    game_time_ms: int = 0
    turn_count: int = 0
    steps_since_progress: int = 0
    cost_since_progress_usd: float = 0.0
    worst_same_spot_losses: int = 0


def check_termination(
    detector: StuckDetector,
    status: RunStatus,
    config: RunConfig,
    pack: CheckpointPack,
) -> Optional[TerminationReason]:
    """First matching rule in fixed priority order, or None."""
    if status.completed:
        return TerminationReason.COMPLETED
    if status.locked:
        return TerminationReason.LOCKED_STATE
    if status.game_time_ms > config.resolved_time_cap_ms(pack):
        return TerminationReason.TIME_CAP
    if (
        config.mode is ClockMode.LITE
        and status.turn_count >= config.resolved_lite_step_cap(pack)
    ):
        return TerminationReason.STEP_CAP
    if detector.repeat_count >= config.stuck_step_limit:
        return TerminationReason.STUCK
    if status.steps_since_progress >= config.no_progress_step_limit or (
        config.cost_budget_usd is not None
        and status.cost_since_progress_usd >= config.cost_budget_usd
    ):
        return TerminationReason.NO_PROGRESS
    if status.worst_same_spot_losses >= config.same_spot_loss_limit:
        return TerminationReason.REPEATED_LOSS
    return None


@dataclass
class TurnLog:
    step: int
    frame_hashes: list[str]
    thought: str
    action_name: str
    action_input: str
    memory_update: str
    commands: list[str]  # canonical serializations, for replay
    match_events: list[tuple[int, int]]  # (checkpoint index, distance)
    prompt_tokens: int = 0
    completion_tokens: int = 0
    error: Optional[str] = None


@dataclass
class RunRecord:
    config: RunConfig
    turns: list[TurnLog]
    termination: TerminationReason
    progress: float
    furthest_index: Optional[int]
    game_time_ms: int
    prompt_tokens: int
    completion_tokens: int
    cost_usd: float
    wall_started_at: float = 0.0
    diagnostics: str = ""

    @property
    def frame_hash_sequence(self) -> list[str]:
        return [h for t in self.turns for h in t.frame_hashes]


def run(
    config: RunConfig,
    env: EnvironmentContract,
    agent: VgAgent,
    pack: CheckpointPack,
    time_source: Optional[TimeSource] = None,
) -> RunRecord:
    """Execute one full benchmark run and return its record."""
    clock = GameClock(mode=config.mode, tick_ms=config.tick_ms, time_source=time_source)
    detector = StuckDetector()
    progress = ProgressState()
    status = RunStatus()
    turns: list[TurnLog] = []
    loss_counts: Counter = Counter()
    started_at = time.time()
    termination: Optional[TerminationReason] = None
    diagnostics = ""

    driver: Optional[RealtimeDriver] = None
    virtual = isinstance(clock.time_source, VirtualTime)
    try:
        env.reset(config.seed)
        # Register before the ticker starts: an unaccompanied ticker would
        # free-run a virtual clock.
        if virtual:
            clock.time_source.register()
        if config.mode is ClockMode.REALTIME:
            driver = RealtimeDriver(env, clock)
            driver.start()

        while True:
            frames = observe(env, clock, config.observation)
            hashes = []
            before = progress.furthest_index
            for frame in frames:
                match_frame(progress, pack, frame)
                hashes.append(str(hash_frame(frame, pack.algorithm)))
            detector.update(hash_frame(frames[-1], pack.algorithm))

            if progress.furthest_index != before:
                status.steps_since_progress = 0
                status.cost_since_progress_usd = 0.0
            status.completed = (
                pack.final_index is not None
                and progress.furthest_index == pack.final_index
            ) or env.is_terminal()
            status.locked = env.is_locked()
            status.game_time_ms = clock.game_time_ms

            termination = check_termination(detector, status, config, pack)
            if termination is not None:
                break

            try:
                turn = agent.step(frames)
            except ModelUnavailable as exc:
                termination = TerminationReason.MODEL_UNAVAILABLE
                diagnostics = str(exc)
                break

            commands = []
            turn_error = turn.error
            for command in turn.parsed:
                commands.append(serialize(command, agent.timings))
                try:
                    # Sequential even in Realtime: the driver ticks the env
                    # while the controller sleeps out each chord here.
                    execute(env, clock, command)
                except CommandRejected as exc:
                    turn_error = f"rejected: {exc}"

            if env.poll_loss():
                loss_counts[hashes[-1]] += 1
                status.worst_same_spot_losses = max(loss_counts.values())

            status.turn_count += 1
            status.steps_since_progress += 1
            turn_cost = config.price_per_1k_prompt * turn.prompt_tokens / 1000.0
            turn_cost += config.price_per_1k_completion * turn.completion_tokens / 1000.0
            status.cost_since_progress_usd += turn_cost

            new_events = [
                (idx, dist)
                for (step, idx, dist) in progress.match_events
                if step >= progress.steps_seen - len(frames)
            ]
            turns.append(
                TurnLog(
                    step=status.turn_count,
                    frame_hashes=hashes,
                    thought=turn.thought,
                    action_name=turn.action_name,
                    action_input=turn.action_input,
                    memory_update=turn.memory_update,
                    commands=commands,
                    match_events=new_events,
                    prompt_tokens=turn.prompt_tokens,
                    completion_tokens=turn.completion_tokens,
                    error=turn_error,
                )
            )
    except Exception as exc:  # environment faults abort with diagnostics
        termination = TerminationReason.ABORTED
        diagnostics = f"{type(exc).__name__}: {exc}"
    finally:
        # Stop the ticker before unregistering: an unregistered but running
        # controller would let virtual time free-run.
        if driver is not None:
            driver.stop()
        if virtual:
            clock.time_source.unregister()

    prompt_tokens = sum(t.prompt_tokens for t in turns)
    completion_tokens = sum(t.completion_tokens for t in turns)
    cost = (
        config.price_per_1k_prompt * prompt_tokens
        + config.price_per_1k_completion * completion_tokens
    ) / 1000.0
    return RunRecord(
        config=config,
        turns=turns,
        termination=termination if termination is not None else TerminationReason.ABORTED,
        progress=progress_score(progress, pack),
        furthest_index=progress.furthest_index,
        game_time_ms=clock.game_time_ms,
        prompt_tokens=prompt_tokens,
        completion_tokens=completion_tokens,
        cost_usd=cost,
        wall_started_at=started_at,
        diagnostics=diagnostics,
    )


# ---- log serialization ----


def write_log(record: RunRecord) -> bytes:
    """Line-delimited records: one header, one line per turn, one footer."""
    lines = [
        json.dumps(
            {
                "type": "header",
                "format": LOG_FORMAT_VERSION,
                "config": record.config.to_dict(),
                "wall_started_at": record.wall_started_at,
            },
            sort_keys=True,
        )
    ]
    for t in record.turns:
        lines.append(
            json.dumps(
                {
                    "type": "turn",
                    "step": t.step,
                    "frame_hashes": t.frame_hashes,
                    "thought": t.thought,
                    "action_name": t.action_name,
                    "action_input": t.action_input,
                    "memory_update": t.memory_update,
                    "commands": t.commands,
                    "match_events": t.match_events,
                    "prompt_tokens": t.prompt_tokens,
                    "completion_tokens": t.completion_tokens,
                    "error": t.error,
                },
                sort_keys=True,
            )
        )
    lines.append(
        json.dumps(
            {
                "type": "footer",
                "termination": record.termination.value,
                "progress": record.progress,
                "furthest_index": record.furthest_index,
                "game_time_ms": record.game_time_ms,
                "prompt_tokens": record.prompt_tokens,
                "completion_tokens": record.completion_tokens,
                "cost_usd": record.cost_usd,
                "diagnostics": record.diagnostics,
            },
            sort_keys=True,
        )
    )
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_log(data: bytes) -> RunRecord:
    """Inverse of :func:`write_log`; read(write(r)) == r."""
    lines = [line for line in data.decode("utf-8").splitlines() if line.strip()]
    if len(lines) < 2:
        raise CorruptLog("log needs at least a header and a footer")
    try:
        docs = [json.loads(line) for line in lines]
    except json.JSONDecodeError as exc:
        raise CorruptLog(str(exc)) from None
    header, *body, footer = docs
    if header.get("type") != "header" or footer.get("type") != "footer":
        raise CorruptLog("missing header or footer line")
    try:
        turns = [
            TurnLog(
                step=d["step"],
                frame_hashes=d["frame_hashes"],
                thought=d["thought"],
                action_name=d["action_name"],
                action_input=d["action_input"],
                memory_update=d["memory_update"],
                commands=d["commands"],
                match_events=[tuple(e) for e in d["match_events"]],
                prompt_tokens=d["prompt_tokens"],
                completion_tokens=d["completion_tokens"],
                error=d["error"],
            )
            for d in body
            if d.get("type") == "turn"
        ]
        return RunRecord(
            config=RunConfig.from_dict(header["config"]),
            turns=turns,
            termination=TerminationReason(footer["termination"]),
            progress=footer["progress"],
            furthest_index=footer["furthest_index"],
            game_time_ms=footer["game_time_ms"],
            prompt_tokens=footer["prompt_tokens"],
            completion_tokens=footer["completion_tokens"],
            cost_usd=footer["cost_usd"],
            wall_started_at=header["wall_started_at"],
            diagnostics=footer.get("diagnostics", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptLog(str(exc)) from None


def replay_commands(
    record: RunRecord, env: EnvironmentContract, algorithm: str = "dhash"
) -> list[list[str]]:
    """Re-execute a logged command sequence in Lite mode against a fresh env.

    Returns the per-turn observation frame hashes; against the same seed they
    must reproduce the logged hashes exactly.
    """
    clock = GameClock(mode=ClockMode.LITE, tick_ms=record.config.tick_ms)
    env.reset(record.config.seed)
    hashes: list[list[str]] = []
    for turn in record.turns:
        frames = observe(env, clock, record.config.observation)
        hashes.append([str(hash_frame(f, algorithm)) for f in frames])
        for text in turn.commands:
            execute(env, clock, parse_command(text))
    return hashes
