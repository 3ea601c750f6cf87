"""Emulator-agnostic evaluation harness for vision-driven game agents."""

from .phash import (
    Frame,
    PerceptualHash,
    average_hash,
    difference_hash,
    hamming_distance,
    hash_frame,
)
from .actions import (
    ActionCommand,
    ButtonChord,
    ButtonSequence,
    Click,
    DefaultTimings,
    Drag,
    HoldKey,
    KeyChord,
    KeySequence,
    MouseMove,
    ScrollDown,
    ScrollUp,
    Write,
    parse_command,
    parse_dos_action,
    parse_gameboy_actions,
    serialize,
)
from .checkpoints import (
    Checkpoint,
    CheckpointPack,
    ProgressState,
    build_pack,
    load_pack,
    match_frame,
    overall_score,
    progress_score,
)
from .clock import ClockMode, GameClock, RealtimeDriver, VirtualTime, WallTime
from .environment import EnvironmentContract, ObservationPolicy, execute, observe
from .runner import RunConfig, RunRecord, TerminationReason, read_log, run, write_log
from .scaffold import MockModel, ModelSettings, Scratchpad, VgAgent

__version__ = "0.1.0"
