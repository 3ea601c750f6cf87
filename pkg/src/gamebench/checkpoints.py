"""Checkpoint packs, live-frame matching, and completion scoring.

A pack is an ordered list of walkthrough milestones, each a perceptual hash
plus its timestamp in the reference walkthrough.  A game's score is the
walkthrough-time fraction of the furthest milestone matched so far; the
benchmark score is the plain mean over games.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Optional, Sequence, Union

import numpy as np
from PIL import Image

from .phash import Frame, PerceptualHash, hamming_distance, hash_frame

PACK_VERSION = 1
DEFAULT_THRESHOLD = 12
DEFAULT_ALGORITHM = "dhash"


class PackError(Exception):
    """Base class for checkpoint pack failures."""


class ParseError(PackError):
    pass


class UnsortedTimestamps(PackError):
    pass


class TimestampExceedsLength(PackError):
    pass


class BadThreshold(PackError):
    pass


class UnreadableImage(PackError):
    pass


@dataclass(frozen=True)
class Checkpoint:
    index: int
    hash: PerceptualHash
    timestamp_ms: int
    threshold: int
    label: str = ""
    crop: Optional[tuple[int, int, int, int]] = None  # reserved, unused


@dataclass(frozen=True)
class CheckpointPack:
    game_id: str
    walkthrough_length_ms: int
    checkpoints: tuple[Checkpoint, ...]
    default_threshold: int = DEFAULT_THRESHOLD
    algorithm: str = DEFAULT_ALGORITHM

    def __post_init__(self) -> None:
        _validate(self)

    @property
    def final_index(self) -> Optional[int]:
        return len(self.checkpoints) - 1 if self.checkpoints else None


def _validate(pack: CheckpointPack) -> None:
    if pack.walkthrough_length_ms <= 0:
        raise ParseError("walkthrough length must be positive")
    if not 0 <= pack.default_threshold <= 64:
        raise BadThreshold(str(pack.default_threshold))
    prev_ts = -1
    for i, cp in enumerate(pack.checkpoints):
        if cp.index != i:
            raise ParseError(f"checkpoint indices not contiguous at {cp.index}")
        if not 0 <= cp.threshold <= 64:
            raise BadThreshold(str(cp.threshold))
        if cp.timestamp_ms <= prev_ts:
            raise UnsortedTimestamps(
                f"checkpoint {i} at {cp.timestamp_ms} ms after {prev_ts} ms"
            )
        if cp.timestamp_ms > pack.walkthrough_length_ms:
            raise TimestampExceedsLength(
                f"checkpoint {i} at {cp.timestamp_ms} ms exceeds walkthrough length"
            )
        if cp.hash.algorithm != pack.algorithm:
            raise ParseError(
                f"checkpoint {i} hashed with {cp.hash.algorithm}, pack uses {pack.algorithm}"
            )
        prev_ts = cp.timestamp_ms


# ---- pack document I/O ----


def load_pack(source: Union[bytes, str, BinaryIO]) -> CheckpointPack:
    """Load and validate a version-1 pack document."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from None
    if not isinstance(doc, dict) or doc.get("version") != PACK_VERSION:
        raise ParseError(f"unsupported pack version {doc.get('version')!r}"
                         if isinstance(doc, dict) else "pack document must be an object")
    try:
        default_threshold = int(doc.get("default_threshold", DEFAULT_THRESHOLD))
        algorithm = doc.get("algorithm", DEFAULT_ALGORITHM)
        checkpoints = tuple(
            Checkpoint(
                index=int(c["index"]),
                hash=PerceptualHash.parse(c["hash"]),
                timestamp_ms=int(c["timestamp_ms"]),
                threshold=int(c.get("threshold", default_threshold)),
                label=str(c.get("label", "")),
                crop=tuple(c["crop"]) if c.get("crop") is not None else None,
            )
            for c in doc["checkpoints"]
        )
        return CheckpointPack(
            game_id=str(doc["game_id"]),
            walkthrough_length_ms=int(doc["walkthrough_length_ms"]),
            checkpoints=checkpoints,
            default_threshold=default_threshold,
            algorithm=algorithm,
        )
    except PackError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None


def dump_pack(pack: CheckpointPack) -> bytes:
    """Serialize a pack back to its document form."""
    doc = {
        "version": PACK_VERSION,
        "game_id": pack.game_id,
        "algorithm": pack.algorithm,
        "walkthrough_length_ms": pack.walkthrough_length_ms,
        "default_threshold": pack.default_threshold,
        "checkpoints": [
            {
                "index": cp.index,
                "hash": str(cp.hash),
                "timestamp_ms": cp.timestamp_ms,
                **({"threshold": cp.threshold} if cp.threshold != pack.default_threshold else {}),
                "label": cp.label,
                **({"crop": list(cp.crop)} if cp.crop is not None else {}),
            }
            for cp in pack.checkpoints
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


# ---- progress tracking ----


@dataclass
class ProgressState:
    """Furthest-milestone state for one run; owned by a single run."""

    furthest_index: Optional[int] = None
    match_events: list[tuple[int, int, int]] = field(default_factory=list)  # (step, index, distance)
    steps_seen: int = 0


def match_frame(state: ProgressState, pack: CheckpointPack, frame: Frame) -> ProgressState:
    """Check one live frame against every checkpoint and update progress.

    The frame is hashed once; any checkpoint with distance strictly below its
    threshold records a match event.  furthest_index never decreases.
    """
    step = state.steps_seen
    state.steps_seen += 1
    if not pack.checkpoints:
        return state
    live = hash_frame(frame, pack.algorithm)
    best: Optional[int] = None
    for cp in pack.checkpoints:
        distance = hamming_distance(live, cp.hash)
        if distance < cp.threshold:
            state.match_events.append((step, cp.index, distance))
            if best is None or cp.index > best:
                best = cp.index
    if best is not None and (state.furthest_index is None or best > state.furthest_index):
        state.furthest_index = best
    return state


def progress_score(state: ProgressState, pack: CheckpointPack) -> float:
    """Completion fraction: furthest checkpoint's walkthrough-time ratio."""
    if state.furthest_index is None:
        return 0.0
    cp = pack.checkpoints[state.furthest_index]
    return cp.timestamp_ms / pack.walkthrough_length_ms


def overall_score(per_game: Sequence[float]) -> float:
    """Equal-weight mean of per-game completion fractions."""
    if not per_game:
        raise ValueError("overall score needs at least one game")
    for s in per_game:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"score {s} outside [0, 1]")
    return sum(per_game) / len(per_game)


# ---- pack building ----


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    timestamp_ms: int
    threshold: Optional[int] = None
    label: str = ""


def load_image_frame(path: Union[str, Path]) -> Frame:
    """Read an image file into a Frame."""
    try:
        with Image.open(path) as img:
            rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise UnreadableImage(f"{path}: {exc}") from None
    return Frame.from_array(rgb)


def build_pack(
    manifest: Iterable[ManifestEntry],
    walkthrough_length_ms: int,
    game_id: str,
    algorithm: str = DEFAULT_ALGORITHM,
    default_threshold: int = DEFAULT_THRESHOLD,
) -> CheckpointPack:
    """Hash each manifest image and emit a validated pack."""
    entries = list(manifest)
    for a, b in zip(entries, entries[1:]):
        if b.timestamp_ms <= a.timestamp_ms:
            raise UnsortedTimestamps(
                f"{b.image_path} at {b.timestamp_ms} ms after {a.timestamp_ms} ms"
            )
    checkpoints = tuple(
        Checkpoint(
            index=i,
            hash=hash_frame(load_image_frame(e.image_path), algorithm),
            timestamp_ms=e.timestamp_ms,
            threshold=e.threshold if e.threshold is not None else default_threshold,
            label=e.label,
        )
        for i, e in enumerate(entries)
    )
    return CheckpointPack(
        game_id=game_id,
        walkthrough_length_ms=walkthrough_length_ms,
        checkpoints=checkpoints,
        default_threshold=default_threshold,
        algorithm=algorithm,
    )


def load_manifest(source: Union[bytes, str]) -> tuple[list[ManifestEntry], int, str]:
    """Parse a build manifest document: entries, walkthrough length, game id."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
        entries = [
            ManifestEntry(
                image_path=str(e["image"]),
                timestamp_ms=int(e["timestamp_ms"]),
                threshold=int(e["threshold"]) if e.get("threshold") is not None else None,
                label=str(e.get("label", "")),
            )
            for e in doc["checkpoints"]
        ]
        return entries, int(doc["walkthrough_length_ms"]), str(doc["game_id"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None
