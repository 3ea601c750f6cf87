"""Loaders for packaged data: mazes, drag paths, test patterns, prompts."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .phash import Frame

_DATA = "gamebench.data"


def _read_text(subdir: str, name: str) -> str:
    return (resources.files(_DATA) / subdir / name).read_text(encoding="utf-8")


def load_maze(number: int) -> list[str]:
    """Maze grid rows: '#' immovable, '.' movable, 'P' start, 'G' goal."""
    rows = [
        line
        for line in _read_text("mazes", f"maze{number:02d}.txt").splitlines()
        if line and not line.startswith(";")
    ]
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"maze {number} rows have unequal width")
    return rows


def load_path(number: int) -> list[tuple[int, int]]:
    """Drag path waypoints as pixel coordinates."""
    points = []
    for line in _read_text("paths", f"path{number:02d}.txt").splitlines():
        line = line.split(";", 1)[0].strip()
        if not line:
            continue
        x, y = line.split(",")
        points.append((int(x), int(y)))
    if len(points) < 2:
        raise ValueError(f"path {number} needs at least two waypoints")
    return points


def load_pattern(name: str) -> Frame:
    """Fixed RGB test pattern; rows of space-separated r:g:b triples."""
    rows = []
    for line in _read_text("patterns", f"{name}.txt").splitlines():
        line = line.strip()
        if not line or line.startswith(";"):
            continue
        rows.append([[int(v) for v in tok.split(":")] for tok in line.split()])
    return Frame.from_array(np.array(rows, dtype=np.uint8))


def load_prompt(game_id: str) -> str:
    """Per-game system prompt text asset."""
    return (resources.files("gamebench.prompts") / f"{game_id}.txt").read_text(
        encoding="utf-8"
    )
