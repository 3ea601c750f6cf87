"""Built-in practice environments: clicking, dragging, and 2D navigation.

All three render onto a 640x400 desktop surface, consume the same action
commands as real games, and are fully deterministic for a given seed.  Scores
are targets completed out of 10 within a 250-action budget.
"""

from __future__ import annotations

import math
import random
from typing import Optional

import numpy as np

from . import assets
from .actions import ActionCommand, Click, Drag, KeySequence, MouseMove
from .environment import CommandRejected, EnvironmentContract
from .phash import Frame

SURFACE = (640, 400)
ACTION_BUDGET = 250
TARGET_COUNT = 10

BG = (255, 255, 255)
TARGET_GREEN = (30, 160, 30)
MARKER_RED = (200, 30, 30)
PATH_BLACK = (0, 0, 0)
TILE_LIGHT = (200, 200, 200)
TILE_DARK = (80, 80, 80)

CLICK_RADIUS = 40
DRAG_TOLERANCE = 12
MARKER_RADIUS = 8


def _blank() -> np.ndarray:
    img = np.empty((SURFACE[1], SURFACE[0], 3), dtype=np.uint8)
    img[:] = BG
    return img


def _draw_disc(img: np.ndarray, cx: int, cy: int, radius: int, color) -> None:
    yy, xx = np.ogrid[: img.shape[0], : img.shape[1]]
    mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius
    img[mask] = color


def _draw_segment(img: np.ndarray, p0, p1, color, half_width: int = 1) -> None:
    x0, y0 = p0
    x1, y1 = p1
    steps = max(abs(x1 - x0), abs(y1 - y0), 1)
    for i in range(steps + 1):
        x = round(x0 + (x1 - x0) * i / steps)
        y = round(y0 + (y1 - y0) * i / steps)
        img[
            max(y - half_width, 0) : y + half_width + 1,
            max(x - half_width, 0) : x + half_width + 1,
        ] = color


class _PracticeBase(EnvironmentContract):
    """Shared bookkeeping: action budget, game time, mouse position."""

    def __init__(self) -> None:
        self._time_ms = 0
        self.actions_used = 0
        self.mouse = (0, 0)

    def surface_bounds(self) -> tuple[int, int]:
        return SURFACE

    def advance(self, dt_ms: int) -> None:
        self._time_ms += dt_ms

    def snapshot(self) -> Frame:
        return Frame.from_array(self._render(), captured_at_ms=self._time_ms)

    def _render(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def score(self) -> int:
        raise NotImplementedError

    def _budget_exhausted(self) -> bool:
        return self.actions_used >= ACTION_BUDGET


class ClickingGame(_PracticeBase):
    """Click the green disc 10 times in under 250 actions."""

    def __init__(self, seed: int = 0) -> None:
        super().__init__()
        self.reset(seed)

    def reset(self, seed: int) -> Frame:
        self._time_ms = 0
        self.actions_used = 0
        self.mouse = (0, 0)
        self.hits = 0
        self._rng = random.Random(seed)
        self.target: tuple[int, int] = self._spawn(previous=None)
        return self.snapshot()

    def _spawn(self, previous: Optional[tuple[int, int]]) -> tuple[int, int]:
        # Target disc must lie fully on screen and clear of the previous one.
        while True:
            cx = self._rng.randint(CLICK_RADIUS, SURFACE[0] - CLICK_RADIUS)
            cy = self._rng.randint(CLICK_RADIUS, SURFACE[1] - CLICK_RADIUS)
            if previous is None or math.dist((cx, cy), previous) > 2 * CLICK_RADIUS:
                return (cx, cy)

    def apply(self, command: ActionCommand) -> None:
        if self.is_terminal():
            return
        if isinstance(command, MouseMove):
            self.mouse = (command.x, command.y)
        elif isinstance(command, Drag):
            self.mouse = (command.x, command.y)
        elif isinstance(command, Click):
            if math.dist(self.mouse, self.target) <= CLICK_RADIUS:
                self.hits += 1
                if self.hits < TARGET_COUNT:
                    self.target = self._spawn(previous=self.target)
        else:
            raise CommandRejected(f"clicking game takes mouse commands, not {command!r}")
        self.actions_used += 1

    def is_terminal(self) -> bool:
        return self.hits >= TARGET_COUNT or self._budget_exhausted()

    @property
    def score(self) -> int:
        return self.hits

    def _render(self) -> np.ndarray:
        img = _blank()
        if self.hits < TARGET_COUNT:
            _draw_disc(img, *self.target, CLICK_RADIUS, TARGET_GREEN)
        return img


class NavigationGame(_PracticeBase):
    """Move the red square to the green square across 10 shipped mazes."""

    ARROWS = {
        "ArrowUp": (0, -1),
        "ArrowDown": (0, 1),
        "ArrowLeft": (-1, 0),
        "ArrowRight": (1, 0),
    }

    def __init__(self, seed: int = 0) -> None:
        super().__init__()
        self.reset(seed)

    def reset(self, seed: int) -> Frame:
        self._time_ms = 0
        self.actions_used = 0
        self.mouse = (0, 0)
        self.completed = 0
        self.maze_index = 0
        self._load(1)
        return self.snapshot()

    def _load(self, number: int) -> None:
        self.maze_index = number
        rows = assets.load_maze(number)
        self.grid = [[c == "#" for c in row] for row in rows]
        for y, row in enumerate(rows):
            for x, c in enumerate(row):
                if c == "P":
                    self.player = (x, y)
                elif c == "G":
                    self.goal = (x, y)

    def apply(self, command: ActionCommand) -> None:
        if self.is_terminal():
            return
        arrow = self._single_arrow(command)
        self.actions_used += 1
        dx, dy = self.ARROWS[arrow]
        x, y = self.player[0] + dx, self.player[1] + dy
        if 0 <= y < len(self.grid) and 0 <= x < len(self.grid[0]) and not self.grid[y][x]:
            self.player = (x, y)
        if self.player == self.goal:
            self.completed += 1
            if self.completed < TARGET_COUNT:
                self._load(self.maze_index + 1)

    def _single_arrow(self, command: ActionCommand) -> str:
        if (
            isinstance(command, KeySequence)
            and len(command.chords) == 1
            and len(command.chords[0].keys) == 1
            and command.chords[0].keys[0] in self.ARROWS
        ):
            return command.chords[0].keys[0]
        raise CommandRejected(f"navigation takes a single arrow-key chord, not {command!r}")

    def is_terminal(self) -> bool:
        return self.completed >= TARGET_COUNT or self._budget_exhausted()

    @property
    def score(self) -> int:
        return self.completed

    def _render(self) -> np.ndarray:
        img = _blank()
        rows, cols = len(self.grid), len(self.grid[0])
        cell = min(SURFACE[0] // cols, SURFACE[1] // rows)
        ox = (SURFACE[0] - cell * cols) // 2
        oy = (SURFACE[1] - cell * rows) // 2
        for y in range(rows):
            for x in range(cols):
                color = TILE_DARK if self.grid[y][x] else TILE_LIGHT
                if (x, y) == self.goal:
                    color = TARGET_GREEN
                if (x, y) == self.player:
                    color = MARKER_RED
                img[oy + y * cell : oy + (y + 1) * cell, ox + x * cell : ox + (x + 1) * cell] = color
        return img


def _point_segment_distance(p, a, b) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    if dx == 0 and dy == 0:
        return math.dist(p, a)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)))
    return math.dist(p, (ax + t * dx, ay + t * dy))


class DraggingGame(_PracticeBase):
    """Drag the red marker along the black path through 10 shipped levels.

    A drag grabs the marker only if it starts within tolerance of it; straying
    beyond tolerance of the path resets the marker to the path start.
    """

    def __init__(self, seed: int = 0, tolerance: int = DRAG_TOLERANCE) -> None:
        super().__init__()
        self.on_path_tolerance = tolerance
        self.reset(seed)

    def reset(self, seed: int) -> Frame:
        self._time_ms = 0
        self.actions_used = 0
        self.mouse = (0, 0)
        self.completed = 0
        self.level = 0
        self._load(1)
        return self.snapshot()

    def _load(self, number: int) -> None:
        self.level = number
        self.path = assets.load_path(number)
        self.marker: tuple[float, float] = self.path[0]

    def _path_distance(self, p) -> float:
        return min(
            _point_segment_distance(p, a, b) for a, b in zip(self.path, self.path[1:])
        )

    def apply(self, command: ActionCommand) -> None:
        if self.is_terminal():
            return
        if isinstance(command, MouseMove):
            self.mouse = (command.x, command.y)
        elif isinstance(command, Drag):
            self._drag_to((command.x, command.y))
        else:
            raise CommandRejected(f"dragging game takes mouse commands, not {command!r}")
        self.actions_used += 1

    def _drag_to(self, end: tuple[int, int]) -> None:
        start = self.mouse
        self.mouse = end
        if math.dist(start, self.marker) > self.on_path_tolerance:
            return  # drag did not grab the marker
        steps = max(round(math.dist(start, end)), 1)
        for i in range(1, steps + 1):
            p = (
                start[0] + (end[0] - start[0]) * i / steps,
                start[1] + (end[1] - start[1]) * i / steps,
            )
            if self._path_distance(p) > self.on_path_tolerance:
                self.marker = self.path[0]
                return
            self.marker = p
            if math.dist(p, self.path[-1]) <= self.on_path_tolerance:
                self.completed += 1
                if self.completed < TARGET_COUNT:
                    self._load(self.level + 1)
                return

    def is_terminal(self) -> bool:
        return self.completed >= TARGET_COUNT or self._budget_exhausted()

    @property
    def score(self) -> int:
        return self.completed

    def _render(self) -> np.ndarray:
        img = _blank()
        for a, b in zip(self.path, self.path[1:]):
            _draw_segment(img, a, b, PATH_BLACK)
        _draw_disc(img, *self.path[-1], MARKER_RADIUS + 2, TARGET_GREEN)
        _draw_disc(img, round(self.marker[0]), round(self.marker[1]), MARKER_RADIUS, MARKER_RED)
        return img


PRACTICE_GAMES = {
    "clicking": ClickingGame,
    "dragging": DraggingGame,
    "navigation": NavigationGame,
}


def make_practice_game(name: str, seed: int = 0) -> _PracticeBase:
    try:
        cls = PRACTICE_GAMES[name]
    except KeyError:
        raise ValueError(f"unknown practice game {name!r}") from None
    return cls(seed=seed)
