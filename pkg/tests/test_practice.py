"""Practice environments: oracle playthroughs and mechanic edge cases."""

from __future__ import annotations

import math
import random
from collections import deque

import pytest

from gamebench.actions import Click, Drag, KeyChord, KeySequence, MouseMove, Write
from gamebench.assets import load_maze, load_path
from gamebench.environment import CommandRejected
from gamebench.practice import (
    ACTION_BUDGET,
    CLICK_RADIUS,
    DRAG_TOLERANCE,
    TARGET_COUNT,
    ClickingGame,
    DraggingGame,
    NavigationGame,
    make_practice_game,
)

ARROWS = {
    "ArrowUp": (0, -1),
    "ArrowDown": (0, 1),
    "ArrowLeft": (-1, 0),
    "ArrowRight": (1, 0),
}


def arrow(name: str) -> KeySequence:
    return KeySequence((KeyChord((name,), 0.1),))


def solve_maze(grid, start, goal) -> list[str]:
    queue = deque([start])
    prev = {start: None}
    while queue:
        cur = queue.popleft()
        if cur == goal:
            break
        for name, (dx, dy) in ARROWS.items():
            nxt = (cur[0] + dx, cur[1] + dy)
            if (
                0 <= nxt[1] < len(grid)
                and 0 <= nxt[0] < len(grid[0])
                and not grid[nxt[1]][nxt[0]]
                and nxt not in prev
            ):
                prev[nxt] = (cur, name)
                queue.append(nxt)
    moves = []
    cur = goal
    while prev[cur] is not None:
        cur, name = prev[cur]
        moves.append(name)
    return list(reversed(moves))


# ---- clicking ----


def play_clicking(seed: int) -> ClickingGame:
    env = ClickingGame(seed=seed)
    while not env.is_terminal():
        env.apply(MouseMove(*env.target))
        env.apply(Click())
    return env


@pytest.mark.parametrize("seed", [0, 1, 7, 42])
def test_clicking_oracle_completes_in_20_actions(seed):
    env = play_clicking(seed)
    assert env.score == TARGET_COUNT
    assert env.actions_used <= 20


def test_clicking_respawn_clears_previous_target():
    for seed in range(25):
        env = ClickingGame(seed=seed)
        previous = env.target
        env.apply(MouseMove(*previous))
        env.apply(Click())
        assert math.dist(env.target, previous) > 2 * CLICK_RADIUS


def test_clicking_edge_of_disc_hits_and_misses():
    env = ClickingGame(seed=0)
    tx, ty = env.target
    # exactly on the rim counts as a hit
    env.apply(MouseMove(tx + CLICK_RADIUS, ty))
    env.apply(Click())
    assert env.hits == 1
    tx, ty = env.target
    env.apply(MouseMove(tx + CLICK_RADIUS + 1, ty))
    env.apply(Click())
    assert env.hits == 1  # one pixel outside misses


def test_clicking_rejects_keyboard_commands():
    env = ClickingGame(seed=0)
    with pytest.raises(CommandRejected):
        env.apply(arrow("ArrowUp"))
    with pytest.raises(CommandRejected):
        env.apply(Write("hi"))


def test_clicking_budget_exhaustion_terminates():
    env = ClickingGame(seed=0)
    for _ in range(ACTION_BUDGET):
        env.apply(MouseMove(0, 0))
    assert env.is_terminal()
    assert env.score == 0


# ---- navigation ----


def test_all_shipped_mazes_are_solvable_within_10_moves():
    for number in range(1, 11):
        rows = load_maze(number)
        grid = [[c == "#" for c in row] for row in rows]
        start = goal = None
        for y, row in enumerate(rows):
            for x, c in enumerate(row):
                if c == "P":
                    start = (x, y)
                elif c == "G":
                    goal = (x, y)
        assert start and goal, f"maze {number} missing start or goal"
        moves = solve_maze(grid, start, goal)
        assert 1 <= len(moves) <= 10, f"maze {number} needs {len(moves)} moves"


def test_navigation_oracle_completes_all_mazes():
    env = NavigationGame(seed=0)
    while not env.is_terminal():
        for name in solve_maze(env.grid, env.player, env.goal):
            env.apply(arrow(name))
    assert env.score == TARGET_COUNT
    assert env.actions_used <= ACTION_BUDGET


def test_navigation_walls_block_movement():
    env = NavigationGame(seed=0)
    for name in ARROWS:
        before = env.player
        env.apply(arrow(name))
        x, y = env.player
        assert not env.grid[y][x]  # never inside a wall
        env.player = before  # restore for the next direction probe


def test_navigation_random_walk_stays_in_bounds():
    env = NavigationGame(seed=0)
    rng = random.Random(8)
    names = list(ARROWS)
    for _ in range(ACTION_BUDGET):
        if env.is_terminal():
            break
        env.apply(arrow(rng.choice(names)))
        x, y = env.player
        assert 0 <= x < len(env.grid[0]) and 0 <= y < len(env.grid)


def test_navigation_rejects_non_arrow_commands():
    env = NavigationGame(seed=0)
    with pytest.raises(CommandRejected):
        env.apply(Click())
    with pytest.raises(CommandRejected):
        env.apply(KeySequence((KeyChord(("KeyA",), 0.1),)))
    with pytest.raises(CommandRejected):
        env.apply(KeySequence((KeyChord(("ArrowUp", "ArrowLeft"), 0.1),)))


# ---- dragging ----


def play_dragging(seed: int) -> DraggingGame:
    env = DraggingGame(seed=seed)
    while not env.is_terminal():
        level = env.level
        env.apply(MouseMove(*env.path[0]))
        for point in env.path[1:]:
            if env.level != level:
                break
            env.apply(Drag(*point))
    return env


def test_dragging_oracle_completes_all_levels():
    env = play_dragging(0)
    assert env.score == TARGET_COUNT
    assert env.actions_used <= ACTION_BUDGET


def test_shipped_paths_are_well_formed():
    for number in range(1, 11):
        path = load_path(number)
        assert len(path) >= 2
        # interior must stay clear of the endpoint so completion is earned
        for a, b in zip(path[:-2], path[1:-1]):
            for t in range(11):
                p = (
                    a[0] + (b[0] - a[0]) * t / 10,
                    a[1] + (b[1] - a[1]) * t / 10,
                )
                assert math.dist(p, path[-1]) > DRAG_TOLERANCE, f"path {number}"


def test_drag_without_grabbing_leaves_marker():
    env = DraggingGame(seed=0)
    start = env.path[0]
    env.apply(MouseMove(start[0] + 100, start[1] + 50))  # far from marker
    env.apply(Drag(start[0] + 150, start[1] + 50))
    assert env.marker == start


def test_straying_resets_marker_to_path_start():
    env = DraggingGame(seed=0)
    start = env.path[0]
    env.apply(MouseMove(*start))
    env.apply(Drag(start[0] + 30, start[1] + 30))  # off the horizontal path
    assert env.marker == start
    assert env.completed == 0


def test_drag_within_tolerance_advances_marker():
    env = DraggingGame(seed=0)
    start = env.path[0]
    env.apply(MouseMove(*start))
    env.apply(Drag(start[0] + 60, start[1]))
    assert env.marker != start
    assert env.completed == 0


def test_dragging_rejects_keyboard_commands():
    env = DraggingGame(seed=0)
    with pytest.raises(CommandRejected):
        env.apply(arrow("ArrowUp"))


# ---- shared harness behavior ----


def test_make_practice_game_registry():
    assert isinstance(make_practice_game("clicking"), ClickingGame)
    assert isinstance(make_practice_game("dragging"), DraggingGame)
    assert isinstance(make_practice_game("navigation"), NavigationGame)
    with pytest.raises(ValueError):
        make_practice_game("chess")


def test_reset_restores_initial_state():
    env = play_clicking(3)
    assert env.is_terminal()
    env.reset(3)
    assert env.score == 0 and env.actions_used == 0 and not env.is_terminal()


def test_same_seed_same_frames():
    a = ClickingGame(seed=9).snapshot()
    b = ClickingGame(seed=9).snapshot()
    assert a == b
    c = ClickingGame(seed=10).snapshot()
    assert c != a
