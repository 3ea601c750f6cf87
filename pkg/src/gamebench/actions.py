"""Language-based action interface shared by agents, humans, and the CLI.

Two front-end grammars feed the same command model: the console grammar
(a fenced ``actions`` block holding a bracketed list of button names and
tuples) and the desktop grammar (an action name plus a comma/plus structured
input string).  Every command also has a canonical single-line serialization
that parses back to itself; the full grammar is documented in
``docs/grammar.md``.

All functions here are pure; timing execution lives in the environment layer.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import Union

BUTTONS = ("A", "B", "START", "SELECT", "UP", "DOWN", "LEFT", "RIGHT")

_NAMED_KEYS = (
    "Enter", "Escape", "Backspace", "Tab", "Space",
    "ArrowLeft", "ArrowRight", "ArrowUp", "ArrowDown",
    "Control", "Alt", "Shift", "Meta",
)
KEY_NAMES = frozenset(
    [f"Key{c}" for c in "ABCDEFGHIJKLMNOPQRSTUVWXYZ"]
    + [f"Digit{d}" for d in "0123456789"]
    + [f"F{n}" for n in range(1, 13)]
    + list(_NAMED_KEYS)
    # Bare alphanumerics: game prompts use keys like "W" and "A" directly.
    + [c for c in "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"]
)

DESKTOP_ACTIONS = (
    "click", "move", "drag", "scroll_up", "scroll_down",
    "write", "press_key", "hold_key", "press_button",
)

CLICK_BUTTONS = ("left", "right")
CLICK_MODIFIERS = ("shift", "ctrl", "alt")

HOLD_KEY_DEFAULT_SECONDS = 0.5

DEFAULT_SURFACE_BOUNDS = (640, 400)


@dataclass(frozen=True)
class DefaultTimings:
    """Configurable default press durations, in seconds."""

    key_press_default: float = 0.1
    button_press_default: float = 0.5

    def __post_init__(self) -> None:
        if self.key_press_default <= 0 or self.button_press_default <= 0:
            raise ValueError("default press durations must be positive")


DEFAULT_TIMINGS = DefaultTimings()


# ---- errors ----


class ActionError(Exception):
    """Base class for every declared parse error."""


class NoActionBlock(ActionError):
    """Missing or multiple fenced ``actions`` blocks."""


class MalformedActionList(ActionError):
    """Fenced block content is not a bracketed list of names and tuples."""


class UnknownButton(ActionError):
    """Button name outside the 8-button console vocabulary."""


class EmptyTuple(ActionError):
    """A chord tuple with no buttons."""


class UnknownAction(ActionError):
    """Action name outside the declared desktop action set."""


class UnknownKey(ActionError):
    """Key name outside the declared key-name vocabulary."""


class UnknownModifier(ActionError):
    """Click option that is neither a mouse button nor a modifier."""


class MalformedCoordinates(ActionError):
    """Mouse coordinates that are not an integer pair."""


class CoordinateOutOfRange(ActionError):
    """Mouse coordinates outside the environment's surface bounds."""


class BadDuration(ActionError):
    """Non-positive or non-numeric duration."""


class BadAmount(ActionError):
    """Non-positive or non-numeric scroll amount."""


# ---- command model ----


@dataclass(frozen=True)
class ButtonChord:
    """One or more console buttons held together for ``duration`` seconds."""

    buttons: tuple[str, ...]
    duration: float

    def __post_init__(self) -> None:
        if not self.buttons:
            raise ValueError("chord must contain at least one button")
        if len(set(self.buttons)) != len(self.buttons):
            raise ValueError("duplicate buttons in chord")
        for b in self.buttons:
            if b not in BUTTONS:
                raise ValueError(f"unknown button {b!r}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    @property
    def hazardous(self) -> bool:
        """True for the START+SELECT combination, which soft-resets consoles."""
        return "START" in self.buttons and "SELECT" in self.buttons


@dataclass(frozen=True)
class KeyChord:
    """One or more keys held together for ``duration`` seconds."""

    keys: tuple[str, ...]
    duration: float

    def __post_init__(self) -> None:
        if not self.keys:
            raise ValueError("chord must contain at least one key")
        if len(set(self.keys)) != len(self.keys):
            raise ValueError("duplicate keys in chord")
        for k in self.keys:
            if k not in KEY_NAMES:
                raise ValueError(f"unknown key {k!r}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")


@dataclass(frozen=True)
class ButtonSequence:
    chords: tuple[ButtonChord, ...]


@dataclass(frozen=True)
class KeySequence:
    chords: tuple[KeyChord, ...]


@dataclass(frozen=True)
class HoldKey:
    key: str
    seconds: float

    def __post_init__(self) -> None:
        if self.key not in KEY_NAMES:
            raise ValueError(f"unknown key {self.key!r}")
        if self.seconds <= 0:
            raise ValueError("hold duration must be positive")


@dataclass(frozen=True)
class Click:
    button: str = "left"
    modifiers: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.button not in CLICK_BUTTONS:
            raise ValueError(f"unknown mouse button {self.button!r}")
        if not self.modifiers <= set(CLICK_MODIFIERS):
            raise ValueError(f"unknown modifiers {self.modifiers!r}")


@dataclass(frozen=True)
class MouseMove:
    x: int
    y: int


@dataclass(frozen=True)
class Drag:
    x: int
    y: int


@dataclass(frozen=True)
class ScrollUp:
    amount: int

    def __post_init__(self) -> None:
        if self.amount <= 0:
            raise ValueError("scroll amount must be positive")


@dataclass(frozen=True)
class ScrollDown:
    amount: int

    def __post_init__(self) -> None:
        if self.amount <= 0:
            raise ValueError("scroll amount must be positive")


@dataclass(frozen=True)
class Write:
    text: str


ActionCommand = Union[
    ButtonSequence, KeySequence, HoldKey, Click, MouseMove, Drag,
    ScrollUp, ScrollDown, Write,
]


# ---- console grammar ----

_ACTIONS_FENCE = re.compile(r"```actions\s*\n(.*?)```", re.DOTALL)


def parse_gameboy_actions(
    text: str, timings: DefaultTimings = DEFAULT_TIMINGS
) -> list[ButtonChord]:
    """Parse the fenced ``actions`` block of a console agent response.

    Scalar entries become one-button chords, tuples become multi-button
    chords; ``#`` comments are stripped.  Chord order is preserved and every
    chord gets the configured default button press duration.
    """
    blocks = _ACTIONS_FENCE.findall(text)
    if len(blocks) != 1:
        raise NoActionBlock(f"expected exactly one actions block, found {len(blocks)}")
    body = "\n".join(line.split("#", 1)[0] for line in blocks[0].splitlines())
    try:
        value = ast.literal_eval(body.strip())
    except (ValueError, SyntaxError, MemoryError, RecursionError) as exc:
        raise MalformedActionList(str(exc)) from None
    if not isinstance(value, (list, tuple)):
        raise MalformedActionList(f"expected a list, got {type(value).__name__}")
    chords: list[ButtonChord] = []
    for entry in value:
        if isinstance(entry, str):
            names: tuple[str, ...] = (entry,)
        elif isinstance(entry, tuple):
            if not entry:
                raise EmptyTuple("empty button tuple")
            if not all(isinstance(b, str) for b in entry):
                raise MalformedActionList(f"non-string button in {entry!r}")
            # Repeats inside one tuple collapse to a single held button.
            names = tuple(dict.fromkeys(entry))
        else:
            raise MalformedActionList(f"unexpected entry {entry!r}")
        for name in names:
            if name not in BUTTONS:
                raise UnknownButton(name)
        chords.append(ButtonChord(buttons=names, duration=timings.button_press_default))
    return chords


# ---- desktop grammar ----


def parse_dos_action(
    action_name: str,
    action_input: str,
    timings: DefaultTimings = DEFAULT_TIMINGS,
    bounds: tuple[int, int] = DEFAULT_SURFACE_BOUNDS,
) -> ActionCommand:
    """Parse one desktop action (name, input) pair into a command.

    In ``press_key`` inputs a comma separates sequential chords while ``+``
    binds keys into one simultaneous chord.  Mouse coordinates are validated
    against ``bounds``.
    """
    if action_name == "click":
        return _parse_click(action_input)
    if action_name in ("move", "drag"):
        x, y = _parse_coordinates(action_input, bounds)
        return MouseMove(x, y) if action_name == "move" else Drag(x, y)
    if action_name in ("scroll_up", "scroll_down"):
        amount = _parse_amount(action_input)
        return ScrollUp(amount) if action_name == "scroll_up" else ScrollDown(amount)
    if action_name == "write":
        return Write(action_input)
    if action_name == "press_key":
        return _parse_press_key(action_input, timings)
    if action_name == "hold_key":
        return _parse_hold_key(action_input)
    if action_name == "press_button":
        return _parse_press_button(action_input, timings)
    raise UnknownAction(action_name)


def _parse_click(text: str) -> Click:
    button = "left"
    modifiers: set[str] = set()
    for token in filter(None, (t.strip() for t in text.split("+"))):
        token = token.lower()
        if token in CLICK_BUTTONS:
            button = token
        elif token in CLICK_MODIFIERS:
            modifiers.add(token)
        else:
            raise UnknownModifier(token)
    return Click(button=button, modifiers=frozenset(modifiers))


def _parse_coordinates(text: str, bounds: tuple[int, int]) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise MalformedCoordinates(text)
    try:
        x, y = int(parts[0].strip()), int(parts[1].strip())
    except ValueError:
        raise MalformedCoordinates(text) from None
    w, h = bounds
    if not (0 <= x <= w and 0 <= y <= h):
        raise CoordinateOutOfRange(f"({x},{y}) outside {w}x{h}")
    return x, y


def _parse_amount(text: str) -> int:
    try:
        amount = int(text.strip())
    except ValueError:
        raise BadAmount(text) from None
    if amount <= 0:
        raise BadAmount(text)
    return amount


def _parse_duration(text: str) -> float:
    try:
        seconds = float(text)
    except (ValueError, OverflowError):
        raise BadDuration(text) from None
    if not seconds > 0 or seconds != seconds or seconds == float("inf"):
        raise BadDuration(text)
    return seconds


def _parse_press_key(text: str, timings: DefaultTimings) -> KeySequence:
    chords: list[KeyChord] = []
    if text.strip():
        for chord_text in text.split(","):
            keys: list[str] = []
            duration = timings.key_press_default
            chord_text = chord_text.strip()
            if "@" in chord_text:
                chord_text, _, dur_text = chord_text.rpartition("@")
                duration = _parse_duration(dur_text)
            for key in (k.strip() for k in chord_text.split("+")):
                if key not in KEY_NAMES:
                    raise UnknownKey(key)
                if key not in keys:
                    keys.append(key)
            chords.append(KeyChord(keys=tuple(keys), duration=duration))
    return KeySequence(chords=tuple(chords))


def _parse_hold_key(text: str) -> HoldKey:
    key_text, sep, dur_text = text.partition(",")
    key = key_text.strip()
    if key not in KEY_NAMES:
        raise UnknownKey(key)
    seconds = _parse_duration(dur_text.strip()) if sep else HOLD_KEY_DEFAULT_SECONDS
    return HoldKey(key=key, seconds=seconds)


def _parse_press_button(text: str, timings: DefaultTimings) -> ButtonSequence:
    chords: list[ButtonChord] = []
    if text.strip():
        for chord_text in text.split(","):
            buttons: list[str] = []
            duration = timings.button_press_default
            chord_text = chord_text.strip()
            if "@" in chord_text:
                chord_text, _, dur_text = chord_text.rpartition("@")
                duration = _parse_duration(dur_text)
            for name in (b.strip() for b in chord_text.split("+")):
                if name not in BUTTONS:
                    raise UnknownButton(name)
                if name not in buttons:
                    buttons.append(name)
            chords.append(ButtonChord(buttons=tuple(buttons), duration=duration))
    return ButtonSequence(chords=tuple(chords))


# ---- canonical serialization ----


def serialize(command: ActionCommand, timings: DefaultTimings = DEFAULT_TIMINGS) -> str:
    """Canonical single-line form satisfying parse(serialize(c)) == c."""
    if isinstance(command, ButtonSequence):
        body = ",".join(
            _chord_text("+".join(c.buttons), c.duration, timings.button_press_default)
            for c in command.chords
        )
        return f"press_button {body}"
    if isinstance(command, KeySequence):
        body = ",".join(
            _chord_text("+".join(c.keys), c.duration, timings.key_press_default)
            for c in command.chords
        )
        return f"press_key {body}"
    if isinstance(command, HoldKey):
        return f"hold_key {command.key},{command.seconds!r}"
    if isinstance(command, Click):
        tokens = [] if command.button == "left" else [command.button]
        tokens += [m for m in CLICK_MODIFIERS if m in command.modifiers]
        return f"click {'+'.join(tokens)}" if tokens else "click"
    if isinstance(command, MouseMove):
        return f"move {command.x},{command.y}"
    if isinstance(command, Drag):
        return f"drag {command.x},{command.y}"
    if isinstance(command, ScrollUp):
        return f"scroll_up {command.amount}"
    if isinstance(command, ScrollDown):
        return f"scroll_down {command.amount}"
    if isinstance(command, Write):
        return f"write {command.text}"
    raise TypeError(f"not an ActionCommand: {command!r}")


def _chord_text(names: str, duration: float, default: float) -> str:
    return names if duration == default else f"{names}@{duration!r}"


def parse_command(
    text: str,
    timings: DefaultTimings = DEFAULT_TIMINGS,
    bounds: tuple[int, int] = DEFAULT_SURFACE_BOUNDS,
) -> ActionCommand:
    """Parse one canonical command line: action name, space, input string."""
    name, sep, rest = text.partition(" ")
    name = name.strip()
    if name not in DESKTOP_ACTIONS:
        raise UnknownAction(name)
    # write keeps its input verbatim; everything else ignores surrounding space
    return parse_dos_action(name, rest if name == "write" else rest.strip(), timings, bounds)


def command_duration_ms(command: ActionCommand) -> int:
    """Total game-time occupied by executing a command, in whole milliseconds.

    Mouse, scroll, and text commands are instantaneous.
    """
    if isinstance(command, (ButtonSequence, KeySequence)):
        return round(sum(c.duration for c in command.chords) * 1000)
    if isinstance(command, HoldKey):
        return round(command.seconds * 1000)
    return 0
