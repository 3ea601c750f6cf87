"""ReAct agent loop: prompt assembly, model calls, response parsing, memory.

The scaffold is model-agnostic: anything satisfying :class:`ModelClient` can
drive it.  A deterministic :class:`MockModel` (scripted transcript player)
ships in-tree as the primary test double, since frontier-model calls are not
reproducible.
"""

from __future__ import annotations

import base64
import io
import json
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence, Union

from PIL import Image

from .actions import (
    ActionCommand,
    ActionError,
    ButtonSequence,
    DEFAULT_SURFACE_BOUNDS,
    DEFAULT_TIMINGS,
    DefaultTimings,
    parse_dos_action,
    parse_gameboy_actions,
)
from .phash import Frame

CONTEXT_WINDOW_STEPS = 20
MALFORMED_RETRY_BUDGET = 3


class MalformedResponse(Exception):
    """Model response with no parseable structured object."""


class ModelTransportError(Exception):
    """The model endpoint could not be reached or errored."""


class ModelUnavailable(Exception):
    """Transport failures exhausted the retry budget."""


@dataclass(frozen=True)
class ModelSettings:
    temperature: float = 0.7
    max_output_tokens: int = 1024


@dataclass(frozen=True)
class ModelResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


class ModelClient(Protocol):
    settings: ModelSettings

    def complete(self, system_prompt: str, messages: list[dict]) -> ModelResponse: ...


class MockModel:
    """Scripted transcript player.

    Each transcript entry is either a response string, a :class:`ModelResponse`,
    or an exception instance to raise (e.g. ``ModelTransportError()``).
    """

    def __init__(
        self,
        transcript: Sequence[Union[str, ModelResponse, Exception]],
        settings: ModelSettings = ModelSettings(),
        repeat_last: bool = False,
    ) -> None:
        self.settings = settings
        self._transcript = list(transcript)
        self._repeat_last = repeat_last
        self.calls: list[list[dict]] = []

    def complete(self, system_prompt: str, messages: list[dict]) -> ModelResponse:
        self.calls.append(messages)
        index = len(self.calls) - 1
        if index >= len(self._transcript):
            if self._repeat_last and self._transcript:
                index = len(self._transcript) - 1
            else:
                raise ModelTransportError("transcript exhausted")
        entry = self._transcript[index]
        if isinstance(entry, Exception):
            raise entry
        if isinstance(entry, str):
            return ModelResponse(text=entry)
        return entry


@dataclass
class Scratchpad:
    """Agent-maintained memory, replaced wholesale by non-empty updates."""

    text: str = ""

    def update(self, memory_update: str) -> None:
        if memory_update:
            self.text = memory_update


@dataclass(frozen=True)
class WindowEntry:
    frame_payloads: tuple[bytes, ...]  # PNG-encoded observation frames
    thought: str
    action_text: str


class ContextWindow:
    """FIFO ring of the last N (frames, thought, action) triples."""

    def __init__(self, capacity: int = CONTEXT_WINDOW_STEPS) -> None:
        if capacity < 1:
            raise ValueError("window capacity must be positive")
        self.capacity = capacity
        self._entries: deque[WindowEntry] = deque(maxlen=capacity)

    def append(self, entry: WindowEntry) -> None:
        self._entries.append(entry)

    @property
    def entries(self) -> tuple[WindowEntry, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)


@dataclass
class AgentTurn:
    thought: str
    action_name: str
    action_input: str
    memory_update: str
    raw_response: str
    parsed: list[ActionCommand]
    error: Optional[str] = None
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def action_text(self) -> str:
        if self.action_input:
            return f"{self.action_name} {self.action_input}"
        return self.action_name


def encode_frame_png(frame: Frame, downscale: int = 1) -> bytes:
    """Lossless PNG payload of a frame, optionally nearest-neighbor downscaled."""
    img = Image.fromarray(frame.to_array())
    if downscale > 1:
        img = img.resize(
            (max(frame.width // downscale, 1), max(frame.height // downscale, 1)),
            Image.NEAREST,
        )
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _image_part(payload: bytes) -> dict:
    return {
        "type": "image",
        "media_type": "image/png",
        "data": base64.b64encode(payload).decode("ascii"),
    }


def build_messages(
    system_prompt: str,
    window: ContextWindow,
    memory: Scratchpad,
    frames: Sequence[Frame],
) -> list[dict]:
    """Deterministic chat-message assembly.

    Order: system prompt, chronological history triples (history frames keep
    whatever resolution they were stored at), current frames at full
    resolution, then the scratchpad text.
    """
    messages: list[dict] = [
        {"role": "system", "content": [{"type": "text", "text": system_prompt}]}
    ]
    for entry in window.entries:
        parts = [_image_part(p) for p in entry.frame_payloads]
        messages.append({"role": "user", "content": parts})
        messages.append(
            {
                "role": "assistant",
                "content": [
                    {"type": "text", "text": entry.thought},
                    {"type": "text", "text": entry.action_text},
                ],
            }
        )
    current = [_image_part(encode_frame_png(f)) for f in frames]
    current.append({"type": "text", "text": f"Memory:\n{memory.text}"})
    messages.append({"role": "user", "content": current})
    return messages


_JSON_FENCE = re.compile(r"```(?:json)?\s*\n?(.*?)```", re.DOTALL)


def parse_desktop_response(
    text: str,
    timings: DefaultTimings = DEFAULT_TIMINGS,
    bounds: tuple[int, int] = DEFAULT_SURFACE_BOUNDS,
) -> AgentTurn:
    """Extract the structured thought/action/memory object from a response.

    Surrounding code fences are tolerated even though the prompt forbids them.
    Action parsing errors propagate from the action grammar.
    """
    candidate = text
    fenced = _JSON_FENCE.search(text)
    if fenced:
        candidate = fenced.group(1)
    start, end = candidate.find("{"), candidate.rfind("}")
    if start < 0 or end <= start:
        raise MalformedResponse("no JSON object in response")
    try:
        obj = json.loads(candidate[start : end + 1])
    except json.JSONDecodeError as exc:
        raise MalformedResponse(str(exc)) from None
    if not isinstance(obj, dict) or "action" not in obj:
        raise MalformedResponse("response object missing an action")
    action_name = str(obj.get("action", ""))
    action_input = str(obj.get("action_input", "") or "")
    command = parse_dos_action(action_name, action_input, timings, bounds)
    return AgentTurn(
        thought=str(obj.get("thought", "")),
        action_name=action_name,
        action_input=action_input,
        memory_update=str(obj.get("memory", "") or ""),
        raw_response=text,
        parsed=[command],
    )


def parse_console_response(
    text: str, timings: DefaultTimings = DEFAULT_TIMINGS
) -> AgentTurn:
    """Parse a console response: fenced actions block plus surrounding thought."""
    chords = parse_gameboy_actions(text, timings)
    thought = re.sub(r"```actions\s*\n.*?```", "", text, flags=re.DOTALL).strip()
    return AgentTurn(
        thought=thought,
        action_name="press_button",
        action_input=",".join("+".join(c.buttons) for c in chords),
        memory_update="",
        raw_response=text,
        parsed=[ButtonSequence(tuple(chords))],
    )


class VgAgent:
    """One ReAct agent instance: window, scratchpad, and a model client.

    ``platform`` selects the response grammar: "desktop" (structured JSON) or
    "console" (fenced actions block).
    """

    def __init__(
        self,
        model: ModelClient,
        system_prompt: str,
        platform: str = "desktop",
        timings: DefaultTimings = DEFAULT_TIMINGS,
        bounds: tuple[int, int] = DEFAULT_SURFACE_BOUNDS,
        window_capacity: int = CONTEXT_WINDOW_STEPS,
        retries: int = MALFORMED_RETRY_BUDGET,
        downscale_history: bool = False,
    ) -> None:
        if platform not in ("desktop", "console"):
            raise ValueError(f"unknown platform {platform!r}")
        self.model = model
        self.system_prompt = system_prompt
        self.platform = platform
        self.timings = timings
        self.bounds = bounds
        self.window = ContextWindow(window_capacity)
        self.scratchpad = Scratchpad()
        self.retries = retries
        self.downscale_history = downscale_history

    def _parse(self, text: str) -> AgentTurn:
        if self.platform == "console":
            return parse_console_response(text, self.timings)
        return parse_desktop_response(text, self.timings, self.bounds)

    def step(self, frames: Sequence[Frame]) -> AgentTurn:
        """One ReAct cycle: build messages, call the model once per attempt,
        parse, apply the memory update, append to the window.

        Malformed responses are retried up to the budget, then recorded as a
        no-op turn; transport failures raise :class:`ModelUnavailable` once
        the budget is exhausted.
        """
        messages = build_messages(
            self.system_prompt, self.window, self.scratchpad, frames
        )
        payloads = tuple(
            encode_frame_png(f, downscale=2 if self.downscale_history else 1)
            for f in frames
        )
        last_error: Optional[Exception] = None
        for _ in range(self.retries):
            try:
                response = self.model.complete(self.system_prompt, messages)
            except ModelTransportError as exc:
                last_error = exc
                continue
            try:
                turn = self._parse(response.text)
            except (MalformedResponse, ActionError) as exc:
                last_error = exc
                continue
            turn.prompt_tokens = response.prompt_tokens
            turn.completion_tokens = response.completion_tokens
            self.scratchpad.update(turn.memory_update)
            self.window.append(WindowEntry(payloads, turn.thought, turn.action_text))
            return turn
        if isinstance(last_error, ModelTransportError):
            raise ModelUnavailable(str(last_error))
        noop = AgentTurn(
            thought="",
            action_name="",
            action_input="",
            memory_update="",
            raw_response="",
            parsed=[],
            error=str(last_error) if last_error else "no response",
        )
        self.window.append(WindowEntry(payloads, "", ""))
        return noop
