"""HTTP model client for chat-completions style endpoints.

The credential is read from an environment variable, never from arguments or
config files, and is redacted from every log line and error message this
module produces.
"""

from __future__ import annotations

import json
import logging
import os
import urllib.error
import urllib.request

from .scaffold import ModelResponse, ModelSettings, ModelTransportError

DEFAULT_CREDENTIAL_ENV = "GAMEBENCH_API_KEY"

logger = logging.getLogger(__name__)


class MissingCredential(Exception):
    """The configured credential environment variable is unset or empty."""


class HttpChatModel:
    """Talks to an OpenAI-compatible chat-completions endpoint.

    Network and protocol failures surface as
    :class:`~gamebench.scaffold.ModelTransportError` so the agent's retry
    budget applies uniformly.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        settings: ModelSettings = ModelSettings(),
        credential_env: str = DEFAULT_CREDENTIAL_ENV,
        timeout: float = 120.0,
    ) -> None:
        self.endpoint = endpoint
        self.model = model
        self.settings = settings
        self.credential_env = credential_env
        self.timeout = timeout
        key = os.environ.get(credential_env, "")
        if not key:
            raise MissingCredential(
                f"set {credential_env} in the environment to use this endpoint"
            )
        self._key = key

    def complete(self, system_prompt: str, messages: list[dict]) -> ModelResponse:
        body = json.dumps(
            {
                "model": self.model,
                "temperature": self.settings.temperature,
                "max_tokens": self.settings.max_output_tokens,
                "messages": _to_wire(messages),
            }
        ).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint,
            data=body,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self._key}",
            },
            method="POST",
        )
        logger.debug(
            "model request: endpoint=%s model=%s bytes=%d auth=[redacted]",
            self.endpoint, self.model, len(body),
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            raise ModelTransportError(f"endpoint returned HTTP {exc.code}") from None
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            # Str(exc) may embed the full URL but never the credential.
            raise ModelTransportError(f"endpoint unreachable: {exc.reason if hasattr(exc, 'reason') else exc}") from None
        try:
            choice = payload["choices"][0]
            text = choice["message"]["content"]
            usage = payload.get("usage", {})
            return ModelResponse(
                text=text if isinstance(text, str) else "",
                prompt_tokens=int(usage.get("prompt_tokens", 0)),
                completion_tokens=int(usage.get("completion_tokens", 0)),
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise ModelTransportError(f"malformed endpoint reply: {exc}") from None


def _to_wire(messages: list[dict]) -> list[dict]:
    """Flatten the scaffold's message parts into chat-completions content."""
    wire = []
    for message in messages:
        parts = []
        for part in message["content"]:
            if part["type"] == "text":
                parts.append({"type": "text", "text": part["text"]})
            else:
                parts.append(
                    {
                        "type": "image_url",
                        "image_url": {
                            "url": f"data:{part['media_type']};base64,{part['data']}"
                        },
                    }
                )
        wire.append({"role": message["role"], "content": parts})
    return wire
