"""HTTP model client: credentials, wire format, and transport errors."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from gamebench.model_client import HttpChatModel, MissingCredential, _to_wire
from gamebench.scaffold import ModelSettings, ModelTransportError


class _CannedHandler(BaseHTTPRequestHandler):
    status = 200
    reply: dict = {}
    last_request: dict = {}

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        type(self).last_request = {
            "body": json.loads(self.rfile.read(length)),
            "auth": self.headers.get("Authorization"),
        }
        body = json.dumps(type(self).reply).encode()
        self.send_response(type(self).status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):  # keep test output quiet
        pass


@pytest.fixture()
def endpoint():
    server = HTTPServer(("127.0.0.1", 0), _CannedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()
    thread.join()
    _CannedHandler.status = 200
    _CannedHandler.reply = {}


def _model(endpoint: str, monkeypatch, **kwargs) -> HttpChatModel:
    monkeypatch.setenv("GAMEBENCH_API_KEY", "sk-test-123")
    return HttpChatModel(endpoint, "test-model", **kwargs)


MESSAGES = [
    {"role": "system", "content": [{"type": "text", "text": "be brief"}]},
    {
        "role": "user",
        "content": [
            {"type": "image", "media_type": "image/png", "data": "aGk="},
            {"type": "text", "text": "what now?"},
        ],
    },
]


def test_missing_credential_raises(monkeypatch):
    monkeypatch.delenv("GAMEBENCH_API_KEY", raising=False)
    with pytest.raises(MissingCredential, match="GAMEBENCH_API_KEY"):
        HttpChatModel("http://example.invalid", "m")


def test_empty_credential_raises(monkeypatch):
    monkeypatch.setenv("GAMEBENCH_API_KEY", "")
    with pytest.raises(MissingCredential):
        HttpChatModel("http://example.invalid", "m")


def test_custom_credential_env(monkeypatch):
    monkeypatch.delenv("GAMEBENCH_API_KEY", raising=False)
    monkeypatch.setenv("OTHER_KEY", "value")
    HttpChatModel("http://example.invalid", "m", credential_env="OTHER_KEY")


def test_to_wire_flattens_parts():
    wire = _to_wire(MESSAGES)
    assert wire[0] == {
        "role": "system",
        "content": [{"type": "text", "text": "be brief"}],
    }
    assert wire[1]["content"][0] == {
        "type": "image_url",
        "image_url": {"url": "data:image/png;base64,aGk="},
    }
    assert wire[1]["content"][1] == {"type": "text", "text": "what now?"}


def test_complete_round_trip(endpoint, monkeypatch):
    _CannedHandler.reply = {
        "choices": [{"message": {"content": "press_key ArrowRight"}}],
        "usage": {"prompt_tokens": 11, "completion_tokens": 7},
    }
    model = _model(endpoint, monkeypatch, settings=ModelSettings(0.2, 64))
    response = model.complete("be brief", MESSAGES)
    assert response.text == "press_key ArrowRight"
    assert (response.prompt_tokens, response.completion_tokens) == (11, 7)

    sent = _CannedHandler.last_request
    assert sent["auth"] == "Bearer sk-test-123"
    assert sent["body"]["model"] == "test-model"
    assert sent["body"]["temperature"] == 0.2
    assert sent["body"]["max_tokens"] == 64
    assert sent["body"]["messages"] == _to_wire(MESSAGES)


def test_missing_usage_defaults_to_zero(endpoint, monkeypatch):
    _CannedHandler.reply = {"choices": [{"message": {"content": "ok"}}]}
    response = _model(endpoint, monkeypatch).complete("p", MESSAGES)
    assert (response.prompt_tokens, response.completion_tokens) == (0, 0)


def test_http_error_becomes_transport_error(endpoint, monkeypatch):
    _CannedHandler.status = 503
    _CannedHandler.reply = {"error": "overloaded"}
    model = _model(endpoint, monkeypatch)
    with pytest.raises(ModelTransportError, match="HTTP 503"):
        model.complete("p", MESSAGES)


def test_unreachable_endpoint_becomes_transport_error(monkeypatch):
    model = _model("http://127.0.0.1:1/v1/chat/completions", monkeypatch)
    with pytest.raises(ModelTransportError, match="unreachable"):
        model.complete("p", MESSAGES)


def test_malformed_reply_becomes_transport_error(endpoint, monkeypatch):
    _CannedHandler.reply = {"choices": []}
    model = _model(endpoint, monkeypatch)
    with pytest.raises(ModelTransportError, match="malformed"):
        model.complete("p", MESSAGES)


def test_transport_errors_never_leak_the_key(endpoint, monkeypatch):
    _CannedHandler.status = 401
    model = _model(endpoint, monkeypatch)
    with pytest.raises(ModelTransportError) as exc_info:
        model.complete("p", MESSAGES)
    assert "sk-test-123" not in str(exc_info.value)
