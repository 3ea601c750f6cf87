"""CLI subcommands: pack building, scoring, replay, and exit codes."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from PIL import Image

from conftest import stripe_frame
from gamebench.checkpoints import load_pack
from gamebench.cli import main
from gamebench.runner import RunConfig, read_log, run, write_log
from gamebench.practice import NavigationGame
from test_runner import _navigation_agent
from conftest import empty_pack


def _write_manifest(tmp_path: Path) -> Path:
    for i in range(2):
        Image.fromarray(stripe_frame(i, 64, 64).to_array()).save(tmp_path / f"cp{i}.png")
    manifest = tmp_path / "manifest.json"
    manifest.write_text(
        json.dumps(
            {
                "game_id": "demo",
                "walkthrough_length_ms": 60_000,
                "checkpoints": [
                    {"image": "cp0.png", "timestamp_ms": 10_000, "label": "first"},
                    {"image": "cp1.png", "timestamp_ms": 50_000, "label": "second"},
                ],
            }
        )
    )
    return manifest


def _write_run_log(tmp_path: Path) -> Path:
    env = NavigationGame(seed=0)
    record = run(RunConfig("navigation", seed=0), env, _navigation_agent(env), empty_pack())
    path = tmp_path / "run.jsonl"
    path.write_bytes(write_log(record))
    return path


def test_build_pack_command(tmp_path, capsys):
    manifest = _write_manifest(tmp_path)
    out = tmp_path / "pack.json"
    assert main(["build-pack", "--manifest", str(manifest), "--out", str(out)]) == 0
    pack = load_pack(out.read_bytes())
    assert pack.game_id == "demo"
    assert len(pack.checkpoints) == 2
    assert "2 checkpoints" in capsys.readouterr().out


def test_replay_command_verifies_log(tmp_path, capsys):
    log = _write_run_log(tmp_path)
    assert main(["replay", "--log", str(log)]) == 0
    assert "hashes match" in capsys.readouterr().out


def test_replay_command_detects_tampering(tmp_path, capsys):
    log = _write_run_log(tmp_path)
    record = read_log(log.read_bytes())
    record.turns[0].commands[0] = "press_key ArrowUp"
    log.write_bytes(write_log(record))
    assert main(["replay", "--log", str(log)]) == 1
    assert "divergence" in capsys.readouterr().err


def test_score_command(tmp_path, capsys):
    log = _write_run_log(tmp_path)
    manifest = _write_manifest(tmp_path)
    pack_path = tmp_path / "pack.json"
    main(["build-pack", "--manifest", str(manifest), "--out", str(pack_path)])
    assert main(["score", "--log", str(log), "--pack", str(pack_path)]) == 0
    out = capsys.readouterr().out
    assert "progress: 0.0000" in out
    assert "termination: completed" in out


def test_run_requires_credential_env(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("GAMEBENCH_API_KEY", raising=False)
    manifest = _write_manifest(tmp_path)
    pack_path = tmp_path / "pack.json"
    main(["build-pack", "--manifest", str(manifest), "--out", str(pack_path)])
    code = main(
        [
            "run",
            "--game", "navigation",
            "--pack", str(pack_path),
            "--model-endpoint", "http://127.0.0.1:1/v1/chat/completions",
            "--log-out", str(tmp_path / "out.jsonl"),
        ]
    )
    assert code == 1
    assert "GAMEBENCH_API_KEY" in capsys.readouterr().err


def test_unknown_game_exits_with_message(tmp_path):
    manifest = _write_manifest(tmp_path)
    pack_path = tmp_path / "pack.json"
    main(["build-pack", "--manifest", str(manifest), "--out", str(pack_path)])
    with pytest.raises(SystemExit):
        main(
            [
                "run",
                "--game", "chess",
                "--pack", str(pack_path),
                "--model-endpoint", "http://example.invalid",
                "--log-out", str(tmp_path / "out.jsonl"),
            ]
        )
