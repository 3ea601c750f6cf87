"""Command-line front end: run, replay, score, build-pack, practice, serve.

Model credentials are read from an environment variable only (default
``GAMEBENCH_API_KEY``); there is no flag that accepts a secret.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import assets
from .checkpoints import (
    build_pack,
    dump_pack,
    load_manifest,
    load_pack,
)
from .clock import ClockMode
from .gateway import GatewayServer
from .model_client import DEFAULT_CREDENTIAL_ENV, HttpChatModel, MissingCredential
from .practice import PRACTICE_GAMES, make_practice_game
from .runner import (
    RunConfig,
    TerminationReason,
    read_log,
    replay_commands,
    run,
    write_log,
)
from .scaffold import ModelSettings, VgAgent

FAILURE_TERMINATIONS = (TerminationReason.ABORTED, TerminationReason.MODEL_UNAVAILABLE)


def _build_env(game_id: str, seed: int):
    if game_id in PRACTICE_GAMES:
        return make_practice_game(game_id, seed=seed)
    raise SystemExit(f"unknown game {game_id!r}; built-in games: {', '.join(sorted(PRACTICE_GAMES))}")


def _parse_bind(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep:
        raise SystemExit(f"bind address must be host:port, got {text!r}")
    try:
        return host, int(port)
    except ValueError:
        raise SystemExit(f"bad port in bind address {text!r}") from None


def cmd_run(args: argparse.Namespace) -> int:
    pack = load_pack(Path(args.pack).read_bytes())
    env = _build_env(args.game, args.seed)
    try:
        model = HttpChatModel(
            endpoint=args.model_endpoint,
            model=args.model,
            settings=ModelSettings(),
            credential_env=args.credential_env,
        )
    except MissingCredential as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        prompt = assets.load_prompt(args.game)
    except FileNotFoundError:
        prompt = "You are playing a video game. Respond with one JSON action object."
    agent = VgAgent(model, prompt, platform="desktop", bounds=env.surface_bounds())
    config = RunConfig(game_id=args.game, mode=ClockMode(args.mode), seed=args.seed)
    record = run(config, env, agent, pack)
    data = write_log(record)
    Path(args.log_out).write_bytes(data)
    print(f"termination: {record.termination.value}")
    print(f"progress: {record.progress:.4f}")
    print(f"log: {args.log_out}")
    return 1 if record.termination in FAILURE_TERMINATIONS else 0


def cmd_replay(args: argparse.Namespace) -> int:
    record = read_log(Path(args.log).read_bytes())
    env = _build_env(record.config.game_id, record.config.seed)
    replayed = replay_commands(record, env)
    logged = [t.frame_hashes for t in record.turns]
    if replayed == logged:
        print(f"replay: {len(record.turns)} turns, frame hashes match")
        return 0
    first = next(i for i, (a, b) in enumerate(zip(replayed, logged)) if a != b)
    print(f"replay: divergence at turn {first + 1}", file=sys.stderr)
    return 1


def cmd_score(args: argparse.Namespace) -> int:
    record = read_log(Path(args.log).read_bytes())
    pack = load_pack(Path(args.pack).read_bytes())
    label = ""
    if record.furthest_index is not None:
        label = pack.checkpoints[record.furthest_index].label
    print(f"game: {record.config.game_id}")
    print(f"furthest checkpoint: {record.furthest_index} {label}".rstrip())
    print(f"progress: {record.progress:.4f}")
    print(f"termination: {record.termination.value}")
    return 0


def cmd_build_pack(args: argparse.Namespace) -> int:
    entries, length_ms, game_id = load_manifest(Path(args.manifest).read_bytes())
    base = Path(args.manifest).parent
    entries = [
        e if Path(e.image_path).is_absolute()
        else type(e)(str(base / e.image_path), e.timestamp_ms, e.threshold, e.label)
        for e in entries
    ]
    pack = build_pack(entries, length_ms, game_id)
    Path(args.out).write_bytes(dump_pack(pack))
    print(f"wrote {len(pack.checkpoints)} checkpoints to {args.out}")
    return 0


def _serve(registry: dict, bind: str) -> int:
    host, port = _parse_bind(bind)
    server = GatewayServer(registry, host=host, port=port)
    server.start()
    print(f"serving {', '.join(sorted(registry))} on {server.uri}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.stop()
    return 0


def cmd_practice(args: argparse.Namespace) -> int:
    seed = args.seed
    registry = {args.game: (lambda: make_practice_game(args.game, seed=seed))}
    return _serve(registry, args.bind)


def cmd_serve(args: argparse.Namespace) -> int:
    registry = {
        name: (lambda cls=cls: cls(seed=0)) for name, cls in PRACTICE_GAMES.items()
    }
    return _serve(registry, args.bind)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="gamebench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an agent against a game")
    p.add_argument("--game", required=True)
    p.add_argument("--pack", required=True)
    p.add_argument("--mode", choices=["lite", "realtime"], default="lite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-endpoint", required=True)
    p.add_argument("--model", default="gpt-4o")
    p.add_argument("--credential-env", default=DEFAULT_CREDENTIAL_ENV,
                   help="environment variable holding the API key")
    p.add_argument("--log-out", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("replay", help="re-execute a run log and verify frame hashes")
    p.add_argument("--log", required=True)
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("score", help="report the score recorded in a run log")
    p.add_argument("--log", required=True)
    p.add_argument("--pack", required=True)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("build-pack", help="hash manifest images into a checkpoint pack")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build_pack)

    p = sub.add_parser("practice", help="serve one practice game over the gateway")
    p.add_argument("--game", required=True, choices=sorted(PRACTICE_GAMES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bind", default="127.0.0.1:8765")
    p.set_defaults(fn=cmd_practice)

    p = sub.add_parser("serve", help="serve all practice games over the gateway")
    p.add_argument("--bind", default="127.0.0.1:8765")
    p.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
