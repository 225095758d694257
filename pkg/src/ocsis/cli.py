"""Command line entry points: validate, run, replay, serve.

Exit status: 0 success, 1 diagnostics or divergence reported, 2 usage
error (argparse's own), 3 runtime failure (unreadable file, bind error).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .dsl import Severity, canonical_format, lint, parse_files
from .engine import Session
from .errors import OcsisError
from .model import ProcedureSet
from .scenario import load_scenario, render_trace, replay_trace, run_headless
from .server import FeedServer

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

DEFAULT_PORT = 8750
PORT_ENV = "OCSIS_PORT"


class _Fail(Exception):
    def __init__(self, status: int, message: str = ""):
        super().__init__(message)
        self.status = status


def _gather_sources(paths: Sequence[str]) -> list[tuple[str, str]]:
    """Registry files sort before procedure files only for stable diagnostics
    order; parsing itself is declaration-order independent."""
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.glob("*.ocsr")))
            files.extend(sorted(p.glob("*.ocsp")))
        else:
            files.append(p)
    sources = []
    for f in files:
        try:
            sources.append((str(f), f.read_text(encoding="utf-8")))
        except OSError as exc:
            raise _Fail(EXIT_RUNTIME, f"cannot read {f}: {exc}") from None
    return sources


def _load_set(paths: Sequence[str], out=sys.stderr) -> ProcedureSet:
    result = parse_files(_gather_sources(paths))
    for diag in result.diagnostics:
        print(diag.render(), file=out)
    if not result.ok:
        raise _Fail(EXIT_DIAGNOSTICS)
    return result.pset


def cmd_validate(args) -> int:
    sources = _gather_sources(args.paths)
    result = parse_files(sources)
    diagnostics = list(result.diagnostics)
    if result.ok:
        diagnostics.extend(lint(result.pset))
    for diag in diagnostics:
        print(diag.render(), file=sys.stderr)
    errors = [d for d in diagnostics if d.severity is Severity.ERROR]
    return EXIT_DIAGNOSTICS if errors else EXIT_OK


def cmd_format(args) -> int:
    pset = _load_set(args.paths)
    sys.stdout.write(canonical_format(pset))
    return EXIT_OK


def cmd_run(args) -> int:
    pset = _load_set([args.procedures])
    try:
        scenario = load_scenario(args.scenario, pset.registry)
    except OSError as exc:
        raise _Fail(EXIT_RUNTIME, f"cannot read {args.scenario}: {exc}") from None
    except OcsisError as exc:
        raise _Fail(EXIT_DIAGNOSTICS, f"{args.scenario}: {exc}") from None
    trace = render_trace(run_headless(scenario, pset))
    if args.trace:
        Path(args.trace).write_text(trace, encoding="utf-8")
    else:
        sys.stdout.write(trace)
    return EXIT_OK


def cmd_replay(args) -> int:
    pset = _load_set([args.procedures])
    try:
        text = Path(args.trace).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_RUNTIME, f"cannot read {args.trace}: {exc}") from None
    try:
        report = replay_trace(text, pset)
    except OcsisError as exc:
        raise _Fail(EXIT_DIAGNOSTICS, f"corrupt trace: {exc}") from None
    if report.ok:
        print(f"replay ok: {report.checked_events} events verified")
        return EXIT_OK
    print(f"divergence at line {report.line_no}: {report.divergence}", file=sys.stderr)
    return EXIT_DIAGNOSTICS


def cmd_serve(args) -> int:
    config = _read_config(args.config)
    port = _resolve(args.port, config.get("port"), _env_port(), DEFAULT_PORT)
    ws_port = _resolve(args.ws_port, config.get("ws_port"), None, port + 1 if port else 0)
    tick_rate = _resolve(args.tick_rate, config.get("tick_rate"), None, 1.0)
    host = _resolve(args.host, config.get("host"), None, "127.0.0.1")

    pset = _load_set([args.procedures])
    scenario = None
    if args.scenario:
        try:
            scenario = load_scenario(args.scenario, pset.registry)
        except OcsisError as exc:
            raise _Fail(EXIT_DIAGNOSTICS, f"{args.scenario}: {exc}") from None
        except OSError as exc:
            raise _Fail(EXIT_RUNTIME, f"cannot read {args.scenario}: {exc}") from None
    server = FeedServer(
        Session(pset), host=host, port=port,
        ws_port=None if ws_port < 0 else ws_port,
        scenario=scenario, tick_rate=tick_rate)
    try:
        server.start()
    except OSError as exc:
        raise _Fail(EXIT_RUNTIME, f"cannot bind: {exc}") from None
    print(f"listening tcp={host}:{server.port}"
          + (f" ws={host}:{server.ws_port}" if server.ws_port is not None else ""),
          flush=True)
    try:
        import threading
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return EXIT_OK


def _env_port() -> Optional[int]:
    raw = os.environ.get(PORT_ENV)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise _Fail(EXIT_USAGE, f"{PORT_ENV}={raw!r} is not a port") from None


def _read_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise _Fail(EXIT_RUNTIME, f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise _Fail(EXIT_USAGE, f"{path}: not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise _Fail(EXIT_USAGE, f"{path}: config must be a JSON object")
    return config


def _resolve(*candidates):
    for c in candidates:
        if c is not None:
            return c
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocsis",
        description="Context-sensitive cockpit procedure engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and lint procedure/registry files")
    p.add_argument("paths", nargs="+", help="files or directories (*.ocsr, *.ocsp)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("format", help="canonically re-serialize a procedure set")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_format)

    p = sub.add_parser("run", help="run a scenario headless and emit its trace")
    p.add_argument("--scenario", required=True)
    p.add_argument("--procedures", required=True)
    p.add_argument("--trace", help="write trace to this file instead of stdout")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="verify a recorded trace against the engine")
    p.add_argument("--trace", required=True)
    p.add_argument("--procedures", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="serve a live session for UIs")
    p.add_argument("--procedures", required=True)
    p.add_argument("--scenario")
    p.add_argument("--port", type=int, help=f"TCP port (default ${PORT_ENV} or {DEFAULT_PORT})")
    p.add_argument("--ws-port", type=int, dest="ws_port",
                   help="WebSocket port (default port+1; -1 disables)")
    p.add_argument("--tick-rate", type=float, dest="tick_rate",
                   help="scenario ticks per second; 0 pauses playback")
    p.add_argument("--host")
    p.add_argument("--config", help="JSON file with default flag values")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        if str(exc):
            print(f"ocsis: {exc}", file=sys.stderr)
        return exc.status
    except OcsisError as exc:
        print(f"ocsis: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
