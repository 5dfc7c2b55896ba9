"""Command-line front end.

``lab`` is a thin client over the HTTP surface: every subcommand posts a
RunRequest to ``/v1/run/{kind}``, against an in-process app by default or a
remote server via ``--server``. Exit codes: 0 success, 1 run failure,
2 bad config or missing input.

Set LAB_LOG (debug|info|warning|error) to control logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .serialization import dumps_canonical

RUN_KINDS = ("gen", "train", "difficulty", "bound", "check", "report")

EXIT_OK = 0
EXIT_RUN_FAILURE = 1
EXIT_BAD_INPUT = 2


def _setup_logging() -> None:
    name = os.environ.get("LAB_LOG", "warning").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for kind in RUN_KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment from a config file")
        p.add_argument("--config", required=True, help="path to the experiment config JSON")
        p.add_argument("--jobs", type=int, default=1, help="worker threads for parallel sections")
        p.add_argument("--out", default=None, help="artifact directory (default: runs/<kind>)")
        p.add_argument("--server", default=None,
                       help="base URL of a running service; default runs in-process")

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _fail(code: int, exc_type: str, message: str) -> int:
    print(dumps_canonical({"error": {"type": exc_type, "message": message}}), file=sys.stderr)
    return code


def _post_run(kind: str, payload: dict, server: str | None):
    if server is not None:
        import httpx

        with httpx.Client(base_url=server, timeout=None) as client:
            resp = client.post(f"/v1/run/{kind}", json=payload)
            return resp.status_code, resp.json()
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # fastapi's testclient shim warns on import
        from fastapi.testclient import TestClient

    from .service import create_app

    with TestClient(create_app(), raise_server_exceptions=False) as client:
        resp = client.post(f"/v1/run/{kind}", json=payload)
        return resp.status_code, resp.json()


def _run_command(args: argparse.Namespace) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except FileNotFoundError:
        return _fail(EXIT_BAD_INPUT, "FileNotFoundError", f"config not found: {args.config}")
    except json.JSONDecodeError as exc:
        return _fail(EXIT_BAD_INPUT, "JSONDecodeError", f"{args.config}: {exc}")

    if args.jobs < 1:
        return _fail(EXIT_BAD_INPUT, "SpecificationError", "--jobs must be >= 1")
    out_dir = args.out if args.out is not None else os.path.join("runs", args.command)
    payload = {"config": config, "out_dir": out_dir, "jobs": args.jobs}

    try:
        status, body = _post_run(args.command, payload, args.server)
    except Exception as exc:  # connection refused, bad URL, ...
        return _fail(EXIT_RUN_FAILURE, type(exc).__name__, str(exc))

    if status == 200:
        print(dumps_canonical(body, indent=2))
        return EXIT_OK
    if isinstance(body, dict) and "error" in body:
        err = body["error"]
        code = EXIT_BAD_INPUT if status == 422 else EXIT_RUN_FAILURE
        return _fail(code, err.get("type", "Error"), err.get("message", ""))
    # FastAPI's own validation errors arrive as {"detail": [...]}.
    code = EXIT_BAD_INPUT if status == 422 else EXIT_RUN_FAILURE
    return _fail(code, "ValidationError", json.dumps(body))


def _serve_command(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        return _serve_command(args)
    return _run_command(args)


if __name__ == "__main__":
    sys.exit(main())
