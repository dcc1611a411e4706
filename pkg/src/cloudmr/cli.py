"""Command-line client for the simulation service.

By default commands run against an in-process service instance; pass
--server to talk to a remote one instead.  Results land on stdout or in
--out; relative output paths resolve under $CLOUDMR_OUT_DIR when set.

Exit codes: 0 ok, 2 scenario parse error, 3 provisioning error, 4 run or
transport error, 5 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import httpx

from . import __version__
from .reporting import render_csv, render_json, write_text
from .scenario import parse_scenario

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PROVISION = 3
EXIT_RUN = 4
EXIT_IO = 5

_EXIT_BY_CATEGORY = {"parse": EXIT_PARSE, "provision": EXIT_PROVISION,
                     "run": EXIT_RUN, "io": EXIT_IO}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloudmr",
        description="Simulate MapReduce batch jobs on a cloud datacenter.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="report format (default csv)")
        p.add_argument("--out", metavar="PATH",
                       help="write the report here instead of stdout")
        p.add_argument("--trace", metavar="PATH",
                       help="also write the event dispatch trace here")
        p.add_argument("--server", metavar="URL",
                       help="use a running service instead of in-process")

    run_p = sub.add_parser("run", help="run a scenario file")
    run_p.add_argument("scenario_file")
    add_common(run_p)

    group_p = sub.add_parser("group", help="run a canned experiment group")
    group_p.add_argument("group", type=int, choices=(1, 2, 3, 4))
    group_p.add_argument("--delay", action="store_true",
                         help="turn the storage/network delay model on")
    add_common(group_p)

    val_p = sub.add_parser("validate",
                           help="check a scenario file without running it")
    val_p.add_argument("scenario_file")
    val_p.add_argument("--server", metavar="URL")

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    return parser


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=300.0)
    # In-process transport against the same app the serve command exposes.
    from fastapi.testclient import TestClient
    from .service import app
    return TestClient(app, raise_server_exceptions=False)


def _fail(response) -> int:
    try:
        body = response.json()
        category = body.get("category", "run")
        detail = body.get("detail", response.text)
    except ValueError:
        category, detail = "run", response.text or f"HTTP {response.status_code}"
    print(f"cloudmr: {category} error: {detail}", file=sys.stderr)
    return _EXIT_BY_CATEGORY.get(category, EXIT_RUN)


def _resolve_out(path_str):
    path = Path(path_str)
    base = os.environ.get("CLOUDMR_OUT_DIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        path = _resolve_out(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_text(text, path)


def _read_scenario(path_str) -> str:
    with open(path_str, "r", encoding="utf-8") as handle:
        return handle.read()


def _cmd_run(args) -> int:
    text = _read_scenario(args.scenario_file)
    # Local parse only to pick up the file's own output preferences; any
    # real complaint about the document comes from the service.
    out, fmt = args.out, args.format
    try:
        spec = parse_scenario(text).output
        if spec is not None:
            out = out or spec.path
            fmt = fmt or spec.format
    except Exception:
        pass
    fmt = fmt or "csv"
    with _client(args.server) as client:
        response = client.post("/run", json={
            "scenario": text, "include_trace": bool(args.trace)})
        if response.status_code != 200:
            return _fail(response)
        data = response.json()
    rendered = (render_csv(data["rows"]) if fmt == "csv"
                else render_json(data["rows"], mode=data["mode"]))
    _emit(rendered, out)
    if args.trace:
        _emit(data.get("trace") or "", args.trace)
    return EXIT_OK


def _cmd_group(args) -> int:
    with _client(args.server) as client:
        response = client.post(f"/groups/{args.group}", json={
            "network_delay": args.delay, "include_trace": bool(args.trace)})
        if response.status_code != 200:
            return _fail(response)
        data = response.json()
    fmt = args.format or "csv"
    rendered = (render_csv(data["rows"]) if fmt == "csv"
                else render_json(data["rows"], mode=data["mode"],
                                 group=data["group"]))
    _emit(rendered, args.out)
    if args.trace:
        _emit(data.get("trace") or "", args.trace)
    return EXIT_OK


def _cmd_validate(args) -> int:
    text = _read_scenario(args.scenario_file)
    with _client(args.server) as client:
        response = client.post("/validate", json={"scenario": text})
        if response.status_code != 200:
            return _fail(response)
        data = response.json()
    if not data["valid"]:
        print(f"cloudmr: {data['category']} error: {data['detail']}",
              file=sys.stderr)
        return _EXIT_BY_CATEGORY.get(data["category"], EXIT_RUN)
    print(f"scenario ok: {data['jobs']} job(s), "
          f"{data['sweep_points']} sweep point(s)")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn
    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "group": _cmd_group,
               "validate": _cmd_validate, "serve": _cmd_serve}[args.command]
    try:
        return handler(args)
    except OSError as exc:
        print(f"cloudmr: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except httpx.HTTPError as exc:
        print(f"cloudmr: transport error: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
