"""Command-line client for the model service.

By default the commands talk to an in-process copy of the HTTP app, so
no server needs to be running; --server redirects the same requests to a
remote instance.  Exit codes: 0 success, 1 verification failed, 2
invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys

import httpx

from .errors import (EXIT_NUMERICAL_FAILURE, EXIT_OK, EXIT_VERIFY_FAILED,
                     DiracDarbouxError, InvalidInputError)
from .outputs import atomic_write

_TIMEOUT = 600.0


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}")


async def _post(server: str | None, path: str, payload: dict):
    if server:
        async with httpx.AsyncClient(base_url=server,
                                     timeout=_TIMEOUT) as client:
            return await client.post(path, json=payload)
    from .service.app import app
    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport,
                                 base_url="http://dirac-darboux.local",
                                 timeout=_TIMEOUT) as client:
        return await client.post(path, json=payload)


def _call(server, path, payload):
    return asyncio.run(_post(server, path, payload))


def _error_exit(resp) -> int:
    try:
        data = resp.json()
        message = data.get("message", resp.text)
        code = int(data.get("exit_code", EXIT_NUMERICAL_FAILURE))
    except (ValueError, KeyError, TypeError):
        message = resp.text
        code = EXIT_NUMERICAL_FAILURE
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_build(args) -> int:
    config = _load_json(args.config)
    resp = _call(args.server, "/build", {"config": config})
    if resp.status_code != 200:
        return _error_exit(resp)
    data = resp.json()
    os.makedirs(args.out_dir, exist_ok=True)
    for name, text in sorted(data["files"].items()):
        atomic_write(os.path.join(args.out_dir, name), text)
    summary = data["summary"]
    print(f"built {summary['name']} ({summary['kind']}): "
          f"{summary['n_bound_states']} bound state(s); artifacts in "
          f"{args.out_dir}")
    return EXIT_OK


def cmd_verify(args) -> int:
    config = _load_json(args.config)
    resp = _call(args.server, "/verify", {"config": config})
    if resp.status_code != 200:
        return _error_exit(resp)
    report = resp.json()["report"]
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if report.get("overall") == "pass" else EXIT_VERIFY_FAILED


def _parse_energies(text: str) -> list:
    try:
        out = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise InvalidInputError(f"bad energy list {text!r}: {exc}")
    if not out:
        raise InvalidInputError("energy list is empty")
    return out


def cmd_scatter(args) -> int:
    config = _load_json(args.config)
    energies = _parse_energies(args.energies)
    resp = _call(args.server, "/scatter", {"config": config,
                                           "energies": energies,
                                           "step": args.step})
    if resp.status_code != 200:
        return _error_exit(resp)
    data = resp.json()
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "scattering.csv")
    atomic_write(path, data["files"]["scattering.csv"])
    n_ok = sum(1 for r in data["results"] if r["status"] == "ok")
    n_skip = len(data["results"]) - n_ok
    print(f"scattering: {n_ok} energies computed, {n_skip} skipped; "
          f"wrote {path}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dirac-darboux",
        description="Exactly solvable 1-D Dirac models via Darboux "
                    "transformations")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", default=None,
                        help="base URL of a running service; default runs "
                             "the app in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", parents=[common],
                             help="build a model and write its artifacts")
    p_build.add_argument("config", help="path to a model config JSON file")
    p_build.add_argument("--out-dir", default=".",
                         help="directory for potentials.csv, "
                              "bound_states.csv and model.json")
    p_build.set_defaults(func=cmd_build)

    p_verify = sub.add_parser("verify", parents=[common],
                              help="run the named checks; JSON report on "
                                   "stdout")
    p_verify.add_argument("config", help="path to a model config JSON file")
    p_verify.set_defaults(func=cmd_verify)

    p_scatter = sub.add_parser("scatter", parents=[common],
                               help="compute reflection/transmission at "
                                    "given energies")
    p_scatter.add_argument("config", help="path to a model config JSON file")
    p_scatter.add_argument("--energies", required=True,
                           help="comma-separated energy list, e.g. "
                                "--energies=-6,-4,5.5")
    p_scatter.add_argument("--step", type=float, default=1e-3,
                           help="RK4 step (default 1e-3)")
    p_scatter.add_argument("--out-dir", default=".",
                           help="directory for scattering.csv")
    p_scatter.set_defaults(func=cmd_scatter)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DiracDarbouxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except httpx.HTTPError as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE


if __name__ == "__main__":
    sys.exit(main())
