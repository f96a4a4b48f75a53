"""Command-line client.

The CLI talks to the HTTP service: by default an in-process instance (no
socket), or a remote one via --server.  Artifacts are fetched from the
service and written under the output root (--out or $FEKETE_FLOW_OUT).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import httpx

from .errors import FormationError
from .scenarios import builtin_names, load_scenario

DEFAULT_OUT_ENV = "FEKETE_FLOW_OUT"


def make_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from starlette.testclient import TestClient
    from .service.app import create_app

    return TestClient(create_app(), base_url="http://fekete-flow")


def _out_root(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(DEFAULT_OUT_ENV, "runs"))


def _run_one(target: str, args) -> int:
    """Execute one scenario (builtin name or file path) and persist its
    artifacts.  Returns the scenario's exit code."""
    with make_client(args.server) as client:
        if Path(target).exists():
            scenario = load_scenario(target)
            body = {"scenario": scenario.model_dump(exclude_none=True)}
            name = scenario.name
        else:
            body = {"builtin": target}
            name = target
        if args.seed is not None:
            body["seed"] = args.seed
        response = client.post("/runs", json=body)
        if response.status_code == 404:
            print(f"{name}: {response.json()['detail']}", file=sys.stderr)
            return 1
        response.raise_for_status()
        summary = response.json()
        run_dir = _out_root(args) / name
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        for artifact in summary["artifacts"]:
            content = client.get(f"/runs/{summary['run_id']}/artifacts/{artifact}")
            content.raise_for_status()
            target_path = run_dir / artifact
            target_path.parent.mkdir(parents=True, exist_ok=True)
            target_path.write_text(content.text)
        stats = summary.get("stats") or {}
        print(
            f"{name}: {summary['status']}  steps={summary['steps']}"
            f"  t_final={summary['t_final']:.2f}"
            f"  final_rhs={stats.get('final_rhs_norm', float('nan')):.3e}"
            f"  -> {run_dir}"
        )
        return summary["exit_code"]


def cmd_run(args) -> int:
    codes = []
    if args.jobs > 1 and len(args.scenario) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(lambda t: _run_one(t, args), args.scenario))
    else:
        codes = [_run_one(t, args) for t in args.scenario]
    if 1 in codes:
        return 1
    if 3 in codes:
        return 3
    return 0


def _parse_graph_spec(spec: str) -> dict:
    if Path(spec).exists():
        return json.loads(Path(spec).read_text())
    if ":" in spec:
        builder, n = spec.split(":", 1)
        return {"builder": builder, "n": int(n)}
    return {"builder": spec}


def _parse_manifold_spec(spec: str) -> dict:
    if ":" in spec:
        kind, value = spec.split(":", 1)
        if kind == "ellipse":
            return {"kind": "ellipse", "a": float(value)}
        return {"kind": kind, "variant": value}
    return {"kind": spec}


def cmd_report(args) -> int:
    body = {
        "trajectory_csv": Path(args.trajectory).read_text(),
        "graph": _parse_graph_spec(args.graph),
    }
    if args.manifold:
        body["manifold"] = _parse_manifold_spec(args.manifold)
    with make_client(args.server) as client:
        response = client.post("/reports", json=body)
        if response.status_code == 422:
            print(f"report failed: {response.json()['detail']}", file=sys.stderr)
            return 1
        response.raise_for_status()
        print(json.dumps(response.json(), indent=2))
    return 0


def cmd_list_examples(args) -> int:
    with make_client(args.server) as client:
        response = client.get("/scenarios")
        response.raise_for_status()
        for entry in response.json():
            print(f"{entry['name']:22s} {entry['description']}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fekete-flow",
        description="Drive agent formations onto target shapes and analyze the equilibria.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run scenario files or builtin scenarios")
    run.add_argument("scenario", nargs="+", help="scenario file path or builtin name")
    run.add_argument("--out", help=f"output root (default ${DEFAULT_OUT_ENV} or ./runs)")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    run.add_argument("--server", help="remote service URL (default: in-process)")
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="equilibrium report for a trajectory CSV")
    report.add_argument("trajectory", help="trajectory CSV path")
    report.add_argument("--graph", required=True, help="e.g. cycle:10, thomsen, or a JSON file")
    report.add_argument("--manifold", help="e.g. unit_circle or ellipse:2.0")
    report.add_argument("--server", help="remote service URL (default: in-process)")
    report.set_defaults(func=cmd_report)

    examples = sub.add_parser("list-examples", help="list builtin scenarios")
    examples.add_argument("--server", help="remote service URL (default: in-process)")
    examples.set_defaults(func=cmd_list_examples)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
