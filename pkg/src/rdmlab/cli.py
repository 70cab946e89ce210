"""Command-line interface: a thin client of the HTTP service.

Commands serialize their inputs into service requests and format the
returned rows; no numerics run in this module.  By default requests are
dispatched to an in-process instance of the service (no network, no
running server needed); ``--server URL`` routes them to a remote one
instead.

Exit codes: 0 success, 2 validation failure, 3 solver stall,
4 infeasible or out-of-domain input.
"""

import argparse
import asyncio
import datetime
import json
import sys

import httpx

from . import __version__

ROW_COLUMNS = ["input_hash", "quantity", "param", "value", "gap", "feasibility",
               "iterations", "wall_time_ms", "status"]
CHECK_COLUMNS = ["input_hash", "check", "defect", "threshold", "passed", "detail"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_STALL = 3
EXIT_INFEASIBLE = 4

_KIND_TO_EXIT = {"validation": EXIT_VALIDATION, "stall": EXIT_STALL,
                 "infeasible": EXIT_INFEASIBLE}


class CommandError(Exception):
    def __init__(self, message, exit_code):
        super().__init__(message)
        self.exit_code = exit_code


class ServiceClient:
    """POSTs to the service, in-process by default."""

    def __init__(self, server=None):
        self.server = server

    def post(self, path, payload):
        return asyncio.run(self._request(path, payload))

    async def _request(self, path, payload):
        if self.server:
            transport = None
            base = self.server.rstrip("/")
        else:
            from .service import create_app

            transport = httpx.ASGITransport(app=create_app())
            base = "http://rdmlab.internal"
        async with httpx.AsyncClient(
            transport=transport, base_url=base, timeout=3600.0
        ) as client:
            response = await client.post(path, json=payload)
        if response.status_code >= 400:
            try:
                body = response.json()
            except ValueError:
                body = {}
            kind = body.get("kind", "validation")
            message = body.get("message") or body.get("detail") or response.text
            raise CommandError(f"{kind}: {message}",
                               _KIND_TO_EXIT.get(kind, EXIT_VALIDATION))
        return response.json()


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_rows(rows, columns, fmt, no_timestamp):
    if no_timestamp:
        rows = [dict(r, wall_time_ms=0.0) if "wall_time_ms" in r else dict(r)
                for r in rows]
    if fmt == "json":
        doc = {"columns": columns, "rows": rows}
        if not no_timestamp:
            doc["generated"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"
    lines = []
    if not no_timestamp:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        lines.append(f"# generated {stamp}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path, what):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CommandError(f"validation: cannot read {what} from {path}: {exc}",
                           EXIT_VALIDATION)


def _load_matrix_file(path):
    doc = _load_json(path, "matrix")
    if isinstance(doc, dict) and "matrix" in doc:
        return doc["matrix"]
    return doc


def _exit_code_for(rows):
    statuses = {row.get("status", "ok") for row in rows}
    if statuses & {"infeasible", "error"}:
        return EXIT_INFEASIBLE
    if "stall" in statuses:
        return EXIT_STALL
    return EXIT_OK


def _options(args):
    return {"tol_gap": args.tol_gap, "tol_feas": args.tol_feas, "seed": args.seed}


def _bundle_doc(args):
    return _load_json(args.bundle, "bundle")


def _rows_command(args, path, payload):
    client = ServiceClient(args.server)
    result = client.post(path, payload)
    rows = result["rows"]
    _emit(format_rows(rows, ROW_COLUMNS, args.format, args.no_timestamp), args.out)
    return _exit_code_for(rows)


def cmd_build(args):
    if args.model == "hubbard":
        params = {"sites": args.sites, "spin": not args.spinless, "t": args.t,
                  "u": args.u}
        if args.particles is not None:
            params["n_particles"] = args.particles
    else:
        params = {"n_grid": args.grid, "box": args.box,
                  "softening": args.softening, "z": args.z,
                  "n_particles": args.particles if args.particles is not None else 1}
    client = ServiceClient(args.server)
    result = client.post("/v1/build", {"model": args.model, "params": params})
    text = json.dumps(result["bundle"], sort_keys=True, indent=1) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_energy(args):
    return _rows_command(args, "/v1/energy",
                         {"bundle": _bundle_doc(args), "options": _options(args)})


def cmd_xnorm(args):
    payload = {"bundle": _bundle_doc(args), "options": _options(args)}
    if args.gamma:
        payload["gamma"] = _load_matrix_file(args.gamma)
    return _rows_command(args, "/v1/xnorm", payload)


def cmd_frdm(args):
    payload = {"bundle": _bundle_doc(args), "options": _options(args)}
    if args.gamma:
        payload["gamma"] = _load_matrix_file(args.gamma)
    return _rows_command(args, "/v1/frdm", payload)


def cmd_fdft(args):
    payload = {"bundle": _bundle_doc(args), "options": _options(args)}
    if args.rho:
        payload["rho"] = [float(x) for x in args.rho.split(",")]
    return _rows_command(args, "/v1/fdft", payload)


def cmd_preimage(args):
    payload = {"bundle": _bundle_doc(args), "method": args.method,
               "options": _options(args)}
    if args.gamma:
        payload["gamma"] = _load_matrix_file(args.gamma)
    client = ServiceClient(args.server)
    result = client.post("/v1/preimage", payload)
    if args.format == "csv":
        _emit(format_rows(result["rows"], ROW_COLUMNS, "csv", args.no_timestamp),
              args.out)
    else:
        doc = {"method": result["method"],
               "roundtrip_defect": result["roundtrip_defect"],
               "gamma_n": result["gamma_n"]}
        _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_bounds(args):
    payload = {"bundle": _bundle_doc(args), "options": _options(args)}
    if args.b_grid:
        payload["b_grid"] = [float(x) for x in args.b_grid.split(",")]
    return _rows_command(args, "/v1/bounds", payload)


def cmd_sweep(args):
    payload = {
        "bundle": _bundle_doc(args),
        "spec": {"parameter": args.param, "start": args.start, "stop": args.stop,
                 "count": args.count, "quantity": args.quantity},
        "options": _options(args),
    }
    return _rows_command(args, "/v1/sweep", payload)


def cmd_check(args):
    client = ServiceClient(args.server)
    result = client.post("/v1/check", {
        "bundle": _bundle_doc(args), "selector": args.suite,
        "options": _options(args),
    })
    rows = [{"input_hash": result["input_hash"], "check": c["name"],
             "defect": c["defect"], "threshold": c["threshold"],
             "passed": c["passed"], "detail": c["detail"]}
            for c in result["checks"]]
    _emit(format_rows(rows, CHECK_COLUMNS, args.format, args.no_timestamp), args.out)
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rdmlab",
        description="Finite-dimensional laboratory for reduced-density-matrix "
                    "and density functionals.",
    )
    parser.add_argument("--version", action="version", version=f"rdmlab {__version__}")
    parser.add_argument("--server", default=None,
                        help="service URL; default runs the service in-process")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="write output to this path")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol-gap", dest="tol_gap", type=float, default=1e-6)
    common.add_argument("--tol-feas", dest="tol_feas", type=float, default=1e-6)
    common.add_argument("--no-timestamp", dest="no_timestamp", action="store_true",
                        help="suppress the timestamp header and report wall "
                             "times as 0 for byte-stable output")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    bundled = argparse.ArgumentParser(add_help=False, parents=[common])
    bundled.add_argument("--bundle", required=True, help="operator bundle path")

    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build a model bundle",
                             parents=[common])
    build_sub = p_build.add_subparsers(dest="model", required=True)
    p_hub = build_sub.add_parser("hubbard", parents=[common])
    p_hub.add_argument("--sites", type=int, required=True)
    p_hub.add_argument("--spinless", action="store_true")
    p_hub.add_argument("-t", "--t", type=float, default=1.0)
    p_hub.add_argument("-U", "--u", type=float, default=0.0)
    p_hub.add_argument("--particles", type=int, default=None)
    p_hub.set_defaults(func=cmd_build, model="hubbard")
    p_cb = build_sub.add_parser("coulomb1d", parents=[common])
    p_cb.add_argument("--grid", type=int, required=True)
    p_cb.add_argument("--box", type=float, default=10.0)
    p_cb.add_argument("--softening", type=float, default=0.1)
    p_cb.add_argument("-Z", "--z", type=float, default=1.0)
    p_cb.add_argument("--particles", type=int, default=None)
    p_cb.set_defaults(func=cmd_build, model="coulomb1d")

    p = sub.add_parser("energy", help="ground-state energy", parents=[bundled])
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("xnorm", help="weighted norm of a reduced density matrix",
                       parents=[bundled])
    p.add_argument("--gamma", default=None, help="matrix JSON; ground state if omitted")
    p.set_defaults(func=cmd_xnorm)

    p = sub.add_parser("frdm", help="constrained-search interaction functional",
                       parents=[bundled])
    p.add_argument("--gamma", default=None, help="matrix JSON; ground state if omitted")
    p.set_defaults(func=cmd_frdm)

    p = sub.add_parser("fdft", help="density-level constrained search",
                       parents=[bundled])
    p.add_argument("--rho", default=None,
                   help="comma-separated cell densities; ground state if omitted")
    p.set_defaults(func=cmd_fdft)

    p = sub.add_parser("preimage", help="many-body preimage of a one-body matrix",
                       parents=[bundled])
    p.add_argument("--gamma", default=None, help="matrix JSON; ground state if omitted")
    p.add_argument("--method", choices=("coleman", "telescope"), default="coleman")
    p.set_defaults(func=cmd_preimage)

    p = sub.add_parser("bounds", help="relative-bound curve a(b)", parents=[bundled])
    p.add_argument("--b-grid", dest="b_grid", default=None,
                   help="comma-separated offsets; default 1,10,...,1e6")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", help="parameter sweep", parents=[bundled])
    p.add_argument("--param", required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--quantity", required=True,
                   choices=("E", "E_RDM", "F_RDM", "F", "xnorm", "bound-curve"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="run the property-check suite",
                       parents=[bundled])
    p.add_argument("--suite", default="all",
                   help="'all' or comma-separated check-name prefixes")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8470)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"rdmlab: {exc}", file=sys.stderr)
        return exc.exit_code
    except httpx.HTTPError as exc:
        print(f"rdmlab: transport error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
