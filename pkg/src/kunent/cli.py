"""Command-line front end.

Subcommands
-----------
eval          evaluate a detection criterion on a preset or user state
table1        threshold table for the 8-qubit GHZ noise family
fig1          detection-boundary CSV for the qudit W noise family
oracle-check  doubled-space equivalence and proof-chain report

State specs accepted by ``--rho`` (see ``eval --help``):

    ghz:N[:p=V]          GHZ noise family (pure GHZ when p omitted)
    w:N:d[:p=V,q=V]      W / shifted-W noise family
    wtilde:N:d[:q=V]     shifted-W noise family slice
    mixed:I/D            maximally mixed state on D = 2^n qubit levels
    path/to/state.json   density matrix in the JSON matrix schema

The dense-dimension cap (default 4096) can be overridden with the
KUNENT_DIM_CAP environment variable.

Exit codes: 0 success, 1 property-check failure (oracle-check), 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from math import log2
from pathlib import Path
from typing import Sequence

import numpy as np

from .criteria import (
    CriterionReport,
    Theorem1Evaluator,
    Theorem2Evaluator,
    Theorem2K1Evaluator,
    ghz_probe,
    w_probe,
    w_tilde_probe,
)
from .oracle import oracle_check
from .serialize import load_density_matrix, load_factor, load_product_operator
from .states import ghz, mix, w_state, w_tilde
from .tensor import DensityMatrix, SiteDims, qubits, qudits
from .thresholds import (
    boundary_scan_csv,
    ghz_threshold_table,
    pq_boundary_scan,
    threshold_table_csv,
)


class InputError(Exception):
    """User input problem; reported with exit code 2."""


def _parse_params(text: str, allowed: Sequence[str]) -> dict[str, float]:
    params: dict[str, float] = {}
    for item in text.split(","):
        if not item:
            continue
        if "=" not in item:
            raise InputError(f"expected name=value, got {item!r}")
        name, _, raw = item.partition("=")
        if name not in allowed:
            raise InputError(f"unknown parameter {name!r} (allowed: {', '.join(allowed)})")
        try:
            params[name] = float(raw)
        except ValueError as exc:
            raise InputError(f"invalid value for {name}: {raw!r}") from exc
    return params


def parse_state_spec(spec: str) -> tuple[str, DensityMatrix]:
    """Build a density matrix from a preset spec or a JSON file path."""
    if Path(spec).is_file():
        try:
            return spec, load_density_matrix(spec)
        except (ValueError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot load state from {spec}: {exc}") from exc

    head, _, rest = spec.partition(":")
    try:
        if head == "ghz":
            n_str, _, params_str = rest.partition(":")
            n = int(n_str)
            params = _parse_params(params_str, ("p",))
            p = params.get("p", 1.0)
            return spec, mix([(p, ghz(n))], qubits(n))
        if head in ("w", "wtilde"):
            parts = rest.split(":", 2)
            if len(parts) < 2:
                raise InputError(f"spec {spec!r} needs n and d, e.g. w:5:4:p=0.5,q=0")
            n, d = int(parts[0]), int(parts[1])
            params = _parse_params(parts[2] if len(parts) > 2 else "", ("p", "q"))
            if head == "w":
                p = params.get("p", 1.0)
                q = params.get("q", 0.0)
            else:
                p = params.get("p", 0.0)
                q = params.get("q", 1.0)
            return spec, mix(
                [(p, w_state(n, d)), (q, w_tilde(n, d))], qudits(n, d)
            )
        if head == "mixed":
            if not rest.startswith("I/"):
                raise InputError(f"mixed spec must look like mixed:I/256, got {spec!r}")
            total = int(rest[2:])
            n = int(log2(total))
            if 2**n != total:
                raise InputError(
                    f"mixed:I/D currently supports qubit spaces (D a power of 2), got D={total}"
                )
            dims = qubits(n)
            return spec, DensityMatrix(
                dims, np.eye(total, dtype=complex) / total, _check_psd=False
            )
    except InputError:
        raise
    except (ValueError, TypeError) as exc:
        raise InputError(f"cannot parse state spec {spec!r}: {exc}") from exc
    raise InputError(
        f"unknown state spec {spec!r} (expected ghz:, w:, wtilde:, mixed: or a file path)"
    )


def _build_evaluator(args, dims: SiteDims):
    """Resolve probe flags/preset into a criterion evaluator."""
    theorem = args.theorem
    if args.per_tuple and theorem != 2:
        raise InputError("--per-tuple applies to theorem 2 only")
    if args.preset is not None:
        if args.x or args.y or args.omega:
            raise InputError("--preset cannot be combined with --x/--y/--omega")
        if args.preset == "ghz-probe":
            if theorem != 1:
                raise InputError("preset ghz-probe drives theorem 1")
            return Theorem1Evaluator(*ghz_probe(dims))
        if args.preset == "w-probe":
            x, om = w_probe(dims)
        elif args.preset == "wtilde-probe":
            x, om = w_tilde_probe(dims)
        else:  # pragma: no cover - argparse restricts choices
            raise InputError(f"unknown preset {args.preset!r}")
        if theorem != 2:
            raise InputError(f"preset {args.preset} drives theorem 2")
        if args.per_tuple:
            return Theorem2K1Evaluator(x, om)
        return Theorem2Evaluator(x, om)

    if theorem == 1:
        if not (args.x and args.y):
            # default probe choice: GHZ preset works on any dimensions
            if args.x or args.y:
                raise InputError("theorem 1 needs both --x and --y (or a preset)")
            return Theorem1Evaluator(*ghz_probe(dims))
        x = load_product_operator(args.x)
        y = load_product_operator(args.y)
        if x.dims.dims != dims.dims or y.dims.dims != dims.dims:
            raise InputError(
                f"probe dims {x.dims.dims}/{y.dims.dims} do not match state dims {dims.dims}"
            )
        return Theorem1Evaluator(x, y)

    if args.x is None and args.omega is None:
        x, om = w_probe(dims)
        if args.per_tuple:
            return Theorem2K1Evaluator(x, om)
        return Theorem2Evaluator(x, om)
    if not (args.x and args.omega):
        raise InputError("theorem 2 needs both --x and --omega (or a preset)")
    x = load_product_operator(args.x)
    if x.dims.dims != dims.dims:
        raise InputError(f"probe dims {x.dims.dims} do not match state dims {dims.dims}")
    omegas = [load_factor(p) for p in args.omega.split(",")]
    if args.per_tuple:
        return Theorem2K1Evaluator(x, omegas)
    return Theorem2Evaluator(x, omegas)


def _reports_csv(reports: Sequence[CriterionReport]) -> str:
    lines = ["theorem,k,lhs,rhs,margin,detected"]
    for r in reports:
        lines.append(
            f"{r.theorem},{r.k},{r.lhs:.10g},{r.rhs:.10g},{r.margin:.10g},{str(r.detected).lower()}"
        )
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    label, rho = parse_state_spec(args.rho)
    try:
        evaluator = _build_evaluator(args, rho.dims)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc

    n = rho.dims.n
    if args.k is not None:
        if not 1 <= args.k <= n - 1:
            raise InputError(f"--k must be in 1..{n - 1} for this state, got {args.k}")
        ks = [args.k]
    elif isinstance(evaluator, Theorem2K1Evaluator):
        ks = [1]
    else:
        ks = list(range(1, n))

    try:
        traces = evaluator.traces(rho)
        reports = [evaluator.report(traces, k) for k in ks]
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    if args.csv:
        sys.stdout.write(_reports_csv(reports))
    else:
        payload = {
            "rho": label,
            "any_detected": any(r.detected for r in reports),
            "reports": [r.to_dict() for r in reports],
        }
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def cmd_table1(args) -> int:
    rows = ghz_threshold_table(args.n)
    sys.stdout.write(threshold_table_csv(rows))
    return 0


def cmd_fig1(args) -> int:
    rows = []
    for k in range(1, args.n):
        rows.extend(pq_boundary_scan(args.n, args.d, k, args.grid, probe=args.probe))
    gridline = "q" if args.probe == "w" else "p"
    star = "p_star" if args.probe == "w" else "q_star"
    sys.stdout.write(boundary_scan_csv(rows, gridline_name=gridline, star_name=star))
    return 0


def cmd_oracle_check(args) -> int:
    result = oracle_check(args.trials, args.seed)
    json.dump(result, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0 if result["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kunent",
        description="Detect multipartite states containing fewer than k unentangled particles.",
    )
    parser.add_argument(
        "--config",
        help="JSON file with default values for any flag (flag names with dashes "
        "replaced by underscores)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a criterion on a state", description=__doc__,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
    p_eval.add_argument("--rho", required=True, help="state spec or JSON file")
    p_eval.add_argument("--theorem", type=int, choices=(1, 2), default=1)
    p_eval.add_argument("--k", type=int, default=None, help="default: all valid k")
    p_eval.add_argument(
        "--preset",
        choices=("ghz-probe", "w-probe", "wtilde-probe"),
        default=None,
        help="probe preset (ghz-probe: x_i=|1><0|, y_i=|0><0|; w-probe / "
        "wtilde-probe: rank-one site probes for the W families)",
    )
    p_eval.add_argument("--x", help="product-operator JSON file (array of factors)")
    p_eval.add_argument("--y", help="product-operator JSON file (theorem 1)")
    p_eval.add_argument("--omega", help="comma-separated single-site factor files (theorem 2)")
    p_eval.add_argument(
        "--per-tuple",
        action="store_true",
        help="theorem 2, k=1: use the per-tuple variant instead of the summed form",
    )
    p_eval.add_argument("--json", action="store_true", help="JSON output (default)")
    p_eval.add_argument("--csv", action="store_true", help="CSV output")
    p_eval.set_defaults(func=cmd_eval)

    p_t1 = sub.add_parser("table1", help="GHZ noise-family threshold table")
    p_t1.add_argument("--n", type=int, default=8)
    p_t1.set_defaults(func=cmd_table1)

    p_f1 = sub.add_parser("fig1", help="W noise-family boundary scan CSV")
    p_f1.add_argument("--n", type=int, default=5)
    p_f1.add_argument("--d", type=int, default=4)
    p_f1.add_argument("--grid", type=int, default=200)
    p_f1.add_argument("--probe", choices=("w", "wtilde"), default="w")
    p_f1.set_defaults(func=cmd_fig1)

    p_oc = sub.add_parser("oracle-check", help="doubled-space equivalence report")
    p_oc.add_argument("--trials", type=int, default=50)
    p_oc.add_argument("--seed", type=int, default=0)
    p_oc.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args, _ = parser.parse_known_args(argv)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                defaults = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return 2
        if not isinstance(defaults, dict):
            print(f"error: config {args.config} must hold a JSON object", file=sys.stderr)
            return 2
        parser.set_defaults(**defaults)
        for action in parser._actions:
            if isinstance(action, argparse._SubParsersAction):
                for sub_parser in action.choices.values():
                    sub_parser.set_defaults(
                        **{
                            key: value
                            for key, value in defaults.items()
                            if any(a.dest == key for a in sub_parser._actions)
                        }
                    )
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
