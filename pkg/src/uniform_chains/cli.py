"""Command-line entry point: ``uniform-chains <subcommand> [flags]``.

Every subcommand prints one JSON document (schema 1) to stdout or ``--out``.
Exit codes: 0 success, 1 a check or verification failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from math import comb

import numpy as np

from .errors import CapabilityError, ChainError, DomainError
from .lattice import (GROUND_FULL, central_binomial, dominance_check, read_chain_dump,
                      uniformity_stats, verify_chain_decomposition, write_chain_dump)

SCHEMA = 1


class UsageError(Exception):
    pass


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _emit(args, payload: dict) -> None:
    payload = {"schema": SCHEMA, "command": args.command, **payload}
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command} needs {' '.join(missing)}")


def _uniformity(D, eps_list) -> dict:
    stats = {e: uniformity_stats(D, e) for e in eps_list}
    first = stats[eps_list[0]]
    return {
        "s": first.s,
        "histogram": first.histogram,
        "near_uniform_fraction": {str(e): st.near_uniform_fraction for e, st in stats.items()},
        "coverage_fraction": {str(e): st.coverage_fraction for e, st in stats.items()},
    }


def _dominated(D) -> bool | None:
    from .symmetric import sigma_profile
    if D.ground != GROUND_FULL or D.num_chains != central_binomial(D.n):
        return None
    return dominance_check(D.profile(), sigma_profile(D.n).sigma)


def _build(args):
    """Decomposition for --method/--n/--seed, with the pipeline trace if any."""
    _need(args, "n")
    method = args.method or "uniform"
    if method == "symmetric":
        from .symmetric import symmetric_decomposition
        return symmetric_decomposition(args.n), None
    if method == "uniform":
        from .pipeline import best_of, run_pipeline
        if args.best_of > 1:
            return best_of(args.n, args.seed, args.best_of, args.eps[0], args.threads)
        return run_pipeline(args.n, args.seed)
    raise UsageError(f"unknown method {method!r}")


def cmd_decompose(args) -> int:
    D, trace = _build(args)
    report = verify_chain_decomposition(D)
    out = {"n": D.n, "seed": args.seed, "method": args.method or "uniform",
           "num_chains": D.num_chains, "verified": report.passed,
           "dominated_by_symmetric": _dominated(D), **_uniformity(D, args.eps)}
    if trace is not None:
        c = trace.constants
        out.update({"seed": trace.seed, "k": c["k"], "C0": c["C0"],
                    "leftover_size": trace.leftover_size, "counts": trace.counts()})
    else:
        out.update({"k": None, "C0": None, "leftover_size": 0, "counts": None})
    if args.chains:
        try:
            out["chains_bytes"] = write_chain_dump(D, args.chains, args.max_bytes)
            out["chains_file"] = args.chains
        except CapabilityError as exc:
            out["chains_file"] = None
            out["dump_suppressed"] = str(exc)
    _emit(args, out)
    return 0 if report.passed and D.num_chains == central_binomial(D.n) else 1


def cmd_verify(args) -> int:
    _need(args, "chains")
    try:
        D = read_chain_dump(args.chains)
    except (DomainError, ChainError, ValueError) as exc:
        _emit(args, {"chains_file": args.chains, "passed": False, "problems": [str(exc)]})
        return 1
    report = verify_chain_decomposition(D)
    M = central_binomial(D.n)
    out = {"chains_file": args.chains, "n": D.n, **report.to_dict(),
           "expected_chains": M, "minimum_count": D.num_chains == M}
    if args.n is not None and args.n != D.n:
        out["problems"].append(f"dump is for n={D.n}, expected n={args.n}")
        out["passed"] = False
    _emit(args, out)
    return 0 if out["passed"] and out["minimum_count"] else 1


def cmd_stats(args) -> int:
    if args.chains:
        D, trace = read_chain_dump(args.chains), None
    else:
        D, trace = _build(args)
    report = verify_chain_decomposition(D)
    out = {"n": D.n, "num_chains": D.num_chains, "verified": report.passed,
           "dominated_by_symmetric": _dominated(D), **_uniformity(D, args.eps)}
    if trace is not None:
        out["leftover_size"] = trace.leftover_size
        out["counts"] = trace.counts()
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["size", "count"])
            w.writerows(out["histogram"])
    _emit(args, out)
    return 0 if report.passed else 1


def cmd_sperner(args) -> int:
    from .sperner import build_sperner_graph, sperner_report
    D, _ = _build(args)
    out = sperner_report(build_sperner_graph(D))
    out["method"] = args.method or "uniform"
    out["seed"] = args.seed
    _emit(args, out)
    return 0 if out["alpha_certified"] and out["turan_ok"] else 1


def _config(args):
    from . import extremal as ex
    name = args.config
    if name is None:
        raise UsageError("extremal needs --config")
    if name.startswith("poset:"):
        rel = ex.read_poset(name.split(":", 1)[1])
        return ex.poset_induced(rel) if args.induced else ex.poset_weak(rel)
    table = ex.builtin_configurations()
    if name not in table:
        raise UsageError(f"unknown config {name!r}; choose from {sorted(table)} or poset:<file>")
    return table[name]


# (d, c, alpha) for the closed-form bound of each built-in configuration
_BOUND_PARAMS = {"sperner": (1, 1.0, 1.0), "unionfree": (2, 2.0, 1.0), "boolean2": (2, 1.0, 0.5)}


def cmd_extremal(args) -> int:
    from . import extremal as ex
    C = _config(args)
    mode = args.mode or "oracle"
    out = {"config": args.config, "configuration": str(C), "mode": mode}
    if mode == "oracle":
        if args.k is not None:
            amb = ex.grid(args.k, args.d or 2)
        else:
            _need(args, "n")
            amb = ex.boolean_lattice(args.n)
        res = ex.ex_exact(amb, C)
        out.update({"ambient": str(amb), "exact_or_bound": res.value, "exact": True,
                    "witness": [list(p) if isinstance(p, tuple) else p for p in res.witness()]})
    elif mode == "bound":
        _need(args, "n")
        if args.config in _BOUND_PARAMS:
            d, c, alpha = _BOUND_PARAMS[args.config]
        else:
            _need(args, "d", "c", "alpha")
            d, c, alpha = args.d, args.c, args.alpha
        d = args.d or d
        c = args.c if args.c is not None else c
        alpha = args.alpha if args.alpha is not None else alpha
        out.update({"ambient": f"2^[{args.n}]", "exact": False, "d": d, "c": c, "alpha": alpha,
                    "exact_or_bound": ex.theorem32_bound(args.n, d, c, alpha),
                    "middle_binomial": comb(args.n, args.n // 2)})
        if args.config == "boolean2":
            out["refined_bound"] = ex.boolean2_refined_bound(args.n)
    elif mode == "partition":
        _need(args, "n")
        d = args.d or 2
        P = ex.grid_partition(args.n, d, args.method or "symmetric", args.seed)
        check = P.verify()
        out.update({"ambient": f"2^[{args.n}]", "exact": False, "d": d, "parts": list(P.parts),
                    "num_cells": P.num_cells, "partition_ok": check["passed"],
                    "exact_or_bound": ex.partition_bound(P, C)})
        if args.n <= 5:
            out["exact_value"] = ex.ex_oracle(ex.boolean_lattice(args.n), C)
        _emit(args, out)
        return 0 if check["passed"] else 1
    else:
        raise UsageError(f"unknown mode {mode!r}")
    _emit(args, out)
    return 0


def cmd_containers(args) -> int:
    from .containers import container_stats
    _need(args, "n")
    st = container_stats(args.n, args.seed, args.samples, args.family)
    _emit(args, st)
    ok = (st["contained"] == st["deterministic"] == st["monotone"] == args.samples
          and st["budget_ok"])
    return 0 if ok else 1


def cmd_numerics(args) -> int:
    from . import numerics
    check = args.check
    if check == "appendix":
        rep = numerics.appendix_table_check()
        _emit(args, {"check": check, **rep})
        return 0 if rep["passed"] else 1
    if check and check.startswith("claim22:"):
        try:
            part = int(check.split(":", 1)[1])
        except ValueError as exc:
            raise UsageError(f"bad part in {check!r}") from exc
        grid = args.n_grid if args.n_grid else None
        rep = numerics.binomial_estimate_check(part, grid)
        _emit(args, {"check": check, **rep.to_dict()})
        return 0 if rep.passed else 1
    raise UsageError("numerics needs --check claim22:<part> or --check appendix")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--d", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--method", choices=["symmetric", "uniform"])
    common.add_argument("--eps", type=float, nargs="+", default=[0.5])
    common.add_argument("--out")
    common.add_argument("--chains")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--best-of", type=int, default=1)
    common.add_argument("--max-bytes", type=int)

    p = argparse.ArgumentParser(prog="uniform-chains", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("decompose", parents=[common], help="build a decomposition of 2^[n]")
    sub.add_parser("verify", parents=[common], help="check a chain dump")
    s = sub.add_parser("stats", parents=[common], help="uniformity statistics")
    s.add_argument("--csv", help="also write the size histogram as CSV")
    sub.add_parser("sperner", parents=[common], help="sparse Sperner graph from a decomposition")
    e = sub.add_parser("extremal", parents=[common], help="forbidden-configuration numbers")
    e.add_argument("--config")
    e.add_argument("--mode", choices=["oracle", "bound", "partition"])
    e.add_argument("--k", type=int)
    e.add_argument("--c", type=float)
    e.add_argument("--alpha", type=float)
    e.add_argument("--induced", action="store_true", help="induced copies for poset configs")
    c = sub.add_parser("containers", parents=[common], help="container algorithm statistics")
    c.add_argument("--samples", type=int, default=100)
    c.add_argument("--family", choices=["pipeline", "upper"], default="pipeline")
    nm = sub.add_parser("numerics", parents=[common], help="binomial estimates and the table")
    nm.add_argument("--check")
    nm.add_argument("--n-grid", type=int, nargs="+")
    return p


COMMANDS = {"decompose": cmd_decompose, "verify": cmd_verify, "stats": cmd_stats,
            "sperner": cmd_sperner, "extremal": cmd_extremal, "containers": cmd_containers,
            "numerics": cmd_numerics}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1 or args.best_of < 1:
        parser.print_usage(sys.stderr)
        print("error: --threads and --best-of must be positive", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, CapabilityError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ChainError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
