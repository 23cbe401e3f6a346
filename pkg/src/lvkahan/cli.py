"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from .algebra.identity import SingularSample
from .dynamics import (
    DegreeOverflow,
    degree_growth,
    iterate_exact,
    measure_drift_float,
)
from .graphs import (
    GraphError,
    LabeledGraph,
    TreeData,
    block_decompose,
    enumerate_gsystem_classes,
    independence_count,
    spanning_trees,
)
from .integrals import (
    independence_rank,
    linear_relation_detect,
    ratio_integral,
    spanning_densities,
    verify_integral_step,
)
from .kahan import SingularStep, det_Q, float_step, verify_measure_step
from .lvsys import (
    InconsistentUnification,
    LVSystem,
    gsystem_adjacency,
    random_parameters,
    tree_adjacency,
    verify_density_ode,
    verify_dp_ode,
)

MODES = ("symbolic", "exact", "float")


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


# -- helpers ----------------------------------------------------------------------------


def load_graph(path: str) -> LabeledGraph:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read graph {path}: {exc}") from exc
    return LabeledGraph.from_dict(data)


def system_for_graph(g: LabeledGraph) -> LVSystem:
    """Tree-system for a tree, G-system for any other cycle-closed graph."""
    g = g.sorted()
    if len(g.edges) == g.n - 1:
        return tree_adjacency(TreeData.from_graph(g))
    return gsystem_adjacency(g)


def _parse_rational(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a rational number: {text!r}") from exc


def load_params(args, sys_: LVSystem) -> tuple[dict, list | None]:
    """Parameters (and optional x0) from --params, else drawn from --seed."""
    if args.params:
        try:
            with open(args.params) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read params {args.params}: {exc}") from exc
        x0 = data.pop("x0", None)
        values = data.get("params", data)
        params = {k: _parse_rational(v) for k, v in values.items()}
        missing = [p for p in sys_.parameters() if p not in params]
        if missing:
            raise InputError(f"missing parameters: {', '.join(missing)}")
        return params, [_parse_rational(v) for v in x0] if x0 is not None else None
    return random_parameters(sys_, random.Random(args.seed)), None


def random_state(n: int, seed: int) -> list[Fraction]:
    rng = random.Random(seed + 1)
    return [Fraction(rng.randint(1, 20), rng.randint(1, 20)) for _ in range(n)]


def emit(args, payload, csv_text: str | None = None) -> None:
    if args.format == "csv" and csv_text is not None:
        text = csv_text
    else:
        text = json.dumps(payload, indent=2, default=str) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _map(func, items, jobs: int):
    """Order-stable map, in worker processes when jobs > 1."""
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _require_mode(args, allowed) -> None:
    if args.mode not in allowed:
        raise InputError(f"--mode {args.mode} is not valid for {args.command}")


# -- subcommands ---------------------------------------------------------------------------


def cmd_build(args) -> int:
    g = load_graph(args.graph)
    sys_ = system_for_graph(g)
    emit(args, sys_.to_dict())
    return 0


def _verify_tree(item) -> dict:
    graph_dict, tree_edges, mode, seed = item
    sys_ = system_for_graph(LabeledGraph.from_dict(graph_dict))
    tree = TreeData.from_graph(LabeledGraph(sys_.n, tuple(tuple(e) for e in tree_edges)))
    check_mode = "symbolic" if mode == "symbolic" else "probabilistic"
    try:
        res = verify_measure_step(sys_, tree=tree, mode=check_mode, seed=seed)
    except AssertionError as exc:
        return {"identity": "measure", "tree": [list(e) for e in tree_edges], "ok": False, "failures": [str(exc)]}
    return {
        "identity": "measure",
        "tree": [list(e) for e in tree_edges],
        "ok": res.ok,
        "witness": {k: str(v) for k, v in res.witness.items()} if res.witness else None,
    }


def cmd_verify(args) -> int:
    _require_mode(args, ("symbolic", "exact"))
    g = load_graph(args.graph)
    sys_ = system_for_graph(g)
    check_mode = "symbolic" if args.mode == "symbolic" else "probabilistic"
    results = []
    rep = verify_dp_ode(sys_)
    results.append({"identity": "dp_ode", "ok": rep.ok, "failures": rep.failures})
    trees = spanning_trees(sys_.graph)
    for t in trees:
        rep = verify_density_ode(sys_, t)
        results.append(
            {"identity": "density_ode", "tree": [list(e) for e in t.edges], "ok": rep.ok, "failures": rep.failures}
        )
    try:
        det_Q(sys_, mode=check_mode, seed=args.seed)
        results.append({"identity": "det_Q", "ok": True})
    except AssertionError as exc:
        results.append({"identity": "det_Q", "ok": False, "failures": [str(exc)]})
    items = [(sys_.graph.to_dict(), [list(e) for e in t.edges], args.mode, args.seed) for t in trees]
    results.extend(_map(_verify_tree, items, args.jobs))
    densities = spanning_densities(sys_)
    for k, d in enumerate(densities[1:], start=2):
        I = ratio_integral(densities[0], d)
        try:
            ok = verify_integral_step(sys_, I, mode=check_mode, seed=args.seed).ok
        except AssertionError:
            ok = False
        results.append({"identity": "integral", "integral": I.pretty(), "ok": ok})
    ok = all(r["ok"] for r in results)
    emit(args, {"graph": sys_.graph.to_dict(), "mode": args.mode, "ok": ok, "results": results})
    return 0 if ok else 1


def cmd_step(args) -> int:
    _require_mode(args, ("exact", "float"))
    g = load_graph(args.graph)
    sys_ = system_for_graph(g)
    params, x0 = load_params(args, sys_)
    if x0 is None:
        x0 = random_state(sys_.n, args.seed)
    if len(x0) != sys_.n:
        raise InputError(f"x0 has length {len(x0)}, expected {sys_.n}")
    if args.mode == "exact":
        h = _parse_rational(args.h if args.h is not None else "1/10")
        trace = iterate_exact(sys_, h, params, x0, args.steps)
        payload = {
            "h": str(h),
            "params": {k: str(v) for k, v in params.items()},
            "states": [[str(v) for v in s] for s in trace.states],
            "detM": [str(v) for v in trace.detM],
        }
        emit(args, payload, trace.to_csv())
        return 0
    import numpy as np

    h = float(args.h) if args.h is not None else 1e-3
    A = np.array([[float(v) for v in row] for row in sys_.numeric_A(params)])
    x = np.array([float(v) for v in x0])
    rows = [x]
    for _ in range(args.steps):
        x = float_step(A, x, h)
        rows.append(x)
    lines = ["step," + ",".join(f"x{i}" for i in range(1, sys_.n + 1))]
    lines += [f"{k}," + ",".join(repr(float(v)) for v in r) for k, r in enumerate(rows)]
    emit(args, {"h": h, "states": [[float(v) for v in r] for r in rows]}, "\n".join(lines) + "\n")
    return 0


def cmd_integrals(args) -> int:
    g = load_graph(args.graph)
    sys_ = system_for_graph(g)
    densities = spanning_densities(sys_)
    trees = spanning_trees(sys_.graph)
    integrals = [ratio_integral(densities[0], d) for d in densities[1:]]
    rank = independence_rank(sys_, integrals, seed=args.seed) if integrals else 0
    relations = linear_relation_detect(integrals, sys_, seed=args.seed) if len(integrals) >= 2 else []
    bd = block_decompose(sys_.graph)
    payload = {
        "graph": sys_.graph.to_dict(),
        "dps": [{"index": dp.index, "edge": [dp.u, dp.v], "poly": dp.poly.pretty()} for dp in sys_.dps],
        "densities": [
            {"tree": [list(e) for e in t.edges], "exponents": d.named_exponents()}
            for t, d in zip(trees, densities)
        ],
        "integrals": [I.to_dict() for I in integrals],
        "raw_count": len(integrals),
        "rank": rank,
        "lower_bound": independence_count(bd),
        "relations": [r.to_dict() for r in relations],
    }
    emit(args, payload)
    return 0


def cmd_enumerate(args) -> int:
    classes = enumerate_gsystem_classes(args.n)
    payload = {
        "n": args.n,
        "count": len(classes),
        "classes": [{"edges": [list(e) for e in g.edges], "independent_integrals": c} for g, c in classes],
    }
    lines = ["class,edges,independent_integrals"]
    lines += [
        f'{k},"{" ".join(f"{u}-{v}" for u, v in g.edges)}",{c}' for k, (g, c) in enumerate(classes, start=1)
    ]
    emit(args, payload, "\n".join(lines) + "\n")
    return 0


def cmd_entropy(args) -> int:
    g = load_graph(args.graph)
    sys_ = system_for_graph(g)
    params, _ = load_params(args, sys_)
    h = _parse_rational(args.h if args.h is not None else "1/3")
    try:
        ds = degree_growth(sys_, h, params, K=args.steps, seed=args.seed)
    except DegreeOverflow as exc:
        payload = {"degrees": exc.degrees, "entropy": None, "verdict": "inconclusive", "overflow": True}
        emit(args, payload)
        return 0
    payload = {**ds.to_dict(), "overflow": False}
    emit(args, payload, ds.to_csv())
    return 0


def cmd_drift(args) -> int:
    _require_mode(args, ("float",))
    g = load_graph(args.graph)
    sys_ = system_for_graph(g)
    params, x0 = load_params(args, sys_)
    if x0 is None:
        x0 = random_state(sys_.n, args.seed)
    h = float(args.h) if args.h is not None else 1e-3
    kahan = measure_drift_float(sys_, h, params, x0, args.steps, "kahan")
    rk4 = measure_drift_float(sys_, h, params, x0, args.steps, "rk4")
    lines = ["k,kahan,rk4"]
    for k in range(max(len(kahan.drift), len(rk4.drift))):
        a = repr(kahan.drift[k]) if k < len(kahan.drift) else ""
        b = repr(rk4.drift[k]) if k < len(rk4.drift) else ""
        lines.append(f"{k},{a},{b}")
    payload = {
        "h": h,
        "steps": args.steps,
        "kahan": {"max_abs_drift": kahan.max_abs, "terminated": kahan.terminated},
        "rk4": {"max_abs_drift": rk4.max_abs, "terminated": rk4.terminated},
    }
    emit(args, payload, "\n".join(lines) + "\n")
    return 0


COMMANDS = {
    "build": cmd_build,
    "verify": cmd_verify,
    "step": cmd_step,
    "integrals": cmd_integrals,
    "enumerate": cmd_enumerate,
    "entropy": cmd_entropy,
    "drift": cmd_drift,
}

DEFAULT_MODES = {"verify": "symbolic", "step": "exact", "drift": "float"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lvkahan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "enumerate":
            p.add_argument("--n", type=int, required=True)
        else:
            p.add_argument("--graph", required=True)
        p.add_argument("--params")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--h")
        p.add_argument("--steps", type=int, default=10 if name != "entropy" else 8)
        p.add_argument("--mode", choices=MODES)
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        p.add_argument("--out")
        p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv=None) -> int:
    # exact traces hold integers far beyond the default str() digit limit
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.mode is None:
        args.mode = DEFAULT_MODES.get(args.command, "symbolic")
    try:
        return COMMANDS[args.command](args)
    except (InputError, GraphError, InconsistentUnification) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SingularStep, SingularSample) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
