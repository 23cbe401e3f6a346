"""Reproduce the float drift calibration stored in drift.json.

Run from the repository root:  python3 calibration/drift_calibration.py
The thresholds in drift.json were fixed after one run of this script and
are not recomputed by the test suite.
"""

import json
import random
import sys
from pathlib import Path

from lvkahan.dynamics import measure_drift_float
from lvkahan.graphs import TreeData, from_edge_list
from lvkahan.lvsys import tree_adjacency

HERE = Path(__file__).resolve().parent


def load():
    return json.loads((HERE / "drift.json").read_text())


def system_and_states(cal):
    setting = cal["setting"]
    g = from_edge_list(setting["n"], [tuple(e) for e in setting["edges"]])
    sys_ = tree_adjacency(TreeData.from_graph(g))
    rng = random.Random(setting["x0_seed"])
    lo, hi = setting["x0_range"]
    states = [[rng.uniform(lo, hi) for _ in range(setting["n"])] for _ in range(setting["trials"])]
    return sys_, setting["params"], states


def run(cal):
    sys_, params, states = system_and_states(cal)
    setting = cal["setting"]
    rows = []
    for x0 in states:
        kahan = measure_drift_float(sys_, setting["h"], params, x0, setting["steps"], "kahan")
        rk4 = measure_drift_float(sys_, setting["h"], params, x0, setting["steps"], "rk4")
        rows.append(
            {
                "x0": x0,
                "kahan_max_abs": kahan.max_abs,
                "rk4_max_abs": rk4.max_abs,
                "terminated": kahan.terminated or rk4.terminated,
            }
        )
    return rows


if __name__ == "__main__":
    cal = load()
    rows = run(cal)
    for r in rows:
        ratio = r["rk4_max_abs"] / max(r["kahan_max_abs"], 1e-300)
        print(f"kahan {r['kahan_max_abs']:.3e}  rk4 {r['rk4_max_abs']:.3e}  ratio {ratio:.3e}")
    if "--write" in sys.argv:
        cal["observed"] = rows
        (HERE / "drift.json").write_text(json.dumps(cal, indent=2) + "\n")
