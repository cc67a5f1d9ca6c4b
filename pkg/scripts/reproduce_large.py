#!/usr/bin/env python3
"""Large-scale simulation presets (optional; hours on a workstation).

Two presets, far beyond the CI-scale acceptance suite:

  contours-large   spherical model, n = 128,020, k = N = 6,401:
                   conditional contours (0.2, 0.4) and medians over the
                   ten standard queries.
  banana-large     banana model, n = 576,040, k = N = 14,401:
                   contours (0.2, 0.4, 0.8) and the median at x = 0.

Both run the exact solver with lazily evaluated costs (the dense cost
matrix would not fit the configured cap).  Expect roughly 10-60 minutes
per query for contours-large and several hours for banana-large; memory
peaks at ~1.7 GB for the banana preset (potential fitting holds an
N x N matrix).  Use --scale to shrink everything proportionally for a
quick dry run (e.g. --scale 20 divides n and k by 20).

Results are written as CSV/JSON/SVG via the normal output writer.
"""

import argparse
import sys
import time

import numpy as np

from cotq.dataio import write_contours
from cotq.grid import GridSpec, build_grid
from cotq.quantile_map import ConditionalQuantileMap
from cotq.regression import Tube
from cotq.simdata import ModelSpec, generate
from cotq.transport import TransportProblem, solve_exact
from cotq.weights import knn_weights

PRESETS = {
    "contours-large": dict(
        model="spherical", n=128_020, k=6401,
        taus=(0.2, 0.4),
        queries=(-2.0, -1.6, -1.1, -0.7, -0.2, 0.2, 0.7, 1.1, 1.6, 2.0),
    ),
    "banana-large": dict(
        model="banana", n=576_040, k=14_401,
        taus=(0.2, 0.4, 0.8),
        queries=(0.0,),
    ),
}


def fit_query(x, X, Y, grid, k):
    w = knn_weights([x], X, k)
    problem = TransportProblem(
        grid.points, np.full(grid.N, grid.mass), Y, w.values, cost_mode="lazy"
    )
    t0 = time.perf_counter()
    plan = solve_exact(problem, max_pivots=10_000_000)
    print(f"  x={x:+.2f}: solved {grid.N}x{k} in {time.perf_counter() - t0:.0f}s "
          f"({plan.pivots} pivots)", flush=True)
    return ConditionalQuantileMap.from_plan(grid, plan, Y, query_x=[x])


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("preset", choices=sorted(PRESETS))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--scale", type=int, default=1,
                        help="divide n and k by this factor for a dry run")
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    cfg = PRESETS[args.preset]
    n = max(100, cfg["n"] // args.scale)
    k = max(50, cfg["k"] // args.scale)
    out = args.out or f"{args.preset}-output"

    print(f"{args.preset}: model={cfg['model']} n={n} k=N={k}", flush=True)
    X, Y = generate(ModelSpec(cfg["model"], n, args.seed))
    grid = build_grid(GridSpec.balanced(k, 2))

    maps = [fit_query(x, X, Y, grid, k) for x in cfg["queries"]]
    queries = [np.array([x]) for x in cfg["queries"]]
    tubes = [
        Tube(tau=t, slices=tuple((q, m.contour(t)) for q, m in zip(queries, maps)))
        for t in cfg["taus"]
    ]
    medians = [(q, m.median_region().point) for q, m in zip(queries, maps)]
    written = write_contours(tubes, out, medians=medians)
    for name in written:
        print(f"{out}/{name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
