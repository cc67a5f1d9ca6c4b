import numpy as np
import pytest

from cotq.grid import GridSpec, build_grid
from cotq.quantile_map import ConditionalQuantileMap
from cotq.transport import TransportProblem, solve_exact


def fit_uniform_cloud(Y, grid_spec=None):
    """Fit a quantile map to an unweighted cloud (weights 1/n)."""
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0]
    if grid_spec is None:
        grid_spec = GridSpec.balanced(n, Y.shape[1])
    grid = build_grid(grid_spec)
    problem = TransportProblem(grid.points, np.full(grid.N, grid.mass), Y, np.full(n, 1.0 / n))
    plan = solve_exact(problem)
    return grid, plan, ConditionalQuantileMap.from_plan(grid, plan, Y)


def enumerate_integer_plans(supply, demand):
    """Yield every integer flow matrix with the given margins (brute force)."""
    supply = list(supply)
    demand = list(demand)
    N, n = len(supply), len(demand)
    flow = [[0] * n for _ in range(N)]

    def rec(i, j, row_rem, col_rem):
        if i == N:
            yield [row[:] for row in flow]
            return
        if j == n - 1:
            v = row_rem
            if v <= col_rem[j]:
                flow[i][j] = v
                col_rem[j] -= v
                yield from rec(i + 1, 0, supply[i + 1] if i + 1 < N else 0, col_rem)
                col_rem[j] += v
                flow[i][j] = 0
            return
        # leave room so the rest of the row stays feasible
        tail_cap = sum(col_rem[j + 1:])
        lo = max(0, row_rem - tail_cap)
        hi = min(row_rem, col_rem[j])
        for v in range(lo, hi + 1):
            flow[i][j] = v
            col_rem[j] -= v
            yield from rec(i, j + 1, row_rem - v, col_rem)
            col_rem[j] += v
            flow[i][j] = 0

    yield from rec(0, 0, supply[0], list(demand))


def brute_force_transport_objective(cost, supply, demand):
    """Exact optimum of the integer-margin transportation problem by
    exhaustive enumeration of all feasible integer plans."""
    cost = np.asarray(cost, dtype=float)
    best = np.inf
    for flow in enumerate_integer_plans(supply, demand):
        val = float(np.sum(np.asarray(flow, dtype=float) * cost))
        if val < best:
            best = val
    return best


@pytest.fixture(scope="session")
def gaussian_cloud_map():
    """Medium spherical-Gaussian fit shared across statistical tests."""
    rng = np.random.Generator(np.random.Philox(12345))
    Y = rng.standard_normal((2500, 2))
    grid, plan, qmap = fit_uniform_cloud(Y)
    return grid, plan, qmap, Y
