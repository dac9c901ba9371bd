"""Brute-force reference: grid search over admissible controls at every stage."""

import itertools

import numpy as np
from scipy.optimize import linprog

from cascade.dynamics import admissible_set, failure_step, is_feasible
from cascade.state import NetworkState
from grid.flow import ptdf
from grid.network import Network
from utils.logs import set_logger


logger = set_logger(__name__)



def redispatch_value(net: Network, state: NetworkState) -> float:
    """
    LP power redispatch: max s^T u over U(E, p) with every active flow within capacity.
    """
    U = admissible_set(net, state)
    n = len(net.nodes)
    bounds = [(float(lo), float(hi)) for lo, hi in zip(U.box.lower, U.box.upper)]
    A_eq, b_eq = [], []
    for group in U.balance:
        row = np.zeros(n)
        row[list(group)] = 1.0
        A_eq.append(row)
        b_eq.append(0.0)
    order = net.ordered(state.active)
    A_ub, b_ub = [], []
    if order:
        H = ptdf(net, state.active)
        caps = np.array([net.link(i).capacity for i in order])
        A_ub, b_ub = np.vstack([H, -H]), np.concatenate([caps, caps])
    res = linprog(
        -net.sign_vector, A_ub=A_ub if len(A_ub) else None, b_ub=b_ub if len(b_ub) else None,
        A_eq=np.array(A_eq) if A_eq else None, b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds, method="highs",
    )
    return float(-res.fun) if res.status == 0 else 0.0


def grid_controls(net: Network, state: NetworkState, n0: int):
    """
    Admissible controls on a grid of ``n0`` points per free coordinate.

    Within each balance group the last coordinate is fixed by balance and
    kept only when it stays in its box.
    """
    U = admissible_set(net, state)
    per_group = []
    for group in U.balance:
        if len(group) == 1:
            continue
        axes = [np.linspace(U.box.lower[i], U.box.upper[i], n0) for i in group[:-1]]
        last = group[-1]
        tol = 1e-12 * (1.0 + abs(U.box.upper[last] - U.box.lower[last]))
        options = []
        for values in itertools.product(*axes):
            rest = -float(np.sum(values))
            if U.box.lower[last] - tol <= rest <= U.box.upper[last] + tol:
                options.append((group, values + (min(max(rest, U.box.lower[last]), U.box.upper[last]),)))
        per_group.append(options)
    for combo in itertools.product(*per_group):
        u = np.zeros(len(net.nodes))
        for group, values in combo:
            u[list(group)] = values
        yield u


def baseline_discretized_search(net: Network, state: NetworkState, N: int, n0: int = 11) -> float:
    """
    Lower bound on J_N by exhaustive search over gridded controls.

    The last stage is solved exactly by LP redispatch.

    Args:
        net (Network): The network.
        state (NetworkState): Initial state.
        N (int): Horizon.
        n0 (int): Grid points per coordinate, >= 2.

    Returns:
        float: Best terminal residual load found.
    """
    if n0 < 2:
        raise ValueError("n0 must be at least 2.")
    if N < 1:
        raise ValueError("Horizon N must be at least 1.")
    memo: dict[tuple, float] = {}

    def best(current: NetworkState, remaining: int) -> float:
        if is_feasible(net, current):
            return net.residual(current.p)
        key = (current.active, tuple(np.round(current.p, 12)), remaining)
        if key in memo:
            return memo[key]
        value = redispatch_value(net, current)
        if remaining > 1:
            for u in grid_controls(net, current, n0):
                value = max(value, best(failure_step(net, current, u), remaining - 1))
        memo[key] = value
        return value

    value = best(state, N)
    logger.debug(f"Discretized search (n0={n0}, N={N}): {value:.6g} over {len(memo)} states")
    return value


__all__ = [
    "redispatch_value",
    "grid_controls",
    "baseline_discretized_search",
]
