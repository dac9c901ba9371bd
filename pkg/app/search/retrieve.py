"""Recover a concrete control sequence within epsilon of the aggregated optimum."""

import numpy as np
from scipy.optimize import linprog

from cascade.dynamics import is_feasible, simulate
from cascade.state import NetworkState
from grid.network import Network
from utils.errors import RetrievalFailed
from utils.logs import set_logger

from .value import SearchResult


logger = set_logger(__name__)

MARGIN_FLOOR = 1e-8



def _stage_rows(net: Network, result: SearchResult, margin: float):
    """Inequality and equality rows over the stacked reduced controls y^0 .. y^T."""
    space = result.root.space
    d = space.dim
    T = len(result.path) - 1
    nvar = (T + 1) * d
    A_ub, b_ub, A_eq, b_eq = [], [], [], []

    def block(t: int, row: np.ndarray) -> np.ndarray:
        out = np.zeros(nvar)
        out[t * d:(t + 1) * d] = row
        return out

    for t in range(1, T + 1):
        for j in range(d):
            row = np.zeros(nvar)
            row[t * d + j], row[(t - 1) * d + j] = 1.0, -1.0
            if space.constant:
                A_eq.append(row)
                b_eq.append(0.0)
            else:
                A_ub.append(row)
                b_ub.append(0.0)

    for t, (active, control) in enumerate(zip(result.actives, result.path)):
        for h in space.balance_planes(net, active) + space.equality_planes():
            A_eq.append(block(t, h.normal))
            b_eq.append(h.offset)
        order, M = space.flow_rows(net, active)
        for i, row in zip(order, M):
            c = net.link(i).capacity
            b = control.beta.get(i, 0) if t < T else 0
            if b > 0:
                A_ub.append(block(t, -row))
                b_ub.append(-(c + margin))
            elif b < 0:
                A_ub.append(block(t, row))
                b_ub.append(-(c + margin))
            else:
                A_ub += [block(t, row), block(t, -row)]
                b_ub += [c, c]
    return nvar, A_ub, b_ub, A_eq, b_eq


def _solve(net: Network, result: SearchResult, margin: float) -> np.ndarray | None:
    space = result.root.space
    d = space.dim
    T = len(result.path) - 1
    y0 = result.root.P.points[0]
    nvar, A_ub, b_ub, A_eq, b_eq = _stage_rows(net, result, margin)
    cost = np.zeros(nvar)
    cost[T * d:] = -space.weights
    bounds = [(0.0, float(y0[j])) for j in range(d)] + [(0.0, None)] * (T * d)
    res = linprog(
        cost,
        A_ub=np.array(A_ub) if A_ub else None, b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(A_eq) if A_eq else None, b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds, method="highs",
        options={"primal_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        logger.debug(f"Retrieval LP with margin {margin:.3g}: {res.message}")
        return None
    Y = res.x.reshape(T + 1, d)
    Y[0] = np.clip(Y[0], 0.0, y0)
    for t in range(1, T + 1):
        Y[t] = np.clip(Y[t], 0.0, Y[t - 1])
    return Y


def retrieve_control(net: Network, result: SearchResult, epsilon: float) -> list[dict[int, float]]:
    """
    Concrete control sequence whose terminal residual load is within ``epsilon`` of ``result.value``.

    Stages are solved jointly as one LP over the cells of the optimal path;
    flows on links that must fail are pushed past capacity by a margin, which
    is halved until the value gap closes. The sequence is padded to the
    horizon by holding the last control and verified by simulation.

    Args:
        net (Network): The network.
        result (SearchResult): Output of ``value_iteration``.
        epsilon (float): Allowed optimality gap, > 0.

    Returns:
        list[dict[int, float]]: One control per stage, keyed by node id.

    Raises:
        RetrievalFailed: If no margin above the floor reproduces the path.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive.")
    space = result.root.space
    p0 = space.embed(result.root.P.points[0])
    state = NetworkState(result.root.active, p0)
    expected = result.actives + [result.path[-1].next_active]
    if space.dim == 0:
        return [net.mapping(p0 * 0.0) for _ in range(result.horizon)]

    margin = epsilon / (2.0 * space.dim)
    while margin >= MARGIN_FLOOR:
        Y = _solve(net, result, margin)
        if Y is not None and float(space.weights @ Y[-1]) >= result.value - epsilon:
            controls = [space.embed(y) for y in Y]
            controls += [controls[-1]] * (result.horizon - len(controls))
            states = simulate(net, state, controls[:len(Y)])
            if [s.active for s in states[1:]] == expected[1:] and is_feasible(net, states[-1]):
                logger.debug(f"Retrieved control with margin {margin:.3g}")
                return [net.mapping(u) for u in controls]
            logger.debug(f"Margin {margin:.3g} does not reproduce the path")
        margin /= 2.0
    raise RetrievalFailed(f"No interior control reproduces the optimal path (epsilon={epsilon}).")


__all__ = [
    "MARGIN_FLOOR",
    "retrieve_control",
]
