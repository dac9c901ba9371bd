"""Constant and one-shot optimal shedding."""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from cascade.dynamics import surviving_links
from cascade.state import NetworkState
from grid.flow import balance_tolerance, connected_components
from grid.network import Network
from search import root_node, value_iteration
from utils.errors import UnbalancedInjection
from utils.logs import set_logger

from .functions import PiecewiseChi, chi_argmax_split, chi_star
from .intervals import IntervalSet
from .tree import ReducedTree, component_feasible_set, tree_reduce


logger = set_logger(__name__)

OneShotMethod = Literal["search", "tree"]



@dataclass
class TreeSolution:
    """
    Output of the two passes over a reduced tree.

    Attributes:
        value: J, the residual load of the constant control.
        control: Constant control in node order.
        outputs: Value function of every tree node as a function of its uplink transfer.
        domains: Transfer set of every non-root node.
        transfers: Optimal transfer of every non-root node toward its parent.
    """
    value: float
    control: np.ndarray
    outputs: dict[int, PiecewiseChi]
    domains: dict[int, IntervalSet]
    transfers: dict[int, float]


def _shed_range(p: float) -> IntervalSet:
    return IntervalSet.interval(0.0, p)


def solve_tree(net: Network, tree: ReducedTree, N: int) -> TreeSolution:
    """
    Constant optimal control on a reduced tree in two passes.

    Leaves to root, every node stars its own shed range with its children's
    value functions on their feasible transfers. Root to leaves, the root
    transfer 0 is split back among the inputs.
    """
    sign = dict(zip(net.nodes, net.sign_vector))
    own = {v: PiecewiseChi.linear(_shed_range(p), sign[v]) for v, p in tree.injections.items()}
    outputs: dict[int, PiecewiseChi] = {}
    domains: dict[int, IntervalSet] = {}

    def inputs(v: int) -> list:
        return [own[v]] + [(outputs[c], domains[c]) for c in tree.children[v]]

    # Iteration I
    for v in tree.postorder:
        outputs[v] = chi_star(inputs(v))
        if v != tree.root:
            domains[v] = component_feasible_set(tree.uplinks[v], N, "constant") & outputs[v].domain()
            logger.debug(f"Node {v}: top {outputs[v].top}, transfers {domains[v]!r}")
    value = outputs[tree.root](0.0)

    # Iteration II
    transfers: dict[int, float] = {}
    u = np.zeros(len(net.nodes))
    for v in tree.order:
        z = transfers.get(v, 0.0)
        split = chi_argmax_split(inputs(v), z)
        u[net.node_index[v]] = split[0]
        for c, zc in zip(tree.children[v], split[1:]):
            transfers[c] = zc
    logger.info(f"Tree solution J={value:.6g} at root {tree.root}")
    return TreeSolution(value=float(value), control=u, outputs=outputs, domains=domains, transfers=transfers)


def solve_tree_constant(net: Network, tree: ReducedTree, N: int) -> tuple[float, dict[int, float]]:
    """
    Best constant control on a tree-reducible network.

    Args:
        net (Network): The network.
        tree (ReducedTree): Its reduction, carrying the initial injections.
        N (int): Horizon, at least 1.

    Returns:
        tuple[float, dict[int, float]]: ``J`` and the control by node id;
        nodes outside the tree get 0.
    """
    if N < 1:
        raise ValueError("Horizon N must be at least 1.")
    solution = solve_tree(net, tree, N)
    return solution.value, net.mapping(solution.control)


def _constant_value(net: Network, state: NetworkState, N: int, method: OneShotMethod) -> tuple[float, np.ndarray]:
    if method == "tree":
        tree = tree_reduce(net, state.p, active=state.active)
        solution = solve_tree(net, tree, N)
        return solution.value, solution.control
    result = value_iteration(net, root_node(net, state, constant=True), N)
    control = result.control if result.control is not None else np.zeros(len(net.nodes))
    return result.value, control


def _balanced(net: Network, state: NetworkState) -> bool:
    tol = balance_tolerance(state.p)
    return all(
        abs(sum(state.p[net.node_index[v]] for v in comp)) <= tol
        for comp in connected_components(net, state.active)
    )



@dataclass
class OneShotCandidate:
    """Shedding once at stage ``t``: the constant problem on ``E_un^t`` with ``N - t`` stages."""
    t: int
    value: float
    control: np.ndarray


def one_shot_candidates(
    net: Network, state: NetworkState, N: int, method: OneShotMethod = "search"
) -> list[OneShotCandidate]:
    """
    Every shedding stage reachable with ``p0`` still balanced.

    Raises:
        UnbalancedInjection: If ``p0`` is unbalanced on the initial topology.
    """
    if N < 1:
        raise ValueError("Horizon N must be at least 1.")
    if not _balanced(net, state):
        raise UnbalancedInjection("Initial injections are unbalanced.")
    candidates = []
    current = state
    for t in range(N):
        if not _balanced(net, current):
            break
        value, control = _constant_value(net, current, N - t, method)
        logger.debug(f"Shedding at t={t}: J={value:.6g}")
        candidates.append(OneShotCandidate(t, value, control))
        try:
            nxt = surviving_links(net, current.active, state.p)
        except UnbalancedInjection:
            break
        if nxt == current.active:
            break
        current = NetworkState(nxt, state.p)
    return candidates


def solve_one_shot(
    net: Network, state: NetworkState, N: int, method: OneShotMethod = "search"
) -> tuple[float, list[np.ndarray]]:
    """
    Best control that lets the cascade run uncontrolled and sheds once.

    For every stage ``t`` reachable with ``p0`` still balanced, the constant
    problem on the uncontrolled topology ``E_un^t`` with ``N - t`` stages is
    solved; the earliest best ``t`` wins.

    Returns:
        tuple[float, list[np.ndarray]]: ``J`` and the ``N`` controls.
    """
    best: OneShotCandidate | None = None
    for candidate in one_shot_candidates(net, state, N, method):
        if best is None or candidate.value > best.value + 1e-9 * (1.0 + abs(best.value)):
            best = candidate
    logger.info(f"One-shot J={best.value:.6g}, shedding at t={best.t}")
    return best.value, [state.p.copy() for _ in range(best.t)] + [best.control.copy() for _ in range(N - best.t)]


__all__ = [
    "TreeSolution",
    "OneShotCandidate",
    "solve_tree",
    "solve_tree_constant",
    "one_shot_candidates",
    "solve_one_shot",
]
