"""DC power flow through the weighted-Laplacian pseudo-inverse, f = W A^T L^+ p."""

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import networkx as nx
import numpy as np

from utils.errors import UnbalancedInjection
from utils.logs import set_logger

from .network import Network


logger = set_logger(__name__)

EPS_NUM = float(os.getenv("EPS_NUM", "1e-9"))



@dataclass(frozen=True)
class FlowSolution:
    """
    Signed link flows (tail to head positive) and the component partition they were solved on.
    """
    flows: dict[int, float]
    components: tuple[frozenset[int], ...]

    def __getitem__(self, link_id: int) -> float:
        return self.flows[link_id]


def balance_tolerance(p: np.ndarray) -> float:
    return EPS_NUM * max(1.0, float(np.abs(p).sum()))


def connected_components(net: Network, active: Iterable[int]) -> tuple[frozenset[int], ...]:
    """
    Partition of the nodes induced by the active links, ordered by first node in network order.
    """
    comps = [frozenset(c) for c in nx.connected_components(net.graph(active))]
    return tuple(sorted(comps, key=lambda c: min(net.node_index[v] for v in c)))


def laplacian(net: Network, active: Iterable[int]) -> np.ndarray:
    active = set(active)
    mask = np.array([link.id in active for link in net.links], dtype=bool)
    A = net.incidence[:, mask]
    return A @ np.diag(net.weights[mask]) @ A.T


def pseudo_inverse(net: Network, active: Iterable[int]) -> np.ndarray:
    """
    Moore-Penrose pseudo-inverse of the weighted Laplacian of (nodes, active).

    Each component is grounded at its first node, the reduced Laplacian is
    inverted, and the grounded inverse G is projected as P G P with P the
    per-component centering projection.

    Args:
        net (Network): The network.
        active (Iterable[int]): Active link ids.

    Returns:
        np.ndarray: |V| x |V| symmetric matrix.
    """
    active = frozenset(active)
    L = laplacian(net, active)
    n = len(net.nodes)
    Lp = np.zeros((n, n))
    for comp in connected_components(net, active):
        if len(comp) < 2:
            continue
        idx = sorted(net.node_index[v] for v in comp)
        reduced = idx[1:]
        G = np.zeros((len(idx), len(idx)))
        G[1:, 1:] = np.linalg.inv(L[np.ix_(reduced, reduced)])
        P = np.eye(len(idx)) - 1.0 / len(idx)
        Lp[np.ix_(idx, idx)] = P @ G @ P
    return Lp


def update_pseudo_inverse(prev: np.ndarray, net: Network, active: Iterable[int], removed: Iterable[int]) -> np.ndarray:
    """
    Update L^+ after removing links from ``active``.

    Removals that keep the component connected use the rank-one update
    L'^+ = L^+ + w L^+ b b^T L^+ / (1 - w b^T L^+ b); a removal that
    disconnects falls back to full recomputation.

    Args:
        prev (np.ndarray): Pseudo-inverse for ``active``.
        net (Network): The network.
        active (Iterable[int]): Link set ``prev`` was computed for.
        removed (Iterable[int]): Links to remove.

    Returns:
        np.ndarray: Pseudo-inverse for ``active - removed``.
    """
    removed = [link_id for link_id in net.ordered(removed) if link_id in set(active)]
    if not removed:
        return prev
    current = set(active)
    G = net.graph(current)
    Lp = prev.copy()
    for link_id in removed:
        link = net.link(link_id)
        G.remove_edge(link.tail, link.head, key=link_id)
        current.discard(link_id)
        if not nx.has_path(G, link.tail, link.head):
            logger.debug(f"Removing link {link_id} disconnects; recomputing pseudo-inverse")
            return pseudo_inverse(net, current)
        b = np.zeros(len(net.nodes))
        b[net.node_index[link.tail]] = 1.0
        b[net.node_index[link.head]] = -1.0
        Lb = Lp @ b
        Lp = Lp + link.weight * np.outer(Lb, Lb) / (1.0 - link.weight * b @ Lb)
    return Lp


@lru_cache(maxsize=4096)
def _ptdf(net: Network, active: frozenset[int]) -> np.ndarray:
    order = net.ordered(active)
    cols = [net.link_index[i] for i in order]
    A = net.incidence[:, cols]
    return np.diag(net.weights[cols]) @ A.T @ pseudo_inverse(net, active)


def ptdf(net: Network, active: Iterable[int], nodes: Iterable[int] | None = None) -> np.ndarray:
    """
    Flow sensitivity W A^T L^+ with rows in ``net.ordered(active)`` and node columns,
    optionally restricted to the columns of ``nodes``.
    """
    M = _ptdf(net, frozenset(active))
    if nodes is None:
        return M
    return M[:, [net.node_index[v] for v in nodes]]


def check_balance(net: Network, active: Iterable[int], p: np.ndarray) -> tuple[frozenset[int], ...]:
    """
    Raises:
        UnbalancedInjection: If a component's injections do not sum to zero.
    """
    comps = connected_components(net, active)
    tol = balance_tolerance(p)
    for comp in comps:
        total = sum(p[net.node_index[v]] for v in comp)
        if abs(total) > tol:
            raise UnbalancedInjection(f"Component {sorted(comp)} sums to {total:.3e}")
    return comps


def compute_flow(net: Network, active: Iterable[int], p: np.ndarray) -> FlowSolution:
    """
    Unique DC flow of a balanced injection on the active links.

    Args:
        net (Network): The network.
        active (Iterable[int]): Active link ids.
        p (np.ndarray): Node-ordered injections.

    Returns:
        FlowSolution: Flows keyed by link id plus the components.

    Raises:
        UnbalancedInjection: If ``p`` is unbalanced on some component.
    """
    active = frozenset(active)
    p = np.asarray(p, dtype=float)
    comps = check_balance(net, active, p)
    values = ptdf(net, active) @ p
    return FlowSolution(flows=dict(zip(net.ordered(active), map(float, values))), components=comps)


__all__ = [
    "EPS_NUM",
    "FlowSolution",
    "balance_tolerance",
    "connected_components",
    "laplacian",
    "pseudo_inverse",
    "update_pseudo_inverse",
    "ptdf",
    "check_balance",
    "compute_flow",
]
