"""
Tree-reducible networks.

A network is tree reducible when its supply-demand nodes are joined by
two-terminal components arranged as a tree. Each component then only sees
the scalar flow ``z`` between its terminals.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal

import networkx as nx
import numpy as np

from grid.flow import ptdf
from grid.network import Network
from utils.errors import NotTreeReducible
from utils.logs import set_logger

from .intervals import IntervalSet


logger = set_logger(__name__)

ModeType = Literal["constant", "general"]



@dataclass(frozen=True, eq=False)
class TreeLink:
    """
    Two-terminal component between ``child`` and ``parent``.

    ``z`` on this link is the flow leaving ``child`` toward ``parent``.
    """
    child: int
    parent: int
    links: frozenset[int]
    component: Network

    def __repr__(self) -> str:
        return f"TreeLink({self.child}->{self.parent}, links={sorted(self.links)})"



@dataclass(frozen=True, eq=False)
class ReducedTree:
    """
    Reduced tree rooted at ``root``.

    Attributes:
        root: Root node id.
        order: Tree nodes in breadth-first order from the root.
        uplinks: Component joining each non-root node to its parent.
        children: Child lists.
        injections: Initial injection of every tree node.
        dropped: Links on dead ends; they never carry flow.
    """
    root: int
    order: tuple[int, ...]
    uplinks: dict[int, TreeLink]
    children: dict[int, tuple[int, ...]]
    injections: dict[int, float]
    dropped: frozenset[int] = field(default_factory=frozenset)

    @property
    def nodes(self) -> tuple[int, ...]:
        return self.order

    @cached_property
    def postorder(self) -> tuple[int, ...]:
        return tuple(reversed(self.order))

    def parent(self, node: int) -> int | None:
        link = self.uplinks.get(node)
        return None if link is None else link.parent

    def edges(self) -> list[tuple[int, int]]:
        return [(link.parent, link.child) for link in self.uplinks.values()]


# ---------- Reduction ----------
def _terminals(net: Network, p0) -> set[int]:
    if p0 is None:
        return {node for node, s in zip(net.nodes, net.sign_vector) if s != 0}
    p = net.vector(p0)
    return {node for node, value in zip(net.nodes, p) if value != 0.0}


def _prune_leaves(G: nx.MultiGraph, terminals: set[int]) -> set[int]:
    """Drop transmission nodes of degree <= 1 until none is left; returns the dropped links."""
    dropped: set[int] = set()
    while True:
        leaves = [v for v in G.nodes if v not in terminals and G.degree(v) <= 1]
        if not leaves:
            return dropped
        for v in leaves:
            dropped.update(k for _, _, k in G.edges(v, keys=True))
            G.remove_node(v)


def _blocks(G: nx.MultiGraph) -> list[tuple[frozenset[int], set[int]]]:
    """Biconnected blocks as (nodes, link ids); parallel links stay in one block."""
    simple = nx.Graph(G)
    blocks = [frozenset(b) for b in nx.biconnected_components(simple)]
    owner: dict[frozenset[int], set[int]] = {b: set() for b in blocks}
    for u, v, key in G.edges(keys=True):
        block = next(b for b in blocks if u in b and v in b)
        owner[block].add(key)
    return [(b, owner[b]) for b in blocks]


def _pieces(G: nx.MultiGraph, terminals: set[int]) -> tuple[list[tuple[int, int, frozenset[int]]], set[int]]:
    dropped: set[int] = set()
    while True:
        dropped |= _prune_leaves(G, terminals)
        cuts = set(nx.articulation_points(nx.Graph(G)))
        pieces, dead = [], []
        for nodes, links in _blocks(G):
            attach = sorted((nodes & cuts) | (nodes & terminals))
            if len(attach) == 2:
                pieces.append((attach[0], attach[1], frozenset(links)))
            elif len(attach) == 1:
                dead.append(links)
            else:
                raise NotTreeReducible(
                    f"Block {sorted(nodes)} has {len(attach)} supply-demand or cut nodes; components need exactly two."
                )
        if not dead:
            return pieces, dropped
        for links in dead:
            logger.debug(f"Dropping dead-end block with links {sorted(links)}")
            dropped |= links
            G.remove_edges_from([(u, v, k) for u, v, k in list(G.edges(keys=True)) if k in links])
        G.remove_nodes_from([v for v in list(G.nodes) if G.degree(v) == 0 and v not in terminals])


def _series_merge(H: nx.Graph, terminals: set[int]) -> None:
    """Contract transmission nodes joining exactly two components."""
    while True:
        inner = next((v for v in H.nodes if v not in terminals and H.degree(v) == 2), None)
        if inner is None:
            return
        (a, la), (b, lb) = [(u, H.edges[inner, u]["links"]) for u in H.neighbors(inner)]
        H.remove_node(inner)
        H.add_edge(a, b, links=la | lb)


def _default_root(H: nx.Graph) -> int:
    if H.number_of_nodes() == 1:
        return next(iter(H.nodes))
    return min(nx.center(H), key=lambda v: (-H.degree(v), v))


def tree_reduce(net: Network, p0=None, root: int | None = None, active: Iterable[int] | None = None) -> ReducedTree:
    """
    Reduce a network to a tree of two-terminal components.

    Dead ends are dropped, every biconnected block must touch exactly two
    supply-demand or cut nodes, and chains through transmission nodes are
    merged in series.

    Args:
        net (Network): The network.
        p0: Initial injections; defaults to node roles for the terminal set.
        root (int | None): Root node; defaults to a center of the tree,
            preferring high degree and then the smaller id.
        active (Iterable[int] | None): Links to use (default: all).

    Returns:
        ReducedTree: The reduced tree.

    Raises:
        NotTreeReducible: A block has more than two attachments or the
            network is disconnected.
    """
    terminals = _terminals(net, p0)
    if not terminals:
        raise NotTreeReducible("No supply or demand node to reduce around.")
    G = net.graph(active)
    G.remove_nodes_from([v for v in list(G.nodes) if G.degree(v) == 0 and v not in terminals])
    if not nx.is_connected(G):
        raise NotTreeReducible("Network with supply-demand nodes in several components.")
    pieces, dropped = _pieces(G, terminals)

    H = nx.Graph()
    H.add_nodes_from(v for v in G.nodes if v in terminals)
    for a, b, links in pieces:
        H.add_edge(a, b, links=links)
    _series_merge(H, terminals)
    if not nx.is_tree(H):
        raise NotTreeReducible("Components do not form a tree.")

    root = _default_root(H) if root is None else root
    if root not in H:
        raise ValueError(f"Root {root} is not a node of the reduced tree.")
    order = [root]
    uplinks: dict[int, TreeLink] = {}
    children: dict[int, list[int]] = {v: [] for v in H.nodes}
    for parent, child in nx.bfs_edges(H, root):
        links = H.edges[parent, child]["links"]
        uplinks[child] = TreeLink(child, parent, links, net.subnetwork(links))
        children[parent].append(child)
        order.append(child)

    p = net.vector(p0) if p0 is not None else np.zeros(len(net.nodes))
    injections = {v: float(p[net.node_index[v]]) for v in order}
    logger.info(f"Reduced tree: {len(order)} nodes, root {root}, {len(dropped)} dead-end links")
    return ReducedTree(
        root=root,
        order=tuple(order),
        uplinks=uplinks,
        children={v: tuple(c) for v, c in children.items()},
        injections=injections,
        dropped=frozenset(dropped),
    )


# ---------- Component feasible sets ----------
def _unit_flow(link: TreeLink, active: frozenset[int]) -> np.ndarray | None:
    """Flows on ``active`` for a unit transfer child -> parent, or None if they are cut apart."""
    comp = link.component
    G = comp.graph(active)
    if not active or not nx.has_path(G, link.child, link.parent):
        return None
    e = np.zeros(len(comp.nodes))
    e[comp.node_index[link.child]] = 1.0
    e[comp.node_index[link.parent]] = -1.0
    return ptdf(comp, active) @ e


def _min_cut(link: TreeLink) -> float:
    G = nx.DiGraph()
    for l in link.component.links:
        for u, v in ((l.tail, l.head), (l.head, l.tail)):
            cap = G.edges[u, v]["capacity"] if G.has_edge(u, v) else 0.0
            G.add_edge(u, v, capacity=cap + l.capacity)
    value, _ = nx.minimum_cut(G, link.child, link.parent)
    return float(value)


def component_feasible_set(link: TreeLink, N: int, mode: ModeType = "constant") -> IntervalSet:
    """
    Transfers ``z`` over a component that end in a feasible state within ``N`` stages.

    In constant mode ``z`` is held fixed while links fail; in general mode
    it may change every stage and the result is every terminal transfer a
    reachable topology carries. Cells are closed, and the set is symmetric.

    Args:
        link (TreeLink): The component.
        N (int): Horizon, at least 1.
        mode (ModeType): ``"constant"`` or ``"general"``.

    Returns:
        IntervalSet: The symmetric set of feasible transfers.
    """
    if N < 1:
        raise ValueError("Horizon N must be at least 1.")
    bound = _min_cut(link)
    tol = 1e-12 * max(1.0, bound)
    memo: dict[tuple, IntervalSet] = {}

    def reach(active: frozenset[int], X: IntervalSet, remaining: int) -> IntervalSet:
        key = (active, X.intervals, remaining)
        if key in memo:
            return memo[key]
        h = _unit_flow(link, active)
        if h is None:
            out = X & IntervalSet.point(0.0)
            memo[key] = out
            return out
        order = link.component.ordered(active)
        limits = {
            i: link.component.link(i).capacity / abs(hi)
            for i, hi in zip(order, h) if abs(hi) > 1e-12
        }
        safe = min(limits.values(), default=np.inf)
        out = X.clip(0.0, safe)
        if remaining > 1:
            cuts = sorted(set(limits.values()))
            for k, lo in enumerate(cuts):
                hi = cuts[k + 1] if k + 1 < len(cuts) else bound
                cell = X.clip(lo, max(lo, hi)) if mode == "constant" else IntervalSet.interval(0.0, bound)
                if not cell or lo > bound + tol:
                    continue
                failed = frozenset(i for i, t in limits.items() if t <= lo + tol)
                out = out | reach(active - failed, cell, remaining - 1)
        memo[key] = out
        return out

    result = reach(frozenset(link.links), IntervalSet.interval(0.0, bound), N).symmetric()
    logger.debug(f"Feasible transfers over {link!r}, N={N}, {mode}: {result!r}")
    return result


__all__ = [
    "ModeType",
    "TreeLink",
    "ReducedTree",
    "tree_reduce",
    "component_feasible_set",
]
