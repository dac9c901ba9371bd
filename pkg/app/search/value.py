"""Aggregated value iteration as a pruned iterative-deepening depth-first search."""

from dataclasses import dataclass, field

import numpy as np

from geometry import IncidenceGraph
from grid.network import Network
from utils.errors import EmptyPolytope
from utils.logs import set_logger

from .aggregate import (
    AggControl,
    AggNode,
    admissible_region,
    j1,
    partition_controls,
    terminal_control,
)


logger = set_logger(__name__)



@dataclass
class SearchStats:
    depth: int
    expanded: int = 0
    pruned: int = 0
    incumbent: float = float("-inf")

    def csv(self) -> str:
        return f"{self.depth},{self.expanded},{self.pruned},{self.incumbent:.6g}"



@dataclass
class SearchResult:
    """
    Optimal aggregated value and the path attaining it.

    ``path[t]`` is the aggregated control applied at stage t; the last entry
    keeps every active link (its cell satisfies all capacities).
    """
    value: float
    path: list[AggControl]
    control: np.ndarray | None
    root: AggNode
    horizon: int
    stats: list[SearchStats] = field(default_factory=list)

    @property
    def actives(self) -> list[frozenset[int]]:
        """Active link sets E^0 .. E^T along the path."""
        return [self.root.active] + [c.next_active for c in self.path[:-1]]



class AggregatedSearch:
    """
    Depth-first search over aggregated states with a shared incumbent.

    Nodes are bounded below by their one-stage value and above by the
    residual load of their supply-demand set; a subtree whose upper bound does
    not beat the incumbent is skipped.
    """

    def __init__(self, net: Network, root: AggNode, prune: bool = True):
        self.net = net
        self.root = root
        self.prune = prune
        self.incumbent = float("-inf")
        self.best_path: list[AggControl] = []
        self.best_y: np.ndarray | None = None
        self._regions: dict[tuple, IncidenceGraph | None] = {}
        self._controls: dict[tuple, list[AggControl]] = {}
        self._leaf: dict[tuple, tuple[float, np.ndarray | None]] = {}

    # ---- cached expansion ----
    def region(self, node: AggNode) -> IncidenceGraph | None:
        key = node.key()
        if key not in self._regions:
            try:
                self._regions[key] = admissible_region(self.net, node)
            except EmptyPolytope:
                self._regions[key] = None
        return self._regions[key]

    def controls(self, node: AggNode) -> list[AggControl]:
        key = node.key()
        if key not in self._controls:
            region = self.region(node)
            self._controls[key] = [] if region is None else partition_controls(self.net, node, region)
        return self._controls[key]

    def leaf(self, node: AggNode) -> tuple[float, np.ndarray | None]:
        key = node.key()
        if key not in self._leaf:
            region = self.region(node)
            self._leaf[key] = (float("-inf"), None) if region is None else j1(self.net, node, region)
        node.lower_bound = self._leaf[key][0]
        return self._leaf[key]

    # ---- search ----
    def _tol(self, value: float) -> float:
        return 1e-9 * (1.0 + abs(value)) if np.isfinite(value) else 0.0

    def _visit(self, node: AggNode, remaining: int, path: list[AggControl], stats: SearchStats) -> float:
        stats.expanded += 1
        value, y = self.leaf(node)
        if value > self.incumbent + self._tol(self.incumbent):
            self.incumbent = value
            self.best_path = path + [terminal_control(self.net, node, self.region(node))]
            self.best_y = y
        if remaining == 1:
            return value
        if self.prune and node.upper_bound <= self.incumbent + self._tol(self.incumbent):
            stats.pruned += 1
            return value
        children = [(c, c.child(node)) for c in self.controls(node) if c.removes]
        children.sort(key=lambda pair: -pair[1].upper_bound)
        best = value
        for control, child in children:
            if self.prune and child.upper_bound <= self.incumbent + self._tol(self.incumbent):
                stats.pruned += 1
                continue
            best = max(best, self._visit(child, remaining - 1, path + [control], stats))
        return best

    def run(self, horizon: int, verbose: bool = False) -> SearchResult:
        if horizon < 1:
            raise ValueError("Horizon N must be at least 1.")
        stats = []
        if verbose:
            logger.info("depth,expanded,pruned,incumbent")
        for limit in range(1, horizon + 1):
            stat = SearchStats(depth=limit)
            self._visit(self.root, limit, [], stat)
            stat.incumbent = self.incumbent
            stats.append(stat)
            if verbose:
                logger.info(stat.csv())
        control = None if self.best_y is None else self.root.space.embed(self.best_y)
        return SearchResult(
            value=self.incumbent, path=list(self.best_path), control=control,
            root=self.root, horizon=horizon, stats=stats,
        )


def value_iteration(net: Network, root: AggNode, N: int, prune: bool = True, verbose: bool = False) -> SearchResult:
    """
    Optimal residual load J_N(E0, {p0}) over aggregated states.

    Args:
        net (Network): The network.
        root (AggNode): Aggregated initial state, see ``root_node``.
        N (int): Control horizon, N >= 1.
        prune (bool): Skip subtrees that cannot beat the incumbent.
        verbose (bool): Log per-depth statistics as CSV lines.

    Returns:
        SearchResult: Value, optimal aggregated path and terminal control.
    """
    if N < 1:
        raise ValueError("Horizon N must be at least 1.")
    if root.space.dim == 0:
        logger.info("No nonzero injection: residual load is 0")
        zero = np.zeros(len(net.nodes))
        leaf = AggControl(region=root.P, beta={i: 0 for i in root.active}, next_active=root.active)
        return SearchResult(value=0.0, path=[leaf], control=zero, root=root, horizon=N)
    result = AggregatedSearch(net, root, prune=prune).run(N, verbose=verbose)
    logger.debug(f"J_{N} = {result.value:.6g} via {len(result.path)} stages")
    return result


__all__ = [
    "SearchStats",
    "SearchResult",
    "AggregatedSearch",
    "value_iteration",
]
