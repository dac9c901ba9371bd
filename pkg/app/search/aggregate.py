"""
State aggregation.

Aggregated states (E, P) hold a polytope P of supply-demand vectors in the
reduced coordinates ``y = sigma * u`` over the nodes with nonzero initial
injection, so that every admissible set lives in the nonnegative orthant.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from cascade.state import NetworkState
from geometry import (
    Hyperplane,
    IncidenceGraph,
    clip,
    cube_of_polytope,
    geo_tol,
    insert_hyperplane,
    lp_over_vertices,
    polytope_of_point,
    section,
)
from grid.flow import connected_components, ptdf
from grid.network import Network
from utils.errors import EmptyPolytope
from utils.logs import set_logger


logger = set_logger(__name__)



@dataclass(frozen=True, eq=False)
class ControlSpace:
    """
    Reduced control coordinates.

    Attributes:
        coords: Node indices with nonzero initial injection.
        sigma: Sign of the initial injection on each coordinate.
        weights: Objective s^T u expressed in y.
        equalities: Node-space directions the control must stay orthogonal to.
        constant: Restrict to constant controls.
        size: Number of network nodes.
    """
    coords: tuple[int, ...]
    sigma: np.ndarray
    weights: np.ndarray
    equalities: np.ndarray
    constant: bool = False
    size: int = 0

    @classmethod
    def of(cls, net: Network, p0: np.ndarray, equalities=None, constant: bool = False) -> "ControlSpace":
        p0 = np.asarray(p0, dtype=float)
        coords = tuple(int(i) for i in np.flatnonzero(p0 != 0.0))
        sigma = np.sign(p0[list(coords)])
        weights = net.sign_vector[list(coords)] * sigma
        eq = np.zeros((0, len(net.nodes))) if equalities is None else np.atleast_2d(np.asarray(equalities, dtype=float))
        return cls(coords, sigma, weights, eq, constant, len(net.nodes))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def embed(self, y) -> np.ndarray:
        """Node-ordered control from reduced coordinates."""
        u = np.zeros(self.size)
        u[list(self.coords)] = self.sigma * np.asarray(y, dtype=float)
        return u

    def restrict(self, u) -> np.ndarray:
        return self.sigma * np.asarray(u, dtype=float)[list(self.coords)]

    def balance_planes(self, net: Network, active: Iterable[int]) -> list[Hyperplane]:
        """One balance hyperplane per component; a lone coordinate is pinned to zero."""
        position = {node: j for j, node in enumerate(self.coords)}
        planes = []
        for comp in connected_components(net, active):
            idx = sorted(position[net.node_index[v]] for v in comp if net.node_index[v] in position)
            if not idx:
                continue
            normal = np.zeros(self.dim)
            normal[idx] = self.sigma[idx] if len(idx) > 1 else 1.0
            planes.append(Hyperplane.of(normal, 0.0, label=f"balance{idx}"))
        return planes

    def equality_planes(self) -> list[Hyperplane]:
        planes = []
        for k, phi in enumerate(self.equalities):
            normal = phi[list(self.coords)] * self.sigma
            if np.linalg.norm(normal) > 1e-12:
                planes.append(Hyperplane.of(normal, 0.0, label=f"phi{k}"))
        return planes

    def flow_rows(self, net: Network, active: Iterable[int]) -> tuple[tuple[int, ...], np.ndarray]:
        """Active links in network order and the flow map y -> f."""
        order = net.ordered(active)
        if not order:
            return order, np.zeros((0, self.dim))
        return order, ptdf(net, active)[:, list(self.coords)] * self.sigma



@dataclass(eq=False)
class AggNode:
    """
    Aggregated state (E, cl P) in the search tree.
    """
    active: frozenset[int]
    P: IncidenceGraph
    space: ControlSpace
    beta: Mapping[int, int] = field(default_factory=dict)
    depth: int = 0
    lower_bound: float | None = None

    @cached_property
    def upper_bound(self) -> float:
        """max s^T p over cl P; residual load never increases along a trajectory."""
        return lp_over_vertices(self.P, self.space.weights)[0]

    @property
    def fixed(self) -> bool:
        """True when controls are pinned to the current supply-demand (constant controls past the first stage)."""
        return self.space.constant and self.depth > 0

    def key(self) -> tuple:
        return self.active, self.P.fingerprint(), self.fixed



@dataclass(frozen=True, eq=False)
class AggControl:
    """
    One cell of the consistent partition: the closure of U(E, P, beta).
    """
    region: IncidenceGraph
    beta: Mapping[int, int]
    next_active: frozenset[int]

    @property
    def removes(self) -> frozenset[int]:
        return frozenset(i for i, b in self.beta.items() if b != 0)

    def child(self, parent: AggNode) -> AggNode:
        return AggNode(
            active=self.next_active, P=self.region, space=parent.space,
            beta=self.beta, depth=parent.depth + 1,
        )


def root_node(net: Network, state: NetworkState, equalities=None, constant: bool = False) -> AggNode:
    """Aggregated root (E0, {p0})."""
    space = ControlSpace.of(net, state.p, equalities, constant)
    return AggNode(active=state.active, P=polytope_of_point(space.restrict(state.p)), space=space)


def admissible_region(net: Network, node: AggNode) -> IncidenceGraph:
    """
    cl U(E, P): the shedding set of P cut by the balance hyperplanes of E and the extra equalities.

    Raises:
        EmptyPolytope: With constant controls, if P holds no control balanced on E.
    """
    space = node.space
    g = node.P if node.fixed else cube_of_polytope(node.P)
    for h in space.balance_planes(net, node.active) + space.equality_planes():
        g = section(g, h)
    logger.debug(f"Admissible region on {len(node.active)} links: counts {g.layer_counts()}")
    return g


def _capacity_tol(g: IncidenceGraph, row: np.ndarray) -> float:
    return geo_tol(g.points) * max(1.0, float(np.linalg.norm(row)))


def _beta(flows: np.ndarray, order: tuple[int, ...], net: Network, tol: float) -> dict[int, int]:
    beta = {}
    for i, f in zip(order, flows):
        c = net.link(i).capacity
        beta[i] = 1 if f > c + tol else (-1 if f < -c - tol else 0)
    return beta


def capacity_arrangement(net: Network, node: AggNode, region: IncidenceGraph) -> IncidenceGraph:
    """``region`` refined by every capacity hyperplane ``f_i = +-c_i`` crossing it."""
    order, M = node.space.flow_rows(net, node.active)
    g = region
    for i, row in zip(order, M):
        if np.linalg.norm(row) <= 1e-12:
            continue
        values = region.points @ row
        tol = _capacity_tol(region, row)
        c = net.link(i).capacity
        for sign, tag in ((1.0, "+"), (-1.0, "-")):
            level = sign * c
            if values.min() < level - tol and values.max() > level + tol:
                g = insert_hyperplane(g, Hyperplane.of(row, level, label=f"{tag}f{i}"))
    return g


def partition_controls(net: Network, node: AggNode, region: IncidenceGraph | None = None) -> list[AggControl]:
    """
    Consistent partition of U(E, P) by the flow-sign vector beta.

    Only capacity hyperplanes crossing the region are inserted; each cell of the
    resulting arrangement is one aggregated control.
    """
    try:
        region = admissible_region(net, node) if region is None else region
    except EmptyPolytope:
        return []
    order, M = node.space.flow_rows(net, node.active)
    g = capacity_arrangement(net, node, region)
    controls = []
    for cell in g.cells:
        flows = M @ cell.centroid if len(order) else np.zeros(0)
        beta = _beta(flows, order, net, geo_tol(g.points))
        controls.append(AggControl(
            region=g.subgraph(cell) if len(g.cells) > 1 else g,
            beta=beta,
            next_active=frozenset(i for i, b in beta.items() if b == 0),
        ))
    logger.debug(f"Partition: {len(controls)} aggregated controls from {len(g.hyperplanes)} hyperplanes")
    return controls


def feasible_region(net: Network, node: AggNode, region: IncidenceGraph | None = None) -> IncidenceGraph:
    """
    cl U(E, P) intersected with every capacity constraint of E.

    Raises:
        EmptyPolytope: If the intersection is empty (constant controls only).
    """
    g = admissible_region(net, node) if region is None else region
    order, M = node.space.flow_rows(net, node.active)
    for i, row in zip(order, M):
        if np.linalg.norm(row) <= 1e-12:
            continue
        c = net.link(i).capacity
        g = clip(g, row, c)
        g = clip(g, -row, c)
    return g


def j1(net: Network, node: AggNode, region: IncidenceGraph | None = None) -> tuple[float, np.ndarray | None]:
    """
    One-stage value: LP power redispatch over cl U(E, P), solved on the vertices.

    Returns:
        tuple[float, np.ndarray | None]: The value and a maximizing vertex in
        reduced coordinates, or ``(-inf, None)`` when no feasible control exists.
    """
    try:
        g = feasible_region(net, node, region)
    except EmptyPolytope:
        return float("-inf"), None
    value, y = lp_over_vertices(g, node.space.weights)
    node.lower_bound = value
    return value, y


def terminal_control(net: Network, node: AggNode, region: IncidenceGraph | None = None) -> AggControl:
    """The beta = 0 control of ``node`` that keeps every active link."""
    g = feasible_region(net, node, region)
    return AggControl(region=g, beta={i: 0 for i in node.active}, next_active=node.active)


__all__ = [
    "ControlSpace",
    "AggNode",
    "AggControl",
    "root_node",
    "admissible_region",
    "capacity_arrangement",
    "partition_controls",
    "feasible_region",
    "j1",
    "terminal_control",
]
