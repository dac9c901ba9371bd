"""
Projection-based approximation.

Controls are restricted to ``u = Phi_B^T a``: every basis direction outside
the active index set B is pinned by ``Phi_i^T u = 0`` and the aggregated
search runs on the smaller admissible set. With a single free direction the
same search reduces to intervals of one scalar.
"""

from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np
from scipy.linalg import null_space, orth

from cascade.state import NetworkState
from grid.flow import connected_components, ptdf
from grid.network import Network
from schemas.instance import EtaBasis
from search import SearchResult, root_node, value_iteration
from utils.logs import set_logger


logger = set_logger(__name__)

ORTHO_TOL = 1e-10



@dataclass(frozen=True, eq=False)
class ProjectionSpec:
    """
    Orthonormal frame over the non-transmission nodes and the indices kept free.

    Attributes:
        basis: Rows Phi_i in node order; zero on transmission nodes.
        active: Index set B of free directions.
    """
    basis: np.ndarray
    active: tuple[int, ...]

    def __post_init__(self):
        if not self.active:
            raise ValueError("A projection needs at least one free direction.")
        gram = self.basis @ self.basis.T
        if not np.allclose(gram, np.eye(len(self.basis)), atol=ORTHO_TOL):
            raise ValueError("Projection basis is not orthonormal.")
        if any(i < 0 or i >= len(self.basis) for i in self.active):
            raise ValueError(f"Free indices {self.active} outside the basis.")

    @classmethod
    def from_directions(cls, net: Network, directions: Sequence, support: Iterable[int] | None = None) -> "ProjectionSpec":
        """
        Frame whose first rows span ``directions`` and whose remaining rows complete it over ``support``.

        Args:
            net (Network): The network.
            directions (Sequence): Node mappings or node-ordered vectors.
            support (Iterable[int] | None): Node ids the frame lives on
                (default: supply and demand nodes).
        """
        support = [v for v, s in zip(net.nodes, net.sign_vector) if s != 0] if support is None else list(support)
        cols = [net.node_index[v] for v in support]
        D = np.array([net.vector(d) for d in directions], dtype=float)
        if np.abs(np.delete(D, cols, axis=1)).max(initial=0.0) > ORTHO_TOL:
            raise ValueError("Directions must vanish outside the support.")
        free = orth(D[:, cols].T).T
        rest = null_space(free).T if len(free) else np.eye(len(cols))
        basis = np.zeros((len(free) + len(rest), len(net.nodes)))
        basis[:, cols] = np.vstack([free, rest]) if len(free) else rest
        logger.debug(f"Projection frame: {len(free)} free of {len(basis)} directions")
        return cls(basis, tuple(range(len(free))))

    @property
    def constraints(self) -> np.ndarray:
        """Rows Phi_i, i not in B; controls satisfy Phi_i^T u = 0."""
        pinned = [i for i in range(len(self.basis)) if i not in set(self.active)]
        return self.basis[pinned]

    def residual(self, u: np.ndarray) -> float:
        """Largest violation of the pinned directions."""
        C = self.constraints
        return float(np.abs(C @ u).max()) if len(C) else 0.0


def _pattern(net: Network, values: Mapping[int, float]) -> np.ndarray:
    return net.vector({int(k): v for k, v in values.items()})


def eta_family(net: Network, eta: float, basis: EtaBasis | tuple[Mapping, Mapping]) -> ProjectionSpec:
    """
    Single free direction ``eta * first + (1 - eta) * second``.

    Raises:
        ValueError: ``eta`` outside [0, 1] or a zero direction.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1].")
    first, second = (basis.first, basis.second) if isinstance(basis, EtaBasis) else basis
    direction = eta * _pattern(net, first) + (1.0 - eta) * _pattern(net, second)
    if np.linalg.norm(direction) <= ORTHO_TOL:
        raise ValueError(f"eta={eta} gives a zero direction.")
    return ProjectionSpec.from_directions(net, [direction])


# ---------- Single free direction ----------
SearchMethod = Literal["auto", "interval", "aggregate"]



@dataclass
class IntervalSearch:
    """
    Search along one free direction ``phi``.

    Every control is ``a * phi`` for a scalar ``a``, so admissible sets,
    capacity cells and reachable sets are all intervals of ``a``. Cells are
    closed like the aggregated cells they stand for.
    """
    net: Network
    phi: np.ndarray
    tol: float = 1e-9
    _limits: dict = field(default_factory=dict, repr=False)
    _memo: dict = field(default_factory=dict, repr=False)

    @property
    def gain(self) -> float:
        """Residual load per unit of ``a``."""
        return float(self.net.sign_vector @ self.phi)

    def box(self, p: np.ndarray) -> tuple[float, float]:
        """Values of ``a`` with ``a * phi`` in the shedding box of ``p``."""
        lo, hi = -np.inf, np.inf
        for d, v in zip(self.phi, p):
            if abs(d) <= self.tol:
                continue
            a, b = sorted((min(0.0, v) / d, max(0.0, v) / d))
            lo, hi = max(lo, a), min(hi, b)
        return lo, hi

    def balanced(self, active: frozenset[int]) -> bool:
        """True when ``phi`` sums to zero on every component of ``active``."""
        for comp in connected_components(self.net, active):
            idx = [self.net.node_index[v] for v in comp]
            if abs(float(self.phi[idx].sum())) > self.tol:
                return False
        return True

    def thresholds(self, active: frozenset[int]) -> dict[int, float]:
        """``|a|`` at which each loaded link of ``active`` reaches its capacity."""
        if active not in self._limits:
            order = self.net.ordered(active)
            h = ptdf(self.net, active) @ self.phi if order else np.zeros(0)
            self._limits[active] = {
                i: self.net.link(i).capacity / abs(hi)
                for i, hi in zip(order, h) if abs(hi) > 1e-12
            }
        return self._limits[active]

    def admissible(self, active: frozenset[int], lo: float, hi: float) -> tuple[float, float]:
        """Controls below some point of ``[lo, hi]``, balanced on ``active``."""
        if not self.balanced(active):
            return 0.0, 0.0
        return min(0.0, lo), max(0.0, hi)

    def leaf(self, active: frozenset[int], lo: float, hi: float) -> tuple[float, float | None]:
        t = min(self.thresholds(active).values(), default=np.inf)
        lo, hi = max(lo, -t), min(hi, t)
        if lo > hi + self.tol:
            return float("-inf"), None
        a = hi if self.gain >= 0.0 else lo
        return self.gain * a, a

    def cells(self, active: frozenset[int], lo: float, hi: float) -> list[tuple[float, float, frozenset[int]]]:
        """Closed cells of ``[lo, hi]`` with the links each one overloads."""
        limits = self.thresholds(active)
        cuts = {x for t in limits.values() for x in (-t, t) if lo + self.tol < x < hi - self.tol}
        points = sorted(cuts | {lo, hi})
        out = []
        for x, y in zip(points, points[1:]):
            if y - x <= self.tol:
                continue
            m = 0.5 * (x + y)
            out.append((x, y, frozenset(i for i, t in limits.items() if abs(m) > t)))
        return out

    def visit(self, active: frozenset[int], lo: float, hi: float, remaining: int) -> tuple[float, float | None]:
        key = (active, round(lo, 12), round(hi, 12), remaining)
        if key in self._memo:
            return self._memo[key]
        best = self.leaf(active, lo, hi)
        if remaining > 1:
            for x, y, failed in self.cells(active, lo, hi):
                if not failed:
                    continue
                child = active - failed
                result = self.visit(child, *self.admissible(child, x, y), remaining - 1)
                if result[0] > best[0]:
                    best = result
        self._memo[key] = best
        return best

    def run(self, state: NetworkState, N: int) -> tuple[float, np.ndarray | None]:
        if N < 1:
            raise ValueError("Horizon N must be at least 1.")
        lo, hi = self.box(state.p) if self.balanced(state.active) else (0.0, 0.0)
        value, a = self.visit(state.active, lo, hi, N)
        return value, None if a is None else a * self.phi


def interval_search(net: Network, state: NetworkState, N: int, spec: ProjectionSpec) -> tuple[float, np.ndarray | None]:
    """
    Projected value when the frame keeps a single free direction.

    Returns:
        tuple[float, np.ndarray | None]: ``J`` and the terminal control.

    Raises:
        ValueError: If ``spec`` has more than one free direction.
    """
    if len(spec.active) != 1:
        raise ValueError(f"Interval search needs one free direction, got {len(spec.active)}.")
    phi = spec.basis[spec.active[0]]
    tol = 1e-9 * (1.0 + float(np.abs(state.p).max(initial=0.0)))
    value, u = IntervalSearch(net, phi, tol).run(state, N)
    logger.debug(f"Interval J_{N} = {value:.6g}")
    return value, u


# ---------- Aggregated search ----------
def projected_result(net: Network, state: NetworkState, N: int, spec: ProjectionSpec, prune: bool = True) -> SearchResult:
    """Aggregated search with the pinned directions as extra equalities; keeps the path for retrieval."""
    root = root_node(net, state, equalities=spec.constraints)
    return value_iteration(net, root, N, prune=prune)


def projected_search(
    net: Network,
    state: NetworkState,
    N: int,
    spec: ProjectionSpec,
    prune: bool = True,
    method: SearchMethod = "auto",
) -> tuple[float, np.ndarray | None]:
    """
    Search over the admissible controls in the span of the free directions.

    Args:
        net (Network): The network.
        state (NetworkState): Initial state.
        N (int): Horizon.
        spec (ProjectionSpec): Frame and free directions.
        prune (bool): Prune the aggregated search.
        method (SearchMethod): ``"interval"`` for one free direction,
            ``"aggregate"`` for the general search, ``"auto"`` to pick
            the interval search whenever it applies.

    Returns:
        tuple[float, np.ndarray | None]: ``J`` (a lower bound on the exact
        value) and the terminal control.
    """
    if method == "interval" or (method == "auto" and len(spec.active) == 1):
        return interval_search(net, state, N, spec)
    result = projected_result(net, state, N, spec, prune=prune)
    logger.debug(f"Projected J_{N} = {result.value:.6g} with {len(spec.active)} free directions")
    return result.value, result.control


__all__ = [
    "ProjectionSpec",
    "eta_family",
    "SearchMethod",
    "IntervalSearch",
    "interval_search",
    "projected_result",
    "projected_search",
]
