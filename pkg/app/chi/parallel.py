"""Closed-form optimal shedding on a two-node network of parallel links."""

from dataclasses import dataclass

import numpy as np

from grid.network import Network
from utils.logs import set_logger


logger = set_logger(__name__)



@dataclass(frozen=True)
class ParallelProfile:
    """
    Links between one supply and one demand node sorted by ``w / c``.

    Attributes:
        order: Link ids, ascending in ``w / c``.
        support: ``R_i``, the largest supply the first ``i`` links carry.
        records: 1-based positions ``o_1 < o_2 < ...`` where ``R`` attains its
            maximum over the remaining tail.
        supply: Supply node id.
        demand: Demand node id.
    """
    order: tuple[int, ...]
    weights: tuple[float, ...]
    capacities: tuple[float, ...]
    support: tuple[float, ...]
    records: tuple[int, ...]
    supply: int
    demand: int

    @property
    def size(self) -> int:
        return len(self.order)

    def capacity_of_prefix(self, n: int) -> float:
        """Largest supply the first ``n`` links carry; zero for no links."""
        return self.support[n - 1] if n > 0 else 0.0

    def survivors(self, n: int, p: float) -> int:
        """Links kept from the first ``n`` under supply ``p``; survivors always form a prefix."""
        if n == 0:
            return 0
        total = sum(self.weights[:n])
        kept = [i + 1 for i in range(n) if p * self.weights[i] / total <= self.capacities[i] * (1.0 + 1e-12)]
        return max(kept, default=0)

    def uncontrolled(self, p: float, horizon: int | None = None) -> list[int]:
        """Prefix sizes ``|E_un^t|`` of the uncontrolled cascade, held at its fixpoint."""
        horizon = self.size + 2 if horizon is None else horizon
        sizes = [self.size]
        for _ in range(horizon):
            sizes.append(self.survivors(sizes[-1], p))
        return sizes

    def stages(self, p: float) -> list[int]:
        """Thresholds ``N_1 >= N_2 >= ... >= N_m = 1`` on the horizon for supply ``p``."""
        sizes = self.uncontrolled(p)
        R = [self.support[o - 1] for o in self.records]
        j = sum(1 for r in R if p <= r * (1.0 + 1e-12))
        feasible = [t for t, n in enumerate(sizes) if n > 0 and p <= self.capacity_of_prefix(n) * (1.0 + 1e-12)]
        first_feasible = feasible[0] if feasible else len(sizes)
        out = []
        for k, o in enumerate(self.records, start=1):
            if k <= j:
                out.append(1 + first_feasible)
            else:
                out.append(1 + next((t for t, n in enumerate(sizes) if n <= o), len(sizes)))
        return out


def parallel_profile(net: Network, p0=None) -> ParallelProfile:
    """
    Build the profile of a parallel network.

    Raises:
        ValueError: The network is not two nodes joined by parallel links with
            one supply and one demand node.
    """
    if len(net.nodes) != 2 or not net.links:
        raise ValueError("A parallel network has exactly two nodes and at least one link.")
    signs = {node: net.roles.get(node, "transmission") for node in net.nodes}
    supply = [n for n, r in signs.items() if r == "supply"]
    demand = [n for n, r in signs.items() if r == "demand"]
    if p0 is not None:
        p = net.vector(p0)
        supply = [n for n in net.nodes if p[net.node_index[n]] > 0] or supply
        demand = [n for n in net.nodes if p[net.node_index[n]] < 0] or demand
    if len(supply) != 1 or len(demand) != 1:
        raise ValueError("A parallel network needs one supply and one demand node.")

    links = sorted(net.links, key=lambda l: (l.weight / l.capacity, l.id))
    w = np.array([l.weight for l in links])
    c = np.array([l.capacity for l in links])
    R = c / w * np.cumsum(w)

    records = []
    start = 0
    while start < len(R):
        tail = R[start:]
        best = start + int(np.flatnonzero(tail >= tail.max() - 1e-12 * max(1.0, tail.max()))[-1])
        records.append(best + 1)
        start = best + 1
    logger.debug(f"Parallel profile R={np.round(R, 6).tolist()} records={records}")
    return ParallelProfile(
        order=tuple(l.id for l in links),
        weights=tuple(float(x) for x in w),
        capacities=tuple(float(x) for x in c),
        support=tuple(float(x) for x in R),
        records=tuple(records),
        supply=supply[0],
        demand=demand[0],
    )


def parallel_optimal(profile: ParallelProfile, p0: float, N: int) -> list[float]:
    """
    Optimal supply levels ``u^0, ..., u^{N-1}`` for supply ``p0`` and horizon ``N``.

    The cascade runs uncontrolled while that keeps the most load, then the
    supply is shed once to ``min(R_{o_j}, p0)`` for the record ``o_j`` whose
    threshold ``N_j`` fits in the horizon.
    """
    if p0 <= 0:
        raise ValueError("Supply must be positive.")
    if N < 1:
        raise ValueError("Horizon must be at least 1.")
    thresholds = profile.stages(p0)
    j = next(k for k, Nk in enumerate(thresholds, start=1) if Nk <= N)
    level = min(profile.support[profile.records[j - 1] - 1], p0)
    shed_at = max(thresholds[j - 1] - 2, 0)
    return [p0 if t < shed_at else level for t in range(N)]


def parallel_controls(net: Network, profile: ParallelProfile, p0: float, N: int) -> list[np.ndarray]:
    """``parallel_optimal`` as node-space controls for ``cascade.simulate``."""
    out = []
    for level in parallel_optimal(profile, p0, N):
        out.append(net.vector({profile.supply: level, profile.demand: -level}))
    return out


__all__ = [
    "ParallelProfile",
    "parallel_profile",
    "parallel_optimal",
    "parallel_controls",
]
