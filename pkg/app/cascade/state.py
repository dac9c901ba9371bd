from dataclasses import dataclass
from typing import Iterable

import numpy as np

from grid.network import Network



@dataclass(frozen=True, eq=False)
class NetworkState:
    """
    Dynamics state: the active link set and the node-ordered supply-demand vector.
    """
    active: frozenset[int]
    p: np.ndarray

    @classmethod
    def of(cls, active: Iterable[int], p) -> "NetworkState":
        return cls(frozenset(active), np.asarray(p, dtype=float).copy())

    def same_as(self, other: "NetworkState", tol: float = 0.0) -> bool:
        return self.active == other.active and bool(np.all(np.abs(self.p - other.p) <= tol))



@dataclass(frozen=True, eq=False)
class ControlBox:
    """
    Componentwise bounds of the shedding box: 0 <= sign(p_v) u_v <= |p_v|.
    """
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def of(cls, p: np.ndarray) -> "ControlBox":
        p = np.asarray(p, dtype=float)
        return cls(np.minimum(0.0, p), np.maximum(0.0, p))

    def contains(self, u: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(u >= self.lower - tol) and np.all(u <= self.upper + tol))



@dataclass(frozen=True, eq=False)
class AdmissibleSet:
    """
    U(E, p): the shedding box intersected with one balance equation per component.

    ``balance`` lists, per component holding a nonzero box coordinate, the node
    indices whose controls must sum to zero.
    """
    box: ControlBox
    balance: tuple[tuple[int, ...], ...]

    @property
    def free(self) -> tuple[int, ...]:
        """Indices whose box is not collapsed to zero and that share a component with another one."""
        return tuple(i for group in self.balance if len(group) > 1 for i in group)

    @property
    def is_trivial(self) -> bool:
        """True when the set is {0}."""
        return not self.free

    def contains(self, u: np.ndarray, tol: float = 0.0) -> bool:
        if not self.box.contains(u, tol):
            return False
        return all(abs(float(np.sum(u[list(group)]))) <= tol for group in self.balance)


def node_indices(net: Network, nodes: Iterable[int]) -> list[int]:
    return sorted(net.node_index[v] for v in nodes)


__all__ = [
    "NetworkState",
    "ControlBox",
    "AdmissibleSet",
    "node_indices",
]
