from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from schemas.instance import InstanceFile, RoleType
from utils.logs import set_logger


logger = set_logger(__name__)

ROLE_SIGN: dict[str, int] = {"supply": 1, "demand": -1, "transmission": 0}



@dataclass(frozen=True)
class Link:
    """
    A line between two buses; ``tail``/``head`` only fix the sign convention of its flow.
    """
    id: int
    tail: int
    head: int
    weight: float
    capacity: float



@dataclass(frozen=True, eq=False)
class Network:
    """
    Immutable multigraph with link weights, capacities and node roles.

    Vectors over nodes are numpy arrays ordered like ``nodes``; link sets are
    frozensets of link ids.
    """
    nodes: tuple[int, ...]
    links: tuple[Link, ...]
    roles: Mapping[int, RoleType] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("Node ids must be unique.")
        known = set(self.nodes)
        seen: set[int] = set()
        for link in self.links:
            if link.id in seen:
                raise ValueError(f"Duplicate link id {link.id}.")
            seen.add(link.id)
            if link.weight <= 0 or link.capacity <= 0:
                raise ValueError(f"Link {link.id} needs positive weight and capacity.")
            if link.tail == link.head:
                raise ValueError(f"Link {link.id} is a self-loop.")
            if link.tail not in known or link.head not in known:
                raise ValueError(f"Link {link.id} references an unknown node.")
        for node in self.roles:
            if node not in known:
                raise ValueError(f"Role given for unknown node {node}.")

    @classmethod
    def from_instance(cls, instance: InstanceFile) -> "Network":
        return cls(
            nodes=tuple(node.id for node in instance.nodes),
            links=tuple(Link(l.id, l.tail, l.head, l.weight, l.capacity) for l in instance.links),
            roles={node.id: node.role for node in instance.nodes},
        )

    # ---- indexing ----
    @cached_property
    def node_index(self) -> dict[int, int]:
        return {node: i for i, node in enumerate(self.nodes)}

    @cached_property
    def link_index(self) -> dict[int, int]:
        return {link.id: i for i, link in enumerate(self.links)}

    @cached_property
    def all_links(self) -> frozenset[int]:
        return frozenset(link.id for link in self.links)

    def link(self, link_id: int) -> Link:
        return self.links[self.link_index[link_id]]

    def ordered(self, active: Iterable[int]) -> tuple[int, ...]:
        """Active link ids in network order."""
        active = set(active)
        return tuple(link.id for link in self.links if link.id in active)

    # ---- matrices ----
    @cached_property
    def incidence(self) -> np.ndarray:
        """Node-link incidence A with +1 at the tail and -1 at the head."""
        A = np.zeros((len(self.nodes), len(self.links)))
        for j, link in enumerate(self.links):
            A[self.node_index[link.tail], j] = 1.0
            A[self.node_index[link.head], j] = -1.0
        return A

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([link.weight for link in self.links], dtype=float)

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([link.capacity for link in self.links], dtype=float)

    @cached_property
    def sign_vector(self) -> np.ndarray:
        """s: +1 on supply nodes, -1 on demand nodes, 0 on transmission nodes."""
        return np.array([ROLE_SIGN[self.roles.get(node, "transmission")] for node in self.nodes], dtype=float)

    # ---- conversions ----
    def vector(self, values: Mapping[int, float] | Sequence[float] | np.ndarray) -> np.ndarray:
        """Node-ordered vector from a mapping (missing nodes are zero) or a sequence."""
        if isinstance(values, Mapping):
            vec = np.zeros(len(self.nodes))
            for node, value in values.items():
                vec[self.node_index[node]] = float(value)
            return vec
        vec = np.asarray(values, dtype=float)
        if vec.shape != (len(self.nodes),):
            raise ValueError(f"Expected {len(self.nodes)} entries, got shape {vec.shape}.")
        return vec

    def mapping(self, vector: np.ndarray) -> dict[int, float]:
        return {node: float(vector[i]) for i, node in enumerate(self.nodes)}

    def residual(self, p: np.ndarray) -> float:
        """Objective s^T p."""
        return float(self.sign_vector @ p)

    # ---- graph views ----
    def graph(self, active: Iterable[int] | None = None) -> nx.MultiGraph:
        """networkx multigraph over all nodes restricted to ``active`` links."""
        active = self.all_links if active is None else set(active)
        G = nx.MultiGraph()
        G.add_nodes_from(self.nodes)
        for link in self.links:
            if link.id in active:
                G.add_edge(link.tail, link.head, key=link.id, weight=link.weight, capacity=link.capacity)
        return G

    def without(self, link_ids: Iterable[int]) -> "Network":
        """Same nodes and roles with the given links removed."""
        drop = set(link_ids)
        return Network(self.nodes, tuple(l for l in self.links if l.id not in drop), dict(self.roles))

    def subnetwork(self, link_ids: Iterable[int], roles: Mapping[int, RoleType] | None = None) -> "Network":
        """Network made of the given links and the nodes they touch."""
        keep = set(link_ids)
        links = tuple(link for link in self.links if link.id in keep)
        touched = {link.tail for link in links} | {link.head for link in links}
        nodes = tuple(node for node in self.nodes if node in touched)
        roles = roles if roles is not None else {node: self.roles.get(node, "transmission") for node in nodes}
        return Network(nodes=nodes, links=links, roles=dict(roles))


__all__ = [
    "ROLE_SIGN",
    "Link",
    "Network",
]
