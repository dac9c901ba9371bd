from typing import ClassVar, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


RoleType = Literal["supply", "demand", "transmission"]



class NodeSpec(BaseModel):
    """
    A bus of the network.
    """
    id: int = Field(..., description="Node identifier")
    role: RoleType = Field("transmission", description="Supply, demand or transmission node")



class LinkSpec(BaseModel):
    """
    A transmission line; parallel lines share the same endpoints.
    """
    id: int = Field(..., description="Link identifier")
    tail: int = Field(..., description="Tail node (direction convention only)")
    head: int = Field(..., description="Head node")
    weight: float = Field(..., gt=0, description="Line susceptance in per-unit")
    capacity: float = Field(..., gt=0, description="Thermal limit in per-unit")

    @model_validator(mode="after")
    def _no_self_loop(self):
        if self.tail == self.head:
            raise ValueError(f"link {self.id} is a self-loop on node {self.tail}")
        return self



class EtaBasis(BaseModel):
    """
    The two injection patterns mixed by the eta projection family.
    """
    first: Dict[int, float] = Field(..., description="Pattern weighted by eta")
    second: Dict[int, float] = Field(..., description="Pattern weighted by 1 - eta")



class InstanceFile(BaseModel):
    """
    On-disk description of a network, its injections and an optional contingency.
    """
    name: str = Field(..., description="Instance name")
    description: str = Field("", description="Free text")
    nodes: List[NodeSpec] = Field(..., min_length=1, description="Buses")
    links: List[LinkSpec] = Field(default_factory=list, description="Lines")
    injections: Dict[int, float] = Field(default_factory=dict, description="Supply-demand vector, zero when omitted")
    initial_outages: List[int] = Field(default_factory=list, description="Links failed by the contingency")
    eta_basis: Optional[EtaBasis] = Field(None, description="Basis of the eta projection family")
    reference: Dict[str, object] = Field(default_factory=dict, description="Published values for regression checks")

    tolerance: ClassVar[float] = 1e-9

    @field_validator("nodes")
    @classmethod
    def _unique_nodes(cls, nodes: List[NodeSpec]) -> List[NodeSpec]:
        ids = [node.id for node in nodes]
        if len(ids) != len(set(ids)):
            raise ValueError("node ids must be unique")
        return nodes

    @field_validator("links")
    @classmethod
    def _unique_links(cls, links: List[LinkSpec]) -> List[LinkSpec]:
        ids = [link.id for link in links]
        if len(ids) != len(set(ids)):
            raise ValueError("link ids must be unique")
        return links

    @model_validator(mode="after")
    def _consistent(self):
        roles = {node.id: node.role for node in self.nodes}
        for link in self.links:
            for end in (link.tail, link.head):
                if end not in roles:
                    raise ValueError(f"link {link.id} references unknown node {end}")
        link_ids = {link.id for link in self.links}
        for outage in self.initial_outages:
            if outage not in link_ids:
                raise ValueError(f"outage references unknown link {outage}")
        for node, value in self.injections.items():
            if node not in roles:
                raise ValueError(f"injection references unknown node {node}")
            role = roles[node]
            if role == "transmission" and abs(value) > self.tolerance:
                raise ValueError(f"transmission node {node} carries injection {value}")
            if role == "supply" and value < -self.tolerance:
                raise ValueError(f"supply node {node} has negative injection {value}")
            if role == "demand" and value > self.tolerance:
                raise ValueError(f"demand node {node} has positive injection {value}")
        return self


__all__ = [
    "RoleType",
    "NodeSpec",
    "LinkSpec",
    "EtaBasis",
    "InstanceFile",
]
