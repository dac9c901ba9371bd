import os, tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
os.environ.setdefault("INSTANCE_PATH", os.path.join(ROOT, "instances"))
os.environ.setdefault("LOG_DIR", tempfile.mkdtemp(prefix="loadshed-logs-"))
os.environ.setdefault("OUTPUT_PATH", tempfile.mkdtemp(prefix="loadshed-out-"))
os.environ.setdefault("LOG_LEVEL", "WARNING")

import numpy as np
import pytest

from cascade import NetworkState
from grid import Link, Network
from models import InstanceManager


def two_node(weights, capacities, supply: int = 1, demand: int = 2) -> Network:
    """Parallel links between a supply and a demand node."""
    links = tuple(Link(i + 1, supply, demand, w, c) for i, (w, c) in enumerate(zip(weights, capacities)))
    return Network(nodes=(supply, demand), links=links, roles={supply: "supply", demand: "demand"})


@pytest.fixture(scope="session")
def instance():
    cache: dict[str, InstanceManager] = {}

    def load(name: str) -> InstanceManager:
        if name not in cache:
            cache[name] = InstanceManager(name)
        return cache[name]

    return load


@pytest.fixture
def example1(instance):
    return instance("example1")


@pytest.fixture(params=["example2-s1", "example2-s2"])
def example2(request, instance):
    return instance(request.param)


@pytest.fixture
def fig4(instance):
    return instance("fig4")


@pytest.fixture
def parallel():
    net = two_node(weights=[1.0, 1.0], capacities=[1.0, 3.0])
    return net, NetworkState.of(net.all_links, net.vector({1: 4.0, 2: -4.0}))


@pytest.fixture
def rng():
    return np.random.default_rng(7)
