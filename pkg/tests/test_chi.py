import numpy as np
import pytest

from cascade import NetworkState, is_feasible, run_uncontrolled, simulate
from chi import (
    ChiPiece,
    IntervalSet,
    PiecewiseChi,
    chi_argmax_split,
    chi_star,
    clusters,
    component_feasible_set,
    convexifiable,
    envelope,
    gap_condition_connected,
    minkowski_sum,
    one_shot_candidates,
    parallel_controls,
    parallel_optimal,
    parallel_profile,
    self_sum_connected,
    solve_one_shot,
    solve_tree,
    solve_tree_constant,
    sum_is_connected,
    tree_reduce,
)
from grid import Link, Network
from search import root_node, value_iteration
from utils.errors import EmptyDomain, InfeasibleTarget, NotTreeReducible

from conftest import two_node


def iv(*pairs):
    return IntervalSet.of(pairs)


def ends(X) -> list[float]:
    return [x for pair in X for x in pair]


# ---- intervals ----
def test_interval_normalisation():
    X = iv((3, 4), (0, 1), (1, 2))
    assert X.intervals == ((0.0, 2.0), (3.0, 4.0))
    assert X.gaps == [1.0]
    assert X.width == 4.0
    with pytest.raises(ValueError):
        iv((2, 1))


def test_minkowski_sum_and_algebra():
    X = iv((0, 1), (3, 4))
    assert (X + iv((0, 1))).intervals == ((0.0, 2.0), (3.0, 5.0))
    assert minkowski_sum([X, iv((0, 1)), iv((0, 1))]).intervals == ((0.0, 6.0),)
    assert (-X).intervals == ((-4.0, -3.0), (-1.0, 0.0))
    assert (X & iv((0.5, 3.5))).intervals == ((0.5, 1.0), (3.0, 3.5))
    assert iv((0, 1.75), (2, 2.1)).symmetric().intervals == ((-2.1, -2.0), (-1.75, 1.75), (2.0, 2.1))
    assert not (X + IntervalSet.empty())


def test_connectivity_conditions():
    X = iv((0, 1), (3, 4))
    assert gap_condition_connected([iv((0, 2)), X])
    assert not gap_condition_connected([iv((0, 1)), X])
    assert self_sum_connected(iv((0, 1), (2, 3)), 2)
    assert not self_sum_connected(iv((0, 1), (2, 3)), 1)
    assert not self_sum_connected(iv((0, 0), (2, 3)), 5)
    assert sum_is_connected([iv((0, 1), (2, 3))] * 3)
    assert not sum_is_connected([X, iv((0, 1))])


def test_random_sums_agree_with_exact(rng):
    for _ in range(50):
        sets = []
        for _ in range(rng.integers(2, 4)):
            cuts = np.sort(rng.uniform(0, 4, size=2 * rng.integers(1, 3)))
            sets.append(IntervalSet.of(zip(cuts[::2], cuts[1::2])))
        exact = minkowski_sum(sets).is_connected()
        if gap_condition_connected(sets):
            assert exact
        assert sum_is_connected(sets) == exact


# ---- chi functions ----
def test_piece_translation():
    p = ChiPiece.of(0, 1, 3, 5)
    assert (p.tau1, p.tau2) == (1.0, 3.0)
    assert p.value(0.5) == pytest.approx(5 - 2.5)
    q = ChiPiece.of(2, 4, 0, 5)
    assert (q.tau1, q.tau2) == (2.0, 3.0)


def test_linear_functions():
    up = PiecewiseChi.linear(IntervalSet.interval(0, 3), 1.0)
    down = PiecewiseChi.linear(IntervalSet.interval(-3, 0), -1.0)
    assert up(2.0) == pytest.approx(2.0)
    assert down(-1.0) == pytest.approx(1.0)
    assert up(4.0) == -np.inf
    with pytest.raises(ValueError):
        PiecewiseChi.linear(IntervalSet.interval(0, 1), 0.0)


def test_star_of_two_tents():
    f = PiecewiseChi.chi(IntervalSet.interval(0, 2), 1, 2)
    g = PiecewiseChi.chi(IntervalSet.interval(2, 4), 3, 4)
    star = chi_star([f, g])
    assert star.top == (4.0, 6.0)
    assert star.domain().intervals == ((2.0, 6.0),)
    for z, value in ((2, 4), (4, 6), (5, 5), (6, 4)):
        assert star(z) == pytest.approx(value)
    assert chi_argmax_split([f, g], 4.0) == pytest.approx([1.0, 3.0])
    assert chi_argmax_split([f, g], 5.0) == pytest.approx([1.5, 3.5])
    assert chi_argmax_split([f, g], 2.0) == pytest.approx([0.0, 2.0])


def test_star_of_shed_ranges():
    supply = PiecewiseChi.linear(IntervalSet.interval(0, 3), 1.0)
    demand = PiecewiseChi.linear(IntervalSet.interval(-3, 0), -1.0)
    star = chi_star([supply, demand])
    assert star(0.0) == pytest.approx(6.0)
    assert chi_argmax_split([supply, demand], 0.0) == pytest.approx([3.0, -3.0])


def test_star_with_gapped_domain():
    f = PiecewiseChi.chi(iv((0, 1), (3, 4)), 3.5, 4)
    g = PiecewiseChi.chi(IntervalSet.interval(0, 1), 0, 1)
    star = chi_star([f, g])
    assert star.domain().intervals == ((0.0, 2.0), (3.0, 5.0))
    grid = np.linspace(0, 5, 51)
    for z in grid:
        brute = max(
            (f(x) + g(z - x) for x in np.linspace(0, 4, 401) if f(x) > -np.inf and g(z - x) > -np.inf),
            default=-np.inf,
        )
        assert star(z) == pytest.approx(brute, abs=2e-2)


def test_star_rejects_empty_input():
    f = PiecewiseChi.chi(IntervalSet.interval(0, 1), 0, 1)
    with pytest.raises(EmptyDomain):
        chi_star([f, (f, IntervalSet.interval(5, 6))])


def test_split_outside_domain():
    f = PiecewiseChi.chi(IntervalSet.interval(0, 1), 0, 1)
    with pytest.raises(InfeasibleTarget):
        chi_argmax_split([f, f], 3.0)


def test_clusters_merge_restrictions():
    g = PiecewiseChi.chi(iv((0, 1), (2, 3)), 2.5, 1)
    groups = clusters(g)
    assert len(groups) == 1
    assert (groups[0].tau1, groups[0].tau2) == pytest.approx((2.5, 1.0))
    assert not convexifiable(groups + groups)
    closer = clusters(PiecewiseChi.chi(iv((0, 1), (1.5, 3)), 2.5, 1))
    assert convexifiable(closer + closer)


def test_envelope_of_two_tents():
    env = envelope([ChiPiece(-1, 1, 0, 1), ChiPiece(1, 3, 2, 1)])
    for x, value in ((-1, 0), (0, 1), (1, 0), (2, 1), (3, 0)):
        assert env(x) == pytest.approx(value)


# ---- parallel networks ----
def test_parallel_profile():
    profile = parallel_profile(two_node([1.0, 1.0], [1.0, 3.0]))
    assert profile.order == (2, 1)
    assert profile.support == pytest.approx((3.0, 2.0))
    assert profile.records == (1, 2)
    assert profile.uncontrolled(4.0)[:4] == [2, 1, 0, 0]
    assert profile.stages(4.0) == [2, 1]


@pytest.mark.parametrize("N, expected", [(1, [2.0]), (2, [3.0, 3.0]), (3, [3.0, 3.0, 3.0])])
def test_parallel_optimal(parallel, N, expected):
    net, state = parallel
    profile = parallel_profile(net)
    assert parallel_optimal(profile, 4.0, N) == pytest.approx(expected)
    states = simulate(net, state, parallel_controls(net, profile, 4.0, N))
    assert is_feasible(net, states[-1])
    exact = value_iteration(net, root_node(net, state), N).value
    assert net.residual(states[-1].p) == pytest.approx(exact)


def test_parallel_waits_when_cascade_helps():
    net = two_node([1.0, 1.0, 4.0], [1.0, 3.0, 1.0])
    profile = parallel_profile(net)
    state = NetworkState.of(net.all_links, net.vector({1: 3.0, 2: -3.0}))
    for N in (1, 2, 3):
        levels = parallel_optimal(profile, 3.0, N)
        states = simulate(net, state, parallel_controls(net, profile, 3.0, N))
        assert is_feasible(net, states[-1])
        exact = value_iteration(net, root_node(net, state), N).value
        assert 2 * levels[-1] == pytest.approx(exact)


def test_parallel_profile_rejects_meshes(example1):
    with pytest.raises(ValueError):
        parallel_profile(example1.network)


# ---- tree reduction ----
def test_example2_reduces_to_one_component(example2):
    tree = tree_reduce(example2.network, example2.state.p)
    assert tree.root == 1
    assert tree.order == (1, 3)
    assert tree.uplinks[3].links == frozenset({1, 2, 3, 4, 5})


def test_dead_ends_are_dropped():
    links = (
        Link(1, 1, 2, 1.0, 1.0),
        Link(2, 2, 3, 1.0, 1.0),
        Link(3, 3, 4, 1.0, 1.0),
        Link(4, 4, 2, 1.0, 1.0),
        Link(5, 2, 5, 1.0, 1.0),
    )
    net = Network((1, 2, 3, 4, 5), links, {1: "supply", 5: "demand"})
    tree = tree_reduce(net)
    assert tree.dropped == frozenset({2, 3, 4})
    assert tree.order in ((1, 5), (5, 1))
    assert tree.uplinks[tree.order[1]].links == frozenset({1, 5})


def test_meshed_terminals_are_not_reducible(example1):
    with pytest.raises(NotTreeReducible):
        tree_reduce(example1.network, example1.state.p)


def test_example2_feasible_transfers(instance):
    manager = instance("example2-s2")
    tree = tree_reduce(manager.network, manager.state.p)
    link = tree.uplinks[3]
    assert ends(component_feasible_set(link, 1)) == pytest.approx([-1.0, 1.0])
    two = component_feasible_set(link, 2)
    assert ends(two) == pytest.approx([-2.1, -2.0, -1.75, 1.75, 2.0, 2.1])


def test_example2_tree_constant(example2):
    net, state, ref = example2.network, example2.state, example2.reference
    tree = tree_reduce(net, state.p)
    value, control = solve_tree_constant(net, tree, 2)
    assert value == pytest.approx(ref["tree_constant"][2])
    u = net.vector(control)
    states = simulate(net, state, [u, u])
    assert is_feasible(net, states[-1])
    assert net.residual(states[-1].p) == pytest.approx(value)


def test_tree_and_search_agree_on_constant_controls(example2):
    net, state = example2.network, example2.state
    tree = tree_reduce(net, state.p)
    for N in (1, 2, 3):
        constant = value_iteration(net, root_node(net, state, constant=True), N).value
        assert solve_tree(net, tree, N).value == pytest.approx(constant, abs=1e-7)


# ---- one-shot ----
def test_one_shot_candidates(instance):
    manager = instance("example2-s1")
    net, state = manager.network, manager.state
    candidates = one_shot_candidates(net, state, 2)
    assert [c.t for c in candidates] == [0, 1]
    assert [c.value for c in candidates] == pytest.approx([3.0, 3.0])


@pytest.mark.parametrize("method", ["search", "tree"])
def test_one_shot(example2, method):
    net, state, ref = example2.network, example2.state, example2.reference
    value, controls = solve_one_shot(net, state, 2, method=method)
    assert value == pytest.approx(ref["one_shot"][2])
    assert len(controls) == 2
    states = simulate(net, state, controls)
    assert net.residual(states[-1].p) == pytest.approx(value)


# ---- companion tree example ----
@pytest.fixture
def ieee39_tree(instance):
    manager = instance("ieee39-tree")
    net, state = manager.network, manager.state
    tree = tree_reduce(net, state.p, active=state.active)
    return manager, tree


@pytest.mark.published
def test_ieee39_tree_reduction(ieee39_tree):
    manager, tree = ieee39_tree
    ref = manager.reference
    assert sorted(tree.nodes) == ref["tree_nodes"]
    assert tree.root == ref["root"]
    for v, children in ref["children"].items():
        assert sorted(tree.children[v]) == children
    assert {6, 16, 40}.isdisjoint(l for link in tree.uplinks.values() for l in link.links)


@pytest.mark.published
def test_ieee39_tree_demand_sign(ieee39_tree):
    manager, tree = ieee39_tree
    assert sum(tree.injections.values()) == pytest.approx(0.0)
    assert tree.injections[17] == -1.0


@pytest.mark.published
def test_ieee39_tree_rows(ieee39_tree):
    manager, tree = ieee39_tree
    ref = manager.reference
    solution = solve_tree(manager.network, tree, ref["horizon"])
    assert solution.value == pytest.approx(ref["J"])
    root = solution.outputs[tree.root]
    assert root.top == pytest.approx(tuple(ref["root_top"]))
    assert ends(root.domain().intervals) == pytest.approx(ends(ref["root_domain"]))
    for v, row in ref["rows"].items():
        g = solution.outputs[v]
        assert g.top == pytest.approx(tuple(row["top"])), v
        assert ends(g.domain().intervals) == pytest.approx(ends(row["domain"]), abs=1e-3), v
    for v, X in ref["transfers"].items():
        assert ends(solution.domains[v].intervals) == pytest.approx(ends(X), abs=1e-3), v


@pytest.mark.published
def test_ieee39_tree_gapped_component(ieee39_tree):
    manager, tree = ieee39_tree
    link = tree.uplinks[6]
    assert link.parent == 16
    assert ends(component_feasible_set(link, 1)) == pytest.approx([-4.937, 4.937], abs=1e-3)
    assert ends(component_feasible_set(link, 2)) == pytest.approx([-6.413, 6.413], abs=1e-3)
    three = component_feasible_set(link, manager.reference["horizon"])
    assert ends(three) == pytest.approx(ends(manager.reference["gapped_transfers"]), abs=1e-3)
    assert three.gaps == pytest.approx([0.532, 0.532], abs=1e-3)


# ---- randomized checks ----
def random_chi(rng) -> PiecewiseChi:
    e = np.sort(rng.uniform(-3.0, 3.0, size=4))
    pieces = [
        ChiPiece.of(e[2 * i], e[2 * i + 1], float(rng.uniform(-3.0, 3.0)), float(rng.uniform(0.0, 3.0)))
        for i in range(int(rng.integers(1, 3)))
    ]
    return PiecewiseChi.of(pieces)


def brute_star(f: PiecewiseChi, g: PiecewiseChi, z: float, xs: np.ndarray) -> float:
    """Best split over a grid plus every breakpoint of both inputs."""
    marks = [x for p in f.pieces for x in (p.lo, p.hi, p.tau1)]
    marks += [z - x for q in g.pieces for x in (q.lo, q.hi, q.tau1)]
    values = [f(x) + g(z - x) for x in np.concatenate([xs, marks])]
    return max(values, default=-np.inf)


@pytest.mark.parametrize("seed", range(8))
def test_random_star_against_grid(seed):
    rng = np.random.default_rng(seed)
    f, g = random_chi(rng), random_chi(rng)
    star = chi_star([f, g])
    xs = np.linspace(-3.0, 3.0, 241)
    step = xs[1] - xs[0]
    for z in np.linspace(-6.0, 6.0, 49):
        brute = brute_star(f, g, z, xs)
        if brute == -np.inf:
            assert star(z) == -np.inf
            continue
        assert brute - 1e-9 <= star(z) <= brute + 2 * step + 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_random_parallel_against_search(seed):
    rng = np.random.default_rng(seed)
    net = two_node(rng.uniform(0.5, 3.0, size=3), rng.uniform(0.5, 3.0, size=3))
    profile = parallel_profile(net)
    p0 = float(rng.uniform(1.0, 6.0))
    state = NetworkState.of(net.all_links, net.vector({1: p0, 2: -p0}))
    for N in (1, 2, 3):
        levels = parallel_optimal(profile, p0, N)
        exact = value_iteration(net, root_node(net, state), N).value
        assert 2 * levels[-1] == pytest.approx(exact, abs=1e-7)
        states = simulate(net, state, parallel_controls(net, profile, p0, N))
        assert is_feasible(net, states[-1])


def random_tree_network(rng) -> tuple[Network, NetworkState]:
    """Supply 1 feeds hub 4 over two parallel links; demands 2 and 3 hang off the hub, 2 through relay 5."""
    ends = [(1, 4), (1, 4), (4, 5), (5, 2), (4, 3)]
    links = tuple(
        Link(i + 1, a, b, float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 3.0)))
        for i, (a, b) in enumerate(ends)
    )
    net = Network(nodes=(1, 2, 3, 4, 5), links=links, roles={1: "supply", 2: "demand", 3: "demand"})
    a, b = rng.uniform(0.5, 3.0, size=2)
    return net, NetworkState.of(net.all_links, net.vector({1: a + b, 2: -a, 3: -b}))


@pytest.mark.parametrize("seed", range(5))
def test_random_tree_against_constant_search(seed):
    net, state = random_tree_network(np.random.default_rng(seed))
    tree = tree_reduce(net, state.p)
    for N in (1, 2):
        constant = value_iteration(net, root_node(net, state, constant=True), N).value
        assert solve_tree(net, tree, N).value == pytest.approx(constant, abs=1e-7)


@pytest.mark.parametrize("seed", range(5))
def test_random_parallel_failure_order(seed):
    rng = np.random.default_rng(20 + seed)
    w, c = rng.uniform(0.5, 3.0, size=4), rng.uniform(0.5, 3.0, size=4)
    net = two_node(w, c)
    rank = [i + 1 for i in np.argsort(w / c)]
    p0 = float(rng.uniform(2.0, 8.0))
    for s in run_uncontrolled(net, NetworkState.of(net.all_links, net.vector({1: p0, 2: -p0}))):
        assert set(rank[: len(s.active)]) == s.active
