import itertools

import numpy as np
import pytest
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from geometry import (
    Hyperplane,
    boundary_ridges,
    build_polytope,
    clip,
    cube_of_polytope,
    hypercube_of,
    insert_hyperplane,
    lp_over_vertices,
    polytope_of_point,
    project_dir,
    section,
    sweep_dir,
    top_facets,
)
from utils.errors import EmptyPolytope, NegativeCoordinate


def square():
    return hypercube_of([1.0, 2.0])


def vertex_set(g):
    return sorted(tuple(np.round(p, 9) + 0.0) for p in g.points)


def test_hypercube_lattice():
    g = hypercube_of([1.0, -2.0, 3.0])
    assert g.layer_counts() == (8, 12, 6, 1)
    assert g.euler_characteristic() == 1
    assert g.is_polytope


def test_point_polytope():
    g = polytope_of_point([1.0, 2.0])
    assert g.layer_counts() == (1,)
    assert g.dim == 0


def test_insert_hyperplane_splits_cells():
    g = insert_hyperplane(square(), Hyperplane.of([1.0, 0.0], 0.5))
    assert g.layer_counts() == (6, 7, 2)
    assert g.euler_characteristic() == 1
    g = insert_hyperplane(g, Hyperplane.of([0.0, 1.0], 1.0))
    assert g.layer_counts() == (9, 12, 4)


def test_insert_missing_hyperplane_is_noop():
    g = square()
    assert insert_hyperplane(g, Hyperplane.of([1.0, 0.0], 5.0)) is g


def test_section_and_clip():
    seg = section(square(), Hyperplane.of([1.0, -1.0], 0.0))
    assert vertex_set(seg) == [(0.0, 0.0), (1.0, 1.0)]
    tri = clip(square(), [1.0, 1.0], 1.0)
    assert tri.layer_counts() == (3, 3, 1)
    with pytest.raises(EmptyPolytope):
        section(square(), Hyperplane.of([1.0, 0.0], 3.0))
    with pytest.raises(EmptyPolytope):
        clip(square(), [-1.0, 0.0], -2.0)


def test_sweep_point_and_segment():
    seg = sweep_dir(polytope_of_point([1.0, 2.0]), 0)
    assert vertex_set(seg) == [(0.0, 2.0), (1.0, 2.0)]
    with pytest.raises(NegativeCoordinate):
        sweep_dir(polytope_of_point([-1.0, 2.0]), 0)


def test_cube_of_segment_against_hull():
    g = build_polytope([[2.0, 1.0], [1.0, 2.0]])
    cube = cube_of_polytope(g)
    hull = ConvexHull(np.array([[0, 0], [2, 0], [2, 1], [1, 2], [0, 2]], dtype=float))
    assert cube.layer_counts() == (len(hull.vertices), len(hull.simplices), 1)
    assert vertex_set(cube) == [(0.0, 0.0), (0.0, 2.0), (1.0, 2.0), (2.0, 0.0), (2.0, 1.0)]


def test_cube_of_polytope_negative_orthant():
    g = build_polytope([[-2.0, 1.0], [-1.0, 2.0]])
    cube = cube_of_polytope(g)
    assert vertex_set(cube) == [(-2.0, 0.0), (-2.0, 1.0), (-1.0, 2.0), (0.0, 0.0), (0.0, 2.0)]


def test_cube_of_polytope_rejects_mixed_signs():
    with pytest.raises(NegativeCoordinate):
        cube_of_polytope(build_polytope([[-1.0, 1.0], [1.0, 1.0]]))


def test_project_dir():
    pts = np.array([[1.0, 1.0, 1.0], [3.0, 1.0, 2.0], [1.0, 3.0, 1.5], [1.5, 1.5, 3.0]])
    hull = ConvexHull(pts)
    g = build_polytope(pts, hull.equations[:, :3], -hull.equations[:, 3])
    assert g.layer_counts() == (4, 6, 4, 1)
    shadow = project_dir(g, 2)
    assert vertex_set(shadow) == [(1.0, 1.0, 0.0), (1.0, 3.0, 0.0), (3.0, 1.0, 0.0)]


def test_lp_over_vertices_tie_break():
    value, x = lp_over_vertices(square(), [1.0, 0.0])
    assert value == pytest.approx(1.0)
    assert tuple(x) == (1.0, 0.0)


def test_hyperplane_normalisation():
    h = Hyperplane.of([-3.0, -4.0], -10.0)
    assert h.normal == pytest.approx([0.6, 0.8])
    assert h.offset == pytest.approx(2.0)


def test_top_facets_and_boundary_ridges():
    g = square()
    tops = top_facets(g, 0)
    assert len(tops) == 1
    assert np.allclose(g.coords(tops[0])[:, 0], 1.0)
    ridges = boundary_ridges(g, 0)
    assert sorted(tuple(g.coords(r)[0]) for r, _, _ in ridges) == [(1.0, 0.0), (1.0, 2.0)]


def test_dump_lists_every_face():
    text = square().dump()
    lines = text.splitlines()
    assert lines[0].startswith("# dim=2")
    assert len(lines) == 1 + 9
    assert sum("coords=" in line for line in lines) == 4


# ---- randomized checks ----
def random_polytope(rng, n: int = 8, d: int = 3):
    pts = rng.uniform(0.5, 3.0, size=(n, d))
    hull = ConvexHull(pts)
    return build_polytope(pts[hull.vertices], hull.equations[:, :d], -hull.equations[:, d]), hull


def random_arrangement(rng, d: int, cuts: int):
    p = rng.uniform(1.0, 3.0, size=d) * rng.choice([-1.0, 1.0], size=d)
    g = hypercube_of(p)
    planes = []
    for _ in range(cuts):
        normal = rng.normal(size=d)
        inner = rng.uniform(0.2, 0.8, size=d) * p
        h = Hyperplane.of(normal, float(normal @ inner))
        planes.append(h)
        g = insert_hyperplane(g, h)
    return g, p, planes


def in_sweep(V: np.ndarray, x: np.ndarray, k: int) -> bool:
    """x lies below some point of conv(V) along axis k and above x_k = 0."""
    if x[k] < 0:
        return False
    others = [j for j in range(V.shape[1]) if j != k]
    A_eq = np.vstack([V[:, others].T, np.ones(len(V))])
    b_eq = np.concatenate([x[others], [1.0]])
    res = linprog(np.zeros(len(V)), A_ub=-V[:, k][None, :], b_ub=[-x[k]], A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * len(V), method="highs")
    return res.status == 0


def assert_diamonds(g):
    for face in g.faces:
        if face.dim == 1:
            assert len(face.subfaces) == 2
        if face.dim < 2:
            continue
        between: dict[int, int] = {}
        for h in face.subfaces:
            for f in g.faces[h].subfaces:
                between[f] = between.get(f, 0) + 1
        assert set(between.values()) == {2}, face.id


@pytest.mark.parametrize("seed", range(5))
def test_sweep_membership_on_random_polytopes(seed):
    rng = np.random.default_rng(seed)
    g, _ = random_polytope(rng)
    k = int(rng.integers(3))
    swept = sweep_dir(g, k)
    A, b = swept.halfspaces(swept.top)
    norms = np.linalg.norm(A, axis=1)
    checked = 0
    for x in rng.uniform(-0.2, 3.2, size=(300, 3)):
        slack = float(np.min((b - A @ x) / norms))
        if abs(slack) < 1e-6:
            continue
        assert (slack > 0) == in_sweep(g.points, x, k)
        checked += 1
    assert checked > 250
    shadow = g.points.copy()
    shadow[:, k] = 0.0
    cloud = np.vstack([g.points, shadow])
    hull = ConvexHull(cloud)
    assert vertex_set(swept) == sorted(tuple(np.round(p, 9) + 0.0) for p in cloud[hull.vertices])


@pytest.mark.parametrize("seed", range(5))
def test_facet_classes_against_hull(seed):
    rng = np.random.default_rng(100 + seed)
    g, hull = random_polytope(rng)
    for k in range(3):
        up = hull.equations[:, k] > 1e-9
        assert len(top_facets(g, k)) == int(up.sum())
        pairs = {
            frozenset((i, int(j)))
            for i, row in enumerate(hull.neighbors) for j in row if up[i] != up[j]
        }
        assert len(boundary_ridges(g, k)) == len(pairs)


@pytest.mark.parametrize("seed", range(5))
def test_sweep_of_random_segment_is_a_quadrilateral(seed):
    rng = np.random.default_rng(200 + seed)
    seg = build_polytope(rng.uniform(0.5, 3.0, size=(2, 2)))
    for k in (0, 1):
        swept = sweep_dir(seg, k)
        assert swept.layer_counts() == (4, 4, 1)
        assert swept.euler_characteristic() == 1


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_hypercube_euler_and_diamonds(rng, d):
    g = hypercube_of(rng.uniform(0.5, 2.0, size=d) * rng.choice([-1.0, 1.0], size=d))
    assert g.layer_counts()[0] == 2 ** d
    assert g.euler_characteristic() == 1
    assert_diamonds(g)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_arrangement_euler_and_diamonds(d):
    rng = np.random.default_rng(300 + d)
    for _ in range(3):
        g, _, _ = random_arrangement(rng, d, cuts=2 if d < 4 else 1)
        assert g.euler_characteristic() == 1
        assert_diamonds(g)


def sign_vectors(p, planes) -> set[tuple[int, ...]]:
    """Sign vectors of the open cells, one LP per candidate."""
    d = len(p)
    lo, hi = np.minimum(p, 0.0), np.maximum(p, 0.0)
    found = set()
    for signs in itertools.product((-1, 1), repeat=len(planes)):
        A = np.array([[-s * c for c in h.normal] + [1.0] for s, h in zip(signs, planes)])
        b = np.array([-s * h.offset for s, h in zip(signs, planes)])
        c = np.zeros(d + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=A, b_ub=b, bounds=list(zip(lo, hi)) + [(None, 1.0)], method="highs")
        if res.status == 0 and -res.fun > 1e-7:
            found.add(signs)
    return found


@pytest.mark.parametrize("d", [2, 3])
def test_insertion_matches_sign_vectors(d):
    rng = np.random.default_rng(400 + d)
    for _ in range(4):
        g, p, planes = random_arrangement(rng, d, cuts=3)
        expected = sign_vectors(p, planes)
        assert len(g.cells) == len(expected)
        seen = {tuple(int(np.sign(h.evaluate(cell.centroid))) for h in planes) for cell in g.cells}
        assert seen == expected


# ---- degenerate cuts ----
def test_cut_through_a_vertex_splits_at_it():
    g = insert_hyperplane(square(), Hyperplane.of([1.0, -1.0], 0.0))
    assert g.layer_counts() == (5, 6, 2)
    assert (1.0, 1.0) in vertex_set(g)
    assert g.euler_characteristic() == 1
    assert_diamonds(g)


def test_cut_through_two_vertices_keeps_them():
    g = insert_hyperplane(square(), Hyperplane.of([2.0, -1.0], 0.0))
    assert g.layer_counts() == (4, 5, 2)
    assert vertex_set(g) == vertex_set(square())


def test_supporting_cut_leaves_the_cell_whole():
    h = Hyperplane.of([1.0, 1.0], 0.0)
    g = insert_hyperplane(square(), h)
    assert g.layer_counts() == (4, 4, 1)
    assert g.hyperplanes[-1] is h
    edge = Hyperplane.of([1.0, 0.0], 1.0)
    assert insert_hyperplane(square(), edge).layer_counts() == (4, 4, 1)

