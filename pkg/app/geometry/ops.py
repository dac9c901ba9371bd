"""Operations on incidence graphs: cuts, sections, sweeps, projections and vertex LPs."""

import itertools
from typing import Iterable

import numpy as np
from scipy import linalg

from utils.errors import DegenerateCut, EmptyPolytope, NegativeCoordinate
from utils.logs import set_logger
from .lattice import (
    Face,
    Hyperplane,
    IncidenceGraph,
    assemble,
    build_polytope,
    geo_tol,
)


logger = set_logger(__name__)



# ---------- Constructors ----------
def polytope_of_point(x) -> IncidenceGraph:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    d = x.shape[1]
    return assemble([(x, {frozenset({0}): 0}, np.zeros((0, d)), np.zeros(0))])


def hypercube_of(p) -> IncidenceGraph:
    """
    Lattice of the box spanned by 0 and ``p`` (all coordinates nonzero).

    Faces are indexed by sign vectors: -1 fixes a coordinate at 0, +1 at p_i
    and 0 leaves it free.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    d = len(p)
    if np.any(p == 0):
        raise ValueError("hypercube_of requires nonzero coordinates.")
    corners = list(itertools.product((0, 1), repeat=d))
    V = np.array([[p[i] * c[i] for i in range(d)] for c in corners], dtype=float)
    sets = {}
    for alpha in itertools.product((-1, 0, 1), repeat=d):
        members = frozenset(
            j for j, c in enumerate(corners)
            if all(a == 0 or (a == 1) == (c[i] == 1) for i, a in enumerate(alpha))
        )
        sets[members] = alpha.count(0)
    lo, hi = np.minimum(p, 0.0), np.maximum(p, 0.0)
    eye = np.eye(d)
    A = np.vstack([eye, -eye])
    b = np.concatenate([hi, -lo])
    return assemble([(V, sets, A, b)])


# ---------- Cell cuts ----------
def _cell_edges(g: IncidenceGraph, cell: Face) -> list[tuple[int, int]]:
    if cell.dim == 1:
        return [tuple(sorted(cell.vertices))]
    return [tuple(sorted(f.vertices)) for f in g.below(cell) if f.dim == 1]


def _crossings(g: IncidenceGraph, cell: Face, side: dict[int, float], tol: float) -> list[np.ndarray]:
    out = []
    for a, b in _cell_edges(g, cell):
        sa, sb = side[a], side[b]
        if (sa < -tol and sb > tol) or (sa > tol and sb < -tol):
            out.append(g.points[a] + sa / (sa - sb) * (g.points[b] - g.points[a]))
    return out


def _side(g: IncidenceGraph, cell: Face, normal: np.ndarray, offset: float) -> dict[int, float]:
    return {v: float(g.points[v] @ normal - offset) for v in cell.vertices}


def _stack(points: Iterable[np.ndarray], d: int) -> np.ndarray:
    points = list(points)
    return np.asarray(points, dtype=float).reshape(len(points), d)


def _piece(g: IncidenceGraph, cell: Face, points, A_extra=None, b_extra=None) -> IncidenceGraph:
    A, b = g.halfspaces(cell)
    if A_extra is not None:
        A, b = np.vstack([A, A_extra]), np.concatenate([b, b_extra])
    return build_polytope(points, A, b)


def _split_cell(g: IncidenceGraph, cell: Face, h: Hyperplane, tol: float) -> list[IncidenceGraph] | None:
    """
    Split one cell by ``h``.

    Returns ``None`` when ``h`` misses the cell interior.

    Raises:
        DegenerateCut: If ``h`` touches the cell without crossing it.
    """
    side = _side(g, cell, h.normal, h.offset)
    values = np.fromiter(side.values(), dtype=float)
    if values.max() <= tol or values.min() >= -tol:
        if np.any(np.abs(values) <= tol):
            raise DegenerateCut(f"Hyperplane {h.label or '?'} supports cell {cell.id}.")
        return None
    cross = _crossings(g, cell, side, tol)
    d = g.ambient_dim
    lower = [g.points[v] for v, s in side.items() if s <= tol] + cross
    upper = [g.points[v] for v, s in side.items() if s >= -tol] + cross
    return [
        _piece(g, cell, _stack(lower, d), h.normal[None, :], [h.offset]),
        _piece(g, cell, _stack(upper, d), -h.normal[None, :], [-h.offset]),
    ]


def _parts_of(piece: IncidenceGraph):
    cell = piece.top
    sets = {f.vertices: f.dim for f in piece.faces}
    A, b = piece.halfspaces(cell)
    return piece.points, sets, A, b


def insert_hyperplane(g: IncidenceGraph, h: Hyperplane) -> IncidenceGraph:
    """
    Refine every cell of ``g`` crossed by ``h``.

    A hyperplane that merely touches a cell leaves it whole; if ``h`` neither
    crosses nor touches ``g``, ``g`` is returned unchanged.
    """
    tol = geo_tol(g.points)
    pieces, split, touched = [], False, False
    for cell in g.cells:
        try:
            parts = _split_cell(g, cell, h, tol)
        except DegenerateCut as e:
            logger.debug(f"No split: {e}")
            parts, touched = None, True
        if parts:
            split = True
            pieces.extend(parts)
        else:
            pieces.append(g.subgraph(cell))
    if not split and not touched:
        return g
    return assemble([_parts_of(p) for p in pieces], g.hyperplanes + (h,))


def section(g: IncidenceGraph, h: Hyperplane) -> IncidenceGraph:
    """
    Intersection of ``g`` with the hyperplane ``h``.

    Raises:
        EmptyPolytope: If ``h`` misses ``g``.
    """
    tol = geo_tol(g.points)
    if np.all(np.abs(h.evaluate(g.points)) <= tol):
        return g
    pieces = []
    for cell in g.cells:
        side = _side(g, cell, h.normal, h.offset)
        values = np.fromiter(side.values(), dtype=float)
        if np.all(np.abs(values) <= tol):
            pieces.append(g.subgraph(cell))
            continue
        if values.max() < -tol or values.min() > tol:
            continue
        on = [g.points[v] for v, s in side.items() if abs(s) <= tol]
        points = _stack(on + _crossings(g, cell, side, tol), g.ambient_dim)
        pieces.append(_piece(g, cell, points, np.vstack([h.normal, -h.normal]), [h.offset, -h.offset]))
    if not pieces:
        raise EmptyPolytope(f"Hyperplane {h.label or '?'} misses the region.")
    return assemble([_parts_of(p) for p in pieces], g.hyperplanes)


def clip(g: IncidenceGraph, normal, offset: float) -> IncidenceGraph:
    """
    Intersection of ``g`` with the halfspace ``normal . x <= offset``.

    Raises:
        EmptyPolytope: If the halfspace misses ``g``.
    """
    normal = np.asarray(normal, dtype=float)
    tol = geo_tol(g.points) * max(1.0, float(np.linalg.norm(normal)))
    pieces, changed = [], False
    for cell in g.cells:
        side = _side(g, cell, normal, offset)
        values = np.fromiter(side.values(), dtype=float)
        if values.max() <= tol:
            pieces.append(g.subgraph(cell))
            continue
        changed = True
        if values.min() > tol:
            continue
        below = [g.points[v] for v, s in side.items() if s <= tol]
        points = _stack(below + _crossings(g, cell, side, tol), g.ambient_dim)
        pieces.append(_piece(g, cell, points, normal[None, :], [offset]))
    if not changed:
        return g
    if not pieces:
        raise EmptyPolytope("Halfspace misses the region.")
    return assemble([_parts_of(p) for p in pieces], g.hyperplanes)


# ---------- Sweeps ----------
def _unit(d: int, k: int) -> np.ndarray:
    e = np.zeros(d)
    e[k] = 1.0
    return e


def facet_normal(g: IncidenceGraph, facet: Face, cell: Face | None = None) -> np.ndarray:
    """Outward unit normal of a facet of a polytope, taken inside the polytope's carrier."""
    cell = cell or g.top
    w = g.carrier.project_direction(facet.centroid - cell.centroid)
    F = g.coords(facet)
    if len(F) > 1:
        Q = linalg.orth((F[1:] - F[0]).T)
        w = w - Q @ (Q.T @ w)
    return w / np.linalg.norm(w)


def _facets(g: IncidenceGraph) -> list[Face]:
    return list(g.layer(g.top.dim - 1)) if g.top.dim >= 1 else []


def top_facets(g: IncidenceGraph, k: int) -> list[Face]:
    """Facets whose outward normal has a positive k-th component."""
    tol = 1e-9
    return [f for f in _facets(g) if facet_normal(g, f)[k] > tol]


def boundary_ridges(g: IncidenceGraph, k: int) -> list[tuple[Face, Face, Face]]:
    """
    Ridges between a top facet and a non-top facet, as (ridge, top, other).

    Ridges lying in x_k = 0 are excluded.
    """
    top = {f.id for f in top_facets(g, k)}
    facets = {f.id for f in _facets(g)}
    tol = geo_tol(g.points)
    out = []
    for ridge in g.layer(g.top.dim - 2) if g.top.dim >= 2 else ():
        sup = [s for s in ridge.superfaces if s in facets]
        if len(sup) != 2 or (sup[0] in top) == (sup[1] in top):
            continue
        if np.all(np.abs(g.coords(ridge)[:, k]) <= tol):
            continue
        t, o = (sup[0], sup[1]) if sup[0] in top else (sup[1], sup[0])
        out.append((ridge, g.faces[t], g.faces[o]))
    return out


def sweep_dir(g: IncidenceGraph, k: int) -> IncidenceGraph:
    """
    The set swept by moving every point of the polytope ``g`` toward x_k = 0.

    Builds the halfspace description of the sweep directly. If the k-th axis
    leaves the polytope's carrier, the sweep gains a dimension and its facets
    are the top of the polytope, the base and one vertical facet per facet;
    otherwise the top facets are kept and every boundary ridge becomes a
    vertical facet.

    Raises:
        NegativeCoordinate: If some point has x_k < 0.
    """
    if not g.is_polytope:
        raise ValueError("sweep_dir expects a polytope.")
    V, d = g.points, g.ambient_dim
    tol = geo_tol(V)
    if V[:, k].min() < -tol:
        raise NegativeCoordinate(f"Coordinate {k} takes negative values.")
    if V[:, k].max() <= tol:
        return g
    ek = _unit(d, k)
    rows: list[tuple[np.ndarray, float]] = [(-ek, 0.0)]
    r = ek - g.carrier.project_direction(ek)
    if np.linalg.norm(r) > 1e-9:
        n = r / np.linalg.norm(r)
        rows.append((n, float(n @ V[0])))
        for facet in _facets(g):
            a = facet_normal(g, facet)
            m = n[k] * a - a[k] * n
            if np.linalg.norm(m) > 1e-12:
                rows.append((m, float(m @ g.coords(facet)[0])))
        if g.top.dim == 0:
            # segment along e_k: pin the remaining coordinates
            for i in range(d):
                if i != k:
                    rows += [(_unit(d, i), V[0, i]), (-_unit(d, i), -V[0, i])]
    else:
        # top and vertical facets survive
        for facet in _facets(g):
            a = facet_normal(g, facet)
            if a[k] > -1e-9:
                rows.append((a, float(a @ g.coords(facet)[0])))
        for ridge, t, o in boundary_ridges(g, k):
            a1, a2 = facet_normal(g, t), facet_normal(g, o)
            m = a1[k] * a2 - a2[k] * a1
            rows.append((m, float(m @ g.coords(ridge)[0])))
    shadow = V.copy()
    shadow[:, k] = 0.0
    A_new = np.array([r_[0] for r_ in rows])
    b_new = np.array([r_[1] for r_ in rows])
    return build_polytope(np.vstack([V, shadow]), A_new, b_new)


def project_dir(g: IncidenceGraph, k: int) -> IncidenceGraph:
    """Orthogonal projection of the polytope ``g`` onto x_k = 0."""
    V = g.points
    tol = geo_tol(V)
    if np.all(np.abs(V[:, k]) <= tol):
        return g
    signs = np.ones(g.ambient_dim)
    if V[:, k].max() <= tol:
        signs[k] = -1.0
        return project_dir(g.transformed(signs), k).transformed(signs)
    if V[:, k].min() < -tol:
        shift = _unit(g.ambient_dim, k) * -V[:, k].min()
        g = _translated(g, shift)
    return section(sweep_dir(g, k), Hyperplane.of(_unit(g.ambient_dim, k), 0.0))


def _translated(g: IncidenceGraph, shift: np.ndarray) -> IncidenceGraph:
    A, b = g.halfspaces(g.top)
    return build_polytope(g.points + shift, A, b + A @ shift)


def orthant_signs(g: IncidenceGraph) -> np.ndarray:
    """
    Sign of each axis over the vertices of ``g``.

    Raises:
        NegativeCoordinate: If some axis takes both signs.
    """
    V = g.points
    tol = geo_tol(V)
    signs = np.ones(g.ambient_dim)
    for k in range(g.ambient_dim):
        if V[:, k].min() >= -tol:
            continue
        if V[:, k].max() <= tol:
            signs[k] = -1.0
            continue
        raise NegativeCoordinate(f"Coordinate {k} changes sign over the polytope.")
    return signs


def cube_of_polytope(g: IncidenceGraph) -> IncidenceGraph:
    """
    The union of all boxes [0, p] over points p of the polytope ``g``.

    Raises:
        NegativeCoordinate: If the polytope is not contained in one orthant.
    """
    signs = orthant_signs(g)
    h = g.transformed(signs) if np.any(signs < 0) else g
    tol = geo_tol(h.points)
    if len(h.points) == 1 and np.all(np.abs(h.points[0]) > tol):
        out = hypercube_of(h.points[0])
    else:
        for k in range(h.ambient_dim):
            h = sweep_dir(h, k)
        out = h
    return out.transformed(signs) if np.any(signs < 0) else out


# ---------- Optimization ----------
def lp_over_vertices(g: IncidenceGraph, objective) -> tuple[float, np.ndarray]:
    """
    Maximize a linear objective over the points of ``g``.

    Ties are broken by the lexicographically smallest coordinates.

    Raises:
        EmptyPolytope: If ``g`` has no points.
    """
    if not len(g.points):
        raise EmptyPolytope("No vertices.")
    c = np.asarray(objective, dtype=float)
    values = g.points @ c
    best = float(values.max())
    tol = geo_tol(g.points) * max(1.0, float(np.abs(c).sum()))
    tied = [i for i in np.flatnonzero(values >= best - tol)]
    winner = min(tied, key=lambda i: tuple(g.points[i]))
    return best, g.points[winner].copy()


__all__ = [
    "polytope_of_point",
    "hypercube_of",
    "insert_hyperplane",
    "section",
    "clip",
    "facet_normal",
    "top_facets",
    "boundary_ridges",
    "sweep_dir",
    "project_dir",
    "orthant_signs",
    "cube_of_polytope",
    "lp_over_vertices",
]
