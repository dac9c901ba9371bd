"""Incidence graphs (face lattices) of polytopes and of arrangements restricted to a polytope."""

import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from utils.errors import EmptyPolytope
from utils.logs import set_logger


logger = set_logger(__name__)

EPS_GEO = float(os.getenv("EPS_GEO", "1e-7"))



@dataclass(frozen=True, eq=False)
class Hyperplane:
    """
    The set {x : normal . x = offset}, stored with a unit normal whose first nonzero entry is positive.
    """
    normal: np.ndarray
    offset: float
    label: str = ""

    @classmethod
    def of(cls, normal, offset: float, label: str = "") -> "Hyperplane":
        normal = np.asarray(normal, dtype=float)
        norm = float(np.linalg.norm(normal))
        if norm == 0.0:
            raise ValueError("Hyperplane normal must be nonzero.")
        normal, offset = normal / norm, float(offset) / norm
        pivot = normal[np.flatnonzero(np.abs(normal) > 1e-12)[0]]
        if pivot < 0:
            normal, offset = -normal, -offset
        return cls(normal, offset, label)

    def evaluate(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.normal - self.offset



@dataclass(frozen=True, eq=False)
class Carrier:
    """
    Affine hull of a point set: ``origin`` plus the span of the orthonormal columns of ``basis``.
    """
    origin: np.ndarray
    basis: np.ndarray

    @classmethod
    def of(cls, points: np.ndarray, tol: float) -> "Carrier":
        points = np.atleast_2d(points)
        origin = points[0].copy()
        if len(points) == 1:
            return cls(origin, np.zeros((points.shape[1], 0)))
        U, S, _ = np.linalg.svd((points[1:] - origin).T, full_matrices=False)
        rank = int(np.sum(S > tol))
        return cls(origin, U[:, :rank].copy())

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def to_local(self, x: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(x) - self.origin) @ self.basis

    def project_direction(self, v: np.ndarray) -> np.ndarray:
        """Component of a direction lying in the carrier."""
        return self.basis @ (self.basis.T @ v)



@dataclass(frozen=True, eq=False)
class Face:
    id: int
    dim: int
    vertices: frozenset[int]
    subfaces: frozenset[int]
    superfaces: frozenset[int]
    hyperplanes: frozenset[int]
    centroid: np.ndarray



@dataclass(frozen=True, eq=False)
class IncidenceGraph:
    """
    Layered face lattice with geometric auxiliary data.

    Faces ``0 .. len(points)-1`` are the vertices, in the order of ``points``.
    Every maximal face (cell) keeps a halfspace description ``A x <= b`` in
    ``regions``; together with the carrier it defines the cell exactly.
    """
    points: np.ndarray
    faces: tuple[Face, ...]
    hyperplanes: tuple[Hyperplane, ...]
    carrier: Carrier
    regions: Mapping[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    # ---- shape ----
    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @property
    def dim(self) -> int:
        return max(face.dim for face in self.faces)

    @property
    def cells(self) -> tuple[Face, ...]:
        return tuple(face for face in self.faces if not face.superfaces)

    @property
    def is_polytope(self) -> bool:
        return len(self.cells) == 1

    @property
    def top(self) -> Face:
        cells = self.cells
        if len(cells) != 1:
            raise ValueError("Graph has more than one cell.")
        return cells[0]

    def layer(self, dim: int) -> tuple[Face, ...]:
        return tuple(face for face in self.faces if face.dim == dim)

    def layer_counts(self) -> tuple[int, ...]:
        return tuple(len(self.layer(k)) for k in range(self.dim + 1))

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.layer_counts()))

    def coords(self, face: Face | int) -> np.ndarray:
        face = self.faces[face] if isinstance(face, int) else face
        return self.points[sorted(face.vertices)]

    def halfspaces(self, face: Face | int) -> tuple[np.ndarray, np.ndarray]:
        face_id = face if isinstance(face, int) else face.id
        return self.regions[face_id]

    def below(self, face: Face | int) -> list[Face]:
        """All faces weakly below ``face``."""
        face = self.faces[face] if isinstance(face, int) else face
        return [f for f in self.faces if f.vertices <= face.vertices and f.dim <= face.dim]

    def fingerprint(self, digits: int = 9) -> tuple:
        """Hashable summary of the vertex coordinates and cell structure."""
        pts = tuple(sorted(tuple(np.round(p, digits) + 0.0) for p in self.points))
        return pts, self.layer_counts()

    def subgraph(self, face: Face | int) -> "IncidenceGraph":
        """The polytope lattice of one face (its vertices, its subfaces and their incidences)."""
        face = self.faces[face] if isinstance(face, int) else face
        if face.id in self.regions:
            A, b = self.regions[face.id]
        else:
            A, b = np.zeros((0, self.ambient_dim)), np.zeros(0)
        ids = sorted(face.vertices)
        remap = {gid: i for i, gid in enumerate(ids)}
        sets = {frozenset(remap[v] for v in f.vertices): f.dim for f in self.below(face)}
        return assemble([(self.points[ids], sets, A, b)], self.hyperplanes)

    def transformed(self, signs: np.ndarray) -> "IncidenceGraph":
        """Image under the axis reflection x -> signs * x."""
        signs = np.asarray(signs, dtype=float)
        return IncidenceGraph(
            points=self.points * signs,
            faces=tuple(replace(f, centroid=f.centroid * signs) for f in self.faces),
            hyperplanes=tuple(Hyperplane.of(h.normal * signs, h.offset, h.label) for h in self.hyperplanes),
            carrier=Carrier(self.carrier.origin * signs, self.carrier.basis * signs[:, None]),
            regions={k: (A * signs, b) for k, (A, b) in self.regions.items()},
        )

    def dump(self) -> str:
        """Plain-text layered listing: face id, dim, subface ids and vertex coordinates."""
        lines = [f"# dim={self.dim} ambient={self.ambient_dim} faces={len(self.faces)} counts={self.layer_counts()}"]
        for face in sorted(self.faces, key=lambda f: (f.dim, f.id)):
            line = f"[{face.id}] dim={face.dim} sub={sorted(face.subfaces)}"
            if face.dim == 0:
                line += " coords=(" + ", ".join(f"{x:.9g}" for x in self.points[face.id]) + ")"
            lines.append(line)
        return "\n".join(lines)


# ---------- Construction helpers ----------
def geo_tol(points: np.ndarray) -> float:
    return EPS_GEO * (1.0 + (float(np.abs(points).max()) if np.size(points) else 0.0))


def affine_rank(points: np.ndarray, tol: float) -> int:
    if len(points) <= 1:
        return 0
    return int(np.linalg.matrix_rank(points[1:] - points[0], tol=tol))


def dedupe(points: np.ndarray, tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for p in np.atleast_2d(points):
        if not kept or np.min(np.max(np.abs(np.asarray(kept) - p), axis=1)) > tol:
            kept.append(p)
    return np.asarray(kept)


def _close_under_intersection(facets: set[frozenset[int]], n: int) -> set[frozenset[int]]:
    faces = set(facets)
    level = set(facets)
    while level:
        nxt = set()
        for a in level:
            for f in facets:
                c = a & f
                if c and c != a and c not in faces:
                    nxt.add(c)
        faces |= nxt
        level = nxt
    faces.add(frozenset(range(n)))
    return faces


def build_polytope(candidates, A=None, b=None, hyperplanes: Sequence[Hyperplane] = ()) -> IncidenceGraph:
    """
    Lattice of the polytope conv(candidates) described by ``A x <= b`` within the candidates' affine hull.

    ``A, b`` must list every facet-defining halfspace (redundant rows are
    fine). Vertices are the candidates whose tight normals, projected into the
    carrier, have full rank; facets are the tight sets of affine rank m-1;
    lower faces are their intersections.

    Raises:
        EmptyPolytope: If no candidate satisfies the halfspaces.
    """
    pts = np.atleast_2d(np.asarray(candidates, dtype=float))
    d = pts.shape[1]
    A = np.zeros((0, d)) if A is None else np.atleast_2d(np.asarray(A, dtype=float)).reshape(-1, d)
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float).reshape(-1)
    tol = geo_tol(pts)
    pts = dedupe(pts, tol)
    if len(A):
        pts = pts[np.all(pts @ A.T - b <= tol * (1.0 + np.abs(b)), axis=1)]
    if not len(pts):
        raise EmptyPolytope("No candidate point satisfies the halfspaces.")
    carrier = Carrier.of(pts, tol)
    m = carrier.dim
    if m == 0:
        return assemble([(pts[:1], {frozenset({0}): 0}, A, b)], hyperplanes)
    if m == 1:
        t = carrier.to_local(pts)[:, 0]
        ends = pts[[int(np.argmin(t)), int(np.argmax(t))]]
        sets = {frozenset({0}): 0, frozenset({1}): 0, frozenset({0, 1}): 1}
        return assemble([(ends, sets, A, b)], hyperplanes)

    proj = A @ carrier.basis
    norms = np.linalg.norm(proj, axis=1)
    keep = norms > tol
    Ak, bk, unit = A[keep], b[keep], proj[keep] / norms[keep, None]
    tight = np.abs(pts @ Ak.T - bk) <= tol * (1.0 + np.abs(bk))
    is_vertex = np.array([
        tight[i].any() and np.linalg.matrix_rank(unit[tight[i]], tol=1e-6) == m
        for i in range(len(pts))
    ], dtype=bool)
    V, T = pts[is_vertex], tight[is_vertex]
    if len(V) < m + 1:
        raise EmptyPolytope(f"Degenerate halfspace description: {len(V)} vertices in dimension {m}.")
    facets = set()
    for h in range(T.shape[1]):
        s = frozenset(np.flatnonzero(T[:, h]).tolist())
        if len(s) >= m and s not in facets and affine_rank(V[sorted(s)], tol) == m - 1:
            facets.add(s)
    sets = {s: affine_rank(V[sorted(s)], tol) for s in _close_under_intersection(facets, len(V))}
    return assemble([(V, sets, A, b)], hyperplanes)


def assemble(parts: Iterable[tuple[np.ndarray, Mapping[frozenset[int], int], np.ndarray, np.ndarray]],
             hyperplanes: Sequence[Hyperplane] = ()) -> IncidenceGraph:
    """
    Merge polytope pieces sharing faces into one lattice.

    Each part is (vertex coordinates, {local vertex set: dim}, A, b) where the
    largest set is the piece's cell with halfspaces ``A x <= b``. Coincident
    vertices are merged by tolerance and faces by their global vertex sets.
    """
    parts = list(parts)
    if not parts:
        raise EmptyPolytope("Nothing to assemble.")
    all_pts = np.vstack([np.atleast_2d(p[0]) for p in parts])
    tol = geo_tol(all_pts)
    points: list[np.ndarray] = []
    face_dims: dict[frozenset[int], int] = {}
    cell_regions: dict[frozenset[int], tuple[np.ndarray, np.ndarray]] = {}

    def global_id(x: np.ndarray) -> int:
        if points:
            dist = np.max(np.abs(np.asarray(points) - x), axis=1)
            j = int(np.argmin(dist))
            if dist[j] <= tol:
                return j
        points.append(np.asarray(x, dtype=float))
        return len(points) - 1

    for V, sets, A, b in parts:
        gids = [global_id(x) for x in np.atleast_2d(V)]
        top, top_dim = frozenset(), -1
        for s, dim in sets.items():
            key = frozenset(gids[i] for i in s)
            face_dims[key] = max(dim, face_dims.get(key, dim))
            if dim > top_dim or (dim == top_dim and len(key) > len(top)):
                top, top_dim = key, dim
        cell_regions[top] = (np.asarray(A, dtype=float), np.asarray(b, dtype=float))
    for gid in range(len(points)):
        face_dims.setdefault(frozenset({gid}), 0)

    P = np.asarray(points)
    order = sorted(face_dims, key=lambda s: (face_dims[s], sorted(s)))
    ids = {s: i for i, s in enumerate(order)}
    subs: dict[int, set[int]] = {i: set() for i in ids.values()}
    sups: dict[int, set[int]] = {i: set() for i in ids.values()}
    by_vertex: dict[tuple[int, int], list[frozenset[int]]] = {}
    for s in order:
        for v in s:
            by_vertex.setdefault((face_dims[s], v), []).append(s)
    for s in order:
        dim = face_dims[s]
        for sup in by_vertex.get((dim + 1, min(s)), []):
            if s < sup:
                subs[ids[sup]].add(ids[s])
                sups[ids[s]].add(ids[sup])

    on_plane = [np.abs(h.evaluate(P)) <= tol for h in hyperplanes]
    faces = []
    for s in order:
        verts = sorted(s)
        supported = frozenset(k for k, on in enumerate(on_plane) if on[verts].all())
        faces.append(Face(
            id=ids[s], dim=face_dims[s], vertices=frozenset(s),
            subfaces=frozenset(subs[ids[s]]), superfaces=frozenset(sups[ids[s]]),
            hyperplanes=supported, centroid=P[verts].mean(axis=0),
        ))
    regions = {ids[s]: reg for s, reg in cell_regions.items() if not sups[ids[s]]}
    return IncidenceGraph(
        points=P, faces=tuple(faces), hyperplanes=tuple(hyperplanes),
        carrier=Carrier.of(P, tol), regions=regions,
    )


__all__ = [
    "EPS_GEO",
    "Hyperplane",
    "Carrier",
    "Face",
    "IncidenceGraph",
    "geo_tol",
    "affine_rank",
    "dedupe",
    "build_polytope",
    "assemble",
]
