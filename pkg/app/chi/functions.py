"""
Piecewise chi functions and the star operator.

A chi function with top ``(tau1, tau2)`` is ``tau2 - |x - tau1|``. The value
functions of the tree solver are maxima of such tents restricted to closed
intervals; the star of several of them is

    (f1 * ... * fn)(z) = max { sum f_j(x_j) : sum x_j = z, x_j in dom f_j }.
"""

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from grid.flow import EPS_NUM
from utils.errors import EmptyDomain, InfeasibleTarget
from utils.logs import set_logger

from .intervals import IntervalSet, sum_is_connected


logger = set_logger(__name__)



@dataclass(frozen=True)
class ChiPiece:
    """
    ``tau2 - |x - tau1|`` on ``[lo, hi]`` with the top inside the interval.

    A piece whose top falls outside its interval is affine there; ``of``
    translates the top to the nearest endpoint along the active ray.
    """
    lo: float
    hi: float
    tau1: float
    tau2: float

    @classmethod
    def of(cls, lo: float, hi: float, tau1: float, tau2: float) -> "ChiPiece":
        lo, hi, tau1, tau2 = float(lo), float(hi), float(tau1), float(tau2)
        if hi < lo:
            raise ValueError(f"Piece interval [{lo}, {hi}] is reversed.")
        if tau1 > hi:
            return cls(lo, hi, hi, hi - tau1 + tau2)
        if tau1 < lo:
            return cls(lo, hi, lo, -lo + tau1 + tau2)
        return cls(lo, hi, tau1, tau2)

    @property
    def rise(self) -> float:
        """Intercept of the rising ray ``x + r``."""
        return self.tau2 - self.tau1

    @property
    def fall(self) -> float:
        """Intercept of the falling ray ``-x + f``."""
        return self.tau1 + self.tau2

    @property
    def is_point(self) -> bool:
        return self.hi - self.lo <= EPS_NUM

    def value(self, x: float) -> float:
        return self.tau2 - abs(x - self.tau1)

    def contains(self, x: float, tol: float = EPS_NUM) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def restrict(self, lo: float, hi: float) -> "ChiPiece | None":
        a, b = max(lo, self.lo), min(hi, self.hi)
        if a > b + EPS_NUM:
            return None
        return ChiPiece.of(a, max(a, b), self.tau1, self.tau2)

    def agrees_with(self, tau1: float, tau2: float, tol: float = 1e-9) -> bool:
        """True iff ``tau2 - |x - tau1|`` coincides with this piece on its interval."""
        points = {self.lo, self.hi, self.tau1, min(max(tau1, self.lo), self.hi)}
        return all(abs(self.value(x) - (tau2 - abs(x - tau1))) <= tol * (1.0 + abs(tau2)) for x in points)



@dataclass(frozen=True)
class PiecewiseChi:
    """
    Maximum of chi pieces on closed intervals.

    Pieces are sorted by their left end. Neighbouring pieces may share an
    endpoint and point pieces are allowed, so the function value at a shared
    endpoint is the larger of the two.
    """
    pieces: tuple[ChiPiece, ...]

    @classmethod
    def of(cls, pieces: Iterable[ChiPiece]) -> "PiecewiseChi":
        return cls(tuple(sorted(pieces, key=lambda p: (p.lo, p.hi))))

    @classmethod
    def chi(cls, X: IntervalSet, tau1: float, tau2: float) -> "PiecewiseChi":
        """One chi function restricted to every interval of X."""
        return cls.of(ChiPiece.of(a, b, tau1, tau2) for a, b in X)

    @classmethod
    def linear(cls, X: IntervalSet, sign: float) -> "PiecewiseChi":
        """``sign * x`` on X, for sign in {-1, 0, +1}."""
        pieces = []
        for a, b in X:
            if sign > 0:
                pieces.append(ChiPiece(a, b, b, b))
            elif sign < 0:
                pieces.append(ChiPiece(a, b, a, -a))
            elif b - a <= EPS_NUM:
                pieces.append(ChiPiece(a, b, a, 0.0))
            else:
                raise ValueError("A zero slope is only a chi function on a single point.")
        return cls.of(pieces)

    def __bool__(self) -> bool:
        return bool(self.pieces)

    def __len__(self) -> int:
        return len(self.pieces)

    def __call__(self, x: float) -> float:
        values = [p.value(x) for p in self.pieces if p.contains(x)]
        return max(values) if values else -np.inf

    def domain(self) -> IntervalSet:
        return IntervalSet.of((p.lo, p.hi) for p in self.pieces)

    def restrict(self, X: IntervalSet) -> "PiecewiseChi":
        out = []
        for p in self.pieces:
            for a, b in X:
                q = p.restrict(a, b)
                if q is not None:
                    out.append(q)
        return PiecewiseChi.of(out)

    @property
    def top(self) -> tuple[float, float]:
        """Highest top point."""
        if not self.pieces:
            raise EmptyDomain("Empty piecewise-chi function has no top.")
        best = max(self.pieces, key=lambda p: p.tau2)
        return best.tau1, best.tau2

    def __repr__(self) -> str:
        body = ", ".join(f"[{p.lo:.6g},{p.hi:.6g}]:({p.tau1:.6g},{p.tau2:.6g})" for p in self.pieces)
        return f"PiecewiseChi({body})"



@dataclass(frozen=True)
class Cluster:
    """Consecutive pieces of one input that are restrictions of a single chi with top ``(tau1, tau2)``."""
    pieces: tuple[ChiPiece, ...]
    tau1: float
    tau2: float

    @property
    def domain(self) -> IntervalSet:
        return IntervalSet.of((p.lo, p.hi) for p in self.pieces)



@dataclass(frozen=True)
class Subproblem:
    """One term of the pointwise maximum forming a star; ``output`` is its chi piece."""
    pieces: tuple[ChiPiece, ...]
    output: ChiPiece
    convexified: bool = False


# ---------- Clusters ----------
def _common_chi(pieces: Sequence[ChiPiece]) -> tuple[float, float] | None:
    candidates = [(p.tau1, p.tau2) for p in pieces]
    for a in pieces:
        for b in pieces:
            r, f = a.rise, b.fall
            candidates.append(((f - r) / 2.0, (f + r) / 2.0))
    ok = [c for c in candidates if all(p.agrees_with(*c) for p in pieces)]
    if not ok:
        return None
    inside = [c for c in ok if any(p.contains(c[0]) for p in pieces)]
    return (inside or ok)[0]


def clusters(g: PiecewiseChi) -> list[Cluster]:
    """Greedily merge consecutive pieces that share one chi function."""
    out: list[Cluster] = []
    current: list[ChiPiece] = []
    top: tuple[float, float] | None = None
    for piece in g.pieces:
        trial = _common_chi(current + [piece]) if current else (piece.tau1, piece.tau2)
        if trial is None:
            out.append(Cluster(tuple(current), *top))
            current, top = [piece], (piece.tau1, piece.tau2)
        else:
            current.append(piece)
            top = trial
    if current:
        out.append(Cluster(tuple(current), *top))
    return out


def _split_at(X: IntervalSet, tau1: float) -> tuple[IntervalSet, IntervalSet]:
    return X & IntervalSet.interval(min(X.lo, tau1), tau1), X & IntervalSet.interval(tau1, max(X.hi, tau1))


def convexifiable(group: Sequence[Cluster]) -> bool:
    """
    True iff the star over the clusters equals the chi with summed tops on the hull of the summed domains.

    Needs every top inside its cluster domain and connected sums of the parts left
    and right of the tops.
    """
    domains = [c.domain for c in group]
    if not all(X.contains(c.tau1) for X, c in zip(domains, group)):
        return False
    left, right = zip(*(_split_at(X, c.tau1) for X, c in zip(domains, group)))
    return sum_is_connected(list(left)) and sum_is_connected(list(right))


def _combine(pieces: Sequence[ChiPiece]) -> ChiPiece:
    return ChiPiece(
        sum(p.lo for p in pieces),
        sum(p.hi for p in pieces),
        sum(p.tau1 for p in pieces),
        sum(p.tau2 for p in pieces),
    )


def _as_function(item) -> PiecewiseChi:
    if isinstance(item, PiecewiseChi):
        return item
    g, X = item
    return g if X is None else g.restrict(X)


def plan_subproblems(inputs: Sequence) -> list[Subproblem]:
    """
    Decompose a star into chi subproblems.

    Each combination of clusters collapses to one subproblem when it is
    convexifiable, otherwise every combination of its pieces is a subproblem.
    """
    functions = [_as_function(item) for item in inputs]
    if not functions or any(not g for g in functions):
        return []
    plan: list[Subproblem] = []
    for group in itertools.product(*(clusters(g) for g in functions)):
        if convexifiable(group):
            tops = [ChiPiece(c.domain.lo, c.domain.hi, c.tau1, c.tau2) for c in group]
            plan.append(Subproblem(tuple(p for c in group for p in c.pieces), _combine(tops), True))
            continue
        for combo in itertools.product(*(c.pieces for c in group)):
            plan.append(Subproblem(tuple(combo), _combine(combo)))
    logger.debug(f"Star over {len(functions)} inputs planned as {len(plan)} subproblems")
    return plan


# ---------- Envelope ----------
def envelope(pieces: Sequence[ChiPiece], tol: float = 1e-9) -> PiecewiseChi:
    """Upper envelope of chi pieces as a piecewise chi function."""
    if not pieces:
        raise EmptyDomain("Envelope of no pieces.")
    points = {p.lo for p in pieces} | {p.hi for p in pieces} | {p.tau1 for p in pieces}
    for a in pieces:
        for b in pieces:
            x = (b.fall - a.rise) / 2.0
            if max(a.lo, b.lo) <= x <= min(a.hi, b.hi):
                points.add(x)
    grid = []
    for x in sorted(points):
        if not grid or x - grid[-1] > tol:
            grid.append(x)

    # (lo, hi, slope, intercept) of the winning ray on each covered segment
    segments: list[tuple[float, float, int, float]] = []
    for a, b in zip(grid, grid[1:]):
        mid = 0.5 * (a + b)
        live = [p for p in pieces if p.lo <= a + tol and p.hi >= b - tol]
        if not live:
            continue
        best = max(live, key=lambda p: p.value(mid))
        slope = 1 if mid < best.tau1 else -1
        segments.append((a, b, slope, best.rise if slope > 0 else best.fall))

    def limit(seg, x):
        return seg[2] * x + seg[3]

    out: list[ChiPiece] = []
    run: list[tuple[float, float, int, float]] = []

    def flush():
        if not run:
            return
        lo, hi = run[0][0], run[-1][1]
        rises = [s for s in run if s[2] > 0]
        falls = [s for s in run if s[2] < 0]
        if rises and falls:
            r, f = rises[0][3], falls[0][3]
            out.append(ChiPiece(lo, hi, (f - r) / 2.0, (f + r) / 2.0))
        elif rises:
            out.append(ChiPiece(lo, hi, hi, hi + rises[0][3]))
        else:
            out.append(ChiPiece(lo, hi, lo, -lo + falls[0][3]))
        run.clear()

    for seg in segments:
        if run:
            prev = run[-1]
            joined = abs(prev[1] - seg[0]) <= tol and abs(limit(prev, seg[0]) - limit(seg, seg[0])) <= tol * (1.0 + abs(limit(seg, seg[0])))
            if not joined or (prev[2] < 0 < seg[2]):
                flush()
        run.append(seg)
    flush()

    for x in grid:
        value = max((p.value(x) for p in pieces if p.contains(x, tol)), default=-np.inf)
        near = [limit(s, x) for s in segments if s[0] - tol <= x <= s[1] + tol]
        if not near or value > max(near) + tol * (1.0 + abs(value)):
            out.append(ChiPiece(x, x, x, value))
    return PiecewiseChi.of(out)


# ---------- Star ----------
def chi_star(inputs: Sequence) -> PiecewiseChi:
    """
    Star of piecewise chi functions.

    Args:
        inputs (Sequence): ``PiecewiseChi`` items or ``(PiecewiseChi, domain)``
            pairs; a domain restricts its function first.

    Returns:
        PiecewiseChi: The star, itself a piecewise chi function.

    Raises:
        EmptyDomain: Some input has an empty domain.
    """
    functions = [_as_function(item) for item in inputs]
    if len(functions) == 1 and functions[0]:
        return functions[0]
    plan = plan_subproblems(functions)
    if not plan:
        raise EmptyDomain("Star of functions with an empty domain.")
    return envelope([s.output for s in plan])


def chi_argmax_split(inputs: Sequence, z: float) -> list[float]:
    """
    One maximizer x of ``sum f_j(x_j)`` subject to ``sum x_j = z``.

    The best piece combination is located first; from its tops every
    coordinate then moves toward the same end of its interval by a common
    fraction, which keeps the objective at ``sum tau2 - |z - sum tau1|``.

    Raises:
        InfeasibleTarget: No combination of pieces reaches ``z``.
    """
    functions = [_as_function(item) for item in inputs]
    best: tuple[float, tuple[ChiPiece, ...]] | None = None
    for combo in itertools.product(*(g.pieces for g in functions)):
        total = _combine(combo)
        if not total.contains(z):
            continue
        value = total.value(z)
        if best is None or value > best[0] + EPS_NUM * (1.0 + abs(value)):
            best = (value, combo)
    if best is None:
        raise InfeasibleTarget(f"Total {z:.6g} is outside the star domain.")

    combo = best[1]
    anchor = sum(p.tau1 for p in combo)
    if z >= anchor:
        ends = [p.hi for p in combo]
        span, step = sum(ends) - anchor, z - anchor
    else:
        ends = [p.lo for p in combo]
        span, step = anchor - sum(ends), anchor - z
    gamma = min(1.0, step / span) if span > 0 else 0.0
    return [p.tau1 + gamma * (end - p.tau1) for p, end in zip(combo, ends)]


__all__ = [
    "ChiPiece",
    "PiecewiseChi",
    "Cluster",
    "Subproblem",
    "clusters",
    "convexifiable",
    "plan_subproblems",
    "envelope",
    "chi_star",
    "chi_argmax_split",
]
