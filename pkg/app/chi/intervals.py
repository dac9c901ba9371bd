"""Finite unions of closed intervals on the real line."""

from dataclasses import dataclass
from typing import Iterable, Sequence

from grid.flow import EPS_NUM
from utils.logs import set_logger


logger = set_logger(__name__)



@dataclass(frozen=True)
class IntervalSet:
    """
    Sorted, pairwise disjoint closed intervals; overlapping or touching inputs are merged.
    """
    intervals: tuple[tuple[float, float], ...] = ()

    @classmethod
    def of(cls, intervals: Iterable[Sequence[float]], tol: float = EPS_NUM) -> "IntervalSet":
        items = sorted((float(a), float(b)) for a, b in intervals)
        merged: list[list[float]] = []
        for a, b in items:
            if b < a:
                raise ValueError(f"Interval [{a}, {b}] is reversed.")
            if merged and a <= merged[-1][1] + tol:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return cls(tuple((a, b) for a, b in merged))

    @classmethod
    def interval(cls, a: float, b: float) -> "IntervalSet":
        return cls.of([(min(a, b), max(a, b))])

    @classmethod
    def point(cls, x: float) -> "IntervalSet":
        return cls.of([(x, x)])

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    # ---- shape ----
    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]

    @property
    def width(self) -> float:
        """max X - min X."""
        return self.hi - self.lo if self else 0.0

    @property
    def gaps(self) -> list[float]:
        return [b[0] - a[1] for a, b in zip(self.intervals, self.intervals[1:])]

    @property
    def max_gap(self) -> float:
        return max(self.gaps, default=0.0)

    def is_connected(self) -> bool:
        return len(self.intervals) <= 1

    def hull(self) -> "IntervalSet":
        return IntervalSet.interval(self.lo, self.hi) if self else self

    def contains(self, x: float, tol: float = EPS_NUM) -> bool:
        return any(a - tol <= x <= b + tol for a, b in self.intervals)

    # ---- algebra ----
    def __add__(self, other: "IntervalSet") -> "IntervalSet":
        """Minkowski sum."""
        if not self or not other:
            return IntervalSet.empty()
        return IntervalSet.of((a + c, b + d) for a, b in self for c, d in other)

    def __neg__(self) -> "IntervalSet":
        return IntervalSet.of((-b, -a) for a, b in self)

    def __or__(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet.of(self.intervals + other.intervals)

    def __and__(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for a, b in self:
            for c, d in other:
                lo, hi = max(a, c), min(b, d)
                if lo <= hi + EPS_NUM:
                    out.append((lo, max(lo, hi)))
        return IntervalSet.of(out)

    def clip(self, lo: float, hi: float) -> "IntervalSet":
        return self & IntervalSet.interval(lo, hi)

    def symmetric(self) -> "IntervalSet":
        """X union -X."""
        return self | -self

    def __repr__(self) -> str:
        if not self:
            return "{}"
        return " U ".join(f"[{a:.6g}, {b:.6g}]" for a, b in self)


def minkowski_sum(sets: Iterable[IntervalSet]) -> IntervalSet:
    total = IntervalSet.point(0.0)
    for X in sets:
        total = total + X
    return total


def gap_condition_connected(sets: Sequence[IntervalSet]) -> bool:
    """
    Sufficient condition for a connected Minkowski sum.

    With the sets ordered by their largest gap, the first must be an interval
    and every next largest gap may not exceed the total width accumulated so far.
    """
    if any(not X for X in sets):
        return False
    ordered = sorted(sets, key=lambda X: X.max_gap)
    if not ordered or not ordered[0].is_connected():
        return False
    width = 0.0
    for prev, nxt in zip(ordered, ordered[1:]):
        width += prev.width
        if nxt.max_gap > width + EPS_NUM:
            return False
    return True


def self_sum_connected(X: IntervalSet, n: int) -> bool:
    """
    Sufficient condition for the n-fold sum X + ... + X to be connected:
    n >= 1 + max_j gap_j / min(|X_j|, |X_j+1|).
    """
    if not X:
        return False
    if X.is_connected():
        return True
    need = 1.0
    for (a, b), (c, d), gap in zip(X.intervals, X.intervals[1:], X.gaps):
        shortest = min(b - a, d - c)
        if shortest <= 0.0:
            return False
        need = max(need, 1.0 + gap / shortest)
    return n >= need - EPS_NUM


def sum_is_connected(sets: Sequence[IntervalSet]) -> bool:
    """Connectivity of the Minkowski sum, trying the sufficient conditions before the exact sum."""
    if gap_condition_connected(sets):
        return True
    if sets and all(X == sets[0] for X in sets) and self_sum_connected(sets[0], len(sets)):
        return True
    return minkowski_sum(sets).is_connected()


__all__ = [
    "IntervalSet",
    "minkowski_sum",
    "gap_condition_connected",
    "self_sum_connected",
    "sum_is_connected",
]
