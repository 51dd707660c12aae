"""Multi-indices and downward-closed index sets.

A multi-index is a plain tuple of non-negative ints. ``DownwardClosedSet``
keeps its members in lexicographic order and carries its reduced margin
along, so that greedy enrichment never has to rebuild it from scratch.
"""
from __future__ import annotations

from typing import Iterable, Iterator

MultiIndex = tuple[int, ...]


class DimensionError(ValueError):
    """Multi-index length does not match the ambient dimension."""


class NotInReducedMarginError(ValueError):
    """Insertion would break downward closure."""


def _check(alpha: Iterable[int], k: int) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != k:
        raise DimensionError(f"multi-index {alpha} has length {len(alpha)}, expected {k}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index {alpha} has a negative entry")
    return alpha


def zero(k: int) -> MultiIndex:
    return (0,) * k


def _bump(alpha: MultiIndex, l: int, step: int = 1) -> MultiIndex:
    return alpha[:l] + (alpha[l] + step,) + alpha[l + 1:]


def backward_neighbors(alpha: MultiIndex) -> list[MultiIndex]:
    """All ``alpha - e_l`` with ``alpha_l > 0``."""
    return [_bump(alpha, l, -1) for l, a in enumerate(alpha) if a > 0]


def is_downward_closed(members: Iterable[Iterable[int]], k: int) -> bool:
    """True iff every backward neighbor of every member is also a member.

    Checking immediate backward neighbors is enough: closure under single
    decrements implies closure under the componentwise order.
    """
    s = {_check(a, k) for a in members}
    return all(b in s for a in s for b in backward_neighbors(a))


class DownwardClosedSet:
    """Immutable downward-closed set of multi-indices in dimension ``dim``."""

    __slots__ = ("dim", "_members", "_lookup", "_reduced")

    def __init__(self, dim: int, members: Iterable[Iterable[int]] = ()):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        lookup = {_check(a, self.dim) for a in members}
        if not all(b in lookup for a in lookup for b in backward_neighbors(a)):
            raise ValueError("member set is not downward closed")
        self._lookup = frozenset(lookup)
        self._members = tuple(sorted(lookup))
        self._reduced = frozenset(_reduced_margin_scratch(self._lookup, self.dim))

    @classmethod
    def _from_parts(cls, dim, lookup, reduced):
        obj = cls.__new__(cls)
        obj.dim = dim
        obj._lookup = lookup
        obj._members = tuple(sorted(lookup))
        obj._reduced = reduced
        return obj

    @classmethod
    def total_degree(cls, dim: int, p: int) -> "DownwardClosedSet":
        """All multi-indices with ``|alpha|_1 <= p``."""
        if p < 0:
            raise ValueError("degree must be non-negative")
        return cls(dim, _simplex(dim, p))

    @classmethod
    def hypercube(cls, dim: int, p: int) -> "DownwardClosedSet":
        """All multi-indices with ``max(alpha) < p`` (width ``p``)."""
        return cls(dim, _box(dim, p))

    @property
    def members(self) -> tuple[MultiIndex, ...]:
        return self._members

    def __len__(self) -> int:
        return len(self._members)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self._members)

    def __contains__(self, alpha) -> bool:
        return tuple(alpha) in self._lookup

    def __eq__(self, other) -> bool:
        return (isinstance(other, DownwardClosedSet) and self.dim == other.dim
                and self._lookup == other._lookup)

    def __hash__(self) -> int:
        return hash((self.dim, self._lookup))

    def __repr__(self) -> str:
        return f"DownwardClosedSet(dim={self.dim}, members={list(self._members)})"

    def index(self, alpha) -> int:
        return self._members.index(tuple(alpha))

    def margin(self) -> list[MultiIndex]:
        """Indices outside the set with at least one backward neighbor inside.

        The empty set is given the zero index as its margin, so that a
        greedy search started from nothing has a candidate.
        """
        if not self._lookup:
            return [zero(self.dim)]
        out = {_bump(a, l) for a in self._lookup for l in range(self.dim)}
        return sorted(out - self._lookup)

    def reduced_margin(self) -> list[MultiIndex]:
        """Margin elements whose insertion keeps the set downward closed."""
        return sorted(self._reduced)

    def insert(self, alpha) -> "DownwardClosedSet":
        alpha = _check(alpha, self.dim)
        if alpha not in self._reduced:
            raise NotInReducedMarginError(
                f"{alpha} is not in the reduced margin of {self!r}")
        lookup = self._lookup | {alpha}
        reduced = set(self._reduced)
        reduced.discard(alpha)
        for l in range(self.dim):
            cand = _bump(alpha, l)
            if all(b in lookup for b in backward_neighbors(cand)):
                reduced.add(cand)
        return DownwardClosedSet._from_parts(self.dim, frozenset(lookup), frozenset(reduced))

    def max_degrees(self) -> tuple[int, ...]:
        """Largest degree per coordinate (zeros for the empty set)."""
        if not self._members:
            return zero(self.dim)
        return tuple(max(a[j] for a in self._members) for j in range(self.dim))


def _reduced_margin_scratch(lookup, dim: int) -> set[MultiIndex]:
    if not lookup:
        return {zero(dim)}
    out = set()
    for a in lookup:
        for l in range(dim):
            cand = _bump(a, l)
            if cand in lookup or cand in out:
                continue
            if all(b in lookup for b in backward_neighbors(cand)):
                out.add(cand)
    return out


def _simplex(dim: int, p: int) -> list[MultiIndex]:
    if dim == 1:
        return [(i,) for i in range(p + 1)]
    return [(i,) + rest for i in range(p + 1) for rest in _simplex(dim - 1, p - i)]


def _box(dim: int, p: int) -> list[MultiIndex]:
    if dim == 1:
        return [(i,) for i in range(p)]
    return [(i,) + rest for i in range(p) for rest in _box(dim - 1, p)]


def margin(s: DownwardClosedSet) -> list[MultiIndex]:
    return s.margin()


def reduced_margin(s: DownwardClosedSet) -> list[MultiIndex]:
    return s.reduced_margin()


def insert(s: DownwardClosedSet, alpha) -> DownwardClosedSet:
    return s.insert(alpha)
