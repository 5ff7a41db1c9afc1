"""Binary relations over finite ordered ground sets.

A relation is stored as one Python ``int`` per source point: bit ``b`` of
``rows[a]`` is set iff ``(a, b)`` is in the relation.  Composition, images
and transposition work row-wise on these bitsets.  For large grounds the
kernels decompose rows into runs of consecutive set bits and answer each
run with a range-OR sparse table, which keeps strip relations of metric
windows (one run per row) linear in the ground size.
"""

from __future__ import annotations

from typing import Hashable, Iterable, Iterator, Sequence

__all__ = [
    "GroundSet",
    "Relation",
    "GroundMismatch",
    "UnknownPoint",
    "RangeOr",
    "iter_bits",
    "iter_runs",
    "diagonal",
    "full",
    "empty",
    "inverse",
    "compose",
    "union",
    "intersection",
    "ball",
    "image",
]

# below this many points the plain per-bit loop beats building a sparse table
_SMALL = 64


class GroundMismatch(ValueError):
    pass


class UnknownPoint(KeyError):
    pass


def iter_bits(x: int) -> Iterator[int]:
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def iter_runs(x: int) -> Iterator[tuple[int, int]]:
    """Yield ``(lo, hi)`` for every maximal run of set bits, inclusive."""
    while x:
        low = x & -x
        run = x & ~(x + low)
        yield low.bit_length() - 1, run.bit_length() - 1
        x ^= run


class RangeOr:
    """Sparse table answering ``values[lo] | ... | values[hi]`` in two ORs.

    Levels are built lazily, only as far as the longest queried range.
    """

    def __init__(self, values: Sequence[int]):
        self._levels = [list(values)]

    def _grow(self, k: int) -> None:
        levels = self._levels
        while len(levels) <= k:
            prev = levels[-1]
            half = 1 << (len(levels) - 1)
            levels.append(list(map(int.__or__, prev[: len(prev) - half], prev[half:])))

    def query(self, lo: int, hi: int) -> int:
        k = (hi - lo + 1).bit_length() - 1
        if len(self._levels) <= k:
            self._grow(k)
        level = self._levels[k]
        return level[lo] | level[hi - (1 << k) + 1]

    def union_over(self, mask: int) -> int:
        levels = self._levels
        out = 0
        while mask:
            low = mask & -mask
            run = mask & ~(mask + low)
            mask ^= run
            lo = low.bit_length() - 1
            hi = run.bit_length() - 1
            k = (hi - lo + 1).bit_length() - 1
            if k and len(levels) <= k:
                self._grow(k)
            level = levels[k]
            out |= level[lo] | level[hi - (1 << k) + 1]
        return out


class GroundSet:
    """Immutable ordered set of distinct, hashable point labels."""

    __slots__ = ("points", "index", "_hash")

    def __init__(self, points: Iterable[Hashable]):
        pts = tuple(points)
        index = {p: i for i, p in enumerate(pts)}
        if len(index) != len(pts):
            seen = set()
            dup = next(p for p in pts if p in seen or seen.add(p))
            raise ValueError(f"duplicate point label {dup!r}")
        self.points = pts
        self.index = index
        self._hash = hash(pts)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, label) -> bool:
        return label in self.index

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, GroundSet):
            return NotImplemented
        return self._hash == other._hash and self.points == other.points

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        if len(self.points) <= 8:
            return f"GroundSet({list(self.points)!r})"
        return f"GroundSet(<{len(self.points)} points>)"

    @property
    def full_mask(self) -> int:
        return (1 << len(self.points)) - 1

    def position(self, label) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise UnknownPoint(label) from None

    def mask(self, labels: Iterable[Hashable]) -> int:
        m = 0
        for label in labels:
            m |= 1 << self.position(label)
        return m

    def labels(self, mask: int) -> list:
        return [self.points[i] for i in iter_bits(mask)]


class Relation:
    """A relation on a :class:`GroundSet`, as one bitset row per point."""

    __slots__ = ("ground", "rows", "_hash")

    def __init__(self, ground: GroundSet, rows: Sequence[int]):
        rows = tuple(rows)
        if len(rows) != len(ground):
            raise ValueError(f"expected {len(ground)} rows, got {len(rows)}")
        limit = ground.full_mask
        for r in rows:
            if r & ~limit:
                raise ValueError("row has bits outside the ground set")
        self.ground = ground
        self.rows = rows
        self._hash = None

    @classmethod
    def _raw(cls, ground: GroundSet, rows) -> "Relation":
        obj = cls.__new__(cls)
        obj.ground = ground
        obj.rows = tuple(rows)
        obj._hash = None
        return obj

    @classmethod
    def from_pairs(cls, ground: GroundSet, pairs: Iterable[tuple]) -> "Relation":
        rows = [0] * len(ground)
        for a, b in pairs:
            rows[ground.position(a)] |= 1 << ground.position(b)
        return cls._raw(ground, rows)

    @classmethod
    def from_index_pairs(cls, ground: GroundSet, pairs: Iterable[tuple[int, int]]) -> "Relation":
        n = len(ground)
        rows = [0] * n
        for a, b in pairs:
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"index pair {(a, b)} out of range")
            rows[a] |= 1 << b
        return cls._raw(ground, rows)

    def index_pairs(self) -> Iterator[tuple[int, int]]:
        for a, row in enumerate(self.rows):
            for b in iter_bits(row):
                yield a, b

    def pairs(self) -> Iterator[tuple]:
        pts = self.ground.points
        for a, b in self.index_pairs():
            yield pts[a], pts[b]

    def __len__(self) -> int:
        return sum(r.bit_count() for r in self.rows)

    def __contains__(self, pair) -> bool:
        a, b = pair
        idx = self.ground.index
        if a not in idx or b not in idx:
            return False
        return bool(self.rows[idx[a]] >> idx[b] & 1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return self.ground == other.ground and self.rows == other.rows

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ground, self.rows))
        return self._hash

    def __repr__(self) -> str:
        n = len(self)
        if n <= 12:
            return f"Relation({sorted(self.index_pairs())})"
        return f"Relation(<{n} pairs on {len(self.ground)} points>)"

    def _check(self, other: "Relation") -> None:
        if self.ground is not other.ground and self.ground != other.ground:
            raise GroundMismatch("relations live on different ground sets")

    def issubset(self, other: "Relation") -> bool:
        self._check(other)
        # stops at the first row that is not contained
        return all(map(int.__eq__, map(int.__or__, self.rows, other.rows), other.rows))

    __le__ = issubset

    def first_outside(self, other: "Relation") -> tuple[int, int] | None:
        """Index pair of ``self`` missing from ``other``, or None."""
        self._check(other)
        for a, (r, s) in enumerate(zip(self.rows, other.rows)):
            extra = r & ~s
            if extra:
                return a, (extra & -extra).bit_length() - 1
        return None

    def __or__(self, other: "Relation") -> "Relation":
        return union(self, other)

    def __and__(self, other: "Relation") -> "Relation":
        return intersection(self, other)

    def __matmul__(self, other: "Relation") -> "Relation":
        return compose(self, other)

    def inverse(self) -> "Relation":
        return inverse(self)

    def is_symmetric(self) -> bool:
        return self.rows == _transpose(self.rows, len(self.ground))

    def image_mask(self, mask: int) -> int:
        rows = self.rows
        out = 0
        for a in iter_bits(mask):
            out |= rows[a]
        return out


def diagonal(ground: GroundSet) -> Relation:
    return Relation._raw(ground, (1 << i for i in range(len(ground))))


def full(ground: GroundSet) -> Relation:
    m = ground.full_mask
    return Relation._raw(ground, [m] * len(ground))


def empty(ground: GroundSet) -> Relation:
    return Relation._raw(ground, [0] * len(ground))


def _transpose(rows: Sequence[int], n: int) -> tuple[int, ...]:
    # sweep over column events: row a toggles on at the start of each run
    # and off one past its end
    events = [0] * (n + 1)
    for a, row in enumerate(rows):
        bit = 1 << a
        for lo, hi in iter_runs(row):
            events[lo] ^= bit
            events[hi + 1] ^= bit
    out = []
    cur = 0
    for c in range(n):
        cur ^= events[c]
        out.append(cur)
    return tuple(out)


def inverse(E: Relation) -> Relation:
    return Relation._raw(E.ground, _transpose(E.rows, len(E.ground)))


def compose(E: Relation, F: Relation) -> Relation:
    """``{(a, b) : exists c with (a, c) in E and (c, b) in F}``."""
    E._check(F)
    frows = F.rows
    if len(frows) <= _SMALL:
        out = []
        for row in E.rows:
            acc = 0
            for c in iter_bits(row):
                acc |= frows[c]
            out.append(acc)
        return Relation._raw(E.ground, out)
    table = RangeOr(frows)
    return Relation._raw(E.ground, [table.union_over(row) for row in E.rows])


def union(E: Relation, F: Relation) -> Relation:
    E._check(F)
    return Relation._raw(E.ground, map(int.__or__, E.rows, F.rows))


def intersection(E: Relation, F: Relation) -> Relation:
    E._check(F)
    return Relation._raw(E.ground, map(int.__and__, E.rows, F.rows))


def ball(E: Relation, m) -> frozenset:
    """``E[m] = {m' : (m, m') in E}`` as a set of labels."""
    g = E.ground
    return frozenset(g.labels(E.rows[g.position(m)]))


def image(E: Relation, N: Iterable) -> frozenset:
    """``E[N]``: union of the balls around the points of ``N``."""
    g = E.ground
    return frozenset(g.labels(E.image_mask(g.mask(N))))
