"""Maps between coarse spaces: closeness, control functions and classification.

Every "for every entourage" clause is evaluated on chain elements only,
which is enough because membership is closed under subsets.  Negative
verdicts always carry a concrete pair so they can be re-checked by hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .coarse_space import CoarseSpace, membership_scale, subspace
from .relation_core import GroundMismatch, GroundSet, RangeOr, Relation, iter_bits

__all__ = [
    "PointMap",
    "ControlFunction",
    "ControlFailure",
    "MapReport",
    "InverseReport",
    "closeness_scale",
    "bornologous_control",
    "effectively_proper_control",
    "is_large",
    "classify",
    "coarse_inverse_check",
    "coarse_inverse_candidate",
    "is_asymorphism_by_inverse",
    "is_asymorphic_embedding_by_restriction",
    "is_coarse_equivalence_by_inverse",
]


class PointMap:
    """A total map between two ground sets, stored as an index table."""

    __slots__ = ("source", "target", "table", "_images", "_fibers")

    def __init__(self, source: GroundSet, target: GroundSet, table: Sequence[int]):
        table = tuple(table)
        if len(table) != len(source):
            raise ValueError(f"map table has {len(table)} entries for {len(source)} points")
        n = len(target)
        for t in table:
            if not 0 <= t < n:
                raise ValueError(f"map target index {t} out of range")
        self.source = source
        self.target = target
        self.table = table
        self._images = None
        self._fibers = None

    @classmethod
    def from_dict(cls, source: GroundSet, target: GroundSet, assign: Mapping) -> "PointMap":
        missing = [p for p in source.points if p not in assign]
        if missing:
            raise ValueError(f"map is not total: no image for {missing[0]!r}")
        return cls(source, target, [target.position(assign[p]) for p in source.points])

    @classmethod
    def from_function(cls, source: GroundSet, target: GroundSet, fn: Callable) -> "PointMap":
        return cls(source, target, [target.position(fn(p)) for p in source.points])

    @classmethod
    def identity(cls, ground: GroundSet) -> "PointMap":
        return cls(ground, ground, range(len(ground)))

    def __call__(self, label):
        return self.target.points[self.table[self.source.position(label)]]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointMap):
            return NotImplemented
        return self.source == other.source and self.target == other.target and self.table == other.table

    def __hash__(self) -> int:
        return hash(self.table)

    def __repr__(self) -> str:
        if len(self.table) <= 8:
            pts = self.source.points
            return f"PointMap({ {p: self(p) for p in pts} })"
        return f"PointMap(<{len(self.table)} points>)"

    def as_dict(self) -> dict:
        tp = self.target.points
        return {p: tp[t] for p, t in zip(self.source.points, self.table)}

    def is_injective(self) -> bool:
        return len(set(self.table)) == len(self.table)

    def is_surjective(self) -> bool:
        return len(set(self.table)) == len(self.target)

    def is_bijective(self) -> bool:
        return len(self.source) == len(self.target) and self.is_injective()

    def inverse(self) -> "PointMap":
        if not self.is_bijective():
            raise ValueError("only bijections have an inverse map")
        inv = [0] * len(self.table)
        for a, b in enumerate(self.table):
            inv[b] = a
        return PointMap(self.target, self.source, inv)

    def then(self, other: "PointMap") -> "PointMap":
        """``other o self``."""
        if self.target != other.source:
            raise GroundMismatch("maps do not compose")
        t = other.table
        return PointMap(self.source, other.target, [t[x] for x in self.table])

    def image_mask(self, mask: int) -> int:
        if self._images is None:
            self._images = RangeOr([1 << t for t in self.table])
        return self._images.union_over(mask) if mask else 0

    def preimage_mask(self, mask: int) -> int:
        if self._fibers is None:  # built on first use, also by push
            fibers = [0] * len(self.target)
            for a, t in enumerate(self.table):
                fibers[t] |= 1 << a
            self._fibers = RangeOr(fibers)
        return self._fibers.union_over(mask) if mask else 0

    def push(self, E: Relation) -> Relation:
        """``(f x f)(E)``."""
        if E.ground != self.source:
            raise GroundMismatch("relation is not on the map's source")
        self.preimage_mask(0)
        fibers = self._fibers._levels[0]
        erows = E.rows
        rows = []
        for fiber in fibers:
            acc = 0
            for a in iter_bits(fiber):
                acc |= erows[a]
            rows.append(self.image_mask(acc))
        return Relation._raw(self.target, rows)

    def pull(self, F: Relation) -> Relation:
        """``(f x f)^-1(F)``."""
        if F.ground != self.target:
            raise GroundMismatch("relation is not on the map's target")
        cache: dict[int, int] = {}
        rows = []
        for t in self.table:
            r = cache.get(t)
            if r is None:
                r = cache[t] = self.preimage_mask(F.rows[t])
            rows.append(r)
        return Relation._raw(self.source, rows)


@dataclass(frozen=True)
class ControlFunction:
    """Scale table ``i -> table[i]`` witnessing a forward or backward control."""

    table: tuple[int, ...]

    def __post_init__(self):
        if any(b < a for a, b in zip(self.table, self.table[1:])):
            raise ValueError(f"control table {self.table} is not monotone")

    def __bool__(self) -> bool:
        return True

    def __call__(self, i: int) -> int:
        return self.table[min(i, len(self.table) - 1)]

    def is_identity(self) -> bool:
        return self.table == tuple(range(len(self.table)))


@dataclass(frozen=True)
class ControlFailure:
    """No chain element contains the image of scale ``index``; ``pair`` is outside every one."""

    index: int
    pair: tuple

    def __bool__(self) -> bool:
        return False


def _outside_top(R: Relation, top: Relation) -> tuple:
    a, b = R.first_outside(top)
    pts = R.ground.points
    return pts[a], pts[b]


def closeness_scale(f: PointMap, g: PointMap, Y: CoarseSpace) -> int | None:
    """Scale of ``{(f(k), g(k))}`` in ``Y``; None when ``f`` and ``g`` are not close."""
    if f.source != g.source:
        raise GroundMismatch("maps have different domains")
    if f.target != Y.ground or g.target != Y.ground:
        raise GroundMismatch("maps do not land in the space")
    rows = [0] * len(Y.ground)
    for a, b in zip(f.table, g.table):
        rows[a] |= 1 << b
    return membership_scale(Y, Relation._raw(Y.ground, rows))


def _check_domains(f: PointMap, X: CoarseSpace, Y: CoarseSpace) -> None:
    if f.source != X.ground or f.target != Y.ground:
        raise GroundMismatch("map does not run between the given spaces")


def bornologous_control(f: PointMap, X: CoarseSpace, Y: CoarseSpace) -> ControlFunction | ControlFailure:
    _check_domains(f, X, Y)
    table = []
    for i, E in enumerate(X.chain):
        img = f.push(E)
        j = membership_scale(Y, img, table[-1] if table else 0)
        if j is None:
            return ControlFailure(i, _outside_top(img, Y.top))
        table.append(j)
    return ControlFunction(tuple(table))


def effectively_proper_control(f: PointMap, X: CoarseSpace, Y: CoarseSpace) -> ControlFunction | ControlFailure:
    _check_domains(f, X, Y)
    table = []
    for j, F in enumerate(Y.chain):
        pre = f.pull(F)
        i = membership_scale(X, pre, table[-1] if table else 0)
        if i is None:
            return ControlFailure(j, _outside_top(pre, X.top))
        table.append(i)
    return ControlFunction(tuple(table))


def is_large(A: Iterable, X: CoarseSpace) -> int | None:
    """Least scale whose image of ``A`` covers the space, or None."""
    mask = X.ground.mask(A)
    want = X.ground.full_mask
    for i, E in enumerate(X.chain):
        if E.image_mask(mask) == want:
            return i
    return None


@dataclass(frozen=True)
class MapReport:
    bornologous_ctl: ControlFunction | ControlFailure
    effectively_proper_ctl: ControlFunction | ControlFailure
    injective: bool
    bijective: bool
    large_image_scale: int | None
    closeness_to_identity: int | None = None

    @property
    def bornologous(self) -> bool:
        return bool(self.bornologous_ctl)

    @property
    def effectively_proper(self) -> bool:
        return bool(self.effectively_proper_ctl)

    @property
    def asymorphism(self) -> bool:
        return self.bijective and self.bornologous and self.effectively_proper

    @property
    def asymorphic_embedding(self) -> bool:
        return self.injective and self.bornologous and self.effectively_proper

    @property
    def coarse_equivalence(self) -> bool:
        return self.bornologous and self.effectively_proper and self.large_image_scale is not None

    def flags(self) -> dict[str, bool]:
        return {
            "bornologous": self.bornologous,
            "effectivelyProper": self.effectively_proper,
            "asymorphism": self.asymorphism,
            "asymorphicEmbedding": self.asymorphic_embedding,
            "coarseEquivalence": self.coarse_equivalence,
        }


def classify(f: PointMap, X: CoarseSpace, Y: CoarseSpace) -> MapReport:
    _check_domains(f, X, Y)
    closeness = None
    if X.ground == Y.ground:
        closeness = closeness_scale(f, PointMap.identity(Y.ground), Y)
    image = Y.ground.labels(f.image_mask(X.ground.full_mask))
    return MapReport(
        bornologous_ctl=bornologous_control(f, X, Y),
        effectively_proper_ctl=effectively_proper_control(f, X, Y),
        injective=f.is_injective(),
        bijective=f.is_bijective(),
        large_image_scale=is_large(image, Y),
        closeness_to_identity=closeness,
    )


@dataclass(frozen=True)
class InverseReport:
    gf_scale: int | None
    fg_scale: int | None
    f_control: ControlFunction | ControlFailure
    g_control: ControlFunction | ControlFailure

    @property
    def ok(self) -> bool:
        return (
            self.gf_scale is not None
            and self.fg_scale is not None
            and bool(self.f_control)
            and bool(self.g_control)
        )


def coarse_inverse_check(
    f: PointMap,
    g: PointMap,
    X: CoarseSpace,
    Y: CoarseSpace,
    f_control: ControlFunction | ControlFailure | None = None,
    g_control: ControlFunction | ControlFailure | None = None,
) -> InverseReport:
    """Check that ``g`` is a coarse inverse of ``f`` (both bornologous, both composites close to the identity).

    Already computed bornologous controls may be passed in to skip recomputation.
    """
    _check_domains(f, X, Y)
    _check_domains(g, Y, X)
    return InverseReport(
        gf_scale=closeness_scale(f.then(g), PointMap.identity(X.ground), X),
        fg_scale=closeness_scale(g.then(f), PointMap.identity(Y.ground), Y),
        f_control=f_control if f_control is not None else bornologous_control(f, X, Y),
        g_control=g_control if g_control is not None else bornologous_control(g, Y, X),
    )


def coarse_inverse_candidate(f: PointMap, X: CoarseSpace, Y: CoarseSpace) -> PointMap | None:
    """Pick, for each target point, a source point whose image is nearest to it.

    Returns None if some target point is not reachable from the image at any
    scale (then no coarse inverse exists).
    """
    _check_domains(f, X, Y)
    chain = Y.chain
    out = []
    for y in range(len(Y.ground)):
        choice = None
        for E in chain:
            near = f.preimage_mask(E.rows[y])
            if near:
                choice = (near & -near).bit_length() - 1
                break
        if choice is None:
            return None
        out.append(choice)
    return PointMap(Y.ground, X.ground, out)


def is_asymorphism_by_inverse(f: PointMap, X: CoarseSpace, Y: CoarseSpace) -> bool:
    """Bijective with ``f`` and ``f^-1`` both bornologous."""
    if not f.is_bijective():
        return False
    return bool(bornologous_control(f, X, Y)) and bool(bornologous_control(f.inverse(), Y, X))


def is_asymorphic_embedding_by_restriction(f: PointMap, X: CoarseSpace, Y: CoarseSpace) -> bool:
    """Corestriction of ``f`` onto its image, with the subspace structure, is an asymorphism."""
    if not f.is_injective():
        return False
    image_mask = f.image_mask(X.ground.full_mask)
    Z = subspace(Y, Y.ground.labels(image_mask))
    g = PointMap(X.ground, Z.ground, [Z.ground.position(Y.ground.points[t]) for t in f.table])
    return is_asymorphism_by_inverse(g, X, Z)


def is_coarse_equivalence_by_inverse(f: PointMap, X: CoarseSpace, Y: CoarseSpace) -> bool:
    """Bornologous with a bornologous coarse inverse.

    The candidate from :func:`coarse_inverse_candidate` succeeds whenever
    any coarse inverse exists: a valid inverse must send each target point
    into the preimage of its own top-class, and the candidate does.
    """
    if not bornologous_control(f, X, Y):
        return False
    g = coarse_inverse_candidate(f, X, Y)
    if g is None:
        return False
    return coarse_inverse_check(f, g, X, Y).ok
