"""Finite groups, group-ideal chains, and the coarse structures they generate.

Also holds the windowed models of the integers and of a real grid used to
compare discrete and continuous time inside a finite box.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

from .coarse_maps import (
    ControlFailure,
    ControlFunction,
    InverseReport,
    MapReport,
    PointMap,
    classify,
    closeness_scale,
    coarse_inverse_check,
)
from .coarse_space import CoarseSpace, from_line, make_filtered, membership_scale
from .relation_core import GroundSet, Relation, iter_bits

__all__ = [
    "FiniteGroup",
    "GroupError",
    "IdealChain",
    "cyclic",
    "direct_product",
    "tagged_pair_product",
    "symmetric",
    "klein",
    "validate_ideal_chain",
    "left_entourage",
    "right_entourage",
    "group_space",
    "left_coarse_group_check",
    "ideal_from_structure",
    "inversion_asymorphism_check",
    "finitary_ideal",
    "discrete_ideal",
    "free_rank",
    "subgroups",
    "WindowedLine",
    "windowed_line",
    "UnifiedReport",
    "unified_demo",
]


class GroupError(ValueError):
    pass


class FiniteGroup:
    """A group given by its Cayley table over an ordered element set."""

    def __init__(self, elements: Iterable[Hashable], table: Sequence[Sequence[int]]):
        self.elements = elements if isinstance(elements, GroundSet) else GroundSet(elements)
        n = len(self.elements)
        if n == 0:
            raise GroupError("a group needs at least one element")
        self.table = tuple(tuple(row) for row in table)
        if len(self.table) != n or any(len(r) != n for r in self.table):
            raise GroupError(f"Cayley table must be {n}x{n}")
        for row in self.table:
            for x in row:
                if not 0 <= x < n:
                    raise GroupError(f"table entry {x} out of range")
        t = self.table
        for a, b, c in itertools.product(range(n), repeat=3):
            if t[t[a][b]][c] != t[a][t[b][c]]:
                p = self.elements.points
                raise GroupError(f"not associative at ({p[a]!r}, {p[b]!r}, {p[c]!r})")
        ids = [e for e in range(n) if all(t[e][x] == x and t[x][e] == x for x in range(n))]
        if not ids:
            raise GroupError("no identity element")
        self.identity = ids[0]
        inv = []
        for a in range(n):
            cands = [b for b in range(n) if t[a][b] == self.identity and t[b][a] == self.identity]
            if not cands:
                raise GroupError(f"{self.elements.points[a]!r} has no inverse")
            inv.append(cands[0])
        self.inverse = tuple(inv)

    def __len__(self) -> int:
        return len(self.elements)

    def __repr__(self) -> str:
        return f"FiniteGroup(order={len(self)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteGroup):
            return NotImplemented
        return self.elements == other.elements and self.table == other.table

    def __hash__(self) -> int:
        return hash((self.elements, self.table))

    @property
    def e(self):
        return self.elements.points[self.identity]

    def mul(self, a, b):
        pos = self.elements.position
        return self.elements.points[self.table[pos(a)][pos(b)]]

    def inv(self, a):
        return self.elements.points[self.inverse[self.elements.position(a)]]

    def is_abelian(self) -> bool:
        t = self.table
        n = len(t)
        return all(t[a][b] == t[b][a] for a in range(n) for b in range(a + 1, n))

    def left_coset(self, g: int, hmask: int) -> int:
        row = self.table[g]
        out = 0
        for h in iter_bits(hmask):
            out |= 1 << row[h]
        return out

    def right_coset(self, hmask: int, g: int) -> int:
        t = self.table
        out = 0
        for h in iter_bits(hmask):
            out |= 1 << t[h][g]
        return out

    def product_mask(self, amask: int, bmask: int) -> int:
        out = 0
        for a in iter_bits(amask):
            out |= self.left_coset(a, bmask)
        return out

    def inverse_mask(self, mask: int) -> int:
        out = 0
        for a in iter_bits(mask):
            out |= 1 << self.inverse[a]
        return out

    def order_of(self, a: int) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.table[x][a]
            k += 1
        return k


def cyclic(n: int) -> FiniteGroup:
    return FiniteGroup(range(n), [[(a + b) % n for b in range(n)] for a in range(n)])


def direct_product(G: FiniteGroup, H: FiniteGroup) -> FiniteGroup:
    """Pairs ``(g, h)`` with the componentwise operation."""
    pairs = [(a, b) for a in range(len(G)) for b in range(len(H))]
    labels = [(G.elements.points[a], H.elements.points[b]) for a, b in pairs]
    nh = len(H)
    table = [
        [G.table[a][c] * nh + H.table[b][d] for c, d in pairs]
        for a, b in pairs
    ]
    return FiniteGroup(labels, table)


def tagged_pair_product(G: FiniteGroup, H: FiniteGroup) -> FiniteGroup:
    """Direct product labelled ``((1, g), (2, h))``, as the coproduct time group is written."""
    P = direct_product(G, H)
    labels = [((1, g), (2, h)) for g, h in P.elements.points]
    return FiniteGroup(labels, P.table)


def klein() -> FiniteGroup:
    return direct_product(cyclic(2), cyclic(2))


def symmetric(n: int) -> FiniteGroup:
    """Permutations of ``range(n)`` as tuples; ``p * q`` applies ``q`` first."""
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[tuple(p[q[i]] for i in range(n))] for q in perms] for p in perms]
    return FiniteGroup(perms, table)


def subgroups(G: FiniteGroup) -> list[int]:
    """All subgroups as element masks, sorted by size then mask."""
    found = set()

    def closure(mask: int) -> int:
        mask |= 1 << G.identity
        while True:
            nxt = mask | G.product_mask(mask, mask) | G.inverse_mask(mask)
            if nxt == mask:
                return mask
            mask = nxt

    frontier = [closure(0)]
    found.add(frontier[0])
    while frontier:
        new = []
        for H in frontier:
            for g in range(len(G)):
                if not H >> g & 1:
                    K = closure(H | 1 << g)
                    if K not in found:
                        found.add(K)
                        new.append(K)
        frontier = new
    return sorted(found, key=lambda m: (m.bit_count(), m))


def free_rank(G: FiniteGroup) -> int:
    """Free rank of a finite abelian group: zero, since every element has finite order."""
    if not G.is_abelian():
        raise GroupError("free rank is defined here for abelian groups only")
    # an independent element would need infinite order
    assert all(G.order_of(a) <= len(G) for a in range(len(G)))
    return 0


@dataclass(frozen=True)
class IdealChain:
    """Normalized chain ``H_0 <= ... <= H_t`` of subsets generating a group ideal."""

    group: FiniteGroup
    masks: tuple[int, ...]

    @property
    def chain(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(self.group.elements.labels(m)) for m in self.masks)

    @property
    def top(self) -> int:
        return self.masks[-1]

    def __len__(self) -> int:
        return len(self.masks)

    def labels(self) -> list[list]:
        return [self.group.elements.labels(m) for m in self.masks]


def validate_ideal_chain(G: FiniteGroup, chain: Iterable[Iterable]) -> IdealChain:
    """Normalize subsets into an ideal chain.

    Each ``H`` becomes ``H | H^-1 | {e}``, prefix unions enforce
    monotonicity, and products of the top with itself are appended until
    the top is a subgroup.
    """
    subsets = [G.elements.mask(H) for H in chain]
    if not subsets:
        raise GroupError("an ideal chain needs at least one subset")
    e = 1 << G.identity
    masks = []
    acc = e
    for H in subsets:
        acc |= H | G.inverse_mask(H)
        masks.append(acc)
    top = masks[-1]
    while True:
        nxt = G.product_mask(top, top)
        if nxt == top:
            break
        masks.append(nxt)
        top = nxt
    return IdealChain(G, tuple(masks))


def discrete_ideal(G: FiniteGroup) -> IdealChain:
    return IdealChain(G, (1 << G.identity,))


def finitary_ideal(G: FiniteGroup) -> IdealChain:
    """All finite subsets; on a finite group this is every subset, so the
    structure coincides with the bounded one."""
    e = 1 << G.identity
    full = G.elements.full_mask
    return IdealChain(G, (e,) if full == e else (e, full))


def left_entourage(G: FiniteGroup, H: Iterable | int) -> Relation:
    """``E_H = union over g of {g} x gH``; its ball at ``g`` is ``gH``."""
    hmask = H if isinstance(H, int) else G.elements.mask(H)
    return Relation(G.elements, [G.left_coset(g, hmask) for g in range(len(G))])


def right_entourage(G: FiniteGroup, H: Iterable | int) -> Relation:
    """``union over g of {g} x Hg``."""
    hmask = H if isinstance(H, int) else G.elements.mask(H)
    return Relation(G.elements, [G.right_coset(hmask, g) for g in range(len(G))])


def group_space(I: IdealChain, side: str = "left") -> CoarseSpace:
    G = I.group
    build = {"left": left_entourage, "right": right_entourage}[side]
    return make_filtered(G.elements, [build(G, H) for H in I.masks], "group", {"ideal": I, "side": side})


def _translate(G: FiniteGroup, g: int, E: Relation) -> Relation:
    row = G.table[g]
    rows = [0] * len(G)
    for a, r in enumerate(E.rows):
        out = 0
        for b in iter_bits(r):
            out |= 1 << row[b]
        rows[row[a]] |= out
    return Relation._raw(G.elements, rows)


def left_coarse_group_check(G: FiniteGroup, X: CoarseSpace) -> ControlFunction | ControlFailure:
    """For each scale, least scale containing every left shift of it.

    A failure reports the scale, the offending shift ``g`` and a shifted
    pair outside the top of the chain.
    """
    if X.ground != G.elements:
        raise GroupError("space is not on the group's elements")
    table = []
    for i, E in enumerate(X.chain):
        worst = 0
        for g in range(len(G)):
            shifted = _translate(G, g, E)
            j = membership_scale(X, shifted)
            if j is None:
                a, b = shifted.first_outside(X.top)
                p = G.elements.points
                return ControlFailure(i, (p[g], (p[a], p[b])))
            worst = max(worst, j)
        table.append(worst)
    return ControlFunction(tuple(table))


def ideal_from_structure(G: FiniteGroup, X: CoarseSpace) -> IdealChain:
    """Recover the ideal chain as the balls ``E_i[e]``."""
    ctl = left_coarse_group_check(G, X)
    if not ctl:
        raise GroupError(f"not a left coarse group: shift {ctl.pair[0]!r} breaks scale {ctl.index}")
    e = G.identity
    return validate_ideal_chain(G, [G.elements.labels(E.rows[e]) for E in X.chain])


def inversion_asymorphism_check(I: IdealChain) -> MapReport:
    """Classify ``g -> g^-1`` from the left structure to the right structure."""
    G = I.group
    j = PointMap(G.elements, G.elements, G.inverse)
    return classify(j, group_space(I, "left"), group_space(I, "right"))


@dataclass(frozen=True)
class WindowedLine:
    """Lattice points of ``[-half_width, half_width]`` with spacing ``step``.

    A finite window, not the group itself: maps used on it (inclusion,
    floor) never leave the window.
    """

    kind: str
    half_width: Fraction
    step: Fraction
    values: tuple[Fraction, ...]


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def windowed_line(
    kind: str,
    half_width,
    step=1,
    scales: Sequence = (1, 2, 4, 8),
) -> tuple[WindowedLine, CoarseSpace]:
    kind = kind.upper()
    if kind not in ("INTEGER", "GRID"):
        raise ValueError(f"unknown window kind {kind!r}")
    hw, st = _exact(half_width), _exact(step)
    if hw <= 0 or st <= 0:
        raise ValueError("half width and step must be positive")
    if kind == "INTEGER":
        if st != 1:
            raise ValueError("an INTEGER window has step 1")
        if hw.denominator != 1:
            raise ValueError("an INTEGER window needs an integral half width")
    count = hw / st
    if count.denominator != 1:
        raise ValueError(f"step {st} does not divide half width {hw}")
    k = int(count)
    values = tuple(i * st for i in range(-k, k + 1))
    labels = [int(v) for v in values] if kind == "INTEGER" else list(values)
    ground = GroundSet(labels)
    space = from_line(ground, values, [_exact(r) for r in scales])
    return WindowedLine(kind, hw, st, values), space


@dataclass(frozen=True)
class UnifiedReport:
    half_width: Fraction
    step: Fraction
    floor_after_inclusion_is_identity: bool
    floor_after_inclusion_scale: int | None
    inclusion_after_floor_scale: int | None
    inclusion: MapReport
    floor: MapReport
    inverse_check: InverseReport

    @property
    def ok(self) -> bool:
        return (
            self.floor_after_inclusion_is_identity
            and self.inclusion.coarse_equivalence
            and self.floor.coarse_equivalence
            and self.inverse_check.ok
        )


def unified_demo(half_width, step, scales: Sequence = (1, 2, 4, 8)) -> UnifiedReport:
    """Compare the integer window with a real grid through inclusion and floor."""
    st = _exact(step)
    if st > 1:
        raise ValueError("grid step must be at most 1")
    if (1 / st).denominator != 1:
        raise ValueError("grid must contain every integer of the window")
    _, Z = windowed_line("INTEGER", half_width, 1, scales)
    _, R = windowed_line("GRID", half_width, st, scales)
    inc = PointMap.from_function(Z.ground, R.ground, Fraction)
    flo = PointMap.from_function(R.ground, Z.ground, math.floor)
    fi = inc.then(flo)
    inc_report = classify(inc, Z, R)
    floor_report = classify(flo, R, Z)
    return UnifiedReport(
        half_width=_exact(half_width),
        step=st,
        floor_after_inclusion_is_identity=fi == PointMap.identity(Z.ground),
        floor_after_inclusion_scale=closeness_scale(fi, PointMap.identity(Z.ground), Z),
        inclusion_after_floor_scale=closeness_scale(flo.then(inc), PointMap.identity(R.ground), R),
        inclusion=inc_report,
        floor=floor_report,
        inverse_check=coarse_inverse_check(
            inc, flo, Z, R, inc_report.bornologous_ctl, floor_report.bornologous_ctl
        ),
    )
