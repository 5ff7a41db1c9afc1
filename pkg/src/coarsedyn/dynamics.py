"""Coarse dynamical systems with coarse time.

A system is a coarse space, a time group with an ideal chain (and
optionally a set-valued operation), and one self-map of the space per time
element.  Validation, conjugacy checking and the constructions on systems
(inverse, composite and coproduct conjugacies, sub-systems) all return
verified objects or raise/report with a concrete witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .coarse_group import (
    FiniteGroup,
    IdealChain,
    group_space,
    tagged_pair_product,
    validate_ideal_chain,
)
from .coarse_maps import MapReport, PointMap, classify
from .coarse_space import CoarseSpace, coproduct, subspace
from .relation_core import GroundSet, iter_bits

__all__ = [
    "TimeGroup",
    "CoarseDynamicalSystem",
    "Verdict",
    "Conjugacy",
    "ConjugacyError",
    "Orbit",
    "validate_cds",
    "orbit",
    "check_conjugacy",
    "identity_conjugacy",
    "inverse_conjugacy",
    "compose_conjugacy",
    "orbit_preservation_check",
    "coproduct_cds",
    "coproduct_conjugacy",
    "sub_cds",
]


class ConjugacyError(RuntimeError):
    """A construction that must yield a conjugacy failed re-verification."""


class TimeGroup:
    """Group of times with its ideal chain and operation ``g1 * g2``.

    By default ``g1 * g2`` is the singleton of the table product.  A
    set-valued operation maps index pairs to nonempty index sets.
    """

    def __init__(self, ideal: IdealChain, hyperop: Mapping[tuple[int, int], Iterable[int]] | None = None):
        self.ideal = ideal
        G = ideal.group
        self.group = G
        n = len(G)
        if hyperop is None:
            self.hyperop = None
        else:
            ops = {}
            for a in range(n):
                for b in range(n):
                    vals = frozenset(hyperop.get((a, b), ()))
                    if not vals:
                        p = G.elements.points
                        raise ValueError(f"operation {p[a]!r} * {p[b]!r} is empty or missing")
                    if any(not 0 <= v < n for v in vals):
                        raise ValueError("operation value outside the group")
                    ops[a, b] = vals
            for g in range(n):
                if g not in ops[G.identity, g] or g not in ops[g, G.identity]:
                    raise ValueError(f"identity does not act as a unit on {G.elements.points[g]!r}")
            self.hyperop = ops

    @property
    def set_valued(self) -> bool:
        return self.hyperop is not None

    def star(self, a: int, b: int) -> frozenset[int]:
        if self.hyperop is None:
            return frozenset((self.group.table[a][b],))
        return self.hyperop[a, b]

    @cached_property
    def space(self) -> CoarseSpace:
        return group_space(self.ideal, "left")


class CoarseDynamicalSystem:
    """``(space, evolution, time)``; ``evolution[g]`` is the map for time index ``g``."""

    def __init__(self, space: CoarseSpace, time: TimeGroup, evolution: Sequence[PointMap] | Mapping):
        n = len(time.group)
        if isinstance(evolution, Mapping):
            labels = time.group.elements.points
            missing = [g for g in labels if g not in evolution]
            if missing:
                raise ValueError(f"no evolution map for time {missing[0]!r}")
            evolution = [evolution[g] for g in labels]
        evolution = tuple(evolution)
        if len(evolution) != n:
            raise ValueError(f"need {n} evolution maps, got {len(evolution)}")
        for phi in evolution:
            if phi.source != space.ground or phi.target != space.ground:
                raise ValueError("evolution maps must be self-maps of the space")
        self.space = space
        self.time = time
        self.evolution = evolution

    @property
    def ground(self) -> GroundSet:
        return self.space.ground

    @property
    def group(self) -> FiniteGroup:
        return self.time.group

    def phi(self, g) -> PointMap:
        return self.evolution[self.group.elements.position(g)]

    def __repr__(self) -> str:
        return f"CoarseDynamicalSystem(|M|={len(self.ground)}, |G|={len(self.group)})"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check; failures name the clause and a witness."""

    ok: bool
    clause: str = ""
    witness: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def validate_cds(sys: CoarseDynamicalSystem) -> Verdict:
    """Check the identity axiom, that every map is an asymorphism, and the pointwise composition axiom."""
    G = sys.group
    glabels = G.elements.points
    mlabels = sys.ground.points
    evo = sys.evolution
    n = len(sys.ground)

    ident = evo[G.identity].table
    for m in range(n):
        if ident[m] != m:
            return Verdict(False, "identity", {"g": glabels[G.identity], "m": mlabels[m], "image": mlabels[ident[m]]})

    controls = {}
    for g, phi in enumerate(evo):
        rep = classify(phi, sys.space, sys.space)
        if not rep.asymorphism:
            return Verdict(False, "asymorphism", {"g": glabels[g], **_map_failure(rep)})
        controls[glabels[g]] = (rep.bornologous_ctl.table, rep.effectively_proper_ctl.table)

    for a in range(len(G)):
        ta = evo[a].table
        for b in range(len(G)):
            tb = evo[b].table
            allowed = [evo[s].table for s in sorted(sys.time.star(a, b))]
            for m in range(n):
                got = ta[tb[m]]
                if not any(t[m] == got for t in allowed):
                    return Verdict(
                        False,
                        "composition",
                        {"g1": glabels[a], "g2": glabels[b], "m": mlabels[m], "image": mlabels[got]},
                    )
    return Verdict(True, details={"controls": controls})


def _map_failure(rep: MapReport) -> dict:
    if not rep.bijective:
        return {"reason": "not bijective"}
    if not rep.bornologous:
        return {"reason": "not bornologous", "scale": rep.bornologous_ctl.index, "pair": rep.bornologous_ctl.pair}
    return {
        "reason": "not effectively proper",
        "scale": rep.effectively_proper_ctl.index,
        "pair": rep.effectively_proper_ctl.pair,
    }


@dataclass(frozen=True)
class Orbit:
    points: frozenset
    space: CoarseSpace


def _orbit_mask(sys: CoarseDynamicalSystem, m: int) -> int:
    out = 0
    for phi in sys.evolution:
        out |= 1 << phi.table[m]
    return out


def orbit(sys: CoarseDynamicalSystem, m) -> Orbit:
    """``{phi^g(m) : g in G}`` with its subspace structure."""
    mask = _orbit_mask(sys, sys.ground.position(m))
    labels = sys.ground.labels(mask)
    return Orbit(frozenset(labels), subspace(sys.space, labels))


@dataclass(frozen=True, eq=False)
class Conjugacy:
    """A verified pair ``(f, h)`` from ``source`` to ``target``.

    Only :func:`check_conjugacy` builds these.
    """

    source: CoarseDynamicalSystem
    target: CoarseDynamicalSystem
    f: PointMap
    h: PointMap
    certificates: dict

    def __repr__(self) -> str:
        return f"Conjugacy({self.source!r} -> {self.target!r})"


def check_conjugacy(
    A: CoarseDynamicalSystem, B: CoarseDynamicalSystem, f: PointMap, h: PointMap
) -> Conjugacy | Verdict:
    """Verify ``(f, h)``; return a :class:`Conjugacy` or a failing :class:`Verdict`.

    Clauses: (a) ``f`` is an asymorphism of spaces, (b) ``h`` is an
    asymorphism of the ideal-generated time spaces, (c) ``h`` carries
    ``g1 * g2`` onto ``h(g1) * h(g2)``, (d) ``f o phi^g = psi^h(g) o f``.
    """
    if f.source != A.ground or f.target != B.ground:
        raise ValueError("f must map the first system's space to the second's")
    if h.source != A.group.elements or h.target != B.group.elements:
        raise ValueError("h must map the first time group to the second")

    f_rep = classify(f, A.space, B.space)
    if not f_rep.asymorphism:
        return Verdict(False, "a", _map_failure(f_rep))

    h_rep = classify(h, A.time.space, B.time.space)
    if not h_rep.asymorphism:
        return Verdict(False, "b", _map_failure(h_rep))

    gl = A.group.elements.points
    ht = h.table
    n = len(A.group)
    for a in range(n):
        for b in range(n):
            lhs = frozenset(ht[s] for s in A.time.star(a, b))
            rhs = B.time.star(ht[a], ht[b])
            if lhs != rhs:
                hl = B.group.elements.points
                return Verdict(
                    False,
                    "c",
                    {
                        "g1": gl[a],
                        "g2": gl[b],
                        "h(g1*g2)": sorted(map(repr, (hl[x] for x in lhs))),
                        "h(g1)*h(g2)": sorted(map(repr, (hl[x] for x in rhs))),
                    },
                )

    ft = f.table
    ml = A.ground.points
    for g in range(n):
        phi = A.evolution[g].table
        psi = B.evolution[ht[g]].table
        for m in range(len(ml)):
            if ft[phi[m]] != psi[ft[m]]:
                return Verdict(False, "d", {"g": gl[g], "m": ml[m]})

    certs = {
        "f_controls": (f_rep.bornologous_ctl.table, f_rep.effectively_proper_ctl.table),
        "h_controls": (h_rep.bornologous_ctl.table, h_rep.effectively_proper_ctl.table),
        "homomorphism": True,
        "intertwining": True,
    }
    return Conjugacy(A, B, f, h, certs)


def _require(result: Conjugacy | Verdict, what: str) -> Conjugacy:
    if isinstance(result, Verdict):
        raise ConjugacyError(f"{what} failed re-verification at clause {result.clause}: {result.witness}")
    return result


def identity_conjugacy(sys: CoarseDynamicalSystem) -> Conjugacy:
    return _require(
        check_conjugacy(sys, sys, PointMap.identity(sys.ground), PointMap.identity(sys.group.elements)),
        "identity conjugacy",
    )


def inverse_conjugacy(c: Conjugacy) -> Conjugacy:
    return _require(check_conjugacy(c.target, c.source, c.f.inverse(), c.h.inverse()), "inverse conjugacy")


def compose_conjugacy(c1: Conjugacy, c2: Conjugacy) -> Conjugacy:
    """``(k o f, l o h)`` from ``c1.source`` to ``c2.target``."""
    if c1.target is not c2.source:
        same = (
            c1.target.ground == c2.source.ground
            and c1.target.group == c2.source.group
            and [p.table for p in c1.target.evolution] == [p.table for p in c2.source.evolution]
        )
        if not same:
            raise ValueError("middle systems differ")
    return _require(
        check_conjugacy(c1.source, c2.target, c1.f.then(c2.f), c1.h.then(c2.h)), "composite conjugacy"
    )


def orbit_preservation_check(c: Conjugacy, m) -> Verdict:
    """``f(O(m)) == O(f(m))`` as sets."""
    i = c.source.ground.position(m)
    lhs = c.f.image_mask(_orbit_mask(c.source, i))
    rhs = _orbit_mask(c.target, c.f.table[i])
    if lhs == rhs:
        return Verdict(True)
    tg = c.target.ground
    return Verdict(False, "orbit", {"m": m, "f(orbit)": tg.labels(lhs), "orbit(f(m))": tg.labels(rhs)})


def _coproduct_time(A: TimeGroup, B: TimeGroup) -> TimeGroup:
    GA, GB = A.group, B.group
    P = tagged_pair_product(GA, GB)
    nb = len(GB)
    depth = max(len(A.ideal), len(B.ideal))
    chain = []
    for i in range(depth):
        ha = A.ideal.masks[min(i, len(A.ideal) - 1)]
        hb = B.ideal.masks[min(i, len(B.ideal) - 1)]
        chain.append([P.elements.points[a * nb + b] for a in iter_bits(ha) for b in iter_bits(hb)])
    ideal = validate_ideal_chain(P, chain)
    hyperop = None
    if A.set_valued or B.set_valued:
        hyperop = {}
        n = len(P)
        for x in range(n):
            for y in range(n):
                a1, b1 = divmod(x, nb)
                a2, b2 = divmod(y, nb)
                hyperop[x, y] = [s * nb + t for s in A.star(a1, a2) for t in B.star(b1, b2)]
    return TimeGroup(ideal, hyperop)


def _disjoint_union_map(f: PointMap, k: PointMap, source: GroundSet, target: GroundSet) -> PointMap:
    off = len(f.target)
    return PointMap(source, target, list(f.table) + [t + off for t in k.table])


def coproduct_cds(A: CoarseDynamicalSystem, B: CoarseDynamicalSystem) -> CoarseDynamicalSystem:
    """Disjoint union of two systems, timed by tagged pairs ``((1, g), (2, g'))``.

    Raises ``ConjugacyError`` if the result does not validate.
    """
    space = coproduct(A.space, B.space)
    time = _coproduct_time(A.time, B.time)
    nb = len(B.group)
    evolution = [
        _disjoint_union_map(A.evolution[x // nb], B.evolution[x % nb], space.ground, space.ground)
        for x in range(len(time.group))
    ]
    sys = CoarseDynamicalSystem(space, time, evolution)
    verdict = validate_cds(sys)
    if not verdict:
        raise ConjugacyError(f"coproduct system failed validation at {verdict.clause}: {verdict.witness}")
    return sys


def coproduct_conjugacy(c1: Conjugacy, c2: Conjugacy) -> Conjugacy:
    """``(f u k, h u l)`` between the coproducts of the sources and of the targets."""
    src = coproduct_cds(c1.source, c2.source)
    dst = coproduct_cds(c1.target, c2.target)
    f = _disjoint_union_map(c1.f, c2.f, src.ground, dst.ground)
    nb, nb2 = len(c2.source.group), len(c2.target.group)
    h = PointMap(
        src.group.elements,
        dst.group.elements,
        [c1.h.table[x // nb] * nb2 + c2.h.table[x % nb] for x in range(len(src.group))],
    )
    return _require(check_conjugacy(src, dst, f, h), "coproduct conjugacy")


def sub_cds(sys: CoarseDynamicalSystem, N: Iterable, H: Iterable) -> CoarseDynamicalSystem:
    """Restrict to an invariant point set ``N`` and a subgroup ``H``."""
    G = sys.group
    hmask = G.elements.mask(H)
    nmask = sys.ground.mask(N)
    e = 1 << G.identity
    if not hmask & e or G.product_mask(hmask, hmask) != hmask or G.inverse_mask(hmask) != hmask:
        raise ValueError("H is not a subgroup")
    for h in iter_bits(hmask):
        img = sys.evolution[h].image_mask(nmask)
        if img & ~nmask:
            bad = next(n for n in iter_bits(nmask) if not nmask >> sys.evolution[h].table[n] & 1)
            raise ValueError(
                f"N is not invariant: phi^{G.elements.points[h]!r} moves "
                f"{sys.ground.points[bad]!r} outside N"
            )
    hidx = list(iter_bits(hmask))
    hpos = {g: i for i, g in enumerate(hidx)}
    sub = FiniteGroup(
        [G.elements.points[g] for g in hidx],
        [[hpos[G.table[a][b]] for b in hidx] for a in hidx],
    )
    ideal = validate_ideal_chain(sub, [G.elements.labels(m & hmask) for m in sys.time.ideal.masks])
    hyperop = None
    if sys.time.set_valued:
        hyperop = {
            (hpos[a], hpos[b]): [hpos[s] for s in sys.time.star(a, b) if s in hpos]
            for a in hidx
            for b in hidx
        }
    space = subspace(sys.space, sys.ground.labels(nmask))
    nidx = list(iter_bits(nmask))
    npos = {m: i for i, m in enumerate(nidx)}
    evolution = [
        PointMap(space.ground, space.ground, [npos[sys.evolution[h].table[m]] for m in nidx]) for h in hidx
    ]
    out = CoarseDynamicalSystem(space, TimeGroup(ideal, hyperop), evolution)
    verdict = validate_cds(out)
    if not verdict:
        raise ValueError(f"restricted system is invalid at {verdict.clause}: {verdict.witness}")
    return out
