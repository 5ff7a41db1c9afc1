"""Seeded random instances: a system, two conjugate copies, and test maps.

Systems are built action-first.  Points are cosets of random subgroups, the
group acts by left multiplication, and the metric is the path metric of
random weights that are constant on pair orbits.  Every evolution map is
then an isometry, so the axioms hold by construction (and are re-checked).
Copies are made by relabelling points and transporting time through a
random group automorphism.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .coarse_group import FiniteGroup, IdealChain, cyclic, klein, subgroups, symmetric, validate_ideal_chain
from .coarse_maps import PointMap
from .coarse_space import from_metric
from .dynamics import CoarseDynamicalSystem, Conjugacy, TimeGroup, Verdict, check_conjugacy, validate_cds
from .relation_core import GroundSet, iter_bits

__all__ = ["Instance", "GenerationError", "generate_instance", "group_catalog", "automorphisms"]

MAX_POINTS = 8
MAX_GROUP = 6
RETRIES = 20


class GenerationError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def group_catalog() -> tuple[tuple[str, FiniteGroup], ...]:
    out = [(f"Z{n}", cyclic(n)) for n in range(1, 7)]
    out.append(("Z2xZ2", klein()))
    out.append(("S3", symmetric(3)))
    return tuple(out)


@lru_cache(maxsize=None)
def _subgroups(G: FiniteGroup) -> tuple[int, ...]:
    return tuple(subgroups(G))


@lru_cache(maxsize=None)
def automorphisms(G: FiniteGroup) -> tuple[tuple[int, ...], ...]:
    """All automorphisms as index tables, identity first."""
    n = len(G)
    T = G.table
    e = G.identity
    others = [g for g in range(n) if g != e]
    found = []
    for perm in itertools.permutations(others):
        a = [0] * n
        a[e] = e
        for src, dst in zip(others, perm):
            a[src] = dst
        if all(a[T[x][y]] == T[a[x]][a[y]] for x in range(n) for y in range(n)):
            found.append(tuple(a))
    found.sort(key=lambda t: t != tuple(range(n)))
    return tuple(found)


@dataclass(frozen=True, eq=False)
class Instance:
    index: int
    group_name: str
    mode: str
    A: CoarseDynamicalSystem
    B: CoarseDynamicalSystem
    C: CoarseDynamicalSystem
    ab: Conjugacy
    bc: Conjugacy
    maps: tuple[PointMap, ...]

    def summary(self) -> dict:
        return {
            "group": self.group_name,
            "mode": self.mode,
            "points": len(self.A.ground),
            "time": len(self.A.group),
            "depth": self.A.space.depth + 1,
            "ideal": len(self.A.time.ideal),
        }


def _random_ideal(rng: random.Random, G: FiniteGroup) -> IdealChain:
    n = len(G)
    length = rng.randint(1, 3)
    chain = []
    for _ in range(length):
        chain.append([G.elements.points[g] for g in range(n) if rng.random() < 0.3])
    return validate_ideal_chain(G, chain)


def _points(rng: random.Random, G: FiniteGroup, max_points: int) -> list[tuple[int, int]]:
    """Choose coset spaces; each point is ``(orbit, coset mask)``."""
    subs = _subgroups(G)
    n = len(G)
    budget = rng.randint(min(3, max_points), max_points)
    orbits = []
    for _ in range(4):
        fitting = [K for K in subs if n // K.bit_count() <= budget]
        if not fitting:
            break
        K = rng.choice(fitting)
        orbits.append(K)
        budget -= n // K.bit_count()
    pts = []
    for o, K in enumerate(orbits):
        seen = 0
        for g in range(n):
            coset = G.left_coset(g, K)
            if not coset & seen:
                seen |= coset
                pts.append((o, coset))
    return pts


def _action(G: FiniteGroup, pts: list[tuple[int, int]]) -> list[list[int]]:
    where = {p: i for i, p in enumerate(pts)}
    table = []
    for g in range(len(G)):
        row = []
        for o, coset in pts:
            rep = (coset & -coset).bit_length() - 1
            K = G.left_coset(G.inverse[rep], coset)
            row.append(where[o, G.left_coset(G.table[g][rep], K)])
        table.append(row)
    return table


def _invariant_metric(rng: random.Random, action: list[list[int]], n: int) -> np.ndarray:
    weight: dict[tuple[int, int], float] = {}
    w = np.full((n, n), math.inf)
    np.fill_diagonal(w, 0.0)
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) in weight:
                continue
            r = rng.random()
            value = math.inf if r < 0.2 else float(rng.randint(1, 4))
            for g in action:
                x, y = g[a], g[b]
                weight[x, y] = weight[y, x] = value
    for (a, b), value in weight.items():
        w[a, b] = value
    for c in range(n):
        w = np.minimum(w, w[:, c][:, None] + w[c, :][None, :])
    return w


def _random_scales(rng: random.Random) -> list[float]:
    picks = sorted(rng.sample(range(1, 10), rng.randint(1, 3)))
    return [p + 0.5 for p in picks]


def _hyperop(rng: random.Random, G: FiniteGroup) -> dict[tuple[int, int], list[int]]:
    n = len(G)
    op = {}
    for a in range(n):
        for b in range(n):
            vals = {G.table[a][b]}
            if a != G.identity and b != G.identity and rng.random() < 0.3:
                vals.add(rng.randrange(n))
            op[a, b] = sorted(vals)
    return op


def _base_system(rng: random.Random, max_points: int, max_group: int, mode: str):
    catalog = [(name, G) for name, G in group_catalog() if len(G) <= max_group]
    name, G = rng.choice(catalog)
    pts = _points(rng, G, max_points)
    n = len(pts)
    action = _action(G, pts)
    d = _invariant_metric(rng, action, n)
    ground = GroundSet(f"m{i}" for i in range(n))
    space = from_metric(ground, d, _random_scales(rng))
    hyperop = _hyperop(rng, G) if mode == "set" else None
    time = TimeGroup(_random_ideal(rng, G), hyperop)
    evolution = [PointMap(ground, ground, row) for row in action]
    return name, CoarseDynamicalSystem(space, time, evolution), d


def _transport(
    rng: random.Random, sys: CoarseDynamicalSystem, d: np.ndarray, tag: str
) -> tuple[CoarseDynamicalSystem, PointMap, PointMap, np.ndarray]:
    """A relabelled copy of ``sys`` with the maps ``(f, h)`` onto it."""
    n = len(sys.ground)
    perm = list(range(n))
    rng.shuffle(perm)
    ground = GroundSet(f"{tag}{i}" for i in range(n))
    f = PointMap(sys.ground, ground, perm)
    inv = [0] * n
    for i, p in enumerate(perm):
        inv[p] = i
    d2 = d[np.ix_(inv, inv)]
    space = from_metric(ground, d2, sys.space.info["scales"])

    G = sys.group
    alpha = rng.choice(automorphisms(G))
    G2 = FiniteGroup([(tag, g) for g in G.elements.points], G.table)
    h = PointMap(G.elements, G2.elements, alpha)
    ideal = IdealChain(G2, tuple(sum(1 << alpha[g] for g in iter_bits(m)) for m in sys.time.ideal.masks))
    hyperop = None
    if sys.time.set_valued:
        hyperop = {
            (alpha[a], alpha[b]): [alpha[s] for s in sys.time.star(a, b)]
            for a in range(len(G))
            for b in range(len(G))
        }
    time = TimeGroup(ideal, hyperop)
    evolution = [None] * len(G)
    for g, phi in enumerate(sys.evolution):
        evolution[alpha[g]] = PointMap(ground, ground, [perm[phi.table[inv[j]]] for j in range(n)])
    return CoarseDynamicalSystem(space, time, evolution), f, h, d2


def _random_maps(rng: random.Random, A: CoarseDynamicalSystem, B: CoarseDynamicalSystem, f: PointMap):
    n = len(A.ground)
    arbitrary = PointMap(A.ground, B.ground, [rng.randrange(n) for _ in range(n)])
    shuffle = list(range(n))
    rng.shuffle(shuffle)
    return (f, arbitrary, PointMap(A.ground, B.ground, shuffle))


def generate_instance(
    seed: int,
    index: int = 0,
    max_points: int = MAX_POINTS,
    max_group: int = MAX_GROUP,
) -> Instance:
    """Deterministic in ``(seed, index)``; raises :class:`GenerationError` after repeated failures."""
    rng = random.Random(f"{seed}:{index}")
    mode = "set" if rng.random() < 0.5 else "single"
    last = None
    for _ in range(RETRIES):
        name, A, d = _base_system(rng, max_points, max_group, mode)
        verdict = validate_cds(A)
        if not verdict:
            last = verdict
            continue
        B, f1, h1, d2 = _transport(rng, A, d, "b")
        C, f2, h2, _ = _transport(rng, B, d2, "c")
        ab = check_conjugacy(A, B, f1, h1)
        bc = check_conjugacy(B, C, f2, h2)
        if isinstance(ab, Verdict) or isinstance(bc, Verdict):
            last = ab if isinstance(ab, Verdict) else bc
            continue
        return Instance(index, name, mode, A, B, C, ab, bc, _random_maps(rng, A, B, f1))
    raise GenerationError(f"instance {seed}:{index} failed after {RETRIES} attempts: {last}")
