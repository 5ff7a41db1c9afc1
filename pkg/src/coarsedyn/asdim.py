"""Uniformly bounded covers, separated families and asymptotic-dimension search.

On a finite space every structure becomes 0-dimensional at its top scale,
so results are reported per scale: for chain index ``i`` (separation) the
engine looks for a cover into ``n + 1`` families that are ``E_i``-separated,
with every set bounded by some ``E_s``; ``s`` is the reported bound scale.
Nothing the search returns is trusted: each cover is re-verified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .coarse_group import IdealChain, group_space
from .coarse_space import CoarseSpace
from .relation_core import Relation, iter_bits

__all__ = [
    "Cover",
    "ScaleVerdict",
    "AsdimReport",
    "WITNESS",
    "EXHAUSTED_EXACT",
    "GAVE_UP_HEURISTIC",
    "EXACT_CAP",
    "uniform_bound_scale",
    "separated_check",
    "verify_cover",
    "asdim_upper_witness",
    "asdim_exact_small",
    "group_asdim_check",
    "transport_cover",
]

WITNESS = "WITNESS"
EXHAUSTED_EXACT = "EXHAUSTED_EXACT"
GAVE_UP_HEURISTIC = "GAVE_UP_HEURISTIC"

EXACT_CAP = 24
EXACT_SMALL_CAP = 16


@dataclass(frozen=True)
class Cover:
    """``families[j]`` is a list of point sets; sets are label frozensets."""

    families: tuple[tuple[frozenset, ...], ...]

    @classmethod
    def from_masks(cls, X: CoarseSpace, families: Sequence[Sequence[int]]) -> "Cover":
        labels = X.ground.labels
        return cls(tuple(tuple(frozenset(labels(m)) for m in fam) for fam in families))

    def padded(self, n: int) -> "Cover":
        """Same cover with empty families appended up to ``n + 1``."""
        extra = n + 1 - len(self.families)
        return Cover(self.families + ((),) * max(extra, 0))

    def sets(self) -> list[frozenset]:
        return [U for fam in self.families for U in fam]


def _bound_index(masks: Iterable[int], X: CoarseSpace) -> int | None:
    # least i with U x U inside E_i for every set U
    masks = list(masks)
    for i, E in enumerate(X.chain):
        rows = E.rows
        if all(all(not (U & ~rows[u]) for u in iter_bits(U)) for U in masks):
            return i
    return None


def uniform_bound_scale(cover: Cover | Iterable[Iterable], X: CoarseSpace) -> int | None:
    """Least scale ``i`` with ``U <= E_i[u]`` for every set ``U`` and ``u`` in ``U``."""
    sets = cover.sets() if isinstance(cover, Cover) else [frozenset(U) for U in cover]
    if any(not U for U in sets):
        raise ValueError("covers may not contain empty sets")
    return _bound_index((X.ground.mask(U) for U in sets), X)


def _separated(masks: Sequence[int], E: Relation) -> bool:
    for a, U in enumerate(masks):
        reach = E.image_mask(U)
        for b, V in enumerate(masks):
            if a != b and reach & V:
                return False
    return True


def separated_check(family: Iterable[Iterable], E: Relation) -> bool:
    """True iff ``E[U]`` misses ``V`` for all distinct ``U, V`` in the family."""
    g = E.ground
    return _separated([g.mask(U) for U in family], E)


def verify_cover(cover: Cover, X: CoarseSpace, i: int) -> int | None:
    """Bound scale of ``cover`` if it covers ``X`` with every family ``E_i``-separated; else None."""
    g = X.ground
    masks = [[g.mask(U) for U in fam] for fam in cover.families]
    covered = 0
    for fam in masks:
        for U in fam:
            if not U:
                return None
            covered |= U
    if covered != g.full_mask:
        return None
    E = X.chain[i]
    if not all(_separated(fam, E) for fam in masks):
        return None
    return _bound_index((U for fam in masks for U in fam), X)


@dataclass(frozen=True)
class ScaleVerdict:
    index: int
    status: str
    cover: Cover | None = None
    bound_scale: int | None = None
    method: str = ""


@dataclass(frozen=True)
class AsdimReport:
    n: int
    scales: tuple[ScaleVerdict, ...]

    @property
    def ok(self) -> bool:
        return all(v.status == WITNESS for v in self.scales)

    @property
    def first_failure(self) -> ScaleVerdict | None:
        return next((v for v in self.scales if v.status != WITNESS), None)

    @property
    def bound_control(self) -> dict[int, int | None]:
        return {v.index: v.bound_scale for v in self.scales}


# --- templates ---------------------------------------------------------------


def _components(E: Relation, n: int) -> list[int]:
    seen = 0
    out = []
    for p in range(n):
        if seen >> p & 1:
            continue
        comp = frontier = 1 << p
        while frontier:
            frontier = E.image_mask(frontier) & ~comp
            comp |= frontier
        seen |= comp
        out.append(comp)
    return out


def _layers(E: Relation, n: int) -> list[int]:
    """Layer index per point: breadth-first distance from the first point of its component."""
    layer = [0] * n
    seen = 0
    for p in range(n):
        if seen >> p & 1:
            continue
        frontier = 1 << p
        seen |= frontier
        k = 0
        while frontier:
            for q in iter_bits(frontier):
                layer[q] = k
            frontier = E.image_mask(frontier) & ~seen
            seen |= frontier
            k += 1
    return layer


def _components_template(X: CoarseSpace, i: int, n: int) -> list[list[int]] | None:
    return [_components(X.chain[i], len(X.ground))]


def _layer_template(X: CoarseSpace, i: int, n: int) -> list[list[int]] | None:
    """Alternate breadth-first layers between two families (interval covers on a line)."""
    if n < 1:
        return None
    N = len(X.ground)
    E = X.chain[i]
    layer = _layers(E, N)
    comps = _components(E, N)
    fams: list[list[int]] = [[], []]
    for comp in comps:
        by_layer: dict[int, int] = {}
        for p in iter_bits(comp):
            by_layer[layer[p]] = by_layer.get(layer[p], 0) | 1 << p
        for k in sorted(by_layer):
            fams[k % 2].append(by_layer[k])
    return fams


def _brick_template(X: CoarseSpace, i: int, n: int) -> list[list[int]] | None:
    """Staggered 2x1 bricks of layer cells, three colours, for products of two spaces."""
    factors = X.info.get("factors")
    if n < 2 or not factors:
        return None
    A, B = factors
    na, nb = len(A.ground), len(B.ground)
    la = _layers(A.entourage(i), na)
    lb = _layers(B.entourage(i), nb)
    ca = _components(A.entourage(i), na)
    cb = _components(B.entourage(i), nb)
    comp_a = {p: k for k, c in enumerate(ca) for p in iter_bits(c)}
    comp_b = {p: k for k, c in enumerate(cb) for p in iter_bits(c)}
    bricks: dict[tuple, int] = {}
    for a in range(na):
        for b in range(nb):
            row = lb[b]
            col = la[a]
            start = col - ((col - row) % 2)
            u = (start - row) // 2
            key = ((u + 2 * row) % 3, comp_a[a], comp_b[b], row, start)
            bricks[key] = bricks.get(key, 0) | 1 << (a * nb + b)
    fams: list[list[int]] = [[], [], []]
    for key in sorted(bricks):
        fams[key[0]].append(bricks[key])
    return fams


_TEMPLATES = (
    ("layers", _layer_template),
    ("bricks", _brick_template),
    ("components", _components_template),
)


def _greedy(X: CoarseSpace, i: int, s: int, n: int) -> list[list[int]] | None:
    """Grow blocks bounded by ``E_s`` along ``E_i``-adjacency, then colour them first-fit."""
    E, B = X.chain[i], X.chain[s]
    unassigned = X.ground.full_mask
    blocks = []
    while unassigned:
        p = (unassigned & -unassigned).bit_length() - 1
        block = 1 << p
        allowed = B.rows[p]
        grew = True
        while grew:
            grew = False
            cand = E.image_mask(block) & unassigned & ~block & allowed
            for q in iter_bits(cand):
                if allowed >> q & 1:
                    block |= 1 << q
                    allowed &= B.rows[q]
                    grew = True
        unassigned &= ~block
        blocks.append(block)
    fams: list[list[int]] = [[] for _ in range(n + 1)]
    reach: list[int] = [0] * (n + 1)
    for block in blocks:
        spread = E.image_mask(block)
        for c in range(n + 1):
            if not (reach[c] & block) and not any(spread & V for V in fams[c]):
                fams[c].append(block)
                reach[c] |= spread
                break
        else:
            return None
    return fams


# --- exact search ------------------------------------------------------------


def _exact_search(X: CoarseSpace, i: int, s: int, n: int) -> list[list[int]] | None:
    """Backtracking over point -> (family, block) assignments.

    Points are placed in ground order; a point may join an existing block
    of a family or open a new one, and families are opened in index order
    (they are interchangeable).  Pruning: a block must stay inside ``E_s``
    balls of all its members, and two blocks of one family may not be
    ``E_i``-related.
    """
    N = len(X.ground)
    E = X.chain[i].rows
    Bnd = X.chain[s].rows
    fams: list[list[int]] = [[] for _ in range(n + 1)]

    def place(p: int, opened: int) -> bool:
        if p == N:
            return True
        bit = 1 << p
        near = E[p]
        for c in range(min(opened + 1, n + 1)):
            blocks = fams[c]
            touching = [k for k, V in enumerate(blocks) if near & V]
            if len(touching) > 1:
                continue
            options = touching if touching else list(range(len(blocks))) + [len(blocks)]
            for k in options:
                if k == len(blocks):
                    blocks.append(bit)
                    if place(p + 1, max(opened, c + 1)):
                        return True
                    blocks.pop()
                    continue
                V = blocks[k]
                if all(Bnd[q] >> p & 1 for q in iter_bits(V)) and not (~Bnd[p] & V):
                    blocks[k] = V | bit
                    if place(p + 1, max(opened, c + 1)):
                        return True
                    blocks[k] = V
        return False

    if place(0, 0):
        return [list(f) for f in fams]
    return None


def asdim_exact_small(X: CoarseSpace, i: int, s: int, n: int) -> bool:
    """Whether some cover of ``n + 1`` ``E_i``-separated families has all sets bounded by ``E_s``."""
    if len(X.ground) > EXACT_SMALL_CAP:
        raise ValueError(f"exhaustive search is limited to {EXACT_SMALL_CAP} points")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _exact_search(X, i, s, n) is not None


# --- engine ------------------------------------------------------------------


def asdim_upper_witness(
    X: CoarseSpace,
    n: int,
    max_bound: Callable[[int], int] | None = None,
    exact_cap: int = EXACT_CAP,
) -> AsdimReport:
    """Per scale, find ``n + 1`` separated uniformly bounded families.

    ``max_bound(i)`` caps the bound scale accepted at separation scale ``i``
    (default: the top).  Strategies run in order: templates (smallest bound
    wins), greedy blocks, exact backtracking when the ground has at most
    ``exact_cap`` points.  Only the exact search may report nonexistence.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = []
    for i in range(len(X.chain)):
        limit = X.depth if max_bound is None else min(max_bound(i), X.depth)
        out.append(_one_scale(X, i, n, limit, exact_cap))
    return AsdimReport(n, tuple(out))


def _one_scale(X: CoarseSpace, i: int, n: int, limit: int, exact_cap: int) -> ScaleVerdict:
    best = None
    for name, template in _TEMPLATES:
        fams = template(X, i, n)
        if fams is None or len(fams) > n + 1:
            continue
        cover = Cover.from_masks(X, fams).padded(n)
        bound = verify_cover(cover, X, i)
        if bound is not None and bound <= limit and (best is None or bound < best[1]):
            best = (cover, bound, name)
    if best is not None:
        return ScaleVerdict(i, WITNESS, best[0], best[1], f"template:{best[2]}")
    for s in range(limit + 1):
        fams = _greedy(X, i, s, n)
        if fams is not None:
            cover = Cover.from_masks(X, fams)
            bound = verify_cover(cover, X, i)
            if bound is not None and bound <= limit:
                return ScaleVerdict(i, WITNESS, cover, bound, "greedy")
    if len(X.ground) <= exact_cap:
        for s in range(limit + 1):
            fams = _exact_search(X, i, s, n)
            if fams is not None:
                cover = Cover.from_masks(X, fams).padded(n)
                bound = verify_cover(cover, X, i)
                if bound is not None:
                    return ScaleVerdict(i, WITNESS, cover, bound, "exact")
        return ScaleVerdict(i, EXHAUSTED_EXACT, method="exact")
    return ScaleVerdict(i, GAVE_UP_HEURISTIC, method="heuristic")


def group_asdim_check(I: IdealChain, n: int, exact_cap: int = EXACT_CAP) -> AsdimReport:
    """Run the engine on the left structure generated by the ideal chain."""
    return asdim_upper_witness(group_space(I, "left"), n, exact_cap=exact_cap)


def transport_cover(cover: Cover, f) -> Cover:
    """Image of every set under the point map ``f``."""
    return Cover(tuple(tuple(frozenset(f(u) for u in U) for U in fam) for fam in cover.families))
