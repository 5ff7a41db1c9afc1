"""Coarse structures on finite sets, represented by filtered entourage chains.

A :class:`CoarseSpace` holds a chain ``E_0 <= E_1 <= ... <= E_k`` of
symmetric relations containing the diagonal and closed under composition up
to the chain.  The structure it represents is every relation contained in
some chain element; the chain index of the smallest such element is the
relation's *scale*.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .relation_core import (
    GroundMismatch,
    GroundSet,
    Relation,
    compose,
    diagonal,
    full,
    inverse,
    iter_bits,
)

__all__ = [
    "CoarseSpace",
    "CoarseSpaceError",
    "MetricError",
    "make_filtered",
    "from_metric",
    "from_line",
    "discrete",
    "bounded",
    "membership_scale",
    "same_filtration",
    "same_structure",
    "subspace",
    "product",
    "coproduct",
    "validate",
    "reach",
]


class CoarseSpaceError(ValueError):
    """A chain violates a coarse-structure invariant.

    ``witness`` names the failing invariant and carries concrete indices.
    """

    def __init__(self, message: str, witness: dict):
        super().__init__(message)
        self.witness = witness


class MetricError(ValueError):
    def __init__(self, message: str, witness: tuple):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True, eq=False)
class CoarseSpace:
    ground: GroundSet
    chain: tuple[Relation, ...]
    kind: str = "derived"
    # construction data used by cover templates (e.g. product factors)
    info: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.chain:
            raise ValueError("a coarse space needs a nonempty chain")
        for E in self.chain:
            if E.ground != self.ground:
                raise GroundMismatch("chain element on a different ground set")

    def __len__(self) -> int:
        return len(self.ground)

    @property
    def top(self) -> Relation:
        return self.chain[-1]

    @property
    def depth(self) -> int:
        """Index of the top chain element."""
        return len(self.chain) - 1

    def entourage(self, i: int) -> Relation:
        """Chain element ``i``, clamped to the top (the padding rule)."""
        return self.chain[min(i, len(self.chain) - 1)]

    def scale_of(self, E: Relation) -> int | None:
        return membership_scale(self, E)


def validate(X: CoarseSpace) -> CoarseSpace:
    """Assert the chain invariants bit-exactly; return ``X`` unchanged."""
    chain = X.chain
    diag = diagonal(X.ground)
    miss = diag.first_outside(chain[0])
    if miss is not None:
        raise CoarseSpaceError(
            "first chain element misses the diagonal",
            {"invariant": "diagonal", "index": 0, "pair": _labels(X, miss)},
        )
    for i, E in enumerate(chain):
        miss = E.first_outside(inverse(E))
        if miss is not None:
            raise CoarseSpaceError(
                f"chain element {i} is not symmetric",
                {"invariant": "symmetric", "index": i, "pair": _labels(X, miss)},
            )
    for i in range(len(chain) - 1):
        miss = chain[i].first_outside(chain[i + 1])
        if miss is not None:
            raise CoarseSpaceError(
                f"chain element {i} is not contained in element {i + 1}",
                {"invariant": "monotone", "index": i, "pair": _labels(X, miss)},
            )
    # every E_i o E_j lies in top o top, so closure of the top suffices
    top = chain[-1]
    miss = compose(top, top).first_outside(top)
    if miss is not None:
        raise CoarseSpaceError(
            "top chain element is not closed under composition",
            {"invariant": "composition", "index": len(chain) - 1, "pair": _labels(X, miss)},
        )
    return X


def _labels(X: CoarseSpace, pair: tuple[int, int]) -> tuple:
    pts = X.ground.points
    return pts[pair[0]], pts[pair[1]]


def _normalize(ground: GroundSet, generators: Sequence[Relation]) -> list[Relation]:
    diag = diagonal(ground)
    chain: list[Relation] = []
    acc = diag
    for E in generators:
        if E.ground != ground:
            raise GroundMismatch("generator on a different ground set")
        acc = acc | E | inverse(E)
        chain.append(acc)
    top = chain[-1]
    while True:
        nxt = compose(top, top)
        if nxt == top:
            break
        chain.append(nxt)
        top = nxt
    return chain


def make_filtered(
    ground: GroundSet,
    generators: Sequence[Relation],
    kind: str = "derived",
    info: dict | None = None,
) -> CoarseSpace:
    """Normalize generators into a valid chain.

    Each generator is symmetrized and joined with the diagonal, element
    ``i`` is the union of the first ``i + 1`` of them, and self-compositions
    of the top are appended until they stop growing.
    """
    if not generators:
        raise ValueError("at least one generator is required")
    chain = _normalize(ground, generators)
    return CoarseSpace(ground, tuple(chain), kind, dict(info or {}))


def discrete(ground: GroundSet) -> CoarseSpace:
    return CoarseSpace(ground, (diagonal(ground),), "discrete")


def bounded(ground: GroundSet) -> CoarseSpace:
    return CoarseSpace(ground, (full(ground),), "bounded")


def _check_metric(d: np.ndarray) -> None:
    n = d.shape[0]
    if d.shape != (n, n):
        raise MetricError("distance matrix must be square", ())
    if np.isnan(d).any():
        raise MetricError("distance matrix contains NaN", ())
    neg = np.argwhere(d < 0)
    if len(neg):
        a, b = map(int, neg[0])
        raise MetricError(f"negative distance d({a},{b})", (a, b))
    diag = np.nonzero(np.diag(d) != 0)[0]
    if len(diag):
        a = int(diag[0])
        raise MetricError(f"d({a},{a}) is not zero", (a, a))
    asym = np.argwhere(d != d.T)
    if len(asym):
        a, b = map(int, asym[0])
        raise MetricError(f"d({a},{b}) != d({b},{a})", (a, b))
    finite = d[np.isfinite(d)]
    tol = 1e-9 * max(1.0, float(finite.max()) if finite.size else 1.0)
    for c in range(n):
        through = d[:, c][:, None] + d[c, :][None, :]
        bad = np.argwhere(d > through + tol)
        if len(bad):
            a, b = map(int, bad[0])
            raise MetricError(
                f"triangle inequality fails: d({a},{b}) > d({a},{c}) + d({c},{b})",
                (a, b, c),
            )


def _bool_rows(mat: np.ndarray) -> list[int]:
    packed = np.packbits(mat, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def from_metric(ground: GroundSet, dist, scales: Sequence[float]) -> CoarseSpace:
    """Metric coarse structure from open strips ``S_r = {(a, b) : d(a, b) < r}``.

    ``dist`` may contain ``math.inf``.  Larger strips are appended by
    composition until the chain closes.
    """
    d = np.asarray(dist, dtype=float)
    if d.size == 0 and len(ground) == 0:
        d = d.reshape(0, 0)
    if d.shape != (len(ground), len(ground)):
        raise MetricError(f"distance matrix shape {d.shape} does not match {len(ground)} points", ())
    _check_metric(d)
    scales = _check_scales(scales)
    strips = [Relation._raw(ground, _bool_rows(d < r) if len(ground) else ()) for r in scales]
    return make_filtered(ground, strips, "metric", {"scales": tuple(scales)})


def _check_scales(scales) -> list:
    scales = list(scales)
    if not scales:
        raise ValueError("at least one scale is required")
    for r in scales:
        if not r > 0 or (isinstance(r, float) and math.isinf(r)):
            raise ValueError(f"scales must be positive and finite, got {r!r}")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly ascending")
    return scales


def from_line(ground: GroundSet, values: Sequence, scales: Sequence) -> CoarseSpace:
    """Metric chain for points on a line with ``d(a, b) = |a - b|``.

    ``values`` must be sorted ascending, matching the ground order.  Strips
    are built directly from interval bounds, so no distance matrix is formed.
    """
    values = list(values)
    if len(values) != len(ground):
        raise ValueError("one value per point is required")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("values must be strictly ascending")
    scales = _check_scales(scales)
    ivalues, iscales = _integral(values, scales)
    # every row is an interval [lo, hi] with both ends nondecreasing in the
    # point, so strips nest and E o E has row [lo[lo[a]], hi[hi[a]]]
    bounds = []
    for r in iscales:
        lo = [bisect_right(ivalues, v - r) for v in ivalues]
        hi = [bisect_left(ivalues, v + r) - 1 for v in ivalues]
        bounds.append((lo, hi))
    if not ground:
        return make_filtered(ground, [Relation._raw(ground, ())], "metric", {"scales": tuple(scales), "line": ()})
    while True:
        lo, hi = bounds[-1]
        nlo, nhi = [lo[a] for a in lo], [hi[b] for b in hi]
        if nlo == lo and nhi == hi:
            break
        bounds.append((nlo, nhi))
    chain = tuple(
        Relation._raw(ground, [((1 << (b - a + 1)) - 1) << a for a, b in zip(lo, hi)]) for lo, hi in bounds
    )
    return CoarseSpace(ground, chain, "metric", {"scales": tuple(scales), "line": tuple(values)})


def _integral(values: list, scales: list) -> tuple[list, list]:
    # rescale rational data to integers so the bisections compare ints
    if not all(isinstance(x, (int, Fraction)) for x in values + scales):
        return values, scales
    den = math.lcm(*(Fraction(x).denominator for x in values + scales))
    return [int(x * den) for x in values], [int(x * den) for x in scales]


def membership_scale(X: CoarseSpace, E: Relation, start: int = 0) -> int | None:
    """Least ``i`` with ``E <= E_i``, or None when ``E`` is no entourage.

    ``start`` is a known lower bound on the answer (callers building
    monotone control tables pass the previous value).
    """
    if E.ground != X.ground:
        raise GroundMismatch("relation is not on the space's ground set")
    chain = X.chain
    # gallop upward from start, then bisect the last gap
    lo, step = start, 1
    hi = None
    while lo < len(chain):
        probe = min(lo + step - 1, len(chain) - 1)
        if E.issubset(chain[probe]):
            hi = probe
            break
        lo = probe + 1
        step *= 2
    if hi is None:
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if E.issubset(chain[mid]):
            hi = mid
        else:
            lo = mid + 1
    return lo


def same_filtration(X: CoarseSpace, Y: CoarseSpace) -> bool:
    """True iff every relation gets the same scale in ``X`` and ``Y``."""
    return X.ground == Y.ground and [E.rows for E in X.chain] == [E.rows for E in Y.chain]


def same_structure(X: CoarseSpace, Y: CoarseSpace) -> bool:
    """True iff both chains generate the same family of entourages."""
    return X.ground == Y.ground and X.top.rows == Y.top.rows


def _compress(mask: int, positions: dict[int, int]) -> int:
    out = 0
    for b in iter_bits(mask):
        out |= 1 << positions[b]
    return out


def subspace(X: CoarseSpace, N: Iterable) -> CoarseSpace:
    g = X.ground
    keep = g.mask(N)
    idx = list(iter_bits(keep))
    positions = {b: i for i, b in enumerate(idx)}
    sub = GroundSet(g.points[b] for b in idx)
    chain = [
        Relation._raw(sub, [_compress(E.rows[a] & keep, positions) for a in idx]) for E in X.chain
    ]
    return make_filtered(sub, chain, "derived")


def product(X: CoarseSpace, Y: CoarseSpace) -> CoarseSpace:
    nx, ny = len(X.ground), len(Y.ground)
    ground = GroundSet((a, b) for a in X.ground.points for b in Y.ground.points)
    depth = max(X.depth, Y.depth)
    chain = []
    for i in range(depth + 1):
        E, F = X.entourage(i), Y.entourage(i)
        rows = []
        for a in range(nx):
            shifted = 0
            for a2 in iter_bits(E.rows[a]):
                shifted |= 1 << (a2 * ny)
            for b in range(ny):
                # spread F[b] across every block a2 in E[a]
                rows.append(_spread(shifted, F.rows[b]))
        chain.append(Relation._raw(ground, rows))
    return make_filtered(ground, chain, "product", {"factors": (X, Y)})


def _spread(block_bits: int, pattern: int) -> int:
    out = 0
    while block_bits:
        low = block_bits & -block_bits
        out |= pattern << (low.bit_length() - 1)
        block_bits ^= low
    return out


def coproduct(X: CoarseSpace, Y: CoarseSpace) -> CoarseSpace:
    """Disjoint union with points tagged ``(1, m)`` and ``(2, n)``."""
    nx = len(X.ground)
    ground = GroundSet([(1, m) for m in X.ground.points] + [(2, m) for m in Y.ground.points])
    depth = max(X.depth, Y.depth)
    chain = []
    for i in range(depth + 1):
        E, F = X.entourage(i), Y.entourage(i)
        rows = list(E.rows) + [r << nx for r in F.rows]
        chain.append(Relation._raw(ground, rows))
    return make_filtered(ground, chain, "coproduct", {"summands": (X, Y)})


def reach(X: CoarseSpace, i: int) -> float:
    """Largest distance joined by chain element ``i`` of a line space."""
    values = X.info.get("line")
    if values is None:
        raise ValueError("reach is only defined for spaces built with from_line")
    best = 0
    for a, row in enumerate(X.chain[i].rows):
        if row:
            best = max(best, values[row.bit_length() - 1] - values[a])
    return best
