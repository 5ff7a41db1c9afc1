"""Coarse hyperspaces on power sets and lifts of maps and systems to them.

A subset ``K`` of a base ground set is identified with its bitmask, so the
hyper-ground lists all ``2**n`` subsets in increasing mask order, the empty
set first.  Labels are frozensets of base labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .coarse_maps import MapReport, PointMap, classify
from .coarse_space import CoarseSpace, make_filtered
from .dynamics import (
    CoarseDynamicalSystem,
    Conjugacy,
    ConjugacyError,
    Verdict,
    check_conjugacy,
    validate_cds,
)
from .relation_core import GroundSet, Relation, iter_bits

__all__ = [
    "HYPER_CAP",
    "HyperCapExceeded",
    "hyper_ground",
    "exp_entourage",
    "exp_space",
    "exp_map",
    "exp_preservation_check",
    "PreservationReport",
    "lift_cds",
    "lift_conjugacy",
]

HYPER_CAP = 12

_FLAGS = ("bornologous", "effectivelyProper", "asymorphism", "coarseEquivalence")


class HyperCapExceeded(ValueError):
    pass


def _cap(n: int, cap: int) -> None:
    if cap > HYPER_CAP:
        raise ValueError(f"the hyperspace cap can only be lowered (maximum {HYPER_CAP})")
    if n > cap:
        raise HyperCapExceeded(f"{n} base points exceed the hyperspace cap of {cap}")


def hyper_ground(base: GroundSet, cap: int = HYPER_CAP) -> GroundSet:
    """All subsets of ``base`` in mask order, labelled as frozensets."""
    _cap(len(base), cap)
    return _hyper_ground(base)


@lru_cache(maxsize=64)
def _hyper_ground(base: GroundSet) -> GroundSet:
    # cached so lifts of one base share a ground object (cheap equality checks)
    pts = base.points
    return GroundSet(frozenset(pts[i] for i in iter_bits(K)) for K in range(1 << len(pts)))


def _rows_from_bool(mat: np.ndarray) -> list[int]:
    packed = np.packbits(mat, axis=1, bitorder="little")
    return [int.from_bytes(r.tobytes(), "little") for r in packed]


def exp_entourage(E: Relation, cap: int = HYPER_CAP) -> Relation:
    """``{(K, L) : K <= E[L] and L <= E[K]}`` on the power set."""
    n = len(E.ground)
    hg = hyper_ground(E.ground, cap)
    size = 1 << n
    # images of every subset, built from the subset without its lowest bit
    img = [0] * size
    for K in range(1, size):
        low = K & -K
        img[K] = img[K ^ low] | E.rows[low.bit_length() - 1]
    imgs = np.array(img, dtype=np.int64)
    subsets = np.arange(size, dtype=np.int64)
    rows_bool = np.empty((size, size), dtype=bool)
    for K in range(size):
        rows_bool[K] = ((subsets & ~imgs[K]) == 0) & ((K & ~imgs) == 0)
    return Relation._raw(hg, _rows_from_bool(rows_bool))


def exp_space(X: CoarseSpace, cap: int = HYPER_CAP) -> CoarseSpace:
    """Lift every chain element and renormalize."""
    lifted = [exp_entourage(E, cap) for E in X.chain]
    return make_filtered(lifted[0].ground, lifted, "hyper", {"base": X})


def exp_map(f: PointMap, cap: int = HYPER_CAP) -> PointMap:
    """``K -> f(K)``."""
    src = hyper_ground(f.source, cap)
    dst = hyper_ground(f.target, cap)
    size = 1 << len(f.source)
    table = [0] * size
    t = f.table
    for K in range(1, size):
        low = K & -K
        table[K] = table[K ^ low] | 1 << t[low.bit_length() - 1]
    return PointMap(src, dst, table)


@dataclass(frozen=True)
class PreservationReport:
    base: MapReport
    lifted: MapReport

    @property
    def mismatches(self) -> list[str]:
        a, b = self.base.flags(), self.lifted.flags()
        return [k for k in _FLAGS if a[k] != b[k]]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def exp_preservation_check(
    f: PointMap,
    X: CoarseSpace,
    Y: CoarseSpace,
    cap: int = HYPER_CAP,
    X_hyper: CoarseSpace | None = None,
    Y_hyper: CoarseSpace | None = None,
) -> PreservationReport:
    """Classify ``f`` and ``exp f``; the four class flags must agree."""
    Xh = X_hyper if X_hyper is not None else exp_space(X, cap)
    Yh = Y_hyper if Y_hyper is not None else exp_space(Y, cap)
    return PreservationReport(classify(f, X, Y), classify(exp_map(f, cap), Xh, Yh))


def lift_cds(sys: CoarseDynamicalSystem, cap: int = HYPER_CAP) -> CoarseDynamicalSystem:
    """The set-valued system on the power set, evolving by ``exp phi^g``."""
    lifted = CoarseDynamicalSystem(
        exp_space(sys.space, cap), sys.time, [exp_map(phi, cap) for phi in sys.evolution]
    )
    verdict = validate_cds(lifted)
    if not verdict:
        raise ConjugacyError(f"lifted system failed validation at {verdict.clause}: {verdict.witness}")
    return lifted


def lift_conjugacy(
    c: Conjugacy,
    cap: int = HYPER_CAP,
    source: CoarseDynamicalSystem | None = None,
    target: CoarseDynamicalSystem | None = None,
) -> Conjugacy:
    """``(exp f, h)`` between the lifted systems, re-verified."""
    src = source if source is not None else lift_cds(c.source, cap)
    dst = target if target is not None else lift_cds(c.target, cap)
    result = check_conjugacy(src, dst, exp_map(c.f, cap), c.h)
    if isinstance(result, Verdict):
        raise ConjugacyError(f"lifted conjugacy failed at clause {result.clause}: {result.witness}")
    return result
