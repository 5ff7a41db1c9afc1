import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsedyn.coarse_group import windowed_line
from coarsedyn.coarse_maps import PointMap
from coarsedyn.coarse_space import bounded, discrete, from_metric, subspace, validate
from coarsedyn.dynamics import check_conjugacy, identity_conjugacy, validate_cds
from coarsedyn.hyperspace import (
    HYPER_CAP,
    HyperCapExceeded,
    exp_entourage,
    exp_map,
    exp_preservation_check,
    exp_space,
    hyper_ground,
    lift_cds,
    lift_conjugacy,
)
from coarsedyn.relation_core import GroundSet, Relation, compose, diagonal, inverse
from oracles import pairs_of
from systems import rotation, shift, trivial


def exp_oracle(E, n):
    """Pairs (K, L) of masks with K inside E[L] and L inside E[K]."""
    pe = pairs_of(E)

    def img(K):
        return {b for (a, b) in pe if K >> a & 1}

    def subset(K, S):
        return all(k in S for k in range(n) if K >> k & 1)

    return {(K, L) for K in range(1 << n) for L in range(1 << n) if subset(K, img(L)) and subset(L, img(K))}


def line(n, scales=(2,)):
    g = GroundSet(range(n))
    return from_metric(g, [[abs(a - b) for b in range(n)] for a in range(n)], scales)


def test_exp_of_diagonal_is_diagonal():
    g = GroundSet(range(4))
    assert exp_entourage(diagonal(g)) == diagonal(hyper_ground(g))


def test_exp_strip_examples():
    X = line(4)
    E = exp_entourage(X.chain[0])
    assert (frozenset({0}), frozenset({1})) in E
    assert (frozenset({0}), frozenset({2})) not in E
    empty = frozenset()
    assert {L for (K, L) in E.pairs() if K == empty} == {empty}


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.data())
def test_exp_matches_oracle(n, data):
    g = GroundSet(range(n))
    rows = [data.draw(st.integers(0, (1 << n) - 1)) for _ in range(n)]
    E = Relation(g, rows)
    assert pairs_of(exp_entourage(E)) == exp_oracle(E, n)
    # entourages of a coarse space are symmetric; there the lift commutes with inversion
    S = Relation(g, [E.rows[a] | inverse(E).rows[a] for a in range(n)])
    assert exp_entourage(inverse(S)) == inverse(exp_entourage(S))


def test_inverse_identity_needs_symmetry():
    g = GroundSet(range(4))
    E = Relation.from_pairs(g, [(3, 0), (3, 3)])
    lifted = exp_entourage(E)
    # the two-sided condition makes every lift symmetric...
    assert inverse(lifted) == lifted
    # ...but lifting the inverse of a one-way relation gives something smaller
    assert exp_entourage(inverse(E)) != lifted
    assert (frozenset({3}), frozenset({0, 3})) in lifted


def test_exp_composition_inclusion_small():
    rng = random.Random(4)
    for n in range(1, 6):
        g = GroundSet(range(n))
        for _ in range(10):
            rows = [rng.getrandbits(n) | 1 << a for a in range(n)]
            E = Relation(g, rows)
            lhs = compose(exp_entourage(E), exp_entourage(E))
            assert lhs <= exp_entourage(compose(E, E))


def test_exp_space_of_discrete_and_bounded():
    g = GroundSet("abc")
    D = exp_space(discrete(g))
    assert D.chain == (diagonal(D.ground),)
    B = validate(exp_space(bounded(g)))
    empty = frozenset()
    for K, L in ((K, L) for K in B.ground.points for L in B.ground.points):
        related = (K, L) in B.top
        assert related == ((K == empty) == (L == empty))


def test_exp_space_validates_and_is_monotone():
    X = line(5, (1.5, 2.5))
    H = validate(exp_space(X))
    for E, F in zip(H.chain, H.chain[1:]):
        assert E <= F


def test_singletons_embed_the_base():
    X = line(5, (1.5, 2.5))
    H = exp_space(X)
    S = subspace(H, [frozenset({m}) for m in X.ground.points])
    relabel = [[(next(iter(a)), next(iter(b))) for a, b in E.pairs()] for E in S.chain]
    for i in range(max(X.depth, S.depth) + 1):
        assert set(relabel[min(i, S.depth)]) == set(X.entourage(i).pairs())


def test_exp_map_basics():
    g = GroundSet(range(4))
    assert exp_map(PointMap.identity(g)) == PointMap.identity(hyper_ground(g))
    f = PointMap(g, g, [0, 0, 1, 3])
    F = exp_map(f)
    assert F(frozenset()) == frozenset()
    for K in F.source.points:
        img = F(K)
        assert len(img) <= len(K)
        assert (len(img) == len(K)) == (len({f(k) for k in K}) == len(K))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=4, max_size=4), st.lists(st.integers(0, 3), min_size=4, max_size=4))
def test_exp_is_functorial(t1, t2):
    g = GroundSet(range(4))
    f, h = PointMap(g, g, t1), PointMap(g, g, t2)
    assert exp_map(f.then(h)) == exp_map(f).then(exp_map(h))


def test_preservation_identity_floor_and_collapse():
    X = line(4)
    idm = PointMap.identity(X.ground)
    rep = exp_preservation_check(idm, X, X)
    assert rep.ok and all(rep.lifted.flags().values())

    _, Z = windowed_line("INTEGER", 2, 1, (1, 2))
    _, R = windowed_line("GRID", 1, Fraction(1, 2), (1, 2))
    flo = PointMap.from_function(R.ground, Z.ground, math.floor)
    rep = exp_preservation_check(flo, R, Z)
    assert rep.ok and rep.base.bornologous and rep.lifted.bornologous

    D = discrete(GroundSet("ab"))
    P = discrete(GroundSet("p"))
    collapse = PointMap.from_function(D.ground, P.ground, lambda _: "p")
    rep = exp_preservation_check(collapse, D, P)
    assert rep.ok
    assert not rep.base.effectively_proper and not rep.lifted.effectively_proper


def test_preservation_on_random_maps():
    rng = random.Random(12)
    inf = math.inf
    g = GroundSet(range(5))
    d = [[0, 1, 2, inf, inf], [1, 0, 1, inf, inf], [2, 1, 0, inf, inf], [inf, inf, inf, 0, 3], [inf, inf, inf, 3, 0]]
    X = from_metric(g, d, (1.5,))
    Xh = exp_space(X)
    for _ in range(30):
        f = PointMap(g, g, [rng.randrange(5) for _ in range(5)])
        assert exp_preservation_check(f, X, X, X_hyper=Xh, Y_hyper=Xh).ok


def test_cap_enforced():
    g = GroundSet(range(5))
    with pytest.raises(HyperCapExceeded):
        hyper_ground(g, cap=4)
    with pytest.raises(ValueError):
        hyper_ground(g, cap=HYPER_CAP + 1)


def test_lift_rotation_system_and_conjugacy():
    A, B = rotation(), rotation(tag="b")
    L = lift_cds(A)
    assert len(L.ground) == 16 and validate_cds(L)
    for g, phi in enumerate(A.evolution):
        for m in A.ground.points:
            assert L.evolution[g](frozenset({m})) == frozenset({phi(m)})
    c = check_conjugacy(A, B, shift(A, B, 1), PointMap(A.group.elements, B.group.elements, range(4)))
    lc = lift_conjugacy(c)
    assert lc.h == c.h
    li = lift_conjugacy(identity_conjugacy(A))
    assert li.f == PointMap.identity(li.source.ground)


def test_lift_trivial_system():
    T = lift_cds(trivial())
    assert all(phi == PointMap.identity(T.ground) for phi in T.evolution)
