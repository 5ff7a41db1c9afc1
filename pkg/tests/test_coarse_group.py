import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsedyn.coarse_group import (
    FiniteGroup,
    GroupError,
    cyclic,
    direct_product,
    discrete_ideal,
    finitary_ideal,
    free_rank,
    group_space,
    ideal_from_structure,
    inversion_asymorphism_check,
    klein,
    left_coarse_group_check,
    left_entourage,
    right_entourage,
    subgroups,
    symmetric,
    unified_demo,
    validate_ideal_chain,
    windowed_line,
)
from coarsedyn.coarse_space import CoarseSpace, bounded, discrete, membership_scale, same_structure
from coarsedyn.relation_core import Relation, diagonal
from oracles import pairs_of, scale_oracle

GROUPS = {"Z4": cyclic(4), "Z2xZ2": klein(), "S3": symmetric(3), "Z6": cyclic(6), "Z1": cyclic(1)}


def test_group_axioms_rejected():
    with pytest.raises(GroupError):
        FiniteGroup("ab", [[0, 0], [0, 0]])  # no inverse for b
    with pytest.raises(GroupError):
        FiniteGroup("ab", [[0, 1], [1, 1]])


def test_catalog_orders_and_abelian_flags():
    assert [len(GROUPS[k]) for k in ("Z4", "Z2xZ2", "S3", "Z6")] == [4, 4, 6, 6]
    assert GROUPS["Z4"].is_abelian() and not GROUPS["S3"].is_abelian()
    assert len(subgroups(GROUPS["S3"])) == 6
    assert len(subgroups(GROUPS["Z2xZ2"])) == 5
    assert len(direct_product(cyclic(2), cyclic(3))) == 6


def test_validate_ideal_chain_normalizes():
    Z4 = cyclic(4)
    assert validate_ideal_chain(Z4, [[0]]).masks == discrete_ideal(Z4).masks
    I = validate_ideal_chain(Z4, [[0], [0, 1]])
    assert I.labels() == [[0], [0, 1, 3], [0, 1, 2, 3]]
    full = validate_ideal_chain(Z4, [list(range(4))])
    assert same_structure(group_space(full), bounded(Z4.elements))


def test_left_entourage_balls_and_size():
    Z4 = cyclic(4)
    assert left_entourage(Z4, [0]) == diagonal(Z4.elements)
    E = left_entourage(Z4, [0, 1, 3])
    assert set(E.ground.labels(E.rows[2])) == {1, 2, 3}
    assert len(E) == 4 * 3


@settings(max_examples=100)
@given(st.sampled_from(sorted(GROUPS)), st.data())
def test_ball_is_left_coset(name, data):
    G = GROUPS[name]
    H = data.draw(st.integers(0, G.elements.full_mask))
    E = left_entourage(G, H)
    assert len(E) == len(G) * H.bit_count()
    for g in range(len(G)):
        coset = {G.table[g][h] for h in range(len(G)) if H >> h & 1}
        assert E.rows[g] == sum(1 << c for c in coset)


def test_right_entourage():
    Z4 = cyclic(4)
    assert right_entourage(Z4, [0, 1]) == left_entourage(Z4, [0, 1])
    S3 = symmetric(3)
    H = [S3.elements.points[S3.identity], (1, 0, 2)]
    L, R = left_entourage(S3, H), right_entourage(S3, H)
    assert L != R and len(L) == len(R) == 12
    assert right_entourage(S3, H[:1]) == diagonal(S3.elements)


def test_left_coarse_group_check():
    Z4 = cyclic(4)
    I = validate_ideal_chain(Z4, [[0], [0, 1]])
    assert left_coarse_group_check(Z4, group_space(I)).is_identity()
    assert left_coarse_group_check(Z4, discrete(Z4.elements)).is_identity()
    # joining only 0 and 1 is not shift invariant
    g = Z4.elements
    E = Relation.from_pairs(g, [(k, k) for k in range(4)] + [(0, 1), (1, 0)])
    bad = left_coarse_group_check(Z4, CoarseSpace(g, (E,)))
    assert not bad
    shift, (a, b) = bad.pair
    assert {(Z4.table[shift][0]), Z4.table[shift][1]} == {a, b}


def test_ideal_from_structure_round_trip():
    Z4 = cyclic(4)
    assert ideal_from_structure(Z4, discrete(Z4.elements)).masks == (1,)
    I = validate_ideal_chain(Z4, [[0], [0, 1, 3], [0, 1, 2, 3]])
    assert ideal_from_structure(Z4, group_space(I)).masks == I.masks


def _all_relations(g):
    cells = list(itertools.product(range(len(g)), repeat=2))
    for bits in range(1 << len(cells)):
        rows = [0] * len(g)
        for k, (a, b) in enumerate(cells):
            if bits >> k & 1:
                rows[a] |= 1 << b
        yield Relation(g, rows)


def test_round_trip_membership_on_every_relation_of_a_small_group():
    # |G| = 3 keeps the 2^9 relations cheap; every subset chain is covered
    G = cyclic(3)
    for H1, H2 in itertools.product(range(1, 8), repeat=2):
        I = validate_ideal_chain(G, [G.elements.labels(H1), G.elements.labels(H2)])
        X = group_space(I)
        Y = group_space(ideal_from_structure(G, X))
        for E in _all_relations(G.elements):
            assert membership_scale(X, E) == membership_scale(Y, E)


def test_inversion_asymorphism():
    Z4 = cyclic(4)
    assert inversion_asymorphism_check(validate_ideal_chain(Z4, [[1]])).asymorphism
    S3 = symmetric(3)
    I = validate_ideal_chain(S3, [[(1, 0, 2)]])
    rep = inversion_asymorphism_check(I)
    assert rep.asymorphism and rep.bornologous_ctl.is_identity()
    assert inversion_asymorphism_check(discrete_ideal(S3)).asymorphism


def test_top_of_ideal_is_subgroup():
    S3 = symmetric(3)
    for H in range(1, 1 << 6):
        I = validate_ideal_chain(S3, [S3.elements.labels(H)])
        assert S3.product_mask(I.top, I.top) == I.top


def test_finitary_ideal_and_free_rank():
    assert finitary_ideal(cyclic(1)).masks == (1,)
    Z4 = cyclic(4)
    assert finitary_ideal(Z4).labels() == [[0], [0, 1, 2, 3]]
    assert same_structure(group_space(finitary_ideal(Z4)), bounded(Z4.elements))
    assert free_rank(Z4) == 0
    with pytest.raises(GroupError):
        free_rank(symmetric(3))


def test_windowed_lines():
    W, Z = windowed_line("INTEGER", 4)
    assert list(Z.ground.points) == list(range(-4, 5))
    _, R = windowed_line("GRID", 4, Fraction(1, 4))
    assert len(R.ground) == 33
    _, Z2 = windowed_line("INTEGER", 4, 1, (1, 2))
    assert {(a, b) for a, b in Z2.chain[1].pairs()} == {(a, b) for a in range(-4, 5) for b in range(-4, 5) if abs(a - b) <= 1}
    with pytest.raises(ValueError):
        windowed_line("INTEGER", 4, Fraction(1, 2))
    with pytest.raises(ValueError):
        windowed_line("GRID", 1, Fraction(2, 3))


def test_unified_demo_small_window_against_enumeration():
    rep = unified_demo(4, Fraction(1, 4))
    assert rep.ok and rep.floor_after_inclusion_is_identity
    assert rep.floor_after_inclusion_scale == 0
    _, R = windowed_line("GRID", 4, Fraction(1, 4))
    pairs = {(R.ground.position(Fraction(math.floor(x))), R.ground.position(x)) for x in R.ground.points}
    assert rep.inclusion_after_floor_scale == scale_oracle([pairs_of(E) for E in R.chain], pairs)
    rho = rep.floor.bornologous_ctl
    assert all(rho(i) <= i + 1 for i in range(len(rho.table)))


def test_unified_demo_unit_step_is_identity():
    rep = unified_demo(6, 1)
    assert rep.inclusion.bornologous_ctl.is_identity()
    assert rep.floor.bornologous_ctl.is_identity()
    assert rep.inclusion.asymorphism
