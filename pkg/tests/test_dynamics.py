import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsedyn.coarse_maps import PointMap
from coarsedyn.dynamics import (
    CoarseDynamicalSystem,
    Conjugacy,
    TimeGroup,
    Verdict,
    check_conjugacy,
    compose_conjugacy,
    coproduct_cds,
    coproduct_conjugacy,
    identity_conjugacy,
    inverse_conjugacy,
    orbit,
    orbit_preservation_check,
    sub_cds,
    validate_cds,
)
from coarsedyn.generate import generate_instance
from systems import identity_time, rotation, shift, trivial


def test_rotation_system_validates():
    S = rotation()
    assert validate_cds(S)
    # singleton mode: composition holds as exact table equality
    G = S.group
    for a in range(4):
        for b in range(4):
            composed = [S.evolution[a].table[S.evolution[b].table[m]] for m in range(4)]
            assert composed == list(S.evolution[G.table[a][b]].table)


def test_trivial_system_validates():
    assert validate_cds(trivial())


def test_identity_axiom_violation_has_witness():
    S = rotation()
    bad = list(S.evolution)
    bad[0] = S.evolution[1]
    v = validate_cds(CoarseDynamicalSystem(S.space, S.time, bad))
    assert not v and v.clause == "identity" and v.witness["g"] == 0


def test_composition_violation():
    S = rotation()
    # phi^2 := phi^1 keeps every map an isometry but breaks phi^1 o phi^1 = phi^2
    evo = list(S.evolution)
    evo[2] = S.evolution[1]
    v = validate_cds(CoarseDynamicalSystem(S.space, S.time, evo))
    assert not v and v.clause == "composition"
    # first pair in scan order: phi^1 o phi^1 shifts by 2, phi^2 by 1
    assert (v.witness["g1"], v.witness["g2"]) == (1, 1)


def test_set_valued_operation_relaxes_composition():
    S = rotation()
    G = S.group
    # allow g1 * g2 to be {g1 + g2, 0}; the true product is always present
    op = {(a, b): [G.table[a][b], 0] for a in range(4) for b in range(4)}
    T = CoarseDynamicalSystem(S.space, TimeGroup(S.time.ideal, op), S.evolution)
    assert T.time.set_valued and validate_cds(T)
    with pytest.raises(ValueError):
        TimeGroup(S.time.ideal, {(0, 0): []})


def test_orbits():
    S = rotation()
    for m in range(4):
        assert orbit(S, m).points == frozenset(range(4))
    T = trivial()
    assert orbit(T, "a").points == {"a"}
    O = orbit(S, 0).points
    for phi in S.evolution:
        assert {phi(m) for m in O} == O


def test_check_conjugacy_rotation_relabelling():
    A, B = rotation(), rotation(tag="b")
    c = check_conjugacy(A, B, shift(A, B, 1), PointMap(A.group.elements, B.group.elements, range(4)))
    assert isinstance(c, Conjugacy)
    assert isinstance(identity_conjugacy(A), Conjugacy)


def test_check_conjugacy_clause_d_failure():
    A = rotation()
    odd = PointMap(A.ground, A.ground, [1, 0, 2, 3])
    v = check_conjugacy(A, A, odd, identity_time(A))
    assert isinstance(v, Verdict) and v.clause == "d"
    assert set(v.witness) == {"g", "m"}


def test_check_conjugacy_clause_c_failure():
    A = rotation()
    # same maps, but the target's operation sends 1 * 1 to {2, 3}; h = id cannot carry {2} onto it
    G = A.group
    op = {(a, b): [G.table[a][b]] for a in range(4) for b in range(4)}
    op[1, 1] = [2, 3]
    B = CoarseDynamicalSystem(A.space, TimeGroup(A.time.ideal, op), A.evolution)
    v = check_conjugacy(A, B, PointMap.identity(A.ground), identity_time(A))
    assert isinstance(v, Verdict) and v.clause == "c"


def test_inverse_and_compose():
    A, B, C = rotation(), rotation(tag="b"), rotation(tag="c")
    h = lambda X, Y: PointMap(X.group.elements, Y.group.elements, range(4))
    c1 = check_conjugacy(A, B, shift(A, B, 1), h(A, B))
    inv = inverse_conjugacy(c1)
    assert list(inv.f.table) == [3, 0, 1, 2]
    twice = inverse_conjugacy(inv)
    assert twice.f == c1.f and twice.h == c1.h
    c2 = check_conjugacy(B, C, shift(B, C, 2), h(B, C))
    c3 = compose_conjugacy(c1, c2)
    assert list(c3.f.table) == [3, 0, 1, 2]
    back = compose_conjugacy(c1, inv)
    assert back.f == PointMap.identity(A.ground)
    ident = identity_conjugacy(A)
    assert inverse_conjugacy(ident).f == ident.f


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_composition_is_associative_on_generated_triples(seed):
    inst = generate_instance(seed, 0)
    back = inverse_conjugacy(inst.bc)
    left = compose_conjugacy(compose_conjugacy(inst.ab, inst.bc), back)
    right = compose_conjugacy(inst.ab, compose_conjugacy(inst.bc, back))
    assert left.f == right.f and left.h == right.h


def test_orbit_preservation():
    A, B = rotation(), rotation(tag="b")
    c = check_conjugacy(A, B, shift(A, B, 1), PointMap(A.group.elements, B.group.elements, range(4)))
    for m in range(4):
        assert orbit_preservation_check(c, m)
        assert orbit_preservation_check(identity_conjugacy(A), m)


def test_coproduct_systems():
    A = rotation()
    C = coproduct_cds(A, A)
    assert len(C.ground) == 8 and len(C.group) == 16
    assert C.group.elements.points[C.group.identity] == ((1, 0), (2, 0))
    assert validate_cds(C)
    T = coproduct_cds(trivial("a"), trivial("b"))
    assert len(T.group) == 1


def test_coproduct_conjugacy():
    A, B = rotation(), rotation(tag="b")
    c = check_conjugacy(A, B, shift(A, B, 1), PointMap(A.group.elements, B.group.elements, range(4)))
    cc = coproduct_conjugacy(c, c)
    for p in cc.source.ground.points:
        assert cc.f(p)[0] == p[0]
    ident = coproduct_conjugacy(identity_conjugacy(A), identity_conjugacy(A))
    assert ident.f == PointMap.identity(ident.source.ground)


def test_sub_cds():
    A = rotation()
    same = sub_cds(A, range(4), range(4))
    assert [p.table for p in same.evolution] == [p.table for p in A.evolution]
    sub = sub_cds(A, [0, 2], [0, 2])
    assert len(sub.ground) == 2 and len(sub.group) == 2
    with pytest.raises(ValueError, match="not invariant"):
        sub_cds(A, [0], [0, 1, 2, 3])
    with pytest.raises(ValueError, match="subgroup"):
        sub_cds(A, range(4), [0, 1])


def test_generated_conjugacies_verify():
    rng = random.Random(1)
    for idx in rng.sample(range(1000), 20):
        inst = generate_instance(99, idx)
        again = check_conjugacy(inst.A, inst.B, inst.ab.f, inst.ab.h)
        assert isinstance(again, Conjugacy)
        with pytest.raises(ValueError, match="middle"):
            compose_conjugacy(inst.bc, inst.ab)
