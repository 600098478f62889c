import random

import pytest

from dworktheta.certificate import Verdict
from dworktheta.curve import TwoTorsion, basis_A, make_curve, parse_divisor_spec
from dworktheta.dwork import dwork_loop, dwork_translate
from dworktheta.errors import DomainError, WindowError
from dworktheta.grassmann import (
    index_via_fV,
    kappa_length,
    loop_act,
    product_space,
    reduce_admissible,
    same_bundle,
    same_space,
    space_A,
    space_divisor,
    theta_member,
    twist_space,
)
from dworktheta.laurent import Series
from dworktheta.padic import make_context


def test_space_A_partition_and_index(curve):
    A = space_A(curve)
    assert A.partition == (2, 1, 0)
    assert A.index == -1
    assert index_via_fV(A) == -1
    assert A.a1_all


@pytest.mark.parametrize("indices,partition", [((0,), (1, 0)), ((2,), (1, 0)), ((0, 3), (0,)), ((1, 4), (0,))])
def test_two_torsion_partitions(curve, indices, partition):
    W = space_divisor(curve, TwoTorsion(indices))
    assert W.partition == partition
    assert W.index == -1
    assert index_via_fV(W) == -1


def test_point_partition(curve):
    W = space_divisor(curve, parse_divisor_spec(curve.prime, "Q=(1,sqrt2)"))
    assert W.partition == (1, 0)
    assert W.index == -1


def test_genus_three_partitions():
    curve = make_curve(make_context(3, 13, 2), 160)
    assert space_A(curve).partition == (3, 2, 1, 0)
    assert space_divisor(curve, TwoTorsion((0, 5))).partition == (1, 0)


def test_kappa_length():
    assert kappa_length((2, 1, 0)) == 2
    assert kappa_length((0,)) == 0


def test_reduce_admissible_reads_index_from_degrees(ctx):
    W = reduce_admissible([Series.monomial(1, d) for d in range(1, 8)], ctx)
    assert W.index == 0
    assert W.partition == (0,)
    with pytest.raises(DomainError):
        theta_member(W)


def test_reduce_admissible_needs_a_stable_run(ctx):
    with pytest.raises(WindowError):
        reduce_admissible([Series.monomial(1, d) for d in (0, 2, 4)], ctx)


def test_theta_membership_of_explicit_spaces(curve):
    assert theta_member(space_A(curve)).verdict == Verdict.IN
    assert theta_member(space_divisor(curve, TwoTorsion((0,)))).verdict == Verdict.IN
    assert theta_member(space_divisor(curve, TwoTorsion((0, 3)))).verdict == Verdict.OUT
    q = parse_divisor_spec(curve.prime, "Q=(1,sqrt2)")
    assert theta_member(space_divisor(curve, q)).verdict == Verdict.IN


def test_theta_in_carries_a_witness(curve):
    cert = theta_member(space_A(curve))
    assert cert.witness == "A.w1"
    assert cert.evidence["deg_w1"] == 0


def test_twist_preserves_partition(curve):
    A = space_A(curve)
    assert twist_space(A).partition == A.partition


def test_same_bundle(curve):
    A = space_A(curve)
    assert same_bundle(curve, A, A).verdict == Verdict.PASS
    W = space_divisor(curve, TwoTorsion((0, 3)))
    assert same_bundle(curve, A, W).verdict == Verdict.FAIL


def test_loop_act_cases(curve, ctx):
    A = space_A(curve)
    fixed = loop_act(curve, Series.one(), A)
    assert fixed.case == "abar"
    assert fixed.space is A
    minus = loop_act(curve, Series.from_terms({0: 1, -1: 5}), A)
    assert minus.case == "minus"
    assert minus.space.index == A.index
    h = dwork_loop(ctx, 1, 40).expansion
    plus = loop_act(curve, h, A, label="h")
    assert plus.case == "plus"
    assert not plus.space.explicit
    assert plus.space.label == "h·A"
    assert plus.space.index == -1


def test_loop_act_rejects_non_loops(curve):
    with pytest.raises(DomainError):
        loop_act(curve, Series.from_terms({0: 17, 1: 1}), space_A(curve))
    with pytest.raises(DomainError):
        loop_act(curve, curve.x, space_A(curve))
    with pytest.raises(DomainError):
        loop_act(curve, Series.zero(), space_A(curve))


@pytest.mark.slow
def test_product_index_is_additive(curve):
    V = product_space(space_divisor(curve, TwoTorsion((0,))), space_divisor(curve, TwoTorsion((3,))))
    assert V.index == -1
    assert V.certificate.evidence["additivity"] == {"expected": -1, "observed": -1}


@pytest.mark.slow
def test_loop_translate_of_A_avoids_theta():
    ctx = make_context(2, 17, 2)
    curve = make_curve(ctx)
    h = dwork_loop(ctx, 1).expansion
    translate = loop_act(curve, h, space_A(curve)).space
    assert theta_member(translate).verdict == Verdict.OUT


def _mix(rng, gens):
    """Add integer multiples of lower-degree rows to higher ones, then shuffle."""
    rows = sorted(gens, key=lambda v: v.hi)
    mixed = []
    for j, v in enumerate(rows):
        for w in rows[:j]:
            v = v + w.scale(rng.randrange(-5, 6))
        mixed.append(v)
    rng.shuffle(mixed)
    return mixed


def test_reduce_admissible_is_idempotent_and_span_invariant(ctx):
    rng = random.Random(6)
    degrees = (0, 2, 3, 4, 5, 6, 7)
    for _ in range(200):
        gens = [Series.from_terms({d: 1, **{n: rng.randrange(-9, 10) for n in range(d - 3, d)}})
                for d in degrees]
        W = reduce_admissible(gens, ctx)
        assert W.partition == (1, 0)
        assert same_space(reduce_admissible(W.basis, ctx), W)
        V = reduce_admissible(_mix(rng, gens), ctx)
        assert (V.index, V.partition) == (W.index, W.partition)
        assert same_space(V, W)


def test_reduce_admissible_of_premixed_rows_of_A(curve):
    A = space_A(curve)
    rng = random.Random(7)
    for _ in range(3):
        V = reduce_admissible(_mix(rng, basis_A(curve, len(A.basis))), curve.prime)
        assert (V.index, V.partition) == (A.index, A.partition)
        assert same_space(V, A)


def test_additivity_mismatch_is_a_failed_certificate(ctx):
    W = reduce_admissible([Series.monomial(1, d) for d in range(1, 8)], ctx)
    V = product_space(W, W)
    assert V.certificate.verdict == Verdict.FAIL
    assert V.certificate.stage == "additivity"
    assert V.certificate.evidence["additivity"] == {"expected": 1, "observed": -1}


@pytest.mark.slow
def test_A_is_the_identity_for_products(curve):
    A = space_A(curve)
    AA = product_space(A, A)
    assert AA.certificate.verdict == Verdict.PASS
    assert same_space(AA, A)
    W = space_divisor(curve, TwoTorsion((0,)))
    WA = product_space(W, A)
    assert WA.certificate.verdict == Verdict.PASS
    assert same_space(WA, W)


def test_translates_of_the_same_loop_share_a_bundle(curve):
    V = dwork_translate(curve, space_A(curve), 1).space
    assert same_bundle(curve, V, V).verdict == Verdict.PASS
