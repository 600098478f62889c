from fractions import Fraction

import pytest

from dworktheta.certificate import Verdict
from dworktheta.curve import make_curve
from dworktheta.dwork import (
    certify_eigenline,
    certify_ptorsion,
    dwork_power_translate,
    dwork_translate,
    check_decay,
    check_hypotheses,
    default_head,
    dwork_loop,
    exact_context,
    factor_hp,
    factor_twist,
    gap_vector,
    loop_decay,
    loop_log,
    negative_control,
    split_Tp,
    theta_avoid,
)
from dworktheta.errors import DomainError
from dworktheta.grassmann import loop_act, same_bundle, space_A, twist_space
from dworktheta.laurent import Series
from dworktheta.padic import Scalar, make_context


def test_loop_decay_and_default_head():
    assert loop_decay(17) == Fraction(16, 289)
    assert default_head(make_context(2, 17, 6)) == 109


def test_loop_leading_coefficients(ctx):
    h = dwork_loop(ctx, 1, 40).expansion
    assert h.coeff(0) == 1
    assert h.coeff(1) == Scalar.pi(ctx)
    assert (h.lo, h.hi) == (0, 40)
    assert h.tail_exact and not h.head_exact


def test_loop_coefficient_mixes_both_exponentials(ctx):
    h = dwork_loop(ctx, 1, 18).expansion
    expected = Scalar.pi_power_over_factorial(ctx, 17) - Scalar.pi(ctx)
    assert h.coeff(17) == expected


def test_loop_scales_with_its_unit(ctx):
    h1 = dwork_loop(ctx, 1, 20).expansion
    h3 = dwork_loop(ctx, 3, 20).expansion
    for n in range(21):
        assert h3.coeff(n) == h1.coeff(n) * 3 ** n


def test_decay_certificate(ctx):
    cert = check_decay(dwork_loop(ctx, 1, 60))
    assert cert.verdict == Verdict.PASS
    assert cert.evidence["decay"] == Fraction(16, 289)
    assert cert.evidence["checked"] == 61


def test_head_certification(ctx):
    assert not dwork_loop(ctx, 1, 20).head_certified
    assert dwork_loop(ctx, 1).head_certified


def test_loop_times_its_inverse(ctx):
    loop = dwork_loop(ctx, 1, 40)
    prod = loop.expansion * loop.inverse().expansion
    assert prod.agrees_with(Series.one(), hi=40)


def test_loop_needs_a_unit(ctx):
    with pytest.raises(DomainError):
        dwork_loop(ctx, 17, 10)


def test_loop_log(ctx):
    log = loop_log(Scalar.of(ctx, 1))
    assert log.coeff(1) == Scalar.pi(ctx)
    assert log.coeff(17) == -Scalar.pi(ctx)


@pytest.mark.parametrize("g,p,e0", [(2, 17, 28), (3, 13, 6), (4, 17, 8)])
def test_split_Tp(g, p, e0):
    curve = make_curve(make_context(g, p, 2))
    split = split_Tp(curve)
    assert split.e0 == e0
    assert split.certificate.verdict == Verdict.PASS
    assert split.certificate.evidence["gap"] == [e0] + [0] * (g - 1)


@pytest.mark.slow
def test_split_Tp_larger_prime():
    split = split_Tp(make_curve(make_context(2, 41, 2)))
    assert split.e0 == 15504
    assert split.certificate.verdict == Verdict.PASS


def test_gap_vector_rejects_negative_powers(curve):
    with pytest.raises(DomainError):
        gap_vector(curve, -1)


def test_exact_context_adjoins_epsilon():
    curve = make_curve(make_context(3, 13, 2))
    exact, split = exact_context(curve)
    assert exact.prime.has_epsilon
    assert exact.prime.e0 == 6
    assert exact.N == curve.N
    assert Scalar.epsilon(exact.prime) ** 12 * 6 == 1


def test_factorizations_need_epsilon(curve):
    split = split_Tp(curve)
    with pytest.raises(DomainError):
        factor_hp(curve, split)
    with pytest.raises(DomainError):
        factor_twist(curve, split, 2)


def test_factor_twist_rejects_multiples_of_p():
    exact, split = exact_context(make_curve(make_context(2, 17, 2)))
    with pytest.raises(DomainError):
        factor_twist(exact, split, 17)


def test_negative_control_needs_two_digits():
    curve = make_curve(make_context(2, 17, 1))
    cert = negative_control(curve, split_Tp(curve))
    assert cert.verdict == Verdict.UNKNOWN


def test_hypotheses_of_A(curve):
    hypotheses = check_hypotheses(space_A(curve))
    assert hypotheses["kappa1"] == 2
    assert hypotheses["length"] == 2


def test_hypotheses_refuse_translates(curve, ctx):
    A = space_A(curve)
    translate = loop_act(curve, dwork_loop(ctx, 1, 40).expansion, A).space
    with pytest.raises(DomainError):
        check_hypotheses(translate)


@pytest.mark.slow
def test_factor_hp_reassembles():
    exact, split = exact_context(make_curve(make_context(2, 17, 3)))
    f = factor_hp(exact, split)
    assert f.certificate.verdict == Verdict.PASS


@pytest.mark.slow
def test_negative_control_fails_to_reassemble():
    exact, split = exact_context(make_curve(make_context(2, 17, 3)))
    assert negative_control(exact, split).verdict == Verdict.PASS


@pytest.mark.slow
def test_theta_avoid_for_A():
    curve = make_curve(make_context(2, 17, 3))
    cert = theta_avoid(curve, space_A(curve), 1)
    assert cert.verdict == Verdict.OUT
    assert cert.evidence["agrees"]


@pytest.mark.slow
def test_ptorsion_certificate():
    exact, split = exact_context(make_curve(make_context(2, 17, 6)))
    cert = certify_ptorsion(exact, split)
    assert cert.verdict == Verdict.PASS


@pytest.mark.slow
def test_eigenline_on_a_short_orbit():
    exact, split = exact_context(make_curve(make_context(2, 17, 3)))
    cert = certify_eigenline(exact, split, [1, 2])
    assert cert.verdict == Verdict.PASS
    assert cert.evidence["indices"] == [1, 2]


def test_power_translate_needs_a_positive_power(curve):
    with pytest.raises(DomainError):
        dwork_power_translate(curve, space_A(curve), 1, 0)


@pytest.mark.slow
def test_twisted_translate_matches_only_the_right_power():
    exact, _ = exact_context(make_curve(make_context(2, 17, 2)))
    eps = Scalar.epsilon(exact.prime)
    A = space_A(exact)
    twisted = twist_space(dwork_translate(exact, A, eps).space)
    s = exact.prime.s0
    assert same_bundle(exact, twisted, dwork_power_translate(exact, A, eps, s).space).verdict == Verdict.PASS
    wrong = same_bundle(exact, twisted, dwork_power_translate(exact, A, eps, s + 1).space)
    assert wrong.verdict == Verdict.FAIL
    assert "off Θ" in wrong.evidence["reason"]
