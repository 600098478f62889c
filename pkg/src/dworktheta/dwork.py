"""Dwork loops and the p-torsion translates they produce.

h(T) = exp(π(uT - (uT)^p)) has v(h_i) >= i(p-1)/p², so it lies in Γ₊ and acts on
analytic W-spaces.  Acting on A with u = ε, where ε^(p-1) = 1/e0 and e0 is the
middle coefficient of the splitting T^p - e0·T = a(T) + g(T), gives a class of
order p that is an eigenvector of the curve automorphism T ↦ ζT.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

from sympy import binomial

from .certificate import Certificate, Verdict, check, combine, expect, unknown
from .curve import CurveCtx, decompose_gap
from .errors import DomainError, LemmaViolation, PrecisionError
from .grassmann import (
    LoopAction,
    LoopProvider,
    WSpace,
    head_for,
    kappa_length,
    loop_act,
    same_bundle,
    space_A,
    theta_member,
    twist_space,
)
from .laurent import Series, coeff_valuation, exp_series, gamma_role, invert, twist
from .padic import PrimeCtx, Scalar, adjoin_epsilon, teichmuller

logger = logging.getLogger(__name__)

Unit = Union[Scalar, int]


def loop_decay(p: int) -> Fraction:
    return Fraction(p - 1, p * p)


def default_head(ctx: PrimeCtx) -> int:
    """Smallest M with M(p-1)/p² >= k."""
    return head_for(loop_decay(ctx.p), ctx.k)


def _as_unit(ctx: PrimeCtx, u: Unit) -> Scalar:
    u = u if isinstance(u, Scalar) else Scalar.of(ctx, u)
    if not u.is_unit():
        raise DomainError(f"Dwork loop parameter {u!r} is not a unit")
    return u


# -- the loop itself ----------------------------------------------------------

@dataclass(frozen=True)
class DworkLoop:
    unit: Scalar
    expansion: Series
    M: int
    head_certified: bool  # every coefficient above M vanishes mod p^k

    @property
    def ctx(self) -> PrimeCtx:
        return self.unit.ctx

    @property
    def decay(self) -> Fraction:
        return self.expansion.decay

    @property
    def vanishing_degree(self) -> int:
        """First degree from which the decay floor alone forces zero mod p^k."""
        return head_for(self.decay, self.ctx.k)

    def log(self) -> Series:
        return loop_log(self.unit)

    def inverse(self) -> "DworkLoop":
        # (-u)^p = -u^p for odd p
        return dwork_loop(self.ctx, -self.unit, self.M)


def loop_log(u: Scalar) -> Series:
    """π(uT - u^p T^p)."""
    ctx = u.ctx
    pi = Scalar.pi(ctx)
    return Series.from_terms({1: pi * u, ctx.p: -(pi * u ** ctx.p)})


def dwork_loop(ctx: PrimeCtx, u: Unit, M: Optional[int] = None) -> DworkLoop:
    """exp(π(uT - (uT)^p)) through T^M.

    The coefficient of T^n is u^n Σ_{i+pj=n} (-1)^j (π^i/i!)(π^j/j!), each
    factor computed exactly in the tower.
    """
    if not ctx.ramified:
        raise DomainError("Dwork loops need π adjoined")
    p = ctx.p
    u = _as_unit(ctx, u)
    M = default_head(ctx) if M is None else M
    if M < 0:
        raise DomainError(f"head depth must be >= 0, got {M}")
    decay = loop_decay(p)
    coeffs = []
    u_pow = Scalar.of(ctx, 1)
    for n in range(M + 1):
        acc = Scalar.zero(ctx)
        for j in range(n // p + 1):
            term = Scalar.pi_power_over_factorial(ctx, n - p * j) * Scalar.pi_power_over_factorial(ctx, j)
            acc = acc - term if j % 2 else acc + term
        coeffs.append(acc * u_pow)
        u_pow = u_pow * u
    head_certified = decay * (M + 1) >= ctx.k
    if not head_certified:
        logger.info(f"dwork_loop: head M={M} below the certified cut {head_for(decay, ctx.k)}")
    expansion = Series(lo=0, coeffs=tuple(coeffs), head_exact=False, tail_exact=True, decay=decay)
    return DworkLoop(unit=u, expansion=expansion, M=M, head_certified=head_certified)


def check_decay(loop: DworkLoop) -> Certificate:
    """v(h_i) >= i(p-1)/p² on every stored coefficient, h_0 = 1, no negative terms."""
    s = loop.expansion
    p = loop.ctx.p
    name = f"dwork_bounds:p={p}"
    for i, c in enumerate(s.coeffs):
        v = coeff_valuation(c, p)
        if v < i * s.decay:
            return Certificate(name, Verdict.FAIL,
                               evidence={"index": i, "valuation": v, "floor": i * s.decay})
    h0 = s.coeff(0) == 1
    return check(
        name,
        h0 and s.lo == 0 and s.tail_exact,
        checked=len(s.coeffs),
        decay=s.decay,
        h1=s.coeff(1) if s.hi >= 1 else None,
        head_certified=loop.head_certified,
        vanishing_degree=loop.vanishing_degree,
    )


def _truncated_power(h: Series, n: int, hi: int) -> Series:
    result = Series.one()
    for _ in range(n):
        result = (result * h).truncate(hi=hi)
    return replace(result, decay=h.decay) if n else result


def dwork_provider(u: Scalar, power: int = 1) -> LoopProvider:
    """Rebuild h_u^power and its inverse at whatever precision and head are asked for."""

    def loop_at(ctx1: PrimeCtx, M: int) -> tuple[Series, Series]:
        u1 = u.with_precision(ctx1)
        h = dwork_loop(ctx1, u1, M).expansion
        h_inv = dwork_loop(ctx1, -u1, M).expansion
        if power != 1:
            h, h_inv = _truncated_power(h, power, M), _truncated_power(h_inv, power, M)
        return h, h_inv

    return loop_at


# -- the splitting of T^p -----------------------------------------------------

@dataclass
class SplitResult:
    e0: int
    p_prime: int
    a: Series
    a_coords: dict
    gpart: Series
    e_plus: dict[int, int]  # x-exponent -> binomial coefficient
    e_minus: dict[int, int]
    certificate: Certificate


def split_Tp(curve: CurveCtx) -> SplitResult:
    """T^p - e0·T = a(T) + g(T) with a ∈ A and g ∈ T^-1 Z[[t]].

    T = -y/x^g gives T^2 = (x^(2g) + 1)/x^(2g-1), so T^p = T·Σ_j C(2gp', j) x^(2g(p'-j))
    with p' = (p-1)/4g.
    The binomial terms with positive x-powers give a, the negative ones give g,
    and the middle term is e0 = C(2gp', p').
    """
    ctx = curve.prime
    g, p = ctx.g, ctx.p
    if (p - 1) % (4 * g):
        raise DomainError(f"p = {p} is not congruent to 1 mod {4 * g}")
    pp = (p - 1) // (4 * g)
    n = 2 * g * pp
    e0 = int(binomial(n, pp))
    if e0 % p == 0:
        raise LemmaViolation(f"e0 = C({n}, {pp}) = {e0} is divisible by p = {p}")
    e_plus = {2 * g * (pp - j): int(binomial(n, j)) for j in range(pp)}
    e_minus = {2 * g * (pp - j): int(binomial(n, j)) for j in range(pp + 1, n + 1)}

    # every x-exponent 2gm - g in T·e₊(x) = -y·e₊(x)/x^g is positive
    a = Series.zero()
    for e, c in sorted(e_plus.items()):
        a = a - (curve.y * curve.x_power(e - g)).scale(c)
    step = invert(curve.x) ** (2 * g)
    gpart = Series.zero()
    power = Series.one()
    for e in sorted(e_minus, reverse=True):
        power = power * step
        gpart = gpart + power.scale(e_minus[e])
    gpart = gpart.shift(1)

    Tp = Series.monomial(1, p)
    residual = Tp - Series.monomial(e0, 1) - a - gpart
    identity = not any(residual.coeffs)
    dec = decompose_gap(curve, Tp)
    gap_ok = tuple(dec.gap) == (e0,) + (0,) * (g - 1)
    a_ok = dec.a_part.agrees_with(a)
    tail_ok = dec.tail.agrees_with(gpart)
    logger.debug(f"split_Tp g={g} p={p}: e0={e0} identity={identity} gap={dec.gap}")
    cert = check(
        f"split_Tp:g={g},p={p}",
        identity and gap_ok and a_ok and tail_ok,
        e0=e0,
        p_prime=pp,
        e0_mod_p=e0 % p,
        residual_window=[residual.lo, residual.hi],
        gap=list(dec.gap),
        a_agrees=a_ok,
        tail_agrees=tail_ok,
    )
    return SplitResult(e0=e0, p_prime=pp, a=a, a_coords=dict(dec.a_coords), gpart=gpart,
                       e_plus=e_plus, e_minus=e_minus, certificate=cert)


def gap_vector(curve: CurveCtx, n: int) -> tuple:
    """Coefficients of T, T^3, ..., T^(2g-1) left over when T^n is reduced by A."""
    if n < 0:
        raise DomainError(f"gap vectors are taken for n >= 0, got {n}")
    return tuple(decompose_gap(curve, Series.monomial(1, n)).gap)


def exact_context(curve: CurveCtx, split: Optional[SplitResult] = None) -> tuple[CurveCtx, SplitResult]:
    """The curve over Z_p[π][ε] with ε^(p-1) = 1/e0."""
    split = split or split_Tp(curve)
    return curve.over(adjoin_epsilon(curve.prime, split.e0)), split


# -- factorizations -----------------------------------------------------------

@dataclass
class Factorization:
    scalar: Scalar
    h_A: Series
    h_minus: Series
    parts: list[Certificate] = field(default_factory=list)
    certificate: Optional[Certificate] = None


def _abar_check(curve: CurveCtx, h: Series, name: str) -> Certificate:
    try:
        dec = decompose_gap(curve, h)
    except PrecisionError as e:
        return unknown(name, e.stage or "decompose_gap", str(e), e.analysis)
    return check(name, dec.gap_is_zero() and dec.tail_is_zero(), gap=list(dec.gap),
                 tail_window=[dec.tail.lo, dec.tail.hi], a_terms=len(dec.a_coords))


def _factor(curve: CurveCtx, split: SplitResult, c: Scalar, lhs: Series, name: str,
            M: int, extra: Iterable[Certificate] = ()) -> Factorization:
    ctx = curve.prime
    h_A = exp_series(split.a, ctx, scale=c)
    h_minus = exp_series(split.gpart, ctx, scale=c)
    parts = list(extra)
    try:
        rhs = h_A * h_minus
        lo = max(lhs.lo, rhs.lo)
        parts.append(check(f"{name}:reassembly", lhs.agrees_with(rhs, hi=M), window=[lo, M]))
    except PrecisionError as e:
        parts.append(unknown(f"{name}:reassembly", "reassembly", str(e), e.analysis))
    parts.append(_abar_check(curve, h_A, f"{name}:h_A"))
    parts.append(check(f"{name}:h_minus", gamma_role(h_minus, ctx.p) == "minus",
                       window=[h_minus.lo, h_minus.hi]))
    cert = combine(name, parts, scalar_valuation=c.valuation(), M=M)
    logger.info(f"{name}: {cert.verdict.value}")
    return Factorization(scalar=c, h_A=h_A, h_minus=h_minus, parts=parts, certificate=cert)


def factor_hp(curve: CurveCtx, split: SplitResult, *, unit: Optional[Unit] = None,
              M: Optional[int] = None) -> Factorization:
    """h_D^p = h_A·h₋ with h_A = exp(-pπu^p a) and h₋ = exp(-pπu^p g).

    The default unit is ε; any other unit is allowed for the negative control.
    """
    ctx = curve.prime
    if unit is None:
        if not ctx.has_epsilon:
            raise DomainError("factor_hp needs ε adjoined (exact-ε mode)")
        unit = Scalar.epsilon(ctx)
    u = _as_unit(ctx, unit)
    M = default_head(ctx) if M is None else M
    p = ctx.p
    c = Scalar.pi(ctx) * u ** p * (-p)
    h_D = dwork_loop(ctx, u, M).expansion
    lhs = _truncated_power(h_D, p, M)
    return _factor(curve, split, c, lhs, "factor_hp", M)


def factor_twist(curve: CurveCtx, split: SplitResult, i: int, *,
                 M: Optional[int] = None) -> Factorization:
    """h_D(ω(i)T)·h_D(T)^-i = h_A,i·h₋,i with scalar -(ω(i) - i)πε^p."""
    ctx = curve.prime
    p = ctx.p
    if i % p == 0:
        raise DomainError(f"i = {i} is divisible by p = {p}")
    if not ctx.has_epsilon:
        raise DomainError("factor_twist needs ε adjoined (exact-ε mode)")
    M = default_head(ctx) if M is None else M
    eps = Scalar.epsilon(ctx)
    w = teichmuller(ctx, i)
    shift = w - i
    congruence = check(f"factor_twist:i={i}:congruence", shift.valuation() >= 1,
                       valuation=shift.valuation())
    c = -(shift * Scalar.pi(ctx) * eps ** p)
    h_D = dwork_loop(ctx, eps, M).expansion
    back = dwork_loop(ctx, -eps, M).expansion if i > 0 else h_D
    lhs = (twist(h_D, w, p - 1) * _truncated_power(back, abs(i), M)).truncate(hi=M)
    return _factor(curve, split, c, lhs, f"factor_twist:i={i}", M, extra=[congruence])


def negative_control(curve: CurveCtx, split: SplitResult, *, M: Optional[int] = None) -> Certificate:
    """factor_hp with ε replaced by 1 must fail to reassemble.

    The discrepancy is exp(pπ(1 - e0)T), whose linear term has valuation
    1 + 1/(p-1), so it is visible from k = 2 on.
    """
    name = "negative_control:unit=1"
    ctx = curve.prime
    if ctx.k < 2:
        return unknown(name, "reassembly", "precision k < 2 cannot separate the wrong scalar")
    f = factor_hp(curve, split, unit=1, M=M)
    reassembly = f.parts[0]
    if reassembly.verdict == Verdict.UNKNOWN:
        return unknown(name, reassembly.stage, "reassembly was inconclusive", reassembly.evidence)
    return check(name, reassembly.verdict == Verdict.FAIL, inner=reassembly.verdict.value,
                 window=reassembly.evidence.get("window"))


# -- theta avoidance and the p-torsion certificate ----------------------------

def check_hypotheses(W: WSpace) -> dict:
    """(A1) every basis element has norm 1 and (A2) max{κ₁, ℓ(κ)} < p/4."""
    ctx = W.ctx
    g, p = ctx.g, ctx.p
    if not W.explicit:
        raise DomainError("theta_avoid acts on an explicit space")
    if W.index != 1 - g:
        raise DomainError(f"theta_avoid needs index {1 - g}, got {W.index}")
    if p < 7:
        raise DomainError(f"p = {p} < 7")
    if not W.a1_all:
        raise DomainError(f"(A1) fails for {W.label}: a basis element has norm != 1")
    kappa1 = W.partition[0] if W.partition else 0
    length = kappa_length(W.partition)
    if 4 * max(kappa1, length) >= p:
        raise DomainError(f"(A2) fails for {W.label}: max(κ₁, ℓ(κ)) = {max(kappa1, length)} >= {p}/4")
    return {"a1_all": True, "a1_almost_all": W.a1_almost_all, "kappa1": kappa1, "length": length}


def dwork_translate(curve: CurveCtx, W: WSpace, u: Unit, *, label: str = "h") -> LoopAction:
    ctx = W.ctx
    u = _as_unit(ctx, u)
    loop = dwork_loop(ctx, u)
    return loop_act(curve, loop.expansion, W, loop_at=dwork_provider(u), decay=loop.decay,
                    log=loop_log(u), label=label)


def dwork_power_translate(curve: CurveCtx, W: WSpace, u: Unit, n: int, *,
                          M: Optional[int] = None) -> LoopAction:
    """h_u^n·W for n >= 1."""
    if n < 1:
        raise DomainError(f"power must be >= 1, got {n}")
    ctx = W.ctx
    u = _as_unit(ctx, u)
    M = default_head(ctx) if M is None else M
    h = _truncated_power(dwork_loop(ctx, u, M).expansion, n, M)
    return loop_act(curve, h, W, loop_at=dwork_provider(u, n), decay=loop_decay(ctx.p),
                    log=loop_log(u).scale(n), label=f"h^{n}")


def _avoid(curve: CurveCtx, W: WSpace, u: Unit, label: str) -> tuple[LoopAction, Certificate]:
    hypotheses = check_hypotheses(W)
    action = dwork_translate(curve, W, u, label=label)
    cert = theta_member(action.space)
    if cert.verdict == Verdict.IN:
        logger.error(f"theta_avoid: {action.space.label} certified in Θ against the prediction")
    result = Certificate(
        f"theta_avoid:{action.space.label}",
        cert.verdict,
        stage=cert.stage,
        evidence={**cert.evidence, "hypotheses": hypotheses, "predicted": "out",
                  "agrees": cert.verdict == Verdict.OUT},
        witness=cert.witness,
    )
    return action, result


def theta_avoid(curve: CurveCtx, W: WSpace, u: Unit, *, label: str = "h") -> Certificate:
    """Whether the Dwork translate h_u·W stays off Θ (predicted: Out)."""
    return _avoid(curve, W, u, label)[1]


def _staged(name: str, stage: str, run: Callable[[], Certificate]) -> Certificate:
    try:
        return run()
    except PrecisionError as e:
        logger.info(f"{name}: {stage} inconclusive: {e}")
        return unknown(name, e.stage or stage, str(e), e.analysis)


def certify_ptorsion(curve: CurveCtx, split: SplitResult, *, M: Optional[int] = None) -> Certificate:
    """V = h_D·A is a nonzero class with V^p trivial and r*(V) = V^s, ω(s) = ζ."""
    ctx = curve.prime
    if not ctx.has_epsilon:
        raise DomainError("p-torsion certification runs in exact-ε mode")
    g, p = ctx.g, ctx.p
    name = f"ptorsion:g={g},p={p}"
    M = default_head(ctx) if M is None else M
    eps = Scalar.epsilon(ctx)
    A = space_A(curve)
    stages: list[Certificate] = []

    action, avoid = _avoid(curve, A, eps, "h_D")
    V = action.space
    stages.append(expect(avoid, Verdict.OUT))

    hp = factor_hp(curve, split, M=M)
    stages.append(hp.certificate)

    def fixes_A() -> Certificate:
        try:
            fixed = loop_act(curve, hp.h_A, A, label="h_A")
        except DomainError as e:
            return Certificate(f"{name}:h_A_fixes_A", Verdict.FAIL, evidence={"reason": str(e)})
        return check(f"{name}:h_A_fixes_A", fixed.case == "abar", case=fixed.case)

    def minus_trivial() -> Certificate:
        minus = loop_act(curve, hp.h_minus, A, label="h_-")
        return same_bundle(curve, minus.space, A)

    stages.append(_staged(f"{name}:h_A_fixes_A", "loop_act", fixes_A))
    stages.append(_staged(f"{name}:h_minus_trivial", "loop_act", minus_trivial))

    s = ctx.s0
    tw = factor_twist(curve, split, s, M=M)
    stages.append(tw.certificate)

    def eigen_relation(power: int) -> Certificate:
        Vs = dwork_power_translate(curve, A, eps, power, M=M).space
        return same_bundle(curve, twist_space(V), Vs)

    stages.append(_staged(f"{name}:eigen_relation", "same_bundle", lambda: eigen_relation(s)))
    # s + 1 is a wrong power and must come back as a certified FAIL
    stages.append(expect(_staged(f"{name}:wrong_power", "same_bundle", lambda: eigen_relation(s + 1)),
                         Verdict.FAIL))
    # constants put A itself in Θ, so an Out translate is a nonzero class
    stages.append(expect(theta_member(A), Verdict.IN))
    return combine(name, stages, s=s, e0=split.e0, M=M)


def certify_eigenline(curve: CurveCtx, split: SplitResult, indices: Optional[Iterable[int]] = None,
                      *, M: Optional[int] = None) -> Certificate:
    """Every ω(i)-multiple of the p-torsion class stays off Θ and satisfies the twist relation."""
    ctx = curve.prime
    if not ctx.has_epsilon:
        raise DomainError("eigenline certification runs in exact-ε mode")
    g, p = ctx.g, ctx.p
    eps = Scalar.epsilon(ctx)
    A = space_A(curve)
    chosen = list(indices) if indices is not None else list(range(1, p))
    parts = []
    for i in chosen:
        w = teichmuller(ctx, i)
        parts.append(expect(theta_avoid(curve, A, w * eps, label=f"h_D(ω({i})T)"), Verdict.OUT))
        parts.append(factor_twist(curve, split, i, M=M).certificate)
    return combine(f"eigenline:g={g},p={p}", parts, indices=chosen)
