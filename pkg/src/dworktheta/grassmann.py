"""Truncated Sato Grassmannian: admissible bases, index, partition and Θ.

A WSpace is either explicit (a reduced admissible basis) or a loop translate
h·B of an explicit base B by a Γ₊ loop h, whose basis is never expanded.
Membership of a translate in Θ is decided on a finite square block: with
c = 1 - i(W), ψ(v) = P_{>=c}(h⁻¹ P_{>=c}(h v)) vanishes exactly when
h v ∈ T^(c-1) K[[t]], and rows c..R of ψ on the basis elements of degree <= R
determine injectivity once the loop head below R is beyond precision.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .certificate import Certificate, Verdict
from .curve import CurveCtx, DivisorSpec, basis_A, basis_divisor, decompose_gap
from .echelon import clear_pivots, echelon_by_degree, full_pivot_determinant
from .errors import DomainError, PrecisionError, WindowError
from .laurent import (
    Series,
    coeff_valuation,
    degree_monic,
    gamma_role,
    invert,
    invert_loop,
    sup_norm,
    twist,
    zeta_twist,
)
from .padic import PrimeCtx, Scalar

logger = logging.getLogger(__name__)

DEFAULT_EXTRA = 8

# loop_at(ctx, M) -> (h, h⁻¹) with heads through degree M - 1 at ctx precision
LoopProvider = Callable[[PrimeCtx, int], tuple[Series, Series]]


def default_count(g: int) -> int:
    return 4 * g + DEFAULT_EXTRA


@dataclass(frozen=True, eq=False)
class LoopTranslate:
    """h·base for a loop h in Γ₊ with v(h_i) >= decay·i."""

    base: "WSpace"
    loop_at: LoopProvider
    decay: Fraction
    log: Optional[Series] = None  # ℓ with h = exp(ℓ), head-exact
    label: str = "h"


@dataclass(frozen=True, eq=False)
class WSpace:
    label: str
    ctx: PrimeCtx
    index: int
    basis: tuple[Series, ...] = ()
    partition: tuple[int, ...] = ()
    certificate: Optional[Certificate] = None
    a1_all: bool = False
    a1_almost_all: bool = False
    translate: Optional[LoopTranslate] = None
    rebuild: Optional[Callable[[int], "WSpace"]] = field(default=None, repr=False)

    @property
    def explicit(self) -> bool:
        return self.translate is None

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(w.hi for w in self.basis)

    def with_count(self, m: int) -> "WSpace":
        """The same space with at least m basis elements."""
        if len(self.basis) >= m or self.rebuild is None:
            return self
        return self.rebuild(m)


def _contiguous_start(degrees: Sequence[int]) -> int:
    """Position where the final run of consecutive degrees begins."""
    i = len(degrees) - 1
    while i > 0 and degrees[i - 1] == degrees[i] - 1:
        i -= 1
    return i


def reduce_admissible(vs: Sequence[Series], ctx: PrimeCtx, *, label: str = "transformed",
                      max_degree: Optional[int] = None,
                      rebuild: Optional[Callable[[int], WSpace]] = None) -> WSpace:
    """Certified admissible basis, index and partition of span(vs)."""
    result = echelon_by_degree(vs, ctx)
    basis = result.basis
    if max_degree is not None:
        basis = [w for w in basis if w.hi <= max_degree]
    degrees = [w.hi for w in basis]
    if not degrees:
        raise WindowError("no basis element survived reduction", stage="reduce_admissible")
    start = _contiguous_start(degrees)
    if len(degrees) - start < 2:
        raise WindowError(
            f"degrees {degrees} have no stable run; supply more generators",
            stage="reduce_admissible",
        )
    m = len(degrees)
    i0 = m - degrees[-1]
    partition = [i - i0 - d for i, d in enumerate(degrees, start=1)]
    if any(a < b for a, b in zip(partition, partition[1:])) or partition[-1] != 0:
        raise WindowError(f"degrees {degrees} do not give a partition", stage="reduce_admissible")
    while len(partition) > 1 and partition[-1] == 0 and partition[-2] == 0:
        partition.pop()
    p = ctx.p
    norms = [sup_norm(w, p) for w in basis]
    cert = Certificate(
        name=f"reduce_admissible:{label}",
        verdict=Verdict.PASS,
        evidence={
            "index": i0,
            "partition": partition,
            "pivots": result.pivots[:len(basis)],
            "dependent": result.dependent,
            "skipped_zero": result.skipped_zero,
        },
    )
    logger.debug(f"reduce_admissible {label}: index {i0} partition {partition}")
    return WSpace(
        label=label,
        ctx=ctx,
        index=i0,
        basis=tuple(basis),
        partition=tuple(partition),
        certificate=cert,
        a1_all=all(v == 0 for v in norms),
        a1_almost_all=all(v == 0 for v in norms[start:]),
        rebuild=rebuild,
    )


def space_A(curve: CurveCtx, m: Optional[int] = None) -> WSpace:
    m = m or default_count(curve.g)
    return reduce_admissible(basis_A(curve, m), curve.prime, label="A",
                             rebuild=lambda n: space_A(curve, n))


def space_divisor(curve: CurveCtx, spec: DivisorSpec, m: Optional[int] = None) -> WSpace:
    m = m or default_count(curve.g)
    return reduce_admissible(basis_divisor(curve, spec, m), curve.prime, label=f"L[{spec.label}]",
                             rebuild=lambda n: space_divisor(curve, spec, n))


def kappa_length(partition: Sequence[int]) -> int:
    return max((i for i, k in enumerate(partition, start=1) if k), default=0)


def index_via_fV(W: WSpace) -> int:
    """dim ker - dim coker of the projection W -> K((t))/K[[t]]."""
    if not W.explicit:
        raise PrecisionError("index of a translate is read from its base", stage="index")
    degrees = W.degrees
    start = _contiguous_start(degrees)
    run_from = degrees[start]
    kernel = sum(1 for d in degrees if d <= 0)
    present = set(degrees)
    cokernel = sum(1 for n in range(1, run_from) if n not in present)
    return kernel - cokernel


# -- theta membership -------------------------------------------------------

def theta_member(W: WSpace) -> Certificate:
    """In / Out of Θ for a degree-0 class (index 1 - g)."""
    g = W.ctx.g
    if W.index != 1 - g:
        raise DomainError(f"theta membership needs index {1 - g}, got {W.index}")
    if not W.explicit:
        return _translate_theta(W)
    d1 = W.basis[0].hi
    evidence = {"index": W.index, "partition": list(W.partition), "deg_w1": d1}
    if d1 <= g - 1:
        return Certificate(f"theta:{W.label}", Verdict.IN, evidence=evidence, witness=f"{W.label}.w1")
    return Certificate(f"theta:{W.label}", Verdict.OUT, evidence={**evidence, "pivots_unit": True})


def head_for(decay: Fraction, k: int) -> int:
    """Smallest M with decay·M >= k."""
    return math.ceil(k / decay)


def _psi_block(base: WSpace, h: Series, h_inv: Series, c: int, M: int, ctx: PrimeCtx) -> np.ndarray:
    g = ctx.g
    R = max(2 * g - 1, c + M - 2)
    size = R - c + 1
    cols = [w for w in base.basis if w.hi <= R]
    if len(cols) != size:
        raise WindowError(f"need {size} basis elements of degree <= {R}, have {len(cols)}",
                          stage="theta")
    low = c - 2 * M + 2
    h_head = h.truncate(hi=M - 1)
    h_head = replace(h_head, head_exact=True, tail_exact=True)
    hinv_head = replace(h_inv.truncate(hi=M - 1), head_exact=True, tail_exact=True)
    matrix = np.empty((size, size), dtype=object)
    for j, w in enumerate(cols):
        if w.lo > low and not w.tail_exact:
            raise WindowError(f"basis tail stops at {w.lo}, need {low}", stage="theta")
        wt = w.with_precision(ctx)
        if wt.lo < low:
            wt = wt.truncate(lo=low)
        hw = h_head * wt
        x_part = {n: hw.coeff(n) for n in range(c - M + 1, c)}
        X = Series.from_terms(x_part, lo=c - M + 1) if x_part else Series.zero()
        Y = hinv_head * X
        for r in range(c, R + 1):
            matrix[r - c, j] = wt.coeff(r) - Y.coeff(r)
    for idx in np.ndindex(matrix.shape):
        if not isinstance(matrix[idx], Scalar):
            matrix[idx] = Scalar.of(ctx, matrix[idx])
    return matrix


def _translate_theta(W: WSpace) -> Certificate:
    """Certify h·B ∩ T^(g-1) K[[t]] = 0 at the smallest sufficient precision."""
    tr = W.translate
    ctx = W.ctx
    g = ctx.g
    c = 1 - W.index
    name = f"theta:{W.label}"
    base = tr.base
    size_k = abs(sum(base.partition))
    expected = Fraction(size_k, ctx.p - 1)
    attempts = []
    for k1 in range(1, ctx.k + 1):
        ctx1 = ctx.with_precision(k1)
        M = head_for(tr.decay, k1)
        R = max(2 * g - 1, c + M - 2)
        try:
            full = base.with_count(R - c + 1)
            h, h_inv = tr.loop_at(ctx1, M)
            matrix = _psi_block(full, h, h_inv, c, M, ctx1)
        except PrecisionError as e:
            logger.debug(f"{name}: k'={k1} block unavailable: {e}")
            attempts.append({"k": k1, "M": M, "error": str(e)})
            continue
        det = full_pivot_determinant(matrix, ctx1)
        attempts.append({"k": k1, "M": M, "size": det.size, "certified": det.certified})
        if det.certified:
            logger.info(f"{name}: Out certified at k'={k1}, det valuation {det.valuation}")
            return Certificate(
                name,
                Verdict.OUT,
                stage="psi",
                evidence={
                    "k_prime": k1,
                    "M": M,
                    "block": [c, R],
                    "size": det.size,
                    "det_valuation": det.valuation,
                    "expected_valuation": expected,
                    "pivots": det.pivots,
                    "attempts": attempts,
                },
            )
    return Certificate(name, Verdict.UNKNOWN, stage="psi",
                       evidence={"reason": "no certified block up to k", "attempts": attempts})


# -- group law and loop action ------------------------------------------------

def product_space(W: WSpace, W2: WSpace) -> WSpace:
    """Span of products of the two admissible bases, re-reduced."""
    if not (W.explicit and W2.explicit):
        raise DomainError("products are formed from explicit spaces")
    g = W.ctx.g
    near = g + 2
    gens = []
    for i, a in enumerate(W.basis):
        for j, b in enumerate(W2.basis):
            if i < near or j < near:
                gens.append(a * b)
    top = min(W.degrees[-1] + W2.degrees[0], W.degrees[0] + W2.degrees[-1])
    V = reduce_admissible(gens, W.ctx, label=f"{W.label}*{W2.label}", max_degree=top)
    expected = W.index + W2.index + g - 1
    V.certificate.evidence["additivity"] = {"expected": expected, "observed": V.index}
    if V.index != expected:
        logger.warning(f"product index {V.index} differs from additivity {expected}")
        V = replace(V, certificate=replace(V.certificate, verdict=Verdict.FAIL, stage="additivity"))
    return V


def twist_space(W: WSpace) -> WSpace:
    """Image under T ↦ ζT."""
    ctx = W.ctx
    if W.explicit:
        gens = [zeta_twist(w, ctx) for w in W.basis]
        return reduce_admissible(gens, ctx, label=f"r({W.label})")
    tr = W.translate
    zeta = ctx.zeta

    def loop_at(ctx1: PrimeCtx, M: int) -> tuple[Series, Series]:
        h, h_inv = tr.loop_at(ctx1, M)
        z = zeta.with_precision(ctx1)
        return twist(h, z, 4 * ctx.g), twist(h_inv, z, 4 * ctx.g)

    base = twist_space(tr.base)
    log = zeta_twist(tr.log, ctx) if tr.log is not None else None
    return replace(
        W,
        label=f"r({W.label})",
        translate=LoopTranslate(base=base, loop_at=loop_at, decay=tr.decay, log=log,
                                label=f"r({tr.label})"),
    )


@dataclass
class LoopAction:
    space: WSpace
    case: str
    evidence: dict = field(default_factory=dict)


def loop_act(curve: CurveCtx, h: Series, W: WSpace, *, loop_at: Optional[LoopProvider] = None,
             decay: Optional[Fraction] = None, log: Optional[Series] = None,
             label: str = "h") -> LoopAction:
    """Act by a loop h on W.

    Loops in the completion of A fix W; loops with a finite head act on the
    explicit basis; Γ₊ loops produce a translate.
    """
    ctx = W.ctx
    p = ctx.p
    role = gamma_role(h, p)
    if role is None:
        raise DomainError(f"{label} fails the Γ(K) predicate")
    if h.head_exact:
        try:
            dec = decompose_gap(curve, h)
        except PrecisionError:
            dec = None
        if dec is not None and dec.gap_is_zero() and dec.tail_is_zero():
            return LoopAction(W, "abar", {"gap": list(dec.gap), "tail_window": [dec.tail.lo, dec.tail.hi],
                                         "a_degree": max(dec.a_coords, default=0)})
    if role in ("minus", "mixed"):
        if not W.explicit:
            raise DomainError(f"Γ₋ and two-sided loops act on explicit spaces, not {W.label}")
        if not h.head_exact:
            raise DomainError("two-sided loops need a finite head")
        gens = [h * w for w in W.basis]
        V = reduce_admissible(gens, ctx, label=f"{label}·{W.label}")
        if V.index != W.index:
            raise PrecisionError(f"index changed under {label}: {W.index} -> {V.index}",
                                 stage="loop_act")
        return LoopAction(V, role, {"index": V.index})
    if not W.explicit:
        raise DomainError("translates of translates are not formed")
    if loop_at is None:
        loop_at = _fixed_loop(h)
    if decay is None:
        decay = h.decay if h.decay is not None else _head_decay(h, p)
    tr = LoopTranslate(base=W, loop_at=loop_at, decay=decay, log=log, label=label)
    V = replace(W, label=f"{label}·{W.label}", translate=tr, rebuild=None)
    return LoopAction(V, "plus", {"index": V.index, "decay": decay})


def _head_decay(h: Series, p: int) -> Fraction:
    """Largest ρ-exponent a finite head supports: min v(h_i)/i over i >= 1."""
    return min((Fraction(coeff_valuation(c, p)) / n for n, c in h.terms() if n > 0), default=Fraction(0))


def _fixed_loop(h: Series) -> LoopProvider:
    h_inv = invert_loop(h)

    def loop_at(ctx1: PrimeCtx, M: int) -> tuple[Series, Series]:
        if not h.head_exact and h.hi < M - 1:
            raise WindowError(f"loop head known to {h.hi}, need {M - 1}", stage="loop_act")
        return h.with_precision(ctx1), h_inv.with_precision(ctx1)

    return loop_at


# -- bundle comparison --------------------------------------------------------

def _reduce_against(v: Series, pivots: dict[int, Series]) -> Series:
    top = v.hi
    if top in pivots:
        c = v.coeff(top)
        if c:
            v = v - pivots[top].scale(c)
    return clear_pivots(v, pivots)


def same_space(W: WSpace, W2: WSpace) -> bool:
    """Equal reduced bases on the common window (explicit spaces)."""
    if W.degrees[:len(W2.degrees)] != W2.degrees[:len(W.degrees)]:
        return False
    return all(a.agrees_with(b) for a, b in zip(W.basis, W2.basis))


def same_bundle(curve: CurveCtx, W: WSpace, W2: WSpace) -> Certificate:
    """Whether W = u·W2 for a unit u of K[[t]] (same line bundle)."""
    name = f"same_bundle:{W.label}~{W2.label}"
    if W.index != W2.index:
        return Certificate(name, Verdict.FAIL, evidence={"index": [W.index, W2.index]})
    if not (W.explicit and W2.explicit):
        return _same_bundle_translates(curve, W, W2, name)
    if W.partition != W2.partition:
        return Certificate(name, Verdict.FAIL,
                           evidence={"partitions": [list(W.partition), list(W2.partition)]})
    u = (W.basis[0] * invert(W2.basis[0])).trim()
    try:
        unit = degree_monic(u) == (0, True)
    except PrecisionError as e:
        return Certificate(name, Verdict.UNKNOWN, stage="same_bundle", evidence={"reason": str(e)})
    if not unit:
        return Certificate(name, Verdict.FAIL, evidence={"reason": "w1/w1' is not a unit of K[[t]]"})
    pivots = {w.hi: w for w in W.basis}
    worst = math.inf
    checked = 0
    for w2 in W2.basis:
        try:
            r = _reduce_against(u * w2, pivots)
        except PrecisionError as e:
            return Certificate(name, Verdict.UNKNOWN, stage="same_bundle", evidence={"reason": str(e)})
        checked += 1
        residual = sup_norm(r, W.ctx.p) if any(r.coeffs) else math.inf
        worst = min(worst, residual)
        if any(r.coeffs):
            return Certificate(name, Verdict.FAIL, stage="same_bundle",
                               evidence={"checked": checked, "residual_valuation": residual})
    return Certificate(name, Verdict.PASS, evidence={"u_window": [u.lo, u.hi], "checked": checked})


def _translate_parts(V: WSpace) -> tuple[WSpace, Series, Optional[LoopProvider], Optional[Fraction]]:
    if V.explicit:
        return V, Series.zero(), None, None
    tr = V.translate
    if tr.log is None:
        raise DomainError(f"translate {V.label} carries no logarithm")
    return tr.base, tr.log, tr.loop_at, tr.decay


def _quotient_loop(num: Optional[LoopProvider], den: Optional[LoopProvider]) -> LoopProvider:
    """h1·h2⁻¹ from two providers; a missing provider is the trivial loop."""

    def loop_at(ctx1: PrimeCtx, M: int) -> tuple[Series, Series]:
        one = Series.one().as_scalars(ctx1)
        h1, h1_inv = num(ctx1, M) if num is not None else (one, one)
        h2, h2_inv = den(ctx1, M) if den is not None else (one, one)
        return (h1 * h2_inv).truncate(hi=M), (h2 * h1_inv).truncate(hi=M)

    return loop_at


def _difference_off_theta(curve: CurveCtx, W: WSpace, W2: WSpace, name: str) -> Optional[Certificate]:
    """FAIL when the class of h1·h2⁻¹·A is certified off Θ, hence nonzero."""
    _, _, num, d1 = _translate_parts(W)
    _, _, den, d2 = _translate_parts(W2)
    decays = [d for d in (d1, d2) if d is not None]
    if not decays:
        return None
    A = space_A(curve)
    tr = LoopTranslate(base=A, loop_at=_quotient_loop(num, den), decay=min(decays),
                       label=f"{W.label}/{W2.label}")
    D = replace(A, label=tr.label, translate=tr, rebuild=None)
    cert = theta_member(D)
    if cert.verdict != Verdict.OUT:
        return None
    return Certificate(name, Verdict.FAIL, stage="same_bundle",
                       evidence={"reason": "difference class is off Θ, so nonzero", "theta": cert.evidence})


def _same_bundle_translates(curve: CurveCtx, W: WSpace, W2: WSpace, name: str) -> Certificate:
    base1, log1, _, _ = _translate_parts(W)
    base2, log2, _, _ = _translate_parts(W2)
    if not (base1.explicit and base2.explicit and same_space(base1, base2)):
        return Certificate(name, Verdict.UNKNOWN, stage="same_bundle",
                           evidence={"reason": "translates over different bases"})
    try:
        dec = decompose_gap(curve, (log1 - log2).trim())
    except PrecisionError as e:
        return Certificate(name, Verdict.UNKNOWN, stage="same_bundle", evidence={"reason": str(e)})
    p = W.ctx.p
    radius = Fraction(1, p - 1)
    norms = {"a_part": sup_norm(dec.a_part, p), "tail": sup_norm(dec.tail, p)}
    # exp(a_part) lies in Ā ∩ Γ and exp(tail) in Γ₋ only strictly inside the disc
    if dec.gap_is_zero() and all(v > radius for v in norms.values()):
        return Certificate(name, Verdict.PASS, evidence={"gap": list(dec.gap), **norms})
    try:
        failed = _difference_off_theta(curve, W, W2, name)
    except PrecisionError as e:
        logger.debug(f"{name}: difference class undecided: {e}")
        failed = None
    if failed is not None:
        failed.evidence.update({"gap": list(dec.gap), **norms})
        return failed
    return Certificate(name, Verdict.UNKNOWN, stage="same_bundle",
                       evidence={"reason": "log difference not certified trivial", "gap": list(dec.gap), **norms})
