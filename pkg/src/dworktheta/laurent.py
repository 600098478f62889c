"""Windowed Laurent series in T over integers or tower scalars.

A Series stores the coefficients of T^lo .. T^hi.  Above ``hi`` the series is
zero: exactly when ``head_exact`` is set, otherwise modulo p^k as certified by
the constructor (decay floor).  Below ``lo`` coefficients are unknown unless
``tail_exact`` is set, in which case they are zero.  Every operation returns
the largest window on which its result is determined by stored data.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import ConvergenceError, DomainError, PrecisionError, WindowError
from .padic import PrimeCtx, Scalar, _digits, _undigits
from .padic import valuation as coeff_valuation

logger = logging.getLogger(__name__)

Coeff = Union[int, Scalar]


@dataclass(frozen=True)
class Series:
    lo: int
    coeffs: tuple
    head_exact: bool = True
    tail_exact: bool = False
    floor: Fraction = Fraction(0)  # v(c_i) >= floor for every i
    decay: Optional[Fraction] = None  # v(c_i) >= decay * i for i >= 1

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "Series":
        return cls(lo=0, coeffs=(), head_exact=True, tail_exact=True, floor=Fraction(0))

    @classmethod
    def monomial(cls, c: Coeff, n: int) -> "Series":
        return cls(lo=n, coeffs=(c,), head_exact=True, tail_exact=True)

    @classmethod
    def one(cls) -> "Series":
        return cls.monomial(1, 0)

    @classmethod
    def from_terms(cls, terms: Mapping[int, Coeff], *, lo: Optional[int] = None,
                   tail_exact: bool = True) -> "Series":
        """Laurent polynomial (or truncated series) from {degree: coefficient}."""
        if not terms and lo is None:
            return cls.zero()
        top = max(terms) if terms else lo
        bottom = min(terms) if lo is None else lo
        coeffs = tuple(terms.get(n, 0) for n in range(bottom, top + 1))
        return cls(lo=bottom, coeffs=coeffs, head_exact=True, tail_exact=tail_exact)

    @classmethod
    def from_t_series(cls, coeffs: Sequence[Coeff], shift: int = 0) -> "Series":
        """T^shift · Σ c_j t^j with t = 1/T, known for j < len(coeffs)."""
        n = len(coeffs)
        return cls(lo=shift - n + 1, coeffs=tuple(reversed(coeffs)), head_exact=True, tail_exact=False)

    # -- access ---------------------------------------------------------

    @property
    def hi(self) -> int:
        return self.lo + len(self.coeffs) - 1

    def coeff(self, n: int) -> Coeff:
        if n > self.hi:
            return 0
        if n < self.lo:
            if self.tail_exact:
                return 0
            raise WindowError(f"coefficient of T^{n} is below the window [{self.lo}, {self.hi}]")
        return self.coeffs[n - self.lo]

    __getitem__ = coeff

    def terms(self) -> Iterator[tuple[int, Coeff]]:
        """Nonzero (degree, coefficient) pairs in increasing degree."""
        for i, c in enumerate(self.coeffs):
            if c:
                yield self.lo + i, c

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def trim(self) -> "Series":
        """Drop zero coefficients at the top (and at the bottom of exact tails)."""
        coeffs = list(self.coeffs)
        lo = self.lo
        while coeffs and not coeffs[-1]:
            coeffs.pop()
        if self.tail_exact:
            start = 0
            while start < len(coeffs) and not coeffs[start]:
                start += 1
            coeffs = coeffs[start:]
            lo += start
        if not coeffs:
            if self.tail_exact:
                return Series.zero()
            # nothing certified nonzero; keep the bottom of the window
            return replace(self, lo=self.lo, coeffs=(0,))
        return replace(self, lo=lo, coeffs=tuple(coeffs))

    def truncate(self, lo: Optional[int] = None, hi: Optional[int] = None) -> "Series":
        """Restrict the window; dropped head coefficients clear head_exact."""
        new_lo = self.lo if lo is None else max(lo, self.lo)
        new_hi = self.hi if hi is None else min(hi, self.hi)
        if new_lo > new_hi:
            raise WindowError(f"empty window [{new_lo}, {new_hi}]")
        dropped_head = any(self.coeffs[new_hi - self.lo + 1:])
        coeffs = self.coeffs[new_lo - self.lo:new_hi - self.lo + 1]
        return replace(
            self,
            lo=new_lo,
            coeffs=coeffs,
            head_exact=self.head_exact and not dropped_head,
            tail_exact=self.tail_exact and new_lo == self.lo,
        )

    def map(self, f: Callable[[Coeff], Coeff]) -> "Series":
        return replace(self, coeffs=tuple(f(c) for c in self.coeffs))

    def as_scalars(self, ctx: PrimeCtx) -> "Series":
        return self.map(lambda c: c if isinstance(c, Scalar) else Scalar.of(ctx, c))

    def with_precision(self, ctx: PrimeCtx) -> "Series":
        return self.map(lambda c: c.with_precision(ctx) if isinstance(c, Scalar) else Scalar.of(ctx, c))

    # -- ring operations ------------------------------------------------

    def __add__(self, other: "Series") -> "Series":
        if not isinstance(other, Series):
            return NotImplemented
        if not self.coeffs:
            return other
        if not other.coeffs:
            return self
        if self.tail_exact and other.tail_exact:
            lo = min(self.lo, other.lo)
        elif self.tail_exact:
            lo = other.lo
        elif other.tail_exact:
            lo = self.lo
        else:
            lo = max(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        coeffs = tuple(self.coeff(n) + other.coeff(n) for n in range(lo, hi + 1))
        decay = None
        if self.decay is not None and other.decay is not None:
            decay = min(self.decay, other.decay)
        return Series(
            lo=lo,
            coeffs=coeffs,
            head_exact=self.head_exact and other.head_exact,
            tail_exact=self.tail_exact and other.tail_exact,
            floor=min(self.floor, other.floor),
            decay=decay,
        )

    def __neg__(self) -> "Series":
        return self.map(lambda c: -c)

    def __sub__(self, other: "Series") -> "Series":
        return self + (-other)

    def __mul__(self, other: Union["Series", Coeff]) -> "Series":
        if not isinstance(other, Series):
            return self.scale(other)
        if not self.coeffs or not other.coeffs:
            return Series.zero()
        lo = self.lo + other.lo
        if not self.tail_exact:
            lo = max(lo, self.lo + other.hi)
        if not other.tail_exact:
            lo = max(lo, other.lo + self.hi)
        hi = self.hi + other.hi
        if lo > hi:
            raise WindowError(
                f"product window empty: [{self.lo},{self.hi}] x [{other.lo},{other.hi}]"
            )
        full = np.convolve(np.array(self.coeffs, dtype=object), np.array(other.coeffs, dtype=object))
        start = lo - (self.lo + other.lo)
        decay = None
        if self.decay is not None and other.decay is not None:
            decay = min(self.decay, other.decay)
        return Series(
            lo=lo,
            coeffs=tuple(full[start:].tolist()),
            head_exact=self.head_exact and other.head_exact,
            tail_exact=self.tail_exact and other.tail_exact,
            floor=self.floor + other.floor,
            decay=decay,
        )

    __rmul__ = __mul__

    def scale(self, c: Coeff) -> "Series":
        return self.map(lambda a: a * c)

    def shift(self, n: int) -> "Series":
        """Multiply by T^n."""
        return replace(self, lo=self.lo + n)

    def __pow__(self, n: int) -> "Series":
        if n < 0:
            return invert(self) ** (-n)
        result = Series.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- comparisons ------------------------------------------------------

    def agrees_with(self, other: "Series", *, lo: Optional[int] = None, hi: Optional[int] = None) -> bool:
        """True when self - other vanishes (at precision) on the common window."""
        diff = self - other
        lo = diff.lo if lo is None else max(lo, diff.lo)
        hi = diff.hi if hi is None else min(hi, diff.hi)
        return not any(diff.coeff(n) for n in range(lo, hi + 1))

    # -- serialization --------------------------------------------------

    def to_json(self, ctx: PrimeCtx) -> dict:
        coeffs = []
        for n, c in self.terms():
            if isinstance(c, Scalar):
                coeffs.append([n, {"exact": c.exact, "coords": c.coords_json()}])
            else:
                coeffs.append([n, _digits(c, ctx.p)])
        return {
            "header": ctx.header(),
            "window": [self.lo, self.hi],
            "head_exact": self.head_exact,
            "tail_exact": self.tail_exact,
            "floor": str(self.floor),
            "decay": None if self.decay is None else str(self.decay),
            "coeffs": coeffs,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Series":
        h = data["header"]
        ctx = PrimeCtx(p=h["p"], g=h["g"], k=h["k"], ramified=h["ramified"], e0=h["e0"])
        lo, hi = data["window"]
        values: dict[int, Coeff] = {}
        for n, raw in data["coeffs"]:
            if isinstance(raw, str):
                values[n] = _undigits(raw, ctx.p)
            else:
                values[n] = Scalar.from_coords_json(ctx, raw["coords"], exact=raw["exact"])
        scalar = any(isinstance(c, Scalar) for c in values.values())
        zero: Coeff = Scalar.zero(ctx) if scalar else 0
        return cls(
            lo=lo,
            coeffs=tuple(values.get(n, zero) for n in range(lo, hi + 1)),
            head_exact=data["head_exact"],
            tail_exact=data["tail_exact"],
            floor=Fraction(data["floor"]),
            decay=None if data["decay"] is None else Fraction(data["decay"]),
        )


def _unit_inverse(c: Coeff) -> Coeff:
    if isinstance(c, Scalar):
        return c.inverse()
    if c in (1, -1):
        return c
    raise DomainError(f"leading coefficient {c} is not a unit over Z")


def degree_monic(s: Series) -> tuple[int, bool]:
    """Degree and monic flag of a head-exact series."""
    if not s.head_exact:
        raise DomainError("degree is only defined for head-exact series")
    t = s.trim()
    if not any(t.coeffs):
        raise PrecisionError("every coefficient is indistinguishable from zero", stage="degree")
    return t.hi, t.coeffs[-1] == 1


def invert(s: Series, lo: Optional[int] = None) -> Series:
    """Inverse of a head-exact series with unit leading coefficient.

    An inexact tail bounds the result window by the stored terms.  An exact
    tail determines every coefficient, so the window runs down to ``lo``.
    """
    s = s.trim()
    if not s.head_exact:
        raise DomainError("only head-exact series can be inverted at the leading term")
    if not s.coeffs or not s.coeffs[-1]:
        raise DomainError("cannot invert a series with no certified leading term")
    d = s.hi
    if s.tail_exact and len(s.coeffs) == 1:
        return Series.monomial(_unit_inverse(s.coeffs[0]), -d)
    # s = T^d Σ a_j t^j, a_0 the leading coefficient
    a = list(reversed(s.coeffs))
    if s.tail_exact and lo is not None and -d - lo + 1 > len(a):
        a += [0] * (-d - lo + 1 - len(a))
    z0 = _unit_inverse(a[0])
    z = [z0]
    for j in range(1, len(a)):
        acc = 0
        for i in range(1, j + 1):
            if a[i]:
                acc = acc + a[i] * z[j - i]
        z.append(-(z0 * acc))
    return replace(Series.from_t_series(z, shift=-d), floor=Fraction(0))


def invert_loop(h: Series) -> Series:
    """Inverse of a Γ₊ element around its constant term, same head and decay."""
    if h.lo < 0 and any(h.coeff(n) for n in range(h.lo, 0)):
        raise DomainError("invert_loop expects support in degrees >= 0")
    c0 = h.coeff(0)
    z0 = _unit_inverse(c0)
    a = [h.coeff(n) for n in range(0, h.hi + 1)]
    z = [z0]
    for n in range(1, len(a)):
        acc = 0
        for i in range(1, n + 1):
            if a[i]:
                acc = acc + a[i] * z[n - i]
        z.append(-(z0 * acc))
    return Series(lo=0, coeffs=tuple(z), head_exact=h.head_exact, tail_exact=True,
                  floor=h.floor, decay=h.decay)


def _exp_terms(ctx: PrimeCtx, a: Series, gamma: Scalar, n_max: int,
               lo: Optional[int], hi: Optional[int]) -> Series:
    """Σ_{n <= n_max} (π^n/n!) γ^n a^n, clipped to [lo, hi] when given."""
    result = Series.one().as_scalars(ctx)
    power = Series.one()
    g_pow = Scalar.of(ctx, 1)
    for n in range(1, n_max + 1):
        power = power * a
        if hi is not None:
            if power.lo > hi:
                break
            if power.hi > hi:
                power = power.truncate(hi=hi)
        if lo is not None:
            if power.hi < lo:
                break
            if power.lo < lo:
                power = power.truncate(lo=lo)
        g_pow = g_pow * gamma
        result = result + power.scale(Scalar.pi_power_over_factorial(ctx, n) * g_pow)
    return result


def _monomial_exp(ctx: PrimeCtx, gamma: Scalar, d: int, n_max: int) -> Series:
    """exp(π γ T^d) up to the n_max-th power, computed term by term."""
    terms: dict[int, Coeff] = {0: Scalar.of(ctx, 1)}
    g_pow = Scalar.of(ctx, 1)
    for n in range(1, n_max + 1):
        g_pow = g_pow * gamma
        terms[d * n] = Scalar.pi_power_over_factorial(ctx, n) * g_pow
    return Series.from_terms(terms)


def exp_series(a: Series, ctx: PrimeCtx, *, scale: Optional[Scalar] = None,
               lo: Optional[int] = None, hi: Optional[int] = None) -> Series:
    """exp(scale · a) for an argument with zero constant term.

    The argument must have valuation >= 1/(p-1).  Convergence comes either from
    valuation (strictly above the radius) or from one-sided support.  ``hi``
    bounds the head for positive-degree arguments and ``lo`` the tail for
    negative-degree ones.  A positive argument sitting on the radius gives a
    result that is not head-exact; its caller certifies the dropped head.
    """
    p = ctx.p
    radius = Fraction(1, p - 1)
    if scale is None:
        scale = Scalar.of(ctx, 1)
    a = a.trim()
    if a.is_zero() or not scale:
        return Series.one().as_scalars(ctx)
    if a.lo <= 0 <= a.hi and a.coeff(0):
        raise DomainError("exp argument must have zero constant term")
    v = min(coeff_valuation(c, p) for _, c in a.terms())
    if not (a.tail_exact and a.head_exact):
        v = min(v, a.floor)
    v += scale.valuation()
    if v < radius:
        raise ConvergenceError(f"exp argument valuation {v} is below 1/(p-1) = {radius}")
    # scale·a = π γ a', so every term is (π^n/n!) γ^n a'^n with γ a' integral
    if scale.valuation() >= radius:
        gamma = scale.div_pi(1)
    else:
        gamma = scale
        a = a.as_scalars(ctx).map(lambda c: c.div_pi(1))
    beta = v - radius
    support = [n for n, _ in a.terms()]
    positive = a.tail_exact and min(support) >= 1
    negative = a.head_exact and a.hi <= -1
    if negative and lo is None:
        if a.tail_exact:
            raise ConvergenceError("negative-support polynomial argument needs a tail bound")
        lo = a.lo

    if beta > 0:
        n_max = math.ceil((ctx.k - radius) / beta) - 1
    elif not (positive or negative):
        raise ConvergenceError("two-sided argument at the convergence radius")
    elif positive and hi is None:
        raise ConvergenceError("positive-support argument at the radius needs a head bound")
    else:
        n_max = math.inf
    if positive and hi is not None:
        n_max = min(n_max, hi // min(support))
    if negative:
        n_max = min(n_max, lo // max(support))
    n_max = max(int(n_max), 0)

    logger.debug(f"exp_series: window [{a.lo}, {a.hi}] v={v} terms={n_max}")
    nonzero = list(a.terms())
    if a.tail_exact and a.head_exact and len(nonzero) <= 2:
        result = Series.one().as_scalars(ctx)
        for d, c in nonzero:
            n_d = n_max
            if hi is not None and d > 0:
                n_d = min(n_d, hi // d)
            result = result * _monomial_exp(ctx, gamma * c, d, n_d)
        if hi is not None and result.hi > hi:
            result = result.truncate(hi=hi)
        if lo is not None and result.lo < lo:
            result = result.truncate(lo=lo)
    else:
        result = _exp_terms(ctx, a, gamma, n_max, lo, hi)
    if positive and beta == 0:
        result = replace(result, head_exact=False)
    return replace(result, floor=Fraction(0), decay=None)


def twist(s: Series, w: Scalar, order: int) -> Series:
    """Σ c_i T^i ↦ Σ c_i w^i T^i for a unit w with w^order = 1."""
    powers = [Scalar.of(w.ctx, 1)]
    for _ in range(order - 1):
        powers.append(powers[-1] * w)
    return replace(
        s,
        coeffs=tuple(c * powers[(s.lo + i) % order] if c else c for i, c in enumerate(s.coeffs)),
    )


def zeta_twist(s: Series, ctx: PrimeCtx) -> Series:
    """The automorphism r̄: T ↦ ζT."""
    return twist(s, ctx.zeta, 4 * ctx.g)


def sup_norm(s: Series, p: int) -> Union[Fraction, float]:
    """Additive sup-norm: min_i v(c_i), combined with the stored floor."""
    v: Union[Fraction, float] = min((coeff_valuation(c, p) for _, c in s.terms()), default=math.inf)
    if not (s.head_exact and s.tail_exact):
        v = min(v, s.floor)
    return v


def in_gamma(s: Series, p: int) -> bool:
    """Loop-group predicate: |h_0| = 1, |h_i| <= 1 for i <= 0, |h_i| <= ρ^i above."""
    s = s.trim()
    if not s.coeffs:
        return False
    try:
        c0 = s.coeff(0)
    except WindowError:
        return False
    if coeff_valuation(c0, p) != 0:
        return False
    if not s.tail_exact and s.floor < 0:
        return False
    if not s.head_exact and not (s.decay is not None and s.decay > 0):
        return False
    for n, c in s.terms():
        v = coeff_valuation(c, p)
        if n <= 0 and v < 0:
            return False
        if n > 0 and (v < s.decay * n if s.decay is not None else v <= 0):
            return False
    return True


def gamma_role(s: Series, p: int) -> Optional[str]:
    """Classify a loop: 'minus' (support <= 0), 'plus' (support >= 0), 'mixed' or None."""
    if not in_gamma(s, p):
        return None
    s = s.trim()
    if s.head_exact and s.hi <= 0:
        return "minus"
    if s.tail_exact and s.lo >= 0:
        return "plus"
    return "mixed"
