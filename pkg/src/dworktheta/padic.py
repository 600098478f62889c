"""Exact arithmetic in the tower Z_p ⊂ Z_p[π] ⊂ Z_p[π][ε].

π is a root of X^(p-1) + p and ε a root of X^(p-1) - 1/e0.  Elements are stored
sparsely as residues mod p^k on the monomials π^a ε^b (0 <= a, b <= p-2).  The
ε-quotient is an étale algebra over Z_p[π] (e0 is a unit and p does not divide
p-1), so coordinate-wise integrality equals integrality and nothing is ever
factored.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Optional, Union

from sympy import Poly, isprime, symbols
from sympy.ntheory import n_order
from sympy.polys.polyerrors import NotInvertible

from .errors import ContextError, DomainError

logger = logging.getLogger(__name__)

_EPS = symbols("eps")

Key = tuple[int, int]


@dataclass(frozen=True)
class PrimeCtx:
    """Standing assumptions (g, p, k) plus the adjoined roots."""

    p: int
    g: int
    k: int
    ramified: bool = True  # π adjoined
    e0: Optional[int] = None  # residue of e0 mod p^k when ε is adjoined

    @property
    def modulus(self) -> int:
        return self.p ** self.k

    @property
    def has_epsilon(self) -> bool:
        return self.e0 is not None

    @cached_property
    def e0_inverse(self) -> int:
        if self.e0 is None:
            raise DomainError("ε is not adjoined in this context")
        return pow(self.e0, -1, self.modulus)

    @cached_property
    def s0(self) -> int:
        """Least positive integer of multiplicative order 4g in F_p^*."""
        order = 4 * self.g
        for s in range(2, self.p):
            if n_order(s, self.p) == order:
                return s
        raise ContextError(f"no element of order {order} mod {self.p}")

    @cached_property
    def zeta(self) -> "Scalar":
        """Teichmüller lift of s0: a primitive 4g-th root of unity in Z_p."""
        return teichmuller(self, self.s0)

    def with_precision(self, k: int) -> "PrimeCtx":
        if k < 1:
            raise ContextError(f"precision must be >= 1, got {k}")
        e0 = None if self.e0 is None else self.e0 % self.p ** k
        return dataclasses.replace(self, k=k, e0=e0)

    def header(self) -> dict:
        return {"p": self.p, "g": self.g, "k": self.k, "ramified": self.ramified, "e0": self.e0}


def make_context(g: int, p: int, k: int, *, ramified: bool = True) -> PrimeCtx:
    """Validate the standing assumptions and build a context."""
    if g < 2:
        raise ContextError(f"genus must be >= 2, got {g}")
    if k < 1:
        raise ContextError(f"precision k must be >= 1, got {k}")
    if not isprime(p):
        raise ContextError(f"p = {p} is not prime")
    if p < 7:
        raise ContextError(f"p = {p} < 7 is excluded (Dwork loop theorem needs p >= 7)")
    if p % (4 * g) != 1:
        raise ContextError(f"p = {p} is not congruent to 1 mod {4 * g}")
    ctx = PrimeCtx(p=p, g=g, k=k, ramified=ramified)
    logger.debug(f"context g={g} p={p} k={k} s0={ctx.s0}")
    return ctx


def teichmuller_residue(p: int, k: int, i: int) -> int:
    """ω(i) mod p^k as an integer in [0, p^k)."""
    if i % p == 0:
        raise DomainError(f"Teichmüller character is undefined at {i} ≡ 0 mod {p}")
    q = p ** k
    x = i % p
    # each Frobenius step fixes one more p-adic digit
    for _ in range(k):
        x = pow(x, p, q)
    return x


def teichmuller(ctx: PrimeCtx, i: int) -> "Scalar":
    return Scalar(ctx, {(0, 0): teichmuller_residue(ctx.p, ctx.k, i)})


def adjoin_epsilon(ctx: PrimeCtx, e0: Union["Scalar", int]) -> PrimeCtx:
    """Extend ctx by ε with ε^(p-1) = 1/e0."""
    if isinstance(e0, Scalar):
        if any(key != (0, 0) for key in e0.coords):
            raise DomainError("e0 must lie in Z_p")
        value = e0.coords.get((0, 0), 0)
    else:
        value = e0
    if value % ctx.p == 0:
        raise DomainError(f"e0 must be a p-adic unit, got {value} (divisible by {ctx.p})")
    return dataclasses.replace(ctx, e0=value % ctx.modulus)


def p_valuation(n: int, p: int) -> Union[int, float]:
    """v_p of an integer; math.inf for zero."""
    if n == 0:
        return math.inf
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def digit_sum(n: int, p: int) -> int:
    s = 0
    while n:
        n, r = divmod(n, p)
        s += r
    return s


def _digits(c: int, p: int) -> str:
    """Little-endian base-p digits joined by '.'; '-' prefix for negatives."""
    sign = "-" if c < 0 else ""
    c = abs(c)
    out = []
    while c:
        c, r = divmod(c, p)
        out.append(str(r))
    return sign + (".".join(out) or "0")


def _undigits(s: str, p: int) -> int:
    sign = -1 if s.startswith("-") else 1
    value = 0
    for d in reversed(s.lstrip("-").split(".")):
        value = value * p + int(d)
    return sign * value


class Scalar:
    """Immutable element of the tower, known mod p^k (or exactly).

    ``bool(x)`` is "nonzero mod p^k"; exact scalars are rational integers or
    exact polynomials in π and compare exactly.
    """

    __slots__ = ("ctx", "coords", "exact")

    def __init__(self, ctx: PrimeCtx, coords: Mapping[Key, int], exact: bool = False):
        q = ctx.modulus
        if exact:
            clean = {key: c for key, c in coords.items() if c}
        else:
            clean = {}
            for key, c in coords.items():
                c %= q
                if c:
                    clean[key] = c
        self.ctx = ctx
        self.coords: dict[Key, int] = clean
        self.exact = exact

    # -- constructors -------------------------------------------------

    @classmethod
    def of(cls, ctx: PrimeCtx, n: int, exact: bool = False) -> "Scalar":
        return cls(ctx, {(0, 0): n}, exact=exact)

    @classmethod
    def zero(cls, ctx: PrimeCtx) -> "Scalar":
        return cls(ctx, {}, exact=True)

    @classmethod
    def pi(cls, ctx: PrimeCtx) -> "Scalar":
        if not ctx.ramified:
            raise DomainError("π is not adjoined in this context")
        return cls(ctx, {(1, 0): 1}, exact=True)

    @classmethod
    def epsilon(cls, ctx: PrimeCtx) -> "Scalar":
        if not ctx.has_epsilon:
            raise DomainError("ε is not adjoined in this context")
        return cls(ctx, {(0, 1): 1})

    @classmethod
    def pi_power_over_factorial(cls, ctx: PrimeCtx, n: int) -> "Scalar":
        """π^n / n! exactly: (-1)^v π^(s_p(n)) / (n!/p^v) with v = v_p(n!)."""
        p = ctx.p
        s = digit_sum(n, p)
        v = (n - s) // (p - 1)
        unit = math.factorial(n) // p ** v
        value = pow(unit, -1, ctx.modulus) * (-1) ** v
        wraps, a = divmod(s, p - 1)
        if a and not ctx.ramified:
            raise DomainError("π is not adjoined in this context")
        return cls(ctx, {(a, 0): (-p) ** wraps * value})

    @classmethod
    def pi_power(cls, ctx: PrimeCtx, n: int) -> "Scalar":
        p1 = ctx.p - 1
        wraps, a = divmod(n, p1)
        if a and not ctx.ramified:
            raise DomainError("π is not adjoined in this context")
        return cls(ctx, {(a, 0): (-ctx.p) ** wraps}, exact=True)

    def coerce(self, other: Union["Scalar", int]) -> "Scalar":
        if isinstance(other, Scalar):
            if other.ctx is not self.ctx and other.ctx != self.ctx:
                raise DomainError(f"context mismatch: {self.ctx} vs {other.ctx}")
            return other
        return Scalar(self.ctx, {(0, 0): other}, exact=True)

    # -- ring operations ----------------------------------------------

    def __add__(self, other):
        if not isinstance(other, (Scalar, int)):
            return NotImplemented
        if isinstance(other, int) and other == 0:
            return self
        other = self.coerce(other)
        out = dict(self.coords)
        for key, c in other.coords.items():
            out[key] = out.get(key, 0) + c
        return Scalar(self.ctx, out, exact=self.exact and other.exact)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(self.ctx, {key: -c for key, c in self.coords.items()}, exact=self.exact)

    def __sub__(self, other):
        if not isinstance(other, (Scalar, int)):
            return NotImplemented
        return self + (-self.coerce(other))

    def __rsub__(self, other):
        return self.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, (Scalar, int)):
            return NotImplemented
        if isinstance(other, int):
            return Scalar(self.ctx, {key: c * other for key, c in self.coords.items()}, exact=self.exact)
        other = self.coerce(other)
        ctx = self.ctx
        p1 = ctx.p - 1
        minus_p = -ctx.p
        exact = self.exact and other.exact
        wrap_eps = ctx.e0_inverse if ctx.has_epsilon else None
        out: dict[Key, int] = defaultdict(int)
        for (a1, b1), c1 in self.coords.items():
            for (a2, b2), c2 in other.coords.items():
                a = a1 + a2
                b = b1 + b2
                c = c1 * c2
                if a >= p1:
                    a -= p1
                    c *= minus_p
                if b >= p1:
                    b -= p1
                    c *= wrap_eps
                    exact = False
                out[(a, b)] += c
        return Scalar(ctx, out, exact=exact)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = Scalar.of(self.ctx, 1, exact=True)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __bool__(self) -> bool:
        return bool(self.coords)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = self.coerce(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        if self.exact and other.exact:
            return self.coords == other.coords
        q = self.ctx.modulus
        diff = (self - other).coords
        return all(c % q == 0 for c in diff.values())

    def __hash__(self) -> int:
        q = self.ctx.modulus
        return hash((self.ctx.p, self.ctx.k, frozenset((key, c % q) for key, c in self.coords.items())))

    def __repr__(self) -> str:
        if not self.coords:
            return "Scalar(0)"
        terms = []
        for (a, b), c in sorted(self.coords.items()):
            mono = "".join(s for s in (f"π^{a}" if a else "", f"ε^{b}" if b else ""))
            terms.append(f"{c}{'·' + mono if mono else ''}")
        return f"Scalar({' + '.join(terms)})"

    # -- valuation and units -------------------------------------------

    def valuation(self) -> Union[Fraction, float]:
        """Coordinate-wise valuation; math.inf when zero at precision."""
        if not self.coords:
            return math.inf
        p = self.ctx.p
        return min(Fraction(p_valuation(c, p)) + Fraction(a, p - 1) for (a, _), c in self.coords.items())

    def residue(self) -> int:
        """Integer value, for scalars living in Z_p (no π or ε part)."""
        if any(key != (0, 0) for key in self.coords):
            raise DomainError(f"{self!r} is not in Z_p")
        return self.coords.get((0, 0), 0)

    def _residue_inverse(self) -> "Scalar":
        ctx = self.ctx
        p = ctx.p
        if not ctx.has_epsilon:
            c = self.coords.get((0, 0), 0) % p
            if c == 0:
                raise DomainError(f"{self!r} is not a unit")
            return Scalar(ctx, {(0, 0): pow(c, -1, p)})
        coeffs = [self.coords.get((0, b), 0) % p for b in range(p - 1)]
        f = Poly(list(reversed(coeffs)), _EPS, modulus=p)
        m = Poly([1] + [0] * (p - 2) + [-ctx.e0_inverse % p], _EPS, modulus=p)
        try:
            inv = f.invert(m)
        except NotInvertible:
            raise DomainError(f"{self!r} is not a unit of the étale algebra") from None
        return Scalar(ctx, {(0, exp): int(c) for (exp,), c in inv.terms()})

    def is_unit(self) -> bool:
        if self.valuation() != 0:
            return False
        try:
            self._residue_inverse()
        except DomainError:
            return False
        return True

    def inverse(self) -> "Scalar":
        """Inverse of a unit by Newton iteration from the residue field."""
        if self.valuation() != 0:
            raise DomainError(f"division by a non-unit {self!r}")
        z = self._residue_inverse()
        ctx = self.ctx
        start = Fraction(1, ctx.p - 1) if ctx.ramified else Fraction(1)
        reached = start
        while reached < ctx.k:
            z = z * (2 - self * z)
            reached *= 2
        return z

    def div_pi(self, n: int) -> "Scalar":
        """Exact division by π^n on the stored representative.

        Caller guarantees valuation >= n/(p-1); the lowest n/(p-1) digits of
        precision of the quotient are not significant.
        """
        if n == 0:
            return self
        p = self.ctx.p
        p1 = p - 1
        out: dict[Key, int] = defaultdict(int)
        for (a, b), c in self.coords.items():
            a -= n
            while a < 0:
                a += p1
                if c % p:
                    raise DomainError(f"{self!r} is not divisible by π^{n}")
                c //= -p
            out[(a, b)] += c
        return Scalar(self.ctx, out, exact=self.exact)

    def split_pi(self) -> tuple[int, "Scalar"]:
        """Write self = π^n · y with y of valuation 0."""
        v = self.valuation()
        if v == math.inf:
            raise DomainError("cannot split zero")
        n = int(v * (self.ctx.p - 1))
        return n, self.div_pi(n)

    def with_precision(self, ctx: PrimeCtx) -> "Scalar":
        """Reduce into a context of lower (or equal) precision."""
        if ctx.p != self.ctx.p:
            raise DomainError("prime mismatch")
        return Scalar(ctx, self.coords)

    # -- serialization ------------------------------------------------

    def coords_json(self) -> dict[str, str]:
        p = self.ctx.p
        return {f"{a},{b}": _digits(c, p) for (a, b), c in sorted(self.coords.items())}

    @classmethod
    def from_coords_json(cls, ctx: PrimeCtx, data: Mapping[str, str], exact: bool = False) -> "Scalar":
        coords = {}
        for key, digits in data.items():
            a, b = (int(x) for x in key.split(","))
            coords[(a, b)] = _undigits(digits, ctx.p)
        return cls(ctx, coords, exact=exact)

    def to_json(self) -> dict:
        return {**self.ctx.header(), "exact": self.exact, "coords": self.coords_json()}

    @classmethod
    def from_json(cls, data: Mapping) -> "Scalar":
        ctx = PrimeCtx(p=data["p"], g=data["g"], k=data["k"], ramified=data["ramified"], e0=data["e0"])
        return cls.from_coords_json(ctx, data["coords"], exact=data.get("exact", False))


def valuation(x: Union[Scalar, int], p: Optional[int] = None) -> Union[Fraction, float]:
    """Valuation of a scalar or of an exact integer (p required for ints)."""
    if isinstance(x, Scalar):
        return x.valuation()
    if p is None:
        raise DomainError("p is required for integer valuations")
    v = p_valuation(x, p)
    return v if v == math.inf else Fraction(v)
