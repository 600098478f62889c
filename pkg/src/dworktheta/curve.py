"""Series model of y^2 = x^(2g+1) + x at infinity and its Krichever bases.

The local parameter is t = 1/T with x(T) = T^2 u(T), y(T) = -T x(T)^g, where
u in 1 + t Z[[t]] solves u^(2g) - u^(2g-1) + t^(4g) = 0.  Bases are returned
in reduced admissible form: monic, strictly increasing degrees, and no terms at
the pivot degrees of the other basis elements.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from sympy.ntheory import sqrt_mod

from .echelon import clear_pivots
from .errors import ContextError, DomainError, WindowError
from .laurent import Coeff, Series, coeff_valuation, invert, sup_norm
from .padic import PrimeCtx, Scalar

logger = logging.getLogger(__name__)


# -- integer power series in s = t^(4g) ------------------------------------

def _ps_mul(a: Sequence[int], b: Sequence[int], n: int) -> list[int]:
    full = np.convolve(np.array(a[:n], dtype=object), np.array(b[:n], dtype=object))
    return full[:n].tolist()


def _ps_pow(a: Sequence[int], e: int, n: int) -> list[int]:
    result = [1]
    for _ in range(e):
        result = _ps_mul(result, a, n)
    return result + [0] * (n - len(result))


def _ps_inv(a: Sequence[int], n: int) -> list[int]:
    """Inverse of a power series with constant term ±1, to n terms."""
    if a[0] not in (1, -1):
        raise DomainError("constant term must be a unit of Z")
    z = [a[0]]
    prec = 1
    while prec < n:
        prec = min(2 * prec, n)
        az = _ps_mul(a, z, prec)
        correction = [2 - az[0]] + [-c for c in az[1:]]
        z = _ps_mul(z, correction, prec)
    return z + [0] * (n - len(z))


def solve_local_parameter(g: int, n: int) -> list[int]:
    """U(s) with U^(2g) - U^(2g-1) + s = 0, U(0) = 1, to n terms.

    Newton iteration; the derivative is ≡ 1 mod s so each step doubles the
    number of correct coefficients.
    """
    u = [1]
    prec = 1
    while prec < n:
        prec = min(2 * prec, n)
        u = u + [0] * (prec - len(u))
        u_low = _ps_pow(u, 2 * g - 2, prec)
        u_mid = _ps_mul(u_low, u, prec)
        u_top = _ps_mul(u_mid, u, prec)
        f = [a - b for a, b in zip(u_top, u_mid)]
        if prec > 1:
            f[1] += 1
        df = [2 * g * a - (2 * g - 1) * b for a, b in zip(u_mid, u_low)]
        step = _ps_mul(f, _ps_inv(df, prec), prec)
        u = [a - b for a, b in zip(u, step)]
        logger.debug(f"local parameter Newton step: {prec} coefficients")
    return u[:n] + [0] * (n - len(u))


def build_u(g: int, N: int) -> Series:
    """u(T) in 1 + t Z[[t]] to tail depth N (coefficients of t^0 .. t^(N-1))."""
    if N < 1:
        raise ContextError(f"tail depth must be >= 1, got {N}")
    step = 4 * g
    u_s = solve_local_parameter(g, (N - 1) // step + 1)
    coeffs = [0] * N
    for j, c in enumerate(u_s):
        if j * step < N:
            coeffs[j * step] = c
    return Series.from_t_series(coeffs, shift=0)


# -- divisor specs ----------------------------------------------------------

@dataclass(frozen=True)
class TwoTorsion:
    """D_I = Σ_{j∈I} P_j - |I|·∞."""

    indices: tuple[int, ...]

    @property
    def label(self) -> str:
        return "I=" + ",".join(str(i) for i in self.indices)


@dataclass(frozen=True)
class Point:
    """Q - ∞ for a non-Weierstrass point Q = (x, y)."""

    x: Scalar
    y: Scalar
    text: str = ""

    @property
    def label(self) -> str:
        return f"Q={self.text}" if self.text else "Q"

    def to_json(self) -> dict:
        """The resolved coordinates, square roots lifted."""
        return {"spec": self.label, "x": self.x.coords_json(), "y": self.y.coords_json()}


DivisorSpec = Union[TwoTorsion, Point]


@dataclass(frozen=True)
class WeierstrassPoint:
    label: str
    x: Optional[Scalar]  # None for the point at infinity
    y: Optional[Scalar]


def hensel_sqrt(ctx: PrimeCtx, a: int) -> Scalar:
    """Square root of a mod p^k; the lift with the smallest residue mod p."""
    roots = sqrt_mod(a, ctx.modulus, all_roots=True)
    if not roots:
        raise DomainError(f"{a} is not a square mod {ctx.p}^{ctx.k}")
    root = min(roots, key=lambda r: (r % ctx.p, r))
    return Scalar.of(ctx, int(root))


def _parse_coordinate(ctx: PrimeCtx, token: str) -> Scalar:
    token = token.strip()
    m = re.fullmatch(r"(-?)sqrt(\d+)", token)
    if m:
        root = hensel_sqrt(ctx, int(m.group(2)))
        return -root if m.group(1) else root
    try:
        return Scalar.of(ctx, int(token))
    except ValueError:
        raise ContextError(f"cannot parse coordinate {token!r}") from None


def parse_divisor_spec(ctx: PrimeCtx, text: str) -> DivisorSpec:
    """Parse "I=0,3" or "Q=(1,sqrt2)"."""
    kind, _, body = text.strip().partition("=")
    kind = kind.strip()
    if kind == "I":
        try:
            indices = tuple(sorted({int(i) for i in body.split(",") if i.strip()}))
        except ValueError:
            raise ContextError(f"bad index list in {text!r}") from None
        spec = TwoTorsion(indices)
    elif kind == "Q":
        m = re.fullmatch(r"\s*\(([^,]+),([^)]+)\)\s*", body)
        if not m:
            raise ContextError(f"expected Q=(x,y), got {text!r}")
        spec = Point(_parse_coordinate(ctx, m.group(1)), _parse_coordinate(ctx, m.group(2)),
                     text=f"({m.group(1).strip()},{m.group(2).strip()})")
    else:
        raise ContextError(f"unknown divisor spec {text!r}; use I=... or Q=(x,y)")
    validate_divisor_spec(ctx, spec)
    return spec


def validate_divisor_spec(ctx: PrimeCtx, spec: DivisorSpec) -> None:
    g = ctx.g
    if isinstance(spec, TwoTorsion):
        if any(i < 0 or i > 2 * g for i in spec.indices):
            raise DomainError(f"indices must lie in 0..{2 * g}: {spec.indices}")
        if len(spec.indices) > g:
            raise DomainError(f"|I| = {len(spec.indices)} exceeds g = {g}")
        return
    if spec.y.valuation() != 0:
        raise DomainError("Q must be an integral non-Weierstrass point (y(Q) a unit)")
    if spec.y * spec.y != spec.x ** (2 * g + 1) + spec.x:
        raise DomainError(f"{spec.label} is not on y^2 = x^{2 * g + 1} + x")


# -- the curve context ------------------------------------------------------

def default_depth(g: int, m: int) -> int:
    return max(400, 4 * m * g)


@dataclass(frozen=True)
class CurveCtx:
    """(g, p, k) plus the cached curve series to tail depth N."""

    prime: PrimeCtx
    N: int
    u_coeffs: Optional[tuple[int, ...]] = field(default=None, compare=False, repr=False)

    @property
    def g(self) -> int:
        return self.prime.g

    @cached_property
    def u(self) -> Series:
        if self.u_coeffs is not None and len(self.u_coeffs) >= self.N:
            return Series.from_t_series(list(self.u_coeffs[:self.N]), shift=0)
        return build_u(self.g, self.N)

    @cached_property
    def x(self) -> Series:
        return self.u.shift(2)

    @cached_property
    def y(self) -> Series:
        return -(self.u ** self.g).shift(2 * self.g + 1)

    def x_power(self, n: int) -> Series:
        return _x_power(self, n)

    def over(self, prime: PrimeCtx) -> "CurveCtx":
        """The same curve series over another coefficient context."""
        coeffs = self.u_coeffs or tuple(reversed(self.u.coeffs))
        return CurveCtx(prime, self.N, coeffs)

    def with_precision(self, k: int) -> "CurveCtx":
        return self.over(self.prime.with_precision(k))


def make_curve(prime: PrimeCtx, N: Optional[int] = None, *,
               u_coeffs: Optional[Sequence[int]] = None) -> CurveCtx:
    if N is None:
        N = default_depth(prime.g, 4 * prime.g + 8)
    return CurveCtx(prime, N, tuple(u_coeffs) if u_coeffs is not None else None)


@lru_cache(maxsize=256)
def _x_power(curve: CurveCtx, n: int) -> Series:
    if n == 0:
        return Series.one()
    return _x_power(curve, n - 1) * curve.x


def curve_residual(curve: CurveCtx) -> Series:
    """y^2 - x^(2g+1) - x on the common window."""
    x, y = curve.x, curve.y
    return y * y - x ** (2 * curve.g + 1) - x


def weierstrass_points(curve: CurveCtx) -> list[WeierstrassPoint]:
    ctx = curve.prime
    zero = Scalar.of(ctx, 0)
    points = [WeierstrassPoint("∞", None, None), WeierstrassPoint("P0", zero, zero)]
    zeta = ctx.zeta
    for i in range(1, 2 * ctx.g + 1):
        points.append(WeierstrassPoint(f"P{i}", zeta ** (2 * i - 1), zero))
    return points


def gap_degrees(g: int) -> tuple[int, ...]:
    return tuple(range(1, 2 * g, 2))


# -- admissible bases -------------------------------------------------------

def _leading(s: Series) -> tuple[int, Coeff]:
    s = s.trim()
    return s.hi, s.coeffs[-1]


def reduce_basis(raw: Sequence[Series]) -> list[Series]:
    """Monic, reduced echelon form of raw generators with distinct degrees.

    Leading coefficients must be ±1; each element is cleared at every pivot
    degree below it, top degree first.
    """
    pivots: dict[int, Series] = {}
    out = []
    for s in sorted((r.trim() for r in raw), key=lambda r: r.hi):
        d, lead = _leading(s)
        if d in pivots:
            raise DomainError(f"two generators share degree {d}")
        if lead != 1:
            if lead == -1:
                s = -s
            else:
                raise DomainError(f"leading coefficient {lead!r} at degree {d} is not ±1")
        s = clear_pivots(s, pivots)
        pivots[d] = s
        out.append(s)
    return out


def _odd_element(curve: CurveCtx, j: int) -> Series:
    """-y x^j, monic of degree 2g+1+2j."""
    return -(curve.y * curve.x_power(j))


def a_degree(g: int, i: int) -> int:
    """Degree of the i-th admissible basis element of A (1-based)."""
    return 2 * i - 2 if i <= g + 1 else i + g - 1


def basis_A(curve: CurveCtx, m: int) -> list[Series]:
    """Admissible basis w_1..w_m of A = Z[x, y] in reduced form."""
    if m < 1:
        raise ContextError(f"basis length must be >= 1, got {m}")
    return list(_basis_A(curve, m))


@lru_cache(maxsize=32)
def _basis_A(curve: CurveCtx, m: int) -> tuple[Series, ...]:
    g = curve.g
    raw = []
    for i in range(1, m + 1):
        d = a_degree(g, i)
        if d % 2 == 0:
            raw.append(curve.x_power(d // 2))
        else:
            raw.append(_odd_element(curve, (d - 2 * g - 1) // 2))
    logger.debug(f"basis of A: g={g} m={m} degrees={[a_degree(g, i) for i in range(1, m + 1)]}")
    return tuple(reduce_basis(raw))


def basis_A_upto(curve: CurveCtx, degree: int) -> dict[int, Series]:
    """A basis elements keyed by degree, covering every pivot degree <= degree."""
    g = curve.g
    m = g + 1 if degree <= 2 * g else degree - g + 1
    return {s.hi: s for s in basis_A(curve, max(m, 1))}


def _two_torsion_raw(curve: CurveCtx, spec: TwoTorsion, m: int) -> list[Series]:
    g = curve.g
    s = len(spec.indices)
    f = divisor_function(curve, spec)
    raw = []
    for i in range(1, m + 1):
        if i <= g - s:
            raw.append(curve.x_power(i - 1).shift(s))
        else:
            r = i - (g - s)
            if r % 2:
                raw.append(curve.x_power(g - s + (r - 1) // 2).shift(s))
            else:
                raw.append((f * curve.x_power((r - 2) // 2)).shift(s))
    return raw


def _point_raw(curve: CurveCtx, spec: Point, m: int) -> list[Series]:
    g = curve.g
    f = divisor_function(curve, spec)
    raw = []
    for i in range(1, m + 1):
        if i <= g:
            raw.append(curve.x_power(i - 1).shift(1))
        else:
            r = i - g
            if r % 2:
                raw.append((f * curve.x_power((r - 1) // 2)).shift(1))
            else:
                raw.append(curve.x_power(g + (r - 2) // 2).shift(1))
    return raw


def divisor_function(curve: CurveCtx, spec: DivisorSpec) -> Series:
    """f_I = y ∏_{j∈I} (x - x(P_j))^(-1), or f_Q = l_Q (x - x(Q))^(-1)."""
    if isinstance(spec, TwoTorsion):
        points = weierstrass_points(curve)
        f = curve.y
        for j in spec.indices:
            f = f * invert(curve.x - Series.monomial(points[j + 1].x, 0))
        return f
    xq = Series.monomial(spec.x, 0)
    return (curve.y - curve.x + Series.monomial(spec.y, 0) + xq) * invert(curve.x - xq)


def basis_divisor(curve: CurveCtx, spec: DivisorSpec, m: int) -> list[Series]:
    """Admissible basis of L_I or L_Q in reduced form."""
    validate_divisor_spec(curve.prime, spec)
    if isinstance(spec, TwoTorsion):
        raw = _two_torsion_raw(curve, spec, m)
    else:
        raw = _point_raw(curve, spec, m)
    logger.debug(f"basis of L for {spec.label}: m={m}")
    return reduce_basis(raw)


# -- gap decomposition ------------------------------------------------------

@dataclass(frozen=True)
class GapDecomposition:
    """f = a_part + tail + Σ gap_i T^(2i-1)."""

    a_part: Series
    a_coords: dict[int, Coeff]
    tail: Series
    gap: tuple[Coeff, ...]

    def gap_is_zero(self) -> bool:
        return not any(self.gap)

    def tail_is_zero(self) -> bool:
        return self.tail.is_zero()


def decompose_gap(curve: CurveCtx, f: Series) -> GapDecomposition:
    """Split f along K((t)) = A ⊕ t K[[t]] ⊕ (gap monomials)."""
    g = curve.g
    f = f.trim()
    if not f.head_exact:
        raise DomainError("decompose_gap needs a head-exact series")
    if f.is_zero():
        return GapDecomposition(Series.zero(), {}, Series.zero(), tuple(0 for _ in range(g)))
    gaps = set(gap_degrees(g))
    basis = basis_A_upto(curve, max(f.hi, 0))
    lo = f.lo
    coeffs = list(f.coeffs)
    tail_exact = f.tail_exact
    if tail_exact:
        floor = min(w.lo for w in basis.values())
        if floor < lo:
            coeffs = [0] * (lo - floor) + coeffs
            lo = floor
    rem = np.array(coeffs, dtype=object)
    coords: dict[int, Coeff] = {}
    gap: dict[int, Coeff] = {}
    for n in range(f.hi, -1, -1):
        if n < lo:
            raise WindowError(f"window stops at {lo}, above degree {n}")
        c = rem[n - lo]
        if not c:
            continue
        if n in gaps:
            gap[n] = c
            continue
        w = basis[n]
        if not w.tail_exact:
            if w.lo > lo:
                rem = rem[w.lo - lo:]
                lo = w.lo
            tail_exact = False
        coords[n] = c
        start = max(w.lo, lo)
        seg = np.array(w.coeffs[start - w.lo:], dtype=object)
        rem[start - lo:n - lo + 1] = rem[start - lo:n - lo + 1] - seg * c
    if lo > -1 and not tail_exact:
        raise WindowError(f"gap decomposition left no tail window (lo={lo})")
    tail_hi = min(-1, lo + len(rem) - 1)
    # unseen coefficients are bounded by the valuations of f and of the coordinates
    p = curve.prime.p
    a_floor = min((coeff_valuation(c, p) + basis[n].floor for n, c in coords.items()), default=math.inf)
    tail_floor = min(sup_norm(f, p), a_floor)
    if tail_hi >= lo:
        tail = Series(lo=lo, coeffs=tuple(rem[:tail_hi - lo + 1].tolist()), head_exact=True,
                      tail_exact=tail_exact, floor=tail_floor)
    else:
        tail = Series.zero()
    a_part = Series.zero()
    for n, c in sorted(coords.items()):
        a_part = a_part + basis[n].scale(c)
    if coords:
        a_part = replace(a_part, floor=a_floor)
    return GapDecomposition(
        a_part=a_part,
        a_coords=coords,
        tail=tail,
        gap=tuple(gap.get(d, 0) for d in sorted(gaps)),
    )
