"""Elimination kernels over integers and tower scalars.

Two routines: a top-degree echelon for series generators (admissible bases)
and a full-pivoting determinant for finite Scalar matrices.  Both only ever
divide by certified units; anything else is reported as PrecisionError.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import PrecisionError, WindowError
from .laurent import Coeff, Series
from .padic import PrimeCtx, Scalar

logger = logging.getLogger(__name__)


@dataclass
class Pivot:
    degree: int
    valuation: Fraction

    def to_json(self) -> dict:
        return {"degree": self.degree, "valuation": str(self.valuation)}


@dataclass
class EchelonResult:
    basis: list[Series]
    pivots: list[Pivot]
    dependent: int = 0
    skipped_zero: int = 0  # leading coefficients ≡ 0 mod p^k treated as zero


def _unit_inverse(c: Coeff, ctx: Optional[PrimeCtx], degree: int) -> Coeff:
    if isinstance(c, Scalar):
        if not c.is_unit():
            raise PrecisionError(
                f"leading coefficient at degree {degree} is not a certified unit",
                stage="echelon",
                analysis={"degree": degree, "valuation": str(c.valuation())},
            )
        return c.inverse()
    if c in (1, -1):
        return c
    if ctx is None or c % ctx.p == 0:
        raise PrecisionError(f"leading coefficient {c} at degree {degree} is not a unit",
                             stage="echelon", analysis={"degree": degree})
    return Scalar.of(ctx, c).inverse()


def clear_pivots(s: Series, pivots: dict[int, Series]) -> Series:
    """Subtract pivot rows so s has no terms at pivot degrees below its top."""
    top = s.hi
    for n in sorted((d for d in pivots if d < top), reverse=True):
        if n < s.lo:
            if s.tail_exact:
                break
            raise WindowError(f"pivot degree {n} lies below the window of a degree-{top} row")
        c = s.coeff(n)
        if c:
            s = s - pivots[n].scale(c)
    return s


def echelon_by_degree(vs: Sequence[Series], ctx: Optional[PrimeCtx] = None) -> EchelonResult:
    """Reduced echelon form of the span of vs, leading degree first."""
    pivots: dict[int, Series] = {}
    dependent = 0
    skipped = 0
    for v in vs:
        while True:
            i = len(v.coeffs) - 1
            while i >= 0 and not v.coeffs[i]:
                c = v.coeffs[i]
                if isinstance(c, Scalar) and not c.exact:
                    skipped += 1
                i -= 1
            v = v.trim()
            if not any(v.coeffs):
                dependent += 1
                break
            d = v.hi
            lead = v.coeffs[-1]
            if d in pivots:
                v = v - pivots[d].scale(lead)
                continue
            inv = _unit_inverse(lead, ctx, d)
            if inv != 1:
                v = v.scale(inv)
            pivots[d] = v
            logger.debug(f"echelon pivot at degree {d}")
            break
    reduced: dict[int, Series] = {}
    for d in sorted(pivots):
        reduced[d] = clear_pivots(pivots[d], reduced)
    basis = [reduced[d] for d in sorted(reduced)]
    return EchelonResult(
        basis=basis,
        pivots=[Pivot(d, Fraction(0)) for d in sorted(reduced)],
        dependent=dependent,
        skipped_zero=skipped,
    )


@dataclass
class DeterminantResult:
    size: int
    certified: bool
    valuation: Fraction  # valuation of the determinant, when certified
    pivots: list[dict] = field(default_factory=list)


def full_pivot_determinant(matrix: np.ndarray, ctx: PrimeCtx) -> DeterminantResult:
    """Certify det(matrix) != 0 mod p^k by full pivoting on minimal valuation.

    Each pivot is π^a·y with y a unit of the étale algebra; the Schur update
    loses a/(p-1) digits, so the determinant is certified while the summed
    pivot valuations stay below k.
    """
    n = matrix.shape[0]
    m = matrix.copy()
    rows = list(range(n))
    cols = list(range(n))
    total = Fraction(0)
    record = []
    for step in range(n):
        best = None
        for r in rows:
            for c in cols:
                e = m[r, c]
                if not e:
                    continue
                v = e.valuation()
                if best is not None and v >= best[0]:
                    continue
                a, y = e.split_pi()
                if not y.is_unit():
                    continue
                best = (v, r, c, a, y)
        if best is None or total + best[0] >= ctx.k:
            logger.debug(f"determinant not certified after {step} of {n} pivots")
            return DeterminantResult(size=n, certified=False, valuation=total, pivots=record)
        v, r, c, a, y = best
        total += v
        record.append({"row": r, "col": c, "valuation": str(v)})
        y_inv = y.inverse()
        rows.remove(r)
        cols.remove(c)
        for r2 in rows:
            e = m[r2, c]
            if not e:
                continue
            factor = e.div_pi(a) * y_inv
            m[r2, :] = m[r2, :] - m[r, :] * factor
    logger.debug(f"determinant certified: size {n}, valuation {total}")
    return DeterminantResult(size=n, certified=True, valuation=total, pivots=record)

