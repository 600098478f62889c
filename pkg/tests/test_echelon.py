from fractions import Fraction

import numpy as np
import pytest

from dworktheta.echelon import echelon_by_degree, full_pivot_determinant
from dworktheta.errors import PrecisionError
from dworktheta.laurent import Series
from dworktheta.padic import Scalar


def _matrix(ctx, rows):
    m = np.empty((len(rows), len(rows)), dtype=object)
    for i, row in enumerate(rows):
        for j, entry in enumerate(row):
            m[i, j] = entry if isinstance(entry, Scalar) else Scalar.of(ctx, entry)
    return m


def test_echelon_reduces_and_counts_dependents():
    vs = [
        Series.from_terms({2: 1, 0: 3}),
        Series.from_terms({2: 1, 1: 1}),
        Series.from_terms({0: 1}),
        Series.from_terms({1: 2, 0: 5}),
    ]
    result = echelon_by_degree(vs)
    assert [w.hi for w in result.basis] == [0, 1, 2]
    assert result.dependent == 1
    assert dict(result.basis[2].terms()) == {2: 1}
    assert dict(result.basis[1].terms()) == {1: 1}


def test_echelon_divides_by_p_adic_units(ctx):
    result = echelon_by_degree([Series.from_terms({1: 3, 0: 1})], ctx)
    lead = result.basis[0].coeff(1)
    assert lead == 1


def test_echelon_refuses_non_unit_pivots(ctx):
    with pytest.raises(PrecisionError):
        echelon_by_degree([Series.from_terms({0: 17})], ctx)


def test_echelon_counts_leading_zeros_at_precision(ctx):
    v = Series(lo=0, coeffs=(Scalar.of(ctx, 1), Scalar.of(ctx, 17 ** 3)), tail_exact=True)
    result = echelon_by_degree([v], ctx)
    assert result.skipped_zero == 1
    assert [w.hi for w in result.basis] == [0]


def test_determinant_of_unit_matrix(ctx):
    det = full_pivot_determinant(_matrix(ctx, [[1, 2], [3, 4]]), ctx)
    assert det.certified
    assert det.valuation == 0
    assert det.size == 2


def test_determinant_sums_pivot_valuations(ctx):
    pi = Scalar.pi(ctx)
    det = full_pivot_determinant(_matrix(ctx, [[pi, 0], [0, 1]]), ctx)
    assert det.certified
    assert det.valuation == Fraction(1, 16)


def test_singular_matrix_is_not_certified(ctx):
    det = full_pivot_determinant(_matrix(ctx, [[1, 2], [2, 4]]), ctx)
    assert not det.certified
