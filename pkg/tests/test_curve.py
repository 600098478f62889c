import pytest

from dworktheta.curve import (
    Point,
    TwoTorsion,
    a_degree,
    basis_A,
    basis_divisor,
    build_u,
    curve_residual,
    decompose_gap,
    gap_degrees,
    parse_divisor_spec,
    solve_local_parameter,
    weierstrass_points,
)
from dworktheta.dwork import gap_vector
from dworktheta.errors import ContextError, DomainError
from dworktheta.laurent import Series


def test_local_parameter_leading_terms():
    u = solve_local_parameter(2, 4)
    assert u[:2] == [1, -1]
    s = build_u(2, 40)
    assert s.coeff(0) == 1
    assert s.coeff(-8) == -1
    assert all(s.coeff(-n) == 0 for n in range(1, 40) if n % 8)


@pytest.mark.parametrize("g", [2, 3, 4])
def test_local_parameter_solves_its_equation(g):
    n = 6
    u = Series.from_t_series(solve_local_parameter(g, n))
    # in s = t^(4g) the equation reads U^(2g) - U^(2g-1) + s = 0
    lhs = u ** (2 * g) - u ** (2 * g - 1) + Series.monomial(1, -1)
    assert not any(lhs.coeffs)


def test_curve_equation_holds_on_the_window(curve):
    r = curve_residual(curve)
    assert r.hi >= 2
    assert not any(r.coeffs)


def test_x_and_y_leading_terms(curve):
    assert curve.x.hi == 2 and curve.x.coeff(2) == 1
    assert curve.y.hi == 5 and curve.y.coeff(5) == -1


def test_weierstrass_points_lie_on_the_curve(curve):
    points = weierstrass_points(curve)
    assert len(points) == 2 * curve.g + 2
    assert points[0].x is None
    for pt in points[1:]:
        assert pt.y * pt.y == pt.x ** 5 + pt.x


def test_parse_two_torsion(ctx):
    spec = parse_divisor_spec(ctx, "I=3,0")
    assert spec == TwoTorsion((0, 3))
    assert spec.label == "I=0,3"


def test_parse_point(ctx):
    spec = parse_divisor_spec(ctx, "Q=(1,sqrt2)")
    assert isinstance(spec, Point)
    assert spec.label == "Q=(1,sqrt2)"
    assert spec.y * spec.y == 2


@pytest.mark.parametrize("text", ["I=0,1,2", "I=9", "Q=(1,sqrt3)", "Q=(2,1)"])
def test_invalid_divisor_specs(ctx, text):
    with pytest.raises(DomainError):
        parse_divisor_spec(ctx, text)


@pytest.mark.parametrize("text", ["Z=1", "I=a", "Q=1,2"])
def test_malformed_divisor_specs(ctx, text):
    with pytest.raises(ContextError):
        parse_divisor_spec(ctx, text)


def test_basis_A_degrees_and_reduced_form(curve):
    basis = basis_A(curve, 8)
    assert [w.hi for w in basis] == [a_degree(2, i) for i in range(1, 9)] == [0, 2, 4, 5, 6, 7, 8, 9]
    assert basis[0].coeff(0) == 1 and basis[0].tail_exact
    for j, w in enumerate(basis):
        assert w.coeff(w.hi) == 1
        for v in basis[:j]:
            assert w.coeff(v.hi) == 0


def test_basis_divisor_degrees(curve):
    basis = basis_divisor(curve, TwoTorsion((0,)), 6)
    assert [w.hi for w in basis] == [1, 3, 4, 5, 6, 7]
    basis = basis_divisor(curve, TwoTorsion((0, 3)), 5)
    assert [w.hi for w in basis] == [2, 3, 4, 5, 6]


def test_gap_degrees():
    assert gap_degrees(2) == (1, 3)
    assert gap_degrees(3) == (1, 3, 5)


def test_gap_vectors_of_small_powers(curve):
    assert gap_vector(curve, 1) == (1, 0)
    assert gap_vector(curve, 3) == (0, 1)
    assert gap_vector(curve, 2) == (0, 0)


def test_decompose_gap_of_an_element_of_A(curve):
    f = curve.x_power(3) - curve.y
    dec = decompose_gap(curve, f)
    assert dec.gap_is_zero()
    assert dec.tail_is_zero()
    assert set(dec.a_coords) == {5, 6}
