"""Tests for linear systems with assigned base loci and the degree arithmetic around them."""
from fractions import Fraction

import pytest

from exactalg import MultiPoly, compose, parse_poly
from linsys import (
    BlowupCenter, CIPowerCurve, ConditionDegreeOverflow, EmptySystem, InfinitelyNearChain,
    InfinitelyNearCurveMult, LinearSystem, NegativeDegree, NotContracted, PointMult, RationalCurveMult,
    blowup_chart, build_system, complement_basis, conditions_matrix, contraction_point, image_curve,
    image_degree_formula, implicit_equation, line_param, lines_through, projection_inverse,
    proportional_ratios, residuals_free_at, restrict_system, span_contains, span_equal,
    stdquad_transform, verify_fixed_divisor,
)

E0 = (1, 0, 0, 0)
E1 = (0, 1, 0, 0)
LINE = line_param(E0, E1)
TWISTED_CUBIC = [parse_poly(t, 2) for t in ("x0^3", "x0^2*x1", "x0*x1^2", "x1^3")]


def P4(text):
    return parse_poly(text, 4)


class TestDimensions:
    def test_quadrics_double_at_point(self):
        X = build_system(2, [PointMult(E0, 2)])
        assert X.dim == 6
        assert X.check_conditions()

    def test_cubics_through_line(self):
        X = build_system(3, [RationalCurveMult(LINE, 1)])
        assert X.dim == 16
        assert X.contains(P4("x0^2*x2 + x1*x3^2"))
        assert not X.contains(P4("x0^3"))

    def test_quadrics_through_twisted_cubic(self):
        X = build_system(2, [RationalCurveMult(TWISTED_CUBIC, 1)])
        assert X.dim == 3
        assert span_equal(X.basis, [P4("x0*x2 - x1^2"), P4("x1*x3 - x2^2"), P4("x0*x3 - x1*x2")])

    def test_quintics_double_along_line(self):
        X = build_system(5, [RationalCurveMult(LINE, 2)])
        assert X.dim == 40
        assert X.check_conditions()

    def test_complete_intersection_powers(self):
        g = P4("x0*x3 - x1*x2")
        g2 = P4("x0^2 + x1^2 + x2^2 + x3^2")
        assert build_system(3, [CIPowerCurve(g, g2, 1)]).dim == 8
        X = build_system(5, [CIPowerCurve(g, g2, 2)])
        assert X.dim == 12
        assert X.contains(g * g2 * P4("x0"))

    def test_ci_power_with_point(self):
        g = P4("x0*x3 - x1*x2")
        g2 = P4("x0^2 + x1^2 + x2^2 + x3^2")
        X = build_system(3, [CIPowerCurve(g, g2, 1), PointMult((0, 0, 1, 0), 1)])
        assert X.dim == 7
        assert X.check_conditions()

    def test_tangency_along_line(self):
        V = P4("x0*x3 - x1*x2")
        tangent = InfinitelyNearCurveMult.tangent_to(V, E0, E1, 1, 1)
        X = build_system(2, [RationalCurveMult(LINE, 1), tangent])
        assert X.dim == 4
        assert X.contains(V)
        assert X.contains(P4("x2*x3"))
        assert X.check_conditions()

    def test_restrict(self):
        X = build_system(2, [RationalCurveMult(LINE, 1)])
        Y = restrict_system(X, [PointMult((0, 0, 1, 0), 1)])
        assert X.dim == 7
        assert Y.dim == 6
        assert all(X.contains(F) for F in Y.basis)


class TestConditions:
    def test_point_holds(self):
        cond = PointMult(E0, 2)
        assert cond.holds(P4("x1*x2"))
        assert not cond.holds(P4("x0*x1"))

    def test_curve_holds(self):
        cond = RationalCurveMult(TWISTED_CUBIC, 1)
        assert cond.holds(P4("x0*x3 - x1*x2"))
        assert not cond.holds(P4("x0*x3"))

    def test_tangency_holds(self):
        tangent = InfinitelyNearCurveMult.tangent_to(P4("x0*x3 - x1*x2"), E0, E1, 1, 1)
        assert tangent.holds(P4("x0*x3 - x1*x2"))
        assert tangent.holds(P4("x2*x3"))
        assert not tangent.holds(P4("x0*x2"))
        assert tangent.describe()['type'] == 'InfinitelyNearCurveMult'

    def test_conditions_matrix(self):
        M = conditions_matrix(1, [PointMult(E0, 1)])
        assert (M.rows, M.cols) == (1, 4)
        assert conditions_matrix(1, []).rows == 1

    def test_bad_parametrization(self):
        with pytest.raises(ValueError):
            RationalCurveMult([parse_poly(t, 2) for t in ("x0^2", "x0*x1", "0", "0")], 1)
        with pytest.raises(ValueError):
            CIPowerCurve(P4("x0^2"), P4("2*x0^2"), 1)

    def test_degree_overflow(self):
        with pytest.raises(ConditionDegreeOverflow):
            build_system(2, [PointMult(E0, 4)])
        with pytest.raises(ConditionDegreeOverflow):
            build_system(3, [CIPowerCurve(P4("x0*x3 - x1*x2"), P4("x0^2 + x3^2"), 2)])

    def test_empty_system(self):
        points = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
        with pytest.raises(EmptySystem):
            build_system(1, [PointMult(p, 1) for p in points])

    def test_zero_point(self):
        with pytest.raises(ValueError):
            PointMult((0, 0, 0, 0), 1)


class TestInfinitelyNearChain:
    # variant (ii): x0 = x1 cuts V in four times the double line x0 - x1 = x3 = 0
    V2 = "x0^2*x2^2 - 2*x0*x1*x2^2 - x0*x1*x3^2 + x1^2*x2^2 + x1^2*x3^2 - x3^4"
    V3 = ("4*x0^3*x1 - 13*x0^2*x1^2 + 14*x0*x1^3 - 5*x1^4 + 10*x0^2*x1*x2 - 22*x0*x1^2*x2 + 12*x1^3*x2"
          " - x0^2*x2^2 + 10*x0*x1*x2^2 - 10*x1^2*x2^2 - 2*x0*x2^3 + 4*x1*x2^3 - x2^4 - 8*x0^2*x3^2"
          " + 20*x0*x1*x3^2 - 12*x1^2*x3^2 - 12*x0*x2*x3^2 + 16*x1*x2*x3^2 - 4*x2^2*x3^2 - 4*x3^4")
    L2 = ((1, 1, 0, 0), (0, 0, 1, 0))
    L3 = ((1, 1, 0, 0), (0, 1, 1, 0))

    def test_tangent_plane_along_line(self):
        chain = InfinitelyNearChain(E0, E1, (0, 0, 0, 1), [1, 1])
        X = build_system(2, [chain])
        assert X.dim == 5
        assert X.contains(P4("x2^2 + x0*x3"))
        assert not X.contains(P4("x0*x2"))
        assert X.check_conditions()

    def test_double_lines_of_variant_ii(self):
        V = P4(self.V2)
        assert InfinitelyNearChain(*self.L2, (1, -1, 0, 0), [2, 2]).holds(V)
        # x3 = 0 cuts V in two double lines, not in one line four times
        assert not InfinitelyNearChain(*self.L2, (0, 0, 0, 1), [2, 2]).holds(V)
        with pytest.raises(ValueError):
            InfinitelyNearChain.along_double_arc(V, *self.L2, (1, -1, 0, 0), [2, 2, 2])

    def test_double_lines_of_variant_iii(self):
        V = P4(self.V3)
        chain = InfinitelyNearChain.along_double_arc(V, *self.L3, (1, -1, 1, 0), [2, 2, 2])
        assert chain.arc is not None
        assert chain.holds(V)
        assert chain.describe()['m'] == [2, 2, 2]

    def test_arc_of_variant_iii(self):
        # the third line is the arc (x0 - x1 + x2)*(x1 + x2) = 2*x3^2 over the plane
        chain = InfinitelyNearChain.along_double_arc(P4(self.V3), *self.L3, (1, -1, 1, 0), [1, 1, 1])
        assert chain.holds(P4("x0*x1 + x0*x2 - x1^2 + x2^2 - 2*x3^2"))
        assert chain.holds(P4("x0^2 - 2*x0*x1 + 2*x0*x2 + x1^2 - 2*x1*x2 + x2^2"))
        assert not chain.holds(P4("x0*x1 - x1^2 + x1*x2"))
        X = build_system(2, [chain])
        assert X.dim == 3
        assert X.check_conditions()

    def test_invalid_chains(self):
        with pytest.raises(ValueError):
            InfinitelyNearChain(E0, E1, (1, 0, 0, 0), [1, 1])
        with pytest.raises(ValueError):
            InfinitelyNearChain(E0, E1, (0, 0, 0, 1), [1, 1, 1])
        with pytest.raises(ValueError):
            InfinitelyNearChain(E0, E1, (0, 0, 0, 1), [])


class TestSpans:
    def test_span_equal(self):
        assert span_equal([P4("x0"), P4("x1")], [P4("x0 + x1"), P4("x0 - x1")])
        assert not span_equal([P4("x0")], [P4("x1")])
        assert not span_equal([P4("x0"), P4("x1")], [P4("x0")])

    def test_span_contains(self):
        assert span_contains([P4("x0^2"), P4("x1^2")], P4("3*x0^2 - x1^2"))
        assert not span_contains([P4("x0^2")], P4("x0*x1"))
        assert span_contains([], MultiPoly.zero(4))

    def test_complement_basis(self):
        assert complement_basis([E0, E1]) == [[0, 0, 1, 0], [0, 0, 0, 1]]


class TestPullbacks:
    U = [parse_poly(t, 3) for t in ("x0", "x1", "x2", "x0")]

    def test_fixed_divisor(self):
        L = LinearSystem(2, [P4("x0*x1"), P4("x0*x2")])
        ok, residuals = verify_fixed_divisor(L, self.U, parse_poly("x0", 3))
        assert ok
        assert residuals == [parse_poly("x1", 3), parse_poly("x2", 3)]
        assert residuals_free_at(residuals, [(1, 1, 0), (2, 0, 1)])
        assert not residuals_free_at(residuals, [(1, 0, 0)])

    def test_fixed_divisor_failure(self):
        L = LinearSystem(2, [P4("x0*x1"), P4("x0*x2")])
        ok, residuals = verify_fixed_divisor(L, self.U, parse_poly("x1", 3))
        assert not ok
        assert residuals == [parse_poly("x0", 3)]

    def test_proportional_ratios(self):
        F = P4("x0 + x1")
        assert proportional_ratios([F.scale(2), F.scale(-1), MultiPoly.zero(4)]) == [2, -1, 0]
        assert proportional_ratios([F.scale(Fraction(-1, 3)), F]) == [1, -3]
        with pytest.raises(NotContracted):
            proportional_ratios([P4("x0"), P4("x1")])
        with pytest.raises(NotContracted):
            proportional_ratios([MultiPoly.zero(4)])

    def test_contraction_point(self):
        V = P4("x0*x3 - x1*x2")
        plane = [parse_poly(t, 3) for t in ("x0", "x1", "x2", "0")]
        L = LinearSystem(2, [V, V.scale(2) + P4("x0*x3"), P4("x1*x3")])
        assert contraction_point(L, plane) == [1, 2, 0]
        with pytest.raises(NotContracted):
            contraction_point(LinearSystem(2, [P4("x0^2"), P4("x1^2")]), plane)

    def test_image_curve(self):
        phi = [parse_poly(t, 3) for t in ("x0*x1", "x0*x2", "x1*x2")]
        gamma = [parse_poly(t, 2) for t in ("x0", "x1", "x0")]
        assert image_curve(phi, gamma) == [parse_poly(t, 2) for t in ("x1", "x0", "x1")]


class TestDegrees:
    @pytest.mark.parametrize("d,mults,expected", [
        (5, [(2, 4), (1, 2)], 7),
        (7, [(4, 1), (2, 6), (1, 1)], 8),
        (9, [(4, 3), (2, 6)], 9),
        (2, [(1, 4)], 0),
    ])
    def test_image_degree(self, d, mults, expected):
        assert image_degree_formula(d, mults) == expected

    def test_negative_degree(self):
        with pytest.raises(NegativeDegree):
            image_degree_formula(2, [(2, 2)])
        with pytest.raises(ValueError):
            image_degree_formula(0, [])

    def test_standard_quadratic_involution(self, rng):
        assert stdquad_transform(2, 1, 1, 1) == (1, (0, 0, 0), True)
        for _ in range(1000):
            d = int(rng.integers(1, 30))
            m = tuple(int(v) for v in rng.integers(0, d + 1, size=3))
            d2, m2, _ = stdquad_transform(d, *m)
            assert stdquad_transform(d2, *m2)[:2] == (d, m)

    def test_standard_quadratic_not_effective(self):
        assert stdquad_transform(1, 1, 1, 1) == (-1, (-1, -1, -1), False)
        d2, mults, effective = stdquad_transform(3, 3, 0, 0)
        assert (d2, mults) == (3, (3, 0, 0))
        assert effective
        assert not stdquad_transform(2, 2, 2, 0)[2]


class TestCharts:
    def test_blowup_of_line(self):
        strict, exc = blowup_chart(P4("x0*x2 + x1*x3"), BlowupCenter((2, 3)), 0)
        assert strict == P4("x0 + x1*x3")
        assert exc == 1

    def test_blowup_of_point(self):
        strict, exc = blowup_chart(P4("x1^2 - x2*x3 + x1^3"), BlowupCenter((1, 2, 3)), 0)
        assert exc == 2
        assert strict == P4("1 - x2*x3 + x1")

    def test_chart_out_of_range(self):
        with pytest.raises(IndexError):
            blowup_chart(P4("x0"), BlowupCenter((2, 3)), 2)


class TestQuadrics:
    V = P4("x0*x3 - x1*x2")

    def test_implicit_equation(self):
        assert span_equal(implicit_equation(TWISTED_CUBIC, 2),
                          [P4("x0*x2 - x1^2"), P4("x1*x3 - x2^2"), P4("x0*x3 - x1*x2")])
        conic = [parse_poly(t, 2) for t in ("x0^2", "x0*x1", "x1^2")]
        eqs = implicit_equation(conic, 2)
        assert len(eqs) == 1
        assert span_equal(eqs, [parse_poly("x0*x2 - x1^2", 3)])

    def test_lines_on_smooth_quadric(self):
        lines = lines_through(self.V, E0)
        assert [m for _, m in lines] == [1, 1]
        for param, _ in lines:
            assert compose(self.V, param).is_zero()

    def test_double_line_on_cone(self):
        lines = lines_through(P4("x0*x3 - x1^2"), E0)
        assert [m for _, m in lines] == [2]

    def test_projection_inverse(self):
        psi = projection_inverse(self.V, E0)
        assert compose(self.V, psi).is_zero()
        assert all(f.total_degree() == 2 for f in psi)
