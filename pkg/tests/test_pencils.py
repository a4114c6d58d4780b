"""Tests for Segre symbols of quadric pencils and of their plane sections."""
import json

import pytest

from catalog import expected_table, load_fixture, load_pencil
from conftest import random_form
from exactalg import MultiPoly, ParseError, RatMatrix, det_bareiss, format_poly, parse_poly
from pencils import (
    DegeneratePencil, DegenerateSection, SegreSymbol, SymmetricPencil, conic_section_symbol,
    pencil_det_and_minor_gcds, quadric_form, quadric_matrix, segre_symbol, singular_members,
)

SMOOTH_BASE = [f"E{i}" for i in range(1, 14)]
CONES = [f"E{i}" for i in range(15, 20)]
TABLE = {row[0]: row for row in expected_table()}


def _pencil(F1: str, F2: str, n: int = 4) -> SymmetricPencil:
    return SymmetricPencil.from_forms(parse_poly(F1, n), parse_poly(F2, n))


def _random_invertible(rng, n: int = 4) -> RatMatrix:
    while True:
        M = [[int(v) for v in row] for row in rng.integers(-2, 3, size=(n, n))]
        if det_bareiss(M) != 0:
            return RatMatrix(M)


def _random_recombination(rng):
    while True:
        a, b, c, d = (int(v) for v in rng.integers(-3, 4, size=4))
        if a * d - b * c != 0:
            return a, b, c, d


class TestFixtureSymbols:
    @pytest.mark.parametrize("entry_id", SMOOTH_BASE)
    def test_quadric_entries(self, entry_id):
        data = load_fixture(entry_id)
        symbol = segre_symbol(load_pencil(data['pencil']))
        assert symbol.display() == TABLE[entry_id][2]

    @pytest.mark.parametrize("entry_id", CONES)
    def test_cone_entries(self, entry_id):
        data = load_fixture(entry_id)
        symbol = conic_section_symbol(load_pencil(data['pencil']), data['section_plane'])
        assert symbol.display() == TABLE[entry_id][2]
        assert symbol.section

    def test_diagonal_pencil(self):
        symbol = segre_symbol(load_pencil('diag.json'))
        assert symbol.display() == '[1,1,1,1]'
        assert symbol.weighted_sum() == 4

    def test_quadratic_root_class(self):
        P = _pencil("x0^2 - x1^2 + x2^2 - x3^2", "2*x0*x1 + 2*x2*x3")
        symbol = segre_symbol(P)
        assert symbol.display() == '[(11)×2]'
        assert symbol.degrees == [2]
        assert symbol.weighted_sum() == 4
        assert format_poly(symbol.root_classes[0]) == 'x0^2 + x1^2'


class TestInvariance:
    @pytest.mark.parametrize("entry_id", SMOOTH_BASE)
    def test_swap_recombine_congruence(self, entry_id, rng):
        P = load_pencil(load_fixture(entry_id)['pencil'])
        expected = segre_symbol(P)
        assert segre_symbol(P.recombine(0, 1, 1, 0)) == expected
        assert segre_symbol(P.recombine(*_random_recombination(rng))) == expected
        assert segre_symbol(P.congruent(_random_invertible(rng))) == expected

    @pytest.mark.parametrize("entry_id", CONES)
    def test_section_swap(self, entry_id, rng):
        data = load_fixture(entry_id)
        P = load_pencil(data['pencil'])
        expected = conic_section_symbol(P, data['section_plane'])
        assert conic_section_symbol(P.recombine(0, 1, 1, 0), data['section_plane']) == expected
        assert conic_section_symbol(P.recombine(*_random_recombination(rng)), data['section_plane']) == expected

    @pytest.mark.slow
    def test_random_transformations(self, rng):
        pencils = [load_pencil(load_fixture(e)['pencil']) for e in SMOOTH_BASE]
        expected = [segre_symbol(P).display() for P in pencils]
        for k in range(1000):
            i = k % len(pencils)
            Q = pencils[i].recombine(*_random_recombination(rng)).congruent(_random_invertible(rng))
            assert segre_symbol(Q).display() == expected[i]


class TestMatrices:
    def test_form_matrix_inverse(self, rng):
        for _ in range(100):
            f = random_form(rng, 4, 2, nterms=6)
            A = quadric_matrix(f)
            assert A.is_symmetric()
            assert quadric_form(A) == f

    def test_not_a_quadric(self):
        with pytest.raises(ValueError):
            quadric_matrix(parse_poly("x0^3", 4))
        with pytest.raises(ValueError):
            quadric_matrix(parse_poly("x0^2 + x1", 4))

    def test_det_and_minor_gcds(self):
        det, gcds = pencil_det_and_minor_gcds(load_pencil('E10.json'))
        l0, l1 = (MultiPoly.variable(i, 2) for i in range(2))
        assert det == (l0 * (l0 + l1)) ** 2
        assert gcds[1] == l0 * l0 + l0 * l1
        assert gcds[2] == 1

    def test_singular_members(self):
        members = singular_members(load_pencil('E10.json'))
        assert [(m.corank, m.det_multiplicity) for m in members] == [(2, 2), (2, 2)]
        assert [m.corank for m in singular_members(load_pencil('diag.json'))] == [1, 1, 1, 1]

    def test_json_round_trip(self):
        P = load_pencil('E10.json')
        Q = SymmetricPencil.from_json(json.dumps(P.to_json()))
        assert Q.A1 == P.A1 and Q.A2 == P.A2


class TestSymbolOrdering:
    def test_groups_sorted(self):
        assert SegreSymbol([(1,), (3,)]).display() == '[3,1]'
        assert SegreSymbol([(1,), (1, 1), (2,)]).display() == '[(11),2,1]'

    def test_distinct_shapes_differ(self):
        a = segre_symbol(_pencil("x0^2", "x1^2 + x2^2 + x3^2").recombine(1, 0, 0, 1))
        b = segre_symbol(_pencil("x0^2 + x3^2", "x1^2 + x2^2"))
        assert a.display() == '[(111),1]'
        assert b.display() == '[(11),(11)]'
        assert a != b


class TestDegenerate:
    def test_proportional(self):
        with pytest.raises(DegeneratePencil):
            _pencil("x0^2 + x1^2", "2*x0^2 + 2*x1^2")

    def test_identically_singular(self):
        with pytest.raises(DegeneratePencil):
            segre_symbol(_pencil("x0^2", "x1^2"))

    def test_regular_flag_rejects_cone_pencils(self):
        cones = load_pencil('E15.json')
        with pytest.raises(DegeneratePencil):
            load_pencil('E15.json', regular=True)
        with pytest.raises(DegeneratePencil):
            SymmetricPencil(cones.A1, cones.A2, regular=True)
        assert load_pencil('E10.json', regular=True).n == 4

    def test_wrong_size(self):
        with pytest.raises(DegeneratePencil):
            SymmetricPencil(RatMatrix.identity(5), RatMatrix.zeros(5, 5))

    def test_not_symmetric(self):
        with pytest.raises(DegeneratePencil):
            SymmetricPencil(RatMatrix([[1, 1, 0], [0, 1, 0], [0, 0, 1]]), RatMatrix.identity(3))

    def test_degenerate_section(self):
        with pytest.raises(DegenerateSection):
            conic_section_symbol(load_pencil('E15.json'), [0, 1, 0, 0])

    @pytest.mark.parametrize("text", ['not json', '{"n": 4}', '{"n": 3, "F1": "x3^2", "F2": "x0^2"}'])
    def test_parse_errors(self, text):
        with pytest.raises(ParseError):
            SymmetricPencil.from_json(text)
