"""Tests for fixture loading, entry construction, the verification pipeline and reports."""
import json
import os
from types import SimpleNamespace

import pytest

from catalog import (
    EntryUnbuilt, FixtureInvalid, VerificationReport, _check_fixed_divisor, aggregate_report,
    build_entry, expected_table, list_entries, load_fixture, verify_entry, write_report,
)
from cli import RunConfig
from config import Config
from exactalg import MultiPoly, compose, parse_poly
from linsys import LinearSystem

SURFACES = ['SL_CAYLEY']
BUILT = [e for e in list_entries() if load_fixture(e)['kind'] != 'unbuilt']


@pytest.fixture
def quick():
    return RunConfig(primes=[10007], trials=3, oracles=False)


@pytest.fixture
def full():
    return RunConfig(primes=[10007, 10009], trials=3)


def _rewrite(folder, entry_id, **changes):
    path = os.path.join(folder, 'entries', f'{entry_id}.json')
    with open(path, encoding='utf-8') as f:
        data = json.load(f)
    data.update(changes)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f)


class TestTable:
    def test_rows(self):
        table = {row[0]: row for row in expected_table()}
        assert table['E8'] == ('E8', 'one conic and two lines intersecting it in two points', '[(11),2]',
                               'three points')
        assert table['E13'][2:] == ('[(111),1]', 'one conic')
        assert table['E19'][2:] == ('[[(21)]]', 'four lines: L, R≺R′≺R″')
        assert table['SC_GENERIC'][3] == 'one point of multiplicity four and one double point'

    def test_copy(self):
        table = expected_table()
        table.clear()
        assert len(expected_table()) == 28


class TestFixtures:
    def test_list_entries(self):
        ids = list_entries()
        assert ids[:19] == [f"E{i}" for i in range(1, 20)]
        assert ids[19:] == ['SC_GENERIC', 'SC_II', 'SC_III', 'SL_CAYLEY', 'SL_EXAMPLE', 'SL_GENERIC']

    def test_every_fixture_loads(self):
        for entry_id in list_entries():
            assert load_fixture(entry_id)['id'] == entry_id

    def test_unknown_entry(self):
        with pytest.raises(FixtureInvalid):
            load_fixture('E99')
        with pytest.raises(FixtureInvalid):
            build_entry('NOPE')

    def test_mismatched_id(self, tmp_fixtures):
        _rewrite(tmp_fixtures, 'E1', id='E2')
        with pytest.raises(FixtureInvalid):
            load_fixture('E1')

    def test_unknown_kind(self, tmp_fixtures):
        _rewrite(tmp_fixtures, 'E1', kind='quintic')
        with pytest.raises(FixtureInvalid):
            load_fixture('E1')

    def test_symbol_against_table(self, tmp_fixtures):
        _rewrite(tmp_fixtures, 'E4', expected={'dim': 8, 'plane_degree': 7, 'symbol': '[4]',
                                               'singularities': 'two points'})
        with pytest.raises(FixtureInvalid):
            load_fixture('E4')

    def test_broken_json(self, tmp_fixtures):
        with open(os.path.join(tmp_fixtures, 'entries', 'E3.json'), 'w', encoding='utf-8') as f:
            f.write('{"id": ')
        with pytest.raises(FixtureInvalid):
            load_fixture('E3')

    def test_missing_directory(self, tmp_path, monkeypatch):
        monkeypatch.setattr(Config, 'FIXTURES_DIR', str(tmp_path / 'absent'))
        with pytest.raises(FixtureInvalid):
            list_entries()


class TestBuild:
    def test_unbuilt(self):
        with pytest.raises(EntryUnbuilt):
            build_entry('E14')

    @pytest.mark.parametrize("entry_id", SURFACES)
    def test_surfaces(self, entry_id):
        entry, X, sigma = build_entry(entry_id)
        assert X is None
        assert compose(entry.V, sigma.forms).is_zero()
        assert entry.to_json()['id'] == entry_id

    def test_wrong_parametrization(self, tmp_fixtures):
        _rewrite(tmp_fixtures, 'SC_GENERIC', phi_V=["x0^2", "x1*x2", "x0*x2", "x0*x1"])
        with pytest.raises(FixtureInvalid):
            build_entry('SC_GENERIC')

    def test_point_off_the_pencil(self, tmp_fixtures):
        _rewrite(tmp_fixtures, 'E1', p=[0, 0, 0, 0])
        with pytest.raises(FixtureInvalid):
            build_entry('E1')

    @pytest.mark.slow
    @pytest.mark.parametrize("entry_id", ['E1', 'E10', 'E15'])
    def test_dimension(self, entry_id):
        entry, X, sigma = build_entry(entry_id)
        assert X.dim == 8
        assert X.check_conditions()
        assert sigma.degree == 5
        assert entry.to_json()['degree'] == 5

    @pytest.mark.slow
    @pytest.mark.parametrize("entry_id, chain", [('SC_II', [4, 4]), ('SC_III', [4, 4, 4])])
    def test_steiner_variants(self, entry_id, chain):
        entry, X, sigma = build_entry(entry_id)
        assert X.dim == 8
        assert X.check_conditions()
        assert sigma.degree == 9
        described = [c for c in entry.to_json()['conditions'] if c['type'] == 'InfinitelyNearChain']
        assert [c['m'] for c in described] == [chain]
        assert ('arc' in described[0]) == (len(chain) == 3)

    @pytest.mark.slow
    def test_swapped_pencil(self, tmp_fixtures):
        original, _, _ = build_entry('E1')
        path = os.path.join(tmp_fixtures, 'pencils', 'E1.json')
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
        data['F1'], data['F2'] = data['F2'], data['F1']
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f)
        swapped, X, _ = build_entry('E1')
        assert X.dim == 8
        assert swapped.V == original.V


class TestReport:
    def test_run_records_exceptions(self):
        report = VerificationReport('E1', 'quadric', [10007], 3, 1)
        result = report.run('boom', lambda: 1 // 0)
        assert result['passed'] is False
        assert result['error'].startswith('ZeroDivisionError')
        assert report.verdict == 'fail'
        assert report.check('boom') is not None
        assert report.check('other') is None

    def test_run_passes(self):
        report = VerificationReport('E1', 'quadric', [10007], 3, 1)
        report.run('ok', lambda: {'passed': True, 'value': 3}, 'hand count')
        assert report.checks == [{'name': 'ok', 'passed': True, 'value': 3, 'provenance': 'hand count'}]
        assert report.verdict == 'pass'
        assert 'timings' not in report.to_json()
        assert 'ok' in report.to_json(include_timings=True)['timings']

    def test_unbuilt_entry(self, quick):
        report = verify_entry('E14', quick)
        assert report.verdict == 'unbuilt'
        doc = report.to_json()
        assert doc['kind'] == 'unbuilt'
        assert 'moving vertex' in doc['note']
        assert doc['checks'] == []

    def test_aggregate_matches_schema(self, quick):
        reports = [verify_entry('SL_CAYLEY', quick), verify_entry('E14', quick)]
        doc = aggregate_report(reports, quick)
        with open(os.path.join(Config.FIXTURES_DIR, 'report.schema.json'), encoding='utf-8') as f:
            schema = json.load(f)
        assert set(schema['required']) <= set(doc)
        assert set(schema['properties']['config']['required']) <= set(doc['config'])
        entry_schema = schema['properties']['entries']['items']
        for entry in doc['entries']:
            assert set(entry_schema['required']) <= set(entry)
            assert entry['verdict'] in entry_schema['properties']['verdict']['enum']
            assert entry['kind'] in entry_schema['properties']['kind']['enum']
            for check in entry['checks']:
                assert isinstance(check['passed'], bool)
        assert doc['config']['entries'] == ['E14', 'SL_CAYLEY']
        assert doc['verdict'] == 'pass'
        assert doc['failed'] == []

    def test_report_is_deterministic(self, quick, tmp_path):
        paths = []
        for k in range(2):
            doc = aggregate_report([verify_entry('SL_CAYLEY', quick), verify_entry('E14', quick)], quick)
            path = tmp_path / f'report{k}.json'
            write_report(doc, str(path))
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert paths[0].read_bytes().endswith(b'\n')


class TestSurfacePipeline:
    @pytest.mark.parametrize("entry_id", SURFACES)
    def test_exact_checks(self, entry_id, quick):
        report = verify_entry(entry_id, quick)
        names = [c['name'] for c in report.checks]
        assert names == ['parametrization', 'implicit_equation', 'singular_point_0', 'no_quadric', 'double_line']
        assert report.verdict == 'pass', report.checks

    def test_cayley_line_infinitely_near(self, quick):
        check = verify_entry('SL_CAYLEY', quick).check('double_line')
        assert check['components'] == [[0, 1, 1], [1, 1, 1]]

    @pytest.mark.slow
    @pytest.mark.parametrize("entry_id", SURFACES)
    def test_oracles(self, entry_id, full):
        report = verify_entry(entry_id, full)
        assert report.check('surface_degree')['passed']
        assert report.check('fiber_count')['passed']
        assert report.verdict == 'pass', report.checks


@pytest.mark.slow
class TestThreefoldPipeline:
    @pytest.mark.parametrize("entry_id", ['E1', 'E2', 'E3', 'E11', 'E15', 'SL_GENERIC', 'SL_EXAMPLE',
                                          'SC_GENERIC', 'SC_II', 'SC_III'])
    def test_verdict(self, entry_id, full):
        report = verify_entry(entry_id, full)
        assert report.verdict == 'pass', [c for c in report.checks if not c['passed']]
        assert report.check('dimension')['value'] == 8
        assert report.check('fixed_divisor')['residuals_free']

    def test_quadric_checks(self, full):
        report = verify_entry('E1', full)
        names = [c['name'] for c in report.checks]
        assert names == ['dimension', 'fixed_divisor', 'contraction_point', 'round_trip', 'component_image_0',
                         'component_image_1', 'component_image_2', 'plane_degree', 'segre_symbol',
                         'dejonquieres', 'transported_system', 'explicit_span']
        assert report.check('round_trip')['deg_G'] == 4
        assert report.check('plane_degree')['oracle'] == {'10007': 7, '10009': 7}

    def test_node_tangent_cone(self, quick):
        report = verify_entry('E2', quick)
        point = report.check('singular_point_0')
        assert point['tangent_cone_rank'] == 4
        assert point['passed']

    def test_plane_component(self, quick):
        point = verify_entry('E11', quick).check('singular_point_0')
        assert point['plane_component'] is True
        assert point['tangent_cone_rank'] == 2

    def test_steiner_quadruple_point(self, quick):
        point = verify_entry('SC_GENERIC', quick).check('singular_point_0')
        assert point['veronese_rank'] == 6
        assert point['m'] == 6

    def test_steiner_quadruple_point_oracle(self, full):
        point = verify_entry('SC_GENERIC', full).check('singular_point_0')
        assert point['multiplicity'] == {'10007': 4, '10009': 4}
        assert point['passed']

    def test_scroll_singular_points(self, full):
        report = verify_entry('SL_EXAMPLE', full)
        assert report.check('singular_point_0')['multiplicity'] == {'10007': 3, '10009': 3}
        assert report.check('singular_point_1')['multiplicity'] == {'10007': 2, '10009': 2}

    def test_point_and_line_images(self, quick):
        report = verify_entry('E1', quick)
        assert report.check('component_image_0')['span'] == 4
        assert [report.check(f"component_image_{i}")['span'] for i in (1, 2)] == [2, 2]

    @pytest.mark.parametrize("entry_id,spans", [
        ('E8', [5, 5, 7]),
        ('SC_GENERIC', [5, 5, 5]),
        ('SC_II', [5, 2]),
        ('SC_III', [2]),
    ])
    def test_component_images(self, entry_id, spans, quick):
        report = verify_entry(entry_id, quick)
        checks = [c for c in report.checks if c['name'].startswith('component_image_')]
        assert [c['span'] for c in checks][-len(spans):] == spans
        assert all(c['passed'] for c in checks), checks

    def test_double_line_image_misses_x(self, quick):
        last = verify_entry('SC_III', quick).check('component_image_0')
        assert last['through_x'] is False

    def test_quartic_pencils(self, quick):
        report = verify_entry('SC_GENERIC', quick)
        for i in range(3):
            check = report.check(f"surface_pencil_{i}")
            assert (check['dim'], check['contains_V'], check['span']) == (2, True, 5)

    @pytest.mark.parametrize("entry_id", ['E5', 'E8'])
    def test_cremona_checks_without_oracles(self, entry_id, quick):
        report = verify_entry(entry_id, quick)
        assert report.check('dejonquieres')['passed']
        assert report.check('transported_system')['passed']
        assert report.verdict == 'pass', [c for c in report.checks if not c['passed']]

    def test_symbol_mismatch_fails(self, quick, tmp_fixtures):
        _rewrite(tmp_fixtures, 'E10', pencil='E6.json', expected={'dim': 8, 'plane_degree': 7,
                                                                    'symbol': '[(11),(11)]',
                                                                    'singularities': 'four points'})
        with pytest.raises(FixtureInvalid):
            verify_entry('E10', quick)


class TestFixedDivisorCheck:
    def _entry(self, fixed):
        phi = [parse_poly(f"x{i}", 3) for i in range(3)] + [MultiPoly.zero(3)]
        return SimpleNamespace(phi_V=phi, fixed_divisor=parse_poly(fixed, 3))

    def test_constant_residuals(self, quick):
        X = LinearSystem(2, [parse_poly("x0^2", 4), parse_poly("x0^2 + x1*x3", 4)])
        state = {}
        result = _check_fixed_divisor(self._entry("x0^2"), X, state, quick)
        assert result['passed']
        assert result['residuals_free']
        assert result['residual_degrees'] == [0, 0]

    def test_residuals_with_base_point(self, quick):
        # the plane x3 = 0 lies in the base locus: every residual vanishes there
        X = LinearSystem(2, [parse_poly("x0*x3", 4), parse_poly("x1*x3", 4)])
        result = _check_fixed_divisor(self._entry("x0"), X, {}, quick)
        assert not result['residuals_free']
        assert not result['passed']


@pytest.mark.slow
class TestWholeCatalog:
    @pytest.mark.parametrize("entry_id", BUILT)
    def test_every_built_entry_passes(self, entry_id, full):
        report = verify_entry(entry_id, full)
        assert report.verdict == 'pass', [c for c in report.checks if not c['passed']]
