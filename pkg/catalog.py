"""
Catalog Module
Named threefolds with one apparent double point: fixtures, construction,
the verification pipeline and the reference tables
"""

import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from config import Config
from exactalg import MultiPoly, OADPError, ParseError, compose, format_poly, nullspace, parse_poly
from linsys import (
    BaseCondition, CIPowerCurve, InfinitelyNearChain, InfinitelyNearCurveMult, LinearSystem, PointMult,
    RationalCurveMult, build_system, image_curve, image_degree_formula, implicit_equation,
    line_param, lines_through, projection_inverse, proportional_ratios, span_contains, span_equal,
    residuals_free_at, tangent_plane, verify_fixed_divisor,
)
from pencils import SymmetricPencil, conic_section_symbol, quadric_matrix, segre_symbol
from ratmaps import (
    RationalMap, contracted_image_point, dejonquieres_inverse, dejonquieres_system, exceptional_components,
    exceptional_image, fp_degree_of_image_surface, fp_fiber_count, fp_multiplicity_at, image_span,
    image_spans_point, leading_form_subsystem, leading_forms, quadric_relation, restrict_to_plane,
    restricted_span, sample_points, tangent_cone_rank, tangent_space_at_contraction, tangential_projection,
    transported_system_matches, veronese_witness, verify_linear_roundtrip,
)

logger = logging.getLogger(__name__)

REPORT_VERSION = 1
KINDS = ('quadric', 'cone', 'scroll', 'steiner', 'surface', 'unbuilt')


class FixtureInvalid(OADPError):
    pass


class EntryUnbuilt(OADPError):
    pass


# (id, configuration, symbol, singularities of X)
EXPECTED_TABLE: List[Tuple[str, str, str, str]] = [
    ('E1', 'smooth quartic', '[1,1,1,1]', 'none'),
    ('E2', 'nodal quartic', '[2,1,1]', 'one point'),
    ('E3', 'cuspidal quartic', '[3,1]', 'one point'),
    ('E4', 'twisted cubic and a transversal line', '[2,2]', 'two points'),
    ('E5', 'twisted cubic and a tangent line', '[4]', 'two infinitely near points'),
    ('E6', 'two transversal conics', '[(11),1,1]', 'two points'),
    ('E7', 'two tangent conics', '[(21),1]', 'two infinitely near points'),
    ('E8', 'one conic and two lines intersecting it in two points', '[(11),2]', 'three points'),
    ('E9', 'one conic and two lines intersecting it in one point', '[(31)]',
     'one point and three infinitely near to it'),
    ('E10', 'four lines', '[(11),(11)]', 'four points'),
    ('E11', 'one double and two simple lines', '[(22)]', 'one line'),
    ('E12', 'two double lines', '[(211)]', 'two lines'),
    ('E13', 'one double conic', '[(111),1]', 'one conic'),
    ('E14', 'a double line and a conic', '--', 'one conic'),
    ('E15', 'four lines', '[[1,1,1]]', 'one line'),
    ('E16', 'one double and two simple lines', '[[2,1]]', 'two lines'),
    ('E17', 'two double lines', '[[(11),1]]', 'three lines'),
    ('E18', 'one triple and one simple lines', '[[3]]', 'three lines: L, R≺R′'),
    ('E19', 'one line with multiplicity four', '[[(21)]]', 'four lines: L, R≺R′≺R″'),
    ('SL_GENERIC', 'smooth rational sextic C6 with a 5-secant line s', '--', 'none'),
    ('SL_T1', 'r+ℓ1+4ℓ2', '--', 'four double lines R2≺R3≺R4≺R5 and one double point'),
    ('SL_T2', '2s+2ℓ1+2ℓ2', '--', 'one triple line and two double lines'),
    ('SL_T3', 'C2+ℓ1+ℓ2+2ℓ3', '--', 'one double line, one triple point and one double point'),
    ('SL_T4', 'C3+ℓ1+2ℓ2', '--', 'one double line R and two triple points not lying on R'),
    ('SL_T5', 'C4+ℓ1+ℓ2', '--', 'two double points'),
    ('SL_T6', 'C5+ℓ1', '--', 'two triple and one double points'),
    ('SL_T7', 'C6 with a double point in q1 and C6∩s=2q1+3q2', '--', 'one triple point'),
    ('SC_GENERIC', 'Steiner Roman surface, C6 the image of a nodal plane cubic', '--',
     'one point of multiplicity four and one double point'),
]


def expected_table() -> List[Tuple[str, str, str, str]]:
    return list(EXPECTED_TABLE)


def _table_row(row_id: str) -> Optional[Tuple[str, str, str, str]]:
    return next((r for r in EXPECTED_TABLE if r[0] == row_id), None)


def _entry_sort_key(entry_id: str):
    m = re.fullmatch(r'E(\d+)', entry_id)
    return (0, int(m.group(1)), '') if m else (1, 0, entry_id)


def list_entries() -> List[str]:
    """Entry ids present in the fixture directory"""
    folder = Config.entries_dir()
    if not os.path.isdir(folder):
        raise FixtureInvalid(f"fixture directory {folder} not found")
    ids = [name[:-5] for name in os.listdir(folder) if name.endswith('.json')]
    return sorted(ids, key=_entry_sort_key)


def _read_json(path: str) -> dict:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError:
        raise FixtureInvalid(f"fixture {path} not found")
    except json.JSONDecodeError as e:
        raise FixtureInvalid(f"fixture {path} is not valid JSON: {e}")


def load_fixture(entry_id: str) -> dict:
    data = _read_json(os.path.join(Config.entries_dir(), f"{entry_id}.json"))
    if data.get('id') != entry_id:
        raise FixtureInvalid(f"fixture {entry_id} declares id {data.get('id')!r}")
    if data.get('kind') not in KINDS:
        raise FixtureInvalid(f"fixture {entry_id} has unknown kind {data.get('kind')!r}")
    row = _table_row(data.get('table_row', entry_id))
    expected = data.get('expected', {})
    if row is not None:
        if 'symbol' in expected and expected['symbol'] != row[2]:
            raise FixtureInvalid(f"{entry_id}: fixture symbol {expected['symbol']} differs from table {row[2]}")
        if 'singularities' in expected and expected['singularities'] != row[3]:
            raise FixtureInvalid(f"{entry_id}: fixture singularities differ from the table row")
    return data


def load_pencil(name: str, regular: bool = False) -> SymmetricPencil:
    return SymmetricPencil.from_json(_read_json(os.path.join(Config.pencils_dir(), name)), regular)


@dataclass
class CatalogEntry:
    id: str
    kind: str
    configuration: str
    degree: int
    V: MultiPoly
    phi_V: List[MultiPoly]
    conditions: List[BaseCondition]
    fixed_divisor: MultiPoly
    plane_multiplicities: List[Tuple[int, int]]
    expected: dict
    p: Optional[List[Fraction]] = None
    pencil: Optional[SymmetricPencil] = None
    g2: Optional[MultiPoly] = None
    singular_points: List[dict] = field(default_factory=list)
    surface_pencils: List[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            'id': self.id,
            'kind': self.kind,
            'configuration': self.configuration,
            'degree': self.degree,
            'V': format_poly(self.V),
            'phi_V': [format_poly(f) for f in self.phi_V],
            'conditions': [c.describe() for c in self.conditions],
            'expected': self.expected,
            'provenance': self.provenance,
        }


def _poly(text, nvars: int) -> MultiPoly:
    try:
        return parse_poly(str(text), nvars)
    except ParseError as e:
        raise FixtureInvalid(f"bad polynomial {text!r}: {e}")


def _product(factors: Sequence, nvars: int, named: Dict[str, MultiPoly]) -> MultiPoly:
    out = MultiPoly.one(nvars)
    for factor, power in factors:
        base = named[factor] if factor in named else _poly(factor, nvars)
        out = out * base ** int(power)
    return out


def _pencil_generators(pencil: SymmetricPencil, p: Sequence) -> Tuple[MultiPoly, MultiPoly]:
    """(g, g2): g the member through p, g2 a generator not through p"""
    F1, F2 = pencil.forms()
    a, b = F1.evaluate(p), F2.evaluate(p)
    if a == 0 and b == 0:
        raise FixtureInvalid(f"{list(p)} lies on the base curve of the pencil")
    if a == 0:
        return F1.primitive(), F2
    g = (F1.scale(b) - F2.scale(a)).primitive()
    return g, F2 if b != 0 else F1


def _cone_vertex(V: MultiPoly) -> List:
    kernel = nullspace(quadric_matrix(V))
    if len(kernel) != 1:
        raise FixtureInvalid(f"{format_poly(V)} is not a quadric cone")
    return kernel[0]


def _condition(cond: dict, ctx: dict) -> BaseCondition:
    kind = cond.get('type')
    if kind == 'infinitely_near_chain':
        P0, P1 = cond['points']
        return InfinitelyNearChain.along_double_arc(ctx['V'], P0, P1, cond['plane'], [int(x) for x in cond['m']])
    m = int(cond.get('m', 1))
    if kind == 'point':
        return PointMult(cond['point'], m)
    if kind == 'line':
        P0, P1 = cond['points']
        return RationalCurveMult(line_param(P0, P1), m)
    if kind == 'curve':
        return RationalCurveMult([_poly(f, 2) for f in cond['param']], m)
    if kind == 'image_curve':
        return RationalCurveMult(ctx['C6'], m)
    if kind == 'tangent_line':
        P0, P1 = cond['points']
        return InfinitelyNearCurveMult.tangent_to(ctx['V'], P0, P1, m, int(cond.get('m_section', 1)))
    raise FixtureInvalid(f"unknown condition type {kind!r}")


def _quadric_entry(data: dict) -> CatalogEntry:
    pencil = load_pencil(data['pencil'], regular=data['kind'] == 'quadric')
    p = [Fraction(c) for c in data['p']]
    g, g2 = _pencil_generators(pencil, p)
    kind = data['kind']
    expected = data.get('expected', {})
    if kind == 'quadric':
        symbol = segre_symbol(pencil)
    else:
        symbol = conic_section_symbol(pencil, data['section_plane'])
    if 'symbol' in expected and symbol.display() != expected['symbol']:
        raise FixtureInvalid(f"{data['id']}: pencil has symbol {symbol.display()}, expected {expected['symbol']}")
    try:
        lines = lines_through(g, p)
    except ValueError as e:
        raise FixtureInvalid(f"{data['id']}: {e}")
    conditions: List[BaseCondition] = [CIPowerCurve(g, g2, 2), PointMult(p, 2)]
    if kind == 'quadric':
        if len(lines) != 2:
            raise FixtureInvalid(f"{data['id']}: V has {len(lines)} rational lines through p")
        conditions += [RationalCurveMult(line, 1) for line, _ in lines]
    else:
        if len(lines) != 1 or lines[0][1] != 2:
            raise FixtureInvalid(f"{data['id']}: the tangent section of the cone is not a double line")
        conditions.append(RationalCurveMult(lines[0][0], 1))
        conditions.append(InfinitelyNearCurveMult.tangent_to(g, p, _cone_vertex(g), 1, 1))
    phi = projection_inverse(g, p)
    Tp = MultiPoly.linear_form(tangent_plane(g, p))
    fixed = compose(g2, phi) ** 2 * compose(Tp, phi)
    return CatalogEntry(
        id=data['id'], kind=kind, configuration=data.get('configuration', ''), degree=5,
        V=g, phi_V=phi, conditions=conditions, fixed_divisor=fixed,
        plane_multiplicities=[tuple(x) for x in data.get('plane_multiplicities', [[2, 4], [1, 2]])],
        expected=expected, p=p, pencil=pencil, g2=g2,
        singular_points=data.get('singular_points', []), provenance=data.get('provenance', {}), data=data,
    )


def _parametrized_entry(data: dict) -> CatalogEntry:
    V = _poly(data['V'], 4)
    phi = [_poly(f, 3) for f in data['phi_V']]
    if not compose(V, phi).is_zero():
        raise FixtureInvalid(f"{data['id']}: phi_V does not parametrize V")
    ctx = {'V': V}
    named: Dict[str, MultiPoly] = {}
    if 'E_curve' in data:
        gamma = [_poly(f, 2) for f in data['E_curve']]
        ctx['C6'] = image_curve(phi, gamma)
        equations = implicit_equation(gamma, gamma[0].total_degree())
        if len(equations) != 1:
            raise FixtureInvalid(f"{data['id']}: the E-curve satisfies {len(equations)} equations")
        named['E_curve'] = equations[0]
    conditions = [_condition(cond, ctx) for cond in data['conditions']]
    fixed = _product(data['fixed_divisor'], 3, named)
    pencils = [dict(q, conditions=[_condition(c, ctx) for c in q['conditions']])
               for q in data.get('surface_pencils', [])]
    return CatalogEntry(
        id=data['id'], kind=data['kind'], configuration=data.get('configuration', ''),
        degree=int(data['degree']), V=V, phi_V=phi, conditions=conditions, fixed_divisor=fixed,
        plane_multiplicities=[tuple(x) for x in data['plane_multiplicities']],
        expected=data.get('expected', {}), p=data.get('p'),
        singular_points=data.get('singular_points', []), provenance=data.get('provenance', {}), data=data,
        surface_pencils=pencils,
    )


def _surface_entry(data: dict) -> CatalogEntry:
    phi = [_poly(f, 3) for f in data['phi_V']]
    if 'V' in data:
        V = _poly(data['V'], 4)
    else:
        equations = implicit_equation(phi, int(data['surface_degree']))
        if len(equations) != 1:
            raise FixtureInvalid(f"{data['id']}: {len(equations)} implicit equations of the given degree")
        V = equations[0].primitive()
    return CatalogEntry(
        id=data['id'], kind='surface', configuration=data.get('configuration', ''),
        degree=V.total_degree(), V=V, phi_V=phi, conditions=[], fixed_divisor=MultiPoly.one(3),
        plane_multiplicities=[], expected=data.get('expected', {}), p=data.get('p'),
        singular_points=data.get('singular_points', []), provenance=data.get('provenance', {}), data=data,
    )


def build_entry(entry_id: str) -> Tuple[CatalogEntry, Optional[LinearSystem], RationalMap]:
    """
    Construct an entry from its fixture.

    Returns:
        (entry, X, sigma); X is None for surface entries, whose map is phi_V

    Raises:
        FixtureInvalid: missing fixture or any expected-vs-computed mismatch
        EntryUnbuilt: the entry is documented but not constructed
    """
    data = load_fixture(entry_id)
    kind = data['kind']
    if kind == 'unbuilt':
        raise EntryUnbuilt(data.get('reason', f"{entry_id} is not built"))
    try:
        if kind in ('quadric', 'cone'):
            entry = _quadric_entry(data)
        elif kind in ('scroll', 'steiner'):
            entry = _parametrized_entry(data)
        else:
            entry = _surface_entry(data)
    except (KeyError, TypeError, ValueError) as e:
        raise FixtureInvalid(f"{entry_id}: malformed fixture ({type(e).__name__}: {e})")
    if kind == 'surface':
        return entry, None, RationalMap(entry.phi_V)
    X = build_system(entry.degree, entry.conditions)
    expected_dim = entry.expected.get('dim', 8)
    if X.dim != expected_dim:
        raise FixtureInvalid(f"{entry_id}: system has dimension {X.dim}, expected {expected_dim}")
    logger.info(f"built {entry_id}: degree {entry.degree}, dimension {X.dim}")
    return entry, X, RationalMap(X.basis)


# verification

def _jsonable(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    if isinstance(v, MultiPoly):
        return format_poly(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class VerificationReport:
    entry_id: str
    kind: str
    primes: List[int]
    trials: int
    seed: int
    checks: List[dict] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    status: str = 'built'
    note: str = ''
    expected: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != 'unbuilt' and all(c['passed'] for c in self.checks)

    @property
    def verdict(self) -> str:
        if self.status == 'unbuilt':
            return 'unbuilt'
        return 'pass' if self.passed else 'fail'

    def check(self, name: str) -> Optional[dict]:
        return next((c for c in self.checks if c['name'] == name), None)

    def run(self, name: str, fn, provenance: Optional[str] = None) -> dict:
        """Run one check; exceptions become failed entries"""
        start = time.perf_counter()
        try:
            result = fn()
        except Exception as e:
            logger.error(f"{self.entry_id} {name}: {type(e).__name__}: {e}")
            result = {'passed': False, 'error': f"{type(e).__name__}: {e}"}
        result = {'name': name, **result}
        if provenance:
            result['provenance'] = provenance
        self.checks.append(_jsonable(result))
        self.timings[name] = round(time.perf_counter() - start, 3)
        logger.info(f"{self.entry_id} {name}: {'pass' if result['passed'] else 'FAIL'}")
        return result

    def to_json(self, include_timings: bool = False) -> dict:
        out = {
            'id': self.entry_id,
            'kind': self.kind,
            'verdict': self.verdict,
            'checks': self.checks,
            'expected': _jsonable(self.expected),
            'oracle': {'primes': list(self.primes), 'trials': self.trials, 'seed': self.seed},
        }
        if self.note:
            out['note'] = self.note
        if include_timings:
            out['timings'] = dict(self.timings)
        return out


def _oracle_agreement(values: Dict[int, int], expected: int) -> bool:
    return bool(values) and all(v == expected for v in values.values())


def _plane_through(q: Sequence, seed: int) -> List[List]:
    return [list(q)] + sample_points(seed, 4, 2)


def _check_fixed_divisor(entry: CatalogEntry, X: LinearSystem, state: dict, config) -> dict:
    ok, residuals = verify_fixed_divisor(X, entry.phi_V, entry.fixed_divisor)
    constant = ok and all(r.total_degree() <= 0 for r in residuals)
    state['residuals'] = residuals
    free = ok and residuals_free_at(residuals, sample_points(config.seed, 3, Config.FREENESS_SAMPLES))
    return {'passed': constant and free, 'fixed_divisor': entry.fixed_divisor,
            'residual_degrees': [r.total_degree() for r in residuals], 'residuals_free': free}


def _check_contraction(state: dict) -> dict:
    x = proportional_ratios(state['residuals'])
    state['x'] = x
    return {'passed': True, 'x': x}


def _check_round_trip(entry: CatalogEntry, sigma: RationalMap, config, state: dict) -> dict:
    samples = sample_points(config.seed, 3, Config.ROUNDTRIP_SAMPLES)
    tangent = tangent_space_at_contraction(sigma, entry.V, entry.phi_V, state['x'], samples)
    pi = tangential_projection(sigma, tangent=tangent)
    ok, G, M = verify_linear_roundtrip(sigma, pi, sample_points(config.seed + 1, 4, Config.ROUNDTRIP_SAMPLES))
    deg_G = G.total_degree() if G is not None else None
    return {'passed': ok and deg_G == entry.degree - 1, 'deg_G': deg_G,
            'M': M.entries if M is not None else None, 'seed': config.seed}


def _check_plane_degree(entry: CatalogEntry, X: LinearSystem, config) -> dict:
    expected = entry.expected.get('plane_degree')
    formula = image_degree_formula(entry.degree, entry.plane_multiplicities)
    result = {'expected': expected, 'formula': formula}
    passed = formula == expected
    if config.oracles:
        plane = sample_points(config.seed + 2, 4, 3)
        values = {}
        for p in config.primes:
            forms = restrict_to_plane(X.basis, plane, p)
            values[p] = fp_degree_of_image_surface(forms, p, config.trials, config.seed)
        result['oracle'] = {str(p): v for p, v in values.items()}
        result['plane'] = plane
        passed = passed and _oracle_agreement(values, expected)
    result['passed'] = passed
    return result


def _check_symbol(entry: CatalogEntry) -> dict:
    if entry.kind == 'quadric':
        symbol = segre_symbol(entry.pencil)
    else:
        symbol = conic_section_symbol(entry.pencil, entry.data['section_plane'])
    expected = entry.expected.get('symbol')
    return {'passed': symbol.display() == expected, 'symbol': symbol.display(), 'expected': expected,
            'detail': symbol.to_json()}


def _check_singular_point(entry: CatalogEntry, X: LinearSystem, sp: dict, config) -> dict:
    q = sp['q']
    m, _ = leading_forms(X.basis, q)
    x_q = contracted_image_point(X, q)
    result = {'q': q, 'm': m, 'x_q': x_q}
    passed = True
    if any(k in sp for k in ('tangent_cone_rank', 'plane_component', 'veronese')):
        _, lead_V = leading_forms([entry.V], q)
        sub, fixed = leading_form_subsystem(X, q, m + 1, lead_V)
        result['fixed_part'] = fixed
        result['moving'] = len(sub.forms)
        if 'tangent_cone_rank' in sp:
            rank_value = tangent_cone_rank(sub)
            result['tangent_cone_rank'] = rank_value
            passed = passed and rank_value == sp['tangent_cone_rank']
        if sp.get('plane_component'):
            # a hyperplane component forces a reducible tangent cone: a pair of planes
            linear = sub.degree == 1 and len(sub.forms) == 3
            result['plane_component'] = linear
            result['tangent_cone_rank'] = 2 if linear else None
            passed = passed and linear
        if sp.get('veronese'):
            _, witness_rank = veronese_witness(sub.forms)
            result['veronese_rank'] = witness_rank
            passed = passed and witness_rank == 6 and len(sub.forms) == 6 and fixed.total_degree() == 3
    if 'multiplicity' in sp and config.oracles:
        plane = _plane_through(q, config.seed + 3)
        values = {}
        for p in config.primes:
            forms = restrict_to_plane(X.basis, plane, p)
            values[p] = fp_multiplicity_at(forms, x_q, p, config.trials, config.seed)
        result['multiplicity'] = {str(p): v for p, v in values.items()}
        result['expected_multiplicity'] = sp['multiplicity']
        passed = passed and _oracle_agreement(values, sp['multiplicity'])
    result['passed'] = passed
    return result


def _check_dejonquieres(entry: CatalogEntry, config, state: dict) -> dict:
    data = dejonquieres_inverse(entry.V, entry.g2, entry.p, sample_points(config.seed + 4, 4, Config.ROUNDTRIP_SAMPLES))
    state['cremona'] = data
    return {'passed': data.inverse_ok, 'p_image': data.p_image,
            'image_pencil': list(data.image_pencil)}


def _check_transported(X: LinearSystem, config, state: dict) -> dict:
    data = state['cremona']
    ok = transported_system_matches(X, data.f, data.image_pencil,
                                    sample_points(config.seed + 5, 4, Config.TRANSPORT_SAMPLES))
    return {'passed': ok}


def _check_explicit_span(entry: CatalogEntry, X: LinearSystem) -> dict:
    g, g2, p = entry.V, entry.g2, entry.p
    x = [MultiPoly.variable(i, 4) for i in range(4)]
    through_p = [MultiPoly.linear_form(v) for v in nullspace([list(p)])]
    L = dejonquieres_system(g, g2, p)
    explicit = [g * g * xi for xi in x] + [g * g2 * P for P in through_p] + [g2 * h for h in L.basis]
    return {'passed': span_equal(explicit, X.basis), 'generators': len(explicit)}


def _component_images(entry: CatalogEntry) -> List[dict]:
    """Base components whose exceptional divisors have a known image, derived ones first"""
    out = []
    if entry.kind in ('quadric', 'cone'):
        out.append({'point': list(entry.p), 'm': 2, 'span': 4, 'through_x': True,
                    'provenance': 'p maps to a quadric surface through x'})
    if entry.kind == 'quadric':
        for line, _ in lines_through(entry.V, entry.p):
            out.append({'param': line, 'm': 1, 'span': 2, 'through_x': True,
                        'provenance': 'a line of V through p maps to a line through x'})
    return out + list(entry.data.get('component_images', []))


def _check_component_image(X: LinearSystem, comp: dict, state: dict) -> dict:
    if 'point' in comp:
        m, forms = leading_forms(X.basis, comp['point'])
        center = comp['point']
    else:
        if 'param' in comp:
            param = comp['param']
        elif 'line' in comp:
            param = line_param(*comp['line'])
        else:
            param = [_poly(f, 2) for f in comp['curve']]
        m = comp['m']
        forms = exceptional_image(X.basis, param, m)
        center = [format_poly(f) for f in param]
    span = image_span(forms)
    through = image_spans_point(forms, state['x'])
    return {'passed': m == comp['m'] and span == comp['span'] and through == comp['through_x'],
            'center': center, 'm': m, 'span': span, 'expected_span': comp['span'], 'through_x': through}


def _check_double_line(entry: CatalogEntry, spec: dict) -> dict:
    components = exceptional_components(entry.V, line_param(*spec['points']), 2)
    expected = sorted(tuple(c) for c in spec['components'])
    return {'passed': components == expected, 'components': [list(c) for c in components],
            'expected': [list(c) for c in expected]}


def _check_surface_pencil(entry: CatalogEntry, X: LinearSystem, spec: dict) -> dict:
    Q = build_system(int(spec['degree']), spec['conditions'])
    contains = Q.contains(entry.V)
    result = {'passed': False, 'dim': Q.dim, 'expected': spec['dim'], 'contains_V': contains}
    if Q.dim != spec['dim'] or not contains:
        return result
    # a member other than V
    S = next(b for b in Q.basis if not span_contains([entry.V], b)) + entry.V.scale(3)
    span = restricted_span(X.basis, S)
    result.update(passed=span == spec['span'], span=span, expected_span=spec['span'])
    return result


def _verify_threefold(report: VerificationReport, entry: CatalogEntry, X: LinearSystem,
                      sigma: RationalMap, config) -> None:
    prov = entry.provenance
    state: dict = {}
    report.run('dimension', lambda: {'passed': X.dim == entry.expected.get('dim', 8), 'value': X.dim,
                                     'expected': entry.expected.get('dim', 8)}, prov.get('dim'))
    fixed = report.run('fixed_divisor', lambda: _check_fixed_divisor(entry, X, state, config))
    if fixed['passed']:
        report.run('contraction_point', lambda: _check_contraction(state))
    if 'x' in state:
        report.run('round_trip', lambda: _check_round_trip(entry, sigma, config, state))
        for i, comp in enumerate(_component_images(entry)):
            report.run(f"component_image_{i}", lambda comp=comp: _check_component_image(X, comp, state),
                       comp.get('provenance'))
    report.run('plane_degree', lambda: _check_plane_degree(entry, X, config), prov.get('plane_degree'))
    if entry.kind in ('quadric', 'cone'):
        report.run('segre_symbol', lambda: _check_symbol(entry), prov.get('symbol'))
    for i, sp in enumerate(entry.singular_points):
        report.run(f"singular_point_{i}", lambda sp=sp: _check_singular_point(entry, X, sp, config),
                   sp.get('provenance'))
    if 'double_line' in entry.data:
        report.run('double_line', lambda: _check_double_line(entry, entry.data['double_line']),
                   entry.data['double_line'].get('provenance'))
    for i, spec in enumerate(entry.surface_pencils):
        report.run(f"surface_pencil_{i}", lambda spec=spec: _check_surface_pencil(entry, X, spec),
                   spec.get('provenance'))
    if entry.kind == 'quadric':
        dj = report.run('dejonquieres', lambda: _check_dejonquieres(entry, config, state))
        if dj['passed']:
            report.run('transported_system', lambda: _check_transported(X, config, state))
        report.run('explicit_span', lambda: _check_explicit_span(entry, X))


def _verify_surface(report: VerificationReport, entry: CatalogEntry, config) -> None:
    V, phi = entry.V, entry.phi_V
    report.run('parametrization', lambda: {'passed': compose(V, phi).is_zero(), 'V': V})

    def implicit_check():
        equations = implicit_equation(phi, V.total_degree())
        return {'passed': len(equations) == 1 and span_equal(equations, [V]), 'count': len(equations)}

    report.run('implicit_equation', implicit_check)
    for i, sp in enumerate(entry.singular_points):
        def point_check(sp=sp):
            m, _ = leading_forms([V], sp['q'])
            return {'passed': m == sp['multiplicity'], 'q': sp['q'], 'value': m, 'expected': sp['multiplicity']}
        report.run(f"singular_point_{i}", point_check, sp.get('provenance'))
    report.run('no_quadric', lambda: {'passed': quadric_relation(phi) == []})
    if 'double_line' in entry.data:
        report.run('double_line', lambda: _check_double_line(entry, entry.data['double_line']),
                   entry.data['double_line'].get('provenance'))
    if not config.oracles:
        return

    def degree_check():
        values = {p: fp_degree_of_image_surface(phi, p, config.trials, config.seed) for p in config.primes}
        return {'passed': _oracle_agreement(values, V.total_degree()),
                'oracle': {str(p): v for p, v in values.items()}, 'expected': V.total_degree()}

    def fiber_check():
        values = {p: fp_fiber_count(phi, p, config.trials, config.seed) for p in config.primes}
        return {'passed': _oracle_agreement(values, 1), 'oracle': {str(p): v for p, v in values.items()}}

    report.run('surface_degree', degree_check)
    report.run('fiber_count', fiber_check)


def verify_entry(entry_id: str, config) -> VerificationReport:
    """
    Run the verification pipeline of one entry.

    Args:
        entry_id: catalog id
        config: run configuration (primes, trials, seed, oracles)

    Returns:
        VerificationReport; check failures are report entries

    Raises:
        FixtureInvalid: unknown id or inconsistent fixture
    """
    report = VerificationReport(entry_id, '', list(config.primes), config.trials, config.seed)
    start = time.perf_counter()
    try:
        entry, X, sigma = build_entry(entry_id)
    except EntryUnbuilt as e:
        report.kind = 'unbuilt'
        report.status = 'unbuilt'
        report.note = str(e)
        return report
    report.kind = entry.kind
    report.expected = entry.expected
    report.timings['build'] = round(time.perf_counter() - start, 3)
    if entry.kind == 'surface':
        _verify_surface(report, entry, config)
    else:
        _verify_threefold(report, entry, X, sigma, config)
    logger.info(f"{entry_id}: {report.verdict}")
    return report


def aggregate_report(reports: Sequence[VerificationReport], config, include_timings: bool = False) -> dict:
    ordered = sorted(reports, key=lambda r: _entry_sort_key(r.entry_id))
    failed = [r.entry_id for r in ordered if r.verdict == 'fail']
    return {
        'version': REPORT_VERSION,
        'config': {'primes': list(config.primes), 'trials': config.trials, 'seed': config.seed,
                   'oracles': config.oracles, 'entries': [r.entry_id for r in ordered]},
        'entries': [r.to_json(include_timings) for r in ordered],
        'failed': failed,
        'verdict': 'fail' if failed else 'pass',
    }


def write_report(doc: dict, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        f.write(json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False))
        f.write('\n')
    logger.info(f"report written to {path}")
