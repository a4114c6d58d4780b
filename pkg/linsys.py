"""
Linear Systems Module
Surfaces in P^3 with assigned base loci: conditions, systems, pullbacks,
blow-up charts and degree arithmetic
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial, gcd
from typing import Dict, List, Optional, Sequence, Tuple

from exactalg import (
    QQ, ArityMismatch, MultiPoly, NotDivisible, OADPError, RatMatrix, binary_factor, binary_gcd,
    compose, format_poly, monomials, nullspace, partial, rank, row_basis,
)

logger = logging.getLogger(__name__)

NVARS = 4


class EmptySystem(OADPError):
    pass


class ConditionDegreeOverflow(OADPError):
    pass


class NotContracted(OADPError):
    pass


class NegativeDegree(OADPError):
    pass


def _falling(e: int, a: int) -> int:
    return factorial(e) // factorial(e - a)


def _point(coords: Sequence) -> Tuple[Fraction, ...]:
    pt = tuple(Fraction(c) for c in coords)
    if not any(pt):
        raise ValueError("the zero vector is not a projective point")
    return pt


def line_param(P0: Sequence, P1: Sequence) -> List[MultiPoly]:
    """Binary linear forms a*P0 + b*P1"""
    return [MultiPoly({(1, 0): P0[i], (0, 1): P1[i]}, 2, QQ) for i in range(len(P0))]


def complement_basis(vectors: Sequence[Sequence], n: int = NVARS) -> List[List[int]]:
    """Standard basis vectors completing the given independent vectors to a basis"""
    chosen: List[List] = [list(v) for v in vectors]
    extra = []
    for i in range(n):
        e = [1 if j == i else 0 for j in range(n)]
        if rank(chosen + [e]) > len(chosen):
            chosen.append(e)
            extra.append(e)
        if len(chosen) == n:
            break
    return extra


def linear_images(vectors: Sequence[Sequence], nvars: int) -> List[MultiPoly]:
    """Coordinates x_i = sum_k u_k * vectors[k][i] as linear forms in the u_k"""
    n = len(vectors[0])
    out = []
    for i in range(n):
        terms = {}
        for k, v in enumerate(vectors):
            exp = [0] * nvars
            exp[k] = 1
            terms[tuple(exp)] = v[i]
        out.append(MultiPoly(terms, nvars, QQ))
    return out


class _PowerCache:
    """Products prod(images[i]^e_i) with cached powers"""

    def __init__(self, images: Sequence[MultiPoly]):
        self.images = list(images)
        self.powers: Dict[Tuple[int, int], MultiPoly] = {}
        self.products: Dict[Tuple[int, ...], MultiPoly] = {}

    def power(self, i: int, k: int) -> MultiPoly:
        key = (i, k)
        if key not in self.powers:
            img = self.images[i]
            self.powers[key] = MultiPoly.one(img.nvars, img.ring) if k == 0 else self.power(i, k - 1) * img
        return self.powers[key]

    def product(self, exp: Tuple[int, ...]) -> MultiPoly:
        if exp not in self.products:
            nz = [i for i, k in enumerate(exp) if k]
            if not nz:
                img = self.images[0]
                out = MultiPoly.one(img.nvars, img.ring)
            else:
                last = nz[-1]
                rest = list(exp)
                rest[last] = 0
                out = self.product(tuple(rest)) * self.power(last, exp[last]) if len(nz) > 1 else self.power(last, exp[last])
            self.products[exp] = out
        return self.products[exp]


def compose_all(forms: Sequence[MultiPoly], images: Sequence[MultiPoly]) -> List[MultiPoly]:
    """compose() for several forms sharing one cache of monomial images"""
    if not images:
        raise ValueError("no images to compose with")
    cache = _PowerCache(images)
    ring = images[0].ring
    out = []
    for F in forms:
        if F.nvars != len(images):
            raise ArityMismatch(f"{len(images)} images for {F.nvars} variables")
        acc: Dict[Tuple[int, ...], object] = {}
        for e, c in F.terms.items():
            for se, sc in cache.product(e).terms.items():
                acc[se] = ring.add(acc.get(se, 0), ring.mul(ring.coerce(c), sc))
        out.append(MultiPoly(acc, images[0].nvars, ring))
    return out


class BaseCondition:
    """Linear condition on degree-d forms in x0..x3"""

    cost = 1

    def rows(self, d: int, columns: List[Tuple[int, ...]], alive: set) -> List[Dict[int, Fraction]]:
        return []

    def holds(self, F: MultiPoly) -> bool:
        raise NotImplementedError

    def check_degree(self, d: int) -> None:
        if self.m > d + 1:
            raise ConditionDegreeOverflow(f"multiplicity {self.m} exceeds degree {d} + 1")

    def describe(self) -> dict:
        return {'type': type(self).__name__, 'm': self.m}


@dataclass
class PointMult(BaseCondition):
    """All partials of order < m vanish at point (order m-1 suffices by Euler)"""
    point: Tuple
    m: int
    cost = 0

    def __post_init__(self):
        self.point = _point(self.point)

    def rows(self, d, columns, alive):
        self.check_degree(d)
        out = []
        p = self.point
        pw = [[c ** k for k in range(d + 1)] for c in p]
        for alpha in monomials(NVARS, self.m - 1):
            row = {}
            for j in alive:
                e = columns[j]
                if any(x < a for x, a in zip(e, alpha)):
                    continue
                val = Fraction(1)
                for i in range(NVARS):
                    val *= _falling(e[i], alpha[i]) * pw[i][e[i] - alpha[i]]
                    if not val:
                        break
                if val:
                    row[j] = val
            if row:
                out.append(row)
        return out

    def holds(self, F):
        return all(partial(F, alpha).evaluate(self.point) == 0 for alpha in monomials(NVARS, self.m - 1))

    def describe(self):
        return {'type': 'PointMult', 'point': [str(c) for c in self.point], 'm': self.m}


@dataclass
class RationalCurveMult(BaseCondition):
    """Every order-(m-1) partial pulls back to zero along the parametrized curve"""
    param: List[MultiPoly]
    m: int
    cost = 1

    def __post_init__(self):
        if len(self.param) != NVARS or any(f.nvars != 2 for f in self.param):
            raise ValueError("a curve parametrization is four binary forms")
        degs = {f.total_degree() for f in self.param if not f.is_zero()}
        if len(degs) != 1 or not all(f.is_homogeneous() for f in self.param):
            raise ValueError("curve parametrization must be equidegree binary forms")
        if binary_gcd(self.param).total_degree() > 0:
            raise ValueError("curve parametrization components share a factor")

    def rows(self, d, columns, alive):
        self.check_degree(d)
        cache = _PowerCache(self.param)
        out = []
        for alpha in monomials(NVARS, self.m - 1):
            rowmap: Dict[Tuple[int, ...], Dict[int, Fraction]] = {}
            for j in alive:
                e = columns[j]
                if any(x < a for x, a in zip(e, alpha)):
                    continue
                coef = 1
                for x, a in zip(e, alpha):
                    coef *= _falling(x, a)
                prod = cache.product(tuple(x - a for x, a in zip(e, alpha)))
                for bexp, c in prod.terms.items():
                    rowmap.setdefault(bexp, {})[j] = coef * c
            out.extend(r for r in rowmap.values() if r)
        return out

    def holds(self, F):
        return all(compose(partial(F, alpha), self.param).is_zero() for alpha in monomials(NVARS, self.m - 1))

    def describe(self):
        return {'type': 'RationalCurveMult', 'param': [format_poly(f) for f in self.param], 'm': self.m}


@dataclass
class CIPowerCurve(BaseCondition):
    """Membership in the m-th power of the ideal (g, g2); imposed as an ambient span"""
    g: MultiPoly
    g2: MultiPoly
    m: int
    cost = 0

    def __post_init__(self):
        if self.g.total_degree() != 2 or self.g2.total_degree() != 2:
            raise ValueError("complete-intersection generators must be quadrics")
        cols = monomials(NVARS, 2)
        if rank([[self.g.coefficient(e) for e in cols], [self.g2.coefficient(e) for e in cols]]) < 2:
            raise ValueError("complete-intersection generators are proportional")

    def check_degree(self, d):
        if 2 * self.m > d:
            raise ConditionDegreeOverflow(f"power {self.m} of quadric ideal has no forms of degree {d}")

    def ambient_span(self, d: int) -> List[MultiPoly]:
        self.check_degree(d)
        out = []
        rest = monomials(NVARS, d - 2 * self.m)
        for i in range(self.m, -1, -1):
            head = self.g ** i * self.g2 ** (self.m - i)
            for e in rest:
                out.append(head * MultiPoly.monomial(e))
        return out

    def holds(self, F):
        d = F.total_degree()
        span = self.ambient_span(d)
        return span_contains(span, F)

    def describe(self):
        return {'type': 'CIPowerCurve', 'g': format_poly(self.g), 'g2': format_poly(self.g2), 'm': self.m}


class ChartCondition(BaseCondition):
    """Condition read off a blow-up chart: vanishing on a locus of an exceptional divisor"""
    cost = 2


@dataclass
class InfinitelyNearCurveMult(ChartCondition):
    """
    Multiplicity along a section of the exceptional divisor over a line.

    The line is a*P0 + b*P1, the normal plane is spanned by N2 and N3, and the
    section is the normal direction (w2(a, b) : w3(a, b)). Forms must have
    multiplicity m along the line and their strict transform multiplicity
    m_section along the section.
    """
    P0: Tuple
    P1: Tuple
    N2: Tuple
    N3: Tuple
    w2: MultiPoly
    w3: MultiPoly
    m: int
    m_section: int

    def __post_init__(self):
        self.P0, self.P1, self.N2, self.N3 = (_point(v) for v in (self.P0, self.P1, self.N2, self.N3))
        if rank([self.P0, self.P1, self.N2, self.N3]) < NVARS:
            raise ValueError("line and normal vectors must span the space")

    @classmethod
    def tangent_to(cls, V: MultiPoly, P0, P1, m: int, m_section: int) -> 'InfinitelyNearCurveMult':
        """Section given by the tangent direction of the surface V along the line"""
        N2, N3 = complement_basis([P0, P1])
        line = line_param(P0, P1)
        grads = [compose(V.differentiate(i), line) for i in range(NVARS)]
        w2 = sum((grads[i].scale(N3[i]) for i in range(NVARS)), MultiPoly.zero(2))
        w3 = -sum((grads[i].scale(N2[i]) for i in range(NVARS)), MultiPoly.zero(2))
        common = binary_gcd([w2, w3])
        return cls(P0, P1, N2, N3, w2.exact_div(common), w3.exact_div(common), m, m_section)

    def _chart_images(self):
        vecs = [self.P0, self.P1, self.N2, self.N3]
        return linear_images(vecs, NVARS)

    def _targets(self, H: MultiPoly) -> Dict[tuple, Fraction]:
        """Coefficients that must vanish, keyed by (k, beta, binary exponent)"""
        out = {}
        subst = [MultiPoly.variable(0, 2), MultiPoly.variable(1, 2), self.w2, self.w3]
        parts: Dict[int, Dict] = {}
        for e, c in H.terms.items():
            parts.setdefault(e[2] + e[3], {})[e] = c
        for k in range(self.m, self.m + self.m_section):
            r = self.m_section - (k - self.m)
            Tk = MultiPoly(parts.get(k, {}), NVARS, QQ)
            if Tk.is_zero():
                continue
            if r - 1 > k:
                for e, c in Tk.terms.items():
                    out[(k, 'all', e)] = c
                continue
            for beta in monomials(2, r - 1):
                D = partial(Tk, (0, 0) + tuple(beta))
                for bexp, c in compose(D, subst).terms.items():
                    out[(k, tuple(beta), bexp)] = c
        return out

    def rows(self, d, columns, alive):
        self.check_degree(d)
        cache = _PowerCache(self._chart_images())
        rowmap: Dict[tuple, Dict[int, Fraction]] = {}
        for j in alive:
            H = cache.product(columns[j])
            for key, c in self._targets(H).items():
                rowmap.setdefault(key, {})[j] = c
        return [r for r in rowmap.values() if r]

    def holds(self, F):
        H = compose(F, self._chart_images())
        return not any(self._targets(H).values())

    def describe(self):
        return {'type': 'InfinitelyNearCurveMult',
                'line': [[str(c) for c in self.P0], [str(c) for c in self.P1]],
                'direction': [format_poly(self.w2), format_poly(self.w3)],
                'm': self.m, 'm_section': self.m_section}


def _chain_frame(P0: Sequence, P1: Sequence, plane: Sequence) -> Tuple[List, List]:
    """Normal vectors (N2, N3) with N2 in the plane and the plane equal to y3 = 0"""
    if any(sum(Fraction(h) * Fraction(c) for h, c in zip(plane, P)) for P in (P0, P1)):
        raise ValueError("the line does not lie in the plane")
    N2 = next((v for v in nullspace([list(plane)]) if rank([list(P0), list(P1), v]) == 3), None)
    if N2 is None:
        raise ValueError("degenerate line")
    k = next(i for i, h in enumerate(plane) if h)
    N3 = [1 if j == k else 0 for j in range(NVARS)]
    return N2, N3


@dataclass
class InfinitelyNearChain(ChartCondition):
    """
    Multiplicities along a line and the lines infinitely near to it.

    The second line is the direction of the plane through the first one; the
    third, if any, is the arc y3 = (num / den) * y2^2 over the second, in the
    frame x = a*P0 + b*P1 + y2*N2 + y3*N3 with the plane at y3 = 0.
    """
    P0: Tuple
    P1: Tuple
    plane: Tuple
    mults: List[int]
    arc: Optional[Tuple[MultiPoly, MultiPoly]] = None

    def __post_init__(self):
        self.P0, self.P1 = _point(self.P0), _point(self.P1)
        self.plane = _point(self.plane)
        self.mults = [int(m) for m in self.mults]
        if not 1 <= len(self.mults) <= 3:
            raise ValueError("chains have one to three lines")
        if len(self.mults) == 3 and self.arc is None:
            raise ValueError("a third line needs its arc")
        self.N2, self.N3 = _chain_frame(self.P0, self.P1, self.plane)

    @property
    def m(self) -> int:
        return self.mults[0]

    @classmethod
    def along_double_arc(cls, V: MultiPoly, P0, P1, plane, mults: Sequence[int]) -> 'InfinitelyNearChain':
        """Chain whose third line is the third double line of V over the plane"""
        if len(mults) < 3:
            return cls(P0, P1, plane, list(mults))
        N2, N3 = _chain_frame(P0, P1, plane)
        H = compose(V, linear_images([P0, P1, N2, N3], NVARS))
        w = {j: MultiPoly({e[:2]: c for e, c in H.terms.items() if e[2] + 2 * e[3] == 4 and e[3] == j}, 2, QQ)
             for j in range(3)}
        if w[2].is_zero() or not (w[1] * w[1] - w[0] * w[2].scale(4)).is_zero():
            raise ValueError("the surface has no third double line over the plane")
        num, den = -w[1], w[2].scale(2)
        if num.is_zero():
            den = MultiPoly.one(2)
        else:
            common = binary_gcd([num, den])
            num, den = num.exact_div(common), den.exact_div(common)
        return cls(P0, P1, plane, list(mults), (num, den))

    def _chart_images(self):
        return linear_images([self.P0, self.P1, self.N2, self.N3], NVARS)

    def _targets(self, H: MultiPoly, d: int, arc_powers: Optional[_PowerCache] = None) -> Dict[tuple, Fraction]:
        """Coefficients that must vanish, keyed by level"""
        m1 = self.mults[0]
        m12 = m1 + (self.mults[1] if len(self.mults) > 1 else 0)
        m3 = self.mults[2] if len(self.mults) > 2 else 0
        out: Dict[tuple, Fraction] = {}
        for e, c in H.terms.items():
            i, j = e[2], e[3]
            if i + j < m1:
                out[(1, e)] = c
                continue
            if len(self.mults) > 1 and i + 2 * j < m12:
                out[(2, e)] = c
                continue
            I = i + 2 * j - m12
            if I >= m3:
                continue
            for k in range(min(j, m3 - I - 1) + 1):
                for bexp, bc in arc_powers.product((j - k, d - j + k)).terms.items():
                    key = (3, I, k, (bexp[0] + e[0], bexp[1] + e[1]))
                    out[key] = out.get(key, 0) + comb(j, k) * c * bc
        return out

    def _arc_cache(self) -> Optional[_PowerCache]:
        return _PowerCache(list(self.arc)) if self.arc is not None else None

    def rows(self, d, columns, alive):
        self.check_degree(d)
        cache = _PowerCache(self._chart_images())
        arc_powers = self._arc_cache()
        rowmap: Dict[tuple, Dict[int, Fraction]] = {}
        for j in alive:
            for key, c in self._targets(cache.product(columns[j]), d, arc_powers).items():
                if c:
                    rowmap.setdefault(key, {})[j] = c
        return [r for r in rowmap.values() if r]

    def holds(self, F):
        H = compose(F, self._chart_images())
        return not any(self._targets(H, F.total_degree(), self._arc_cache()).values())

    def describe(self):
        out = {'type': 'InfinitelyNearChain',
               'line': [[str(c) for c in self.P0], [str(c) for c in self.P1]],
               'plane': [str(c) for c in self.plane], 'm': list(self.mults)}
        if self.arc is not None:
            out['arc'] = [format_poly(f) for f in self.arc]
        return out


def _vector(F: MultiPoly, columns: List[Tuple[int, ...]]) -> Dict[int, Fraction]:
    index = {e: j for j, e in enumerate(columns)}
    out = {}
    for e, c in F.terms.items():
        if e not in index:
            raise ValueError(f"{format_poly(F)} has a term outside the monomial basis")
        out[index[e]] = c
    return out


def _form(vec: Dict[int, Fraction], columns: List[Tuple[int, ...]]) -> MultiPoly:
    return MultiPoly({columns[j]: c for j, c in vec.items()}, len(columns[0]), QQ)


def span_contains(span: Sequence[MultiPoly], F: MultiPoly) -> bool:
    if F.is_zero():
        return True
    d = F.total_degree()
    columns = monomials(F.nvars, d)
    vecs = [_vector(f, columns) for f in span]
    return rank(vecs + [_vector(F, columns)], ncols=len(columns)) == rank(vecs, ncols=len(columns))


def span_equal(A: Sequence[MultiPoly], B: Sequence[MultiPoly]) -> bool:
    """Equality of the linear spans of two lists of forms of one degree"""
    forms = [f for f in list(A) + list(B) if not f.is_zero()]
    if not forms:
        return True
    columns = monomials(forms[0].nvars, forms[0].total_degree())
    va = [_vector(f, columns) for f in A if not f.is_zero()]
    vb = [_vector(f, columns) for f in B if not f.is_zero()]
    n = len(columns)
    ra = rank(va, ncols=n) if va else 0
    rb = rank(vb, ncols=n) if vb else 0
    return ra == rb == (rank(va + vb, ncols=n) if va + vb else 0)


def _condition_rows(d: int, conds: Sequence[BaseCondition], columns, alive: Optional[set] = None):
    alive = set(range(len(columns))) if alive is None else set(alive)
    rows = []
    for cond in sorted(conds, key=lambda c: c.cost):
        if isinstance(cond, CIPowerCurve):
            cond.check_degree(d)
            continue
        new_rows = cond.rows(d, columns, alive)
        for r in new_rows:
            if len(r) == 1:
                alive.discard(next(iter(r)))
        rows.extend(new_rows)
        logger.debug(f"{type(cond).__name__} m={cond.m}: {len(new_rows)} rows, {len(alive)} live columns")
    return rows


def conditions_matrix(d: int, conds: Sequence[BaseCondition]) -> RatMatrix:
    """
    Linear conditions on the coefficient vector of a generic degree-d form.

    Columns follow monomials(4, d); a system without rows gives one zero row.
    """
    if d < 1:
        raise ValueError("degree must be positive")
    columns = monomials(NVARS, d)
    rows = _condition_rows(d, conds, columns)
    if not rows:
        return RatMatrix([[0] * len(columns)])
    return RatMatrix([[r.get(j, 0) for j in range(len(columns))] for r in rows])


@dataclass
class LinearSystem:
    degree: int
    basis: List[MultiPoly]
    conditions: List[BaseCondition] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, F: MultiPoly) -> bool:
        return span_contains(self.basis, F)

    def check_conditions(self) -> bool:
        """Re-check every basis member against every condition independently"""
        for F in self.basis:
            for cond in self.conditions:
                if not cond.holds(F):
                    logger.warning(f"{type(cond).__name__} fails on a basis member")
                    return False
        return True

    def to_json(self) -> dict:
        return {
            'degree': self.degree,
            'dim': self.dim,
            'basis': [format_poly(f) for f in self.basis],
            'conditions': [c.describe() for c in self.conditions],
        }


def build_system(d: int, conds: Sequence[BaseCondition]) -> LinearSystem:
    """
    Degree-d forms satisfying all conditions.

    A CIPowerCurve replaces the ambient space by the span of g^i*g2^j times
    all monomials of the complementary degree; the other conditions are
    imposed inside that span.

    Raises:
        EmptySystem: only the zero form survives
    """
    columns = monomials(NVARS, d)
    ncols = len(columns)
    ci = [c for c in conds if isinstance(c, CIPowerCurve)]
    if len(ci) > 1:
        raise ValueError("at most one complete-intersection power per system")
    if ci:
        ambient = row_basis([_vector(f, columns) for f in ci[0].ambient_span(d)], ncols)
        support = set()
        for v in ambient:
            support.update(v)
        rows = _condition_rows(d, conds, columns, alive=support)
        reduced = []
        for r in rows:
            row = {}
            for k, v in enumerate(ambient):
                s = sum(c * v[j] for j, c in r.items() if j in v)
                if s:
                    row[k] = s
            if row:
                reduced.append(row)
        kernel = nullspace(reduced, ncols=len(ambient)) if reduced else \
            [[1 if i == k else 0 for i in range(len(ambient))] for k in range(len(ambient))]
        vectors = []
        for coeffs in kernel:
            vec: Dict[int, Fraction] = {}
            for k, c in enumerate(coeffs):
                if c:
                    for j, x in ambient[k].items():
                        vec[j] = vec.get(j, 0) + c * x
            vectors.append({j: x for j, x in vec.items() if x})
        logger.debug(f"ambient span {len(ambient)}, {len(reduced)} reduced rows")
    else:
        rows = _condition_rows(d, conds, columns)
        kernel = nullspace(rows, ncols=ncols) if rows else \
            [[1 if i == k else 0 for i in range(ncols)] for k in range(ncols)]
        vectors = [{j: c for j, c in enumerate(v) if c} for v in kernel]
    basis_vecs = row_basis(vectors, ncols)
    if not basis_vecs:
        raise EmptySystem(f"no nonzero degree-{d} form satisfies the conditions")
    basis = [_form(v, columns) for v in basis_vecs]
    logger.info(f"built degree-{d} system of dimension {len(basis)}")
    return LinearSystem(d, basis, list(conds))


def restrict_system(L: LinearSystem, extra: Sequence[BaseCondition]) -> LinearSystem:
    """Members of L that also satisfy the extra conditions"""
    columns = monomials(NVARS, L.degree)
    vecs = [_vector(f, columns) for f in L.basis]
    rows = _condition_rows(L.degree, extra, columns)
    reduced = []
    for r in rows:
        row = {k: s for k, s in ((k, sum(c * v.get(j, 0) for j, c in r.items())) for k, v in enumerate(vecs)) if s}
        if row:
            reduced.append(row)
    kernel = nullspace(reduced, ncols=len(vecs)) if reduced else \
        [[1 if i == k else 0 for i in range(len(vecs))] for k in range(len(vecs))]
    out = []
    for coeffs in kernel:
        F = MultiPoly.zero(NVARS)
        for c, G in zip(coeffs, L.basis):
            if c:
                F = F + G.scale(c)
        out.append(F)
    if not out:
        raise EmptySystem("restriction leaves no nonzero member")
    return LinearSystem(L.degree, out, list(L.conditions) + list(extra))


def pullback_system(L: LinearSystem, phi: Sequence[MultiPoly]) -> List[MultiPoly]:
    """Compose every basis form with the parametrization phi"""
    return compose_all(L.basis, phi)


def verify_fixed_divisor(L: LinearSystem, phi: Sequence[MultiPoly], F_expected: MultiPoly):
    """
    Check that F_expected divides the pullback of every member.

    Returns:
        (ok, residuals); on failure residuals stop at the first failing index
    """
    if F_expected.is_zero():
        raise ValueError("expected fixed divisor must be nonzero")
    residuals = []
    for i, P in enumerate(pullback_system(L, phi)):
        try:
            residuals.append(P.exact_div(F_expected))
        except NotDivisible:
            logger.info(f"fixed divisor does not divide pullback {i}")
            return False, residuals
    return True, residuals


def residuals_free_at(residuals: Sequence[MultiPoly], samples: Sequence[Sequence]) -> bool:
    """True when no sample point is a common zero of the residuals"""
    for s in samples:
        if all(r.evaluate(s) == 0 for r in residuals):
            return False
    return True


def proportional_ratios(forms: Sequence[MultiPoly]) -> List[Fraction]:
    """
    c with forms[i] = c[i] * F for one form F, as a primitive integer vector.

    Raises:
        NotContracted: the forms are not pairwise proportional (or all zero)
    """
    ref = next((f for f in forms if not f.is_zero()), None)
    if ref is None:
        raise NotContracted("all forms vanish")
    lead, lc = ref.leading_term()
    ratios = []
    for f in forms:
        c = Fraction(f.coefficient(lead)) / Fraction(lc)
        if f != ref.scale(c):
            raise NotContracted("forms are not proportional")
        ratios.append(c)
    den = 1
    for c in ratios:
        den = den * c.denominator // gcd(den, c.denominator)
    ints = [int(c * den) for c in ratios]
    g = 0
    for v in ints:
        g = gcd(g, v)
    first = next(v for v in ints if v)
    if first < 0:
        g = -g
    return [v // g for v in ints]


def contraction_point(L: LinearSystem, phi: Sequence[MultiPoly]) -> List[int]:
    """The point of P^(dim L - 1) to which the surface parametrized by phi is contracted"""
    return proportional_ratios(pullback_system(L, phi))


@dataclass
class BlowupCenter:
    """Center in normalized position: the coordinates in vanishing cut it out after change"""
    vanishing: Tuple[int, ...]
    change: Optional[List[MultiPoly]] = None


def blowup_chart(F: MultiPoly, center: BlowupCenter, chart: int) -> Tuple[MultiPoly, int]:
    """
    Strict transform and exceptional multiplicity in one chart.

    Chart j uses x_v (v = center.vanishing[j]) as exceptional coordinate and
    substitutes x_k -> x_v * x_k for the other vanishing coordinates.
    """
    if center.change is not None:
        F = compose(F, center.change)
    if not 0 <= chart < len(center.vanishing):
        raise IndexError(f"chart {chart} out of range")
    v = center.vanishing[chart]
    others = [k for k in center.vanishing if k != v]
    terms = {}
    for e, c in F.terms.items():
        ne = list(e)
        for k in others:
            ne[v] += e[k]
        terms[tuple(ne)] = terms.get(tuple(ne), 0) + c
    G = MultiPoly(terms, F.nvars, F.ring)
    if G.is_zero():
        return G, 0
    exc = min(e[v] for e in G.terms)
    strict = {}
    for e, c in G.terms.items():
        ne = list(e)
        ne[v] -= exc
        strict[tuple(ne)] = c
    return MultiPoly(strict, F.nvars, F.ring), exc


def image_degree_formula(d: int, mults: Sequence[Tuple[int, int]]) -> int:
    """d^2 minus count*m^2 over the base points; valid for birational restrictions"""
    if d < 1:
        raise ValueError("degree must be positive")
    deg = d * d - sum(count * m * m for m, count in mults)
    if deg < 0:
        raise NegativeDegree(f"degree {deg} from d={d}, mults={list(mults)}")
    return deg


def stdquad_transform(d: int, m1: int, m2: int, m3: int) -> Tuple[int, Tuple[int, int, int], bool]:
    """
    Degree and multiplicities after the standard quadratic transformation.

    Returns:
        (degree, multiplicities, effective); effective is False when the degree
        or a multiplicity comes out negative
    """
    d2 = 2 * d - m1 - m2 - m3
    out = (d - m2 - m3, d - m1 - m3, d - m1 - m2)
    effective = d2 >= 0 and min(out) >= 0
    if not effective:
        logger.warning(f"standard quadratic transform of ({d}, {m1}, {m2}, {m3}) is not effective")
    return d2, out, effective


def implicit_equation(param: Sequence[MultiPoly], degree: int) -> List[MultiPoly]:
    """Forms of the given degree vanishing on the image of the parametrization"""
    n = len(param)
    targets = monomials(n, degree)
    cache = _PowerCache(param)
    rowmap: Dict[Tuple[int, ...], Dict[int, Fraction]] = {}
    for j, e in enumerate(targets):
        for sexp, c in cache.product(e).terms.items():
            rowmap.setdefault(sexp, {})[j] = c
    kernel = nullspace(list(rowmap.values()), ncols=len(targets))
    return [MultiPoly({targets[j]: c for j, c in enumerate(v) if c}, n, QQ) for v in kernel]


def tangent_plane(V: MultiPoly, p: Sequence) -> List[Fraction]:
    grad = [V.differentiate(i).evaluate(p) for i in range(V.nvars)]
    if not any(grad):
        raise ValueError(f"{list(p)} is a singular point of V")
    return grad


def lines_through(V: MultiPoly, p: Sequence) -> List[Tuple[List[MultiPoly], int]]:
    """
    Rational lines of the quadric V through its smooth point p.

    Returns:
        list of (parametrization lambda*p + mu*direction, multiplicity)
    """
    if V.total_degree() != 2:
        raise ValueError("lines_through expects a quadric")
    if V.evaluate(p) != 0:
        raise ValueError(f"{list(p)} is not on V")
    T = nullspace([tangent_plane(V, p)])
    a = [v for v in T if rank([list(p)] + [v]) == 2]
    a1 = a[0]
    a2 = next(v for v in a[1:] if rank([list(p), a1, v]) == 3)
    section = compose(V, linear_images([a1, a2], 2))
    if section.is_zero():
        raise ValueError("the tangent plane is contained in V")
    lines = []
    for factor, mult in binary_factor(section):
        if factor.total_degree() != 1:
            continue
        alpha = factor.coefficient((1, 0))
        beta = factor.coefficient((0, 1))
        direction = [beta * x - alpha * y for x, y in zip(a1, a2)]
        lines.append((line_param(list(p), direction), mult))
    return lines


def projection_inverse(V: MultiPoly, p: Sequence, plane: Optional[Sequence[Sequence]] = None) -> List[MultiPoly]:
    """
    Parametrization P^2 -> V of a quadric by lines through its smooth point p:
    u -> V(y)*p - (grad V(p) . y)*y with y = u0*a0 + u1*a1 + u2*a2.
    """
    if V.total_degree() != 2 or V.evaluate(p) != 0:
        raise ValueError("projection_inverse expects a quadric and a point on it")
    grad = tangent_plane(V, p)
    if plane is None:
        k = next(i for i, c in enumerate(p) if c)
        plane = [[1 if j == i else 0 for j in range(NVARS)] for i in range(NVARS) if i != k]
    y = linear_images(plane, 3)
    Vy = compose(V, y)
    ty = sum((y[i].scale(grad[i]) for i in range(NVARS)), MultiPoly.zero(3))
    return [Vy.scale(p[i]) - ty * y[i] for i in range(NVARS)]


def normalize_forms(forms: Sequence[MultiPoly]) -> List[MultiPoly]:
    """Scale a tuple of forms jointly to coprime integer coefficients"""
    den = 1
    for f in forms:
        for c in f.terms.values():
            if isinstance(c, Fraction):
                den = den * c.denominator // gcd(den, c.denominator)
    scaled = [f.scale(den) for f in forms]
    g = 0
    for f in scaled:
        for c in f.terms.values():
            g = gcd(g, int(c))
    return [f.scale(Fraction(1, g)) for f in scaled] if g > 1 else scaled


def image_curve(phi: Sequence[MultiPoly], gamma: Sequence[MultiPoly]) -> List[MultiPoly]:
    """Parametrization phi o gamma of a curve, with the common binary factor removed"""
    raw = [compose(f, gamma) for f in phi]
    common = binary_gcd(raw)
    return normalize_forms([f.exact_div(common) for f in raw])
