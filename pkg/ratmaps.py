"""
Rational Maps Module
Tangential projections, birational round trips, quadric relations,
tangent cones, the de Jonquieres transformation and finite-field oracles
"""

import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, gcd
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from sympy.polys.polyerrors import ExactQuotientFailed

from config import Config
from exactalg import (
    GF, QQ, MultiPoly, NotDivisible, OADPError, RatMatrix, compose, format_poly, fp_det,
    fp_resultant_in_var, from_sympy_poly, monomials, nullspace, rank, row_basis, to_sympy_poly,
)
from linsys import (
    CIPowerCurve, EmptySystem, LinearSystem, NotContracted, PointMult, build_system, compose_all,
    complement_basis, linear_images, projection_inverse, proportional_ratios,
    restrict_system, tangent_plane, verify_fixed_divisor,
)
from pencils import quadric_form

logger = logging.getLogger(__name__)


class Indeterminate(OADPError):
    pass


class RankDrop(OADPError):
    pass


class NoLinearFit(OADPError):
    pass


class NotAQuadric(OADPError):
    pass


class SubsystemEmpty(OADPError):
    pass


class DimensionUnexpected(OADPError):
    pass


class OracleUnstable(OADPError):
    pass


@dataclass
class RationalMap:
    """(f_0 : ... : f_N) given by equidegree forms in src_vars variables"""
    forms: List[MultiPoly]

    def __post_init__(self):
        live = [f for f in self.forms if not f.is_zero()]
        if not live:
            raise ValueError("a rational map needs a nonzero form")
        degs = {f.total_degree() for f in live}
        if len(degs) != 1 or not all(f.is_homogeneous() for f in live):
            raise ValueError("map forms must be homogeneous of one degree")
        self.src_vars = live[0].nvars
        self.degree = degs.pop()

    @property
    def target_dim(self) -> int:
        return len(self.forms) - 1

    def normalize(self, candidates: Sequence[MultiPoly]) -> 'RationalMap':
        """Divide out candidate common factors while every form is divisible"""
        forms = list(self.forms)
        for c in candidates:
            while True:
                try:
                    forms = [f.exact_div(c) for f in forms]
                except NotDivisible:
                    break
        return RationalMap(forms)

    def then(self, other: 'RationalMap') -> 'RationalMap':
        """other o self"""
        return RationalMap(compose_all(other.forms, self.forms))

    def __call__(self, q):
        return evaluate(self, q)

    def to_json(self) -> List[str]:
        return [format_poly(f) for f in self.forms]


def proportional_point(values: Sequence) -> List[int]:
    """Primitive integer representative with first nonzero coordinate positive"""
    fr = [Fraction(v) for v in values]
    if not any(fr):
        raise Indeterminate("all coordinates vanish")
    den = 1
    for c in fr:
        den = den * c.denominator // gcd(den, c.denominator)
    ints = [int(c * den) for c in fr]
    g = 0
    for v in ints:
        g = gcd(g, v)
    if next(v for v in ints if v) < 0:
        g = -g
    return [v // g for v in ints]


def evaluate(f: RationalMap, q: Sequence) -> List[int]:
    if not any(q):
        raise ValueError("the zero vector is not a point")
    values = [F.evaluate(q) for F in f.forms]
    if not any(values):
        raise Indeterminate(f"{list(q)} lies in the base locus")
    return proportional_point(values)


def identity_map(n: int = 4) -> RationalMap:
    return RationalMap([MultiPoly.variable(i, n) for i in range(n)])


def coordinate_forms(n: int = 4) -> List[MultiPoly]:
    return [MultiPoly.variable(i, n) for i in range(n)]


def sample_points(seed: int, nvars: int, count: int, height: int = Config.SAMPLE_HEIGHT) -> List[List[int]]:
    """Deterministic small-height integer points"""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        pt = [int(v) for v in rng.integers(-height, height + 1, size=nvars)]
        if any(pt):
            out.append(pt)
    return out


def jacobian_at(f: RationalMap, q: Sequence) -> List[List[Fraction]]:
    """Rows are forms, columns are source variables"""
    return [[F.differentiate(j).evaluate(q) for j in range(f.src_vars)] for F in f.forms]


@dataclass
class TangentSpaceP7:
    basis_points: List[List[int]]
    normal_forms: List[List[int]]

    @property
    def dim(self) -> int:
        return len(self.basis_points)


def _tangent_from_points(points: List[List], expected: int) -> TangentSpaceP7:
    chosen: List[List] = []
    for pt in points:
        if rank(chosen + [pt]) > len(chosen):
            chosen.append(pt)
    r = len(chosen)
    if r != expected:
        raise RankDrop(f"tangent points span dimension {r}, expected {expected}")
    normals = nullspace(chosen)
    return TangentSpaceP7([proportional_point(p) for p in chosen], normals)


def tangent_space_at(sigma: RationalMap, q0: Sequence) -> TangentSpaceP7:
    """
    Column space of the Jacobian of sigma at q0 (it contains sigma(q0) by Euler).

    Raises:
        Indeterminate: q0 in the base locus
        RankDrop: the Jacobian has rank below the source dimension
    """
    evaluate(sigma, q0)
    J = jacobian_at(sigma, q0)
    columns = [[J[i][j] for i in range(len(J))] for j in range(sigma.src_vars)]
    return _tangent_from_points(columns, sigma.src_vars)


def tangent_space_at_contraction(sigma: RationalMap, V: MultiPoly, phi_V: Sequence[MultiPoly],
                                 x: Sequence, samples: Sequence[Sequence]) -> TangentSpaceP7:
    """
    Tangent space of the image at the point x to which sigma contracts V:
    spanned by x and the derivatives of sigma in directions normal to V.
    """
    points = [list(x)]
    for u in samples:
        q = [F.evaluate(u) for F in phi_V]
        if not any(q):
            continue
        grad = [V.differentiate(i).evaluate(q) for i in range(V.nvars)]
        j = next((i for i, c in enumerate(grad) if c), None)
        if j is None:
            continue
        column = [F.differentiate(j).evaluate(q) for F in sigma.forms]
        if any(column):
            points.append(column)
    return _tangent_from_points(points, sigma.src_vars)


def tangential_projection(sigma: RationalMap, q0: Optional[Sequence] = None,
                          tangent: Optional[TangentSpaceP7] = None) -> RationalMap:
    """Linear projection P^N -> P^(N-4) from the tangent space"""
    if tangent is None:
        tangent = tangent_space_at(sigma, q0)
    return RationalMap([MultiPoly.linear_form(v) for v in tangent.normal_forms])


def fit_linear(A: Sequence[MultiPoly], B: Sequence[MultiPoly], samples: Sequence[Sequence]) -> RatMatrix:
    """
    Matrix T with A proportional to T*B as tuples of forms.

    T is fitted from the samples and then verified exactly through
    A_i * (TB)_r == A_r * (TB)_i for a reference index r.

    Raises:
        NoLinearFit
    """
    n, m = len(A), len(B)
    rows = []
    for q in samples:
        a = [F.evaluate(q) for F in A]
        b = [F.evaluate(q) for F in B]
        if not any(a) or not any(b):
            continue
        for i in range(n):
            for j in range(i + 1, n):
                row = {}
                for k in range(m):
                    if b[k]:
                        if a[i]:
                            row[j * m + k] = row.get(j * m + k, 0) + a[i] * b[k]
                        if a[j]:
                            row[i * m + k] = row.get(i * m + k, 0) - a[j] * b[k]
                row = {c: v for c, v in row.items() if v}
                if row:
                    rows.append(row)
    kernel = nullspace(rows, ncols=n * m)
    if len(kernel) != 1:
        raise NoLinearFit(f"linear fit has a {len(kernel)}-dimensional solution space")
    vec = kernel[0]
    T = [[vec[i * m + k] for k in range(m)] for i in range(n)]
    TB = [sum((B[k].scale(T[i][k]) for k in range(m) if T[i][k]), MultiPoly.zero(B[0].nvars))
          for i in range(n)]
    r = next((i for i in range(n) if not A[i].is_zero() and not TB[i].is_zero()), None)
    if r is None:
        raise NoLinearFit("fitted map vanishes")
    for i in range(n):
        if A[i] * TB[r] != A[r] * TB[i]:
            raise NoLinearFit(f"exact check fails at index {i}")
    return RatMatrix(T)


def verify_linear_roundtrip(sigma: RationalMap, pi: RationalMap,
                            samples: Optional[Sequence[Sequence]] = None):
    """
    Check pi o sigma = G * (M x) with M invertible.

    Returns:
        (ok, G, M)
    """
    if pi.degree != 1:
        raise ValueError("the projection must be linear")
    F = [compose(P, sigma.forms) for P in pi.forms]
    n = sigma.src_vars
    if samples is None:
        samples = sample_points(Config.SEED, n, Config.ROUNDTRIP_SAMPLES)
    M = fit_linear(F, coordinate_forms(n), samples)
    if rank(M.entries) < n:
        logger.info("fitted linear part is singular")
        return False, None, M
    L = [MultiPoly.linear_form(row) for row in M.entries]
    r = next(i for i in range(len(F)) if not F[i].is_zero())
    try:
        G = F[r].exact_div(L[r])
    except NotDivisible:
        return False, None, M
    ok = all(F[i] == G * L[i] for i in range(len(F)))
    logger.info(f"round trip ok={ok}, deg G = {G.total_degree()}")
    return ok, G, M


def _symmetric_from_pairs(vec: Sequence, n: int, pairs: List[Tuple[int, int]]) -> RatMatrix:
    S = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), c in zip(pairs, vec):
        if i == j:
            S[i][i] = Fraction(c)
        else:
            S[i][j] = S[j][i] = Fraction(c) / 2
    return RatMatrix(S)


def quadric_relation(forms: Sequence[MultiPoly], modulus: Optional[MultiPoly] = None) -> List[RatMatrix]:
    """
    Symmetric Q with Q(f) == 0, or with modulus dividing Q(f).

    Returns:
        basis of such Q as symmetric matrices (empty when none)
    """
    n = len(forms)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    products = [forms[i] * forms[j] for i, j in pairs]
    columns: List[Dict] = [p.terms for p in products]
    extra = []
    if modulus is not None:
        deg = 2 * forms[0].total_degree() - modulus.total_degree()
        if deg >= 0:
            for e in monomials(forms[0].nvars, deg):
                extra.append((-modulus * MultiPoly.monomial(e)).terms)
    rowmap: Dict[tuple, Dict[int, Fraction]] = {}
    for k, terms in enumerate(columns + extra):
        for e, c in terms.items():
            rowmap.setdefault(e, {})[k] = c
    kernel = nullspace(list(rowmap.values()), ncols=len(columns) + len(extra))
    projected = [{k: v[k] for k in range(len(pairs)) if v[k]} for v in kernel]
    basis = row_basis([p for p in projected if p], len(pairs))
    return [_symmetric_from_pairs([b.get(k, 0) for k in range(len(pairs))], n, pairs) for b in basis]


def tangent_cone_rank(map_on_e: RationalMap) -> int:
    """Rank of the unique quadric containing the image of P^2 under four conics"""
    relations = quadric_relation(map_on_e.forms)
    if len(relations) != 1:
        raise NotAQuadric(f"{len(relations)} quadric relations instead of one")
    return rank(relations[0].entries)


# de Jonquieres transformation

def dejonquieres_system(g: MultiPoly, g2: MultiPoly, p: Sequence) -> LinearSystem:
    """Cubics in the ideal (g, g2) with a double point at p"""
    if g.evaluate(p) != 0:
        raise ValueError(f"{list(p)} is not on V")
    tangent_plane(g, p)
    L = build_system(3, [CIPowerCurve(g, g2, 1), PointMult(p, 2)])
    if L.dim != 4:
        raise DimensionUnexpected(f"de Jonquieres system has dimension {L.dim}")
    return L


def cremona_dejonquieres(g: MultiPoly, g2: MultiPoly, p: Sequence) -> RationalMap:
    return RationalMap(dejonquieres_system(g, g2, p).basis)


@dataclass
class CremonaData:
    f: RationalMap
    p_image: List[int]
    image_pencil: Tuple[MultiPoly, MultiPoly]
    inverse: RationalMap
    inverse_ok: bool


def dejonquieres_inverse(g: MultiPoly, g2: MultiPoly, p: Sequence,
                         samples: Optional[Sequence[Sequence]] = None) -> CremonaData:
    """
    The image pencil, the image p' of V and the inverse map of a de Jonquieres
    transformation, with f^-1 o f checked to be G * (linear).
    """
    f = cremona_dejonquieres(g, g2, p)
    L = LinearSystem(3, f.forms)
    phi = projection_inverse(g, p)
    Tp = MultiPoly.linear_form(tangent_plane(g, p))
    F_expected = compose(g2, phi) * compose(Tp, phi)
    ok, residuals = verify_fixed_divisor(L, phi, F_expected)
    if not ok:
        raise NotContracted("de Jonquieres map does not contract V")
    p_image = proportional_ratios(residuals)
    quads = []
    for modulus in (g2 + g, g2 + g.scale(2)):
        rel = quadric_relation(f.forms, modulus)
        if len(rel) != 1:
            raise DimensionUnexpected(f"{len(rel)} image quadrics for one pencil member")
        quads.append(quadric_form(rel[0]).primitive())
    L_inv = build_system(3, [CIPowerCurve(quads[0], quads[1], 1), PointMult(p_image, 2)])
    if L_inv.dim != 4:
        raise DimensionUnexpected(f"inverse system has dimension {L_inv.dim}")
    inverse = RationalMap(L_inv.basis)
    if samples is None:
        samples = sample_points(Config.SEED + 1, 4, Config.ROUNDTRIP_SAMPLES)
    try:
        M = fit_linear(f.then(inverse).forms, coordinate_forms(), samples)
        inverse_ok = rank(M.entries) == 4
    except NoLinearFit as e:
        logger.info(f"inverse check failed: {e}")
        inverse_ok = False
    return CremonaData(f, p_image, (quads[0], quads[1]), inverse, inverse_ok)


def transported_system_matches(X: LinearSystem, f: RationalMap, image_pencil: Tuple[MultiPoly, MultiPoly],
                               samples: Optional[Sequence[Sequence]] = None) -> bool:
    """
    The image of X under f is the system of cubics through the base curve of
    the image pencil: the cubics pulled back along f are G * (members of X).
    """
    cubics = build_system(3, [CIPowerCurve(image_pencil[0], image_pencil[1], 1)])
    if cubics.dim != X.dim:
        logger.info(f"cubics through the image curve: {cubics.dim}, system: {X.dim}")
        return False
    pulled = compose_all(cubics.basis, f.forms)
    if samples is None:
        samples = sample_points(Config.SEED + 2, 4, Config.TRANSPORT_SAMPLES)
    try:
        T = fit_linear(pulled, X.basis, samples)
    except NoLinearFit as e:
        logger.info(f"transported system check failed: {e}")
        return False
    return rank(T.entries) == X.dim


# leading forms and tangent cones

def local_frame(q: Sequence) -> List[List]:
    """q followed by the standard complement used for leading forms at q"""
    return [list(q)] + complement_basis([q])


def leading_forms(forms: Sequence[MultiPoly], q: Sequence, order: Optional[int] = None):
    """
    Multiplicity at q and the leading (ternary) forms on the exceptional plane.

    Forms are rewritten in the frame x = u0*q + u1*w1 + u2*w2 + u3*w3; the
    leading form of F is its part of degree m in (u1, u2, u3).

    Returns:
        (m, list of ternary forms; zero where a form has higher multiplicity)
    """
    images = linear_images(local_frame(q), 4)
    local = compose_all(forms, images)
    if order is None:
        order = min(min(e[1] + e[2] + e[3] for e in H.terms) for H in local if not H.is_zero())
    out = []
    for H in local:
        terms = {}
        for e, c in H.terms.items():
            if e[1] + e[2] + e[3] == order:
                terms[(e[1], e[2], e[3])] = c
        out.append(MultiPoly(terms, 3, QQ))
    return order, out


def leading_form_subsystem(L: LinearSystem, q: Sequence, m_plus: int,
                           candidates: Sequence[MultiPoly] = ()) -> Tuple[RationalMap, MultiPoly]:
    """
    Members with multiplicity m+1 at q, their leading forms on E_q, split as
    fixedPart * (moving part).
    """
    m, _ = leading_forms(L.basis, q)
    if m != m_plus - 1:
        raise ValueError(f"system has multiplicity {m} at {list(q)}, expected {m_plus - 1}")
    try:
        sub = restrict_system(L, [PointMult(q, m_plus)])
    except EmptySystem as e:
        raise SubsystemEmpty(str(e))
    _, lead = leading_forms(sub.basis, q, order=m_plus)
    columns = monomials(3, m_plus)
    index = {e: j for j, e in enumerate(columns)}
    basis = row_basis([{index[e]: c for e, c in f.terms.items()} for f in lead if not f.is_zero()], len(columns))
    if not basis:
        raise SubsystemEmpty("leading forms of the subsystem vanish")
    moving = [MultiPoly({columns[j]: c for j, c in v.items()}, 3, QQ) for v in basis]
    fixed = MultiPoly.one(3)
    for c in candidates:
        if c.total_degree() < 1:
            continue
        while True:
            try:
                moving = [f.exact_div(c) for f in moving]
            except NotDivisible:
                break
            fixed = fixed * c
    logger.info(f"leading subsystem at {list(q)}: {len(moving)} moving forms, fixed degree {fixed.total_degree()}")
    return RationalMap(moving), fixed


def contracted_image_point(L: LinearSystem, q: Sequence) -> List[int]:
    """x_q: the point to which the leading forms at q send the exceptional plane"""
    _, lead = leading_forms(L.basis, q)
    return proportional_ratios(lead)


def _curve_normals(param: Sequence[MultiPoly]) -> Tuple[List[int], List[int]]:
    """Two standard vectors completing the tangent lines of the curve at sample parameters"""
    samples = [(1, 1), (1, 2), (2, -3)]
    tangents = [[[f.differentiate(v).evaluate(t) for f in param] for v in (0, 1)] for t in samples]
    for i in range(4):
        for j in range(i + 1, 4):
            e = [[1 if k == i else 0 for k in range(4)], [1 if k == j else 0 for k in range(4)]]
            if all(rank(T + e) == 4 for T in tangents):
                return e[0], e[1]
    raise ValueError("no standard normal frame along the curve")


def exceptional_image(forms: Sequence[MultiPoly], param: Sequence[MultiPoly], m: int) -> List[MultiPoly]:
    """
    Restriction of the strict transforms to the exceptional divisor over a curve.

    Forms are rewritten as F(c(t0, t1) + y2*N2 + y3*N3) with constant normals;
    the part of degree m in (y2, y3) is the image of the exceptional divisor.

    Raises:
        ValueError: some form has multiplicity below m along the curve
    """
    N2, N3 = _curve_normals(param)
    images = []
    for i, f in enumerate(param):
        terms = {e + (0, 0): c for e, c in f.terms.items()}
        terms[(0, 0, 1, 0)] = N2[i]
        terms[(0, 0, 0, 1)] = N3[i]
        images.append(MultiPoly({e: c for e, c in terms.items() if c}, 4, QQ))
    out = []
    for H in compose_all(forms, images):
        if any(e[2] + e[3] < m for e in H.terms):
            raise ValueError(f"a form has multiplicity below {m} along the curve")
        out.append(MultiPoly({e: c for e, c in H.terms.items() if e[2] + e[3] == m}, 4, QQ))
    return out


def exceptional_components(V: MultiPoly, param: Sequence[MultiPoly], m: int) -> List[Tuple[int, int, int]]:
    """
    Components of the exceptional restriction of V = 0 over a curve of multiplicity m.

    Returns:
        sorted (degree along the curve, degree in the fibres, multiplicity)
    """
    (H,) = exceptional_image([V], param, m)
    _, factors = to_sympy_poly(H).factor_list()
    out = []
    for P, k in factors:
        e = P.monoms()[0]
        out.append((e[0] + e[1], e[2] + e[3], k))
    return sorted(out)


def _coefficient_columns(forms: Sequence[MultiPoly]) -> List[List[Fraction]]:
    exps = sorted({e for f in forms for e in f.terms})
    return [[f.coefficient(e) for f in forms] for e in exps]


def image_span(forms: Sequence[MultiPoly]) -> int:
    """Projective span of the image of the forms, as a vector-space dimension"""
    return rank(_coefficient_columns(forms))


def image_spans_point(forms: Sequence[MultiPoly], x: Sequence) -> bool:
    columns = _coefficient_columns(forms)
    return rank(columns + [list(x)]) == rank(columns)


def restricted_span(forms: Sequence[MultiPoly], S: MultiPoly) -> int:
    """Span of the image of the surface S = 0, counted as forms independent modulo S"""
    d = forms[0].total_degree() - S.total_degree()
    if d < 0:
        raise ValueError(f"surface of degree {S.total_degree()} above the degree of the forms")
    multiples = [S * MultiPoly.monomial(e, 1, S.ring) for e in monomials(S.nvars, d)]
    return rank(_coefficient_columns(list(forms) + multiples)) - len(multiples)


def veronese_witness(quartics: Sequence[MultiPoly]) -> Tuple[List[MultiPoly], int]:
    """
    Compose quartics double at the coordinate points with the standard
    quadratic transformation and strip the exceptional part.

    Returns:
        (conics, rank of the conic span; 6 means the complete system of conics)
    """
    y = [MultiPoly.variable(i, 3) for i in range(3)]
    quad = [y[1] * y[2], y[0] * y[2], y[0] * y[1]]
    exc = (y[0] * y[1] * y[2]) ** 2
    conics = [F.exact_div(exc) for F in compose_all(quartics, quad)]
    columns = monomials(3, 2)
    index = {e: j for j, e in enumerate(columns)}
    r = rank([{index[e]: c for e, c in f.terms.items()} for f in conics], ncols=len(columns))
    return conics, r


# finite-field oracles

def _random_fp(rng, p: int, size: int) -> List[int]:
    return [int(v) for v in rng.integers(0, p, size=size)]


def _random_change(rng, p: int, n: int = 3) -> List[List[int]]:
    while True:
        M = [_random_fp(rng, p, n) for _ in range(n)]
        if fp_det(M, p):
            return M


def _changed(forms: Sequence[MultiPoly], M: List[List[int]], p: int) -> List[MultiPoly]:
    change = [MultiPoly({(1, 0, 0): M[i][0], (0, 1, 0): M[i][1], (0, 0, 1): M[i][2]}, 3, GF(p))
              for i in range(3)]
    return compose_all(forms, change)


def hyperplanes_through(point: Sequence[int], p: int) -> List[List[int]]:
    """Basis of the hyperplanes of P^N over F_p containing point"""
    j = next(i for i, x in enumerate(point) if x % p)
    inv = pow(point[j], -1, p)
    basis = []
    for i in range(len(point)):
        if i != j:
            c = [0] * len(point)
            c[i] = 1
            c[j] = -point[i] * inv % p
            basis.append(c)
    return basis


def _combine(forms: Sequence[MultiPoly], coeffs: Sequence[int]) -> MultiPoly:
    out = MultiPoly.zero(forms[0].nvars, forms[0].ring)
    for f, c in zip(forms, coeffs):
        if c:
            out = out + f.scale(c)
    return out


def _to_fp(forms: Sequence[MultiPoly], p: int) -> List[MultiPoly]:
    return [f if f.ring.p == p else f.mod_p(p) for f in forms]


def restrict_to_plane(forms: Sequence[MultiPoly], plane: Sequence[Sequence], p: Optional[int] = None) -> List[MultiPoly]:
    """sigma restricted to the plane u0*a0 + u1*a1 + u2*a2 (optionally reduced mod p)"""
    images = linear_images(plane, 3)
    if p is not None:
        images = [f.mod_p(p) for f in images]
    return compose_all(forms, images)


def _full_degree(f: MultiPoly, d: int) -> bool:
    return not f.is_zero() and f.total_degree() == d and f.degree_in(1) == d


def _slice_pair(moved: Sequence[MultiPoly], rng, p: int) -> Optional[Tuple[MultiPoly, MultiPoly]]:
    d = max(f.total_degree() for f in moved)
    s0, s1 = (_combine(moved, _random_fp(rng, p, len(moved))) for _k in range(2))
    if not (_full_degree(s0, d) and _full_degree(s1, d)):
        return None
    return s0, s1


def without_fixed_curve(forms: Sequence[MultiPoly], rng, p: int) -> List[MultiPoly]:
    """
    Divide ternary forms over F_p by their common factor.

    Two random combinations with a vanishing resultant share a curve; their
    gcd is then the fixed curve, checked to divide every form.
    """
    live = [f for f in forms if not f.is_zero()]
    if not live:
        raise OracleUnstable("every form vanishes on the plane")
    for _ in range(Config.MAX_SLICE_RETRIES):
        pair = _slice_pair(_changed(live, _random_change(rng, p), p), rng, p)
        if pair is None:
            continue
        if not fp_resultant_in_var(*pair).is_zero:
            return live
        polys = [to_sympy_poly(f) for f in live]
        c0, c1 = (to_sympy_poly(_combine(live, _random_fp(rng, p, len(live)))) for _k in range(2))
        common = c0.gcd(c1)
        try:
            stripped = [P.exquo(common) for P in polys]
        except ExactQuotientFailed:
            continue
        logger.debug(f"fixed curve of degree {common.total_degree()} removed mod {p}")
        return [from_sympy_poly(P, GF(p)) for P in stripped]
    raise OracleUnstable(f"no usable slices mod {p}")


def _excluded_roots(s0: MultiPoly, R: sp.Poly, excluding: Sequence[MultiPoly], rng, p: int) -> Optional[sp.Poly]:
    """
    Factor of R whose roots lift to common zeros of the excluding forms:
    the roots shared with the resultants of s0 against two random
    combinations of them.
    """
    d = max(f.total_degree() for f in excluding)
    out = R
    for _k in range(2):
        r = _combine(excluding, _random_fp(rng, p, len(excluding)))
        if not _full_degree(r, d):
            return None
        out = out.gcd(fp_resultant_in_var(s0, r))
    return out


def _moving_count(space: Sequence[MultiPoly], excluding: Sequence[MultiPoly], rng, p: int) -> Optional[int]:
    """
    Distinct common zeros of two slices drawn from space, outside the common
    zeros of excluding; None when no retry gives a squarefree moving part.
    """
    d = max(f.total_degree() for f in space)
    for _ in range(Config.MAX_SLICE_RETRIES):
        M = _random_change(rng, p)
        pair = _slice_pair(_changed(space, M, p), rng, p)
        if pair is None:
            continue
        s0, s1 = pair
        R = fp_resultant_in_var(s0, s1)
        if R.is_zero or R.degree() != d * d:
            continue
        excluded = _excluded_roots(s0, R, _changed(excluding, M, p), rng, p)
        if excluded is None:
            continue
        count = 0
        squarefree = True
        for factor, mult in R.sqf_list()[1]:
            moving = factor.exquo(factor.gcd(excluded))
            if moving.degree() > 0:
                if mult > 1:
                    squarefree = False
                    break
                count += moving.degree()
        if squarefree:
            return count
    return None


def _common_zeros(moved: Sequence[MultiPoly], rng, p: int) -> Optional[sp.Poly]:
    """Squarefree Poly in x0 whose roots are the x0-coordinates of the common zeros of moved"""
    pair = _slice_pair(moved, rng, p)
    if pair is None:
        return None
    R = fp_resultant_in_var(*pair)
    if R.is_zero:
        return None
    excluded = _excluded_roots(pair[0], R, moved, rng, p)
    return None if excluded is None else excluded.sqf_part()


def _modal(counts: List[Optional[int]], trials: int, what: str) -> int:
    valid = [c for c in counts if c is not None]
    if not valid:
        raise OracleUnstable(f"{what}: no usable trial")
    value, freq = Counter(valid).most_common(1)[0]
    if freq < ceil(2 * trials / 3):
        raise OracleUnstable(f"{what}: modal value {value} in only {freq} of {trials} trials ({counts})")
    return value


def fp_degree_of_image_surface(forms: Sequence[MultiPoly], p: int, trials: int, seed: int = Config.SEED) -> int:
    """
    Degree of the image of P^2 under ternary forms, counted over F_p.

    A fixed curve of the forms is divided out first. Each trial slices by
    two random hyperplanes and counts their distinct common zeros away from
    the base points; every base root is dropped whatever its multiplicity.
    The modal count is returned.
    """
    if p < 1000:
        raise ValueError("oracle primes must exceed 1000")
    rng = np.random.default_rng(seed + p)
    space = without_fixed_curve(_to_fp(forms, p), rng, p)
    counts = [_moving_count(space, space, rng, p) for _ in range(trials)]
    logger.debug(f"degree counts mod {p}: {counts}")
    return _modal(counts, trials, f"degree mod {p}")


def fp_multiplicity_at(forms: Sequence[MultiPoly], x_q: Sequence[int], p: int, trials: int,
                       seed: int = Config.SEED) -> int:
    """
    Multiplicity of the image surface at x_q: the degree minus the points of
    a slice through x_q that avoid the preimage of x_q.

    The preimage of x_q is the common zero set of the hyperplanes through
    x_q pulled back; a curve in it is divided out of the slicing forms.
    """
    degree = fp_degree_of_image_surface(forms, p, trials, seed)
    rng = np.random.default_rng(seed + 7 * p)
    fp_forms = without_fixed_curve(_to_fp(forms, p), rng, p)
    point = [int(v) % p for v in x_q]
    through = [_combine(fp_forms, c) for c in hyperplanes_through(point, p)]
    through = [f for f in through if not f.is_zero()]
    space = without_fixed_curve(through, rng, p)
    counts = [_moving_count(space, through, rng, p) for _ in range(trials)]
    others = _modal(counts, trials, f"slices through x_q mod {p}")
    logger.debug(f"multiplicity mod {p}: degree {degree}, other points {others}")
    return degree - others


def fp_fiber_count(phi: Sequence[MultiPoly], p: int, trials: int, seed: int = Config.SEED) -> int:
    """Number of preimages of a general image point of a parametrization P^2 -> P^N"""
    rng = np.random.default_rng(seed + 3 * p)
    fp_forms = without_fixed_curve(_to_fp(phi, p), rng, p)
    counts: List[Optional[int]] = []
    for _ in range(trials):
        result = None
        for _retry in range(Config.MAX_SLICE_RETRIES):
            moved = _changed(fp_forms, _random_change(rng, p), p)
            y = [f.evaluate(_random_fp(rng, p, 3)) for f in moved]
            if not any(y):
                continue
            through = [f for f in (_combine(moved, c) for c in hyperplanes_through(y, p)) if not f.is_zero()]
            fiber = _common_zeros(through, rng, p)
            base = _common_zeros(moved, rng, p)
            if fiber is None or base is None:
                continue
            result = fiber.exquo(fiber.gcd(base)).degree()
            break
        counts.append(result)
    return _modal(counts, trials, f"fiber count mod {p}")
