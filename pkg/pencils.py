"""
Pencil Classification Module
Segre symbols of pencils of quadrics and of the conic pencils cut on a plane
"""

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

from exactalg import (
    QQ, MultiPoly, OADPError, ParseError, RatMatrix, binary_factor, binary_gcd, det_bareiss,
    format_poly, multiplicity_of, nullspace, parse_coefficient, parse_poly, rank,
)

logger = logging.getLogger(__name__)


class DegeneratePencil(OADPError):
    pass


class DegenerateSection(OADPError):
    pass


def quadric_matrix(f: MultiPoly) -> RatMatrix:
    """Symmetric matrix A with f = x^T A x"""
    if f.total_degree() != 2 or not f.is_homogeneous():
        raise ValueError(f"{f} is not a quadratic form")
    n = f.nvars
    A = [[Fraction(0)] * n for _ in range(n)]
    for exp, c in f.terms.items():
        idx = [i for i, e in enumerate(exp) for _ in range(e)]
        i, j = idx
        if i == j:
            A[i][i] = Fraction(c)
        else:
            A[i][j] = A[j][i] = Fraction(c) / 2
    return RatMatrix(A)


def quadric_form(A: RatMatrix) -> MultiPoly:
    """Inverse of quadric_matrix"""
    n = A.rows
    terms = {}
    for i in range(n):
        for j in range(i, n):
            exp = [0] * n
            exp[i] += 1
            exp[j] += 1
            c = A[i, j] if i == j else 2 * Fraction(A[i, j])
            terms[tuple(exp)] = c
    return MultiPoly(terms, n, QQ)


class SymmetricPencil:
    """
    Pencil lambda*A1 + mu*A2 of symmetric rational matrices (n = 3 or 4).

    det(lambda*A1 + mu*A2) may vanish identically: pencils of quadric cones
    are only classified through their plane sections. Pass regular=True to
    reject such pencils here; otherwise pencil_det_and_minor_gcds raises later.
    """

    def __init__(self, A1: RatMatrix, A2: RatMatrix, regular: bool = False):
        if A1.rows != A2.rows or A1.rows != A1.cols or A2.rows != A2.cols:
            raise DegeneratePencil("pencil matrices must be square of equal size")
        if A1.rows not in (3, 4):
            raise DegeneratePencil(f"pencil size {A1.rows} is not 3 or 4")
        if not A1.is_symmetric() or not A2.is_symmetric():
            raise DegeneratePencil("pencil matrices must be symmetric")
        flat = [[A1[i, j] for i in range(A1.rows) for j in range(A1.cols)],
                [A2[i, j] for i in range(A2.rows) for j in range(A2.cols)]]
        if rank(flat) < 2:
            raise DegeneratePencil("pencil matrices are proportional")
        self.n = A1.rows
        self.A1 = A1
        self.A2 = A2
        if regular and det_bareiss(self.pencil_matrix()).is_zero():
            raise DegeneratePencil("det(lambda*A1 + mu*A2) vanishes identically")

    @classmethod
    def from_forms(cls, F1: MultiPoly, F2: MultiPoly, regular: bool = False) -> 'SymmetricPencil':
        return cls(quadric_matrix(F1), quadric_matrix(F2), regular)

    @classmethod
    def from_json(cls, data, regular: bool = False) -> 'SymmetricPencil':
        """
        Build a pencil from JSON text or a parsed dict.

        Accepts {"n": 4, "A1": [[...]], "A2": [[...]]} with rational strings,
        or {"n": 4, "F1": "x0^2 + ...", "F2": "..."} with polynomial literals.
        """
        try:
            if isinstance(data, (str, bytes)):
                data = json.loads(data)
            n = int(data['n'])
            if 'A1' in data:
                A1 = RatMatrix([[parse_coefficient(str(x)) for x in row] for row in data['A1']])
                A2 = RatMatrix([[parse_coefficient(str(x)) for x in row] for row in data['A2']])
            else:
                A1 = quadric_matrix(parse_poly(data['F1'], n))
                A2 = quadric_matrix(parse_poly(data['F2'], n))
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"invalid pencil JSON: {e}")
        if A1.rows != n:
            raise ParseError(f"matrix size {A1.rows} does not match n={n}")
        return cls(A1, A2, regular)

    def to_json(self) -> dict:
        return {'n': self.n, 'A1': self.A1.to_json(), 'A2': self.A2.to_json()}

    def forms(self) -> Tuple[MultiPoly, MultiPoly]:
        return quadric_form(self.A1), quadric_form(self.A2)

    def recombine(self, a, b, c, d) -> 'SymmetricPencil':
        """The pencil spanned by a*A1 + b*A2 and c*A1 + d*A2"""
        n = self.n
        B1 = RatMatrix([[a * Fraction(self.A1[i, j]) + b * Fraction(self.A2[i, j]) for j in range(n)] for i in range(n)])
        B2 = RatMatrix([[c * Fraction(self.A1[i, j]) + d * Fraction(self.A2[i, j]) for j in range(n)] for i in range(n)])
        return SymmetricPencil(B1, B2)

    def congruent(self, M: RatMatrix) -> 'SymmetricPencil':
        """The pencil M^T A_i M"""
        Mt = M.transpose()
        return SymmetricPencil(Mt @ self.A1 @ M, Mt @ self.A2 @ M)

    def pencil_matrix(self) -> List[List[MultiPoly]]:
        n = self.n
        return [[MultiPoly({(1, 0): self.A1[i, j], (0, 1): self.A2[i, j]}, 2, QQ) for j in range(n)]
                for i in range(n)]


def pencil_det_and_minor_gcds(P: SymmetricPencil) -> Tuple[MultiPoly, List[MultiPoly]]:
    """
    Determinant of lambda*A1 + mu*A2 and the gcds of its minors.

    Returns:
        (det, gcds) where gcds[i] is the gcd of all (n-i)x(n-i) minors

    Raises:
        DegeneratePencil: det vanishes identically, or every minor of some order does
    """
    M = P.pencil_matrix()
    n = P.n
    det = det_bareiss(M)
    if det.is_zero():
        raise DegeneratePencil("det(lambda*A1 + mu*A2) vanishes identically")
    gcds = [binary_gcd([det])]
    for i in range(1, n):
        size = n - i
        minors = []
        for rows in combinations(range(n), size):
            for cols in combinations(range(n), size):
                minors.append(det_bareiss([[M[r][c] for c in cols] for r in rows]))
        if all(m.is_zero() for m in minors):
            raise DegeneratePencil(f"all minors of order {size} vanish")
        gcds.append(binary_gcd(minors))
    logger.debug(f"det = {format_poly(det)}, minor gcds = {[format_poly(g) for g in gcds]}")
    return det, gcds


@dataclass
class SingularMember:
    root_class: MultiPoly
    corank: int
    det_multiplicity: int


def _group_text(group: Sequence[int]) -> str:
    if len(group) == 1:
        return str(group[0])
    return '(' + ''.join(str(e) for e in group) + ')'


@dataclass
class SegreSymbol:
    """Per root class of det: the multiplicity pattern (e_0 ... e_k)"""
    groups: List[Tuple[int, ...]]
    root_classes: List[MultiPoly] = field(default_factory=list)
    section: bool = False

    def __post_init__(self):
        if self.root_classes:
            order = sorted(range(len(self.groups)), key=lambda i: self._key(self.groups[i], self.root_classes[i]))
            self.groups = [tuple(self.groups[i]) for i in order]
            self.root_classes = [self.root_classes[i] for i in order]
        else:
            self.groups = sorted((tuple(g) for g in self.groups), key=lambda g: (-sum(g), -len(g), g))

    @staticmethod
    def _key(group, factor):
        return (-sum(group), -len(group), -factor.total_degree(), tuple(group), format_poly(factor))

    @property
    def degrees(self) -> List[int]:
        if not self.root_classes:
            return [1] * len(self.groups)
        return [f.total_degree() for f in self.root_classes]

    def weighted_sum(self) -> int:
        return sum(sum(g) * d for g, d in zip(self.groups, self.degrees))

    def shape(self):
        return (self.section, sorted(zip(self.groups, self.degrees)))

    def __eq__(self, other):
        if not isinstance(other, SegreSymbol):
            return NotImplemented
        return self.shape() == other.shape()

    def display(self) -> str:
        parts = []
        for g, d in zip(self.groups, self.degrees):
            text = _group_text(g)
            if d > 1:
                text += f"×{d}"
            parts.append(text)
        body = '[' + ','.join(parts) + ']'
        return f'[{body}]' if self.section else body

    def __str__(self):
        return self.display()

    def to_json(self) -> dict:
        return {
            'symbol': self.display(),
            'groups': [list(g) for g in self.groups],
            'root_classes': [format_poly(f) for f in self.root_classes],
        }


def _multiplicity_profile(P: SymmetricPencil):
    det, gcds = pencil_det_and_minor_gcds(P)
    profile = []
    for factor, _mult in binary_factor(det):
        l = [multiplicity_of(factor, g) for g in gcds] + [0]
        k = max(i for i in range(P.n) if l[i] > 0)
        profile.append((factor, l, k))
    return det, gcds, profile


def segre_symbol(P: SymmetricPencil) -> SegreSymbol:
    """
    Segre symbol from the det factorization and the minor gcds.

    l_i is the multiplicity of a factor in gcds[i]; the group of that root
    class is (e_0 ... e_k) with e_i = l_i - l_{i+1}.
    """
    _, _, profile = _multiplicity_profile(P)
    groups = []
    classes = []
    for factor, l, k in profile:
        groups.append(tuple(l[i] - l[i + 1] for i in range(k + 1)))
        classes.append(factor)
    symbol = SegreSymbol(groups, classes)
    logger.info(f"Segre symbol {symbol.display()}")
    return symbol


def singular_members(P: SymmetricPencil) -> List[SingularMember]:
    """One entry per irreducible factor of det, with corank = 1 + max{i : l_i > 0}"""
    _, _, profile = _multiplicity_profile(P)
    return [SingularMember(root_class=factor, corank=k + 1, det_multiplicity=l[0])
            for factor, l, k in profile]


def plane_basis(coeffs: Sequence) -> List[List]:
    """Three vectors spanning the plane sum(coeffs[i] * x_i) = 0"""
    if not any(coeffs):
        raise ValueError("plane coefficients are all zero")
    return nullspace([list(coeffs)])


def conic_section_symbol(P: SymmetricPencil, plane: Sequence) -> SegreSymbol:
    """
    Double-bracket Segre symbol of the conic pencil cut on a plane.

    Raises:
        DegenerateSection: the restricted pencil has identically vanishing det
    """
    if P.n != 4:
        raise ValueError("conic sections are taken of pencils of quadrics in P^3")
    B = RatMatrix(plane_basis(plane)).transpose()
    Bt = B.transpose()
    R1 = Bt @ P.A1 @ B
    R2 = Bt @ P.A2 @ B
    try:
        section = SymmetricPencil(R1, R2)
        symbol = segre_symbol(section)
    except DegeneratePencil as e:
        raise DegenerateSection(f"plane {list(plane)} gives a degenerate conic pencil: {e}")
    symbol.section = True
    return symbol
