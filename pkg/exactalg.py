"""
Exact Algebra Module
Rationals, prime fields, sparse multivariate polynomials, and thin adapters
onto sympy for linear algebra, binary forms and resultants.
"""

import logging
import numbers
import re
from fractions import Fraction
from math import gcd
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import sympy as sp
from sympy.polys.matrices import DomainMatrix

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]
Coeff = Union[int, Fraction]


class OADPError(Exception):
    """Base class for every error raised by the toolkit"""


class RingMismatch(OADPError):
    pass


class NotDivisible(OADPError):
    pass


class ZeroDivisor(OADPError):
    pass


class IndexOutOfRange(OADPError):
    pass


class ArityMismatch(OADPError):
    pass


class BadPrime(OADPError):
    pass


class AllZero(OADPError):
    pass


class DegreeTooLarge(OADPError):
    pass


class ZeroForm(OADPError):
    pass


class VarAbsent(OADPError):
    pass


class ParseError(OADPError):
    pass


def is_prime(n: int) -> bool:
    return bool(sp.isprime(n))


def _norm_q(c) -> Coeff:
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    return c


class Ring:
    """Coefficient ring tag: the rationals (p is None) or the prime field F_p"""

    __slots__ = ('p',)

    def __init__(self, p: Optional[int] = None):
        if p is not None and not is_prime(p):
            raise BadPrime(f"{p} is not prime")
        self.p = p

    def __eq__(self, other):
        return isinstance(other, Ring) and self.p == other.p

    def __hash__(self):
        return hash(('ring', self.p))

    def __repr__(self):
        return 'QQ' if self.p is None else f'GF({self.p})'

    @property
    def is_rational(self) -> bool:
        return self.p is None

    def coerce(self, c) -> Coeff:
        p = self.p
        if isinstance(c, bool):
            c = int(c)
        if p is None:
            if isinstance(c, Fraction):
                return _norm_q(c)
            if isinstance(c, numbers.Integral):
                return int(c)
            if isinstance(c, str):
                return _norm_q(Fraction(c))
            raise TypeError(f"cannot coerce {c!r} into QQ")
        if isinstance(c, Fraction):
            if c.denominator % p == 0:
                raise BadPrime(f"denominator of {c} is divisible by {p}")
            return c.numerator * pow(c.denominator, -1, p) % p
        if isinstance(c, numbers.Integral):
            return int(c) % p
        if isinstance(c, str):
            return self.coerce(Fraction(c))
        raise TypeError(f"cannot coerce {c!r} into GF({p})")

    def add(self, a, b):
        if self.p is None:
            return _norm_q(a + b)
        return (a + b) % self.p

    def sub(self, a, b):
        if self.p is None:
            return _norm_q(a - b)
        return (a - b) % self.p

    def mul(self, a, b):
        if self.p is None:
            return _norm_q(a * b)
        return a * b % self.p

    def neg(self, a):
        if self.p is None:
            return -a
        return -a % self.p

    def div(self, a, b):
        if not b:
            raise ZeroDivisor("division by zero coefficient")
        if self.p is None:
            return _norm_q(Fraction(a) / b)
        return a * pow(b, -1, self.p) % self.p


QQ = Ring()


def GF(p: int) -> Ring:
    return Ring(p)


def grevlex_key(exp: Exponent):
    """Sort key: larger key means larger monomial in graded reverse-lex"""
    return (sum(exp), tuple(-e for e in reversed(exp)))


def monomials(nvars: int, degree: int) -> List[Exponent]:
    """All exponent vectors of the given total degree, largest grevlex first"""
    out: List[Exponent] = []

    def rec(prefix, left, slots):
        if slots == 1:
            out.append(prefix + (left,))
            return
        for e in range(left, -1, -1):
            rec(prefix + (e,), left - e, slots - 1)

    if nvars == 0:
        return [()] if degree == 0 else []
    rec((), degree, nvars)
    out.sort(key=grevlex_key, reverse=True)
    return out


class MultiPoly:
    """
    Sparse exact multivariate polynomial.

    terms maps exponent tuples (length nvars) to nonzero coefficients of ring.
    Values are treated as immutable once built.
    """

    __slots__ = ('ring', 'nvars', 'terms')

    def __init__(self, terms: Optional[Dict[Exponent, object]] = None, nvars: int = 0, ring: Ring = QQ):
        self.ring = ring
        self.nvars = nvars
        clean: Dict[Exponent, Coeff] = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != nvars:
                    raise ArityMismatch(f"exponent {exp} does not have {nvars} entries")
                if any(e < 0 for e in exp):
                    raise ValueError(f"negative exponent in {exp}")
                c = ring.coerce(c)
                if c:
                    clean[exp] = ring.add(clean[exp], c) if exp in clean else c
                    if not clean[exp]:
                        del clean[exp]
        self.terms = clean

    @classmethod
    def _raw(cls, terms: Dict[Exponent, Coeff], nvars: int, ring: Ring) -> 'MultiPoly':
        obj = cls.__new__(cls)
        obj.ring = ring
        obj.nvars = nvars
        obj.terms = terms
        return obj

    # construction helpers

    @classmethod
    def zero(cls, nvars: int, ring: Ring = QQ) -> 'MultiPoly':
        return cls._raw({}, nvars, ring)

    @classmethod
    def constant(cls, c, nvars: int, ring: Ring = QQ) -> 'MultiPoly':
        return cls({(0,) * nvars: c}, nvars, ring)

    @classmethod
    def one(cls, nvars: int, ring: Ring = QQ) -> 'MultiPoly':
        return cls.constant(1, nvars, ring)

    @classmethod
    def variable(cls, index: int, nvars: int, ring: Ring = QQ) -> 'MultiPoly':
        if not 0 <= index < nvars:
            raise IndexOutOfRange(f"variable {index} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[index] = 1
        return cls._raw({tuple(exp): 1}, nvars, ring)

    @classmethod
    def monomial(cls, exp: Exponent, coeff=1, ring: Ring = QQ) -> 'MultiPoly':
        return cls({tuple(exp): coeff}, len(exp), ring)

    @classmethod
    def linear_form(cls, coeffs: Sequence, ring: Ring = QQ) -> 'MultiPoly':
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            exp = [0] * n
            exp[i] = 1
            terms[tuple(exp)] = c
        return cls(terms, n, ring)

    # basic queries

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def min_degree(self) -> int:
        if not self.terms:
            return -1
        return min(sum(e) for e in self.terms)

    def degree_in(self, var: int) -> int:
        if not 0 <= var < self.nvars:
            raise IndexOutOfRange(f"variable {var} out of range")
        if not self.terms:
            return -1
        return max(e[var] for e in self.terms)

    def is_homogeneous(self) -> bool:
        degs = {sum(e) for e in self.terms}
        return len(degs) <= 1

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def coefficient(self, exp: Exponent) -> Coeff:
        return self.terms.get(tuple(exp), 0)

    def sorted_terms(self) -> List[Tuple[Exponent, Coeff]]:
        return sorted(self.terms.items(), key=lambda t: grevlex_key(t[0]), reverse=True)

    def leading_term(self) -> Tuple[Exponent, Coeff]:
        if not self.terms:
            raise ZeroForm("zero polynomial has no leading term")
        exp = max(self.terms, key=grevlex_key)
        return exp, self.terms[exp]

    def homogeneous_part(self, degree: int) -> 'MultiPoly':
        return MultiPoly._raw({e: c for e, c in self.terms.items() if sum(e) == degree}, self.nvars, self.ring)

    def depends_on(self, var: int) -> bool:
        return any(e[var] > 0 for e in self.terms)

    # arithmetic

    def _coerce_other(self, other) -> 'MultiPoly':
        if isinstance(other, MultiPoly):
            if other.ring != self.ring:
                raise RingMismatch(f"{self.ring} vs {other.ring}")
            if other.nvars != self.nvars:
                raise ArityMismatch(f"{self.nvars} vs {other.nvars} variables")
            return other
        return MultiPoly.constant(other, self.nvars, self.ring)

    def __add__(self, other):
        other = self._coerce_other(other)
        ring = self.ring
        out = dict(self.terms)
        for e, c in other.terms.items():
            if e in out:
                s = ring.add(out[e], c)
                if s:
                    out[e] = s
                else:
                    del out[e]
            else:
                out[e] = c
        return MultiPoly._raw(out, self.nvars, ring)

    __radd__ = __add__

    def __neg__(self):
        ring = self.ring
        return MultiPoly._raw({e: ring.neg(c) for e, c in self.terms.items()}, self.nvars, ring)

    def __sub__(self, other):
        return self + (-self._coerce_other(other))

    def __rsub__(self, other):
        return self._coerce_other(other) - self

    def scale(self, c) -> 'MultiPoly':
        ring = self.ring
        c = ring.coerce(c)
        if not c:
            return MultiPoly.zero(self.nvars, ring)
        return MultiPoly._raw({e: ring.mul(v, c) for e, v in self.terms.items()}, self.nvars, ring)

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return self.scale(other)
        other = self._coerce_other(other)
        ring = self.ring
        p = ring.p
        out: Dict[Exponent, Coeff] = {}
        a_items = list(self.terms.items())
        b_items = list(other.terms.items())
        if len(a_items) < len(b_items):
            a_items, b_items = b_items, a_items
        for e1, c1 in b_items:
            for e2, c2 in a_items:
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        if p is None:
            clean = {e: _norm_q(c) for e, c in out.items() if c}
        else:
            clean = {}
            for e, c in out.items():
                c %= p
                if c:
                    clean[e] = c
        return MultiPoly._raw(clean, self.nvars, ring)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = MultiPoly.one(self.nvars, self.ring)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def exact_div(self, other) -> 'MultiPoly':
        """
        Exact quotient q with self = q * other.

        Raises:
            ZeroDivisor: other is zero
            NotDivisible: the division leaves a remainder
        """
        other = self._coerce_other(other)
        if other.is_zero():
            raise ZeroDivisor("exact_div by the zero polynomial")
        ring = self.ring
        lead_e, lead_c = other.leading_term()
        rem = dict(self.terms)
        quot: Dict[Exponent, Coeff] = {}
        other_items = list(other.terms.items())
        while rem:
            e = max(rem, key=grevlex_key)
            c = rem[e]
            shift = tuple(a - b for a, b in zip(e, lead_e))
            if any(s < 0 for s in shift):
                raise NotDivisible("leading term of remainder is not divisible")
            q = ring.div(c, lead_c)
            quot[shift] = q
            for oe, oc in other_items:
                te = tuple(a + b for a, b in zip(shift, oe))
                v = ring.sub(rem.get(te, 0), ring.mul(q, oc))
                if v:
                    rem[te] = v
                else:
                    rem.pop(te, None)
        return MultiPoly._raw(quot, self.nvars, ring)

    def divides(self, other: 'MultiPoly') -> bool:
        """True when self divides other exactly"""
        try:
            other.exact_div(self)
            return True
        except NotDivisible:
            return False

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.ring == other.ring and self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (numbers.Integral, Fraction)):
            return self == MultiPoly.constant(other, self.nvars, self.ring)
        return NotImplemented

    def __hash__(self):
        return hash((self.ring, self.nvars, frozenset(self.terms.items())))

    # calculus and substitution

    def differentiate(self, var: int) -> 'MultiPoly':
        if not 0 <= var < self.nvars:
            raise IndexOutOfRange(f"cannot differentiate in variable {var} of {self.nvars}")
        ring = self.ring
        out = {}
        for e, c in self.terms.items():
            k = e[var]
            if k:
                ne = list(e)
                ne[var] = k - 1
                v = ring.mul(c, ring.coerce(k))
                if v:
                    out[tuple(ne)] = v
        return MultiPoly._raw(out, self.nvars, ring)

    def evaluate(self, point: Sequence) -> Coeff:
        if len(point) != self.nvars:
            raise ArityMismatch(f"point of length {len(point)} for {self.nvars} variables")
        ring = self.ring
        vals = [ring.coerce(v) for v in point]
        total = 0
        for e, c in self.terms.items():
            t = c
            for v, k in zip(vals, e):
                if k:
                    t = t * v ** k
            total += t
        if ring.p is None:
            return _norm_q(total)
        return total % ring.p

    def compose(self, images: Sequence['MultiPoly']) -> 'MultiPoly':
        """Substitute images[i] for variable i"""
        if len(images) != self.nvars:
            raise ArityMismatch(f"{len(images)} images for {self.nvars} variables")
        if not images:
            return self
        ring = images[0].ring
        n_out = images[0].nvars
        for img in images:
            if img.ring != ring or img.ring != self.ring:
                raise RingMismatch("images live in different rings")
            if img.nvars != n_out:
                raise ArityMismatch("images have different variable counts")
        cache: Dict[Tuple[int, int], MultiPoly] = {}

        def power(i, k):
            key = (i, k)
            if key not in cache:
                if k == 1:
                    cache[key] = images[i]
                elif k % 2 == 0:
                    h = power(i, k // 2)
                    cache[key] = h * h
                else:
                    cache[key] = power(i, k - 1) * images[i]
            return cache[key]

        result = MultiPoly.zero(n_out, ring)
        for e, c in self.sorted_terms():
            term = MultiPoly.constant(c, n_out, ring)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            result = result + term
        return result

    # normalization and rings

    def primitive(self) -> 'MultiPoly':
        """Integer coefficients with gcd 1 and positive leading coefficient (QQ only)"""
        if self.ring.p is not None:
            if not self.terms:
                return self
            return self.scale(self.ring.div(1, self.leading_term()[1]))
        if not self.terms:
            return self
        den = 1
        for c in self.terms.values():
            if isinstance(c, Fraction):
                den = den * c.denominator // gcd(den, c.denominator)
        ints = {e: int(c * den) for e, c in self.terms.items()}
        g = 0
        for v in ints.values():
            g = gcd(g, v)
        lead = max(ints, key=grevlex_key)
        if ints[lead] < 0:
            g = -g
        return MultiPoly._raw({e: v // g for e, v in ints.items()}, self.nvars, QQ)

    def monic(self) -> 'MultiPoly':
        if not self.terms:
            return self
        return self.scale(self.ring.div(1, self.leading_term()[1]))

    def mod_p(self, p: int) -> 'MultiPoly':
        if self.ring.p is not None:
            raise RingMismatch("mod_p expects a polynomial over QQ")
        ring = GF(p)
        return MultiPoly({e: c for e, c in self.terms.items()}, self.nvars, ring)

    def to_qq(self) -> 'MultiPoly':
        """Lift F_p coefficients to their representatives in [0, p)"""
        return MultiPoly(dict(self.terms), self.nvars, QQ)

    def __repr__(self):
        return format_poly(self)


def compose(f: MultiPoly, images: Sequence[MultiPoly]) -> MultiPoly:
    return f.compose(images)


def differentiate(f: MultiPoly, var: int) -> MultiPoly:
    return f.differentiate(var)


def mod_p(f: MultiPoly, p: int) -> MultiPoly:
    if not is_prime(p):
        raise BadPrime(f"{p} is not prime")
    return f.mod_p(p)


def ring_ops(a: MultiPoly, b: MultiPoly, op: str, k: int = 0) -> MultiPoly:
    """Dispatch for add, mul, pow and exact_div"""
    if not isinstance(b, MultiPoly) or a.ring != b.ring:
        raise RingMismatch("operands must share a ring")
    if a.nvars != b.nvars:
        raise ArityMismatch("operands must share the variable count")
    if op == 'add':
        return a + b
    if op == 'mul':
        return a * b
    if op == 'pow':
        return a ** k
    if op == 'exact_div':
        return a.exact_div(b)
    raise ValueError(f"unknown operation {op}")


def partial(f: MultiPoly, alpha: Sequence[int]) -> MultiPoly:
    """Mixed partial derivative with multi-index alpha"""
    out = f
    for var, k in enumerate(alpha):
        for _ in range(k):
            out = out.differentiate(var)
    return out


# polynomial literals

_TERM_RE = re.compile(r'([+-]?)([^+-]+)')
_VAR_RE = re.compile(r'^x(\d+)(?:\^(\d+))?$')


def parse_coefficient(text: str) -> Fraction:
    try:
        if '/' in text:
            num, den = text.split('/')
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(f"bad coefficient {text!r}: {e}")


def parse_poly(text: str, nvars: int, ring: Ring = QQ) -> MultiPoly:
    """
    Parse a literal such as "3/2*x0^2*x1 - x2 + 5".

    Args:
        text: polynomial literal (grammar in POLYNOMIAL_FORMAT.md)
        nvars: number of variables x0..x{nvars-1}
        ring: coefficient ring

    Returns:
        MultiPoly
    """
    s = text.replace(' ', '')
    if not s:
        raise ParseError("empty polynomial literal")
    if s == '0':
        return MultiPoly.zero(nvars, ring)
    pos = 0
    terms: Dict[Exponent, Fraction] = {}
    for m in _TERM_RE.finditer(s):
        if m.start() != pos:
            raise ParseError(f"unexpected text at {pos} in {text!r}")
        pos = m.end()
        sign, body = m.group(1), m.group(2)
        coeff = Fraction(-1 if sign == '-' else 1)
        exp = [0] * nvars
        for factor in body.split('*'):
            if not factor:
                raise ParseError(f"empty factor in {text!r}")
            vm = _VAR_RE.match(factor)
            if vm:
                idx = int(vm.group(1))
                if idx >= nvars:
                    raise ParseError(f"variable x{idx} out of range for {nvars} variables")
                exp[idx] += int(vm.group(2) or 1)
            else:
                coeff *= parse_coefficient(factor)
        key = tuple(exp)
        terms[key] = terms.get(key, 0) + coeff
    if pos != len(s):
        raise ParseError(f"trailing text in {text!r}")
    return MultiPoly(terms, nvars, ring)


def format_coefficient(c: Coeff) -> str:
    if isinstance(c, Fraction):
        return f"{c.numerator}/{c.denominator}"
    return str(c)


def format_poly(f: MultiPoly) -> str:
    if f.is_zero():
        return '0'
    parts = []
    for exp, c in f.sorted_terms():
        factors = []
        for i, k in enumerate(exp):
            if k == 1:
                factors.append(f"x{i}")
            elif k > 1:
                factors.append(f"x{i}^{k}")
        neg = f.ring.p is None and c < 0
        mag = -c if neg else c
        if factors and mag == 1:
            body = '*'.join(factors)
        else:
            body = '*'.join([format_coefficient(mag)] + factors)
        parts.append(('-' if neg else '+', body))
    first_sign, first_body = parts[0]
    out = ('-' if first_sign == '-' else '') + first_body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


# linear algebra

class RatMatrix:
    """Dense rectangular matrix of rationals"""

    def __init__(self, entries: Sequence[Sequence]):
        rows = [[QQ.coerce(x) for x in row] for row in entries]
        if not rows or not rows[0]:
            raise ValueError("matrix dimensions must be positive")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("matrix is not rectangular")
        self.entries = rows
        self.rows = len(rows)
        self.cols = width

    @classmethod
    def identity(cls, n: int) -> 'RatMatrix':
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> 'RatMatrix':
        return cls([[0] * cols for _ in range(rows)])

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    def transpose(self) -> 'RatMatrix':
        return RatMatrix([[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)])

    def is_symmetric(self) -> bool:
        return self.rows == self.cols and all(
            self.entries[i][j] == self.entries[j][i] for i in range(self.rows) for j in range(i))

    def apply(self, vec: Sequence) -> List[Coeff]:
        if len(vec) != self.cols:
            raise ArityMismatch("vector length does not match matrix")
        return [_norm_q(sum(Fraction(a) * b for a, b in zip(row, vec))) for row in self.entries]

    def __matmul__(self, other: 'RatMatrix') -> 'RatMatrix':
        if self.cols != other.rows:
            raise ArityMismatch("incompatible matrix shapes")
        return RatMatrix([[sum(Fraction(self.entries[i][k]) * other.entries[k][j] for k in range(self.cols))
                           for j in range(other.cols)] for i in range(self.rows)])

    def __eq__(self, other):
        return isinstance(other, RatMatrix) and self.entries == other.entries

    def to_json(self) -> List[List[str]]:
        return [[format_coefficient(_norm_q(Fraction(x))) for x in row] for row in self.entries]

    def __repr__(self):
        return f"RatMatrix({self.to_json()})"


SparseRow = Dict[int, Coeff]

def _integer_row(row: SparseRow) -> Dict[int, int]:
    den = 1
    for c in row.values():
        if isinstance(c, Fraction):
            den = den * c.denominator // gcd(den, c.denominator)
    out = {j: int(c * den) for j, c in row.items() if c}
    g = 0
    for v in out.values():
        g = gcd(g, v)
        if g == 1:
            break
    if g > 1:
        out = {j: v // g for j, v in out.items()}
    return out


# sympy adapters

def sympy_domain(ring: Ring):
    """The sympy ground domain matching a Ring"""
    return sp.QQ if ring.p is None else sp.GF(ring.p)


def _to_domain(c: Coeff, K, ring: Ring):
    if ring.p is None:
        c = Fraction(c)
        return K(c.numerator, c.denominator)
    return K(int(c))


def _from_domain(c, ring: Ring) -> Coeff:
    if ring.p is None:
        return _norm_q(Fraction(int(c.numerator), int(c.denominator)))
    return int(c) % ring.p


def sympy_gens(nvars: int) -> Tuple[sp.Symbol, ...]:
    return tuple(sp.symbols(f'x0:{nvars}'))


def to_sympy_poly(f: MultiPoly, gens: Optional[Sequence[sp.Symbol]] = None) -> sp.Poly:
    K = sympy_domain(f.ring)
    rep = {e: _to_domain(c, K, f.ring) for e, c in f.terms.items()}
    return sp.Poly.from_dict(rep, *(gens or sympy_gens(f.nvars)), domain=K)


def from_sympy_poly(P: sp.Poly, ring: Ring, nvars: Optional[int] = None,
                    positions: Optional[Sequence[int]] = None) -> MultiPoly:
    """
    MultiPoly from a sympy Poly over the matching domain.

    positions maps the Poly's generators to variable indices of the result
    (default: the first len(gens) variables).
    """
    n = nvars if nvars is not None else len(P.gens)
    slots = list(positions) if positions is not None else list(range(len(P.gens)))
    terms = {}
    for monom, c in P.as_dict(native=True).items():
        exp = [0] * n
        for slot, k in zip(slots, monom):
            exp[slot] = k
        terms[tuple(exp)] = _from_domain(c, ring)
    return MultiPoly(terms, n, ring)


def _domain_matrix(rows: Sequence[SparseRow], ncols: int, ring: Ring = QQ) -> DomainMatrix:
    K = sympy_domain(ring)
    data = {}
    for i, row in enumerate(rows):
        entries = {j: _to_domain(ring.coerce(c), K, ring) for j, c in row.items() if c}
        if entries:
            data[i] = entries
    return DomainMatrix(data, (len(rows), ncols), K)


def _rows_of(M) -> Tuple[List[SparseRow], int]:
    if isinstance(M, RatMatrix):
        dense = M.entries
        ncols = M.cols
    else:
        dense = [list(r) for r in M]
        ncols = len(dense[0]) if dense else 0
    return [{j: c for j, c in enumerate(r) if c} for r in dense], ncols


def _echelon(rows: Sequence[SparseRow], ncols: int, ring: Ring = QQ) -> Tuple[List[SparseRow], Tuple[int, ...]]:
    """Reduced row echelon rows (pivot entries 1) and their pivot columns"""
    live = [r for r in rows if any(r.values())]
    if not live:
        return [], ()
    reduced, pivots = _domain_matrix(live, ncols, ring).rref()
    dense = reduced.to_list()
    echelon = []
    for k in range(len(pivots)):
        row = {j: _from_domain(c, ring) for j, c in enumerate(dense[k])}
        echelon.append({j: c for j, c in row.items() if c})
    return echelon, tuple(pivots)


def nullspace(M, ncols: Optional[int] = None) -> List[List[Coeff]]:
    """
    Right null space basis of M, with integer entries.

    Args:
        M: RatMatrix, list of dense rows, or list of sparse dict rows (ncols required)

    Returns:
        list of vectors, one per free column in increasing column order
    """
    if ncols is not None:
        rows = list(M)
    else:
        rows, ncols = _rows_of(M)
    echelon, pivots = _echelon(rows, ncols)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec: Dict[int, Coeff] = {free: 1}
        for row, pc in zip(echelon, pivots):
            if free in row:
                vec[pc] = -Fraction(row[free])
        ints = _integer_row(vec)
        basis.append([ints.get(j, 0) for j in range(ncols)])
    return basis


def rank(M, ncols: Optional[int] = None) -> int:
    if ncols is not None:
        rows = list(M)
    else:
        rows, ncols = _rows_of(M)
    return len(_echelon(rows, ncols)[1])


def row_basis(rows: Iterable[SparseRow], ncols: int) -> List[Dict[int, int]]:
    """Reduced echelon basis of the row space, ordered by pivot column"""
    echelon, _ = _echelon(list(rows), ncols)
    return [_integer_row(r) for r in echelon]


def solve_span(vectors: Sequence[SparseRow], target: SparseRow, ncols: int) -> Optional[List[Coeff]]:
    """
    Coefficients c with sum(c[i] * vectors[i]) == target.

    Returns:
        list of rationals, or None when target is outside the span
    """
    k = len(vectors)
    columns: Dict[int, Dict[int, Coeff]] = {}
    for i, vec in enumerate(vectors):
        for j, c in vec.items():
            if c:
                columns.setdefault(j, {})[i] = c
    for j, c in target.items():
        if c:
            columns.setdefault(j, {})[k] = -QQ.coerce(c)
    rows = [columns[j] for j in sorted(columns)]
    if k in _echelon(rows, k + 1)[1]:
        return None
    for vec in nullspace(rows, ncols=k + 1):
        if vec[k]:
            return [_norm_q(Fraction(v, vec[k])) for v in vec[:k]]
    return None


def det_bareiss(matrix: Sequence[Sequence]):
    """
    Determinant by fraction-free (Bareiss) elimination.

    Entries are integers, rationals or MultiPoly values sharing one ring.
    """
    n = len(matrix)
    if n == 0:
        return 1
    template = next((x for row in matrix for x in row if isinstance(x, MultiPoly)), None)
    if template is None:
        M = sp.Matrix([[sp.Rational(Fraction(x).numerator, Fraction(x).denominator) for x in row]
                       for row in matrix])
        d = M.det(method='bareiss')
        return _norm_q(Fraction(int(d.p), int(d.q)))
    ring = template.ring
    gens = sympy_gens(template.nvars)
    ground = sympy_domain(ring)
    K = ground.poly_ring(*gens)
    rows = []
    for row in matrix:
        cells = []
        for x in row:
            f = x if isinstance(x, MultiPoly) else MultiPoly.constant(x, template.nvars, ring)
            cells.append(K.ring.from_dict({e: _to_domain(c, ground, ring) for e, c in f.terms.items()}))
        rows.append(cells)
    d = DomainMatrix(rows, (n, n), K).det()
    return MultiPoly({e: _from_domain(c, ring) for e, c in d.items()}, template.nvars, ring)


def fp_det(matrix: Sequence[Sequence[int]], p: int) -> int:
    """Determinant over F_p of an integer matrix"""
    ring = GF(p)
    n = len(matrix)
    M = _domain_matrix([{j: c for j, c in enumerate(row)} for row in matrix], n, ring)
    return _from_domain(M.det(), ring)


# binary forms

def _check_binary(f: MultiPoly) -> None:
    if f.nvars != 2:
        raise ArityMismatch("binary forms have exactly two variables")
    if not f.is_homogeneous():
        raise ValueError(f"{f} is not homogeneous")


def binary_form(coeffs: Sequence, ring: Ring = QQ) -> MultiPoly:
    """Binary form from coefficients of lambda^d, lambda^(d-1)*mu, ..., mu^d"""
    d = len(coeffs) - 1
    return MultiPoly({(d - i, i): c for i, c in enumerate(coeffs)}, 2, ring)


def _dehomogenize(f: MultiPoly) -> Tuple[int, sp.Poly]:
    """(e, g) with f = mu^e * g(lambda, mu) homogenized, g given as g(lambda, 1)"""
    _check_binary(f)
    lam, mu = sympy_gens(2)
    e = f.total_degree() - max(ex[0] for ex in f.terms)
    return e, to_sympy_poly(f, (lam, mu)).eval(mu, 1)


def _homogenize(u: sp.Poly, mu_power: int, ring: Ring) -> MultiPoly:
    deg = max(u.degree(), 0)
    return MultiPoly({(k, deg - k + mu_power): _from_domain(c, ring)
                      for (k,), c in u.as_dict(native=True).items()}, 2, ring)


def binary_gcd(forms: Sequence[MultiPoly]) -> MultiPoly:
    """
    Gcd of binary forms, monic in its highest power of lambda; the root
    (1:0) is tracked through the mu-content.

    Raises:
        AllZero: every input is zero
    """
    live = [f for f in forms if not f.is_zero()]
    if not live:
        raise AllZero("binary_gcd of zero forms")
    ring = live[0].ring
    parts = [_dehomogenize(f) for f in live]
    mu = min(e for e, _ in parts)
    g = sp.gcd_list([u for _, u in parts], *parts[0][1].gens)
    return _homogenize(sp.Poly(g, *parts[0][1].gens, domain=sympy_domain(ring)).monic(), mu, ring)


def binary_factor(f: MultiPoly) -> List[Tuple[MultiPoly, int]]:
    """
    Factor a binary form of degree <= 4 over QQ.

    Returns:
        list of (irreducible primitive binary form, multiplicity)

    Raises:
        ZeroForm, DegreeTooLarge
    """
    if f.is_zero():
        raise ZeroForm("cannot factor the zero form")
    if f.ring != QQ:
        raise RingMismatch("binary_factor works over QQ")
    d = f.total_degree()
    if d > 4:
        raise DegreeTooLarge(f"degree {d} exceeds 4")
    e, u = _dehomogenize(f)
    out: List[Tuple[MultiPoly, int]] = []
    if e:
        out.append((MultiPoly({(0, 1): 1}, 2, QQ), e))
    _, factors = u.factor_list()
    for irr, mult in factors:
        out.append((_homogenize(irr, 0, QQ).primitive(), mult))
    out.sort(key=lambda t: (t[0].total_degree(), format_poly(t[0])))
    return out


def multiplicity_of(factor: MultiPoly, f: MultiPoly) -> int:
    """Largest k with factor^k dividing f (f nonzero)"""
    if f.is_zero():
        raise ZeroForm("multiplicity in the zero form is unbounded")
    k = 0
    cur = f
    while cur.total_degree() >= factor.total_degree():
        try:
            cur = cur.exact_div(factor)
        except NotDivisible:
            break
        k += 1
    return k


# resultants

def resultant_eliminate(f: MultiPoly, g: MultiPoly, var: int) -> MultiPoly:
    """Resultant of f and g with respect to variable var (sympy's sign convention)"""
    if f.ring != g.ring:
        raise RingMismatch("resultant operands live in different rings")
    if f.nvars != g.nvars:
        raise ArityMismatch("resultant operands differ in variable count")
    if not 0 <= var < f.nvars:
        raise IndexOutOfRange(f"variable {var} out of range")
    if not f.depends_on(var) or not g.depends_on(var):
        raise VarAbsent(f"both operands must depend on x{var}")
    gens = sympy_gens(f.nvars)
    rest = [i for i in range(f.nvars) if i != var]
    order = [gens[var]] + [gens[i] for i in rest]
    F = to_sympy_poly(f, gens).reorder(*order)
    G = to_sympy_poly(g, gens).reorder(*order)
    logger.debug(f"resultant in x{var} of degrees {f.degree_in(var)} and {g.degree_in(var)}")
    res = F.resultant(G)
    if not isinstance(res, sp.Poly):
        value = sympy_domain(f.ring).from_sympy(sp.sympify(res))
        return MultiPoly.constant(_from_domain(value, f.ring), f.nvars, f.ring)
    return from_sympy_poly(res, f.ring, f.nvars, rest)


def fp_resultant_in_var(f: MultiPoly, g: MultiPoly) -> sp.Poly:
    """
    Res over the second variable of f(u0, u1, 1) and g(u0, u1, 1), as a
    univariate Poly in x0 over GF(p); computed by univariate resultants at
    deg f * deg g + 1 points and interpolation.

    Both forms need a constant nonzero coefficient of u1^deg, so that the
    specializations keep their degree in u1.
    """
    if f.ring != g.ring or f.ring.p is None:
        raise RingMismatch("fp_resultant_in_var expects two forms over one prime field")
    if f.nvars != 3 or g.nvars != 3:
        raise ArityMismatch("fp_resultant_in_var expects ternary forms")
    for h in (f, g):
        if h.is_zero() or h.degree_in(1) != h.total_degree():
            raise ValueError("the coefficient of the top power of x1 must be a nonzero constant")
    p = f.ring.p
    K = sympy_domain(f.ring)
    x0, x1, x2 = sympy_gens(3)
    F = to_sympy_poly(f, (x0, x1, x2))
    G = to_sympy_poly(g, (x0, x1, x2))
    xs = list(range(1, f.total_degree() * g.total_degree() + 2))
    ys = []
    for a in xs:
        Fa = F.eval({x0: a, x2: 1})
        Ga = G.eval({x0: a, x2: 1})
        ys.append(int(Fa.resultant(Ga)) % p)
    n = len(xs)
    V = DomainMatrix([[K(pow(a, j, p)) for j in range(n)] for a in xs], (n, n), K)
    coeffs = V.lu_solve(DomainMatrix([[K(y)] for y in ys], (n, 1), K)).to_list()
    return sp.Poly.from_list([c[0] for c in reversed(coeffs)], x0, domain=K)
