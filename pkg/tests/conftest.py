"""Shared fixtures: sympy conversion, seeded random forms, fixture directories."""
import shutil
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from config import Config
from exactalg import QQ, MultiPoly

SEED = 20240607


def sym_vars(n):
    return sp.symbols(f'x0:{n}')


def to_sympy(f: MultiPoly):
    xs = sym_vars(f.nvars)
    expr = sp.Integer(0)
    for exp, c in f.terms.items():
        term = sp.Rational(Fraction(c).numerator, Fraction(c).denominator)
        for x, k in zip(xs, exp):
            term *= x ** k
        expr += term
    return sp.expand(expr)


def from_sympy(expr, nvars: int) -> MultiPoly:
    xs = sym_vars(nvars)
    poly = sp.Poly(sp.expand(expr), *xs)
    terms = {}
    for exp, c in poly.terms():
        c = sp.Rational(c)
        terms[exp] = Fraction(int(c.p), int(c.q))
    return MultiPoly(terms, nvars, QQ)


def random_form(rng, nvars: int, degree: int, nterms: int = 4, height: int = 5) -> MultiPoly:
    """Homogeneous form with a few nonzero small integer terms"""
    terms = {}
    while not terms:
        for _ in range(nterms):
            cuts = sorted(int(v) for v in rng.integers(0, degree + 1, size=nvars - 1))
            exp = tuple(b - a for a, b in zip([0] + cuts, cuts + [degree]))
            c = int(rng.integers(-height, height + 1))
            if c:
                terms[exp] = terms.get(exp, 0) + c
        terms = {e: c for e, c in terms.items() if c}
    return MultiPoly(terms, nvars, QQ)


def random_poly(rng, nvars: int, maxdeg: int, nterms: int = 4, height: int = 5) -> MultiPoly:
    """Inhomogeneous polynomial with small integer coefficients"""
    terms = {}
    for _ in range(nterms):
        exp = tuple(int(v) for v in rng.integers(0, maxdeg + 1, size=nvars))
        terms[exp] = terms.get(exp, 0) + int(rng.integers(-height, height + 1))
    return MultiPoly(terms, nvars, QQ)


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def tmp_fixtures(tmp_path, monkeypatch):
    """A writable copy of the fixture directory, installed as Config.FIXTURES_DIR"""
    target = tmp_path / 'fixtures'
    shutil.copytree(Config.FIXTURES_DIR, target)
    monkeypatch.setattr(Config, 'FIXTURES_DIR', str(target))
    return target
