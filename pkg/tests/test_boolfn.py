from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from bfclab import boolfn
from bfclab.boolfn import (
    ParseError,
    RealTable,
    TruthTable,
    anf,
    builtin,
    chi,
    format_hex,
    fourier,
    mon,
    parse_hex,
    shift,
    substitute,
    symmetrize,
)
from oracles import anf_direct, fourier_direct, popcount

ALL3 = [TruthTable(n, b) for n in (1, 2, 3) for b in range(1 << (1 << n))]


def tables(max_n=5):
    return st.integers(1, max_n).flatmap(
        lambda n: st.integers(0, (1 << (1 << n)) - 1).map(lambda b: TruthTable(n, b)))


def real_tables(max_n=6):
    frac = st.fractions(min_value=-5, max_value=5, max_denominator=12)
    return st.integers(1, max_n).flatmap(
        lambda n: st.lists(frac, min_size=1 << n, max_size=1 << n).map(lambda v: RealTable(n, tuple(v))))


# --- representation -------------------------------------------------------------

def test_bit_convention():
    f = builtin("AND", 2)
    assert f.bits == 0b1000  # only x = (1,1), index 3, is true
    assert [f(x) for x in range(4)] == [1, 1, 1, -1]
    assert boolfn.bits_of(1, 3) == (1, 0, 0)  # x_1 is the least significant bit


def test_table_rejects_bad_bits():
    with pytest.raises(ValueError):
        TruthTable(1, 0b100)
    with pytest.raises(ValueError):
        TruthTable(21, 0)


def test_from_values_round_trip():
    f = TruthTable.from_values([1, -1, -1, 1])
    assert f == builtin("XOR", 2)
    assert list(f.values()) == [1, -1, -1, 1]


@pytest.mark.parametrize("name,n,expected", [
    ("AND", 3, [1] * 7 + [-1]),
    ("OR", 2, [1, -1, -1, -1]),
    ("XOR", 3, [1, -1, -1, 1, -1, 1, 1, -1]),
    ("MAJ", 3, [1, 1, 1, -1, 1, -1, -1, -1]),
    ("EQ", 2, [-1, 1, 1, -1]),
])
def test_builtins(name, n, expected):
    assert list(builtin(name, n).values()) == expected


def test_unknown_builtin():
    with pytest.raises(ParseError):
        builtin("NAND", 2)


# --- text format ------------------------------------------------------------

def test_hex_format():
    assert format_hex(builtin("AND", 2)) == "n=2 hex=8"
    assert format_hex(builtin("XOR", 3)) == "n=3 hex=69"  # 0x96, low digit first
    # least significant digit first
    assert parse_hex("n=3 hex=01") == TruthTable(3, 0x10)


@given(tables(6))
def test_hex_round_trip(f):
    assert parse_hex(format_hex(f)) == f


@pytest.mark.parametrize("text", ["n=2 hex=zz", "n=2 hex=88", "n=2", "hex=8", "n=x hex=8", "n=0 hex=1"])
def test_malformed_hex(text):
    with pytest.raises(ParseError):
        parse_hex(text)


# --- Fourier ------------------------------------------------------------------

def test_fourier_examples():
    assert fourier(TruthTable.constant(2)).coeffs == (1, 0, 0, 0)
    assert fourier(builtin("XOR", 2)).coeffs == (0, 0, 0, 1)
    assert fourier(builtin("AND", 2)).coeffs == (Fraction(1, 2), Fraction(1, 2),
                                                 Fraction(1, 2), Fraction(-1, 2))


@pytest.mark.parametrize("f", ALL3, ids=format_hex)
def test_fourier_against_direct_sum(f):
    spec = fourier(f)
    assert list(spec.coeffs) == fourier_direct(f.values().tolist(), f.n)
    assert spec.inverse() == f.real()
    assert sum(c * c for c in spec.coeffs) == 1  # Parseval


@given(real_tables())
def test_fourier_real_round_trip(phi):
    spec = fourier(phi)
    assert spec.inverse() == phi
    # max |fhat| <= average |phi|
    assert spec.max_abs() <= phi.l1() / 2 ** phi.n


# --- ANF ----------------------------------------------------------------------

def test_anf_examples():
    a = anf(builtin("AND", 2))
    assert dict(a.terms) == {0: 1, 3: -2} and a.mon == 2 and a.degree == 2
    x = anf(builtin("XOR", 2))
    assert dict(x.terms) == {0: 1, 1: -2, 2: -2, 3: 4} and x.mon == 4 and x.degree == 2
    c = anf(TruthTable.constant(2, -1))
    assert dict(c.terms) == {0: -1} and c.mon == 1 and c.degree == 0
    assert str(x) == "1 - 2*x1 - 2*x2 + 4*x1*x2"


@pytest.mark.parametrize("f", ALL3, ids=format_hex)
def test_anf_against_inclusion_exclusion(f):
    vals = f.values().tolist()
    poly = anf(f)
    direct = anf_direct(vals, f.n)
    assert {s: c for s, c in enumerate(direct) if c} == dict(poly.terms)
    assert all(poly(x) == vals[x] for x in range(f.size))
    assert poly.to_table() == f.real()
    assert mon(f) == poly.mon
    # degree coincidence between the two bases
    assert fourier(f).degree == poly.degree


@given(tables(8))
def test_fast_mon_path(f):
    assert mon(f) == anf(f.real()).mon


@given(real_tables(5))
def test_anf_real_round_trip(phi):
    assert anf(phi).to_table() == phi


# --- shifts and substitution ----------------------------------------------------

def test_shift_examples():
    f = builtin("AND", 2)
    assert shift(f, 0) == f
    assert [shift(f, 3)(x) for x in range(4)] == [-1, 1, 1, 1]


@pytest.mark.parametrize("f", [g for g in ALL3 if g.n <= 3], ids=format_hex)
def test_shift_covariance(f):
    spec = fourier(f)
    for z in range(f.size):
        g = shift(f, z)
        assert shift(g, z) == f
        assert all(fourier(g)[s] == chi(s, z) * spec[s] for s in range(f.size))


def test_shift_real_table():
    phi = RealTable.of([1, 2, 3, 4])
    assert shift(phi, 1).values == (2, 1, 4, 3)


def test_substitute_examples():
    f = builtin("AND", 2)
    assert substitute(f, (0, 1), 2) == f
    g = substitute(f, (0, 0), 1)
    assert [g(0), g(1)] == [1, -1]
    h = substitute(f, (0, "1"), 1)
    assert [h(0), h(1)] == [1, -1]
    assert substitute(f, ("0", 0), 1).is_constant()
    with pytest.raises(ValueError):
        substitute(f, (0, 1), 0)
    with pytest.raises(ValueError):
        substitute(f, (0,), 1)


@given(tables(4), st.data())
def test_substitute_matches_pointwise(f, data):
    m = data.draw(st.integers(1, 4))
    sigma = tuple(data.draw(st.sampled_from(list(range(m)) + ["0", "1"])) for _ in range(f.n))
    g = substitute(f, sigma, m)
    for x in range(1 << m):
        y = sum((int(s) if isinstance(s, str) else (x >> s) & 1) << j for j, s in enumerate(sigma))
        assert g(x) == f(y)


def test_restrict_drops_variable():
    f = builtin("OR", 2)
    assert boolfn.restrict(f, 0, 0) == TruthTable(1, 0b10)
    assert boolfn.restrict(f, 0, 1).is_constant()


# --- symmetrization ---------------------------------------------------------------

def test_symmetrize_examples():
    s = symmetrize(RealTable.from_function(2, lambda x: chi(1, x)))
    assert s.profile == (1, 0, -1) and s.coeffs == (1, -1) and s.degree == 1
    c = symmetrize(RealTable.of([Fraction(3, 7)] * 8))
    assert c.profile == (Fraction(3, 7),) * 4 and c.degree == 0
    p = symmetrize(builtin("XOR", 2))
    assert p.profile == (1, -1, 1) and p.degree == 2


@given(st.integers(1, 6), st.integers(0, 3), st.data())
def test_symmetrization_degree_bound(n, r, data):
    r = min(r, n)
    low = [s for s in range(1 << n) if popcount(s) <= r]
    coef = {s: data.draw(st.fractions(-3, 3, max_denominator=5)) for s in low}
    phi = RealTable.from_function(n, lambda x: sum(c * chi(s, x) for s, c in coef.items()))
    sym = symmetrize(phi)
    assert sym.degree <= r
    assert all(sym(t) == sym.profile[t] for t in range(n + 1))


def test_all_functions_count():
    assert sum(1 for _ in boolfn.all_functions(2)) == 16
