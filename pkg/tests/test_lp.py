from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from bfclab.lp import (
    LPProblem,
    Status,
    check_geq_certificate,
    farkas_geq_form,
    solve,
    standardize,
    verify_farkas,
)

F = Fraction


def test_optimal_small():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    p = LPProblem(2, objective={0: F(1), 1: F(1)})
    p.add_row({0: 1, 1: 2}, "<=", 4)
    p.add_row({0: 3, 1: 1}, "<=", 6)
    r = solve(p)
    assert r.status is Status.OPTIMAL
    assert r.x == [F(8, 5), F(6, 5)] and r.value == F(14, 5)


def test_infeasible_with_certificate():
    p = LPProblem(1)
    p.add_row({0: 1}, ">=", 2)
    p.add_row({0: 1}, "<=", 1)
    r = solve(p)
    assert r.status is Status.INFEASIBLE
    sf = standardize(p)
    assert verify_farkas(sf, r.farkas)
    M, c, w = farkas_geq_form(sf, r.farkas)
    assert check_geq_certificate(M, c, w)


def test_unbounded():
    p = LPProblem(2, objective={0: F(1)})
    p.add_row({0: 1, 1: -1}, "<=", 1)
    assert solve(p).status is Status.UNBOUNDED


def test_free_and_bounded_variables():
    # min x subject to x >= -3 via row, x free; y in [1, 2] maximized jointly
    p = LPProblem(2, objective={0: F(-1), 1: F(1)}, lower=[None, F(1)], upper=[None, F(2)])
    p.add_row({0: 1}, ">=", -3)
    r = solve(p)
    assert r.status is Status.OPTIMAL and r.x == [F(-3), F(2)] and r.value == 5


def test_equality_rows_and_redundancy():
    p = LPProblem(2, objective={0: F(1)}, maximize=False)
    p.add_row({0: 1, 1: 1}, "=", 1)
    p.add_row({0: 2, 1: 2}, "=", 2)  # redundant copy
    r = solve(p)
    assert r.status is Status.OPTIMAL and r.value == 0


def test_bad_row():
    p = LPProblem(1)
    with pytest.raises(ValueError):
        p.add_row({0: 1}, "<", 0)
    with pytest.raises(ValueError):
        p.add_row({3: 1}, "<=", 0)


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_matches_scipy(nv, nr, data):
    ints = st.integers(-4, 4)
    c = [data.draw(ints) for _ in range(nv)]
    A = [[data.draw(ints) for _ in range(nv)] for _ in range(nr)]
    b = [data.draw(ints) for _ in range(nr)]
    # bound the box so scipy and the exact solver see the same bounded problem
    p = LPProblem(nv, objective={j: F(v) for j, v in enumerate(c)},
                  lower=[F(-5)] * nv, upper=[F(5)] * nv)
    for row, rhs in zip(A, b):
        p.add_row({j: F(v) for j, v in enumerate(row)}, "<=", rhs)
    r = solve(p)
    ref = linprog([-v for v in c], A_ub=A, b_ub=b, bounds=[(-5, 5)] * nv, method="highs")
    if ref.status == 2:
        assert r.status is Status.INFEASIBLE
        sf = standardize(p)
        assert verify_farkas(sf, r.farkas)
    else:
        assert ref.status == 0
        assert r.status is Status.OPTIMAL
        assert p.is_feasible(r.x)
        assert abs(float(r.value) - (-ref.fun)) < 1e-7
