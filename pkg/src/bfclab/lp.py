"""Exact rational linear programming: two-phase tableau simplex with Bland's rule.

Problems are stated in natural form (bounded variables, <=/=/>= rows, a linear
objective) and standardized to ``A'x' = b', x' >= 0, b' >= 0`` internally.
Infeasibility is reported together with a Farkas vector that is re-verified
before the result is returned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

Row = Mapping[int, Fraction]


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class CertificateError(RuntimeError):
    """A claimed infeasibility certificate failed re-verification."""


@dataclass
class LPProblem:
    """maximize (or minimize) c.x subject to rows and variable bounds.

    Bounds default to ``[0, inf)``; ``None`` means unbounded on that side.
    """

    n_vars: int
    objective: dict[int, Fraction] = field(default_factory=dict)
    maximize: bool = True
    rows: list[tuple[dict[int, Fraction], str, Fraction]] = field(default_factory=list)
    lower: list[Optional[Fraction]] = field(default_factory=list)
    upper: list[Optional[Fraction]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.lower:
            self.lower = [Fraction(0)] * self.n_vars
        if not self.upper:
            self.upper = [None] * self.n_vars
        if len(self.lower) != self.n_vars or len(self.upper) != self.n_vars:
            raise ValueError("bounds must have one entry per variable")

    def add_var(self, lower: Optional[Fraction] = Fraction(0),
                upper: Optional[Fraction] = None) -> int:
        self.lower.append(None if lower is None else Fraction(lower))
        self.upper.append(None if upper is None else Fraction(upper))
        self.n_vars += 1
        return self.n_vars - 1

    def add_row(self, coeffs: Row, sense: str, rhs) -> None:
        if sense not in ("<=", "=", ">="):
            raise ValueError(f"bad constraint sense {sense!r}")
        for j in coeffs:
            if not 0 <= j < self.n_vars:
                raise ValueError(f"row references unknown variable {j}")
        self.rows.append(({j: Fraction(c) for j, c in coeffs.items() if c}, sense, Fraction(rhs)))

    def value(self, x: Sequence[Fraction]) -> Fraction:
        return sum((c * x[j] for j, c in self.objective.items()), Fraction(0))

    def is_feasible(self, x: Sequence[Fraction]) -> bool:
        for j, v in enumerate(x):
            if self.lower[j] is not None and v < self.lower[j]:
                return False
            if self.upper[j] is not None and v > self.upper[j]:
                return False
        for coeffs, sense, rhs in self.rows:
            lhs = sum((c * x[j] for j, c in coeffs.items()), Fraction(0))
            if (sense == "<=" and lhs > rhs) or (sense == ">=" and lhs < rhs) \
                    or (sense == "=" and lhs != rhs):
                return False
        return True


@dataclass
class StandardForm:
    """A'x' = b' with x' >= 0, b' >= 0, plus the map back to original variables."""

    A: list[dict[int, Fraction]]
    b: list[Fraction]
    n_cols: int
    # x_j = offset_j + sum_k sign * x'_k over recorded (k, sign) pairs
    recover: list[tuple[Fraction, list[tuple[int, int]]]]
    cost: dict[int, Fraction]
    cost_offset: Fraction
    slack_of_row: list[Optional[int]]


def standardize(p: LPProblem) -> StandardForm:
    recover: list[tuple[Fraction, list[tuple[int, int]]]] = []
    col = 0
    extra_rows: list[tuple[dict[int, Fraction], str, Fraction]] = []
    for j in range(p.n_vars):
        lo, hi = p.lower[j], p.upper[j]
        if lo is not None:
            recover.append((lo, [(col, 1)]))
            if hi is not None:
                extra_rows.append(({col: Fraction(1)}, "<=", hi - lo))
            col += 1
        elif hi is not None:
            recover.append((hi, [(col, -1)]))
            col += 1
        else:
            recover.append((Fraction(0), [(col, 1), (col + 1, -1)]))
            col += 2

    def lift(coeffs: Row) -> tuple[dict[int, Fraction], Fraction]:
        out: dict[int, Fraction] = {}
        const = Fraction(0)
        for j, c in coeffs.items():
            off, parts = recover[j]
            const += c * off
            for k, sgn in parts:
                out[k] = out.get(k, Fraction(0)) + sgn * c
        return {k: v for k, v in out.items() if v}, const

    A, b, slack_of_row = [], [], []
    all_rows = []
    for coeffs, sense, rhs in p.rows:
        lifted, const = lift(coeffs)
        all_rows.append((lifted, sense, rhs - const))
    all_rows.extend(extra_rows)
    for lifted, sense, rhs in all_rows:
        row = dict(lifted)
        slack = None
        if sense != "=":
            slack = col
            row[col] = Fraction(1 if sense == "<=" else -1)
            col += 1
        if rhs < 0:
            row = {k: -v for k, v in row.items()}
            rhs = -rhs
        A.append(row)
        b.append(rhs)
        slack_of_row.append(slack)
    cost, cost_offset = lift(p.objective)
    if not p.maximize:
        cost = {k: -v for k, v in cost.items()}
        cost_offset = -cost_offset
    return StandardForm(A, b, col, recover, cost, cost_offset, slack_of_row)


@dataclass
class LPResult:
    status: Status
    x: Optional[list[Fraction]] = None
    value: Optional[Fraction] = None
    # Farkas vector y over the standardized rows: y.A' <= 0 and y.b' > 0.
    farkas: Optional[list[Fraction]] = None
    pivots: int = 0


def _pivot(T: list[list[Fraction]], obj: list[Fraction], p: int, q: int) -> None:
    rowp = T[p]
    piv = rowp[q]
    if piv != 1:
        inv = 1 / piv
        rowp[:] = [v * inv if v else v for v in rowp]
    nz = [j for j, v in enumerate(rowp) if v]
    for i, row in enumerate(T):
        if i == p:
            continue
        f = row[q]
        if f:
            for j in nz:
                row[j] -= f * rowp[j]
    f = obj[q]
    if f:
        for j in nz:
            obj[j] -= f * rowp[j]


def _run(T, obj, basis, allowed: int) -> tuple[bool, int]:
    """Maximize with Bland's rule; returns (bounded, pivot count).

    ``obj[j] < 0`` marks an improving column; only columns < ``allowed`` enter.
    """
    pivots = 0
    while True:
        q = next((j for j in range(allowed) if obj[j] < 0), None)
        if q is None:
            return True, pivots
        best = None
        for i, row in enumerate(T):
            a = row[q]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return False, pivots
        _pivot(T, obj, best[1], q)
        basis[best[1]] = q
        pivots += 1


def verify_farkas(sf: StandardForm, y: Sequence[Fraction]) -> bool:
    if sum((yi * bi for yi, bi in zip(y, sf.b)), Fraction(0)) <= 0:
        return False
    col_sum: dict[int, Fraction] = {}
    for yi, row in zip(y, sf.A):
        if yi:
            for k, v in row.items():
                col_sum[k] = col_sum.get(k, Fraction(0)) + yi * v
    return all(v <= 0 for v in col_sum.values())


def farkas_geq_form(sf: StandardForm, y: Sequence[Fraction]):
    """Re-express y in the ``Mx >= c`` form: returns (M, c, w) with w >= 0, wM = 0, wc > 0.

    The standardized system is written as ``[A'; -A'; I] x' >= [b'; -b'; 0]``.
    """
    m, ncol = len(sf.A), sf.n_cols
    M, c = [], []
    for row, bi in zip(sf.A, sf.b):
        M.append(dict(row)); c.append(bi)
    for row, bi in zip(sf.A, sf.b):
        M.append({k: -v for k, v in row.items()}); c.append(-bi)
    for k in range(ncol):
        M.append({k: Fraction(1)}); c.append(Fraction(0))
    yA = [Fraction(0)] * ncol
    for yi, row in zip(y, sf.A):
        for k, v in row.items():
            yA[k] += yi * v
    w = [max(v, Fraction(0)) for v in y] + [max(-v, Fraction(0)) for v in y] + [-v for v in yA]
    assert len(w) == 2 * m + ncol
    return M, c, w


def check_geq_certificate(M, c, w) -> bool:
    if any(v < 0 for v in w):
        return False
    if sum((wi * ci for wi, ci in zip(w, c)), Fraction(0)) <= 0:
        return False
    acc: dict[int, Fraction] = {}
    for wi, row in zip(w, M):
        if wi:
            for k, v in row.items():
                acc[k] = acc.get(k, Fraction(0)) + wi * v
    return all(v == 0 for v in acc.values())


def solve(p: LPProblem) -> LPResult:
    sf = standardize(p)
    m, ncol = len(sf.A), sf.n_cols
    # Initial basis: a +1 slack when available, otherwise an artificial column.
    n_art = 0
    init_col: list[int] = []
    art_rows = []
    for i in range(m):
        s = sf.slack_of_row[i]
        if s is not None and sf.A[i].get(s) == 1:
            init_col.append(s)
        else:
            init_col.append(ncol + n_art)
            art_rows.append(i)
            n_art += 1
    width = ncol + n_art
    T = []
    for i in range(m):
        row = [Fraction(0)] * (width + 1)
        for k, v in sf.A[i].items():
            row[k] = v
        if init_col[i] >= ncol:
            row[init_col[i]] = Fraction(1)
        row[-1] = sf.b[i]
        T.append(row)
    basis = list(init_col)

    # Phase 1: maximize -sum(artificials).
    obj = [Fraction(0)] * (width + 1)
    for k in range(ncol, width):
        obj[k] = Fraction(1)
    for i in art_rows:
        obj[:] = [o - v for o, v in zip(obj, T[i])]
    _, piv1 = _run(T, obj, basis, width)
    infeas = -obj[-1]  # sum of artificials at the phase-1 optimum
    if infeas > 0:
        cb = [Fraction(1) if basis[r] >= ncol else Fraction(0) for r in range(m)]
        y = [sum((cb[r] * T[r][init_col[i]] for r in range(m)), Fraction(0)) for i in range(m)]
        if not verify_farkas(sf, y):
            raise CertificateError("phase-1 Farkas vector failed verification")
        M, c, w = farkas_geq_form(sf, y)
        if not check_geq_certificate(M, c, w):
            raise CertificateError("Farkas vector failed in >= form")
        return LPResult(Status.INFEASIBLE, farkas=y, pivots=piv1)

    # Drive zero-level artificials out of the basis; drop redundant rows.
    keep = []
    for r in range(m):
        if basis[r] >= ncol:
            q = next((k for k in range(ncol) if T[r][k] != 0), None)
            if q is None:
                continue
            _pivot(T, obj, r, q)
            basis[r] = q
        keep.append(r)
    T = [T[r][:ncol] + [T[r][-1]] for r in keep]
    basis = [basis[r] for r in keep]

    obj = [Fraction(0)] * (ncol + 1)
    for k, v in sf.cost.items():
        obj[k] = -v
    for r, bv in enumerate(basis):
        f = obj[bv]
        if f:
            obj[:] = [o - f * v for o, v in zip(obj, T[r])]
    bounded, piv2 = _run(T, obj, basis, ncol)
    if not bounded:
        return LPResult(Status.UNBOUNDED, pivots=piv1 + piv2)
    xs = [Fraction(0)] * ncol
    for r, bv in enumerate(basis):
        xs[bv] = T[r][-1]
    x = [off + sum((sgn * xs[k] for k, sgn in parts), Fraction(0)) for off, parts in sf.recover]
    if not p.is_feasible(x):
        raise RuntimeError("simplex returned an infeasible point")
    return LPResult(Status.OPTIMAL, x=x, value=p.value(x), pivots=piv1 + piv2)
