"""Uniform approximation by low-degree polynomials and common dual witnesses.

The family ``F_n`` is every f: {0,1}^n -> {-1,+1} with f(0) = +1 and
f(e_1) = ... = f(e_n) = -1; values elsewhere are free.  A witness psi certifies
high approximate degree for all of F_n at once: psi is orthogonal to every
character of order below d0, has unit L1 norm, and correlates above 1/3 with
each member.  The worst member takes f(x) = -sign(psi(x)) off the first two
Hamming levels, so the family-wide margin is
``psi(0) - sum_i psi(e_i) - sum_{|x|>=2} |psi(x)|``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from bfclab import caps
from bfclab.boolfn import RealTable, TruthTable, chi, fourier, popcount
from bfclab.lp import LPProblem, LPResult, Status, solve

THIRD = Fraction(1, 3)


def _low_sets(n: int, d: int) -> list[int]:
    """Subset masks S with |S| < d."""
    return [s for s in range(1 << n) if popcount(s) < d]


def _values(f: Union[TruthTable, RealTable]) -> list[Fraction]:
    if isinstance(f, TruthTable):
        return [Fraction(v) for v in f.values().tolist()]
    return list(f.values)


# --- approximate degree -----------------------------------------------------

def _approx_lp(f, deg: int, eps: Optional[Fraction]) -> LPProblem:
    """Coefficients c_S (|S| <= deg) free; error variable t when eps is None."""
    vals = _values(f)
    n = f.n
    sets = _low_sets(n, deg + 1)
    p = LPProblem(len(sets), lower=[None] * len(sets), upper=[None] * len(sets),
                  maximize=False)
    t = None
    if eps is None:
        t = p.add_var(Fraction(0))
        p.objective = {t: Fraction(1)}
    for x in range(1 << n):
        row = {j: Fraction(chi(s, x)) for j, s in enumerate(sets)}
        lo, hi = dict(row), dict(row)
        if t is None:
            p.add_row(lo, ">=", vals[x] - eps)
            p.add_row(hi, "<=", vals[x] + eps)
        else:
            lo[t] = Fraction(1)
            hi[t] = Fraction(-1)
            p.add_row(lo, ">=", vals[x])
            p.add_row(hi, "<=", vals[x])
    return p


def approx_error(f, deg: int) -> Fraction:
    """min over polynomials p of degree <= deg of max_x |p(x) - f(x)|."""
    if deg >= f.n:
        return Fraction(0)
    res = solve(_approx_lp(f, deg, None))
    assert res.status is Status.OPTIMAL
    return res.value


def approx_feasible(f, deg: int, eps) -> LPResult:
    """Feasibility of |p - f| <= eps with deg(p) <= deg; Farkas vector on failure."""
    return solve(_approx_lp(f, deg, Fraction(eps)))


@dataclass(frozen=True)
class ApproxDegree:
    degree: int
    eps: Fraction
    errors: dict[int, Fraction]  # optimal error at each evaluated degree


def approx_degree(f, eps=THIRD, all_errors: bool = True) -> ApproxDegree:
    """Least d such that some degree-d polynomial is eps-close to f everywhere.

    Binary search over d on LP feasibility (degree n is always feasible with
    error 0).  With ``all_errors`` the optimal error is reported for every
    degree, otherwise only for the degrees the search touched.
    """
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    caps.check("lp_arity", f.n)
    lo, hi = 0, f.n  # answer in [lo, hi]
    while lo < hi:
        mid = (lo + hi) // 2
        if approx_feasible(f, mid, eps).status is Status.OPTIMAL:
            hi = mid
        else:
            lo = mid + 1
    errors = {d: approx_error(f, d) for d in range(f.n + 1)} if all_errors else {}
    return ApproxDegree(lo, eps, errors)


# --- dual witnesses ---------------------------------------------------------

@dataclass(frozen=True)
class DualWitness:
    n: int
    d0: int
    margin: Fraction
    l1: Fraction
    psi: Optional[RealTable] = None          # full table (n <= 20)
    levels: Optional[tuple[Fraction, ...]] = None  # value per Hamming level, if symmetric

    def table(self) -> RealTable:
        if self.psi is not None:
            return self.psi
        if self.levels is None or self.n > 20:
            raise ValueError("witness has no materializable table")
        return RealTable(self.n, tuple(self.levels[popcount(x)] for x in range(1 << self.n)))

    def lowered(self, d0: int) -> "DualWitness":
        return DualWitness(self.n, d0, self.margin, self.l1, self.psi, self.levels)

    def to_json(self) -> dict:
        out = {"n": self.n, "d0": self.d0}
        if self.n <= 20:
            out["values"] = [str(v) for v in self.table().values]
        if self.levels is not None:
            out["levels"] = [str(v) for v in self.levels]
        out["margin"] = str(self.margin)
        out["l1"] = str(self.l1)
        return out

    @classmethod
    def from_json(cls, obj: Union[str, dict]) -> "DualWitness":
        if isinstance(obj, str):
            obj = json.loads(obj)
        psi = RealTable.of(Fraction(v) for v in obj["values"]) if "values" in obj else None
        levels = tuple(Fraction(v) for v in obj["levels"]) if "levels" in obj else None
        return cls(obj["n"], obj["d0"], Fraction(obj["margin"]), Fraction(obj["l1"]), psi, levels)


@dataclass(frozen=True)
class WitnessSearch:
    """Outcome of one witness LP; ``witness`` is None when the optimum is <= 1/3."""

    n: int
    d: int
    objective: Fraction
    witness: Optional[DualWitness]

    @property
    def feasible(self) -> bool:
        return self.witness is not None


def family_margin(psi: RealTable) -> Fraction:
    """min over f in F_n of sum_x psi(x) f(x)."""
    total = psi.values[0]
    for x in range(1, 1 << psi.n):
        v = psi.values[x]
        total += -v if popcount(x) == 1 else -abs(v)
    return total


def _krawtchouk(n: int, s: int, t: int) -> int:
    """sum of chi_S(x) over |x| = t, for any fixed |S| = s."""
    return sum((-1) ** j * comb(s, j) * comb(n - s, t - j) for j in range(min(s, t) + 1))


def dual_witness(n: int, d: int, symmetric: bool = False) -> WitnessSearch:
    """Maximize the family margin over psi with unit L1 norm orthogonal to low characters.

    psi is split as p - q with p, q >= 0.  In symmetric mode psi depends only on
    |x| (no loss, since the family and the objective are permutation
    invariant), leaving n + 1 level weights and one constraint per order s < d.
    """
    if not 1 <= d <= n:
        raise ValueError("target degree must satisfy 1 <= d <= n")
    caps.check("symmetric_arity" if symmetric else "lp_arity", n)
    if symmetric:
        points = list(range(n + 1))
        mult = [comb(n, t) for t in points]
        level = points
    else:
        points = list(range(1 << n))
        mult = [1] * len(points)
        level = [popcount(x) for x in points]
    m = len(points)
    lp = LPProblem(2 * m)  # p_j at j, q_j at m + j
    obj: dict[int, Fraction] = {}
    for j in range(m):
        c = Fraction(mult[j])
        if level[j] == 0:
            obj[j], obj[m + j] = c, -c
        elif level[j] == 1:
            obj[j], obj[m + j] = -c, c
        else:
            obj[j], obj[m + j] = -c, -c
    lp.objective = obj
    lp.add_row({j: Fraction(mult[j % m]) for j in range(2 * m)}, "=", 1)
    if symmetric:
        for s in range(d):
            k = [Fraction(_krawtchouk(n, s, t)) for t in points]
            row = {j: k[j] for j in range(m) if k[j]}
            row.update({m + j: -k[j] for j in range(m) if k[j]})
            lp.add_row(row, "=", 0)
    else:
        for s in _low_sets(n, d):
            row = {}
            for x in points:
                c = Fraction(chi(s, x))
                row[x], row[m + x] = c, -c
            lp.add_row(row, "=", 0)
    res = solve(lp)
    assert res.status is Status.OPTIMAL  # scaled parity is always feasible
    vals = [res.x[j] - res.x[m + j] for j in range(m)]
    l1 = sum((abs(v) * c for v, c in zip(vals, mult)), Fraction(0))
    if l1 == 0:
        return WitnessSearch(n, d, Fraction(0), None)
    vals = [v / l1 for v in vals]
    if symmetric:
        levels = tuple(vals)
        margin = levels[0] - n * levels[1] - sum(
            (comb(n, t) * abs(levels[t]) for t in range(2, n + 1)), Fraction(0))
        psi = None if n > 20 else RealTable(n, tuple(levels[popcount(x)] for x in range(1 << n)))
    else:
        levels = None
        psi = RealTable(n, tuple(vals))
        margin = family_margin(psi)
    witness = DualWitness(n, d, margin, Fraction(1), psi, levels) if margin > THIRD else None
    return WitnessSearch(n, d, margin, witness)


def max_witness_degree(n: int, symmetric: bool = False) -> WitnessSearch:
    """Best witness at the largest feasible degree d*(n); feasibility is monotone in d."""
    best = dual_witness(n, 1, symmetric)
    if not best.feasible:
        return best
    for d in range(2, n + 1):
        nxt = dual_witness(n, d, symmetric)
        if not nxt.feasible:
            break
        best = nxt
    return best


def correlation_bound(f, d: int) -> Fraction:
    """max sum_x psi(x) f(x) over psi with unit L1 norm and psihat(S) = 0 for |S| < d.

    The single-function dual of the degree-(d-1) uniform approximation problem.
    """
    vals = _values(f)
    n = f.n
    m = 1 << n
    lp = LPProblem(2 * m)
    lp.objective = {j: vals[j % m] * (1 if j < m else -1) for j in range(2 * m)}
    lp.add_row({j: Fraction(1) for j in range(2 * m)}, "=", 1)
    for s in _low_sets(n, d):
        row = {}
        for x in range(m):
            c = Fraction(chi(s, x))
            row[x], row[m + x] = c, -c
        lp.add_row(row, "=", 0)
    res = solve(lp)
    return res.value


# --- verification -----------------------------------------------------------

def in_family(f: TruthTable) -> bool:
    return f(0) == 1 and all(f(1 << i) == -1 for i in range(f.n))


def family_members(n: int, limit: int = 256, seed: int = 0,
                   psi: Optional[RealTable] = None) -> list[TruthTable]:
    """Members of F_n: all of them when few, else a seeded sample.

    When psi is given the worst member for psi is always included.
    """
    free = [x for x in range(1 << n) if popcount(x) >= 2]
    base = sum(1 << (1 << i) for i in range(n))
    out: list[TruthTable] = []
    if psi is not None:
        worst = base | sum(1 << x for x in free if psi.values[x] > 0)
        out.append(TruthTable(n, worst))
    if len(free) <= 12 and (1 << len(free)) <= limit:
        for choice in range(1 << len(free)):
            out.append(TruthTable(n, base | sum(1 << x for i, x in enumerate(free) if (choice >> i) & 1)))
    else:
        rng = np.random.default_rng(seed)
        for _ in range(limit):
            pick = rng.integers(0, 2, size=len(free))
            out.append(TruthTable(n, base | sum(1 << x for x, b in zip(free, pick) if b)))
    return out


@dataclass
class WitnessReport:
    ok: bool
    zeroing_ok: bool
    worst_coefficient: Fraction  # largest |psihat(S)| over |S| < d0
    l1: Fraction
    l1_ok: bool
    margins: list[Fraction] = field(default_factory=list)
    margin_ok: bool = True
    family_margin: Fraction = Fraction(0)
    failures: list[str] = field(default_factory=list)


def verify_witness(w: DualWitness, family: Iterable[TruthTable] = ()) -> WitnessReport:
    """Recompute every witness condition from scratch in exact arithmetic."""
    psi = w.table()
    spec = fourier(psi)
    low = [abs(spec[s]) for s in _low_sets(psi.n, w.d0)]
    worst = max(low, default=Fraction(0))
    l1 = psi.l1()
    margins = []
    failures = []
    for f in family:
        if f.n != psi.n or not in_family(f):
            raise ValueError(f"{f!r} is not a member of the family on {psi.n} variables")
        margins.append(sum((v * f(x) for x, v in enumerate(psi.values)), Fraction(0)))
    fam = family_margin(psi)
    if worst != 0:
        failures.append(f"Fourier zeroing below {w.d0} fails: max |coefficient| = {worst}")
    if l1 != 1:
        failures.append(f"L1 norm is {l1}, off by {l1 - 1}")
    bad = [m for m in margins if m <= THIRD]
    if bad:
        failures.append(f"{len(bad)} sampled members have margin <= 1/3 (min {min(bad)})")
    if fam <= THIRD:
        failures.append(f"family-wide margin {fam} <= 1/3")
    return WitnessReport(ok=not failures, zeroing_ok=worst == 0, worst_coefficient=worst,
                         l1=l1, l1_ok=l1 == 1, margins=margins, margin_ok=not bad,
                         family_margin=fam, failures=failures)
