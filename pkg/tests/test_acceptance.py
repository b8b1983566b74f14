"""The nine acceptance criteria, each at its stated tolerance and time budget.

Run with ``pytest tests/test_acceptance.py`` (one PASS/FAIL line per criterion
is printed even without ``-s``) or ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from bfclab import commlab, measures, spectral
from bfclab.approx import family_members, max_witness_degree, verify_witness
from bfclab.boolfn import RealTable, TruthTable, builtin, popcount
from oracles import anf_direct, forbidden_scan, fourier_direct, is_block_diagonal_ones

THIRD = Fraction(1, 3)


def functions(n):
    return [TruthTable(n, b) for b in range(1 << (1 << n))]


SMALL = [f for n in (1, 2, 3) for f in functions(n)]


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(num: int, title: str, budget: float):
        start = time.perf_counter()
        notes: list[str] = []
        try:
            yield notes
            elapsed = time.perf_counter() - start
            assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget:.0f}s"
        except BaseException as exc:
            with capsys.disabled():
                print(f"\nFAIL criterion {num}: {title} ({exc})")
            raise
        extra = f"; {'; '.join(notes)}" if notes else ""
        with capsys.disabled():
            print(f"\nPASS criterion {num}: {title} [{elapsed:.1f}s of {budget:.0f}s{extra}]")
    return run


def fourier_degree(f):
    coeffs = fourier_direct(f.values().tolist(), f.n)
    return max((popcount(s) for s, c in enumerate(coeffs) if c), default=0)


def test_criterion_1_rank_equals_mon(criterion):
    with criterion(1, "rk [f(x AND y)] = mon(f), all n=3 and 500 seeded n=4", 60) as notes:
        rng = np.random.default_rng(2024)
        sample = [TruthTable(4, int(b)) for b in rng.integers(0, 1 << 16, size=500)]
        bad = []
        for f in functions(3) + sample:
            m = sum(1 for a in anf_direct(f.values().tolist(), f.n) if a)
            if commlab.rational_rank(commlab.comm_matrix(f, "and")) != m:
                bad.append(f)
        assert not bad, f"mismatch on {bad[:3]}"
        notes.append(f"{256 + len(sample)} functions")


def test_criterion_2_rank_lower_bound(criterion):
    with criterion(2, "max(rk F1, rk F2) >= (3/(2 sqrt 2))^deg f, n <= 3", 10):
        for f in SMALL:
            rk = max(commlab.rational_rank(commlab.comm_matrix(f, m)) for m in ("and", "or"))
            d = fourier_degree(f)
            # rk >= (9/8)^{d/2}  <=>  rk^2 8^d >= 9^d, in integers
            assert rk * rk * 8 ** d >= 9 ** d, f


def test_criterion_3_hard_shift_and_restrictions(criterion):
    with criterion(3, "mon(f_z) >= (3/2)^deg and restrictions >= mon/2, n <= 3", 10):
        for f in SMALL:
            z, m, ok = commlab.hard_shift(f)
            d = fourier_degree(f)
            shifted = TruthTable.from_values([f(x ^ z) for x in range(1 << f.n)])
            assert m == sum(1 for a in anf_direct(shifted.values().tolist(), f.n) if a)
            assert ok and m * 2 ** d >= 3 ** d, f
            for i in range(1, f.n + 1):
                assert commlab.restriction_mon_check(f, i).holds, (f, i)


def test_criterion_4_protocol_bound(criterion):
    with criterion(4, "protocol_sim correct with <= 2 dt bits (n <= 4); dt-bound and log-rank for exact D (n <= 3)",
                   300) as notes:
        count = 0
        for n in (1, 2, 3, 4):
            size = 1 << n
            for f in functions(n):
                budget = 2 * measures.dt(f)
                vals = f.values().tolist()
                for x in range(size):
                    for y in range(size):
                        for mode, w in (("and", x & y), ("or", x | y)):
                            t = commlab.protocol_sim(f, mode, x, y)
                            assert t.output == vals[w] and t.bits <= budget, (f, mode, x, y)
                            count += 1
        worst = 0
        for f in SMALL:
            two_dt = 2 * measures.dt(f)
            for mode in ("and", "or"):
                d = commlab.d_exact(f, mode)
                rk = commlab.rational_rank(commlab.comm_matrix(f, mode))
                assert d <= two_dt and 2 ** d >= rk, (f, mode, d, rk)
                worst = max(worst, d)
        notes.append(f"{count} simulations, max exact D = {worst}")


def test_criterion_5_dual_witness(criterion):
    with criterion(5, "dual witnesses at d*(n), n in {1, 4, 9}", 120) as notes:
        degrees = []
        for n, sym in ((1, False), (4, False), (9, True)):
            res = max_witness_degree(n, symmetric=sym)
            w = res.witness
            assert w is not None, n
            psi = w.table()
            rep = verify_witness(w, family_members(n, psi=psi))
            assert rep.ok and rep.zeroing_ok and rep.worst_coefficient == 0, n
            assert rep.l1 == 1 and psi.l1() == 1, n
            assert rep.family_margin > THIRD and min(rep.margins) > THIRD, n
            spec = fourier_direct(psi.values, n) if n <= 4 else None
            if spec is not None:
                assert all(c == 0 for s, c in enumerate(spec) if popcount(s) < w.d0)
            degrees.append(res.d)
        assert degrees == sorted(degrees), degrees
        notes.append(f"d* = {degrees}")


def direct_pattern(N, n, phi_values):
    """[phi(x|_V xor w)] built straight from the definition, block j = positions j*b .. j*b+b-1."""
    b = N // n
    cols = []
    for V in itertools.product(range(b), repeat=n):
        for w in range(1 << n):
            col = []
            for x in range(1 << N):
                u = sum(((x >> (j * b + V[j])) & 1) << j for j in range(n))
                col.append(phi_values[u ^ w])
            cols.append(col)
    return np.array(cols, dtype=float).T


def test_criterion_6_spectral_closed_form(criterion):
    with criterion(6, "closed-form pattern norm vs SVD, 200 specs, rel 1e-8", 120) as notes:
        rng = np.random.default_rng(11)
        worst = 0.0
        pairs = [(2, 1), (4, 2), (6, 3), (8, 4)]
        for t in range(200):
            N, n = pairs[t % 4]
            raw = rng.integers(-9, 10, size=1 << n)
            den = rng.integers(1, 8, size=1 << n)
            phi = RealTable.of(Fraction(int(a), int(b)) for a, b in zip(raw, den))
            closed = spectral.pattern_spectral_norm(spectral.PatternSpec(N, n, phi))
            svd = np.linalg.svd(direct_pattern(N, n, [float(v) for v in phi.values]), compute_uv=False)[0]
            if svd == 0:
                assert closed == 0
                continue
            rel = abs(closed - svd) / svd
            assert rel < 1e-8, (N, n, phi, closed, svd)
            worst = max(worst, rel)
        notes.append(f"max rel err {worst:.1e}")


def test_criterion_7_hard_instance(criterion):
    with criterion(7, "OR_k hard instances k = 4, 8, 12 and the OR/AND permutation identity", 300) as notes:
        bounds, ratios = [], []
        for k in (4, 8, 12):
            inst = spectral.build_hard_instance(builtin("OR", k), k)
            assert isinstance(inst.inner, Fraction) and inst.inner > THIRD, k
            assert isinstance(inst.l1, Fraction) and inst.l1 == 1, k
            assert inst.members_ok, k
            b = inst.discrepancy()
            assert b.value >= 0, k
            bounds.append(b.value)
            ratios.append(b.log4_ratio)
        assert all(a <= b for a, b in zip(bounds, bounds[1:])), bounds
        for g in SMALL:
            assert commlab.or_and_permutation_check(g), g
        notes.append(f"bounds {[round(b, 6) for b in bounds]}, log4 ratios {[round(r, 3) for r in ratios]}")


def test_criterion_8_structure(criterion):
    with criterion(8, "structure_decompose vs forbidden scan on 1000 matrices; gadget labels", 60):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            r, c = (int(v) for v in rng.integers(1, 9, size=2))
            G = (rng.random((r, c)) < rng.random()).astype(np.int64)
            rep = commlab.structure_decompose(G)
            has = forbidden_scan(G.tolist())
            assert (rep.verdict == "witness") == has, G
            if has:
                (r1, r2), (c1, c2) = rep.witness
                assert G[r1, c1] + G[r1, c2] + G[r2, c1] + G[r2, c2] == 3
            else:
                assert is_block_diagonal_ones(G.tolist())
                assert (rep.reassemble(G.shape) == G).all()
        for k in (2, 3, 5):
            gc = commlab.gadget_classify(np.eye(k, dtype=np.int64))
            assert (gc.kind, gc.type, gc.negated) == ("EXCEPTIONAL", "I", False), gc
        assert commlab.gadget_classify(np.array([[0, 0], [0, 1]])).kind == "OTHER"


def test_criterion_9_projection(criterion):
    with criterion(9, "projection gives bs_2(g) >= bs(f) with blocks <= 2, n <= 4", 300) as notes:
        ratio = math.inf
        for n in (1, 2, 3, 4):
            for f in functions(n)[1:-1]:
                p = measures.project_to_sensitive(f)
                b = measures.bs(f)
                assert len(p.source.blocks) == b
                img = p.image
                assert all(popcount(blk) <= 2 for blk in img.blocks), f
                used = 0
                for blk in img.blocks:
                    assert not blk & used and p.g(img.z ^ blk) != p.g(img.z), f
                    used |= blk
                assert measures.block_sensitivity(p.g, min(2, n)).k >= b, f
                bs2 = measures.block_sensitivity(f, min(2, n)).k
                ratio = min(ratio, measures.sensitivity(f) / math.sqrt(bs2))
        assert ratio > 0
        notes.append(f"min s(f)/sqrt(bs_2(f)) = {ratio:.6f}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
