"""Slow, direct re-implementations used as independent test oracles."""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product


def popcount(v: int) -> int:
    return bin(v).count("1")


def fourier_direct(values, n):
    """fhat(S) = 2^-n sum_x f(x) (-1)^{|x & S|}, one coefficient at a time."""
    return [sum(Fraction(values[x]) * (-1) ** popcount(x & s) for x in range(1 << n)) / 2 ** n
            for s in range(1 << n)]


def anf_direct(values, n):
    """alpha_S = sum over T subset S of (-1)^{|S|-|T|} f(1_T)."""
    out = []
    for s in range(1 << n):
        acc = Fraction(0)
        t = s
        while True:
            acc += (-1) ** (popcount(s) - popcount(t)) * Fraction(values[t])
            if t == 0:
                break
            t = (t - 1) & s
        out.append(acc)
    return out


def sensitivity_direct(f, n):
    return max(sum(f(z) != f(z ^ (1 << i)) for i in range(n)) for z in range(1 << n))


def block_sensitivity_direct(f, n, ell=None, zero_only=False):
    """Exhaustive search over families of disjoint sensitive blocks."""
    ell = n if ell is None else ell
    best = 0
    for z in range(1 << n):
        blocks = [b for b in range(1, 1 << n) if popcount(b) <= ell and f(z ^ b) != f(z)
                  and not (zero_only and b & z)]

        def grow(used, start, count):
            nonlocal best
            best = max(best, count)
            for j in range(start, len(blocks)):
                if not blocks[j] & used:
                    grow(used | blocks[j], j + 1, count + 1)

        grow(0, 0, 0)
    return best


def dt_direct(table: dict, free: tuple):
    """Minimax over queried variables; table maps full points to values."""
    vals = set(table.values())
    if len(vals) <= 1:
        return 0
    best = None
    for i in free:
        rest = tuple(j for j in free if j != i)
        sub = []
        for b in (0, 1):
            sub.append(dt_direct({x: v for x, v in table.items() if (x >> i) & 1 == b}, rest))
        d = 1 + max(sub)
        best = d if best is None else min(best, d)
    return best


def cc_direct(M, rows=None, cols=None):
    """Unpruned protocol search over all row/column bipartitions."""
    rows = tuple(range(len(M))) if rows is None else rows
    cols = tuple(range(len(M[0]))) if cols is None else cols
    if len({M[i][j] for i in rows for j in cols}) == 1:
        return 0
    best = None
    for side, idx in (("r", rows), ("c", cols)):
        for k in range(1, len(idx)):
            for part in combinations(idx, k):
                rest = tuple(i for i in idx if i not in part)
                if side == "r":
                    d = 1 + max(cc_direct(M, part, cols), cc_direct(M, rest, cols))
                else:
                    d = 1 + max(cc_direct(M, rows, part), cc_direct(M, rows, rest))
                best = d if best is None else min(best, d)
    return best


def forbidden_scan(G):
    """Any 2x2 submatrix whose entries sum to 3, by listing all row and column pairs."""
    R, C = len(G), len(G[0])
    for r1, r2 in combinations(range(R), 2):
        for c1, c2 in combinations(range(C), 2):
            if G[r1][c1] + G[r1][c2] + G[r2][c1] + G[r2][c2] == 3:
                return True
    return False


def is_block_diagonal_ones(G):
    """After dropping zero rows/columns, rows with a common one must be equal."""
    R, C = len(G), len(G[0])
    rows = [tuple(G[r]) for r in range(R) if any(G[r])]
    for a, b in product(rows, rows):
        if any(x and y for x, y in zip(a, b)) and a != b:
            return False
    return True
