"""Communication matrices of masked and composed problems, and what they certify.

Alice holds the row index, Bob the column index.  For F1 = [f(x AND y)] and
F2 = [f(x OR y)] both indices range over {0,1}^n in the shared integer
encoding.  Composed matrices index rows by tuples (x^(1), ..., x^(n)) in mixed
radix with x^(1) the least significant digit (columns likewise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from typing import Optional, Sequence, Union

import numpy as np

from bfclab import caps, measures
from bfclab.boolfn import (
    RealTable,
    TruthTable,
    anf,
    mon,
    popcount,
    restrict,
    shift,
    substitute,
)
from bfclab.spectral import DenseMatrix, build_hard_instance

RANK_LB = "(3/(2*sqrt(2)))^deg"
MODES = ("and", "or", "masked", "composed")


# --- construction --------------------------------------------------------------

@dataclass
class CommMatrix:
    matrix: DenseMatrix
    tag: str                      # AND | OR | MASKED | COMPOSED | RAW
    source: Optional[Union[TruthTable, RealTable]] = None
    z: Optional[int] = None
    gadgets: tuple = ()

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def int_entries(self) -> list[list[int]]:
        """Entries scaled by a common denominator to integers."""
        den = math.lcm(*(Fraction(v).denominator for v in self.matrix.entries.flat))
        return [[int(Fraction(v) * den) for v in row] for row in self.matrix.entries]


def _values(f) -> list:
    if isinstance(f, TruthTable):
        return f.values().tolist()
    return list(f.values)


def _exact(arr: np.ndarray) -> np.ndarray:
    out = np.empty(arr.shape, dtype=object)
    out.flat[:] = [Fraction(v) for v in arr.flat]
    return out


def comm_matrix(f, mode: str = "and", z: Optional[int] = None,
                gadgets: Optional[Sequence[np.ndarray]] = None) -> CommMatrix:
    """Build F1, F2, the masked matrix [f((x AND y) xor z)] or a composed matrix.

    Gadgets are 0/1 matrices, one per input of f; the composed entry is
    f(g_1(x^(1), y^(1)), ..., g_n(x^(n), y^(n))).
    """
    mode = mode.lower()
    n = f.n
    vals = np.array(_values(f), dtype=object)
    if mode in ("and", "or", "masked"):
        caps.check("comm_entries", 1 << (2 * n))
        x = np.arange(1 << n)
        if mode == "and":
            idx = x[:, None] & x[None, :]
        elif mode == "or":
            idx = x[:, None] | x[None, :]
        else:
            if z is None or not 0 <= z < 1 << n:
                raise ValueError("masked mode needs a shift z in {0,1}^n")
            idx = (x[:, None] & x[None, :]) ^ z
        labels = list(range(1 << n))
        tag = {"and": "AND", "or": "OR", "masked": "MASKED"}[mode]
        return CommMatrix(DenseMatrix(_exact(vals[idx]), labels, list(labels)), tag, f, z)
    if mode != "composed":
        raise ValueError(f"mode must be one of {MODES}")
    if gadgets is None or len(gadgets) != n:
        raise ValueError(f"composed mode needs exactly {n} gadget matrices")
    gs = [np.asarray(g, dtype=np.int64) for g in gadgets]
    for g in gs:
        if g.ndim != 2 or not np.isin(g, (0, 1)).all():
            raise ValueError("gadgets must be 0/1 matrices")
    rows = math.prod(g.shape[0] for g in gs)
    cols = math.prod(g.shape[1] for g in gs)
    caps.check("comm_entries", rows * cols)
    idx = np.zeros((rows, cols), dtype=np.int64)
    rstride = cstride = 1
    for i, g in enumerate(gs):
        r_digit = (np.arange(rows) // rstride) % g.shape[0]
        c_digit = (np.arange(cols) // cstride) % g.shape[1]
        idx |= g[r_digit[:, None], c_digit[None, :]] << i
        rstride *= g.shape[0]
        cstride *= g.shape[1]
    return CommMatrix(DenseMatrix(_exact(vals[idx]), list(range(rows)), list(range(cols))),
                      "COMPOSED", f, None, tuple(gs))


def raw_matrix(rows: Sequence[Sequence]) -> CommMatrix:
    arr = np.array(rows, dtype=object)
    return CommMatrix(DenseMatrix(_exact(arr)), "RAW")


def sign_matrix(g01: np.ndarray) -> CommMatrix:
    """The +-1 matrix (-1)^g of a 0/1 gadget."""
    g = np.asarray(g01, dtype=np.int64)
    return CommMatrix(DenseMatrix(_exact(1 - 2 * g)), "RAW")


# --- rank -----------------------------------------------------------------------

def _as_int_rows(M) -> list[list[int]]:
    if isinstance(M, CommMatrix):
        return M.int_entries()
    if isinstance(M, DenseMatrix):
        return CommMatrix(M, "RAW").int_entries()
    arr = [[Fraction(v) for v in row] for row in M]
    den = math.lcm(*(v.denominator for row in arr for v in row)) if arr else 1
    return [[int(v * den) for v in row] for row in arr]


def rational_rank(M) -> int:
    """Exact rank over Q by fraction-free (Bareiss) elimination."""
    a = [row[:] for row in _as_int_rows(M)]
    if not a:
        return 0
    rows, cols = len(a), len(a[0])
    rank, prev = 0, 1
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if a[r][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank]
        for r in range(rank + 1, rows):
            row = a[r]
            lead = row[c]
            for j in range(c + 1, cols):
                row[j] = (row[j] * p[c] - lead * p[j]) // prev
            row[c] = 0
        prev = p[c]
        rank += 1
        if rank == rows:
            break
    return rank


_PRIME = (1 << 61) - 1


def _rank_mod_p(rows: list[list[int]]) -> int:
    """Rank over GF(p); never exceeds the rank over Q."""
    a = [[v % _PRIME for v in row] for row in rows]
    rank = 0
    cols = len(a[0]) if a else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(a)) if a[r][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][c], _PRIME - 2, _PRIME)
        prow = [v * inv % _PRIME for v in a[rank]]
        a[rank] = prow
        for r in range(len(a)):
            if r != rank and a[r][c]:
                f = a[r][c]
                a[r] = [(v - f * pv) % _PRIME for v, pv in zip(a[r], prow)]
        rank += 1
    return rank


# --- exact deterministic communication complexity -----------------------------

@dataclass(frozen=True)
class ProtocolNode:
    speaker: str                 # "A" (splits rows) or "B" (splits columns)
    part0: tuple[int, ...]       # indices sending bit 0
    part1: tuple[int, ...]
    child0: "ProtocolTree"
    child1: "ProtocolTree"


ProtocolTree = Union[Fraction, ProtocolNode]


def protocol_depth(t: ProtocolTree) -> int:
    return 0 if not isinstance(t, ProtocolNode) else 1 + max(protocol_depth(t.child0),
                                                              protocol_depth(t.child1))


def protocol_eval(t: ProtocolTree, r: int, c: int):
    while isinstance(t, ProtocolNode):
        idx = r if t.speaker == "A" else c
        t = t.child0 if idx in t.part0 else t.child1
    return t


def _ceil_log2(v: int) -> int:
    return max(0, (v - 1).bit_length())


def _bits(m: int) -> list[int]:
    out = []
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    return out


def _gf2_rank(vectors) -> int:
    basis: list[int] = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return len(basis)


class _CCSolver:
    """Memoized search over rectangles, keyed on their distinct rows and columns.

    Row i is stored per value v as the bitmask of columns holding v.  The
    lower bound uses that the leaves partition each value's indicator matrix
    into rectangles, so 2^D >= sum over v of its rank over GF(2).
    """

    def __init__(self, entries: list[list[int]]):
        self.a = entries
        vals = sorted({v for row in entries for v in row})
        self.rows = [[sum(1 << j for j, x in enumerate(row) if x == v) for row in entries]
                     for v in vals]
        self.cols = [[sum(1 << i for i, row in enumerate(entries) if row[j] == v)
                      for j in range(len(entries[0]))] for v in vals]
        self.memo: dict[tuple[int, int], int] = {}
        self.raw: dict[tuple[int, int], int] = {}

    def groups(self, rmask: int, cmask: int, by_rows: bool) -> list[int]:
        """Masks of identical-row (or identical-column) classes, ordered by first member."""
        table, idx, other = (self.rows, rmask, cmask) if by_rows else (self.cols, cmask, rmask)
        out: dict[tuple, int] = {}
        for i in _bits(idx):
            key = tuple(t[i] & other for t in table)
            out[key] = out.get(key, 0) | (1 << i)
        return list(out.values())

    def reduce(self, rmask: int, cmask: int) -> tuple[int, int]:
        """Keep the lowest index of every row class and of every column class."""
        r = sum(g & -g for g in self.groups(rmask, cmask, True))
        c = sum(g & -g for g in self.groups(r, cmask, False))
        return r, c

    def _lower(self, rmask: int, cmask: int) -> tuple[int, int]:
        """(log-rank style bound, number of distinct values) for a reduced rectangle."""
        total = n_vals = 0
        rs = _bits(rmask)
        for t in self.rows:
            r = _gf2_rank(t[i] & cmask for i in rs)
            total += r
            n_vals += r > 0
        return _ceil_log2(total), n_vals

    @staticmethod
    def splits(mask: int):
        """Nontrivial bipartitions of the set bits of mask, each listed once."""
        first = mask & -mask
        rest = mask ^ first
        sub = rest
        while True:
            part = first | sub
            if part != mask:
                yield part, mask ^ part
            if not sub:
                return
            sub = (sub - 1) & rest

    def solve(self, rmask: int, cmask: int) -> int:
        raw = (rmask, cmask)
        if raw in self.raw:
            return self.raw[raw]
        self.raw[raw] = d = self._solve(*self.reduce(rmask, cmask))
        return d

    def _solve(self, rmask: int, cmask: int) -> int:
        key = (rmask, cmask)
        if key in self.memo:
            return self.memo[key]
        nr, nc = popcount(rmask), popcount(cmask)
        if nr == 1 and nc == 1:
            self.memo[key] = 0
            return 0
        lb, n_vals = self._lower(rmask, cmask)
        lb = max(1, lb)
        # Alice (or Bob) names a class, then the other party names the entry.
        best = min(_ceil_log2(nr), _ceil_log2(nc)) + _ceil_log2(n_vals)
        for speaker, whole in (("A", rmask), ("B", cmask)):
            if best <= lb or popcount(whole) < 2:
                continue
            for p0, p1 in self.splits(whole):
                h0, h1 = ((p0, cmask), (p1, cmask)) if speaker == "A" else ((rmask, p0), (rmask, p1))
                d0 = self.solve(*h0)
                if d0 + 1 >= best:
                    continue
                d1 = self.solve(*h1)
                if max(d0, d1) + 1 < best:
                    best = max(d0, d1) + 1
                    if best <= lb:
                        break
        self.memo[key] = best
        return best

    def tree(self, rmask: int, cmask: int) -> ProtocolTree:
        """An optimal protocol on the full index sets, expanded from the reduced search."""
        d = self.solve(rmask, cmask)
        if d == 0:
            i, j = _bits(rmask)[0], _bits(cmask)[0]
            return Fraction(self.a[i][j])
        rr, rc = self.reduce(rmask, cmask)
        for speaker, whole, full in (("A", rr, rmask), ("B", rc, cmask)):
            if popcount(whole) < 2:
                continue
            groups = self.groups(rmask, cmask, speaker == "A")
            for p0, p1 in self.splits(whole):
                h0, h1 = ((p0, rc), (p1, rc)) if speaker == "A" else ((rr, p0), (rr, p1))
                if max(self.solve(*h0), self.solve(*h1)) + 1 != d:
                    continue
                part0 = sum(g for g in groups if g & p0)
                part1 = full & ~part0
                if speaker == "A":
                    c0, c1 = self.tree(part0, cmask), self.tree(part1, cmask)
                else:
                    c0, c1 = self.tree(rmask, part0), self.tree(rmask, part1)
                return ProtocolNode(speaker, tuple(_bits(part0)), tuple(_bits(part1)), c0, c1)
        raise AssertionError("search value not realized by any split")


@dataclass(frozen=True)
class DeterministicCC:
    D: int
    protocol: ProtocolTree


def deterministic_cc_exact(M) -> DeterministicCC:
    """Least depth of a deterministic protocol tree, by memoized search.

    D(M) = 0 for constant M, else 1 + min over nontrivial row splits (Alice)
    and column splits (Bob) of the larger half; identical rows or columns are
    never separated, and the log-rank bound prunes the search.
    """
    a = _as_int_rows(M)
    r, c = len(a), len(a[0])
    caps.check("cc_side", max(r, c))
    solver = _CCSolver(a)
    full_r, full_c = (1 << r) - 1, (1 << c) - 1
    d = solver.solve(full_r, full_c)
    tree = solver.tree(full_r, full_c)
    return DeterministicCC(d, tree)


def _canonical(f: TruthTable) -> TruthTable:
    """Least truth table under negation and variable permutation; D(F1) is invariant under both."""
    best = None
    for perm in permutations(range(f.n)):
        g = substitute(f, perm, f.n) if f.n else f
        for h in (g.bits, g.bits ^ ((1 << g.size) - 1)):
            if best is None or h < best:
                best = h
    return TruthTable(f.n, best)


@lru_cache(maxsize=None)
def _d_and(n: int, bits: int) -> int:
    return deterministic_cc_exact(comm_matrix(TruthTable(n, bits), "and")).D


def d_exact(f: TruthTable, mode: str = "and") -> int:
    """Exact D of F1 (mode and) or F2 (mode or), cached up to symmetry.

    F2 of f is F1 of f(complement x) with rows and columns complemented.
    """
    side = 1 << f.n
    caps.check("cc_side", side)
    if mode.lower() == "or":
        f = shift(f, side - 1)
    g = _canonical(f) if f.n <= 4 else f
    return _d_and(g.n, g.bits)


# --- the decision-tree protocol -----------------------------------------------

@dataclass(frozen=True)
class ProtocolTranscript:
    messages: tuple[tuple[str, int], ...]
    output: int

    @property
    def bits(self) -> int:
        return len(self.messages)


@lru_cache(maxsize=None)
def _tree_for(n: int, bits: int) -> measures.DecisionTree:
    return measures.decision_tree_depth(TruthTable(n, bits))[1]


def protocol_sim(f: TruthTable, mode: str, x: int, y: int) -> ProtocolTranscript:
    """Walk an optimal decision tree; at each query both parties announce their bit."""
    tree = _tree_for(f.n, f.bits)
    combine = {"and": lambda a, b: a & b, "or": lambda a, b: a | b}[mode.lower()]
    msgs = []
    node = tree.root
    while isinstance(node, measures.Node):
        xi, yi = (x >> node.var) & 1, (y >> node.var) & 1
        msgs.append(("A", xi))
        msgs.append(("B", yi))
        node = node.hi if combine(xi, yi) else node.lo
    return ProtocolTranscript(tuple(msgs), node)


# --- monomial counts under shifts and restrictions ----------------------------

def _pow_ge(value: int, num: int, den: int, d: int) -> bool:
    """value >= (num/den)^d, exactly."""
    return value * den ** d >= num ** d


def hard_shift(f) -> tuple[int, int, bool]:
    """(z, mon(f_z), mon(f_z) >= (3/2)^deg f) with z maximizing mon(f_z), smallest first."""
    caps.check("shift_arity", f.n)
    best_z, best = 0, -1
    for z in range(1 << f.n):
        m = mon(shift(f, z))
        if m > best:
            best_z, best = z, m
    d = max(anf(f).degree, 0)
    return best_z, best, _pow_ge(best, 3, 2, d)


@dataclass(frozen=True)
class RestrictionCheck:
    mon_restricted: int   # mon of f with x_i := 0
    mon_flipped: int      # mon of f_{e_i}
    mon_f: int
    holds: bool


def restriction_mon_check(f, i: int) -> RestrictionCheck:
    """Check max{mon(f|x_i=0), mon(f_{e_i})} >= mon(f)/2; i is 1-based."""
    if not 1 <= i <= f.n:
        raise ValueError(f"index must be in [1, {f.n}]")
    a = mon(restrict(f, i - 1, 0))
    b = mon(shift(f, 1 << (i - 1)))
    m = mon(f)
    return RestrictionCheck(a, b, m, 2 * max(a, b) >= m)


def or_and_permutation_check(g: TruthTable) -> bool:
    """[g(x OR y)] equals [g~(x AND y)] with rows and columns complemented, g~(x) = g(not x)."""
    full = (1 << g.n) - 1
    F2 = comm_matrix(g, "or").matrix.entries
    F1 = comm_matrix(shift(g, full), "and").matrix.entries
    perm = [x ^ full for x in range(1 << g.n)]
    return bool((F2 == F1[np.ix_(perm, perm)]).all())


# --- structure of 0/1 matrices ---------------------------------------------------

def _has_pattern(G: np.ndarray, ones: int) -> Optional[tuple[tuple[int, int], tuple[int, int]]]:
    """First 2x2 submatrix with exactly ``ones`` ones: 3 gives [[0,1],[1,1]], 1 gives [[1,0],[0,0]].

    Any 2x2 0/1 matrix with three ones (one one) equals the pattern up to row
    and column permutation.
    """
    R, C = G.shape
    for r1, r2 in combinations(range(R), 2):
        s = G[r1] + G[r2]
        for c1, c2 in combinations(range(C), 2):
            if s[c1] + s[c2] == ones:
                return (r1, r2), (c1, c2)
    return None


def brute_force_scan(G) -> Optional[tuple[tuple[int, int], tuple[int, int]]]:
    """Rows and columns of a submatrix equal to [[0,1],[1,1]] up to permutation."""
    return _has_pattern(np.asarray(G, dtype=np.int64), 3)


@dataclass
class MatrixStructureReport:
    verdict: str                   # zero | all-ones | block-decomposition | witness
    blocks: list[tuple[tuple[int, ...], tuple[int, ...]]] = field(default_factory=list)
    zero_rows: tuple[int, ...] = ()
    zero_cols: tuple[int, ...] = ()
    witness: Optional[tuple[tuple[int, int], tuple[int, int]]] = None

    @property
    def row_perm(self) -> list[int]:
        return [r for rs, _ in self.blocks for r in rs] + list(self.zero_rows)

    @property
    def col_perm(self) -> list[int]:
        return [c for _, cs in self.blocks for c in cs] + list(self.zero_cols)

    @property
    def block_sizes(self) -> list[tuple[int, int]]:
        return [(len(r), len(c)) for r, c in self.blocks]

    def reassemble(self, shape: tuple[int, int]) -> np.ndarray:
        out = np.zeros(shape, dtype=np.int64)
        for rs, cs in self.blocks:
            out[np.ix_(rs, cs)] = 1
        return out

    def to_json(self) -> dict:
        out = {"verdict": self.verdict}
        if self.verdict == "witness":
            (r1, r2), (c1, c2) = self.witness
            out["rows"] = [r1 + 1, r2 + 1]
            out["cols"] = [c1 + 1, c2 + 1]
        else:
            out["blocks"] = [{"rows": [r + 1 for r in rs], "cols": [c + 1 for c in cs]}
                             for rs, cs in self.blocks]
            out["zero_rows"] = [r + 1 for r in self.zero_rows]
            out["zero_cols"] = [c + 1 for c in self.zero_cols]
        return out


def structure_decompose(G) -> MatrixStructureReport:
    """Either a block-diagonal-of-all-ones decomposition or a [[0,1],[1,1]] witness.

    Nonzero rows and columns form a bipartite graph on the ones.  The matrix
    avoids the pattern exactly when every connected component is complete; a
    witness comes from a breadth-first path of length three.
    """
    G = np.asarray(G, dtype=np.int64)
    R, C = G.shape
    caps.check("structure_side", max(R, C))
    if not G.any():
        return MatrixStructureReport("zero", zero_rows=tuple(range(R)), zero_cols=tuple(range(C)))
    zr = tuple(int(r) for r in range(R) if not G[r].any())
    zc = tuple(int(c) for c in range(C) if not G[:, c].any())
    def bfs(start: int):
        dist_r = {start: 0}
        dist_c: dict[int, int] = {}
        parent_c: dict[int, int] = {}
        parent_r: dict[int, int] = {}
        frontier = [start]
        while frontier:
            nxt = []
            for r in frontier:
                for c in np.nonzero(G[r])[0].tolist():
                    if c not in dist_c:
                        dist_c[c] = dist_r[r] + 1
                        parent_c[c] = r
                        for r2 in np.nonzero(G[:, c])[0].tolist():
                            if r2 not in dist_r:
                                dist_r[r2] = dist_c[c] + 1
                                parent_r[r2] = c
                                nxt.append(r2)
            frontier = nxt
        return dist_r, dist_c, parent_c, parent_r

    seen_r: set[int] = set()
    blocks = []
    for start in range(R):
        if start in seen_r or start in zr:
            continue
        dist_r, dist_c, _, _ = bfs(start)
        rs = tuple(sorted(dist_r))
        cs = tuple(sorted(dist_c))
        short = next((r for r in rs if not G[r, list(cs)].all()), None)
        if short is not None:
            # From a row missing a column of its component, that column sits at distance 3.
            _, dist_c, parent_c, parent_r = bfs(short)
            c3 = min(c for c, d in dist_c.items() if d == 3)
            r2 = parent_c[c3]
            c1 = parent_r[r2]
            r0 = parent_c[c1]
            assert r0 == short and G[r0, c1] == G[r2, c1] == G[r2, c3] == 1 and G[r0, c3] == 0
            return MatrixStructureReport("witness", witness=(tuple(sorted((r0, r2))),
                                                             tuple(sorted((c1, c3)))))
        seen_r.update(rs)
        blocks.append((rs, cs))
    if not zr and not zc and len(blocks) == 1:
        return MatrixStructureReport("all-ones", blocks)
    return MatrixStructureReport("block-decomposition", blocks, zr, zc)


def dedupe(G) -> np.ndarray:
    """Keep the first copy of every distinct row, then of every distinct column."""
    G = np.asarray(G, dtype=np.int64)
    _, ri = np.unique(G, axis=0, return_index=True)
    G = G[np.sort(ri)]
    _, ci = np.unique(G, axis=1, return_index=True)
    return G[:, np.sort(ci)]


EXCEPTIONAL_TYPES = ("I", "I+0row", "I+0col", "I+0block")


@dataclass(frozen=True)
class GadgetClass:
    kind: str                      # BOTH_PATTERNS | EXCEPTIONAL | OTHER
    type: Optional[str] = None     # one of EXCEPTIONAL_TYPES
    negated: bool = False
    size: int = 0                  # side of the identity block

    def __str__(self) -> str:
        if self.kind != "EXCEPTIONAL":
            return self.kind
        return ("not " if self.negated else "") + f"{self.type} (I of size {self.size})"


def _exceptional(D: np.ndarray) -> Optional[tuple[str, int]]:
    if (D.sum(axis=1) > 1).any() or (D.sum(axis=0) > 1).any():
        return None
    k = int(D.sum())
    if k < 2:
        return None  # a 1x1 identity would make AND and OR gadgets "exceptional"
    zr = int((D.sum(axis=1) == 0).sum())
    zc = int((D.sum(axis=0) == 0).sum())
    return {(0, 0): "I", (1, 0): "I+0row", (0, 1): "I+0col", (1, 1): "I+0block"}[(zr, zc)], k


def gadget_classify(G) -> GadgetClass:
    G = np.asarray(G, dtype=np.int64)
    caps.check("structure_side", max(G.shape))
    D = dedupe(G)
    if _has_pattern(D, 1) and _has_pattern(D, 3):
        return GadgetClass("BOTH_PATTERNS")
    for negated, mat in ((False, D), (True, 1 - D)):
        hit = _exceptional(mat)
        if hit:
            return GadgetClass("EXCEPTIONAL", hit[0], negated, hit[1])
    return GadgetClass("OTHER")


# --- reports ----------------------------------------------------------------------

@dataclass
class Check:
    name: str
    lhs: object
    relation: str
    rhs: object
    ok: bool

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": _jsonable(self.lhs), "relation": self.relation,
                "rhs": _jsonable(self.rhs), "ok": self.ok}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return float(f"{v:.12g}")
    return v


@dataclass
class PipelineResult:
    route: Optional[str]          # "and" (F1) or "or" (F2)
    k: int
    z: Optional[int]
    coords: tuple[int, ...]
    witness_degree: Optional[int]
    inner: Optional[Fraction]
    bound: float
    log4_ratio: Optional[float]
    note: str


def sensitive_route(g: TruthTable) -> tuple[str, int, tuple[int, ...]]:
    """First z (in integer order) where ceil(s(g)/2) sensitive coordinates share z's bit."""
    s = measures.sensitivity(g)
    need = (s + 1) // 2
    for z in range(g.size):
        sens = [i for i in range(g.n) if g(z ^ (1 << i)) != g(z)]
        zeros = tuple(i for i in sens if not (z >> i) & 1)
        ones = tuple(i for i in sens if (z >> i) & 1)
        if len(zeros) >= need:
            return "and", z, zeros
        if len(ones) >= need:
            return "or", z, ones
    raise AssertionError("a sensitivity witness always splits one way")


def discrepancy_pipeline(f: TruthTable, eps=Fraction(1, 10)) -> PipelineResult:
    """Project f, pick the AND or OR route, and run the hard-instance bound."""
    if f.is_constant():
        return PipelineResult(None, 0, None, (), None, None, 0.0, None, "constant function")
    g = measures.project_to_sensitive(f).g
    route, z, coords = sensitive_route(g)
    k = min(len(coords) // 4 * 4, caps.get("hard_instance_k"))
    if k == 0:
        return PipelineResult(route, 0, z, coords, None, None, 0.0, None,
                              f"only {len(coords)} aligned sensitive coordinates; need 4")
    coords = coords[:k]
    if route == "or":
        g = shift(g, (1 << g.n) - 1)
        z ^= (1 << g.n) - 1
    order = list(coords) + [i for i in range(g.n) if i not in coords]
    pos = {j: a for a, j in enumerate(order)}
    gp = substitute(g, tuple(pos[j] for j in range(g.n)), g.n)
    zp = sum(((z >> order[a]) & 1) << a for a in range(g.n))
    inst = build_hard_instance(gp, k, zp)
    b = inst.discrepancy(eps)
    return PipelineResult(route, k, z, coords, inst.witness.d0, inst.inner, b.value,
                          b.log4_ratio, "vacuous at this size" if b.vacuous else "")


@dataclass
class ChainReport:
    fields: dict
    checks: list[Check]
    flags: list[str]

    @property
    def chain_ok(self) -> bool:
        return all(c.ok for c in self.checks)


def chain_report(f: TruthTable, exact_d: Optional[bool] = None,
                 with_pipeline: bool = True) -> ChainReport:
    caps.check("chain_arity", f.n)
    exact_d = f.n <= 3 if exact_d is None else exact_d
    flags: list[str] = []
    F1, F2 = comm_matrix(f, "and"), comm_matrix(f, "or")
    rk1, rk2 = rational_rank(F1), rational_rank(F2)
    poly = anf(f)
    m, d = poly.mon, max(poly.degree, 0)
    m_or = mon(shift(f, (1 << f.n) - 1))
    b = measures.bs(f)
    s = measures.sensitivity(f)
    depth = measures.dt(f)
    checks = [
        Check("rank-mon-and", rk1, "==", m, rk1 == m),
        Check("rank-mon-or", rk2, "==", m_or, rk2 == m_or),
        Check("rank-lb", max(rk1, rk2), ">=", f"{RANK_LB} = {(3 / (2 * math.sqrt(2))) ** d:.12g}",
              _pow_ge(max(rk1, rk2) ** 2, 9, 8, d)),
        Check("dt-bs3", depth, "<=", b ** 3, depth <= b ** 3),
    ]
    z, mz, ok = hard_shift(f)
    checks.append(Check("hard-shift", mz, ">=", f"(3/2)^{d}", ok))
    for i in range(1, f.n + 1):
        rc = restriction_mon_check(f, i)
        checks.append(Check(f"restriction-{i}", max(rc.mon_restricted, rc.mon_flipped), ">=",
                            Fraction(rc.mon_f, 2), rc.holds))
    worst = 0
    correct = True
    for mode in ("and", "or"):
        op = (lambda a, c: a & c) if mode == "and" else (lambda a, c: a | c)
        for x in range(f.size):
            for y in range(f.size):
                t = protocol_sim(f, mode, x, y)
                worst = max(worst, t.bits)
                correct &= t.output == f(op(x, y))
    checks.append(Check("protocol-bits", worst, "<=", 2 * depth, worst <= 2 * depth))
    checks.append(Check("protocol-correct", correct, "==", True, correct))
    d1 = d2 = None
    if exact_d:
        try:
            d1, d2 = d_exact(f, "and"), d_exact(f, "or")
        except caps.CapError:
            exact_d = False
    if exact_d:
        checks.append(Check("D-2dt", max(d1, d2), "<=", 2 * depth, max(d1, d2) <= 2 * depth))
        checks.append(Check("log-rank-and", 2 ** d1, ">=", rk1, 2 ** d1 >= rk1))
        checks.append(Check("log-rank-or", 2 ** d2, ">=", rk2, 2 ** d2 >= rk2))
    else:
        flags.append("exact-D unavailable: D in [log2 rk, 2*dt]")
    disc = 0.0
    pipe = None
    if with_pipeline:
        pipe = discrepancy_pipeline(f)
        disc = pipe.bound
        checks.append(Check("disc-nonneg", disc, ">=", 0, disc >= 0))
        if pipe.note:
            flags.append(f"discrepancy: {pipe.note}")
    fields = {
        "rank_and": rk1,
        "rank_or": rk2,
        "mon": m,
        "deg": poly.degree,
        "bs": b,
        "s": s,
        "dt": depth,
        "d_exact_and": d1,
        "d_exact_or": d2,
        "disc_bound": disc,
        "chain_ok": None,  # filled below
        "log2_rank_and": math.log2(rk1) if rk1 else 0.0,
        "log2_rank_or": math.log2(rk2) if rk2 else 0.0,
        "d_bracket": [max(math.log2(rk1) if rk1 else 0.0, math.log2(rk2) if rk2 else 0.0),
                      2 * depth],
        "bs_quarter_proxy": b ** 0.25,
        "hard_shift_z": z,
        "mon_hard_shift": mz,
        "mon_or": m_or,
        "rank_lower_bound": (3 / (2 * math.sqrt(2))) ** d,
    }
    if pipe is not None:
        fields["disc_route"] = pipe.route
        fields["disc_k"] = pipe.k
        fields["disc_log4_ratio"] = pipe.log4_ratio
    rep = ChainReport(fields, checks, flags)
    rep.fields["chain_ok"] = rep.chain_ok
    return rep


# --- composition ---------------------------------------------------------------

@dataclass
class CompositionReport:
    classes: list[GadgetClass]
    hypothesis_ok: bool
    rank: int
    gadget_ranks: list[int]
    rank_lower_bound: float
    dt: int
    d_exact: Optional[int]
    gadget_d: list[Optional[int]]
    checks: list[Check]
    randomized_bound: str


def composition_report(f: TruthTable, gadgets: Sequence[np.ndarray]) -> CompositionReport:
    """Quantities behind the composition theorems for f over 0/1 gadgets.

    Bounds are asserted only when every gadget contains both 2x2 patterns.
    """
    classes = [gadget_classify(g) for g in gadgets]
    hyp = all(c.kind == "BOTH_PATTERNS" for c in classes)
    F = comm_matrix(f, "composed", gadgets=gadgets)
    rk = rational_rank(F)
    gsigns = [sign_matrix(g) for g in gadgets]
    granks = [rational_rank(g) for g in gsigns]
    poly = anf(f)
    deg = max(poly.degree, 0)
    depth = measures.dt(f)
    side = caps.get("cc_side")
    gd = [deterministic_cc_exact(g).D if max(g.shape) <= side else None for g in gsigns]
    dF = deterministic_cc_exact(F).D if max(F.shape) <= side else None
    checks = []
    depends = [i for i in range(f.n) if restrict(f, i, 0) != restrict(f, i, 1)]
    if hyp:
        checks.append(Check("rank-lb", rk, ">=", f"{RANK_LB} = {(3 / (2 * math.sqrt(2))) ** deg:.12g}",
                            _pow_ge(rk * rk, 9, 8, deg)))
        for i in depends:
            checks.append(Check(f"rank-projection-{i + 1}", rk, ">=", granks[i], rk >= granks[i]))
    if dF is not None and all(v is not None for v in gd):
        ub = 2 * depth * max(gd, default=0)
        checks.append(Check("D-composed", dF, "<=", ub, dF <= ub))
        checks.append(Check("log-rank", 2 ** dF, ">=", rk, 2 ** dF >= rk))
    return CompositionReport(classes, hyp, rk, granks, (3 / (2 * math.sqrt(2))) ** deg, depth,
                             dF, gd, checks,
                             f"R(F) <= O({depth} log {depth}) * max_i R_1/3(g_i)")
