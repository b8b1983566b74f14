"""Pattern matrices, their spectral norm, and the generalized discrepancy bound.

Rows of a pattern matrix are points x of {0,1}^N (integer encoded, x_1 lowest
bit).  Columns are pairs (V, w): V picks one coordinate from each of the n
contiguous blocks of [N] (0-based positions, in block order), w is a point of
{0,1}^n.  Column order is V in lexicographic order, then w ascending.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from bfclab import caps
from bfclab.boolfn import RealTable, TruthTable, fourier, popcount

TOL = 1e-12


class ConvergenceError(RuntimeError):
    def __init__(self, method: str, iterations: int):
        super().__init__(f"{method} did not converge after {iterations} iterations")
        self.iterations = iterations


@dataclass(frozen=True)
class PatternSpec:
    N: int
    n: int
    phi: RealTable

    def __post_init__(self) -> None:
        if self.n < 1 or self.N % self.n:
            raise ValueError(f"block count {self.n} must divide N = {self.N}")
        if self.phi.n != self.n:
            raise ValueError("phi must have arity n")

    @property
    def shape(self) -> tuple[int, int]:
        return 1 << self.N, (self.N // self.n) ** self.n * (1 << self.n)


@dataclass
class DenseMatrix:
    """Dense matrix, exact (object array of Fraction) or float64, with labels."""

    entries: np.ndarray
    row_labels: list = field(default_factory=list)
    col_labels: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.entries.ndim != 2:
            raise ValueError("entries must be two-dimensional")
        r, c = self.entries.shape
        if self.row_labels and len(self.row_labels) != r:
            raise ValueError("row labels do not match the row count")
        if self.col_labels and len(self.col_labels) != c:
            raise ValueError("column labels do not match the column count")

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def exact(self) -> bool:
        return self.entries.dtype == object

    @property
    def mode(self) -> str:
        return "rational" if self.exact else "float"

    def as_float(self) -> np.ndarray:
        return self.entries.astype(np.float64)

    def l1(self):
        if self.exact:
            return sum((abs(v) for v in self.entries.flat), Fraction(0))
        return float(np.abs(self.entries).sum())

    def inner(self, other: "DenseMatrix"):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        if self.exact and other.exact:
            return sum((a * b for a, b in zip(self.entries.flat, other.entries.flat) if a),
                       Fraction(0))
        return float(np.sum(self.as_float() * other.as_float()))

    def to_text(self) -> str:
        r, c = self.shape
        lines = [f"{r} {c} mode={self.mode}"]
        for row in self.entries:
            lines.append(" ".join(str(v) if self.exact else repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def labels_json(self) -> str:
        return json.dumps({"rows": self.row_labels, "cols": self.col_labels})

    @classmethod
    def from_text(cls, text: str, labels: Optional[str] = None) -> "DenseMatrix":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix text")
        head = lines[0].split()
        if len(head) != 3 or not head[2].startswith("mode="):
            raise ValueError("header must be '<rows> <cols> mode=<rational|float>'")
        r, c, mode = int(head[0]), int(head[1]), head[2][5:]
        if mode not in ("rational", "float"):
            raise ValueError(f"unknown mode {mode!r}")
        vals = [tok for ln in lines[1:] for tok in ln.split()]
        if len(vals) != r * c:
            raise ValueError(f"expected {r * c} entries, got {len(vals)}")
        if mode == "rational":
            arr = np.empty((r, c), dtype=object)
            arr.flat[:] = [Fraction(v) for v in vals]
        else:
            arr = np.array([float(v) for v in vals], dtype=np.float64).reshape(r, c)
        rows, cols = [], []
        if labels:
            meta = json.loads(labels)
            rows, cols = meta.get("rows", []), meta.get("cols", [])
        return cls(arr, rows, cols)


def exact_matrix(rows: Sequence[Sequence]) -> DenseMatrix:
    arr = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            arr[i, j] = Fraction(v)
    return DenseMatrix(arr)


# --- pattern matrices ---------------------------------------------------------

def enumerate_V(N: int, n: int) -> list[tuple[int, ...]]:
    """All V in V(N, n), as tuples of 0-based positions, lexicographic."""
    if n < 1 or N % n:
        raise ValueError(f"block count {n} must divide N = {N}")
    b = N // n
    caps.check("v_family", b ** n)
    return list(itertools.product(*(range(j * b, (j + 1) * b) for j in range(n))))


def _restriction_index(N: int, V: Sequence[int]) -> np.ndarray:
    """u[x] = x|_V as an integer, over all x in {0,1}^N."""
    x = np.arange(1 << N, dtype=np.int64)
    u = np.zeros_like(x)
    for j, pos in enumerate(V):
        u |= ((x >> pos) & 1) << j
    return u


def pattern_index(N: int, n: int) -> tuple[np.ndarray, list[tuple[tuple[int, ...], int]]]:
    """Integer matrix idx[x, col] = x|_V xor w, and the (V, w) column labels."""
    Vs = enumerate_V(N, n)
    cols = [(V, w) for V in Vs for w in range(1 << n)]
    idx = np.empty((1 << N, len(cols)), dtype=np.int64)
    c = 0
    for V in Vs:
        u = _restriction_index(N, V)
        for w in range(1 << n):
            idx[:, c] = u ^ w
            c += 1
    return idx, cols


def pattern_matrix(spec: PatternSpec, exact: bool = True) -> DenseMatrix:
    """A[x, (V, w)] = phi(x|_V xor w)."""
    r, c = spec.shape
    caps.check("pattern_entries", r * c)
    idx, cols = pattern_index(spec.N, spec.n)
    if exact:
        vals = np.empty(len(spec.phi.values), dtype=object)
        vals[:] = list(spec.phi.values)
    else:
        vals = np.array([float(v) for v in spec.phi.values])
    labels = [{"V": [p + 1 for p in V], "w": w} for V, w in cols]
    return DenseMatrix(vals[idx], list(range(r)), labels)


def pattern_norm_squared(spec: PatternSpec) -> Fraction:
    """||A||^2 = 2^{N+n} (N/n)^n max_S phihat(S)^2 (n/N)^{|S|}, exact."""
    N, n = spec.N, spec.n
    coeffs = fourier(spec.phi).coeffs
    ratio = Fraction(n, N)
    best = max(c * c * ratio ** popcount(s) for s, c in enumerate(coeffs))
    return Fraction(2 ** (N + n)) * Fraction(N, n) ** n * best


def pattern_spectral_norm(spec: PatternSpec) -> float:
    """Closed-form spectral norm of the pattern matrix, from the exact spectrum."""
    return math.sqrt(pattern_norm_squared(spec))


# --- spectral norm oracles --------------------------------------------------

def _gram(m: np.ndarray) -> np.ndarray:
    return m.T @ m if m.shape[0] >= m.shape[1] else m @ m.T


def jacobi_eigenvalues(a: np.ndarray, tol: float = TOL, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Rotations are applied in round-robin order, n/2 disjoint pairs at a time.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    size = n + (n % 2)
    scale = max(np.linalg.norm(a), 1e-300)
    players = list(range(size))
    for sweep in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(a.diagonal()))
        if off <= tol * scale:
            return np.sort(a.diagonal())
        for _ in range(size - 1):
            half = size // 2
            pairs = [(players[i], players[size - 1 - i]) for i in range(half)]
            pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
            players = [players[0], players[-1]] + players[1:-1]
            if not pairs:
                continue
            p = np.array([pq[0] for pq in pairs])
            q = np.array([pq[1] for pq in pairs])
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1))
            t[theta == 0] = 1.0
            c = 1 / np.sqrt(t * t + 1)
            s = t * c
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c - cq * s
            a[:, q] = cp * s + cq * c
    raise ConvergenceError("jacobi", max_sweeps)


def power_iteration(a: np.ndarray, tol: float = TOL, max_iter: int = 200_000,
                    seed: int = 0) -> float:
    """Largest eigenvalue of a positive semidefinite matrix."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = a @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        new = float(v @ (a @ v))
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            return new
        lam = new
    raise ConvergenceError("power iteration", max_iter)


def spectral_norm_oracle(m: Union[DenseMatrix, np.ndarray], method: str = "lapack") -> float:
    """sigma_1 by a symmetric eigensolve of the Gram matrix of the shorter side.

    ``lapack`` (default) calls numpy's symmetric eigensolver; ``jacobi`` and
    ``power`` are self-contained and serve as cross-checks (Jacobi is slow past
    a side of about 100).  Relative accuracy is about 1e-8 or better.
    """
    arr = m.as_float() if isinstance(m, DenseMatrix) else np.asarray(m, dtype=np.float64)
    caps.check("oracle_side", min(arr.shape))
    if not arr.size or not np.any(arr):
        return 0.0
    g = _gram(arr)
    if method == "jacobi":
        lam = float(jacobi_eigenvalues(g)[-1])
    elif method == "power":
        lam = power_iteration(g)
    elif method == "lapack":
        lam = float(np.linalg.eigvalsh(g)[-1])
    else:
        raise ValueError(f"unknown method {method!r}")
    return math.sqrt(max(lam, 0.0))


# --- generalized discrepancy ----------------------------------------------

@dataclass(frozen=True)
class DiscrepancyBound:
    value: float          # max(0, log_4 ratio): lower bound on quantum cost
    log4_ratio: float     # -inf when the numerator is not positive
    ratio: float
    inner: Union[Fraction, float]
    spectral_norm: float
    eps: Fraction
    vacuous: bool


def discrepancy_bound(psi: DenseMatrix, F: DenseMatrix, eps=Fraction(1, 10),
                      spectral_norm: Optional[float] = None) -> DiscrepancyBound:
    """(<Psi,F> - 2 eps) / (3 ||Psi|| sqrt(|X||Y|)) <= 4^{Q*_eps(F)}, as a bound on Q*.

    ``spectral_norm`` may be supplied (e.g. from the pattern-matrix closed
    form); otherwise the oracle computes it.
    """
    eps = Fraction(eps)
    if psi.shape != F.shape:
        raise ValueError(f"shape mismatch {psi.shape} vs {F.shape}")
    l1 = psi.l1()
    if (psi.exact and l1 != 1) or (not psi.exact and abs(l1 - 1) > 1e-9):
        raise ValueError(f"witness matrix must have unit L1 norm, got {l1}")
    inner = psi.inner(F)
    norm = spectral_norm_oracle(psi) if spectral_norm is None else spectral_norm
    rows, cols = psi.shape
    num = inner - 2 * eps
    if num <= 0:
        return DiscrepancyBound(0.0, float("-inf"), 0.0, inner, norm, eps, True)
    ratio = float(num) / (3 * norm * math.sqrt(rows * cols))
    log4 = math.log(ratio, 4)
    return DiscrepancyBound(max(0.0, log4), log4, ratio, inner, norm, eps, ratio <= 1)


# --- the hard instance -------------------------------------------------------

@dataclass
class HardInstance:
    k: int
    z: int
    witness: "object"          # approx.DualWitness on k/4 variables
    Psi: DenseMatrix
    M: DenseMatrix
    inner: Fraction
    l1: Fraction
    row_functions: list[TruthTable]  # f_{V,w}, one per column of M
    members_ok: bool

    @property
    def spec(self) -> PatternSpec:
        return PatternSpec(self.k // 2, self.k // 4, self.witness.table().scale(Fraction(1, 2 ** (3 * self.k // 4))))

    def discrepancy(self, eps=Fraction(1, 10)) -> DiscrepancyBound:
        # The closed form is exact for the pattern matrix Psi.
        return discrepancy_bound(self.Psi, self.M, eps, pattern_spectral_norm(self.spec))


class HypothesisError(ValueError):
    """The function is not sensitive to the first k singleton blocks at a zero witness."""


def check_hypothesis(g: TruthTable, k: int, z: int) -> None:
    if k < 1 or k > g.n:
        raise HypothesisError(f"need 1 <= k <= n, got k = {k}")
    if z & ((1 << k) - 1):
        raise HypothesisError("witness z must vanish on the first k coordinates")
    for i in range(k):
        if g(z ^ (1 << i)) == g(z):
            raise HypothesisError(f"coordinate {i + 1} is not sensitive at z")


def column_string(k: int, V: Sequence[int], w: int) -> int:
    """The string y in V(k, k/4) matched with column (V, w) of the half-size pattern matrix.

    Positions 2i, 2i+1 of y (0-based) carry x_i and its complement; picking
    coordinate i of block j in V(k/2, k/4) and bit w_j selects position 2i + w_j.
    """
    y = 0
    for j, i in enumerate(V):
        y |= 1 << (2 * i + ((w >> j) & 1))
    return y


def hard_entry(g: TruthTable, z: int, k: int, x: int, y: int) -> int:
    """g(z) g(z xor sum_i {x_i y_{2i-1} e_{2i-1} xor (not x_i) y_{2i} e_{2i}})."""
    flip = 0
    for i in range(k // 2):
        xi = (x >> i) & 1
        if xi and (y >> (2 * i)) & 1:
            flip |= 1 << (2 * i)
        if not xi and (y >> (2 * i + 1)) & 1:
            flip |= 1 << (2 * i + 1)
    return g(z) * g(z ^ flip)


def build_hard_instance(g: TruthTable, k: int, z: int = 0, witness=None) -> HardInstance:
    from bfclab.approx import in_family, max_witness_degree

    if k % 4:
        raise HypothesisError(f"k = {k} is not divisible by 4")
    caps.check("hard_instance_k", k)
    check_hypothesis(g, k, z)
    half, quarter = k // 2, k // 4
    if witness is None:
        witness = max_witness_degree(quarter).witness
        if witness is None:
            raise RuntimeError(f"no dual witness on {quarter} variables")
    scale = Fraction(1, 2 ** (3 * k // 4))
    spec = PatternSpec(half, quarter, witness.table().scale(scale))
    Psi = pattern_matrix(spec)
    _, cols = pattern_index(half, quarter)
    rows = 1 << half
    Mv = np.empty((rows, len(cols)), dtype=object)
    ys = []
    row_fns = []
    ok = True
    for c, (V, w) in enumerate(cols):
        y = column_string(k, V, w)
        ys.append(y)
        for x in range(rows):
            Mv[x, c] = Fraction(hard_entry(g, z, k, x, y))
        # Read off f_{V,w} on the points x|_V xor w and check it is well defined.
        vals = {}
        for x in range(rows):
            u = sum(((x >> p) & 1) << j for j, p in enumerate(V)) ^ w
            v = int(Mv[x, c])
            if vals.setdefault(u, v) != v:
                ok = False
        fn = TruthTable.from_values([vals[u] for u in range(1 << quarter)])
        row_fns.append(fn)
        ok &= in_family(fn)
    labels = [{"y": [(y >> b) & 1 for b in range(k)]} for y in ys]
    M = DenseMatrix(Mv, list(range(rows)), labels)
    return HardInstance(k, z, witness, Psi, M, Psi.inner(M), Psi.l1(), row_fns, ok)
