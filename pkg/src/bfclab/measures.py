"""Sensitivity-type measures, decision-tree depth and the projection lemma.

Sensitive blocks at a point z are handled as a 2^n-bit integer over subset
masks (bit S set iff f(z xor e_S) != f(z)).  Only inclusion-minimal sensitive
blocks matter for packing: any block can be swapped for a minimal sensitive
subset without breaking disjointness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

from bfclab import caps
from bfclab.boolfn import (
    Symbol,
    TruthTable,
    _low_half_mask,
    _xor_shift_bits,
    bits_of,
    popcount,
    substitute,
)

PACK_BUDGET = 200_000


@dataclass(frozen=True)
class SensitivityCertificate:
    z: int
    blocks: tuple[int, ...]
    ell: int
    zero_only: bool
    n: int

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def max_block(self) -> int:
        return max((popcount(b) for b in self.blocks), default=0)

    def validate(self, f: TruthTable) -> bool:
        union = 0
        for b in self.blocks:
            if b == 0 or b & union or popcount(b) > self.ell:
                return False
            union |= b
            if f(self.z ^ b) == f(self.z):
                return False
        return not (self.zero_only and self.z & union)

    def to_json(self) -> dict:
        return {
            "z": list(bits_of(self.z, self.n)),
            "blocks": [[i + 1 for i in range(self.n) if (b >> i) & 1] for b in self.blocks],
            "ell": self.ell,
            "zero_only": self.zero_only,
            "k": self.k,
        }

    @classmethod
    def from_json(cls, obj: Union[str, dict]) -> "SensitivityCertificate":
        if isinstance(obj, str):
            obj = json.loads(obj)
        n = len(obj["z"])
        blocks = tuple(sum(1 << (i - 1) for i in blk) for blk in obj["blocks"])
        cert = cls(sum(b << i for i, b in enumerate(obj["z"])), blocks,
                   obj["ell"], obj["zero_only"], n)
        if cert.k != obj["k"]:
            raise ValueError("certificate k does not match its block count")
        return cert


@dataclass(frozen=True)
class BlockSensitivityResult:
    k: int
    certificate: SensitivityCertificate
    exact: bool = True


# --- subset-mask helpers ----------------------------------------------------

def sensitive_mask(f: TruthTable, z: int) -> int:
    g = _xor_shift_bits(f.bits, f.n, z)
    full = (1 << f.size) - 1
    return (g ^ full) if g & 1 else g


def minimal_blocks(sens: int, n: int) -> int:
    """Inclusion-minimal members of a family given as a subset-mask bitset."""
    up = sens
    for i in range(n):
        up |= (up & _low_half_mask(n, i)) << (1 << i)
    strict = 0
    for i in range(n):
        strict |= (up & _low_half_mask(n, i)) << (1 << i)
    return sens & ~strict


@lru_cache(maxsize=None)
def size_mask(n: int, ell: int) -> int:
    return sum(1 << s for s in range(1 << n) if popcount(s) <= ell)


@lru_cache(maxsize=None)
def subsets_mask(n: int, c: int) -> int:
    """Bitset of all subsets of c."""
    out, s = 0, c
    while True:
        out |= 1 << s
        if s == 0:
            return out
        s = (s - 1) & c


def _members(family: int) -> list[int]:
    out = []
    while family:
        low = family & -family
        out.append(low.bit_length() - 1)
        family ^= low
    return out


_PACK_CACHE: dict[int, tuple[int, tuple[int, ...], bool]] = {}


def max_packing(family: int, n: int) -> tuple[int, tuple[int, ...], bool]:
    """Largest set of pairwise-disjoint members of ``family``.

    Exact memoized branching on the lowest uncovered element; ties go to the
    lexicographically smallest sorted block tuple.  Returns
    ``(k, blocks, exact)`` where ``exact`` is False if the node budget ran out
    and the greedy seed was returned instead.
    """
    hit = _PACK_CACHE.get(family)
    if hit is not None:
        return hit
    blocks = _members(family)
    greedy, used = [], 0
    for b in sorted(blocks, key=lambda b: (popcount(b), b)):
        if not b & used:
            greedy.append(b)
            used |= b
    by_low: dict[int, list[int]] = {}
    for b in blocks:
        by_low.setdefault((b & -b).bit_length() - 1, []).append(b)
    memo: dict[int, tuple[int, tuple[int, ...]]] = {}
    budget = [PACK_BUDGET]

    def solve(avail: int) -> tuple[int, tuple[int, ...]]:
        if avail in memo:
            return memo[avail]
        budget[0] -= 1
        if budget[0] < 0:
            raise _Budget
        best: tuple[int, tuple[int, ...]] = (0, ())
        rest = avail
        while rest:
            low = rest & -rest
            i = low.bit_length() - 1
            cands = [b for b in by_low.get(i, ()) if b & avail == b]
            if cands:
                skip = solve(avail & ~low)
                best = skip
                for b in cands:
                    k, bl = solve(avail & ~b)
                    cand = (k + 1, tuple(sorted(bl + (b,))))
                    if cand[0] > best[0] or (cand[0] == best[0] and cand[1] < best[1]):
                        best = cand
                break
            rest ^= low
        memo[avail] = best
        return best

    try:
        k, bl = solve((1 << n) - 1)
        result = (k, bl, True)
    except _Budget:
        result = (len(greedy), tuple(sorted(greedy)), False)
    _PACK_CACHE[family] = result
    return result


class _Budget(Exception):
    pass


def _family_at(f: TruthTable, z: int, ell: int, zero_only: bool) -> int:
    fam = minimal_blocks(sensitive_mask(f, z), f.n) & size_mask(f.n, ell)
    if zero_only:
        fam &= subsets_mask(f.n, ~z & ((1 << f.n) - 1))
    return fam


def block_sensitivity(f: TruthTable, ell: Optional[int] = None,
                      zero_only: bool = False) -> BlockSensitivityResult:
    """Exact max number of disjoint sensitive blocks of size <= ell at one point.

    ``ell=1`` gives s(f), ``ell=None`` (= n) gives bs(f); with ``zero_only`` the
    witness must vanish on the union of the blocks (zbs).  Exact for arity up
    to the ``bs_exact_arity`` cap; above it the result may be flagged inexact.
    """
    caps.check("bs_arity", f.n)
    ell = f.n if ell is None else ell
    if not 1 <= ell <= max(f.n, 1):
        raise ValueError(f"block size bound must be in [1, {f.n}]")
    best_k, best_cert, exact = 0, SensitivityCertificate(0, (), ell, zero_only, f.n), True
    for z in range(f.size):
        fam = _family_at(f, z, ell, zero_only)
        if popcount(fam) <= best_k:
            continue
        k, blocks, ok = max_packing(fam, f.n)
        exact &= ok
        if k > best_k:
            best_k = k
            best_cert = SensitivityCertificate(z, blocks, ell, zero_only, f.n)
    return BlockSensitivityResult(best_k, best_cert, exact)


def sensitivity(f: TruthTable) -> int:
    return block_sensitivity(f, 1).k


def bs(f: TruthTable) -> int:
    return block_sensitivity(f).k


def zbs(f: TruthTable) -> int:
    return block_sensitivity(f, zero_only=True).k


def max_zbs_shift(f: TruthTable) -> tuple[int, int]:
    """Shift z maximizing zbs(f_z), smallest such z; returns (z, zbs(f_z)).

    zbs(f_z) at witness w uses the blocks of f at w xor z that avoid w's ones,
    so the minimal families are computed once per point of f.
    """
    caps.check("bs_arity", f.n)
    full = (1 << f.n) - 1
    fams = [minimal_blocks(sensitive_mask(f, u), f.n) for u in range(f.size)]
    zero_masks = [subsets_mask(f.n, ~w & full) for w in range(f.size)]
    best_z, best_k = 0, 0
    for z in range(f.size):
        k = 0
        for w in range(f.size):
            fam = fams[w ^ z] & zero_masks[w]
            if popcount(fam) > k:
                k = max(k, max_packing(fam, f.n)[0])
        if k > best_k:
            best_z, best_k = z, k
    return best_z, best_k


# --- decision trees ----------------------------------------------------------

@dataclass(frozen=True)
class Node:
    var: int  # 0-based variable index of the original function
    lo: "Tree"
    hi: "Tree"


Tree = Union[int, Node]


@dataclass(frozen=True)
class DecisionTree:
    root: Tree
    n: int
    depth: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "depth", _depth(self.root))

    def __call__(self, x: int) -> int:
        node = self.root
        while isinstance(node, Node):
            node = node.hi if (x >> node.var) & 1 else node.lo
        return node

    def path(self, x: int) -> list[int]:
        """Variables queried on input x, in order."""
        out, node = [], self.root
        while isinstance(node, Node):
            out.append(node.var)
            node = node.hi if (x >> node.var) & 1 else node.lo
        return out

    def to_json(self):
        def enc(t):
            return t if isinstance(t, int) else {"var": t.var + 1, "lo": enc(t.lo), "hi": enc(t.hi)}
        return enc(self.root)


def _depth(t: Tree) -> int:
    return 0 if isinstance(t, int) else 1 + max(_depth(t.lo), _depth(t.hi))


def _restrict_bits(bits: int, n: int, i: int, b: int) -> int:
    step = 1 << i
    block = (1 << step) - 1
    out, pos = 0, 0
    for start in range(b * step, 1 << n, step << 1):
        out |= ((bits >> start) & block) << pos
        pos += step
    return out


@lru_cache(maxsize=None)
def _dt(n: int, bits: int) -> tuple[int, int]:
    """(depth, best variable) for the packed table; variable -1 for constants."""
    if bits == 0 or bits == (1 << (1 << n)) - 1:
        return 0, -1
    best, arg = n + 1, -1
    for i in range(n):
        lo = _restrict_bits(bits, n, i, 0)
        hi = _restrict_bits(bits, n, i, 1)
        if lo == hi:
            continue  # irrelevant variable
        d = 1 + max(_dt(n - 1, lo)[0], _dt(n - 1, hi)[0])
        if d < best:
            best, arg = d, i
    return best, arg


def dt(f: TruthTable) -> int:
    caps.check("dt_arity", f.n)
    return _dt(f.n, f.bits)[0]


def decision_tree_depth(f: TruthTable) -> tuple[int, DecisionTree]:
    """Exact optimal depth and an optimal tree (memoized over subfunctions)."""
    caps.check("dt_arity", f.n)

    def build(n: int, bits: int, names: tuple[int, ...]) -> Tree:
        d, i = _dt(n, bits)
        if i < 0:
            return -1 if bits & 1 else 1
        rest = names[:i] + names[i + 1:]
        return Node(names[i], build(n - 1, _restrict_bits(bits, n, i, 0), rest),
                    build(n - 1, _restrict_bits(bits, n, i, 1), rest))

    tree = DecisionTree(build(f.n, f.bits, tuple(range(f.n))), f.n)
    return tree.depth, tree


# --- projection onto a sensitive subfunction -------------------------------

@dataclass(frozen=True)
class Projection:
    g: TruthTable
    sigma: tuple[Symbol, ...]
    source: SensitivityCertificate   # bs certificate of f
    image: SensitivityCertificate    # size-<=2 certificate of g at the same z


def project_to_sensitive(f: TruthTable) -> Projection:
    """Identify variables inside each sensitive block so blocks shrink to size <= 2.

    Each block mixing zeros and ones of the witness is split into its zero part
    and its one part, each driven by its smallest variable; every other block
    is driven by its smallest variable; variables outside the blocks stay.
    """
    res = block_sensitivity(f)
    if res.k == 0:
        raise ValueError("projection needs a non-constant function")
    cert = res.certificate
    z = cert.z
    rep = list(range(f.n))
    image_blocks = []
    for blk in cert.blocks:
        zeros = blk & ~z
        ones = blk & z
        parts = [p for p in (zeros, ones) if p]
        img = 0
        for part in parts:
            low = (part & -part).bit_length() - 1
            for j in range(f.n):
                if (part >> j) & 1:
                    rep[j] = low
            img |= 1 << low
        image_blocks.append(img)
    sigma = tuple(rep)
    g = substitute(f, sigma, f.n)
    image = SensitivityCertificate(z, tuple(sorted(image_blocks)), 2, False, f.n)
    return Projection(g, sigma, cert, image)
