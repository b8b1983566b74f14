"""Boolean and real-valued functions on the hypercube, with exact transforms.

Index convention (shared by every module): a point ``x = (x_1, ..., x_n)`` of
``{0,1}^n`` is stored as the integer ``sum(x_i << (i - 1))``, so ``x_1`` is the
least significant bit.  Subsets ``S`` of ``{1..n}`` use the same bitmask
encoding.  Boolean outputs follow the ``{-1,+1}`` convention with ``-1``
meaning "true"; in a packed truth table a set bit encodes ``-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

MAX_ARITY = 20

Number = Union[int, Fraction]
# A substitution symbol: a 0-based variable index of the new function, or a
# constant given as the string "0" or "1".
Symbol = Union[int, str]


class ParseError(ValueError):
    """Malformed truth-table text or unknown builtin name."""


def popcount(v: int) -> int:
    return bin(v).count("1")


def bits_of(x: int, n: int) -> tuple[int, ...]:
    return tuple((x >> i) & 1 for i in range(n))


def index_of(bits: Sequence[int]) -> int:
    return sum((b & 1) << i for i, b in enumerate(bits))


def chi(s: int, x: int) -> int:
    """The character chi_S(x) = (-1)^{sum_{i in S} x_i}."""
    return -1 if popcount(s & x) & 1 else 1


def _check_arity(n: int) -> None:
    if not 0 <= n <= MAX_ARITY:
        raise ValueError(f"arity must be in [0, {MAX_ARITY}], got {n}")


def _xor_shift_bits(bits: int, n: int, z: int) -> int:
    """Permute a packed 2^n-bit table so that bit x moves to bit x ^ z."""
    for i in range(n):
        if not (z >> i) & 1:
            continue
        step = 1 << i
        mask = _low_half_mask(n, i)
        bits = ((bits >> step) & mask) | ((bits & mask) << step)
    return bits


_LOW_MASKS: dict[tuple[int, int], int] = {}


def _low_half_mask(n: int, i: int) -> int:
    """Bits at all x with x_i = 0 (0-based i) in a 2^n-bit table."""
    key = (n, i)
    m = _LOW_MASKS.get(key)
    if m is None:
        block = (1 << (1 << i)) - 1
        m = 0
        for start in range(0, 1 << n, 1 << (i + 1)):
            m |= block << start
        _LOW_MASKS[key] = m
    return m


@dataclass(frozen=True)
class TruthTable:
    """A Boolean function {0,1}^n -> {-1,+1} packed into an integer."""

    n: int
    bits: int

    def __post_init__(self) -> None:
        _check_arity(self.n)
        if self.bits < 0 or self.bits >> self.size:
            raise ValueError(f"bits do not fit a table of arity {self.n}")

    @property
    def size(self) -> int:
        return 1 << self.n

    def __call__(self, x: int) -> int:
        return -1 if (self.bits >> x) & 1 else 1

    def values(self) -> np.ndarray:
        """Output vector in {-1,+1} as int64, indexed by point."""
        return 1 - 2 * _small_bits(self.bits, self.size)

    def is_constant(self) -> bool:
        return self.bits == 0 or self.bits == (1 << self.size) - 1

    def negate(self) -> "TruthTable":
        return TruthTable(self.n, self.bits ^ ((1 << self.size) - 1))

    def real(self) -> "RealTable":
        return RealTable(self.n, tuple(Fraction(v) for v in self.values().tolist()))

    @classmethod
    def from_values(cls, values: Iterable[int]) -> "TruthTable":
        vals = list(values)
        n = len(vals).bit_length() - 1
        if len(vals) != 1 << n:
            raise ValueError("table length must be a power of two")
        bits = 0
        for x, v in enumerate(vals):
            if v == -1:
                bits |= 1 << x
            elif v != 1:
                raise ValueError(f"value {v!r} is not in {{-1,+1}}")
        return cls(n, bits)

    @classmethod
    def from_predicate(cls, n: int, pred: Callable[[tuple[int, ...]], bool]) -> "TruthTable":
        """Build from a predicate on bit tuples; True maps to -1."""
        bits = 0
        for x in range(1 << n):
            if pred(bits_of(x, n)):
                bits |= 1 << x
        return cls(n, bits)

    @classmethod
    def constant(cls, n: int, value: int = 1) -> "TruthTable":
        return cls(n, 0 if value == 1 else (1 << (1 << n)) - 1)

    def __repr__(self) -> str:
        return f"TruthTable({format_hex(self)!r})"


def _small_bits(bits: int, size: int) -> np.ndarray:
    raw = np.frombuffer(bits.to_bytes((size + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].astype(np.int64)


@dataclass(frozen=True)
class RealTable:
    """A function {0,1}^n -> Q, values indexed by point."""

    n: int
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        _check_arity(self.n)
        if len(self.values) != 1 << self.n:
            raise ValueError(f"expected {1 << self.n} values, got {len(self.values)}")

    @classmethod
    def of(cls, values: Iterable[Number]) -> "RealTable":
        vals = tuple(Fraction(v) for v in values)
        return cls(len(vals).bit_length() - 1, vals)

    @classmethod
    def from_function(cls, n: int, fn: Callable[[int], Number]) -> "RealTable":
        return cls(n, tuple(Fraction(fn(x)) for x in range(1 << n)))

    def __call__(self, x: int) -> Fraction:
        return self.values[x]

    def scale(self, c: Number) -> "RealTable":
        c = Fraction(c)
        return RealTable(self.n, tuple(c * v for v in self.values))

    def l1(self) -> Fraction:
        return sum((abs(v) for v in self.values), Fraction(0))


@dataclass(frozen=True)
class Spectrum:
    """Exact Fourier coefficients, ``coeffs[S]`` for every subset mask S."""

    n: int
    coeffs: tuple[Fraction, ...]

    def __getitem__(self, s: int) -> Fraction:
        return self.coeffs[s]

    def support(self) -> dict[int, Fraction]:
        return {s: c for s, c in enumerate(self.coeffs) if c != 0}

    @property
    def degree(self) -> int:
        """Largest |S| with a nonzero coefficient (-1 for the zero function)."""
        return max((popcount(s) for s, c in enumerate(self.coeffs) if c != 0), default=-1)

    def max_abs(self) -> Fraction:
        return max(abs(c) for c in self.coeffs)

    def inverse(self) -> RealTable:
        # f(x) = sum_S fhat(S) chi_S(x): the same butterfly, no normalization.
        return RealTable(self.n, tuple(_exact_butterfly(self.coeffs, self.n, "hadamard")))


@dataclass(frozen=True)
class MultilinearPoly:
    """Unique expansion f(x) = sum_S alpha_S prod_{i in S} x_i; zero terms omitted."""

    n: int
    terms: Mapping[int, Fraction]

    @property
    def degree(self) -> int:
        return max((popcount(s) for s in self.terms), default=-1)

    @property
    def mon(self) -> int:
        return len(self.terms)

    def __call__(self, x: int) -> Fraction:
        return sum((a for s, a in self.terms.items() if s & x == s), Fraction(0))

    def to_table(self) -> RealTable:
        full = [self.terms.get(s, Fraction(0)) for s in range(1 << self.n)]
        return RealTable(self.n, tuple(_exact_butterfly(full, self.n, "zeta")))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for s in sorted(self.terms, key=lambda s: (popcount(s), s)):
            mono = "*".join(f"x{i + 1}" for i in range(self.n) if (s >> i) & 1)
            coef = self.terms[s]
            parts.append(f"{coef}" if not mono else (mono if coef == 1 else f"{coef}*{mono}"))
        return " + ".join(parts).replace("+ -", "- ")


def _exact_butterfly(values: Sequence[Number], n: int, kind: str) -> list[Fraction]:
    """O(n 2^n) in-place passes over exact values.

    ``hadamard``: (lo, hi) -> (lo + hi, lo - hi); ``mobius``: hi -= lo;
    ``zeta``: hi += lo.  Fractions are cleared to a common denominator so the
    passes run on integer (object) arrays.
    """
    fr = [Fraction(v) for v in values]
    den = math.lcm(*(v.denominator for v in fr)) if fr else 1
    nums = [int(v * den) for v in fr]
    bound = max((abs(v) for v in nums), default=0) << n
    dtype = np.int64 if bound < 2 ** 62 else object
    a = np.array(nums, dtype=dtype)
    for i in range(n):
        view = a.reshape(-1, 2, 1 << i)
        lo = view[:, 0, :].copy()
        hi = view[:, 1, :]
        if kind == "hadamard":
            view[:, 0, :] = lo + hi
            view[:, 1, :] = lo - hi
        elif kind == "mobius":
            view[:, 1, :] = hi - lo
        elif kind == "zeta":
            view[:, 1, :] = hi + lo
        else:
            raise ValueError(kind)
    return [Fraction(int(v), den) for v in a.tolist()]


def _as_real(f: Union[TruthTable, RealTable]) -> tuple[int, Sequence[Number]]:
    if isinstance(f, TruthTable):
        return f.n, f.values().tolist()
    return f.n, f.values


def fourier(f: Union[TruthTable, RealTable]) -> Spectrum:
    """fhat(S) = 2^-n sum_x f(x) chi_S(x), exact."""
    n, vals = _as_real(f)
    raw = _exact_butterfly(vals, n, "hadamard")
    scale = Fraction(1, 1 << n)
    return Spectrum(n, tuple(c * scale for c in raw))


def anf(f: Union[TruthTable, RealTable]) -> MultilinearPoly:
    """Moebius inversion: alpha_S = sum_{T subset S} (-1)^{|S|-|T|} f(1_T)."""
    n, vals = _as_real(f)
    alpha = _exact_butterfly(vals, n, "mobius")
    return MultilinearPoly(n, {s: a for s, a in enumerate(alpha) if a != 0})


def mon(f: Union[TruthTable, RealTable]) -> int:
    if isinstance(f, TruthTable):
        a = f.values()
        for i in range(f.n):
            view = a.reshape(-1, 2, 1 << i)
            view[:, 1, :] -= view[:, 0, :]
        return int(np.count_nonzero(a))
    return anf(f).mon


def shift(f, z: int):
    """f_z(x) = f(x XOR z).  Accepts TruthTable or RealTable."""
    if not 0 <= z < 1 << f.n:
        raise ValueError(f"shift {z} out of range for arity {f.n}")
    if isinstance(f, TruthTable):
        return TruthTable(f.n, _xor_shift_bits(f.bits, f.n, z))
    return RealTable(f.n, tuple(f.values[x ^ z] for x in range(1 << f.n)))


def restrict(f, i: int, b: int):
    """Fix 0-based variable i to bit b; the result has one fewer variable."""
    if not 0 <= i < f.n:
        raise ValueError(f"variable index {i} out of range")
    low = (1 << i) - 1
    pts = [((x & ~low) << 1) | (x & low) | (b << i) for x in range(1 << (f.n - 1))]
    if isinstance(f, TruthTable):
        return TruthTable(f.n - 1, sum(((f.bits >> p) & 1) << x for x, p in enumerate(pts)))
    return RealTable(f.n - 1, tuple(f.values[p] for p in pts))


def substitute(f: TruthTable, sigma: Sequence[Symbol], m: int) -> TruthTable:
    """g(x_1..x_m) = f(xi_1, ..., xi_n) where each xi_j is a variable of g or a constant.

    ``sigma[j]`` is a 0-based index into g's variables, or ``"0"``/``"1"``.
    """
    if m < 1:
        raise ValueError("substitution target arity must be at least 1")
    _check_arity(m)
    if len(sigma) != f.n:
        raise ValueError(f"substitution needs {f.n} symbols, got {len(sigma)}")
    fixed = 0
    moves: list[tuple[int, int]] = []  # (source var of g, target var of f)
    for j, sym in enumerate(sigma):
        if sym in ("0", "1"):
            fixed |= int(sym) << j
        elif isinstance(sym, int) and 0 <= sym < m:
            moves.append((sym, j))
        else:
            raise ValueError(f"bad substitution symbol {sym!r}")
    bits = 0
    for x in range(1 << m):
        y = fixed
        for src, dst in moves:
            y |= ((x >> src) & 1) << dst
        if (f.bits >> y) & 1:
            bits |= 1 << x
    return TruthTable(m, bits)


def format_symbol(sym: Symbol) -> str:
    return sym if isinstance(sym, str) else f"x{sym + 1}"


@dataclass(frozen=True)
class Symmetrization:
    """Hamming-level averages of a function and their interpolating polynomial."""

    profile: tuple[Fraction, ...]
    coeffs: tuple[Fraction, ...]  # power basis in t, trailing zeros trimmed

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t: Number) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc


def symmetrize(phi: Union[TruthTable, RealTable]) -> Symmetrization:
    n, vals = _as_real(phi)
    sums = [Fraction(0)] * (n + 1)
    counts = [0] * (n + 1)
    for x, v in enumerate(vals):
        t = popcount(x)
        sums[t] += Fraction(v)
        counts[t] += 1
    profile = tuple(s / c for s, c in zip(sums, counts))
    return Symmetrization(profile, tuple(interpolate(list(range(n + 1)), profile)))


def interpolate(xs: Sequence[Number], ys: Sequence[Number]) -> list[Fraction]:
    """Exact Newton interpolation, returned in the power basis (trimmed)."""
    xs = [Fraction(x) for x in xs]
    dd = [Fraction(y) for y in ys]
    k = len(xs)
    for j in range(1, k):
        for i in range(k - 1, j - 1, -1):
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - j])
    coeffs = [Fraction(0)] * k
    # Horner on the Newton form, expanding into power-basis coefficients.
    for i in range(k - 1, -1, -1):
        nxt = [Fraction(0)] * k
        for p in range(k - 1):
            nxt[p + 1] += coeffs[p]
            nxt[p] -= xs[i] * coeffs[p]
        nxt[0] += dd[i]
        coeffs = nxt
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


# --- builtins and text format ---------------------------------------------

def _builtin_predicates() -> dict[str, Callable[[tuple[int, ...]], bool]]:
    return {
        "AND": lambda b: all(b),
        "OR": lambda b: any(b),
        "XOR": lambda b: sum(b) % 2 == 1,
        "MAJ": lambda b: 2 * sum(b) > len(b),
        "EQ": lambda b: len(set(b)) <= 1,
    }


BUILTINS = tuple(_builtin_predicates())


def builtin(name: str, n: int) -> TruthTable:
    """AND, OR, XOR, MAJ (strict majority) or EQ (all bits equal) on n bits."""
    preds = _builtin_predicates()
    key = name.upper()
    if key not in preds:
        raise ParseError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
    if not 1 <= n <= MAX_ARITY:
        raise ParseError(f"builtin arity must be in [1, {MAX_ARITY}]")
    return TruthTable.from_predicate(n, preds[key])


def format_hex(f: TruthTable) -> str:
    digits = max(1, (f.size + 3) // 4)
    return f"n={f.n} hex=" + "".join("0123456789abcdef"[(f.bits >> (4 * j)) & 15]
                                     for j in range(digits))


def parse_hex(text: str) -> TruthTable:
    """Parse ``n=<arity> hex=<digits>``; least significant hex digit first."""
    fields = dict(part.split("=", 1) for part in text.split() if "=" in part)
    if set(fields) != {"n", "hex"} or len(text.split()) != 2:
        raise ParseError(f"expected 'n=<arity> hex=<digits>', got {text!r}")
    try:
        n = int(fields["n"])
    except ValueError as exc:
        raise ParseError(f"bad arity {fields['n']!r}") from exc
    if not 1 <= n <= MAX_ARITY:
        raise ParseError(f"arity must be in [1, {MAX_ARITY}]")
    digits = fields["hex"].lower()
    want = max(1, ((1 << n) + 3) // 4)
    if len(digits) != want or any(c not in "0123456789abcdef" for c in digits):
        raise ParseError(f"arity {n} needs exactly {want} hex digits")
    bits = sum(int(c, 16) << (4 * j) for j, c in enumerate(digits))
    if bits >> (1 << n):
        raise ParseError("hex digits set bits beyond the table")
    return TruthTable(n, bits)


def all_functions(n: int) -> Iterable[TruthTable]:
    for bits in range(1 << (1 << n)):
        yield TruthTable(n, bits)
