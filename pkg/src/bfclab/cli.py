"""bfclab command-line front end.

Exit codes: 0 all checks pass, 1 a checked identity failed, 2 input error,
3 a size cap was exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from bfclab import __version__, approx, caps, commlab, measures, spectral
from bfclab.boolfn import (
    ParseError,
    RealTable,
    TruthTable,
    anf,
    builtin,
    chi,
    format_hex,
    fourier,
    parse_hex,
)

SCHEMA = "bfclab.report/1"
EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3


class InputError(ValueError):
    """Bad command-line input; maps to exit code 2."""


# --- serialization -------------------------------------------------------------

def plain(v):
    """JSON-ready copy: rationals become 'p/q' strings, floats keep 12 significant digits."""
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v) or math.isnan(v):
            return str(v)
        return float(f"{v:.12g}")
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, dict):
        return {str(k): plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [plain(x) for x in v]
    return str(v)


def dump(obj) -> str:
    return json.dumps(plain(obj), indent=2, sort_keys=True) + "\n"


# --- input parsing ----------------------------------------------------------------

def read_function(args) -> TruthTable:
    if args.fn and args.hex:
        raise InputError("give either --fn or --hex, not both")
    if args.fn:
        if args.n is None:
            raise InputError("--fn needs --n")
        return builtin(args.fn, args.n)
    if args.hex:
        text = args.hex if "=" in args.hex else f"n={args.n} hex={args.hex}"
        if args.n is None and "=" not in args.hex:
            raise InputError("--hex digits need --n")
        return parse_hex(text)
    raise InputError("a function is required: --fn NAME --n N or --hex DIGITS --n N")


def read_01_matrix(path: str) -> np.ndarray:
    """A 0/1 matrix from whitespace-separated rows, or the '<r> <c> mode=...' text format."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if lines and "mode=" in lines[0]:
        m = spectral.DenseMatrix.from_text(text)
        vals = [[Fraction(v) for v in row] for row in m.entries]
    else:
        try:
            vals = [[Fraction(tok) for tok in ln.replace(",", " ").split()] for ln in lines]
        except ValueError as e:
            raise InputError(f"{path}: {e}") from e
    if not vals or len({len(r) for r in vals}) != 1 or not vals[0]:
        raise InputError(f"{path}: rows must be nonempty and of equal length")
    return np.array(vals, dtype=object)


def as_01(arr: np.ndarray, path: str) -> np.ndarray:
    if not all(v in (0, 1) for v in arr.flat):
        raise InputError(f"{path}: entries must be 0 or 1")
    return arr.astype(np.int64)


GADGETS = {
    "AND": [[0, 0], [0, 1]],
    "OR": [[0, 1], [1, 1]],
    "XOR": [[0, 1], [1, 0]],
    "EQ": [[1, 0], [0, 1]],
}


def read_gadget(spec: str) -> np.ndarray:
    if spec.upper() in GADGETS:
        return np.array(GADGETS[spec.upper()], dtype=np.int64)
    return as_01(read_01_matrix(spec), spec)


def parse_phi(spec: str, n: int) -> RealTable:
    """chi<vars> (1-based variable digits, 'chi' alone is constant), a builtin name,
    hex digits prefixed by 'hex:', or a comma-separated list of 2^n rationals.
    """
    s = spec.strip()
    if s.lower().startswith("chi"):
        digits = s[3:]
        try:
            idx = [int(c) for c in digits]
        except ValueError as e:
            raise InputError(f"bad character spec {spec!r}") from e
        if any(not 1 <= i <= n for i in idx):
            raise InputError(f"character variables must lie in 1..{n}")
        mask = 0
        for i in idx:
            mask ^= 1 << (i - 1)
        return RealTable(n, tuple(Fraction(chi(mask, x)) for x in range(1 << n)))
    if s.lower().startswith("hex:"):
        return parse_hex(f"n={n} hex={s[4:]}").real()
    if "," in s or s.lstrip("-").replace("/", "").isdigit():
        try:
            vals = tuple(Fraction(v) for v in s.split(","))
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"bad value list {spec!r}") from e
        if len(vals) != 1 << n:
            raise InputError(f"phi needs {1 << n} values, got {len(vals)}")
        return RealTable(n, vals)
    return builtin(s, n).real()


# --- analyze -----------------------------------------------------------------------

def analyze_bundle(f: TruthTable, eps: Fraction) -> tuple[dict, bool]:
    rep = commlab.chain_report(f)
    spec = fourier(f)
    poly = anf(f)
    bsr = measures.block_sensitivity(f)
    depth, tree = measures.decision_tree_depth(f)
    adeg = approx.approx_degree(f, eps)
    results = {
        "chain_report": rep.fields,
        "measures": {
            "s": measures.sensitivity(f),
            "bs": bsr.k,
            "bs_exact": bsr.exact,
            "bs_certificate": bsr.certificate.to_json(),
            "zbs": measures.zbs(f),
            "dt": depth,
            "decision_tree": tree.to_json(),
            "approx_degree": adeg.degree,
            "approx_eps": adeg.eps,
        },
        "anf": {"mon": poly.mon, "degree": poly.degree, "polynomial": str(poly)},
        "fourier": {
            "degree": spec.degree,
            "support_size": len(spec.support()),
            "max_abs": spec.max_abs(),
            "coefficients": list(spec.coeffs),
        },
    }
    bundle = {
        "schema": SCHEMA,
        "version": __version__,
        "input": {"function": format_hex(f), "eps": eps},
        "results": results,
        "checks": [c.to_json() for c in rep.checks],
        "flags": rep.flags,
    }
    return bundle, rep.chain_ok


def cmd_analyze(args, out) -> int:
    f = read_function(args)
    bundle, ok = analyze_bundle(f, args.eps)
    out.write(dump(bundle))
    return EXIT_OK if ok else EXIT_CHECK


# --- sweep --------------------------------------------------------------------------

def _check_rk_mon(f):
    return commlab.rational_rank(commlab.comm_matrix(f, "and")) == commlab.mon(f)


def _check_rank_lb(f):
    r = max(commlab.rational_rank(commlab.comm_matrix(f, m)) for m in ("and", "or"))
    return commlab._pow_ge(r * r, 9, 8, max(anf(f).degree, 0))


def _check_hard_shift(f):
    return commlab.hard_shift(f)[2]


def _check_restriction(f):
    return all(commlab.restriction_mon_check(f, i).holds for i in range(1, f.n + 1))


def _check_protocol(f):
    depth = measures.dt(f)
    for mode, op in (("and", lambda a, b: a & b), ("or", lambda a, b: a | b)):
        for x in range(f.size):
            for y in range(f.size):
                t = commlab.protocol_sim(f, mode, x, y)
                if t.bits > 2 * depth or t.output != f(op(x, y)):
                    return False
    return True


def _check_d_exact(f):
    if (1 << f.n) > caps.get("cc_side"):
        return None
    depth = measures.dt(f)
    for mode in ("and", "or"):
        d = commlab.d_exact(f, mode)
        rk = commlab.rational_rank(commlab.comm_matrix(f, mode))
        if d > 2 * depth or 2 ** d < rk:
            return False
    return True


def _check_dt_bs(f):
    return measures.dt(f) <= measures.bs(f) ** 3


def _check_projection(f):
    if f.is_constant():
        return True  # bs(f) = 0: nothing to preserve
    p = measures.project_to_sensitive(f)
    b2 = measures.block_sensitivity(p.g, ell=min(2, p.g.n)).k
    return b2 >= measures.bs(f) and p.image.max_block <= 2 and p.image.validate(p.g)


def _check_or_and_perm(f):
    return commlab.or_and_permutation_check(f)


SWEEP_CHECKS: dict[str, Callable[[TruthTable], Optional[bool]]] = {
    "rk-mon": _check_rk_mon,
    "rank-lb": _check_rank_lb,
    "hard-shift": _check_hard_shift,
    "restriction": _check_restriction,
    "protocol": _check_protocol,
    "d-exact": _check_d_exact,
    "dt-bs": _check_dt_bs,
    "projection": _check_projection,
    "or-and-perm": _check_or_and_perm,
}


def _run_one(task: tuple[int, int, tuple[str, ...]]) -> tuple[int, list[Optional[bool]]]:
    n, bits, names = task
    f = TruthTable(n, bits)
    return bits, [SWEEP_CHECKS[c](f) for c in names]


def sweep_functions(n: int, sample: Optional[int], seed: int) -> list[int]:
    """Truth tables to sweep, in increasing integer order."""
    total = 1 << (1 << n)
    if sample is None:
        if n > 3:
            raise caps.CapError("sweep_exhaustive_arity", n, 3)
        return list(range(total))
    if sample < 1:
        raise InputError("--sample must be positive")
    rng = np.random.default_rng(seed)
    if total <= 1 << 20:
        picks = rng.choice(total, size=min(sample, total), replace=False)
        return sorted(int(b) for b in picks)
    seen: set[int] = set()
    while len(seen) < sample:
        seen.add(int.from_bytes(rng.bytes((1 << n) // 8), "little"))
    return sorted(seen)


def cmd_sweep(args, out, err) -> int:
    if args.n is None:
        raise InputError("sweep needs --n")
    if not 1 <= args.n <= 4:
        raise caps.CapError("sweep_arity", args.n, 4)
    names = list(SWEEP_CHECKS) if args.checks in (None, "all") else \
        [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = [c for c in names if c not in SWEEP_CHECKS]
    if unknown or not names:
        raise InputError(f"unknown checks {unknown}; choose from {', '.join(SWEEP_CHECKS)} or all")
    funcs = sweep_functions(args.n, args.sample, args.seed)
    tasks = [(args.n, b, tuple(names)) for b in funcs]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * args.workers))))
    else:
        rows = [_run_one(t) for t in tasks]
    rows.sort()
    summary = {c: {"pass": 0, "fail": 0, "skip": 0} for c in names}
    failures = []
    for bits, res in rows:
        for c, r in zip(names, res):
            key = "skip" if r is None else ("pass" if r else "fail")
            summary[c][key] += 1
            if r is False:
                failures.append({"check": c, "function": format_hex(TruthTable(args.n, bits))})
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "input": {"n": args.n, "checks": names, "sample": args.sample, "seed": args.seed,
                  "functions": len(rows)},
        "summary": summary,
        "failures": failures,
    }
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bits", "function"] + names)
        for bits, res in rows:
            w.writerow([bits, format_hex(TruthTable(args.n, bits))] +
                       ["skip" if r is None else ("pass" if r else "fail") for r in res])
        out.write(buf.getvalue())
        for c in names:
            s = summary[c]
            err.write(f"{c}: {s['pass']}/{s['pass'] + s['fail']} pass, {s['skip']} skipped\n")
        for fl in failures:
            err.write(f"FAIL {fl['check']}: {fl['function']}\n")
    else:
        out.write(dump(report))
    return EXIT_CHECK if failures else EXIT_OK


# --- pattern, witness, decompose, matrix ----------------------------------------

def cmd_pattern(args, out) -> int:
    if args.N is None or args.n is None or args.phi is None:
        raise InputError("pattern needs --N, --n and --phi")
    phi = parse_phi(args.phi, args.n)
    try:
        spec = spectral.PatternSpec(args.N, args.n, phi)
    except ValueError as e:
        raise InputError(str(e)) from e
    caps.check("v_family", (args.N // args.n) ** args.n)
    rows, cols = spec.shape
    caps.check("pattern_entries", rows * cols)
    sq = spectral.pattern_norm_squared(spec)
    closed = math.sqrt(sq)
    oracle = spectral.spectral_norm_oracle(spectral.pattern_matrix(spec, exact=False),
                                           method=args.method)
    delta = abs(closed - oracle) / max(abs(closed), 1e-300) if closed else abs(oracle)
    ok = delta < 1e-8
    out.write(dump({
        "schema": SCHEMA,
        "version": __version__,
        "input": {"N": args.N, "n": args.n, "phi": [str(v) for v in phi.values],
                  "method": args.method},
        "shape": [rows, cols],
        "norm_squared": sq,
        "closed_form": closed,
        "oracle": oracle,
        "relative_delta": delta,
        "checks": [{"name": "closed-form-vs-oracle", "lhs": plain(delta), "relation": "<",
                    "rhs": 1e-8, "ok": ok}],
    }))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_witness(args, out) -> int:
    if args.n is None:
        raise InputError("witness needs --n")
    if args.n < 1:
        raise InputError("--n must be positive")
    caps.check("symmetric_arity" if args.symmetric else "lp_arity", args.n)
    if args.degree is None:
        search = approx.max_witness_degree(args.n, args.symmetric)
    else:
        if not 0 <= args.degree <= args.n + 1:
            raise InputError(f"--degree must lie in [0, {args.n + 1}]")
        search = approx.dual_witness(args.n, args.degree, args.symmetric)
    body = {"schema": SCHEMA, "version": __version__,
            "input": {"n": args.n, "degree": search.d, "symmetric": args.symmetric,
                      "sample": args.sample, "seed": args.seed},
            "feasible": search.feasible, "objective": search.objective}
    ok = True
    if search.feasible:
        w = search.witness
        psi = w.table()
        fam = approx.family_members(args.n, limit=args.sample or 256, seed=args.seed, psi=psi) \
            if args.n <= 16 else []
        rep = approx.verify_witness(w, fam)
        ok = rep.ok
        body["witness"] = w.to_json()
        body["verification"] = {"ok": rep.ok, "zeroing_ok": rep.zeroing_ok, "l1": rep.l1,
                                "family_margin": rep.family_margin,
                                "members_checked": len(rep.margins),
                                "min_member_margin": min(rep.margins, default=None),
                                "failures": rep.failures}
    out.write(dump(body))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_decompose(args, out) -> int:
    if not args.matrix:
        raise InputError("decompose needs --matrix FILE")
    G = as_01(read_01_matrix(args.matrix), args.matrix)
    rep = commlab.structure_decompose(G)
    scan = commlab.brute_force_scan(G)
    cls = commlab.gadget_classify(G)
    checks = [{"name": "agrees-with-scan", "lhs": rep.verdict, "relation": "matches",
               "rhs": "witness" if scan else "no pattern", "ok": (rep.verdict == "witness") == bool(scan)}]
    if rep.verdict != "witness":
        checks.append({"name": "reassembles", "lhs": "blocks", "relation": "==", "rhs": "input",
                       "ok": bool((rep.reassemble(G.shape) == G).all())})
    body = {"schema": SCHEMA, "version": __version__, "input": {"matrix": args.matrix,
            "shape": list(G.shape)}, "structure": rep.to_json(),
            "gadget_class": {"kind": cls.kind, "type": cls.type, "negated": cls.negated,
                             "label": str(cls)},
            "checks": checks}
    out.write(dump(body))
    return EXIT_OK if all(c["ok"] for c in checks) else EXIT_CHECK


def cmd_matrix(args, out) -> int:
    if args.matrix:
        M = commlab.raw_matrix(read_01_matrix(args.matrix).tolist())
        source = {"matrix": args.matrix}
    else:
        f = read_function(args)
        gadgets = [read_gadget(g) for g in args.gadget] if args.mode == "composed" else None
        z = None
        if args.mode == "masked":
            if args.z is None:
                raise InputError("masked mode needs --z")
            z = _parse_z(args.z, f.n)
        try:
            M = commlab.comm_matrix(f, args.mode, z=z, gadgets=gadgets)
        except caps.CapError:
            raise
        except ValueError as e:
            raise InputError(str(e)) from e
        source = {"function": format_hex(f), "mode": args.mode, "z": z,
                  "gadgets": args.gadget if gadgets is not None else None}
    rk = commlab.rational_rank(M)
    r, c = M.shape
    body = {"schema": SCHEMA, "version": __version__, "input": source, "tag": M.tag,
            "shape": [r, c], "rank": rk, "log2_rank": math.log2(rk) if rk else 0.0}
    checks = []
    if max(r, c) <= caps.get("cc_side"):
        d = commlab.deterministic_cc_exact(M).D
        body["d_exact"] = d
        checks.append({"name": "log-rank", "lhs": 2 ** d, "relation": ">=", "rhs": rk, "ok": 2 ** d >= rk})
    else:
        body["d_exact"] = None
        body["flags"] = ["exact-D unavailable: matrix exceeds cc_side"]
    body["checks"] = checks
    if args.print_matrix:
        body["entries"] = M.matrix.to_text()
    out.write(dump(body))
    return EXIT_OK if all(ch["ok"] for ch in checks) else EXIT_CHECK


def _parse_z(text: str, n: int) -> int:
    """z as n binary digits x_1..x_n, or as an integer with x_1 the low bit."""
    t = text.strip()
    if len(t) == n and set(t) <= {"0", "1"}:
        return sum(int(ch) << i for i, ch in enumerate(t))
    try:
        z = int(t, 0)
    except ValueError as e:
        raise InputError(f"bad --z {text!r}") from e
    if not 0 <= z < 1 << n:
        raise InputError(f"--z must lie in [0, 2^{n})")
    return z


# --- entry point ----------------------------------------------------------------

def _fraction(text: str) -> Fraction:
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from e
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bfclab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bfclab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def fn_args(sp):
        sp.add_argument("--fn", help="builtin: AND, OR, XOR, MAJ, EQ")
        sp.add_argument("--n", type=int)
        sp.add_argument("--hex", help="truth-table hex digits, least significant first")

    a = sub.add_parser("analyze", help="full report for one function")
    fn_args(a)
    a.add_argument("--eps", type=_fraction, default=Fraction(1, 3))

    s = sub.add_parser("sweep", help="run invariant checks over many functions")
    s.add_argument("--n", type=int)
    s.add_argument("--checks", default="all", help=f"comma list of {', '.join(SWEEP_CHECKS)}, or all")
    s.add_argument("--sample", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--workers", type=int, default=1)

    pt = sub.add_parser("pattern", help="pattern-matrix spectral norm, closed form against an oracle")
    pt.add_argument("--N", type=int)
    pt.add_argument("--n", type=int)
    pt.add_argument("--phi")
    pt.add_argument("--method", choices=("lapack", "jacobi", "power"), default="lapack")

    w = sub.add_parser("witness", help="dual witness for the approximate-degree family")
    w.add_argument("--n", type=int)
    w.add_argument("--degree", type=int)
    w.add_argument("--symmetric", action="store_true")
    w.add_argument("--sample", type=int, help="family members to verify against")
    w.add_argument("--seed", type=int, default=0)

    d = sub.add_parser("decompose", help="structure of a 0/1 matrix")
    d.add_argument("--matrix")

    m = sub.add_parser("matrix", help="build a communication matrix; rank and exact D")
    fn_args(m)
    m.add_argument("--mode", choices=commlab.MODES, default="and")
    m.add_argument("--z")
    m.add_argument("--gadget", action="append", default=[],
                   help="AND, OR, XOR, EQ or a 0/1 matrix file; once per input")
    m.add_argument("--matrix", help="raw matrix file instead of a function")
    m.add_argument("--print-matrix", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        if args.command == "analyze":
            return cmd_analyze(args, out)
        if args.command == "sweep":
            return cmd_sweep(args, out, err)
        if args.command == "pattern":
            return cmd_pattern(args, out)
        if args.command == "witness":
            return cmd_witness(args, out)
        if args.command == "decompose":
            return cmd_decompose(args, out)
        return cmd_matrix(args, out)
    except caps.CapError as e:
        err.write(f"bfclab: {e}\n")
        return EXIT_CAP
    except (InputError, ParseError) as e:
        err.write(f"bfclab: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
