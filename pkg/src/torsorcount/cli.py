"""Command-line front end: count, constants, compare, lines, selftest."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import random
import sys
import time
from fractions import Fraction

from .constants import alpha_polytope, compute_constants, theta0
from .enumeration import direct_count
from .height import ProjPoint
from .qfield import DomainError, FieldCtx
from .surfaces import find_lines, get_surface, line_is_contained
from .torsor import ConsistencyError, build_torsor_spec, check_spec, torsor_enumerate

log = logging.getLogger(__name__)

COUNT_FIELDS = ["surface", "field_d", "bound", "method", "count", "elapsed_ms"]
CONSTANTS_FIELDS = ["surface", "field_d", "alpha", "theta0", "theta0_prime_bound", "theta0_tail",
                    "omega_inf", "omega_inf_stderr", "c", "seed"]
COMPARE_FIELDS = ["surface", "field_d", "bound", "count", "ratio", "predicted_c"]

EXIT_OK, EXIT_USAGE, EXIT_CONSISTENCY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad input; 2 is reserved for consistency failures here
    def error(self, message):
        raise UsageError(message)


def _bound(s: str) -> Fraction:
    try:
        B = Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an integer or fraction p/q: {s!r}")
    if B < 0:
        raise argparse.ArgumentTypeError(f"bound must be >= 0, got {s}")
    return B


def _bounds(s: str) -> list[Fraction]:
    return [_bound(x) for x in s.split(",") if x.strip()]


def _surface(s: str) -> str:
    try:
        return get_surface(s).id
    except DomainError as e:
        raise argparse.ArgumentTypeError(str(e))


def _field(s: str) -> FieldCtx:
    try:
        return FieldCtx(int(s))
    except (ValueError, DomainError) as e:
        raise argparse.ArgumentTypeError(str(e))


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    return x


def emit(rows: list[dict], fields: list[str], fmt: str, out: str | None):
    if fmt == "json":
        text = json.dumps([{k: _jsonable(r[k]) for k in fields} for r in rows], indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in fields])
        text = buf.getvalue()
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# --- subcommands ---------------------------------------------------------------

def cmd_count(a) -> int:
    K, B = a.field, a.bound
    rows = []
    methods = ["torsor", "direct"] if a.method == "both" else [a.method]
    for m in methods:
        t0 = time.perf_counter()
        if m == "torsor":
            n = torsor_enumerate(a.surface, K, B).count
        else:
            n = direct_count(get_surface(a.surface), K, B)
        ms = round((time.perf_counter() - t0) * 1000)
        rows.append(dict(surface=a.surface, field_d=K.d, bound=B, method=m, count=n, elapsed_ms=ms))
    emit(rows, COUNT_FIELDS, a.format, a.out)
    if a.method == "both" and rows[0]["count"] != rows[1]["count"]:
        log.error("torsor count %d != direct count %d", rows[0]["count"], rows[1]["count"])
        return EXIT_CONSISTENCY
    return EXIT_OK


def cmd_constants(a) -> int:
    c = compute_constants(a.surface, a.field, a.prime_bound, a.samples, a.seed, a.threads)
    emit([vars(c)], CONSTANTS_FIELDS, a.format, a.out)
    return EXIT_OK


def cmd_compare(a) -> int:
    K = a.field
    c = compute_constants(a.surface, K, a.prime_bound, a.samples, a.seed, a.threads).c
    rows = []
    for B in a.bounds:
        n = torsor_enumerate(a.surface, K, B).count
        ratio = n / (float(B) * math.log(B) ** 5) if B > 1 else float("nan")
        rows.append(dict(surface=a.surface, field_d=K.d, bound=B, count=n, ratio=ratio, predicted_c=c))
    emit(rows, COMPARE_FIELDS, a.format, a.out)
    return EXIT_OK


def cmd_lines(a) -> int:
    S = get_surface(a.surface)
    lines = find_lines(S, a.height)
    doc = {
        "surface": S.id,
        "search_height": a.height,
        "lines": [{"forms": [list(f) for f in L.forms], "equations": L.describe(),
                   "points": [list(L.p), list(L.q)]} for L in lines],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if a.out:
        with open(a.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def selftest(quick: bool = True, stream=None) -> bool:
    """Cross-oracle checks at small sizes; returns True when all pass."""
    stream = stream or sys.stdout
    ok_all = True

    def report(name, ok, detail=""):
        nonlocal ok_all
        ok_all &= bool(ok)
        stream.write(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}\n")
        stream.flush()

    surfaces = ["S1", "S2", "S3", "S4"]
    for s in surfaces:
        try:
            check_spec(build_torsor_spec(s))
            report(f"torsor tables {s}", True)
        except ConsistencyError as e:
            report(f"torsor tables {s}", False, str(e))
    bounds = [1, 2, 5] if quick else [1, 2, 5, 10, 20]
    for d in (-1, -3, -5):
        K = FieldCtx(d)
        for s in surfaces:
            bad = []
            for B in bounds:
                t = torsor_enumerate(s, K, B)
                n = direct_count(get_surface(s), K, B)
                if t.count != n:
                    bad.append((B, t.count, n))
            report(f"torsor = direct {s} d={d} B<={bounds[-1]}", not bad, str(bad) if bad else "")
    a3, a4 = alpha_polytope("S3"), alpha_polytope("S4")
    report("alpha exact S3, S4", a3 == Fraction(1, 34560) and a4 == Fraction(1, 345600), f"{a3}, {a4}")
    for d in (-1, -3):
        t1, t2 = theta0(d, 10**4), theta0(d, 2 * 10**4)
        delta = abs(t1.value - t2.value)
        report(f"theta0 tail d={d}", delta < t1.tail, f"change {float(delta):.2e} < tail {t1.tail:.2e}")
    for s in surfaces:
        S = get_surface(s)
        L1, L2 = find_lines(S, 10), find_lines(S, 20)
        contained = all(line_is_contained(S, L) for L in L1)
        report(f"lines saturate {s}", L1 == L2 and contained, f"{len(L1)} lines")
    rng = random.Random(0)
    K = FieldCtx(-5)
    fails = 0
    for _ in range(200):
        x = [(rng.randint(-9, 9), rng.randint(-9, 9)) for _ in range(5)]
        if all(v == (0, 0) for v in x):
            continue
        lam = (rng.randint(-9, 9), rng.randint(1, 9))
        p = ProjPoint.from_pairs(K, x)
        q = ProjPoint.from_pairs(K, [K.mul(lam, v) for v in x])
        fails += p.height() != q.height() or p.height() < 1
    report("height scaling invariance", fails == 0, f"{fails} failures")
    return ok_all


def cmd_selftest(a) -> int:
    return EXIT_OK if selftest(quick=not a.full) else EXIT_CONSISTENCY


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="torsorcount", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp, surface=True, field=True):
        if surface:
            sp.add_argument("--surface", type=_surface, required=True, help="s1, s2, s3 or s4")
        if field:
            sp.add_argument("--field", type=_field, required=True, help="squarefree d < 0, e.g. -1")
        sp.add_argument("--out", help="write to this file instead of stdout")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        sp.add_argument("--threads", type=int, default=1, help="worker cap for Monte Carlo")

    sp = sub.add_parser("count", help="N(B) by torsor walk and/or exhaustive search")
    common(sp)
    sp.add_argument("--bound", type=_bound, required=True, help="integer or p/q")
    sp.add_argument("--method", choices=["torsor", "direct", "both"], default="torsor")
    sp.set_defaults(fn=cmd_count)

    for name, fn, hlp in [("constants", cmd_constants, "alpha, theta0, omega_inf and c"),
                          ("compare", cmd_compare, "N(B)/(B (log B)^5) against c")]:
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--prime-bound", type=int, default=10**5)
        sp.add_argument("--samples", type=int, default=10**6)
        sp.add_argument("--seed", type=int, default=0)
        if name == "compare":
            sp.add_argument("--bounds", type=_bounds, required=True, help="comma separated")
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("lines", help="lines on the surface as JSON")
    sp.add_argument("--surface", type=_surface, required=True)
    sp.add_argument("--height", type=int, default=20, help="search height for rational points")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_lines)

    sp = sub.add_parser("selftest", help="cross-oracle checks")
    sp.add_argument("--full", action="store_true", help="bounds up to 20 instead of 5")
    sp.set_defaults(fn=cmd_selftest)
    return p


def run_command(argv: list[str] | None = None) -> int:
    p = build_parser()
    try:
        a = p.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return a.fn(a)
    except DomainError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except ConsistencyError as e:
        sys.stderr.write(f"consistency failure: {e}\n")
        return EXIT_CONSISTENCY


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
