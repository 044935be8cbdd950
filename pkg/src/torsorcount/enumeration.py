"""Direct counting of N_{U,H}(B): rational points of U(K) with H <= B.

This is the independent oracle for the torsor counter.  Points are
enumerated as representatives whose coordinates lie in an ideal-class
representative r with N(x_i) <= B*N(r); every point of height <= B has such
a representative (scale its content ideal to r), and conversely every such
vector has height <= B because its content is contained in r.
"""

from __future__ import annotations

import logging
from collections import Counter
from fractions import Fraction
from typing import Iterator

from .height import ProjPoint, key_from_pairs
from .qfield import FieldCtx, Idl, disk_points
from .surfaces import SurfaceSpec, find_lines, in_U_pairs, on_surface_pairs

log = logging.getLogger(__name__)

# coordinates enumerated first; the remaining two are solved from the quadrics
DESIGNATED = {
    "S1": (2, 3, 4),
    "S2": (0, 2, 3),
    "S3": (1, 2, 3),
    "S4": (0, 2, 3),
}


class _Solver:
    """Complete the designated triple to all solutions of the two quadrics."""

    def __init__(self, K: FieldCtx, S: SurfaceSpec, r: Idl, disk: list):
        self.K, self.S, self.r, self.disk = K, S, r, disk
        self.bound = None
        self.stats = Counter()

    def _linear_step(self, vals):
        """Try to fix one unknown from a quadric that is linear in it.

        Returns (status, index, value): status "fail" (inconsistent),
        "set", or "none" (nothing solvable).
        """
        K = self.K
        for Q in self.S.quadrics:
            unknown = {i for _, i, j in Q for i in (i, j) if vals[i] is None}
            if not unknown:
                X = Y = 0
                for c, i, j in Q:
                    a, b = K.mul(vals[i], vals[j])
                    X, Y = X + c * a, Y + c * b
                if X or Y:
                    return "fail", None, None
                continue
            if len(unknown) != 1:
                continue
            (v,) = unknown
            if any(i == v and j == v for _, i, j in Q):
                continue
            LX = LY = CX = CY = 0
            for c, i, j in Q:
                if i == v or j == v:
                    o = j if i == v else i
                    a, b = vals[o]
                    LX, LY = LX + c * a, LY + c * b
                else:
                    a, b = K.mul(vals[i], vals[j])
                    CX, CY = CX + c * a, CY + c * b
            if LX == 0 and LY == 0:
                if CX or CY:
                    return "fail", None, None
                continue
            # v = -C / L
            nL = K.norm((LX, LY))
            num = K.mul((-CX, -CY), K.conj((LX, LY)))
            if num[0] % nL or num[1] % nL:
                return "fail", None, None
            x = (num[0] // nL, num[1] // nL)
            if not self.r.contains(x) or K.norm(x) * self.bound[1] > self.bound[0]:
                return "fail", None, None
            return "set", v, x
        return "none", None, None

    def complete(self, vals, secondary=False) -> Iterator[tuple[tuple, bool]]:
        vals = list(vals)
        while True:
            st, v, x = self._linear_step(vals)
            if st == "fail":
                return
            if st == "none":
                break
            vals[v] = x
        try:
            v = vals.index(None)
        except ValueError:
            yield tuple(vals), secondary
            return
        # no quadric determines an unknown: enumerate it (secondary branch)
        self.stats["secondary_branches"] += 1
        for x in self.disk:
            vals[v] = x
            yield from self.complete(vals, True)
        vals[v] = None


def direct_points(S: SurfaceSpec, K: FieldCtx, B, lines=None, stats: Counter | None = None) -> dict:
    """Map canonical key -> ProjPoint for all x in U(K) with H(x) <= B."""
    B = Fraction(B)
    if B < 1:
        return {}
    lines = find_lines(S) if lines is None else lines
    tri = DESIGNATED[S.id]
    found: dict = {}
    stats = Counter() if stats is None else stats
    for r in K.class_reps:
        bound = B * r.norm()
        disk = list(disk_points(K, r.hnf, bound.numerator, bound.denominator))
        solver = _Solver(K, S, r, disk)
        solver.bound = (bound.numerator, bound.denominator)
        vals = [None] * 5
        for x in disk:
            vals[tri[0]] = x
            for y in disk:
                vals[tri[1]] = y
                for z in disk:
                    vals[tri[2]] = z
                    for v, secondary in solver.complete(vals):
                        if all(c == (0, 0) for c in v):
                            continue
                        assert on_surface_pairs(K, S, v)
                        if not in_U_pairs(K, S, v, lines):
                            stats["on_lines"] += 1
                            continue
                        key = key_from_pairs(K, v)
                        if key not in found:
                            found[key] = v
                            stats["secondary_points" if secondary else "primary_points"] += 1
        stats.update(solver.stats)
    out = {}
    for key, v in found.items():
        p = ProjPoint.from_pairs(K, v)
        assert p.height() <= B
        out[key] = p
    return out


def _param_points(S: SurfaceSpec, K: FieldCtx, B: Fraction, lines, yrange) -> dict:
    from .surfaces import psi_eval

    Y = B if yrange is None else Fraction(yrange)
    disk = list(disk_points(K, (1, 0, 1), Y.numerator, Y.denominator))
    found = {}
    for y0 in disk:
        for y1 in disk:
            for y2 in disk:
                if y0 == y1 == y2 == (0, 0):
                    continue
                p = psi_eval(S, K, [K.elem(*y0), K.elem(*y1), K.elem(*y2)])
                if p is None or p.height() > B:
                    continue
                if not in_U_pairs(K, S, p.integral_coords, lines):
                    continue
                found.setdefault(p.key(), p)
    return found


def direct_count(S: SurfaceSpec, K: FieldCtx, B, method: str = "exhaustive", yrange=None) -> int:
    """|{x in U(K) : H(x) <= B}|.

    ``exhaustive`` is complete; ``parameterization`` maps a box of
    parameters through psi and is only a generator for cross-checks.
    """
    B = Fraction(B)
    if method == "exhaustive":
        return len(direct_points(S, K, B))
    if method == "parameterization":
        if B < 1:
            return 0
        return len(_param_points(S, K, B, find_lines(S), yrange))
    raise ValueError(f"unknown method {method!r}")


def parameterization_points(S: SurfaceSpec, K: FieldCtx, B, yrange=None) -> dict:
    return _param_points(S, K, Fraction(B), find_lines(S), yrange)
