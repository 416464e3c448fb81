"""Exact algebra of distortion functions on [0, 1].

A distortion function here is any bounded-variation h: [0,1] -> R with
h(0) = 0.  Everything the library needs (the named GD/MMD/IQD shapes,
weighted sums, lower envelopes, the tail transform) stays inside the
class of piecewise polynomials of degree <= 2 with jump discontinuities,
so the representation is exact: breakpoints, per-segment coefficients and
explicit point values at the breakpoints, all stored as `fractions.Fraction`.

Floats are converted to their exact binary rational, so arithmetic never
rounds.  The only inexact step is a quadratic-crossing root whose
discriminant is not a perfect square; those roots fall back to float and
nearby breakpoints are deduplicated at 1e-12.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainError, NotConcave, ParamOutOfRange

__all__ = [
    "DistortionFunction",
    "ArgminMap",
    "make_named",
    "from_spec",
    "scale",
    "add",
    "normalize",
    "envelope_min",
    "argmin_sets",
    "g_transform",
    "is_concave",
    "total_variation",
    "value_at_one",
    "detect_iqd",
    "zero_distortion",
]

_DEDUP_TOL = Fraction(1, 10**12)

Coeffs = tuple[Fraction, Fraction, Fraction]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


def _poly_eval(c: Coeffs, t: Fraction) -> Fraction:
    return c[0] + t * (c[1] + t * c[2])


def _poly_scale(c: Coeffs, lam: Fraction) -> Coeffs:
    return (c[0] * lam, c[1] * lam, c[2] * lam)


def _poly_add(a: Coeffs, b: Coeffs) -> Coeffs:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def _poly_sub(a: Coeffs, b: Coeffs) -> Coeffs:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _poly_shift(c: Coeffs, s: Fraction) -> Coeffs:
    """Coefficients of t -> p(t - s)."""
    c0, c1, c2 = c
    return (c0 - c1 * s + c2 * s * s, c1 - 2 * c2 * s, c2)


def _sqrt_exact(d: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None if irrational."""
    p, q = d.numerator, d.denominator
    rp, rq = math.isqrt(p), math.isqrt(q)
    if rp * rp == p and rq * rq == q:
        return Fraction(rp, rq)
    return None


def _roots_in_open_interval(c: Coeffs, lo: Fraction, hi: Fraction) -> list[Fraction]:
    """Roots of c0 + c1 t + c2 t^2 strictly inside (lo, hi).

    Rational roots are exact; irrational ones fall back to float.
    """
    c0, c1, c2 = c
    roots: list[Fraction] = []
    if c2 == 0:
        if c1 != 0:
            roots.append(-c0 / c1)
    else:
        disc = c1 * c1 - 4 * c2 * c0
        if disc < 0:
            return []
        if disc == 0:
            roots.append(-c1 / (2 * c2))
        else:
            sq = _sqrt_exact(disc)
            if sq is not None:
                roots.append((-c1 + sq) / (2 * c2))
                roots.append((-c1 - sq) / (2 * c2))
            else:
                fs = math.sqrt(float(disc))
                fc1, fc2, fc0 = float(c1), float(c2), float(c0)
                # Citardauq pairing avoids cancellation for the small root.
                qq = -(fc1 + math.copysign(fs, fc1)) / 2.0
                roots.append(Fraction(qq / fc2))
                if qq != 0.0:
                    roots.append(Fraction(fc0 / qq))
    return [r for r in roots if lo < r < hi]


def _merge_sorted_points(points: Iterable[Fraction]) -> list[Fraction]:
    out: list[Fraction] = []
    for p in sorted(points):
        if out and p - out[-1] < _DEDUP_TOL:
            continue
        out.append(p)
    return out


@dataclass(frozen=True)
class DistortionFunction:
    """Piecewise-polynomial (degree <= 2) function on [0,1] with h(0) = 0.

    ``breakpoints`` is the ordered abscissa grid 0 = t_0 < ... < t_m = 1,
    ``coeffs[k]`` are the (c0, c1, c2) coefficients valid on the open
    interval (t_k, t_{k+1}) and ``point_values[k]`` is the function value
    at t_k itself, which encodes jumps independently of one-sided limits.
    """

    breakpoints: tuple[Fraction, ...]
    coeffs: tuple[Coeffs, ...]
    point_values: tuple[Fraction, ...]

    def __post_init__(self):
        bps = self.breakpoints
        if len(bps) < 2 or bps[0] != 0 or bps[-1] != 1:
            raise ParamOutOfRange("breakpoints must run from 0 to 1")
        if any(bps[i] >= bps[i + 1] for i in range(len(bps) - 1)):
            raise ParamOutOfRange("breakpoints must be strictly increasing")
        if len(self.coeffs) != len(bps) - 1 or len(self.point_values) != len(bps):
            raise ParamOutOfRange("inconsistent segment/point-value counts")
        if self.point_values[0] != 0:
            raise ParamOutOfRange("a distortion function must satisfy h(0) = 0")

    # -- construction ------------------------------------------------

    @staticmethod
    def build(breakpoints, coeffs, point_values) -> "DistortionFunction":
        """Canonicalize and build: exact numbers, merged mergeable segments."""
        bps = [_frac(b) for b in breakpoints]
        cfs = [tuple(_frac(x) for x in c) for c in coeffs]
        pvs = [_frac(v) for v in point_values]
        # Merge adjacent identical segments when the shared breakpoint
        # carries no jump and no isolated value.
        k = 1
        while k < len(bps) - 1:
            same = cfs[k - 1] == cfs[k]
            if same and pvs[k] == _poly_eval(cfs[k], bps[k]):
                del bps[k], cfs[k - 1], pvs[k]
            else:
                k += 1
        return DistortionFunction(tuple(bps), tuple(cfs), tuple(pvs))

    # -- evaluation --------------------------------------------------

    def eval(self, t) -> Fraction:
        """Function value at t: point value on a breakpoint, polynomial off it."""
        tf = _frac(t)
        if tf < 0 or tf > 1:
            raise DomainError(f"distortion argument {t!r} outside [0, 1]")
        idx = bisect_right(self.breakpoints, tf) - 1
        if idx >= 0 and self.breakpoints[idx] == tf:
            return self.point_values[idx]
        return _poly_eval(self.coeffs[idx], tf)

    __call__ = eval

    def limit(self, t, side: str) -> Fraction:
        """One-sided limit at a breakpoint (polynomial value, jump ignored)."""
        tf = _frac(t)
        idx = self.breakpoints.index(tf)
        if side == "left":
            if idx == 0:
                raise DomainError("no left limit at 0")
            return _poly_eval(self.coeffs[idx - 1], tf)
        if idx == len(self.breakpoints) - 1:
            raise DomainError("no right limit at 1")
        return _poly_eval(self.coeffs[idx], tf)

    def segment_on(self, lo: Fraction, hi: Fraction) -> Coeffs:
        """Coefficients valid on (lo, hi); the interval must not straddle a knot."""
        idx = bisect_right(self.breakpoints, lo) - 1
        if idx == len(self.coeffs):
            idx -= 1
        if hi - self.breakpoints[idx + 1] > _DEDUP_TOL:
            raise ValueError("interval straddles a breakpoint")
        return self.coeffs[idx]

    # -- serialization -----------------------------------------------

    def to_record(self) -> str:
        """Self-describing exact text record (round-trips via from_record)."""
        lines = ["riskshare-distortion v1"]
        lines.append("breakpoints\t" + "\t".join(str(b) for b in self.breakpoints))
        lines.append("point_values\t" + "\t".join(str(v) for v in self.point_values))
        for c in self.coeffs:
            lines.append("segment\t" + "\t".join(str(x) for x in c))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_record(text: str) -> "DistortionFunction":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("riskshare-distortion"):
            raise ParamOutOfRange("not a distortion record")
        bps: list[Fraction] = []
        pvs: list[Fraction] = []
        cfs: list[Coeffs] = []
        for ln in lines[1:]:
            tag, *rest = ln.split("\t")
            vals = [Fraction(tok) for tok in rest]
            if tag == "breakpoints":
                bps = vals
            elif tag == "point_values":
                pvs = vals
            elif tag == "segment":
                cfs.append(tuple(vals))
            else:
                raise ParamOutOfRange(f"unknown record line {tag!r}")
        return DistortionFunction.build(bps, cfs, pvs)


def zero_distortion() -> DistortionFunction:
    z = Fraction(0)
    return DistortionFunction.build((0, 1), ((z, z, z),), (0, 0))


# ---------------------------------------------------------------------------
# Named shapes
# ---------------------------------------------------------------------------


def make_named(kind: str, alpha=None, gamma=None, inner: str | None = None, a=None) -> DistortionFunction:
    """Build one of the named distortion functions.

    kind: "gd" | "mmd" | "iqd" (needs alpha in [0, 1/2)) | "mean" | "range"
          | "meanplus" (needs gamma >= 0 and an inner kind)
          | "mix" (needs a in [0,1]; a*gd + (1-a)*mmd)
    """
    kind = kind.lower()
    one = Fraction(1)
    if kind == "gd":
        return DistortionFunction.build((0, 1), ((0, one, -one),), (0, 0))
    if kind == "mmd":
        return DistortionFunction.build(
            (0, Fraction(1, 2), 1),
            ((0, one, 0), (one, -one, 0)),
            (0, Fraction(1, 2), 0),
        )
    if kind == "mean":
        return DistortionFunction.build((0, 1), ((0, one, 0),), (0, 1))
    if kind == "range":
        return make_named("iqd", alpha=0)
    if kind == "iqd":
        if alpha is None:
            raise ParamOutOfRange("iqd needs alpha")
        af = _frac(alpha)
        if not (0 <= af < Fraction(1, 2)):
            raise ParamOutOfRange(f"iqd level must lie in [0, 1/2), got {alpha!r}")
        if af == 0:
            return DistortionFunction.build((0, 1), ((one, 0, 0),), (0, 0))
        return DistortionFunction.build(
            (0, af, 1 - af, 1),
            ((0, 0, 0), (one, 0, 0), (0, 0, 0)),
            (0, 0, 0, 0),
        )
    if kind == "meanplus":
        if gamma is None or inner is None:
            raise ParamOutOfRange("meanplus needs gamma and an inner kind")
        gf = _frac(gamma)
        if gf < 0:
            raise ParamOutOfRange("meanplus weight must be nonnegative")
        return add(make_named("mean"), scale(make_named(inner, alpha=alpha, a=a), gf))
    if kind == "mix":
        if a is None:
            raise ParamOutOfRange("mix needs a in [0, 1]")
        af = _frac(a)
        if not (0 <= af <= 1):
            raise ParamOutOfRange("mix weight must lie in [0, 1]")
        return add(scale(make_named("gd"), af), scale(make_named("mmd"), 1 - af))
    raise ParamOutOfRange(f"unknown distortion kind {kind!r}")


def from_spec(spec: str) -> DistortionFunction:
    """Parse a compact distortion spec string.

    Examples: "gd", "mmd", "iqd:0.25", "mean", "range",
    "mix:a=0.5", "mix:a=1/4", "meanplus:g=0.5:gd", "meanplus:g=1:iqd:0.1".
    """
    parts = spec.strip().lower().split(":")
    head = parts[0]
    if head in ("gd", "mmd", "mean", "range"):
        return make_named(head)
    if head == "iqd":
        if len(parts) != 2:
            raise ParamOutOfRange(f"bad iqd spec {spec!r}")
        return make_named("iqd", alpha=Fraction(parts[1]))
    if head == "mix":
        if len(parts) not in (2, 3) or not parts[1].startswith("a="):
            raise ParamOutOfRange(f"bad mix spec {spec!r}")
        if len(parts) == 3 and parts[2] != "gd+mmd":
            raise ParamOutOfRange(f"bad mix spec {spec!r}")
        return make_named("mix", a=Fraction(parts[1][2:]))
    if head == "meanplus":
        if len(parts) < 3 or not parts[1].startswith("g="):
            raise ParamOutOfRange(f"bad meanplus spec {spec!r}")
        gamma = Fraction(parts[1][2:])
        inner = parts[2]
        alpha = Fraction(parts[3]) if len(parts) > 3 and inner == "iqd" else None
        a = Fraction(parts[3][2:]) if len(parts) > 3 and inner == "mix" else None
        return make_named("meanplus", gamma=gamma, inner=inner, alpha=alpha, a=a)
    raise ParamOutOfRange(f"unknown distortion spec {spec!r}")


# ---------------------------------------------------------------------------
# Pointwise algebra
# ---------------------------------------------------------------------------


def scale(h: DistortionFunction, lam) -> DistortionFunction:
    lf = _frac(lam)
    if lf < 0:
        raise ParamOutOfRange("scale factor must be nonnegative")
    return DistortionFunction.build(
        h.breakpoints,
        tuple(_poly_scale(c, lf) for c in h.coeffs),
        tuple(v * lf for v in h.point_values),
    )


def add(h1: DistortionFunction, h2: DistortionFunction) -> DistortionFunction:
    pts = _merge_sorted_points(list(h1.breakpoints) + list(h2.breakpoints))
    cfs = []
    for lo, hi in zip(pts, pts[1:]):
        cfs.append(_poly_add(h1.segment_on(lo, hi), h2.segment_on(lo, hi)))
    pvs = [h1.eval(p) + h2.eval(p) for p in pts]
    return DistortionFunction.build(pts, cfs, pvs)


def value_at_one(h: DistortionFunction) -> Fraction:
    return h.point_values[-1]


def normalize(h: DistortionFunction) -> DistortionFunction:
    """h / |h(1)| when h(1) != 0, otherwise h unchanged."""
    h1 = value_at_one(h)
    if h1 == 0:
        return h
    return scale(h, 1 / abs(h1))


# ---------------------------------------------------------------------------
# Lower envelope and argmin structure
# ---------------------------------------------------------------------------


def _refined_grid(hs: Sequence[DistortionFunction]) -> list[Fraction]:
    """Breakpoints of all inputs plus every pairwise segment crossing."""
    pts = _merge_sorted_points(p for h in hs for p in h.breakpoints)
    crossings: list[Fraction] = []
    for lo, hi in zip(pts, pts[1:]):
        for i in range(len(hs)):
            ci = hs[i].segment_on(lo, hi)
            for j in range(i + 1, len(hs)):
                diff = _poly_sub(ci, hs[j].segment_on(lo, hi))
                if diff == (0, 0, 0):
                    continue
                crossings.extend(_roots_in_open_interval(diff, lo, hi))
    # Keep exact knots; admit a crossing only when it is not a duplicate of one.
    out = list(pts)
    for r in sorted(crossings):
        if all(abs(r - p) >= _DEDUP_TOL for p in out):
            out.append(r)
    return sorted(out)


@dataclass(frozen=True)
class ArgminMap:
    """Which inputs attain the pointwise minimum, by interval and by point.

    ``interval_sets[k]`` is the minimizing index set on the open interval
    (breakpoints[k], breakpoints[k+1]); ``point_sets[k]`` the one at
    breakpoints[k] itself.  ``envelope`` is the matching lower envelope.
    """

    breakpoints: tuple[Fraction, ...]
    interval_sets: tuple[frozenset[int], ...]
    point_sets: tuple[frozenset[int], ...]
    envelope: DistortionFunction

    def at(self, t) -> frozenset[int]:
        tf = _frac(t)
        if tf < 0 or tf > 1:
            raise DomainError(f"argument {t!r} outside [0, 1]")
        idx = bisect_right(self.breakpoints, tf) - 1
        if idx >= 0 and self.breakpoints[idx] == tf:
            return self.point_sets[idx]
        return self.interval_sets[idx]


def argmin_sets(hs: Sequence[DistortionFunction], lams: Sequence | None = None) -> ArgminMap:
    """Argmin structure of the weighted family {lam_i * h_i}."""
    hs = list(hs)
    if not hs:
        raise ParamOutOfRange("need at least one distortion function")
    if lams is not None:
        hs = [scale(h, l) for h, l in zip(hs, lams)]
    pts = _refined_grid(hs)
    interval_sets = []
    env_coeffs = []
    for lo, hi in zip(pts, pts[1:]):
        mid = (lo + hi) / 2
        segs = [h.segment_on(lo, hi) for h in hs]
        vals = [_poly_eval(c, mid) for c in segs]
        best = min(vals)
        winners = frozenset(i for i, v in enumerate(vals) if v == best)
        interval_sets.append(winners)
        env_coeffs.append(segs[min(winners)])
    point_sets = []
    env_pvs = []
    for p in pts:
        vals = [h.eval(p) for h in hs]
        best = min(vals)
        point_sets.append(frozenset(i for i, v in enumerate(vals) if v == best))
        env_pvs.append(best)
    env = DistortionFunction.build(pts, env_coeffs, env_pvs)
    return ArgminMap(tuple(pts), tuple(interval_sets), tuple(point_sets), env)


def envelope_min(hs: Sequence[DistortionFunction]) -> DistortionFunction:
    """Exact pointwise minimum of the inputs."""
    hs = list(hs)
    if not hs:
        raise ParamOutOfRange("need at least one distortion function")
    if len(hs) == 1:
        return DistortionFunction.build(hs[0].breakpoints, hs[0].coeffs, hs[0].point_values)
    return argmin_sets(hs).envelope


# ---------------------------------------------------------------------------
# Shape predicates
# ---------------------------------------------------------------------------


def is_concave(h: DistortionFunction) -> bool:
    """Exact concavity check.

    Interior jumps are fatal; at the endpoints the value may sit below the
    one-sided limit (the function closes downward there), which is the only
    discontinuity a concave function with h(0)=0 can carry.
    """
    m = len(h.coeffs)
    for c in h.coeffs:
        if c[2] > 0:
            return False
    # Endpoint jumps: value must not exceed the adjacent limit.
    if h.point_values[0] > h.limit(h.breakpoints[0], "right"):
        return False
    if h.point_values[-1] > h.limit(h.breakpoints[-1], "left"):
        return False
    for k in range(1, m):
        b = h.breakpoints[k]
        left = _poly_eval(h.coeffs[k - 1], b)
        right = _poly_eval(h.coeffs[k], b)
        if not (h.point_values[k] == left == right):
            return False
        dl = h.coeffs[k - 1][1] + 2 * h.coeffs[k - 1][2] * b
        dr = h.coeffs[k][1] + 2 * h.coeffs[k][2] * b
        if dr > dl:
            return False
    return True


def total_variation(h: DistortionFunction) -> Fraction:
    tv = Fraction(0)
    for k, c in enumerate(h.coeffs):
        lo, hi = h.breakpoints[k], h.breakpoints[k + 1]
        vlo, vhi = _poly_eval(c, lo), _poly_eval(c, hi)
        if c[2] != 0:
            vx = -c[1] / (2 * c[2])
            if lo < vx < hi:
                vv = _poly_eval(c, vx)
                tv += abs(vv - vlo) + abs(vhi - vv)
                continue
        tv += abs(vhi - vlo)
    for k, b in enumerate(h.breakpoints):
        pv = h.point_values[k]
        if k > 0:
            tv += abs(pv - _poly_eval(h.coeffs[k - 1], b))
        if k < len(h.coeffs):
            tv += abs(_poly_eval(h.coeffs[k], b) - pv)
    return tv


def detect_iqd(h: DistortionFunction):
    """Recognize height * indicator(alpha < t < 1-alpha).

    Returns (alpha, height) with height > 0, or None if h is not of that shape.
    """
    zero3 = (Fraction(0), Fraction(0), Fraction(0))
    if any(v != 0 for v in h.point_values):
        return None
    if len(h.coeffs) == 1:
        c = h.coeffs[0]
        if c[1] == c[2] == 0 and c[0] > 0:
            return Fraction(0), c[0]
        return None
    if len(h.coeffs) == 3:
        a = h.breakpoints[1]
        if h.breakpoints[2] != 1 - a or not a < Fraction(1, 2):
            return None
        c = h.coeffs[1]
        if h.coeffs[0] == zero3 and h.coeffs[2] == zero3 and c[1] == c[2] == 0 and c[0] > 0:
            return a, c[0]
    return None


# ---------------------------------------------------------------------------
# Tail transform
# ---------------------------------------------------------------------------


def _shifted_with_padding(h: DistortionFunction, s: Fraction) -> DistortionFunction:
    """t -> h(t - s) where defined, zero-padded elsewhere on [0,1]."""
    zero3 = (Fraction(0), Fraction(0), Fraction(0))
    lo_valid = max(Fraction(0), s)
    hi_valid = min(Fraction(1), 1 + s)
    pts = {Fraction(0), Fraction(1), lo_valid, hi_valid}
    for b in h.breakpoints:
        bs = b + s
        if 0 < bs < 1:
            pts.add(bs)
    pts = _merge_sorted_points(pts)
    cfs = []
    for lo, hi in zip(pts, pts[1:]):
        if lo_valid <= lo and hi <= hi_valid:
            cfs.append(_poly_shift(h.segment_on(lo - s, hi - s), s))
        else:
            cfs.append(zero3)
    pvs = []
    for p in pts:
        if lo_valid <= p <= hi_valid and 0 <= p - s <= 1:
            pvs.append(h.eval(p - s))
        else:
            pvs.append(Fraction(0))
    # Padding may leave pvs[0] nonzero only if h(-s) were sampled; guard anyway.
    pvs[0] = Fraction(0)
    return DistortionFunction(tuple(pts), tuple(cfs), tuple(pvs))


def _masked_to_window(h: DistortionFunction, a: Fraction, b: Fraction) -> DistortionFunction:
    """h on the open window (a, b), zero outside and at the edges."""
    zero3 = (Fraction(0), Fraction(0), Fraction(0))
    pts = {Fraction(0), Fraction(1), a, b}
    for p in h.breakpoints:
        if a < p < b:
            pts.add(p)
    pts = _merge_sorted_points(pts)
    cfs = []
    for lo, hi in zip(pts, pts[1:]):
        if a <= lo and hi <= b:
            cfs.append(h.segment_on(lo, hi))
        else:
            cfs.append(zero3)
    pvs = [h.eval(p) if a < p < b else Fraction(0) for p in pts]
    return DistortionFunction.build(pts, cfs, pvs)


def g_transform(h: DistortionFunction, alpha, lam=None) -> DistortionFunction:
    """Tail transform: min(h(t-alpha), h(t+alpha), lam) inside (alpha, 1-alpha).

    Zero outside the window; identically zero once alpha >= 1/2.  ``lam=None``
    means no cap (the empty-minimum sentinel).  Requires a concave h with
    h(1) = 0.
    """
    af = _frac(alpha)
    if af < 0:
        raise ParamOutOfRange("tail level must be nonnegative")
    if lam is not None and _frac(lam) < 0:
        raise ParamOutOfRange("cap must be nonnegative")
    if not is_concave(h):
        raise NotConcave("tail transform needs a concave distortion function")
    if value_at_one(h) != 0:
        raise NotConcave("tail transform needs h(1) = 0")
    if af >= Fraction(1, 2):
        return zero_distortion()
    if af == 0 and lam is None:
        return DistortionFunction.build(h.breakpoints, h.coeffs, h.point_values)
    candidates = [_shifted_with_padding(h, af), _shifted_with_padding(h, -af)]
    if lam is not None:
        lf = _frac(lam)
        candidates.append(
            DistortionFunction((Fraction(0), Fraction(1)), ((lf, Fraction(0), Fraction(0)),), (Fraction(0), Fraction(0)))
        )
    env = argmin_sets(candidates).envelope
    return _masked_to_window(env, af, 1 - af)
