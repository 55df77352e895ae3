"""Obstacle boundaries: parametrized arcs, constructors, radial classification.

A boundary is a list of smooth arcs (line segments, ellipse arcs) chained
into one or more counterclockwise loops.  With counterclockwise traversal
the obstacle interior lies on the left of the travel direction, so the
outward unit normal is the tangent rotated clockwise:

    n = (v2, -v1) / |v|,   v = d/dt point(t).

Radial classification asks, with tolerance tol = 1e-10 * (1 + R_Gamma):

* R0 = sup of |x| over boundary points where x . n(x) < -tol
  (0 when the obstacle is star-shaped with respect to the origin);
* R1 = inf of |x| over points where x_2 n_2(x) < -tol (inf when none).

The pair is feasible for a radial cutoff construction when R1 > e^{1/4} R0;
the supremum/infimum are taken over run closures so that a cutoff with
chi = 0 on [0, R0] genuinely kills every sign violation.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "Arc", "LineArc", "EllipseArc", "FacingWalls", "Boundary", "TrappingClass",
    "circle", "polygon", "two_squares", "two_discs", "elliptic_cavity",
    "u_cavity", "make_geometry", "boundary_length", "r_gamma",
    "classify_strongly_r0r1", "choose_radii", "detect_parallel_trapping",
    "trapping_class",
]

_CORNER_ANGLE_TOL = 1e-8
QUARTER_EXP = math.exp(0.25)


class Arc:
    """One smooth parametrized piece of a boundary, t in [0, 1]."""

    is_line = False

    def point(self, t):  # pragma: no cover - interface
        raise NotImplementedError

    def velocity(self, t):  # pragma: no cover - interface
        raise NotImplementedError

    def accel(self, t):  # pragma: no cover - interface
        raise NotImplementedError

    def length(self) -> float:
        t, w = np.polynomial.legendre.leggauss(32)
        t = 0.5 * (t + 1.0)
        return float(0.5 * np.sum(w * np.linalg.norm(self.velocity(t), axis=-1)))

    def normal(self, t):
        v = self.velocity(t)
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
        return np.stack([v[..., 1], -v[..., 0]], axis=-1)

    def curvature(self, t):
        v = self.velocity(t)
        a = self.accel(t)
        cross = v[..., 0] * a[..., 1] - v[..., 1] * a[..., 0]
        return cross / np.linalg.norm(v, axis=-1) ** 3


@dataclasses.dataclass(frozen=True)
class LineArc(Arc):
    p0: tuple
    p1: tuple
    is_line = True

    def point(self, t):
        t = np.asarray(t, dtype=np.float64)[..., None]
        return np.asarray(self.p0) + t * (np.asarray(self.p1) - np.asarray(self.p0))

    def velocity(self, t):
        t = np.asarray(t, dtype=np.float64)
        d = np.asarray(self.p1) - np.asarray(self.p0)
        return np.broadcast_to(d, t.shape + (2,)).copy()

    def accel(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.zeros(t.shape + (2,))

    def length(self) -> float:
        return float(np.hypot(*(np.asarray(self.p1) - np.asarray(self.p0))))


@dataclasses.dataclass(frozen=True)
class EllipseArc(Arc):
    """Arc of an axis-aligned ellipse, angles in radians, th0 -> th1."""

    center: tuple
    semi_x: float
    semi_y: float
    th0: float
    th1: float

    def _theta(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.th0 + t * (self.th1 - self.th0)

    def point(self, t):
        th = self._theta(t)
        return np.stack(
            [self.center[0] + self.semi_x * np.cos(th),
             self.center[1] + self.semi_y * np.sin(th)], axis=-1)

    def velocity(self, t):
        th = self._theta(t)
        dth = self.th1 - self.th0
        return np.stack(
            [-self.semi_x * np.sin(th) * dth, self.semi_y * np.cos(th) * dth],
            axis=-1)

    def accel(self, t):
        th = self._theta(t)
        dth = self.th1 - self.th0
        return np.stack(
            [-self.semi_x * np.cos(th) * dth * dth,
             -self.semi_y * np.sin(th) * dth * dth], axis=-1)


@dataclasses.dataclass(frozen=True)
class FacingWalls:
    """Two parallel flat vertical wall arcs with normals +e1 / -e1.

    ``corridor_free`` records whether the open slab between the facing
    segments lies entirely in the exterior (bouncing-ball rays survive); a
    blocked corridor still supports the oscillatory two-wall densities but
    is not a trapping configuration.
    """

    arc_plus: int
    arc_minus: int
    a1: float
    a2: float
    overlap_lo: float
    overlap_hi: float
    corridor_free: bool

    @property
    def gap(self) -> float:
        return self.a2 - self.a1


@dataclasses.dataclass(frozen=True)
class Boundary:
    label: str
    arcs: tuple
    loops: tuple  # tuple of tuples of arc indices, traversal order
    facing: Optional[FacingWalls] = None

    def __post_init__(self):
        _validate(self)

    @property
    def corner_at_start(self) -> tuple:
        """Per-arc flag: tangent discontinuity where this arc begins."""
        flags = []
        prev_of = {}
        for loop in self.loops:
            for i, idx in enumerate(loop):
                prev_of[idx] = loop[i - 1]
        for i, arc in enumerate(self.arcs):
            prev = self.arcs[prev_of[i]]
            v0 = prev.velocity(np.array(1.0))
            v1 = arc.velocity(np.array(0.0))
            v0 = v0 / np.linalg.norm(v0)
            v1 = v1 / np.linalg.norm(v1)
            flags.append(abs(v0[0] * v1[1] - v0[1] * v1[0]) > _CORNER_ANGLE_TOL
                         or float(v0 @ v1) < 0.0)
        return tuple(flags)


@dataclasses.dataclass(frozen=True)
class TrappingClass:
    label: str  # star_shaped_ball | strongly_R0R1 | parallel_trapping | unclassified
    r0: Optional[float] = None
    r1: Optional[float] = None
    gap: Optional[float] = None


def _loop_area(b: Boundary, loop) -> float:
    t, w = np.polynomial.legendre.leggauss(48)
    t = 0.5 * (t + 1.0)
    area = 0.0
    for idx in loop:
        arc = b.arcs[idx]
        x = arc.point(t)
        v = arc.velocity(t)
        area += 0.5 * 0.5 * np.sum(w * (x[:, 0] * v[:, 1] - x[:, 1] * v[:, 0]))
    return float(area)


def _validate(b: Boundary) -> None:
    if not b.arcs or not b.loops:
        raise ValueError("boundary needs at least one arc in one loop")
    seen = sorted(i for loop in b.loops for i in loop)
    if seen != list(range(len(b.arcs))):
        raise ValueError("loops must partition the arc list")
    for loop in b.loops:
        for i, idx in enumerate(loop):
            a_end = b.arcs[idx].point(np.array(1.0))
            b_start = b.arcs[loop[(i + 1) % len(loop)]].point(np.array(0.0))
            if np.linalg.norm(a_end - b_start) > 1e-12 * (1 + np.linalg.norm(a_end)):
                raise ValueError(f"loop is not closed at arc {idx}")
    for loop in b.loops:
        if _loop_area(b, loop) <= 0.0:
            raise ValueError("loops must be counterclockwise (positive area)")


def _segments_intersect(p, q, r, s) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p, q, r), orient(p, q, s)
    d3, d4 = orient(r, s, p), orient(r, s, q)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


# ---------------------------------------------------------------------------
# constructors


def circle(radius: float, center=(0.0, 0.0)) -> Boundary:
    if radius <= 0:
        raise ValueError("radius must be positive")
    arc = EllipseArc(tuple(center), radius, radius, 0.0, 2.0 * math.pi)
    return Boundary("circle", (arc,), ((0,),))


def polygon(vertices: Sequence, label: str = "polygon",
            facing: Optional[FacingWalls] = None) -> Boundary:
    verts = [tuple(map(float, v)) for v in vertices]
    if len(verts) < 3:
        raise ValueError("polygon needs at least 3 vertices")
    area = 0.5 * sum(verts[i][0] * verts[(i + 1) % len(verts)][1]
                     - verts[(i + 1) % len(verts)][0] * verts[i][1]
                     for i in range(len(verts)))
    if area < 0:
        verts = verts[::-1]
    n = len(verts)
    edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j == (i + 1) % n) or ((j + 1) % n == i):
                continue
            if _segments_intersect(*edges[i], *edges[j]):
                raise ValueError("polygon is self-intersecting")
    arcs = tuple(LineArc(p, q) for p, q in edges)
    return Boundary(label, arcs, (tuple(range(n)),), facing)


def _square_arcs(x0, y0, side):
    v = [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)]
    return [LineArc(v[i], v[(i + 1) % 4]) for i in range(4)]


def two_squares(side: float = 1.0, gap: float = 0.5) -> Boundary:
    """Two axis-aligned squares with facing vertical walls across an open gap.

    First square [0, s]^2, second [s+a, 2s+a] x [-s/2, s/2]; the facing walls
    are x1 = s (normal +e1) and x1 = s+a (normal -e1), overlapping for
    x2 in [0, s/2].  The slab between them is exterior, so this is the
    canonical two-wall trapping configuration.
    """
    s, a = float(side), float(gap)
    if s <= 0 or a <= 0:
        raise ValueError("side and gap must be positive")
    sq1 = _square_arcs(0.0, 0.0, s)
    v2 = [(s + a, -s / 2), (2 * s + a, -s / 2), (2 * s + a, s / 2), (s + a, s / 2)]
    sq2 = [LineArc(v2[i], v2[(i + 1) % 4]) for i in range(4)]
    facing = FacingWalls(arc_plus=1, arc_minus=7, a1=s, a2=s + a,
                         overlap_lo=0.0, overlap_hi=s / 2, corridor_free=True)
    return Boundary("two_squares", tuple(sq1 + sq2), ((0, 1, 2, 3), (4, 5, 6, 7)),
                    facing)


def two_discs(radius: float = 1.0, gap: float = 0.5) -> Boundary:
    r, a = float(radius), float(gap)
    if r <= 0 or a <= 0:
        raise ValueError("radius and gap must be positive")
    c = r + a / 2
    left = EllipseArc((-c, 0.0), r, r, 0.0, 2 * math.pi)
    right = EllipseArc((c, 0.0), r, r, 0.0, 2 * math.pi)
    return Boundary("two_discs", (left, right), ((0,), (1,)))


def elliptic_cavity(semi_x: float = 0.25, semi_y: float = 0.5,
                    back_offset: float = 0.9, half_angle_deg: float = 50.0) -> Boundary:
    """Two shells whose concave inner walls lie on one common ellipse.

    The cavity supports whispering/bouncing rays between the mirrors.  The
    inner walls have normals pointing at the cavity, so x2*n2 < 0 at points
    off the axis and no radial cutoff pair (R0, R1) is feasible.
    """
    if not (0 < half_angle_deg < 90) or semi_x <= 0 or semi_y <= 0 or back_offset <= 0:
        raise ValueError("invalid elliptic cavity parameters")
    th = math.radians(half_angle_deg)
    e0 = lambda ang: (semi_x * math.cos(ang), semi_y * math.sin(ang))

    def shifted(ang, dx):
        p = e0(ang)
        return (p[0] + dx, p[1])

    # left shell: inner arc from pi + th down through pi to pi - th... built CCW
    p_lo = e0(math.pi + th)
    p_hi = e0(math.pi - th)
    q_lo = shifted(math.pi + th, -back_offset)
    q_hi = shifted(math.pi - th, -back_offset)
    left = [
        LineArc(q_lo, p_lo),
        EllipseArc((0.0, 0.0), semi_x, semi_y, math.pi + th, math.pi - th),
        LineArc(p_hi, q_hi),
        LineArc(q_hi, q_lo),
    ]
    a_lo = e0(-th)
    a_hi = e0(th)
    b_lo = shifted(-th, back_offset)
    b_hi = shifted(th, back_offset)
    right = [
        EllipseArc((0.0, 0.0), semi_x, semi_y, th, -th),
        LineArc(a_lo, b_lo),
        LineArc(b_lo, b_hi),
        LineArc(b_hi, a_hi),
    ]
    return Boundary("elliptic_cavity", tuple(left + right),
                    ((0, 1, 2, 3), (4, 5, 6, 7)))


def u_cavity(scale: float = 1.0) -> Boundary:
    """Nontrapping block with two interior-facing parallel walls.

    A rectangle [-1,5] x [-2,2] with a notch whose side walls are
    {0} x [0,1] (normal +e1) and {4} x [0,1] (normal -e1), gap a = 4.  A
    triangular hump between them rises to height 1.5 > 1, so every ray in
    the wall-to-wall corridor hits the hump and escapes: the corridor is
    blocked and the obstacle stays nontrapping while still carrying the
    oscillating two-wall boundary data.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    verts = [(-1, -2), (5, -2), (5, 1), (4, 1), (4, 0), (2.5, 0), (2, 1.5),
             (1.5, 0), (0, 0), (0, 1), (-1, 1)]
    verts = [(scale * x, scale * y) for x, y in verts]
    facing = FacingWalls(arc_plus=8, arc_minus=3, a1=0.0, a2=4.0 * scale,
                         overlap_lo=0.0, overlap_hi=1.0 * scale,
                         corridor_free=False)
    return polygon(verts, label="u_cavity", facing=facing)


_CONSTRUCTORS = {
    "circle": circle,
    "polygon": polygon,
    "two_squares": two_squares,
    "two_discs": two_discs,
    "elliptic_cavity": elliptic_cavity,
    "u_cavity": u_cavity,
}


def make_geometry(kind: str, **params) -> Boundary:
    if kind not in _CONSTRUCTORS:
        raise ValueError(f"unknown geometry kind {kind!r}; "
                         f"known: {sorted(_CONSTRUCTORS)}")
    return _CONSTRUCTORS[kind](**params)


# ---------------------------------------------------------------------------
# global quantities


def boundary_length(b: Boundary) -> float:
    return float(sum(arc.length() for arc in b.arcs))


def r_gamma(b: Boundary) -> float:
    """max_{x in Gamma} |x|, dense sampling plus local refinement."""
    best = 0.0
    for arc in b.arcs:
        t = np.linspace(0.0, 1.0, 257)
        r2 = np.sum(arc.point(t) ** 2, axis=-1)
        i = int(np.argmax(r2))
        best = max(best, math.sqrt(float(r2[i])))
        if not arc.is_line:
            lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
            res = minimize_scalar(
                lambda s: -float(np.sum(arc.point(np.array(s)) ** 2)),
                bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-13})
            best = max(best, math.sqrt(-res.fun))
    return best


def contains_points(b: Boundary, pts) -> np.ndarray:
    """Even-odd ray-cast interior test (polyline approximation of arcs)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    inside = np.zeros(len(pts), dtype=bool)
    for loop in b.loops:
        poly = []
        for idx in loop:
            arc = b.arcs[idx]
            n = 2 if arc.is_line else 512
            poly.append(arc.point(np.linspace(0.0, 1.0, n))[:-1])
        poly = np.concatenate(poly)
        x0, y0 = poly[:, 0], poly[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        px = pts[:, 0][:, None]
        py = pts[:, 1][:, None]
        cross = ((y0 > py) != (y1 > py)) & (
            px < x0 + (py - y0) * (x1 - x0) / np.where(y1 == y0, np.inf, y1 - y0))
        inside ^= (np.sum(cross, axis=1) % 2).astype(bool)
    return inside


# ---------------------------------------------------------------------------
# radial classification


def _arc_samples(b: Boundary, total: int):
    """Interior midpoint parameter grids, allocated by arc length."""
    lengths = np.array([arc.length() for arc in b.arcs])
    alloc = np.maximum(16, np.ceil(total * lengths / lengths.sum()).astype(int))
    for arc, n in zip(b.arcs, alloc):
        t = (np.arange(n) + 0.5) / n
        yield arc, t


def _bisect_crossing(gfun, t_good: float, t_bad: float) -> float:
    """Sign change of gfun between a satisfying and a violating parameter."""
    for _ in range(80):
        mid = 0.5 * (t_good + t_bad)
        if gfun(mid) < 0.0:
            t_bad = mid
        else:
            t_good = mid
        if abs(t_good - t_bad) < 1e-15:
            break
    return t_bad


def _run_extreme_radius(arc: Arc, t: np.ndarray, gfun, bad: np.ndarray,
                        want_max: bool) -> float:
    """Extreme |x| over the closure of the violating set {g < 0} on one arc.

    Run boundaries are resolved by bisection to the sign change of g; runs
    touching the arc ends extend to the endpoint itself, so a verdict like
    "the whole wall violates" yields the corner radius, not the last
    midpoint's.
    """
    n = len(t)
    idx = np.flatnonzero(bad)
    out = -np.inf if want_max else np.inf
    opt = max if want_max else min
    k = 0
    while k < len(idx):
        j = k
        while j + 1 < len(idx) and idx[j + 1] == idx[j] + 1:
            j += 1
        if idx[k] == 0:
            lo = 0.0
        else:
            lo = _bisect_crossing(gfun, float(t[idx[k] - 1]), float(t[idx[k]]))
        if idx[j] == n - 1:
            hi = 1.0
        else:
            hi = _bisect_crossing(gfun, float(t[idx[j] + 1]), float(t[idx[j]]))
        tt = np.linspace(lo, hi, 257)
        r = np.linalg.norm(arc.point(tt), axis=-1)
        cand = float(r.max() if want_max else r.min())
        if not arc.is_line and hi > lo:
            res = minimize_scalar(
                lambda s: (-1.0 if want_max else 1.0)
                * float(np.sum(arc.point(np.array(s)) ** 2)),
                bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
            cand = opt(cand, math.sqrt(abs(res.fun)))
        out = opt(out, cand)
        k = j + 1
    return out


def classify_strongly_r0r1(b: Boundary, samples: int = 2048):
    """Minimal feasible R0 and maximal feasible R1, or None.

    Feasibility means R1 > e^{1/4} R0 so that a radial cutoff with the
    mandated slope bound exists; R1 = inf when x2*n2 >= 0 holds everywhere.
    """
    tol = 1e-10 * (1.0 + r_gamma(b))
    r0, r1 = 0.0, math.inf
    for arc, t in _arc_samples(b, samples):
        x = arc.point(t)
        nrm = arc.normal(t)
        xn = np.sum(x * nrm, axis=-1)
        x2n2 = x[:, 1] * nrm[:, 1]
        bad0 = xn < -tol
        bad1 = x2n2 < -tol

        def g0(s, arc=arc):
            sa = np.array(s)
            return float(arc.point(sa) @ arc.normal(sa)) + tol

        def g1(s, arc=arc):
            sa = np.array(s)
            return float(arc.point(sa)[1] * arc.normal(sa)[1]) + tol

        if bad0.any():
            r0 = max(r0, _run_extreme_radius(arc, t, g0, bad0, want_max=True))
        if bad1.any():
            r1 = min(r1, _run_extreme_radius(arc, t, g1, bad1, want_max=False))
    if not (r1 > QUARTER_EXP * r0):
        return None
    return (r0, r1)


def choose_radii(b: Boundary) -> tuple:
    """Concrete (R0, R1) for cutoff construction from the classification."""
    cls = classify_strongly_r0r1(b)
    if cls is None:
        raise ValueError(f"{b.label}: no feasible (R0, R1) pair")
    r0, r1 = cls
    if r0 == 0.0:
        r0 = 0.5 * r_gamma(b)
    want = 2.0 * r0
    if not (r1 > QUARTER_EXP * r0):
        raise ValueError(f"{b.label}: no feasible (R0, R1) pair")
    r1 = min(r1, max(want, QUARTER_EXP * r0 * 1.1))
    return (r0, r1)


def detect_parallel_trapping(b: Boundary) -> Optional[float]:
    """Gap of a facing flat-wall pair whose corridor is entirely exterior."""
    if b.facing is not None and b.facing.corridor_free:
        return b.facing.gap
    return None


def _star_shaped_ball(b: Boundary, samples: int = 2048) -> bool:
    lo = math.inf
    for arc, t in _arc_samples(b, samples):
        x = arc.point(t)
        xn = np.sum(x * arc.normal(t), axis=-1)
        lo = min(lo, float(xn.min()))
    return lo > 1e-10 * (1.0 + r_gamma(b))


def trapping_class(b: Boundary) -> TrappingClass:
    gap = detect_parallel_trapping(b)
    cls = classify_strongly_r0r1(b)
    if gap is not None:
        r0, r1 = cls if cls is not None else (None, None)
        return TrappingClass("parallel_trapping", r0, r1, gap)
    if _star_shaped_ball(b):
        return TrappingClass("star_shaped_ball", *(cls or (None, None)))
    if cls is not None:
        return TrappingClass("strongly_R0R1", cls[0], cls[1])
    return TrappingClass("unclassified")
