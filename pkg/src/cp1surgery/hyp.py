"""Plane hyperbolic geometry in the upper half plane chart.

Real Moebius maps send Euclidean segments and circular arcs to Euclidean
segments and circular arcs, so every curve this package manipulates is a
chain of two carrier types.  The kernel has three layers:

  * MobiusMap, real 2x2 matrices acting on the extended plane;
  * Line, a complete geodesic carrying a cached frame that puts it on the
    positive imaginary axis, where arclength is log of the modulus and
    hypercycles are rays through the origin;
  * carriers LineSeg and CircArc with a single intersection engine,
    closed-form minimal distances, and sagitta-controlled sampling.

Intersection queries report parameters on both pieces.  Tangential contact
raises Tangency rather than returning a point of even multiplicity, because
downstream validity checks are only meaningful for transversal crossings.
"""

from __future__ import annotations

import cmath
import dataclasses
import math

import numpy as np

from .errors import BoundaryPoint, NonInvertible, NotHyperbolic, Tangency

TWO_PI = 2.0 * math.pi


class _Infinity:
    """Sentinel for the boundary point at infinity."""

    __slots__ = ()

    def __repr__(self):
        return "INF"


INF = _Infinity()


# ---------------------------------------------------------------------------
# Moebius maps


@dataclasses.dataclass(frozen=True)
class MobiusMap:
    """Element of PSL(2,R), stored with determinant one."""

    a: float
    b: float
    c: float
    d: float

    @staticmethod
    def from_matrix(a, b, c, d):
        det = a * d - b * c
        if det <= 1e-14 * max(1.0, a * a + b * b + c * c + d * d):
            raise NonInvertible(f"determinant {det:g} not positive")
        s = 1.0 / math.sqrt(det)
        return MobiusMap(a * s, b * s, c * s, d * s)

    @staticmethod
    def identity():
        return MobiusMap(1.0, 0.0, 0.0, 1.0)

    def apply(self, z):
        if z is INF:
            if abs(self.c) < 1e-14:
                return INF
            return self.a / self.c
        den = self.c * z + self.d
        if abs(den) < 1e-14 * (1.0 + abs(z)):
            return INF
        return (self.a * z + self.b) / den

    def inverse(self):
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other):
        return MobiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def trace(self):
        return self.a + self.d

    def frobenius(self):
        return math.sqrt(self.a**2 + self.b**2 + self.c**2 + self.d**2)

    def is_identity(self, tol=1e-9):
        # +-I are the same projective map
        for sign in (1.0, -1.0):
            if (
                abs(self.a - sign) <= tol
                and abs(self.d - sign) <= tol
                and abs(self.b) <= tol
                and abs(self.c) <= tol
            ):
                return True
        return False

    def classify(self, tol=1e-9):
        t = abs(self.trace())
        if t > 2.0 + tol:
            return "hyperbolic"
        if t < 2.0 - tol:
            return "elliptic"
        return "identity" if self.is_identity(tol) else "parabolic"

    def translation_length(self, tol=1e-9):
        if self.classify(tol) != "hyperbolic":
            raise NotHyperbolic(f"trace {self.trace():g}")
        return 2.0 * math.acosh(abs(self.trace()) / 2.0)

    def fixed_points(self, tol=1e-9):
        """Attracting and repelling fixed points of a hyperbolic map."""
        if self.classify(tol) != "hyperbolic":
            raise NotHyperbolic(f"trace {self.trace():g}")
        a, b, c, d = self.a, self.b, self.c, self.d
        tr = a + d
        disc = tr * tr - 4.0
        root = math.sqrt(disc)
        if abs(c) < 1e-13:
            other = b / (d - a)
            att, rep = (INF, other) if abs(a) > abs(d) else (other, INF)
            return att, rep
        att = ((a - d) + math.copysign(root, tr)) / (2.0 * c)
        rep = ((a - d) - math.copysign(root, tr)) / (2.0 * c)
        return att, rep


def scaling_map(factor):
    if factor <= 0.0:
        raise NonInvertible(f"scale factor {factor:g}")
    s = math.sqrt(factor)
    return MobiusMap(s, 0.0, 0.0, 1.0 / s)


def rotation_about_i(angle):
    """Elliptic map fixing i whose derivative there rotates directions by angle."""
    t = angle / 2.0
    return MobiusMap(math.cos(t), math.sin(t), -math.sin(t), math.cos(t))


def _to_i(z):
    x, y = z.real, z.imag
    if y <= 0.0:
        raise BoundaryPoint(f"{z} not in the open upper half plane")
    s = math.sqrt(y)
    return MobiusMap(1.0 / s, -x / s, 0.0, s)


def point_map(z, theta_z, w, theta_w):
    """Isometry sending z to w and chart direction theta_z at z to theta_w at w.

    Directions are the Euclidean angles of tangent vectors in the chart; the
    affine normalizations preserve them, and the elliptic factor at i turns
    them by the required difference.
    """
    return _to_i(w).inverse() @ rotation_about_i(theta_w - theta_z) @ _to_i(z)


def dist(z, w):
    y1, y2 = z.imag, w.imag
    if y1 <= 0.0 or y2 <= 0.0:
        raise BoundaryPoint("distance needs points in the open upper half plane")
    return 2.0 * math.asinh(abs(z - w) / (2.0 * math.sqrt(y1 * y2)))


# ---------------------------------------------------------------------------
# Complete geodesics


class Line:
    """Complete geodesic, oriented from endpoint p toward endpoint q.

    The cached frame maps p to 0 and q to infinity, normalized so that the
    foot of the perpendicular from i lands at i.  Arclength along the line
    is s = log|frame(z)|, increasing toward q, and the left side (for an
    observer walking toward q) has negative real part in the frame.
    """

    __slots__ = ("p", "q", "frame", "frame_inv")

    def __init__(self, p, q):
        self.p = p
        self.q = q
        if q is INF:
            raw = MobiusMap(1.0, -p, 0.0, 1.0)
        elif p is INF:
            raw = MobiusMap(0.0, -1.0, 1.0, -q)
        else:
            if abs(p - q) < 1e-13 * (1.0 + abs(p) + abs(q)):
                raise NonInvertible("coincident geodesic endpoints")
            if p > q:
                raw = MobiusMap.from_matrix(1.0, -p, 1.0, -q)
            else:
                raw = MobiusMap.from_matrix(-1.0, p, 1.0, -q)
        self.frame = scaling_map(1.0 / abs(raw.apply(1j))) @ raw
        self.frame_inv = self.frame.inverse()

    def __repr__(self):
        return f"Line({self.p!r}, {self.q!r})"

    def reversed(self):
        return Line(self.q, self.p)

    def foot_param(self, z):
        w = self.frame.apply(z)
        if w is INF or abs(w) == 0.0:
            raise BoundaryPoint("foot parameter of an endpoint of the line")
        return math.log(abs(w))

    def dist_to(self, z):
        w = self.frame.apply(z)
        if w is INF or w.imag <= 0.0:
            raise BoundaryPoint(f"{z} not in the open upper half plane")
        return math.asinh(abs(w.real) / w.imag)

    def side_of(self, z, tol=1e-9):
        """+1 strictly left, -1 strictly right, 0 within tolerance of the line."""
        w = self.frame.apply(z)
        if w is INF or w.imag <= 0.0:
            raise BoundaryPoint(f"{z} not in the open upper half plane")
        if abs(w.real) <= tol * w.imag:
            return 0
        return -1 if w.real > 0.0 else 1

    def point_at(self, s, d=0.0, side=1):
        """Point at arclength s, displaced distance d to the given side."""
        theta = 0.5 * math.pi + side * math.atan(math.sinh(d))
        return self.frame_inv.apply(cmath.rect(math.exp(s), theta))

    def slide(self, t):
        """Hyperbolic translation along the line by arclength t."""
        return self.frame_inv @ scaling_map(math.exp(t)) @ self.frame

    def direction_at(self, s):
        """Chart angle of the forward tangent at arclength s."""
        zeta = complex(0.0, math.exp(s))
        m = self.frame_inv
        vel = zeta / (m.c * zeta + m.d) ** 2
        return cmath.phase(vel)

    def key(self, ndigits=9):
        def enc(e):
            return "inf" if e is INF else f"{round(e, ndigits):.{ndigits}f}"

        return (enc(self.p), enc(self.q))


def axis_of(m, tol=1e-9):
    """Axis of a hyperbolic map, oriented in the direction of translation."""
    att, rep = m.fixed_points(tol)
    return Line(rep, att)


def line_through(z, w):
    """Complete geodesic through two interior points, oriented from z toward w."""
    piece = geodesic_piece(z, w)
    if isinstance(piece, LineSeg):
        x = z.real
        return Line(x, INF) if w.imag > z.imag else Line(INF, x)
    cx = piece.c.real
    line = Line(cx - piece.r, cx + piece.r)
    if line.foot_param(w) < line.foot_param(z):
        line = line.reversed()
    return line


def line_line_dist(l1, l2, tol=1e-9):
    """Distance between disjoint complete geodesics, 0 if they meet or share ends."""
    a = l1.frame.apply(l2.p)
    b = l1.frame.apply(l2.q)
    if a is INF or b is INF:
        return 0.0
    x1, x2 = a.real, b.real
    if abs(x1) <= tol or abs(x2) <= tol:
        return 0.0
    if x1 * x2 < 0.0:
        return 0.0  # endpoints separate, the lines cross
    x1, x2 = sorted((abs(x1), abs(x2)))
    if x2 - x1 <= tol * x2:
        return math.inf
    return math.asinh(2.0 * math.sqrt(x1 * x2) / (x2 - x1))


# ---------------------------------------------------------------------------
# Carriers


@dataclasses.dataclass(frozen=True)
class LineSeg:
    z1: complex
    z2: complex

    def point(self, t):
        return self.z1 + t * (self.z2 - self.z1)

    def length(self):
        return abs(self.z2 - self.z1)

    def reversed(self):
        return LineSeg(self.z2, self.z1)

    def sub(self, t0, t1):
        return LineSeg(self.point(t0), self.point(t1))


@dataclasses.dataclass(frozen=True)
class CircArc:
    """Arc traversed from angle a0 through a signed sweep about center c."""

    c: complex
    r: float
    a0: float
    sweep: float

    def point(self, t):
        return self.c + cmath.rect(self.r, self.a0 + t * self.sweep)

    def length(self):
        return self.r * abs(self.sweep)

    def reversed(self):
        return CircArc(self.c, self.r, self.a0 + self.sweep, -self.sweep)

    def sub(self, t0, t1):
        return CircArc(self.c, self.r, self.a0 + t0 * self.sweep, (t1 - t0) * self.sweep)

    def param_of_angle(self, theta, tol_angle=0.0):
        """Parameter in [0,1] hitting the given angle, or None if out of range."""
        if self.sweep >= 0.0:
            off = (theta - self.a0) % TWO_PI
            if off <= self.sweep + tol_angle:
                return min(off / self.sweep, 1.0) if self.sweep > 0.0 else 0.0
            if off - TWO_PI >= -tol_angle:
                return 0.0
        else:
            off = (self.a0 - theta) % TWO_PI
            if off <= -self.sweep + tol_angle:
                return min(off / -self.sweep, 1.0)
            if off - TWO_PI >= -tol_angle:
                return 0.0
        return None


Piece = LineSeg | CircArc


def piece_endpoints(p):
    return p.point(0.0), p.point(1.0)


def geodesic_piece(z, w):
    """Geodesic arc between two points of the upper half plane."""
    if z.imag <= 0.0 or w.imag <= 0.0:
        raise BoundaryPoint("geodesic piece needs interior points")
    dx = z.real - w.real
    if abs(dx) <= 1e-12 * (1.0 + abs(z) + abs(w)):
        return LineSeg(z, w)
    cx = (abs(z) ** 2 - abs(w) ** 2) / (2.0 * dx)
    r = abs(z - cx)
    a0 = cmath.phase(z - cx)
    a1 = cmath.phase(w - cx)
    return CircArc(complex(cx, 0.0), r, a0, a1 - a0)


def hypercycle_piece(line, s0, s1, d=0.0, side=1):
    """Constant-displacement arc along a line between arclength parameters.

    In the line frame this is a straight ray segment through the origin, so
    the chart image is recovered by pushing a segment through the inverse
    frame.
    """
    theta = 0.5 * math.pi + side * math.atan(math.sinh(d))
    seg = LineSeg(cmath.rect(math.exp(s0), theta), cmath.rect(math.exp(s1), theta))
    return mobius_push_piece(line.frame_inv, seg)


def mobius_push_piece(m, piece):
    """Image of a carrier under a Moebius map, rebuilt from three points.

    Moebius maps take the carrier family to itself, so the image is pinned by
    the images of the endpoints and midpoint.  Near-degenerate circles of
    huge radius collapse to segments; the sagitta committed by that collapse
    is far below every tolerance in use.
    """
    w0 = m.apply(piece.point(0.0))
    wm = m.apply(piece.point(0.5))
    w1 = m.apply(piece.point(1.0))
    for w in (w0, wm, w1):
        if w is INF:
            raise BoundaryPoint("carrier through infinity has no bounded image")
    d1, d2 = wm - w0, w1 - w0
    cross = (d1.conjugate() * d2).imag
    scale = abs(d1) * abs(d2)
    if scale == 0.0:
        raise NonInvertible("degenerate image carrier")
    if abs(cross) <= 1e-10 * scale:
        return LineSeg(w0, w1)
    # circumcenter via perpendicular bisectors
    sa = abs(w0) ** 2
    bx1, by1, rhs1 = 2.0 * (wm.real - w0.real), 2.0 * (wm.imag - w0.imag), abs(wm) ** 2 - sa
    bx2, by2, rhs2 = 2.0 * (w1.real - w0.real), 2.0 * (w1.imag - w0.imag), abs(w1) ** 2 - sa
    det = bx1 * by2 - bx2 * by1
    cx = (rhs1 * by2 - rhs2 * by1) / det
    cy = (bx1 * rhs2 - bx2 * rhs1) / det
    c = complex(cx, cy)
    r = (abs(w0 - c) + abs(wm - c) + abs(w1 - c)) / 3.0
    a0 = cmath.phase(w0 - c)
    am = (cmath.phase(wm - c) - a0) % TWO_PI
    a1 = (cmath.phase(w1 - c) - a0) % TWO_PI
    sweep = a1 if am <= a1 else a1 - TWO_PI
    return CircArc(c, r, a0, sweep)


def reverse_piece(p):
    return p.reversed()


# ---------------------------------------------------------------------------
# Intersection engine


@dataclasses.dataclass(frozen=True)
class Hit:
    """Transversal meeting point with parameters on both pieces."""

    t: float
    u: float
    z: complex


def _seg_param(seg, tol):
    ln = seg.length()
    return tol / ln if ln > 0.0 else math.inf


def _clamp01(t):
    return 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)


def _seg_seg(s1, s2, tol):
    d1 = s1.z2 - s1.z1
    d2 = s2.z2 - s2.z1
    denom = (d1.conjugate() * d2).imag
    sep = s2.z1 - s1.z1
    if abs(denom) <= 1e-12 * abs(d1) * abs(d2):
        if abs((d1.conjugate() * sep).imag) > tol * abs(d1):
            return []
        # collinear: overlap beyond a point is a tangency
        lu = abs(d1) ** 2
        ta = ((s2.z1 - s1.z1).conjugate() * d1).real / lu
        tb = ((s2.z2 - s1.z1).conjugate() * d1).real / lu
        lo, hi = max(0.0, min(ta, tb)), min(1.0, max(ta, tb))
        if hi - lo > _seg_param(s1, tol):
            raise Tangency("collinear overlapping segments")
        if hi < lo:
            return []
        tmid = 0.5 * (lo + hi)
        umid = ((s1.point(tmid) - s2.z1).conjugate() * d2).real / abs(d2) ** 2
        return [Hit(tmid, _clamp01(umid), s1.point(tmid))]
    t = (sep.conjugate() * d2).imag / denom
    u = (sep.conjugate() * d1).imag / denom
    t1 = _seg_param(s1, tol)
    t2 = _seg_param(s2, tol)
    if -t1 <= t <= 1.0 + t1 and -t2 <= u <= 1.0 + t2:
        return [Hit(_clamp01(t), _clamp01(u), s1.point(_clamp01(t)))]
    return []


def _seg_arc(seg, arc, tol, raise_tangency):
    d = seg.z2 - seg.z1
    ln = abs(d)
    if ln == 0.0:
        return []
    u = d / ln
    # signed distance of the center from the segment's line
    h = ((arc.c - seg.z1).conjugate() * u).imag
    gap = abs(abs(h) - arc.r)
    foot_t = ((arc.c - seg.z1).conjugate() * u).real / ln
    ang_tol = tol / arc.r
    if gap <= tol:
        theta = cmath.phase((seg.z1 + foot_t * ln * u) - arc.c)
        in_seg = -tol / ln <= foot_t <= 1.0 + tol / ln
        in_arc = arc.param_of_angle(theta, ang_tol) is not None
        if in_seg and in_arc:
            if raise_tangency:
                raise Tangency("segment tangent to arc")
            return [Hit(_clamp01(foot_t), arc.param_of_angle(theta, ang_tol), seg.point(_clamp01(foot_t)))]
        return []
    if abs(h) > arc.r:
        return []
    half = math.sqrt(arc.r**2 - h * h) / ln
    hits = []
    for t in (foot_t - half, foot_t + half):
        if not (-tol / ln <= t <= 1.0 + tol / ln):
            continue
        z = seg.point(_clamp01(t))
        ua = arc.param_of_angle(cmath.phase(z - arc.c), ang_tol)
        if ua is not None:
            hits.append(Hit(_clamp01(t), ua, z))
    return hits


def _circular_ranges_meet(a, b, tol_angle):
    """Overlap of two angular ranges; 'arc' for an interval, 'point' for touching."""

    def norm(arc):
        if arc.sweep >= 0.0:
            return arc.a0 % TWO_PI, arc.sweep
        return (arc.a0 + arc.sweep) % TWO_PI, -arc.sweep

    s1, w1 = norm(a)
    s2, w2 = norm(b)
    best = None
    for shift in (-TWO_PI, 0.0, TWO_PI):
        lo = max(s1, s2 + shift)
        hi = min(s1 + w1, s2 + shift + w2)
        if hi - lo > tol_angle:
            return "arc", 0.5 * (lo + hi)
        if hi - lo >= -tol_angle:
            best = ("point", 0.5 * (lo + hi))
    return best if best else (None, None)


def _arc_arc(a1, a2, tol, raise_tangency):
    e = abs(a2.c - a1.c)
    if e <= tol and abs(a1.r - a2.r) <= tol:
        kind, theta = _circular_ranges_meet(a1, a2, tol / a1.r)
        if kind == "arc":
            raise Tangency("overlapping cocircular arcs")
        if kind == "point":
            z = a1.c + cmath.rect(a1.r, theta)
            return [
                Hit(
                    a1.param_of_angle(theta, tol / a1.r),
                    a2.param_of_angle(theta, tol / a2.r),
                    z,
                )
            ]
        return []
    if e <= tol:
        return []  # concentric, different radii
    u = (a2.c - a1.c) / e
    touching = abs(e - (a1.r + a2.r)) <= tol or abs(e - abs(a1.r - a2.r)) <= tol
    if touching:
        sign = 1.0 if e > abs(a1.r - a2.r) + tol or a1.r > a2.r else -1.0
        z = a1.c + a1.r * sign * u
        p1 = a1.param_of_angle(cmath.phase(z - a1.c), tol / a1.r)
        p2 = a2.param_of_angle(cmath.phase(z - a2.c), tol / a2.r)
        if p1 is not None and p2 is not None:
            if raise_tangency:
                raise Tangency("tangent circles")
            return [Hit(p1, p2, z)]
        return []
    if e > a1.r + a2.r or e < abs(a1.r - a2.r):
        return []
    aa = (e * e + a1.r**2 - a2.r**2) / (2.0 * e)
    hh = math.sqrt(max(a1.r**2 - aa * aa, 0.0))
    hits = []
    for sgn in (1.0, -1.0):
        z = a1.c + aa * u + sgn * hh * complex(-u.imag, u.real)
        p1 = a1.param_of_angle(cmath.phase(z - a1.c), tol / a1.r)
        p2 = a2.param_of_angle(cmath.phase(z - a2.c), tol / a2.r)
        if p1 is not None and p2 is not None:
            hits.append(Hit(p1, p2, z))
    return hits


def intersections(pa, pb, tol=1e-9, raise_tangency=True):
    """Meeting points of two carriers, sorted by parameter on the first.

    Endpoint grazes within tol are reported with clamped parameters; contact
    of positive length or vanishing crossing angle raises Tangency when
    raise_tangency is set, and is reported as a single Hit otherwise.
    """
    if isinstance(pa, LineSeg) and isinstance(pb, LineSeg):
        hits = _seg_seg(pa, pb, tol)
    elif isinstance(pa, LineSeg) and isinstance(pb, CircArc):
        hits = _seg_arc(pa, pb, tol, raise_tangency)
    elif isinstance(pa, CircArc) and isinstance(pb, LineSeg):
        hits = [Hit(h.u, h.t, h.z) for h in _seg_arc(pb, pa, tol, raise_tangency)]
    else:
        hits = _arc_arc(pa, pb, tol, raise_tangency)
    return sorted(hits, key=lambda h: h.t)


# ---------------------------------------------------------------------------
# Distances and sampling


def piece_point_dist(piece, z):
    if isinstance(piece, LineSeg):
        d = piece.z2 - piece.z1
        lu = abs(d) ** 2
        if lu == 0.0:
            return abs(z - piece.z1)
        t = _clamp01(((z - piece.z1).conjugate() * d).real / lu)
        return abs(z - piece.point(t))
    theta = cmath.phase(z - piece.c)
    if piece.param_of_angle(theta) is not None:
        return abs(abs(z - piece.c) - piece.r)
    return min(abs(z - piece.point(0.0)), abs(z - piece.point(1.0)))


def _interior_candidates(pa, pb):
    cands = []
    if isinstance(pa, LineSeg) and isinstance(pb, CircArc):
        d = pa.z2 - pa.z1
        lu = abs(d) ** 2
        if lu > 0.0:
            t = ((pb.c - pa.z1).conjugate() * d).real / lu
            if 0.0 < t < 1.0:
                foot = pa.point(t)
                if pb.param_of_angle(cmath.phase(foot - pb.c)) is not None:
                    cands.append(abs(abs(foot - pb.c) - pb.r))
    elif isinstance(pa, CircArc) and isinstance(pb, LineSeg):
        cands.extend(_interior_candidates(pb, pa))
    elif isinstance(pa, CircArc) and isinstance(pb, CircArc):
        e = abs(pb.c - pa.c)
        if e < 1e-12 * (pa.r + pb.r):
            kind, _ = _circular_ranges_meet(pa, pb, 0.0)
            if kind is not None:
                cands.append(abs(pa.r - pb.r))
        else:
            u = (pb.c - pa.c) / e
            for sa in (1.0, -1.0):
                za = pa.c + sa * pa.r * u
                if pa.param_of_angle(cmath.phase(za - pa.c)) is None:
                    continue
                for sb in (1.0, -1.0):
                    zb = pb.c + sb * pb.r * u
                    if pb.param_of_angle(cmath.phase(zb - pb.c)) is not None:
                        cands.append(abs(za - zb))
    return cands


def piece_min_dist(pa, pb, tol=1e-9):
    """Euclidean minimum distance between carriers; 0 if they meet."""
    try:
        if intersections(pa, pb, tol=tol, raise_tangency=False):
            return 0.0
    except Tangency:
        return 0.0
    cands = []
    for end in piece_endpoints(pa):
        cands.append(piece_point_dist(pb, end))
    for end in piece_endpoints(pb):
        cands.append(piece_point_dist(pa, end))
    cands.extend(_interior_candidates(pa, pb))
    return min(cands)


def piece_top(piece):
    """Largest imaginary part attained on the carrier."""
    z1, z2 = piece_endpoints(piece)
    top = max(z1.imag, z2.imag)
    if isinstance(piece, CircArc) and piece.param_of_angle(0.5 * math.pi) is not None:
        top = max(top, piece.c.imag + piece.r)
    return top


def piece_bottom(piece):
    z1, z2 = piece_endpoints(piece)
    bot = min(z1.imag, z2.imag)
    if isinstance(piece, CircArc) and piece.param_of_angle(-0.5 * math.pi) is not None:
        bot = min(bot, piece.c.imag - piece.r)
    return bot


def hyp_separation_lb(pa, pb, tol=1e-9):
    """Certified lower bound on hyperbolic distance between two carriers.

    Uses the exact chord identity sinh(d/2) = |z - w| / (2 sqrt(y1 y2)) with
    the Euclidean gap as |z - w| and the common height ceiling for both
    heights, which only ever underestimates.
    """
    gap = piece_min_dist(pa, pb, tol)
    top = max(piece_top(pa), piece_top(pb))
    if top <= 0.0:
        raise BoundaryPoint("separation bound needs upper half plane carriers")
    return 2.0 * math.asinh(gap / (2.0 * top))


def sample_piece(piece, max_sag):
    """Polyline vertices along the carrier with sagitta at most max_sag."""
    if isinstance(piece, LineSeg):
        return np.array([piece.z1, piece.z2])
    if max_sag >= piece.r:
        n = 2
    else:
        phi = 2.0 * math.acos(1.0 - max_sag / piece.r)
        n = max(2, int(math.ceil(abs(piece.sweep) / phi)) + 1)
    ts = np.linspace(0.0, 1.0, n)
    return piece.c + piece.r * np.exp(1j * (piece.a0 + ts * piece.sweep))
