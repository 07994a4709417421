"""Brute-force geometric verifiers, used as ground truth.

Everything here is deliberately independent of the fast validation logic in
arcs and surgery: the checkers see nothing but carrier pieces, flatten
them to polylines with a certified sagitta bound, and answer by exhaustive
pairwise tests.  They serve two roles: reference implementations the fast
checks are tested against, and runtime postcondition guards that every
surgery result must pass before it is returned.

The embeddedness checker is adaptive.  A pair of pieces whose polylines
clear the separation threshold by more than the combined flattening error
is certified at the coarse resolution; only pairs that stay in doubt are
reflattened at finer sagitta, down to a floor of a quarter of the
separation tolerance.  A pair still ambiguous at the floor after the
subdivision budget is exhausted is reported as Inconclusive, which counts
as failure.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .config import DEFAULT
from .errors import BadIndex, DuplicateParameter, Inconclusive
from .hyp import CircArc, LineSeg, piece_endpoints, sample_piece


@dataclasses.dataclass(frozen=True)
class Verdict:
    """Outcome of a geometric check, with a witness when it fails."""

    ok: bool
    witness: tuple = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def _carrier_list(path):
    """Normalise the argument to a list of chart carriers."""
    pieces = getattr(path, "pieces", path)
    out = []
    for p in pieces:
        if isinstance(p, (LineSeg, CircArc)):
            out.append(p)
        else:
            raise BadIndex(
                f"cannot check a {type(p).__name__}; pass chart carriers"
            )
    return out


# ---------------------------------------------------------------------------
# Embeddedness

# Coarse sagitta for the first flattening pass.  The exact value only
# affects speed; correctness comes from the refinement loop.
_COARSE_SAG = 1e-3


class _Flat:
    """A piece together with its current polyline approximation."""

    __slots__ = ("piece", "sag", "v", "halvings")

    def __init__(self, piece, sag):
        self.piece = piece
        self.halvings = 0
        self._set(sag)

    def _set(self, sag):
        self.sag = 0.0 if isinstance(self.piece, LineSeg) else sag
        self.v = sample_piece(self.piece, max(sag, 1e-15))

    def refine(self):
        self.halvings += 1
        self._set(self.sag / 2.0)


def _segment_arrays(flat):
    v = flat.v
    return v[:-1], v[1:]


def _point_seg_dist(p, a, b):
    """Distances from points p to segments (a, b), all complex arrays."""
    ab = b - a
    denom = np.maximum(np.abs(ab) ** 2, 1e-300)
    t = np.clip(((p - a) * np.conj(ab)).real / denom, 0.0, 1.0)
    return np.abs(p - (a + t * ab))


def _seg_pair_min(a1, b1, a2, b2):
    """Min distance between all segment pairs of two polylines.

    Arrays are broadcast to an (n, m) grid.  Crossing pairs get distance
    zero via an orientation test; everything else is the least of the four
    endpoint-to-segment distances.
    """
    A1 = a1[:, None]
    B1 = b1[:, None]
    A2 = a2[None, :]
    B2 = b2[None, :]

    def orient(p, q, r):
        return (np.conj(q - p) * (r - p)).imag

    d1 = orient(A1, B1, A2)
    d2 = orient(A1, B1, B2)
    d3 = orient(A2, B2, A1)
    d4 = orient(A2, B2, B1)
    crossing = (d1 * d2 < 0.0) & (d3 * d4 < 0.0)

    m = np.minimum(
        np.minimum(_point_seg_dist(A2, A1, B1), _point_seg_dist(B2, A1, B1)),
        np.minimum(_point_seg_dist(A1, A2, B2), _point_seg_dist(B1, A2, B2)),
    )
    m = np.where(crossing, 0.0, m)
    ij = np.unravel_index(np.argmin(m), m.shape)
    return m[ij], ij


def _pair_min(fa, fb):
    a1, b1 = _segment_arrays(fa)
    a2, b2 = _segment_arrays(fb)
    return _seg_pair_min(a1, b1, a2, b2)


def _bbox(flat, pad):
    v = flat.v
    return (v.real.min() - pad, v.real.max() + pad,
            v.imag.min() - pad, v.imag.max() + pad)


def _boxes_meet(ba, bb):
    return not (ba[1] < bb[0] or bb[1] < ba[0] or ba[3] < bb[2] or bb[3] < ba[2])


def _witness_point(fa, fb, ij):
    a1, b1 = _segment_arrays(fa)
    a2, b2 = _segment_arrays(fb)
    sa, sb = a1[ij[0]], b1[ij[0]]
    partner_mid = 0.5 * (a2[ij[1]] + b2[ij[1]])
    ab = sb - sa
    denom = max(abs(ab) ** 2, 1e-300)
    t = min(max(((partner_mid - sa) * ab.conjugate()).real / denom, 0.0), 1.0)
    return complex(sa + t * ab)


def embedded_check(path, cfg=DEFAULT):
    """Certify that a chain of carriers has no self contact.

    Non-adjacent pieces must stay at least tau_sep apart everywhere;
    consecutive pieces may share their common endpoint but nothing else.
    The answer is a Verdict; an ambiguous pair after the refinement budget
    raises Inconclusive, which callers treat as failure.
    """
    pieces = _carrier_list(path)
    n = len(pieces)
    if n <= 1:
        return Verdict(True, detail="single piece")
    floor_sag = cfg.tau_sep / 4.0
    flats = [_Flat(p, _COARSE_SAG) for p in pieces]

    # adjacency by actual endpoint sharing, so that accidental contact of
    # consecutive pieces away from the joint is still caught below
    shared = []
    for i in range(n - 1):
        a = pieces[i].point(1.0)
        b = pieces[i + 1].point(0.0)
        shared.append(abs(a - b) <= 10.0 * cfg.tau_alg * (1.0 + abs(a)))

    pad = cfg.tau_sep + 2.0 * _COARSE_SAG
    boxes = [_bbox(f, pad) for f in flats]
    margin = cfg.tau_sep + 2.0 * floor_sag

    for i in range(n):
        for j in range(i + 1, n):
            if not _boxes_meet(boxes[i], boxes[j]):
                continue
            if j == i + 1 and shared[i]:
                verdict = _adjacent_pair(flats[i], flats[j], cfg, floor_sag)
                if not verdict.ok:
                    return Verdict(False, witness=(i, j, verdict.witness),
                                   detail=verdict.detail)
                continue
            fa, fb = flats[i], flats[j]
            while True:
                m, ij = _pair_min(fa, fb)
                if m - fa.sag - fb.sag >= margin:
                    break
                if fa.sag <= floor_sag and fb.sag <= floor_sag:
                    if m < cfg.tau_sep:
                        return Verdict(
                            False, witness=(i, j, _witness_point(fa, fb, ij)),
                            detail=f"pieces {i} and {j} within {m:.3g}",
                        )
                    break
                if fa.halvings >= cfg.max_subdiv or fb.halvings >= cfg.max_subdiv:
                    raise Inconclusive(
                        f"pieces {i} and {j} still ambiguous at subdivision "
                        f"depth {cfg.max_subdiv} near {_witness_point(fa, fb, ij)}"
                    )
                if fa.sag >= fb.sag and fa.sag > floor_sag:
                    fa.refine()
                else:
                    fb.refine()
    return Verdict(True, detail=f"{n} pieces pairwise clear")


def _carrier_model(piece):
    """Kind and defining data of a carrier, refit from three samples."""
    p0, pm, p1 = piece.point(0.0), piece.point(0.5), piece.point(1.0)
    d1, d2 = pm - p0, p1 - p0
    cross = (d1.conjugate() * d2).imag
    scale = abs(d1) * abs(d2)
    if scale == 0.0 or abs(cross) <= 1e-12 * scale:
        return ("line", (p0, p1), (p0, pm, p1))
    ax, ay, bx, by, cx, cy = p0.real, p0.imag, pm.real, pm.imag, p1.real, p1.imag
    den = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    na, nb, nc = abs(p0) ** 2, abs(pm) ** 2, abs(p1) ** 2
    ux = (na * (by - cy) + nb * (cy - ay) + nc * (ay - by)) / den
    uy = (na * (cx - bx) + nb * (ax - cx) + nc * (bx - ax)) / den
    c = complex(ux, uy)
    return ("circle", (c, abs(p0 - c)), (p0, pm, p1))


def _model_dist(p, model):
    kind, data, _ = model
    if kind == "line":
        a, b = data
        u = (b - a) / abs(b - a)
        return abs(((p - a) / u).imag)
    c, r = data
    return abs(abs(p - c) - r)


def _model_hits(ma, mb):
    """Intersection points of two carrier models, ignoring arc extents."""
    ka, da, _ = ma
    kb, db, _ = mb
    if ka == "line" and kb == "line":
        a1, b1 = da
        a2, b2 = db
        u, v = b1 - a1, b2 - a2
        den = (u.conjugate() * v).imag
        if abs(den) <= 1e-14 * abs(u) * abs(v):
            return []
        t = ((a2 - a1).conjugate() * v).imag / den
        return [a1 + t * u]
    if ka == "line" or kb == "line":
        (a, b), (c, r) = (da, db) if ka == "line" else (db, da)
        u = (b - a) / abs(b - a)
        w = (c - a) / u
        q = r * r - w.imag * w.imag
        if q < 0.0:
            return []
        root = math.sqrt(q)
        return [a + (w.real - root) * u, a + (w.real + root) * u]
    (c1, r1), (c2, r2) = da, db
    d = abs(c2 - c1)
    if d <= 1e-14 * (1.0 + r1 + r2):
        return []
    x = (d * d + r1 * r1 - r2 * r2) / (2.0 * d)
    q = r1 * r1 - x * x
    if q < 0.0:
        return []
    u = (c2 - c1) / d
    root = math.sqrt(q)
    base = c1 + x * u
    return [base + 1j * root * u, base - 1j * root * u]


def _on_arc(p, model, tol_len):
    kind, data, (p0, pm, p1) = model
    if kind == "line":
        a, b = data
        span = abs(b - a)
        t = ((p - a) / (b - a)).real
        return -tol_len / span <= t <= 1.0 + tol_len / span
    c, r = data
    th0 = math.atan2((p0 - c).imag, (p0 - c).real)
    thm = math.atan2((pm - c).imag, (pm - c).real)
    th1 = math.atan2((p1 - c).imag, (p1 - c).real)
    tau = 2.0 * math.pi
    for s in (1.0, -1.0):
        span = (s * (th1 - th0)) % tau
        midoff = (s * (thm - th0)) % tau
        if midoff <= span + 1e-9:
            break
    phi = math.atan2((p - c).imag, (p - c).real)
    off = (s * (phi - th0)) % tau
    tol_ang = tol_len / max(r, tol_len)
    return off <= span + tol_ang or off >= tau - tol_ang


def _same_carrier_fold(ma, mb, joint, tol_len):
    """For arcs on one circle or line: do they double back over each other?"""
    kind, data, (a0, am, a1) = ma
    _, _, (b0, bm, b1) = mb
    if kind == "line":
        a, b = data
        u = (b - a) / abs(b - a)
        ta1 = ((a1 - a) / u).real
        ta0 = ((a0 - a) / u).real
        tb1 = ((b1 - a) / u).real
        going = 1.0 if ta1 >= ta0 else -1.0
        return (tb1 - ta1) * going < -tol_len
    c, r = data
    tau = 2.0 * math.pi

    def sweep_sign(q0, qm, q1):
        th0 = math.atan2((q0 - c).imag, (q0 - c).real)
        thm = math.atan2((qm - c).imag, (qm - c).real)
        th1 = math.atan2((q1 - c).imag, (q1 - c).real)
        for s in (1.0, -1.0):
            if (s * (thm - th0)) % tau <= (s * (th1 - th0)) % tau + 1e-9:
                return s, (s * (th1 - th0)) % tau
        return 1.0, 0.0

    sa, spana = sweep_sign(a0, am, a1)
    sb, spanb = sweep_sign(b0, bm, b1)
    if sb == -sa:
        return spanb > tol_len / max(r, tol_len)
    return spana + spanb > tau - 1e-6


def _adjacent_pair(fa, fb, cfg, floor_sag):
    """Contact test for consecutive pieces sharing a joint.

    Near the joint the test is exact: the two carriers are refit from
    samples, and any intersection of the underlying circles that lies on
    both arcs away from the joint, or any doubling back along a shared
    carrier, fails.  Away from the joint the pieces are trimmed by a
    window proportional to their length and must satisfy the ordinary
    separation bound, so a transversal corner of any angle passes while a
    path that folds back onto itself does not.
    """
    joint = fa.piece.point(1.0)
    scale = 1.0 + abs(joint)
    tol_len = 10.0 * cfg.tau_alg * scale
    ma = _carrier_model(fa.piece)
    mb = _carrier_model(fb.piece)
    same = all(_model_dist(q, ma) <= tol_len for q in mb[2])
    if same:
        if _same_carrier_fold(ma, mb, joint, tol_len):
            return Verdict(False, witness=joint,
                           detail="adjacent pieces fold back on one carrier")
    else:
        for p in _model_hits(ma, mb):
            if abs(p - joint) <= 100.0 * cfg.tau_alg * scale:
                continue
            if _on_arc(p, ma, tol_len) and _on_arc(p, mb, tol_len):
                return Verdict(
                    False, witness=p,
                    detail=f"adjacent pieces cross again at {p:.6g}",
                )
    la, lb = fa.piece.length(), fb.piece.length()
    w = max(4.0 * cfg.tau_sep, 2e-3 * min(la, lb))
    if la <= 4.0 * w or lb <= 4.0 * w:
        return Verdict(True, detail="joint window covers the pieces")
    ta = _Flat(fa.piece.sub(0.0, 1.0 - w / la), _COARSE_SAG)
    tb = _Flat(fb.piece.sub(w / lb, 1.0), _COARSE_SAG)
    margin = cfg.tau_sep + 2.0 * floor_sag
    while True:
        m, ij = _pair_min(ta, tb)
        if m - ta.sag - tb.sag >= margin:
            return Verdict(True)
        if ta.sag <= floor_sag and tb.sag <= floor_sag:
            if m < cfg.tau_sep:
                return Verdict(
                    False, witness=_witness_point(ta, tb, ij),
                    detail=f"adjacent pieces overlap beyond their joint ({m:.3g})",
                )
            return Verdict(True)
        if ta.halvings >= cfg.max_subdiv or tb.halvings >= cfg.max_subdiv:
            raise Inconclusive(
                f"adjacent pair still ambiguous at depth {cfg.max_subdiv} "
                f"near {_witness_point(ta, tb, ij)}"
            )
        if ta.sag >= tb.sag and ta.sag > floor_sag:
            ta.refine()
        else:
            tb.refine()


# ---------------------------------------------------------------------------
# Half plane confinement


def halfplane_check(path):
    """Least imaginary part attained along a path of carriers.

    A positive return certifies the path stays in the upper half plane.
    Unrealized swings below a line have no chart image here and make the
    answer a sentinel -1.0, flagging that the input dips under the axis by
    construction.
    """
    pieces = getattr(path, "pieces", path)
    low = math.inf
    for p in pieces:
        if not isinstance(p, (LineSeg, CircArc)):
            return -1.0
        z1, z2 = piece_endpoints(p)
        low = min(low, z1.imag, z2.imag)
        if isinstance(p, CircArc) and p.param_of_angle(-0.5 * math.pi) is not None:
            low = min(low, p.c.imag - p.r)
    if low is math.inf:
        raise BadIndex("empty path has no extremal height")
    return low


# ---------------------------------------------------------------------------
# Chord systems on a circle


def noncrossing_chords_check(pairs, cfg=DEFAULT):
    """Decide whether chords with the given endpoint parameters are disjoint.

    Each pair marks two boundary points of a disc; the chords are disjoint
    exactly when no two pairs interleave around the circle.  Parameters are
    compared up to tau_alg and must be distinct.
    """
    flat = []
    chords = []
    for a, b in pairs:
        flat.extend((float(a), float(b)))
        chords.append((float(a), float(b)))
    flat.sort()
    for x, y in zip(flat, flat[1:]):
        if abs(x - y) <= cfg.tau_alg:
            raise DuplicateParameter(
                f"chord endpoints {x:.12g} and {y:.12g} coincide"
            )
    # rank order realises the circular order of the endpoint set
    rank = {x: i for i, x in enumerate(flat)}
    for i in range(len(chords)):
        ai, bi = sorted((rank[chords[i][0]], rank[chords[i][1]]))
        for j in range(i + 1, len(chords)):
            inside = sum(1 for x in chords[j] if ai < rank[x] < bi)
            if inside == 1:
                return Verdict(
                    False, witness=(i, j),
                    detail=f"chords {i} and {j} interleave",
                )
    return Verdict(True, detail=f"{len(chords)} chords pairwise unlinked")
