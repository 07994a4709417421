"""Developed arcs across grafting regions and their crossing bookkeeping.

An arc is modeled through one developed lift: a chain of geodesic segments
in the upper half plane, interrupted wherever the arc traverses a grafting
region.  A traversal of a weight-M region is stored as M combinatorial
detour records against one lift line of the region; geometrically the lift
meets that line in M+1 transversal seam points, and between consecutive
seams the developed curve leaves the half plane, swinging around an ideal
endpoint of the line.  The canonical picture of one such swing, drawn in
the frame of the line, is a quarter circle down to the ideal boundary, a
half circle below it, and a quarter circle back up; everything the surgery
consumes depends only on the seam parameters and side data, never on the
drawn shape.

Level conventions, fixed once per region by its first traversal:
  * side signs are Line.side_of values (+1 left of the oriented line);
  * displacement level j lives at distance |j|*eps from the line, on the
    entry side of the first traversal when j < 0, opposite when j > 0;
    level 0 is the line itself;
  * a weight-M traversal splits into strips h = 1..M; strip h spans levels
    [-M+2h-2, -M+2h] around core level -M+2h-1, and shares its boundary
    anchor with strip h+1.

Each (traversal, strip) carries four marked points, in arc order: outer
entry, core entry, core exit, outer exit.  The core entry and exit develop
onto one hypercycle; the chords they span against the outer anchors are
what the rerouting walk follows.
"""

from __future__ import annotations

import cmath
import dataclasses
import math

from .errors import (
    ArcSynthesisFailed,
    BadIndex,
    DegenerateEndpoint,
    DuplicateParameter,
    InterleavedDetours,
    NoValidEpsilon,
    SelfIntersection,
    TangentCrossing,
    Tangency,
    TransversalityViolation,
)
from .config import DEFAULT
from .groups import evaluate, translated_axes
from .hyp import (
    CircArc,
    Line,
    LineSeg,
    dist,
    geodesic_piece,
    hypercycle_piece,
    intersections,
)
from .structures import choose_epsilon

MAX_INSERTIONS = 500


# ---------------------------------------------------------------------------
# Arc data


@dataclasses.dataclass(frozen=True)
class HPiece:
    """Geodesic segment of the developed arc between interior points."""

    z1: complex
    z2: complex


@dataclasses.dataclass(frozen=True)
class Detour:
    """One annulus passage of a region traversal, stored combinatorially.

    region indexes the multicurve component, lift is the conjugator word
    whose translate of the component axis the arc crosses, annulus is the
    surface label h in 1..M, and s_in/s_out are the seam parameters on the
    lift line.  winding counts extra full turns below the line and stays 0
    in this version.
    """

    region: int
    lift: tuple
    annulus: int
    s_in: float
    s_out: float
    winding: int = 0


@dataclasses.dataclass(frozen=True)
class DevelopedArc:
    pieces: tuple

    @property
    def start(self):
        return self.pieces[0].z1

    @property
    def end(self):
        return self.pieces[-1].z2


def reverse(arc):
    """The same arc run backwards; detour labels are kept as names."""
    out = []
    for p in reversed(arc.pieces):
        if isinstance(p, HPiece):
            out.append(HPiece(p.z2, p.z1))
        else:
            out.append(
                Detour(p.region, p.lift, p.annulus, p.s_out, p.s_in, -p.winding)
            )
    return DevelopedArc(tuple(out))


# ---------------------------------------------------------------------------
# Lift lines


@dataclasses.dataclass(frozen=True)
class LiftLine:
    region: int
    lift: tuple
    line: Line
    weight: int
    period: float


def resolve_line(s, region, lift):
    """The lift-line of a region named by a conjugator word."""
    if not 0 <= region < len(s.multicurve.components):
        raise BadIndex(f"region {region} out of range")
    word, weight = s.multicurve.components[region]
    base = s.component_axes()[region]
    m = evaluate(s.rep, lift)
    p, q = m.apply(base.p), m.apply(base.q)
    hol = evaluate(s.rep, word)
    return LiftLine(region, lift, Line(p, q), weight, hol.translation_length())


def collect_lines(s, center, reach, cfg=DEFAULT):
    """All lift lines of all regions within reach of a center point."""
    out = []
    for idx, (word, weight) in enumerate(s.multicurve.components):
        period = evaluate(s.rep, word).translation_length()
        for line, conj in translated_axes(
            s.rep, word, cfg.ball_disjoint, center=center, reach=reach,
            tol=cfg.tau_alg, cap=cfg.ball_cap,
        ):
            out.append(LiftLine(idx, conj, line, weight, period))
    return out


def _arc_center_reach(points, margin=2.0):
    c = points[0]
    reach = max(dist(c, p) for p in points) if len(points) > 1 else 0.0
    return c, reach + margin


# ---------------------------------------------------------------------------
# Synthesis from a polyline

VERTEX_GUARD = 1e-6


def build_arc_from_polyline(s, waypoints, cfg=DEFAULT, offsets=None):
    """Insert region detours into a geodesic polyline.

    The polyline is read as a path on the undeformed hyperbolic part of the
    structure.  Each time it crosses a lift line the crossing is replaced by
    a full traversal of that region: M seams separated by a parameter offset
    (a quarter period by default, overridable per crossing through offsets,
    keyed by insertion ordinal, in period units).  The remainder of the
    polyline is slid along the line by the accumulated offset and scanning
    resumes, since later pieces of the arc develop through the translated
    chart.
    """
    pts = [complex(p) for p in waypoints]
    if len(pts) < 2:
        raise DegenerateEndpoint("polyline needs at least two waypoints")
    for p in pts:
        if p.imag <= 0.0:
            raise DegenerateEndpoint(f"waypoint {p:g} is not an interior point")
    offsets = offsets or {}
    pieces = []
    remaining = pts
    guard = None
    region_first_side = {}
    ordinal = 0
    for _ in range(MAX_INSERTIONS):
        center, reach = _arc_center_reach(remaining)
        lines = collect_lines(s, center, reach, cfg)
        hit = _earliest_crossing(remaining, lines, guard, cfg)
        if hit is None:
            break
        seg_idx, t_seg, lift_line, z_hit = hit
        ordinal += 1
        for a, b in zip(remaining[:seg_idx], remaining[1 : seg_idx + 1]):
            pieces.append(HPiece(a, b))
        a = remaining[seg_idx]
        if abs(a - z_hit) > 1e-12 * (1.0 + abs(a)):
            pieces.append(HPiece(a, z_hit))
        else:
            raise TransversalityViolation("crossing collides with a waypoint")
        line, weight = lift_line.line, lift_line.weight
        t0 = line.foot_param(z_hit)
        frac = offsets.get(ordinal, 0.25)
        if frac == 0.0:
            raise BadIndex(f"zero detour offset for crossing {ordinal}")
        if weight * abs(frac) >= 1.0:
            raise BadIndex(
                f"detour offset {frac:g} spans a full period at weight {weight}"
            )
        delta = frac * lift_line.period
        side_in = line.side_of(a)
        if side_in == 0:
            raise TransversalityViolation("segment start lies on a lift line")
        first = region_first_side.setdefault(lift_line.region, side_in)
        aligned = side_in == first
        seams = [t0 + j * delta for j in range(weight + 1)]
        for j in range(1, weight + 1):
            label = j if aligned else weight + 1 - j
            pieces.append(
                Detour(lift_line.region, lift_line.lift, label,
                       seams[j - 1], seams[j])
            )
        slide = line.slide(weight * delta)
        exit_pt = line.point_at(seams[-1])
        tail = [slide.apply(p) for p in remaining[seg_idx + 1 :]]
        remaining = [exit_pt] + tail
        guard = exit_pt
    else:
        raise ArcSynthesisFailed("detour insertion did not terminate")
    for a, b in zip(remaining, remaining[1:]):
        pieces.append(HPiece(a, b))
    return DevelopedArc(tuple(pieces))


def _earliest_crossing(pts, lines, guard, cfg):
    best = None
    for i, (a, b) in enumerate(zip(pts, pts[1:])):
        seg = geodesic_piece(a, b)
        for ll in lines:
            f1, f2 = ll.line.foot_param(a), ll.line.foot_param(b)
            lo, hi = min(f1, f2) - 2.0, max(f1, f2) + 2.0
            carrier = hypercycle_piece(ll.line, lo, hi, 0.0, 1)
            for h in intersections(seg, carrier, tol=cfg.tau_alg):
                if guard is not None and abs(h.z - guard) < 1e-7:
                    continue
                if h.t < VERTEX_GUARD or h.t > 1.0 - VERTEX_GUARD:
                    raise TransversalityViolation(
                        "crossing at a polyline vertex; move the waypoint"
                    )
                if best is None or (i, h.t) < best[:2]:
                    best = (i, h.t, ll, h.z)
    return best


# ---------------------------------------------------------------------------
# Resolved geometry


@dataclasses.dataclass
class Traversal:
    """One full passage of the arc through a region, on one lift line."""

    region: int
    lift: tuple
    line: Line
    weight: int
    period: float
    seams: tuple          # M+1 parameters in arc order
    entry_side: int
    germ_in: int          # piece index of the segment before the first seam
    germ_out: int
    detour_pieces: tuple  # piece indices of the M detours in arc order

    @property
    def direction(self):
        return 1 if self.seams[-1] > self.seams[0] else -1


@dataclasses.dataclass
class ArcGeometry:
    """An arc resolved against a structure: carriers, traversals, lines."""

    structure: object
    arc: DevelopedArc
    carriers: list        # chart carrier per HPiece, None per Detour
    frames: dict          # piece index -> (dive, under, climb) in line frame
    traversals: list
    lines: dict           # (region, lift) -> LiftLine
    nearby: list          # LiftLine records within reach of the arc

    def line_of(self, piece):
        return self.lines[(piece.region, piece.lift)].line


def _realize_detour(s_in, s_out, dive_side):
    """Frame carriers of one canonical swing below the line.

    dive_side is the side the swing departs into at its entry seam; the
    climb comes back up on the other side.  All three pieces are exact
    circular arcs about the frame origin or on the real axis.
    """
    r_in, r_out = math.exp(s_in), math.exp(s_out)
    dive = CircArc(0.0, r_in, 0.5 * math.pi, dive_side * 0.5 * math.pi)
    x1 = -dive_side * r_in
    x2 = dive_side * r_out
    c = 0.5 * (x1 + x2)
    r = 0.5 * abs(x2 - x1)
    if x1 < x2:
        under = CircArc(complex(c, 0.0), r, math.pi, math.pi)
    else:
        under = CircArc(complex(c, 0.0), r, 0.0, -math.pi)
    climb = CircArc(0.0, r_out, 0.5 * math.pi - dive_side * 0.5 * math.pi,
                    dive_side * 0.5 * math.pi)
    return dive, under, climb


def resolve_arc(s, arc, cfg=DEFAULT):
    """Check structural well-formedness and attach geometry to an arc."""
    pieces = arc.pieces
    if not pieces or not isinstance(pieces[0], HPiece) \
            or not isinstance(pieces[-1], HPiece):
        raise DegenerateEndpoint("arc must start and end on plain segments")
    lines = {}
    for p in pieces:
        if isinstance(p, Detour):
            key = (p.region, p.lift)
            if key not in lines:
                lines[key] = resolve_line(s, p.region, p.lift)
    carriers = []
    for i, p in enumerate(pieces):
        if isinstance(p, HPiece):
            if abs(p.z1 - p.z2) <= cfg.tau_alg:
                raise DegenerateEndpoint(f"piece {i} has no extent")
            carriers.append(geodesic_piece(p.z1, p.z2))
        else:
            carriers.append(None)
    # endpoint agreement along the chain
    for i, (p, q) in enumerate(zip(pieces, pieces[1:])):
        a = _end_point(p, lines)
        b = _start_point(q, lines)
        if abs(a - b) > 10.0 * cfg.tau_alg * (1.0 + abs(a)):
            raise BadIndex(f"pieces {i} and {i + 1} do not share an endpoint")
    traversals = _group_traversals(pieces, lines, cfg)
    frames = {}
    for tr in traversals:
        for pi in tr.detour_pieces:
            d = pieces[pi]
            frames[pi] = _realize_detour(d.s_in, d.s_out, -tr.entry_side)
    pts = [p.z1 for p in pieces if isinstance(p, HPiece)]
    pts.append(pieces[-1].z2)
    center, reach = _arc_center_reach(pts)
    nearby = collect_lines(s, center, reach, cfg)
    return ArcGeometry(s, arc, carriers, frames, traversals, lines, nearby)


def _end_point(p, lines):
    if isinstance(p, HPiece):
        return p.z2
    return lines[(p.region, p.lift)].line.point_at(p.s_out)


def _start_point(p, lines):
    if isinstance(p, HPiece):
        return p.z1
    return lines[(p.region, p.lift)].line.point_at(p.s_in)


def _group_traversals(pieces, lines, cfg):
    traversals = []
    i = 0
    while i < len(pieces):
        if not isinstance(pieces[i], Detour):
            i += 1
            continue
        j = i
        first = pieces[i]
        while j + 1 < len(pieces) and isinstance(pieces[j + 1], Detour) \
                and pieces[j + 1].region == first.region \
                and pieces[j + 1].lift == first.lift \
                and abs(pieces[j + 1].s_in - pieces[j].s_out) <= cfg.tau_sep:
            j += 1
        run = pieces[i : j + 1]
        if i == 0 or j == len(pieces) - 1:
            raise DegenerateEndpoint("arc terminates inside a region")
        if not isinstance(pieces[i - 1], HPiece) \
                or not isinstance(pieces[j + 1], HPiece):
            raise BadIndex("region traversals must be separated by segments")
        ll = lines[(first.region, first.lift)]
        if len(run) != ll.weight:
            raise BadIndex(
                f"traversal of region {first.region} has {len(run)} detours, "
                f"weight is {ll.weight}"
            )
        labels = [d.annulus for d in run]
        m = ll.weight
        if labels not in (list(range(1, m + 1)), list(range(m, 0, -1))):
            raise BadIndex(f"annulus labels {labels} are not consecutive")
        seams = [run[0].s_in] + [d.s_out for d in run]
        steps = [b - a for a, b in zip(seams, seams[1:])]
        if any(abs(st) < cfg.tau_sep for st in steps):
            raise DuplicateParameter("detour with coincident seam parameters")
        if len({st > 0 for st in steps}) != 1:
            raise TransversalityViolation(
                "mixed detour directions within one traversal"
            )
        side = ll.line.side_of(pieces[i - 1].z1)
        if side == 0:
            raise TransversalityViolation("entry germ starts on the line")
        traversals.append(
            Traversal(first.region, first.lift, ll.line, m, ll.period,
                      tuple(seams), side, i - 1, j + 1,
                      tuple(range(i, j + 1)))
        )
        i = j + 1
    return traversals


# ---------------------------------------------------------------------------
# Bubbleability


def validate_bubbleable(s, arc, cfg=DEFAULT):
    """Check that the arc bounds a bubbling move; returns resolved geometry.

    Three families of checks: the plain segments are pairwise disjoint away
    from shared endpoints and meet lift lines only at their own seams; the
    detour chords of every (region, lift, annulus) family are pairwise
    unlinked on the boundary circle of the slit chart; the arc endpoints
    are interior, distinct, and clear of every nearby lift line.
    """
    geo = resolve_arc(s, arc, cfg)
    pieces = arc.pieces
    hsegs = [(i, c) for i, c in enumerate(geo.carriers) if c is not None]
    for a in range(len(hsegs)):
        for b in range(a + 1, len(hsegs)):
            i, ci = hsegs[a]
            j, cj = hsegs[b]
            adjacent = j == i + 1
            shared = pieces[i].z2 if adjacent else None
            try:
                hits = intersections(ci, cj, tol=cfg.tau_alg)
            except Tangency:
                if adjacent and _touch_only(ci, cj, shared, cfg.tau_alg):
                    continue
                raise
            for h in hits:
                if shared is not None and abs(h.z - shared) <= 10 * cfg.tau_alg:
                    continue
                raise SelfIntersection(
                    f"segments {i} and {j} meet at {h.z:.6g}"
                )
    _check_stealth_crossings(geo, cfg)
    _check_chord_families(geo, cfg)
    _check_endpoints(geo, cfg)
    return geo


def _touch_only(ci, cj, shared, tol):
    """Collinear or cocircular neighbors may continue, not fold back."""
    if isinstance(ci, LineSeg) and isinstance(cj, LineSeg):
        d = ci.z2 - ci.z1
        t = [((z - ci.z1).real * d.real + (z - ci.z1).imag * d.imag)
             / abs(d) ** 2 for z in (cj.z1, cj.z2)]
        lo, hi = min(t), max(t)
        return min(hi, 1.0) - max(lo, 0.0) <= tol / max(abs(d), tol)
    if isinstance(ci, CircArc) and isinstance(cj, CircArc):
        span = _angle_span(ci)
        overlap = 0.0
        for k in range(101):
            th = cj.a0 + cj.sweep * (k / 100.0)
            if _angle_in(th, span, 0.0):
                overlap += abs(cj.sweep) / 100.0
        return overlap <= 1e-6
    return False


def _angle_span(arc):
    if arc.sweep >= 0:
        return arc.a0, arc.a0 + arc.sweep
    return arc.a0 + arc.sweep, arc.a0


def _angle_in(theta, span, tol):
    lo, hi = span
    off = (theta - lo) % (2.0 * math.pi)
    return tol < off < (hi - lo) - tol


def _check_stealth_crossings(geo, cfg):
    """Plain segments may touch a lift line only at their own seam ends."""
    pieces = geo.arc.pieces
    seam_pts = {}
    for tr in geo.traversals:
        key = (tr.region, tr.lift)
        seam_pts.setdefault(key, []).append(tr.line.point_at(tr.seams[0]))
        seam_pts.setdefault(key, []).append(tr.line.point_at(tr.seams[-1]))
    for i, c in enumerate(geo.carriers):
        if c is None:
            continue
        ends = (pieces[i].z1, pieces[i].z2)
        for ll in geo.nearby:
            f1, f2 = ll.line.foot_param(ends[0]), ll.line.foot_param(ends[1])
            lo, hi = min(f1, f2) - 2.0, max(f1, f2) + 2.0
            carrier = hypercycle_piece(ll.line, lo, hi, 0.0, 1)
            for h in intersections(c, carrier, tol=cfg.tau_alg):
                if any(abs(h.z - e) <= 10 * cfg.tau_alg for e in ends):
                    continue
                raise SelfIntersection(
                    f"segment {i} crosses a lift line of region "
                    f"{ll.region} without a detour"
                )


def _chord_angle(s, bank):
    psi = 0.5 * math.pi + math.atan(s)
    return psi if bank > 0 else 2.0 * math.pi - psi


def _check_chord_families(geo, cfg):
    families = {}
    pieces = geo.arc.pieces
    for tr in geo.traversals:
        for pi in tr.detour_pieces:
            d = pieces[pi]
            key = (d.region, d.lift, d.annulus)
            chord = (
                (_chord_angle(d.s_in, -tr.entry_side), pi),
                (_chord_angle(d.s_out, tr.entry_side), pi),
            )
            families.setdefault(key, []).append(chord)
    for key, chords in families.items():
        angles = [a for ch in chords for a, _ in ch]
        for x in range(len(angles)):
            for y in range(x + 1, len(angles)):
                if abs(angles[x] - angles[y]) <= 1e-12:
                    raise DuplicateParameter(
                        f"coincident detour parameters in family {key}"
                    )
        for x in range(len(chords)):
            for y in range(x + 1, len(chords)):
                if _interleaved(chords[x], chords[y]):
                    raise InterleavedDetours(
                        f"detour pieces {chords[x][0][1]} and "
                        f"{chords[y][0][1]} interleave in family {key}"
                    )


def _interleaved(ca, cb):
    a1, a2 = ca[0][0], ca[1][0]
    width = (a2 - a1) % (2.0 * math.pi)
    ins = [((b - a1) % (2.0 * math.pi)) < width for b, _ in cb]
    return ins[0] != ins[1]


def _check_endpoints(geo, cfg):
    arc = geo.arc
    if dist(arc.start, arc.end) <= cfg.tau_sep:
        raise DegenerateEndpoint("arc endpoints coincide")
    for z in (arc.start, arc.end):
        for ll in geo.nearby:
            if ll.line.dist_to(z) <= cfg.tau_sep:
                raise DegenerateEndpoint(
                    f"arc endpoint {z:.6g} lies on a lift line"
                )


# ---------------------------------------------------------------------------
# Crossing extraction


@dataclasses.dataclass(frozen=True)
class ArcPlace:
    """A position along the arc: piece index, detour part, local parameter."""

    piece: int
    part: str     # "seg", "dive", "under", "climb"
    t: float

    _ORDER = {"seg": 0, "dive": 0, "under": 1, "climb": 2}

    def key(self):
        return (self.piece, self._ORDER[self.part], self.t)


@dataclasses.dataclass(frozen=True)
class AnchorPoint:
    point: complex
    param: float
    level: int
    side: int
    place: ArcPlace


@dataclasses.dataclass
class CrossingRecord:
    """Strip-level record of one traversal: core and outer marked points."""

    region: int
    lift: tuple
    annulus: int
    index: int
    entry_outer: AnchorPoint
    entry: AnchorPoint
    exit: AnchorPoint
    exit_outer: AnchorPoint
    coherence: int
    omega: int = 1

    @property
    def entry_param(self):
        return self.entry.param

    @property
    def exit_param(self):
        return self.exit.param


@dataclasses.dataclass
class LineTable:
    """All crossings of one lift line, with the line-level combinatorics."""

    region: int
    lift: tuple
    line: Line
    weight: int
    period: float
    count: int
    orientation: int          # +1 when the induced orientation is the line's
    first_side: int           # entry side fixing the level signs
    order: tuple              # cyclic order of crossings, anchored at 1
    coherence: tuple          # per-crossing signs, first is +1
    matrix: tuple             # pairwise coherence products
    records: list             # strip records in arc order
    traversals: list

    def record(self, index, annulus):
        for r in self.records:
            if r.index == index and r.annulus == annulus:
                return r
        raise BadIndex(f"no record for crossing {index} annulus {annulus}")


@dataclasses.dataclass
class CrossingTable:
    lines: dict               # (region, lift) -> LineTable
    epsilon: float
    geometry: ArcGeometry


def z2_act(sign, x):
    """Entry/exit swap; the nontrivial element reverses all role tags."""
    if sign not in (1, -1):
        raise BadIndex("sign must be +1 or -1")
    if sign == 1:
        return x
    if isinstance(x, CrossingRecord):
        return dataclasses.replace(
            x, entry_outer=x.exit_outer, entry=x.exit,
            exit=x.entry, exit_outer=x.entry_outer, omega=-x.omega,
        )
    if isinstance(x, LineTable):
        swapped = dataclasses.replace(x)
        swapped.records = [z2_act(-1, r) for r in x.records]
        return swapped
    if isinstance(x, CrossingTable):
        return CrossingTable(
            {k: z2_act(-1, v) for k, v in x.lines.items()},
            x.epsilon, x.geometry,
        )
    raise BadIndex(f"no involution defined on {type(x).__name__}")


def extract_crossings(s, arc, cfg=DEFAULT, geometry=None, epsilon=None):
    """Anchor every traversal and assemble the per-line crossing tables.

    The displacement levels are traced at a collar size small enough that
    every germ meets every level of its side exactly once near its seam and
    pieces without a seam stay clear of the collar; the candidate size from
    the pairwise line separations is halved until this holds.
    """
    geo = geometry if geometry is not None else validate_bubbleable(s, arc, cfg)
    region_side = {}
    for tr in geo.traversals:
        region_side.setdefault(tr.region, tr.entry_side)
    by_line = {}
    for tr in geo.traversals:
        by_line.setdefault((tr.region, tr.lift), []).append(tr)
    if epsilon is not None:
        eps_candidates = [epsilon]
    else:
        weighted = [(ll.weight, ll.line) for ll in geo.nearby]
        eps0 = choose_epsilon(s, weighted, cfg)
        eps_candidates = [eps0 / 2.0 ** i for i in range(60)]
    last_err = None
    for eps in eps_candidates:
        try:
            tables = _extract_at(geo, by_line, region_side, eps, cfg)
            return CrossingTable(tables, eps, geo)
        except _Refine as e:
            last_err = e
            continue
    raise NoValidEpsilon(
        f"no collar size separates the arc germs: {last_err}"
    )


class _Refine(Exception):
    """Internal: the collar is still too wide at this epsilon."""


def _extract_at(geo, by_line, region_side, eps, cfg):
    _collar_discipline(geo, eps, cfg)
    _endpoint_clearance(geo, eps, cfg)
    tables = {}
    for key, travs in by_line.items():
        tables[key] = _line_table(geo, travs, region_side[travs[0].region],
                                  eps, cfg)
    return tables


def _collar_discipline(geo, eps, cfg):
    """Pieces with no seam on a line stay outside its widest collar."""
    pieces = geo.arc.pieces
    adjacent = {}
    for tr in geo.traversals:
        key = (tr.region, tr.lift)
        adjacent.setdefault(key, set()).update((tr.germ_in, tr.germ_out))
    for ll in geo.nearby:
        key = (ll.region, ll.lift)
        reach = ll.weight * eps
        for i, c in enumerate(geo.carriers):
            if c is None or i in adjacent.get(key, ()):
                continue
            ends = (pieces[i].z1, pieces[i].z2)
            if any(ll.line.dist_to(e) <= reach + cfg.tau_sep for e in ends):
                raise _Refine(f"piece {i} ends inside a collar")
            f1, f2 = ll.line.foot_param(ends[0]), ll.line.foot_param(ends[1])
            lo, hi = min(f1, f2) - 2.0, max(f1, f2) + 2.0
            for side in (1, -1):
                band = hypercycle_piece(ll.line, lo, hi, reach, side)
                if intersections(c, band, tol=cfg.tau_alg):
                    raise _Refine(f"piece {i} dips into a collar")


def _endpoint_clearance(geo, eps, cfg):
    for z in (geo.arc.start, geo.arc.end):
        for ll in geo.nearby:
            if ll.line.dist_to(z) <= ll.weight * eps + cfg.tau_sep:
                raise _Refine("arc endpoint inside a collar")


def _germ_level_point(geo, piece_idx, line, seam_end, level_dist, side, cfg):
    """Where a germ crosses one displacement level, nearest its seam end.

    seam_end is 0 or 1, the germ parameter end lying on the line.  Raises
    the refinement signal when the germ meets the level more than once near
    that end, or strays into the collar when its far end is off the line;
    both are cured by a smaller collar.
    """
    c = geo.carriers[piece_idx]
    p = geo.arc.pieces[piece_idx]
    f1, f2 = line.foot_param(p.z1), line.foot_param(p.z2)
    lo, hi = min(f1, f2) - 2.0, max(f1, f2) + 2.0
    band = hypercycle_piece(line, lo, hi, level_dist, side)
    hits = intersections(c, band, tol=cfg.tau_alg)
    if not hits:
        raise _Refine(f"germ {piece_idx} misses a level at distance "
                      f"{level_dist:g}")
    far = p.z1 if seam_end == 1 else p.z2
    far_on_line = line.dist_to(far) <= 10.0 * cfg.tau_alg
    hits.sort(key=lambda h: abs(h.t - seam_end))
    for h in hits[1:]:
        near = abs(h.t - seam_end) < abs(h.t - (1 - seam_end))
        if near or not far_on_line:
            raise _Refine(f"germ {piece_idx} meets a level twice")
    return hits[0]


def _line_table(geo, travs, first_region_side, eps, cfg):
    pieces = geo.arc.pieces
    tr0 = travs[0]
    line = tr0.line
    level_side = {}
    records = []
    core_params = []
    for k, tr in enumerate(travs, start=1):
        m = tr.weight
        aligned = tr.entry_side == first_region_side
        anchors = {}
        strip_order = range(1, m + 1) if aligned else range(m, 0, -1)
        for h in strip_order:
            lo, co, hi = -m + 2 * h - 2, -m + 2 * h - 1, -m + 2 * h
            if aligned:
                spots = [(h, lo), (h, co), (h + 1, co), (h + 1, hi)]
            else:
                spots = [(h + 1, hi), (h + 1, co), (h, co), (h, lo)]
            pts = []
            for c, lam in spots:
                ck = (c, lam)
                if ck not in anchors:
                    anchors[ck] = _locus_event(
                        geo, tr, c, lam, eps, first_region_side, cfg
                    )
                pts.append(anchors[ck])
            rec = CrossingRecord(
                tr.region, tr.lift, h, k,
                entry_outer=pts[0], entry=pts[1],
                exit=pts[2], exit_outer=pts[3],
                coherence=0,
            )
            records.append(rec)
        strip_records = records[-m:]
        dirs = {1 if r.exit.param > r.entry.param else -1
                for r in strip_records}
        if len(dirs) != 1:
            raise TransversalityViolation(
                f"crossing {k} has inconsistent core directions"
            )
        d = dirs.pop()
        for r in strip_records:
            r.coherence = d
        core_params.append((k, [(r.annulus, r.entry.param, r.exit.param)
                                for r in strip_records]))
    n = len(travs)
    orientation = records[0].coherence
    for r in records:
        r.coherence *= orientation
    coherence = tuple(
        next(r.coherence for r in records if r.index == k)
        for k in range(1, n + 1)
    )
    # Seam parameters of distinct traversals must stay separated;
    # within one traversal consecutive strips share a seam on purpose.
    for i in range(len(travs)):
        for j in range(i + 1, len(travs)):
            for a in travs[i].seams:
                for b in travs[j].seams:
                    if abs(a - b) < cfg.tau_sep:
                        raise TangentCrossing(
                            f"crossing parameters {a:.9g} and {b:.9g} "
                            f"collide on one line"
                        )
    order = _cyclic_order(records, tr0.period, orientation, tr0.weight, cfg)
    matrix = tuple(
        tuple(coherence[a] * coherence[b] for b in range(n))
        for a in range(n)
    )
    return LineTable(
        tr0.region, tr0.lift, line, tr0.weight, tr0.period, n,
        orientation, first_region_side, order, coherence, matrix,
        records, travs,
    )


def _cyclic_order(records, period, orientation, weight, cfg):
    """Order of the crossings around the surface curve, per annulus.

    Positions are read modulo the period, since crossings far apart along
    the lift line can sit close together on the curve itself.
    """
    orders = []
    for h in range(1, weight + 1):
        entries = [(r.index, (orientation * r.entry.param) % period)
                   for r in records if r.annulus == h]
        entries.sort(key=lambda e: e[1])
        for (_, a), (_, b) in zip(entries, entries[1:] + entries[:1]):
            gap = (b - a) % period
            if len(entries) > 1 and gap < cfg.tau_sep:
                raise TangentCrossing(
                    f"crossings collide on the curve (gap {gap:.3g})"
                )
        ks = [k for k, _ in entries]
        at = ks.index(1)
        orders.append(tuple(ks[at:] + ks[:at]))
    if len(set(orders)) != 1:
        raise TransversalityViolation(
            f"cyclic order differs between annuli: {orders}"
        )
    return orders[0]


def _locus_event(geo, tr, c, lam, eps, first_region_side, cfg):
    """The marked point of a traversal at local level lam beside copy c.

    Copies count seams from the low-level end of the region; the event sits
    on the germ, on a quarter of the canonical swing, or on the line.
    """
    m = tr.weight
    aligned = tr.entry_side == first_region_side
    seam_idx = (c - 1) if aligned else (m + 1 - c)
    seam = tr.seams[seam_idx]
    line = tr.line
    if lam == 0:
        next_piece = _piece_after_seam(geo, tr, seam_idx)
        return AnchorPoint(line.point_at(seam), seam, 0, 0, next_piece)
    side = first_region_side if lam < 0 else -first_region_side
    d = abs(lam) * eps
    if lam < 0:
        if aligned:
            piece, role = (tr.germ_in, "germ-end") if c == 1 else \
                (tr.detour_pieces[c - 2], "climb")
        else:
            piece, role = (tr.germ_out, "germ-start") if c == 1 else \
                (tr.detour_pieces[m + 1 - c], "dive")
    else:
        if aligned:
            piece, role = (tr.germ_out, "germ-start") if c == m + 1 else \
                (tr.detour_pieces[c - 1], "dive")
        else:
            piece, role = (tr.germ_in, "germ-end") if c == m + 1 else \
                (tr.detour_pieces[m - c], "climb")
    if role in ("germ-end", "germ-start"):
        seam_end = 1 if role == "germ-end" else 0
        hit = _germ_level_point(geo, piece, line, seam_end, d, side, cfg)
        return AnchorPoint(hit.z, line.foot_param(hit.z), lam, side,
                           ArcPlace(piece, "seg", hit.t))
    # quarters are exact in the frame of the line
    frac = math.atan(math.sinh(d)) / (0.5 * math.pi)
    if frac >= 1.0:
        raise _Refine("collar wider than a quarter swing")
    theta = 0.5 * math.pi + side * math.atan(math.sinh(d))
    r = math.exp(seam)
    z = line.frame_inv.apply(cmath.rect(r, theta))
    dive_side = -tr.entry_side
    if role == "dive":
        if side != dive_side:
            raise TransversalityViolation("level side disagrees with swing")
        place = ArcPlace(piece, "dive", frac)
    else:
        if side != -dive_side:
            raise TransversalityViolation("level side disagrees with swing")
        place = ArcPlace(piece, "climb", 1.0 - frac)
    return AnchorPoint(z, seam, lam, side, place)


def _piece_after_seam(geo, tr, seam_idx):
    """Canonical place of a seam event: the start of the following piece."""
    if seam_idx == 0:
        return ArcPlace(tr.detour_pieces[0], "dive", 0.0)
    if seam_idx == tr.weight:
        return ArcPlace(tr.germ_out, "seg", 0.0)
    return ArcPlace(tr.detour_pieces[seam_idx], "dive", 0.0)
