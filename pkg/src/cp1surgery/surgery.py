"""Bubble moves and crossing resolution over a grafted structure.

The central algorithm rewires an arc that traverses grafting regions into a
path that avoids every surviving region while keeping its endpoints.  It is
driven entirely by the crossing tables: a single walker moves along the arc,
and each time it reaches the outermost marked point of a collar it swaps the
in-collar portion for auxiliary chords and displacement runs, choosing the
next crossing through the cyclic order and the coherence signs.  The walker
carries a direction state and a chart transform; runs that pass the
fundamental period land on a translate and fold the deck map into the chart,
which must return to the identity by the time the walker leaves the arc.

Everything the walker emits is bookkept: chords are consumed at most once,
displacement runs may not overlap on the quotient circle, and stretches of
the original arc may not be reused.  A violation of any of these, or of the
final oracle checks, raises EmbeddingCheckFailed; on inputs that pass
validation this indicates an internal error rather than a user mistake.

On top of the resolver sit the surgery moves proper: bubbling an embedded
arc to create a branched structure, the natural and rerouted debubblings,
full degrafting, and two-sided join plans between structures sharing a
holonomy.
"""

from __future__ import annotations

import dataclasses
import math
import random

from .arcs import (
    ArcPlace,
    DevelopedArc,
    Detour,
    extract_crossings,
    build_arc_from_polyline,
    validate_bubbleable,
)
from .config import DEFAULT
from .errors import (
    ArcSynthesisFailed,
    BadIndex,
    EmbeddingCheckFailed,
    NotABubble,
    NotFullCover,
)
from .groups import word_str
from .hyp import (
    MobiusMap,
    geodesic_piece,
    hypercycle_piece,
    intersections,
    mobius_push_piece,
    scaling_map,
)
from .oracle import embedded_check, halfplane_check
from .structures import (
    GraftedStructure,
    WeightedMulticurve,
    graft,
    structure_equal,
)

__all__ = [
    "FollowBeta", "FollowZeta", "FollowGamma", "FollowXi", "OffAxisHop",
    "RoutedPath", "ReroutePlan", "reroute", "degraft_full",
    "BubbleRecord", "BranchedStructure", "bubble", "debubble",
    "branched_equal", "synthesize_cover_arc",
    "Bubbling", "Debubbling", "MoveSequence",
    "plan_join", "plan_join_branched", "graft",
]


# ---------------------------------------------------------------------------
# Plan steps


@dataclasses.dataclass(frozen=True)
class FollowBeta:
    """A stretch of the original arc between two of its places."""

    start: ArcPlace
    end: ArcPlace
    reverse: bool
    pieces: tuple

    def describe(self, genus):
        a, b = self.start, self.end
        return (f"beta {a.piece}/{a.part}/{a.t:.9f} -> "
                f"{b.piece}/{b.part}/{b.t:.9f}"
                + (" reversed" if self.reverse else ""))


@dataclasses.dataclass(frozen=True)
class FollowZeta:
    """Entry chord of a crossing: outermost entry point to core exit."""

    region: int
    lift: tuple
    index: int
    annulus: int
    reverse: bool
    pieces: tuple

    def describe(self, genus):
        return (f"zeta region={self.region} lift={_lift_str(self.lift, genus)} "
                f"crossing={self.index} annulus={self.annulus}"
                + (" reversed" if self.reverse else ""))


@dataclasses.dataclass(frozen=True)
class FollowXi:
    """Exit chord of a crossing: core entry point to outermost exit."""

    region: int
    lift: tuple
    index: int
    annulus: int
    reverse: bool
    pieces: tuple

    def describe(self, genus):
        return (f"xi region={self.region} lift={_lift_str(self.lift, genus)} "
                f"crossing={self.index} annulus={self.annulus}"
                + (" reversed" if self.reverse else ""))


@dataclasses.dataclass(frozen=True)
class FollowGamma:
    """Run along the displacement core of an annulus between parameters."""

    region: int
    lift: tuple
    annulus: int
    start_param: float
    end_param: float
    pieces: tuple

    def describe(self, genus):
        return (f"gamma region={self.region} lift={_lift_str(self.lift, genus)} "
                f"annulus={self.annulus} from={self.start_param:.9f} "
                f"to={self.end_param:.9f}")


@dataclasses.dataclass(frozen=True)
class OffAxisHop:
    """Connector from a core point onto the exit chord of the next crossing."""

    region: int
    lift: tuple
    index: int
    annulus: int
    pieces: tuple

    def describe(self, genus):
        return (f"hop region={self.region} lift={_lift_str(self.lift, genus)} "
                f"target={self.index} annulus={self.annulus}")


def _lift_str(lift, genus):
    return word_str(lift, genus) if lift else "1"


@dataclasses.dataclass(frozen=True)
class RoutedPath:
    """A concrete path in the chart, as a chain of carriers."""

    pieces: tuple

    @property
    def start(self):
        return self.pieces[0].point(0.0)

    @property
    def end(self):
        return self.pieces[-1].point(1.0)


@dataclasses.dataclass(frozen=True)
class ReroutePlan:
    """Result of crossing resolution: steps, realized path, new structure."""

    structure_before: GraftedStructure
    arc_before: DevelopedArc
    steps: tuple
    path: RoutedPath
    structure_after: GraftedStructure
    epsilon: float

    def report_lines(self):
        g = self.structure_before.genus
        lines = [f"epsilon {self.epsilon:.9f}", f"steps {len(self.steps)}"]
        lines.extend(s.describe(g) for s in self.steps)
        return lines


# ---------------------------------------------------------------------------
# The resolver


def _level_geom(first_side, eps, level):
    """Distance and side of a displacement level; level 0 is the line."""
    if level < 0.0:
        return -level * eps, first_side
    if level > 0.0:
        return level * eps, -first_side
    return 0.0, 1


def _core_level(weight, annulus):
    return -weight + 2 * annulus - 1


class _Walker:
    """Single pass along the arc, resolving every collar it enters."""

    def __init__(self, table, cfg):
        self.table = table
        self.geo = table.geometry
        self.cfg = cfg
        self.eps = table.epsilon
        self.steps = []
        self.used = set()          # (key, crossing, annulus, chord kind)
        self.runs = {}             # (key, annulus) -> [(lo, hi) residues]
        self.spans = []            # [(place key, place key)] of arc stretches
        self.chart = MobiusMap.identity()
        self.point = None          # running geometric endpoint
        self._decks = {}
        self.events = self._collect_events()
        n_rec = sum(len(lt.records) for lt in table.lines.values())
        self.budget = 4 * n_rec + 8

    # -- static data ------------------------------------------------------

    def _collect_events(self):
        events = []
        for key, lt in self.table.lines.items():
            for r in lt.records:
                if abs(r.entry_outer.level) == lt.weight:
                    events.append((r.entry_outer.place.key(), key, r, 1))
                if abs(r.exit_outer.level) == lt.weight:
                    events.append((r.exit_outer.place.key(), key, r, -1))
        events.sort(key=lambda e: e[0])
        return events

    def _deck(self, key, n):
        lt = self.table.lines[key]
        base = self._decks.get(key)
        if base is None:
            line = lt.line
            base = line.frame_inv @ scaling_map(math.exp(lt.period)) @ line.frame
            self._decks[key] = base
        line = lt.line
        return line.frame_inv @ scaling_map(math.exp(n * lt.period)) @ line.frame

    def _res(self, lt, p):
        return (lt.orientation * p) % lt.period

    def _marked(self, lt, annulus):
        out = []
        for r in lt.records:
            if r.annulus != annulus:
                continue
            out.append((self._res(lt, r.entry.param), r, "entry"))
            out.append((self._res(lt, r.exit.param), r, "exit"))
        return out

    # -- bookkeeping ------------------------------------------------------

    def _consume(self, key, rec, kind):
        tag = (key, rec.index, rec.annulus, kind)
        if tag in self.used:
            raise EmbeddingCheckFailed(
                f"chord {kind} of crossing {rec.index} annulus {rec.annulus} "
                f"on line {key} consumed twice"
            )
        self.used.add(tag)

    def _note_run(self, key, annulus, lo, gap, period):
        """Record quotient-circle coverage of a core run; overlaps are fatal."""
        tol = 10.0 * self.cfg.tau_alg
        new = [(lo % period, min(gap, period))]
        a, g = new[0]
        if a + g > period:
            new = [(a, period - a), (0.0, g - (period - a))]
        existing = self.runs.setdefault((key, annulus), [])
        for (xa, xg) in existing:
            for (na, ng) in new:
                if na < xa + xg - tol and xa < na + ng - tol:
                    raise EmbeddingCheckFailed(
                        f"core runs overlap on line {key} annulus {annulus}"
                    )
        existing.extend(new)

    def _note_span(self, a_key, b_key):
        lo, hi = (a_key, b_key) if a_key <= b_key else (b_key, a_key)
        for (xa, xb) in self.spans:
            if lo < xb and xa < hi:
                raise EmbeddingCheckFailed("arc stretch reused by the walk")
        self.spans.append((lo, hi))

    def _extend(self, step):
        if step.pieces:
            first = step.pieces[0].point(0.0)
            if self.point is not None:
                tol = 1e-6 * (1.0 + abs(self.point))
                if abs(first - self.point) > tol:
                    raise EmbeddingCheckFailed(
                        f"discontinuous plan near {self.point:g}"
                    )
            self.point = step.pieces[-1].point(1.0)
        self.steps.append(step)

    # -- arc stretches ----------------------------------------------------

    def _stretch_pieces(self, a, b):
        """Carriers of the arc between places a <= b; no region parts allowed."""
        carriers = self.geo.carriers
        out = []
        if a.piece == b.piece:
            if a.part != "seg" or b.part != "seg":
                raise EmbeddingCheckFailed("arc stretch enters a region piece")
            if b.t - a.t > 1e-12:
                out.append(carriers[a.piece].sub(a.t, b.t))
            return out
        for idx in range(a.piece, b.piece + 1):
            piece = self.geo.arc.pieces[idx]
            if isinstance(piece, Detour):
                raise EmbeddingCheckFailed("arc stretch enters a region piece")
            if idx == a.piece:
                if a.t < 1.0 - 1e-12:
                    out.append(carriers[idx].sub(a.t, 1.0))
            elif idx == b.piece:
                if b.t > 1e-12:
                    out.append(carriers[idx].sub(0.0, b.t))
            else:
                out.append(carriers[idx])
        return out

    def _follow_arc(self, a, b, direction):
        lo, hi = (a, b) if direction > 0 else (b, a)
        pieces = self._stretch_pieces(lo, hi)
        if direction < 0:
            pieces = [p.reversed() for p in reversed(pieces)]
        if not self.chart.is_identity():
            pieces = [mobius_push_piece(self.chart, p) for p in pieces]
        self._note_span(lo.key(), hi.key())
        self._extend(FollowBeta(a, b, direction < 0, tuple(pieces)))

    # -- chord realization ------------------------------------------------

    def _chord_pieces(self, z, w):
        piece = geodesic_piece(z, w)
        if not self.chart.is_identity():
            piece = mobius_push_piece(self.chart, piece)
        return (piece,)

    def _ramp_in(self, key, rec, omega):
        lt = self.table.lines[key]
        if omega > 0:
            self._consume(key, rec, "zeta")
            pieces = self._chord_pieces(rec.entry_outer.point, rec.exit.point)
            self._extend(FollowZeta(lt.region, lt.lift, rec.index, rec.annulus,
                                    False, pieces))
            return rec.exit
        self._consume(key, rec, "xi")
        pieces = self._chord_pieces(rec.exit_outer.point, rec.entry.point)
        self._extend(FollowXi(lt.region, lt.lift, rec.index, rec.annulus,
                              True, pieces))
        return rec.entry

    def _ramp_out(self, key, rec_t, sign_t, from_t=0.0):
        """Exit chord of the target, possibly starting part way along it."""
        lt = self.table.lines[key]
        if sign_t > 0:
            self._consume(key, rec_t, "xi")
            chord = geodesic_piece(rec_t.entry.point, rec_t.exit_outer.point)
            out_anchor = rec_t.exit_outer
            make = lambda pieces: FollowXi(lt.region, lt.lift, rec_t.index,
                                           rec_t.annulus, False, pieces)
        else:
            self._consume(key, rec_t, "zeta")
            chord = geodesic_piece(rec_t.exit.point, rec_t.entry_outer.point)
            out_anchor = rec_t.entry_outer
            make = lambda pieces: FollowZeta(lt.region, lt.lift, rec_t.index,
                                             rec_t.annulus, True, pieces)
        if from_t < 1.0 - 1e-9:
            part = chord.sub(from_t, 1.0)
            if not self.chart.is_identity():
                part = mobius_push_piece(self.chart, part)
            self._extend(make((part,)))
        else:
            self._extend(make(()))
        return out_anchor

    # -- resolution of one collar entry -----------------------------------

    def _resolve(self, key, rec, omega):
        """Chain through strips until the walk leaves at an outermost level."""
        lt = self.table.lines[key]
        for _ in range(4 * len(lt.records) + 4):
            q = self._ramp_in(key, rec, omega)
            rec_t, sign_t, kind = self._select_target(lt, rec, q, omega)
            if kind == "run":
                from_t = 0.0
                self._run_to_target(key, lt, rec, rec_t, q, omega, sign_t)
            else:
                from_t = self._hop_to_target(key, lt, rec, rec_t, q, omega,
                                             sign_t)
            out_anchor = self._ramp_out(key, rec_t, sign_t, from_t)
            omega = sign_t
            if abs(out_anchor.level) == lt.weight:
                return out_anchor, omega
            rec = self._chain(lt, rec_t, out_anchor, omega)
        raise EmbeddingCheckFailed("strip chaining did not terminate")

    def _select_target(self, lt, rec, q, omega):
        eps_cur = lt.coherence[rec.index - 1]
        pos = lt.order.index(rec.index) + 1
        n = lt.count
        pos_t = (pos - 1 + omega * eps_cur) % n + 1
        idx_t = lt.order[pos_t - 1]
        rec_t = lt.record(idx_t, rec.annulus)
        eps_t = lt.coherence[idx_t - 1]
        sign_t = omega * eps_cur * eps_t
        if rec_t is rec:
            # single crossing: the exit chord of the same record, a short hop
            return rec_t, sign_t, "hop"
        d_res = omega * eps_cur
        q_res = self._res(lt, q.param)
        best = None
        for (res, r, role) in self._marked(lt, rec.annulus):
            if r is rec and role == ("exit" if omega > 0 else "entry"):
                continue
            gap = ((res - q_res) * d_res) % lt.period
            if gap <= 10.0 * self.cfg.tau_alg:
                continue
            if best is None or gap < best[0]:
                best = (gap, r, role)
        if best is None:
            raise EmbeddingCheckFailed("no marked point ahead on the core")
        gap, r_next, role_next = best
        want = "entry" if sign_t > 0 else "exit"
        if r_next is rec_t and role_next == want:
            return rec_t, sign_t, "run"
        other = "exit" if sign_t > 0 else "entry"
        if r_next is rec_t and role_next == other:
            return rec_t, sign_t, "hop"
        raise EmbeddingCheckFailed(
            f"crossing {r_next.index} interposes between {rec.index} and "
            f"{rec_t.index} on annulus {rec.annulus}"
        )

    def _run_to_target(self, key, lt, rec, rec_t, q, omega, sign_t):
        eps_cur = lt.coherence[rec.index - 1]
        d_res = omega * eps_cur
        t_anchor = rec_t.entry if sign_t > 0 else rec_t.exit
        q_res = self._res(lt, q.param)
        t_res = self._res(lt, t_anchor.param)
        gap = ((t_res - q_res) * d_res) % lt.period
        dirp = d_res * lt.orientation
        p_land = q.param + dirp * gap
        wraps = (p_land - t_anchor.param) / lt.period
        n = round(wraps)
        if abs(wraps - n) > 1e-6:
            raise EmbeddingCheckFailed("core run lands off the translate grid")
        lvl = _core_level(lt.weight, rec.annulus)
        d, side = _level_geom(lt.first_side, self.eps, lvl)
        piece = hypercycle_piece(lt.line, q.param, p_land, d, side)
        if not self.chart.is_identity():
            piece = mobius_push_piece(self.chart, piece)
        lo = q_res if d_res > 0 else (q_res - gap) % lt.period
        self._note_run(key, rec.annulus, lo, gap, lt.period)
        self._extend(FollowGamma(lt.region, lt.lift, rec.annulus,
                                 q.param, p_land, (piece,)))
        if n != 0:
            self.chart = self.chart @ self._deck(key, n)

    def _hop_to_target(self, key, lt, rec, rec_t, q, omega, sign_t):
        """Leave the core just enough to land on the target exit chord.

        The chord is taken in the current chart at its recorded position; a
        parameter on it is chosen so the connecting geodesic's midpoint sits
        a quarter collar off the core.  When the connector is too long for
        that height to be reachable the hop is split: pull off the core,
        run parallel to it at the quarter level, then join the chord where
        it meets that level.
        """
        if sign_t > 0:
            chord = geodesic_piece(rec_t.entry.point, rec_t.exit_outer.point)
            lvl_out = rec_t.exit_outer.level
        else:
            chord = geodesic_piece(rec_t.exit.point, rec_t.entry_outer.point)
            lvl_out = rec_t.entry_outer.level
        lvl_core = _core_level(lt.weight, rec.annulus)
        band = 1.0 if lvl_out > lvl_core else -1.0
        line, eps = lt.line, self.eps

        def level_of(z):
            side = line.side_of(z, tol=0.0)
            return -lt.first_side * side * line.dist_to(z) / eps

        def offset_mid(t):
            mid = geodesic_piece(q.point, chord.point(t)).point(0.5)
            return (level_of(mid) - lvl_core) * band

        target = 0.25
        f1 = offset_mid(1.0)
        if f1 <= 0.0:
            pieces, from_t = self._dragged_hop(lt, q, chord, lvl_core, band)
        else:
            if f1 <= target:
                t_x = 1.0
            else:
                lo_t, hi_t = 1e-9, 1.0
                for _ in range(60):
                    mid_t = 0.5 * (lo_t + hi_t)
                    if offset_mid(mid_t) < target:
                        lo_t = mid_t
                    else:
                        hi_t = mid_t
                t_x = 0.5 * (lo_t + hi_t)
            off = offset_mid(t_x)
            if not 0.0 < off < 0.5 + 1e-6:
                raise EmbeddingCheckFailed(
                    f"hop midpoint offset {off:.3g} outside the collar band"
                )
            pieces = [geodesic_piece(q.point, chord.point(t_x))]
            from_t = t_x
        if not self.chart.is_identity():
            pieces = [mobius_push_piece(self.chart, p) for p in pieces]
        self._extend(OffAxisHop(lt.region, lt.lift, rec_t.index, rec_t.annulus,
                                tuple(pieces)))
        return from_t

    def _dragged_hop(self, lt, q, chord, lvl_core, band):
        """Long connector: off the core, along it at quarter level, onto the chord."""
        line, eps = lt.line, self.eps
        lvl_off = lvl_core + 0.25 * band
        d_off, side_off = _level_geom(lt.first_side, eps, lvl_off)

        def off_level(t):
            side = line.side_of(chord.point(t), tol=0.0)
            lvl = -lt.first_side * side * line.dist_to(chord.point(t)) / eps
            return (lvl - lvl_off) * band

        lo_t, hi_t = 0.0, 1.0      # chord runs core -> outermost level
        for _ in range(60):
            mid_t = 0.5 * (lo_t + hi_t)
            if off_level(mid_t) < 0.0:
                lo_t = mid_t
            else:
                hi_t = mid_t
        t_x = 0.5 * (lo_t + hi_t)
        x_p = chord.point(t_x)
        p_q = q.param
        p_x = line.foot_param(x_p)
        dirp = 1.0 if p_x > p_q else -1.0
        p_a = p_q + dirp * min(eps, 0.25 * abs(p_x - p_q))
        a = line.point_at(p_a, d_off, side_off)
        if (p_x - p_a) * dirp <= 0.0:
            return [geodesic_piece(q.point, x_p)], t_x
        pieces = [
            geodesic_piece(q.point, a),
            hypercycle_piece(line, p_a, p_x, d_off, side_off),
        ]
        end = pieces[-1].point(1.0)
        if abs(end - x_p) > 1e-6 * (1.0 + abs(x_p)):
            pieces.append(geodesic_piece(end, x_p))
        return pieces, t_x

    def _chain(self, lt, rec_t, anchor, omega):
        """Find the record of the adjacent strip sharing the exit anchor."""
        for r in lt.records:
            if r is rec_t or r.index != rec_t.index:
                continue
            if abs(r.annulus - rec_t.annulus) != 1:
                continue
            probe = r.entry_outer if omega > 0 else r.exit_outer
            if probe.place == anchor.place:
                return r
        raise EmbeddingCheckFailed(
            f"no adjacent strip shares the level {anchor.level} anchor "
            f"of crossing {rec_t.index}"
        )

    # -- the main loop ----------------------------------------------------

    def run(self):
        pieces = self.geo.arc.pieces
        start = ArcPlace(0, "seg", 0.0)
        finish = ArcPlace(len(pieces) - 1, "seg", 1.0)
        pos = start
        direction = 1
        steps_taken = 0
        while True:
            steps_taken += 1
            if steps_taken > self.budget:
                raise EmbeddingCheckFailed("resolution walk exceeded its budget")
            ev = self._next_event(pos, direction)
            if ev is None:
                if direction < 0:
                    raise EmbeddingCheckFailed(
                        "walk ran backwards off the start of the arc"
                    )
                self._follow_arc(pos, finish, 1)
                break
            _, key, rec, role = ev
            anchor = rec.entry_outer if role > 0 else rec.exit_outer
            if role != direction:
                raise EmbeddingCheckFailed(
                    "walk direction disagrees with the marked point role"
                )
            self._follow_arc(pos, anchor.place, direction)
            out_anchor, omega = self._resolve(key, rec, direction)
            pos = out_anchor.place
            direction = omega
        if not self.chart.is_identity(1e-7):
            raise EmbeddingCheckFailed(
                "walk terminates in a translated chart; the arc wraps a region"
            )
        return self.steps

    def _next_event(self, pos, direction):
        k = pos.key()
        if direction > 0:
            for ev in self.events:
                if ev[0] > k:
                    return ev
            return None
        for ev in reversed(self.events):
            if ev[0] < k:
                return ev
        return None


def _surviving(s, table):
    crossed = {lt.region for lt in table.lines.values() if lt.records}
    comps = tuple(c for i, c in enumerate(s.multicurve.components)
                  if i not in crossed)
    return GraftedStructure(s.rep, WeightedMulticurve(comps))


def _check_line_clearance(s_after, path, cfg):
    """No piece of the path may touch a lift line of a surviving region."""
    from .arcs import collect_lines, _arc_center_reach

    pts = [p.point(0.0) for p in path.pieces] + [path.end]
    center, reach = _arc_center_reach(pts)
    for ll in collect_lines(s_after, center, reach, cfg):
        lo = min(ll.line.foot_param(z) for z in pts) - 2.0
        hi = max(ll.line.foot_param(z) for z in pts) + 2.0
        carrier = hypercycle_piece(ll.line, lo, hi, 0.0, 1)
        for i, piece in enumerate(path.pieces):
            if intersections(piece, carrier, tol=cfg.tau_alg,
                             raise_tangency=False):
                raise EmbeddingCheckFailed(
                    f"rerouted path crosses surviving region {ll.region} "
                    f"at piece {i}"
                )


def reroute(s, arc, cfg=DEFAULT, table=None):
    """Resolve every crossing of the arc and return the plan.

    The returned plan carries the rerouted path, which keeps the endpoints
    of the arc, stays in the upper half plane, and misses every region of
    the surviving multicurve; regions the arc crossed are engulfed and
    dropped.  With cfg.verify the independent checkers certify all of this
    before the plan is returned.
    """
    if table is None:
        table = extract_crossings(s, arc, cfg)
    geo = table.geometry
    if not table.lines:
        carriers = tuple(geo.carriers)
        start = ArcPlace(0, "seg", 0.0)
        finish = ArcPlace(len(arc.pieces) - 1, "seg", 1.0)
        steps = (FollowBeta(start, finish, False, carriers),)
        plan = ReroutePlan(s, arc, steps, RoutedPath(carriers), s,
                           table.epsilon)
        return plan
    walker = _Walker(table, cfg)
    steps = tuple(walker.run())
    pieces = tuple(p for st in steps for p in st.pieces)
    path = RoutedPath(pieces)
    after = _surviving(s, table)

    a0 = geo.carriers[0].point(0.0)
    a1 = geo.carriers[-1].point(1.0)
    if abs(path.start - a0) > 1e-7 * (1.0 + abs(a0)) \
            or abs(path.end - a1) > 1e-7 * (1.0 + abs(a1)):
        raise EmbeddingCheckFailed("rerouted path moved an endpoint")
    if cfg.verify:
        verdict = embedded_check(path, cfg)
        if not verdict.ok:
            raise EmbeddingCheckFailed(
                f"rerouted path self contact: {verdict.detail}"
            )
        low = halfplane_check(path)
        if low <= 0.0:
            raise EmbeddingCheckFailed(
                f"rerouted path reaches height {low:.3g}"
            )
        _check_line_clearance(after, path, cfg)
    return ReroutePlan(s, arc, steps, path, after, table.epsilon)


def degraft_full(s, arc, cfg=DEFAULT):
    """Remove the whole multicurve along an arc crossing each region once.

    Returns the underlying structure together with the rerouted path.  The
    arc must cross every region exactly once in total over all lifts;
    otherwise NotFullCover reports the counts.
    """
    table = extract_crossings(s, arc, cfg)
    counts = {}
    for lt in table.lines.values():
        counts[lt.region] = counts.get(lt.region, 0) + lt.count
    wanted = range(len(s.multicurve.components))
    bad = {i: counts.get(i, 0) for i in wanted if counts.get(i, 0) != 1}
    if bad:
        raise NotFullCover(
            "need exactly one crossing per region, got "
            + ", ".join(f"region {i}: {c}" for i, c in sorted(bad.items()))
        )
    plan = reroute(s, arc, cfg, table=table)
    if plan.structure_after.multicurve.components:
        raise EmbeddingCheckFailed("full degrafting left regions behind")
    return plan.structure_after, plan


# ---------------------------------------------------------------------------
# Bubbling and debubbling


@dataclasses.dataclass(frozen=True)
class BubbleRecord:
    """A structure together with the embedded arc a bubble was glued along."""

    base: GraftedStructure
    arc: object               # DevelopedArc or RoutedPath


@dataclasses.dataclass(frozen=True)
class BranchedStructure:
    """Projective structure with two simple branch points, as a bubble record.

    The holonomy is untouched by the move, so it is the base holonomy; the
    branch points are the endpoints of the glued arc.
    """

    record: BubbleRecord

    @property
    def base(self):
        return self.record.base

    @property
    def arc(self):
        return self.record.arc

    @property
    def holonomy(self):
        return self.record.base.rep

    @property
    def genus(self):
        return self.record.base.genus

    def branch_points(self):
        return _arc_ends(self.record.arc)


def _arc_ends(arc):
    if isinstance(arc, RoutedPath):
        return arc.start, arc.end
    pieces = arc.pieces
    return pieces[0].z1, pieces[-1].z2


def _end_directions(arc):
    """Unit tangent directions out of the two endpoints."""
    if isinstance(arc, RoutedPath):
        first, last = arc.pieces[0], arc.pieces[-1]
    else:
        first = geodesic_piece(arc.pieces[0].z1, arc.pieces[0].z2)
        last = geodesic_piece(arc.pieces[-1].z1, arc.pieces[-1].z2)
    h = 1e-6
    d0 = first.point(h) - first.point(0.0)
    d1 = last.point(1.0 - h) - last.point(1.0)
    return d0 / abs(d0), d1 / abs(d1)


def bubble(s, arc, cfg=DEFAULT):
    """Glue a bubble along an embedded arc, producing a branched structure."""
    if isinstance(arc, DevelopedArc):
        validate_bubbleable(s, arc, cfg)
    elif isinstance(arc, RoutedPath):
        verdict = embedded_check(arc, cfg)
        if not verdict.ok:
            raise NotABubble(f"path is not embedded: {verdict.detail}")
        if halfplane_check(arc) <= 0.0:
            raise NotABubble("path leaves the hyperbolic plane")
        _check_line_clearance(s, arc, cfg)
    else:
        raise BadIndex(f"cannot bubble along a {type(arc).__name__}")
    return BranchedStructure(BubbleRecord(s, arc))


def debubble(b, plan=None, cfg=DEFAULT):
    """Undo a bubble, either naturally or along a resolution plan.

    With no plan the very arc that was glued is handed back with the base.
    A ReroutePlan for the same pair swaps the bubble for the rerouted path
    first, so the returned structure has the crossed regions removed.
    """
    if not isinstance(b, BranchedStructure):
        raise NotABubble(f"{type(b).__name__} is not a bubbled structure")
    if plan is None:
        return b.base, b.arc
    if not isinstance(plan, ReroutePlan):
        raise BadIndex("plan must be a ReroutePlan or None")
    if plan.arc_before is not b.arc and plan.arc_before != b.arc:
        raise NotABubble("plan was computed for a different bubble")
    return plan.structure_after, plan.path


def branched_equal(b1, b2, cfg=DEFAULT):
    """Whether two bubble records present the same branched structure.

    Compares the holonomy, the unordered branch points, and the tangent
    directions of the glued arcs at matching endpoints, each up to the
    algebraic tolerance.  This identifies a bubble with its reversal but
    separates bubbles glued along genuinely different germs.
    """
    if b1.genus != b2.genus:
        return False
    for m1, m2 in zip(b1.holonomy.gens, b2.holonomy.gens):
        if max(abs(m1.a - m2.a), abs(m1.b - m2.b),
               abs(m1.c - m2.c), abs(m1.d - m2.d)) > cfg.tau_alg:
            return False
    p1, q1 = b1.branch_points()
    p2, q2 = b2.branch_points()
    d1, e1 = _end_directions(b1.arc)
    d2, e2 = _end_directions(b2.arc)
    tol = 1e2 * cfg.tau_alg

    def close(a, b):
        return abs(a - b) <= tol * (1.0 + abs(a))

    same = close(p1, p2) and close(q1, q2) \
        and abs(d1 - d2) <= 1e-3 and abs(e1 - e2) <= 1e-3
    flipped = close(p1, q2) and close(q1, p2) \
        and abs(d1 - e2) <= 1e-3 and abs(e1 - d2) <= 1e-3
    return same or flipped


# ---------------------------------------------------------------------------
# Arc synthesis


def synthesize_cover_arc(s, cfg=DEFAULT, seed=0):
    """Build an arc crossing every region of the structure exactly once.

    Waypoints are laid out around each component axis near the feet of the
    shortest connectors between consecutive axes, alternating sides so each
    line is crossed transversally once; the polyline is then jittered
    deterministically until the synthesized arc validates with the right
    crossing counts.
    """
    comps = s.multicurve.components
    if not comps:
        raise BadIndex("nothing to cover: the multicurve is empty")
    axes = s.component_axes()
    for attempt in range(64):
        rng = random.Random((seed << 16) ^ (attempt * 2654435761 % 2**31))
        try:
            arc = _cover_attempt(s, axes, rng, cfg)
        except Exception:
            continue
        counts = {}
        try:
            geo = validate_bubbleable(s, arc, cfg)
        except Exception:
            continue
        for tr in geo.traversals:
            counts[tr.region] = counts.get(tr.region, 0) + 1
        if counts == {i: 1 for i in range(len(comps))}:
            return arc
    raise ArcSynthesisFailed(
        f"no covering arc found for {len(comps)} regions in 64 attempts"
    )


def _mutual_foot(l1, l2):
    """Parameter on l1 closest to l2, from the frame image of l2's feet."""
    xs = []
    for end in (l2.p, l2.q):
        x = l1.frame.apply(end)
        if not isinstance(x, (int, float)) or abs(x) < 1e-12:
            return 0.0
        xs.append(float(x))
    if xs[0] * xs[1] < 0.0:
        return 0.0        # the lines cross; any reference param will do
    return 0.5 * (math.log(abs(xs[0])) + math.log(abs(xs[1])))


def _cover_attempt(s, axes, rng, cfg):
    n = len(axes)
    feet = []
    for i, ax in enumerate(axes):
        towards = []
        if i > 0:
            towards.append(_mutual_foot(ax, axes[i - 1]))
        if i < n - 1:
            towards.append(_mutual_foot(ax, axes[i + 1]))
        base = sum(towards) / len(towards) if towards else 0.0
        feet.append(base + rng.uniform(-0.5, 0.5))
    d_off = 0.35 + rng.uniform(0.0, 0.25)
    side = rng.choice((1, -1))
    pts = [axes[0].point_at(feet[0] + rng.uniform(-0.2, 0.2), d_off, side)]
    prev = pts[0]
    for i, ax in enumerate(axes):
        s_of = ax.side_of(prev)
        if s_of == 0:
            s_of = 1
        nxt = ax.point_at(feet[i], d_off, -s_of)
        pts.append(nxt)
        prev = nxt
    hi_frac = min(0.35, 0.8 / max(s.multicurve.max_weight(), 1))
    lo_frac = 0.5 * hi_frac
    offsets = {k + 1: rng.choice((1, -1)) * rng.uniform(lo_frac, hi_frac)
               for k in range(8)}
    return build_arc_from_polyline(s, pts, cfg, offsets=offsets)


# ---------------------------------------------------------------------------
# Join plans


@dataclasses.dataclass(frozen=True)
class Bubbling:
    """Forward move: glue a bubble along an arc over a structure."""

    structure: GraftedStructure
    arc: object

    def describe(self):
        return f"bubbling over {self.structure.describe()}"


@dataclasses.dataclass(frozen=True)
class Debubbling:
    """Backward move: remove a bubble, landing on a structure and an arc."""

    branched: BranchedStructure
    result_structure: GraftedStructure
    result_arc: object

    def describe(self):
        return f"debubbling to {self.result_structure.describe()}"


@dataclasses.dataclass(frozen=True)
class MoveSequence:
    """A chain of bubble moves between two structures with one holonomy."""

    moves: tuple
    start: object
    end: object

    def counts(self):
        b = sum(1 for m in self.moves if isinstance(m, Bubbling))
        d = sum(1 for m in self.moves if isinstance(m, Debubbling))
        return b, d

    def execute(self, cfg=DEFAULT):
        """Apply every move in order, re-validating each application."""
        state = self.start
        for mv in self.moves:
            if isinstance(mv, Bubbling):
                if not structure_equal(state, mv.structure, cfg):
                    raise NotABubble("bubbling applied to the wrong structure")
                state = bubble(mv.structure, mv.arc, cfg)
            else:
                if not isinstance(state, BranchedStructure) \
                        or not branched_equal(state, mv.branched, cfg):
                    raise NotABubble("debubbling applied to the wrong bubble")
                state = mv.result_structure
                bubble(mv.result_structure, mv.result_arc, cfg)
        final = state
        if isinstance(final, BranchedStructure) \
                != isinstance(self.end, BranchedStructure):
            raise NotABubble("move sequence lands in the wrong category")
        if isinstance(final, BranchedStructure):
            if not branched_equal(final, self.end, cfg):
                raise NotABubble("move sequence misses the target bubble")
        elif not structure_equal(final, self.end, cfg):
            raise NotABubble("move sequence misses the target structure")
        return final


def _same_holonomy(a, b, cfg):
    if a.genus != b.genus:
        return False
    for m1, m2 in zip(a.rep.gens, b.rep.gens):
        if max(abs(m1.a - m2.a), abs(m1.b - m2.b),
               abs(m1.c - m2.c), abs(m1.d - m2.d)) > cfg.tau_alg:
            return False
    return True


def plan_join(a, b, cfg=DEFAULT):
    """Connect two structures with one holonomy by bubble moves.

    Each nonempty side contributes one bubbling along a covering arc and
    one debubbling along its resolution, so the plan has at most two of
    each; equal structures need no moves at all.
    """
    if not _same_holonomy(a, b, cfg):
        raise BadIndex("structures have different holonomy; no join exists")
    if structure_equal(a, b, cfg):
        return MoveSequence((), a, b)
    moves = []
    cur = a
    if a.multicurve.components:
        arc_a = synthesize_cover_arc(a, cfg, seed=101)
        plan_a = reroute(a, arc_a, cfg)
        br = bubble(a, arc_a, cfg)
        moves.append(Bubbling(a, arc_a))
        moves.append(Debubbling(br, plan_a.structure_after, plan_a.path))
        cur = plan_a.structure_after
    if b.multicurve.components:
        arc_b = synthesize_cover_arc(b, cfg, seed=202)
        plan_b = reroute(b, arc_b, cfg)
        if not structure_equal(cur, plan_b.structure_after, cfg):
            raise EmbeddingCheckFailed(
                "join halves do not meet on the underlying structure"
            )
        br = bubble(cur, plan_b.path, cfg)
        moves.append(Bubbling(cur, plan_b.path))
        moves.append(Debubbling(br, b, arc_b))
    return MoveSequence(tuple(moves), a, b)


def plan_join_branched(x, y, cfg=DEFAULT):
    """Connect two branched structures sharing a holonomy by bubble moves.

    Undo the first bubble, join the bases, redo the second bubble: at most
    three moves of each kind, and none at all when the presentations agree.
    """
    if not isinstance(x, BranchedStructure) or not isinstance(y, BranchedStructure):
        raise BadIndex("plan_join_branched needs two bubbled structures")
    if branched_equal(x, y, cfg):
        return MoveSequence((), x, y)
    inner = plan_join(x.base, y.base, cfg)
    moves = (Debubbling(x, x.base, x.arc),) + inner.moves \
        + (Bubbling(y.base, y.arc),)
    return MoveSequence(moves, x, y)
