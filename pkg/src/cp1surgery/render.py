"""Deterministic SVG pictures of developed scenes.

Every element is emitted at fixed six-decimal precision in a fixed order,
so rendering the same scene twice gives byte-identical documents.  Layers
(axes, collar curves, the arc, its detours, the rerouted path, labels) are
independent groups that can be switched off; the drawing plane is either
the upper half plane with the real axis as a baseline, or the unit disk
reached through the Cayley map.
"""

from __future__ import annotations

import math

from .arcs import Detour, resolve_arc, resolve_line
from .config import DEFAULT
from .errors import BadIndex
from .hyp import CircArc, LineSeg, hypercycle_piece, mobius_push_piece
from .structures import choose_epsilon

ALL_LAYERS = ("axes", "collars", "arc", "detours", "reroute", "labels")

__all__ = ["render_svg", "to_disk", "to_halfplane", "ALL_LAYERS"]


def to_disk(z):
    """Cayley transform onto the unit disk; i goes to the origin."""
    return (z - 1j) / (z + 1j)


def to_halfplane(w):
    if abs(w - 1.0) < 1e-15:
        raise BadIndex("boundary point 1 has no finite half plane image")
    return 1j * (1.0 + w) / (1.0 - w)


def _fmt(x):
    # normalize negative zero so formatting is reproducible
    v = 0.0 if x == 0.0 else x
    return f"{v:.6f}"


def _fit_carrier(p0, pm, p1):
    """Segment or arc through three ordered points, for mapped pieces."""
    d1, d2 = pm - p0, p1 - p0
    cross = (d1.conjugate() * d2).imag
    if abs(cross) <= 1e-12 * abs(d1) * abs(d2):
        return LineSeg(p0, p1)
    ax, ay, bx, by, cx, cy = p0.real, p0.imag, pm.real, pm.imag, p1.real, p1.imag
    den = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    na, nb, nc = abs(p0) ** 2, abs(pm) ** 2, abs(p1) ** 2
    c = complex(
        (na * (by - cy) + nb * (cy - ay) + nc * (ay - by)) / den,
        (na * (cx - bx) + nb * (ax - cx) + nc * (bx - ax)) / den,
    )
    r = abs(p0 - c)
    a0 = math.atan2((p0 - c).imag, (p0 - c).real)
    a1 = math.atan2((p1 - c).imag, (p1 - c).real)
    am = math.atan2((pm - c).imag, (pm - c).real)
    tau = 2.0 * math.pi
    sweep = (a1 - a0) % tau
    if (am - a0) % tau > sweep + 1e-12:
        sweep -= tau
    return CircArc(c, r, a0, sweep)


def _map_piece(piece, model):
    if model == "halfplane":
        return piece
    return _fit_carrier(to_disk(piece.point(0.0)), to_disk(piece.point(0.5)),
                        to_disk(piece.point(1.0)))


def _sample(piece):
    return [piece.point(t) for t in (0.0, 0.25, 0.5, 0.75, 1.0)]


class _Canvas:
    """Collects math-plane primitives, then projects them to the viewport."""

    def __init__(self, model):
        self.model = model
        self.items = []        # (layer, kind, payload)
        self.points = []

    def piece(self, layer, piece, style):
        mapped = _map_piece(piece, self.model)
        self.points.extend(_sample(mapped))
        self.items.append((layer, "piece", (mapped, style)))

    def text(self, layer, z, label):
        w = to_disk(z) if self.model == "disk" else z
        self.points.extend([w])
        self.items.append((layer, "text", (w, label)))

    def _viewport(self, width):
        if self.model == "disk":
            lo, hi = complex(-1.1, -1.1), complex(1.1, 1.1)
        else:
            xs = [p.real for p in self.points] or [0.0, 1.0]
            ys = [p.imag for p in self.points] or [0.0, 1.0]
            x0, x1 = min(xs), max(xs)
            y0, y1 = min(min(ys), 0.0), max(ys)
            padx = 0.08 * max(x1 - x0, 1e-6)
            pady = 0.08 * max(y1 - y0, 1e-6)
            lo = complex(x0 - padx, y0 - pady)
            hi = complex(x1 + padx, y1 + pady)
        k = width / (hi.real - lo.real)
        height = (hi.imag - lo.imag) * k
        return lo, hi, k, height

    def project(self, z, lo, hi, k):
        return (z.real - lo.real) * k, (hi.imag - z.imag) * k

    def emit(self, layers, width=900.0):
        lo, hi, k, height = self._viewport(width)
        groups = {name: [] for name in ALL_LAYERS}
        if self.model == "halfplane":
            ax0 = self.project(complex(lo.real, 0.0), lo, hi, k)
            ax1 = self.project(complex(hi.real, 0.0), lo, hi, k)
            groups["axes"].append(
                f'<line x1="{_fmt(ax0[0])}" y1="{_fmt(ax0[1])}" '
                f'x2="{_fmt(ax1[0])}" y2="{_fmt(ax1[1])}" '
                f'stroke="#222222" stroke-width="1.0"/>'
            )
        else:
            cx, cy = self.project(0.0j, lo, hi, k)
            groups["axes"].append(
                f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(k)}" '
                f'fill="none" stroke="#222222" stroke-width="1.0"/>'
            )
        for layer, kind, payload in self.items:
            if kind == "piece":
                piece, style = payload
                groups[layer].append(self._path(piece, style, lo, hi, k))
            else:
                z, label = payload
                x, y = self.project(z, lo, hi, k)
                groups[layer].append(
                    f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="11" '
                    f'font-family="monospace" fill="#444444">{label}</text>'
                )
        body = []
        for name in ALL_LAYERS:
            if name not in layers:
                continue
            body.append(f'<g id="layer-{name}">')
            body.extend(groups[name])
            body.append("</g>")
        head = (
            '<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{_fmt(width)}" height="{_fmt(height)}" '
            f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
        )
        return "\n".join([head] + body + ["</svg>"]) + "\n"

    def _path(self, piece, style, lo, hi, k):
        x0, y0 = self.project(piece.point(0.0), lo, hi, k)
        if isinstance(piece, LineSeg):
            x1, y1 = self.project(piece.point(1.0), lo, hi, k)
            d = f"M {_fmt(x0)} {_fmt(y0)} L {_fmt(x1)} {_fmt(y1)}"
        else:
            x1, y1 = self.project(piece.point(1.0), lo, hi, k)
            r = piece.r * k
            laf = 1 if abs(piece.sweep) > math.pi else 0
            # the vertical flip turns a positive mathematical sweep clockwise
            sf = 1 if piece.sweep > 0.0 else 0
            d = (f"M {_fmt(x0)} {_fmt(y0)} A {_fmt(r)} {_fmt(r)} 0 "
                 f"{laf} {sf} {_fmt(x1)} {_fmt(y1)}")
        return f'<path d="{d}" fill="none" {style}/>'


_STYLES = {
    "axes": 'stroke="#888888" stroke-width="1.0"',
    "seam": 'stroke="#bbbbbb" stroke-width="0.6"',
    "core": 'stroke="#bbbbbb" stroke-width="0.6" stroke-dasharray="4 3"',
    "arc": 'stroke="#1f6f3f" stroke-width="1.6"',
    "detours": 'stroke="#1f6f3f" stroke-width="1.1" stroke-dasharray="5 3"',
    "reroute": 'stroke="#cc0033" stroke-width="1.8"',
}


def _level_offset(eps, level):
    if level < 0.0:
        return -level * eps, -1
    if level > 0.0:
        return level * eps, 1
    return 0.0, 1


def render_svg(s, arc=None, plan=None, layers=ALL_LAYERS, model="halfplane",
               cfg=DEFAULT, epsilon=None):
    """Draw a structure, optionally with an arc and a rerouting plan.

    Returns the SVG document as text.  The picture is a pure function of
    the inputs: same scene, same bytes.
    """
    if model not in ("halfplane", "disk"):
        raise BadIndex(f"unknown model {model!r}")
    canvas = _Canvas(model)
    geo = resolve_arc(s, arc, cfg) if arc is not None else None
    if epsilon is not None:
        eps = epsilon
    elif geo is not None:
        eps = choose_epsilon(s, [(ll.weight, ll.line) for ll in geo.nearby], cfg)
    else:
        eps = cfg.epsilon_cap

    if geo is not None:
        lines = dict(geo.lines)
        for ll in geo.nearby:
            lines.setdefault((ll.region, ll.lift), ll)
    else:
        lines = {(i, ()): resolve_line(s, i, ())
                 for i in range(len(s.multicurve.components))}

    spans = {}
    if geo is not None:
        pts = []
        for p in arc.pieces:
            if not isinstance(p, Detour):
                pts.extend([p.z1, p.z2])
        for key, ll in sorted(lines.items()):
            feet = [ll.line.foot_param(z) for z in pts]
            spans[key] = (min(feet) - 2.0, max(feet) + 2.0)
    else:
        for key in sorted(lines):
            spans[key] = (-6.0, 6.0)

    for key in sorted(lines):
        ll = lines[key]
        lo_s, hi_s = spans[key]
        canvas.piece("axes", hypercycle_piece(ll.line, lo_s, hi_s, 0.0, 1),
                     _STYLES["axes"])
        m = ll.weight
        for level in range(-m, m + 1):
            if level == 0:
                continue
            d, side = _level_offset(eps, level)
            kind = "seam" if (level + m) % 2 == 0 else "core"
            canvas.piece("collars",
                         hypercycle_piece(ll.line, lo_s, hi_s, d, side),
                         _STYLES[kind])
        apex = ll.line.point_at(0.5 * (lo_s + hi_s), 0.0, 1)
        if key[1] == ():
            canvas.text("labels", apex, f"r{key[0]}")

    if geo is not None:
        for i, piece in enumerate(arc.pieces):
            if isinstance(piece, Detour):
                line = geo.lines[(piece.region, piece.lift)].line
                for part in geo.frames[i]:
                    canvas.piece("detours",
                                 mobius_push_piece(line.frame_inv, part),
                                 _STYLES["detours"])
            else:
                canvas.piece("arc", geo.carriers[i], _STYLES["arc"])
        for n, tr in enumerate(geo.traversals, start=1):
            line = geo.lines[(tr.region, tr.lift)].line
            canvas.text("labels", line.point_at(tr.seams[0], 0.0, 1), f"t{n}")

    if plan is not None:
        for piece in plan.path.pieces:
            canvas.piece("reroute", piece, _STYLES["reroute"])

    return canvas.emit(tuple(layers))
