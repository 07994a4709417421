"""Grafted structures in normal form: a representation plus a weighted multicurve.

A structure is stored as the pair (canonical Fuchsian representation,
weighted multicurve); no global developing map is ever materialized.  Each
component names a simple closed geodesic by a group word and carries an
integer weight, the number of annuli inserted along it.  Validation is
geometric: axes of ball conjugates must not cross, where crossing of two
complete geodesics is endpoint interleaving on the boundary circle.

Collar bookkeeping fixes the level conventions used by the rerouting
machine.  Around a weight-M component the levels run j = -M..M at distance
|j| * epsilon from the axis; even levels are the M+1 parallel copies of the
curve that a crossing arc meets, odd levels are annulus cores.  Annulus h
(h = 1..M) spans levels -M+2h-2 .. -M+2h with core -M+2h-1, and meets
annulus h+1 exactly in its top level.
"""

from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from .config import DEFAULT
from .errors import (
    BadIndex,
    CollarOverlap,
    NotDisjoint,
    NotHyperbolicHolonomy,
    NotSimple,
    NoValidEpsilon,
)
from .hyp import INF, Line, axis_of, line_line_dist
from .groups import (
    FuchsianRep,
    canonical_rep,
    evaluate,
    exponent_sums,
    free_reduce,
    is_proper_power,
    translated_axes,
    word_str,
)

# ---------------------------------------------------------------------------
# Boundary-circle combinatorics


def boundary_angle(x):
    """Angle of a boundary point on the circle at infinity, in (-pi, pi]."""
    if x is INF:
        return math.pi
    return 2.0 * math.atan(x)


def _ccw_between(a, b, c):
    """True when walking counterclockwise from a reaches b strictly before c."""
    return ((b - a) % (2.0 * math.pi)) < ((c - a) % (2.0 * math.pi))


def lines_cross(l1, l2, tol=1e-10):
    """Transversal crossing test for complete geodesics via endpoint interleaving.

    Raises NotDisjoint when the lines share an ideal endpoint within
    tolerance, since none of the configurations this package accepts may
    contain asymptotic axes.
    """
    angles = [boundary_angle(x) for x in (l1.p, l1.q, l2.p, l2.q)]
    for i, j in itertools.combinations(range(4), 2):
        gap = abs(angles[i] - angles[j]) % (2.0 * math.pi)
        if min(gap, 2.0 * math.pi - gap) < tol and (i < 2) != (j < 2):
            raise NotDisjoint("axes share an ideal endpoint")
    a1, a2, b1, b2 = angles
    return _ccw_between(a1, b1, a2) != _ccw_between(a1, b2, a2)


# ---------------------------------------------------------------------------
# Types


@dataclasses.dataclass(frozen=True)
class WeightedMulticurve:
    """Disjoint simple closed geodesics with insertion weights."""

    components: tuple

    @staticmethod
    def of(pairs):
        comps = []
        for word, weight in pairs:
            if not isinstance(weight, int) or weight < 1:
                raise BadIndex(f"weight {weight!r} must be a positive integer")
            word = free_reduce(tuple(word))
            if not word:
                raise BadIndex("identity word cannot name a curve")
            comps.append((word, weight))
        return WeightedMulticurve(tuple(comps))

    def total_weight(self):
        return sum(w for _, w in self.components)

    def max_weight(self):
        return max((w for _, w in self.components), default=0)


@dataclasses.dataclass(frozen=True)
class GraftedStructure:
    rep: FuchsianRep
    multicurve: WeightedMulticurve

    @property
    def genus(self):
        return self.rep.genus

    def component_axes(self):
        return [axis_of(evaluate(self.rep, w)) for w, _ in self.multicurve.components]

    def describe(self):
        parts = [
            f"{word_str(w, self.genus)}:{m}" for w, m in self.multicurve.components
        ]
        return f"genus {self.genus} [" + ", ".join(parts) + "]"


@dataclasses.dataclass(frozen=True)
class GraftingRegionInfo:
    index: int
    word: tuple
    weight: int
    axis: Line
    # annulus h spans levels (-M+2h-2, -M+2h); listed for h = 1..M
    annuli: tuple


@dataclasses.dataclass(frozen=True)
class CollarSystem:
    region: GraftingRegionInfo
    epsilon: float

    @property
    def levels(self):
        m = self.region.weight
        return range(-m, m + 1)

    def annulus_levels(self, h):
        m = self.region.weight
        if not 1 <= h <= m:
            raise BadIndex(f"annulus index {h} out of 1..{m}")
        return (-m + 2 * h - 2, -m + 2 * h)

    def core_level(self, h):
        m = self.region.weight
        if not 1 <= h <= m:
            raise BadIndex(f"annulus index {h} out of 1..{m}")
        return -m + 2 * h - 1


@dataclasses.dataclass(frozen=True)
class DecompositionSummary:
    positive_components: int
    negative_components: int
    real_curves: int
    regions: tuple


# ---------------------------------------------------------------------------
# Validation


def _component_lines(rep, word, cfg, reach):
    return translated_axes(
        rep, word, cfg.ball_disjoint, reach=reach, tol=cfg.tau_alg, cap=cfg.ball_cap
    )


def build_structure(rep, multicurve, cfg=DEFAULT):
    """Validate the pair and return it as a GraftedStructure.

    Simplicity of each component and pairwise disjointness are certified by
    interleaving tests between base axes and all ball-translate axes within
    reach of the base domain.
    """
    if not isinstance(multicurve, WeightedMulticurve):
        multicurve = WeightedMulticurve.of(multicurve)
    base_axes = []
    for word, _ in multicurve.components:
        m = evaluate(rep, word)
        if m.classify(cfg.tau_alg) != "hyperbolic":
            raise NotHyperbolicHolonomy(
                f"{word_str(word, rep.genus)} has trace {m.trace():.6f}"
            )
        if is_proper_power(word):
            raise NotSimple(f"{word_str(word, rep.genus)} is a proper power")
        base_axes.append(axis_of(m, cfg.tau_alg))
    reach = 2.0 * _domain_diameter(rep.genus) + 2.0
    translate_table = [
        _component_lines(rep, word, cfg, reach) for word, _ in multicurve.components
    ]
    for i, (word, _) in enumerate(multicurve.components):
        base_key = base_axes[i].key()
        for line, conj in translate_table[i]:
            if line.key() == base_key:
                continue
            if lines_cross(line, base_axes[i]):
                raise NotSimple(
                    f"{word_str(word, rep.genus)}: conjugate by "
                    f"{word_str(conj, rep.genus) if conj else '1'} crosses the axis"
                )
    for i, j in itertools.combinations(range(len(multicurve.components)), 2):
        for line, conj in translate_table[i]:
            if line.key() == base_axes[j].key():
                raise NotDisjoint(
                    f"components {i} and {j} share the geodesic "
                    f"{word_str(multicurve.components[j][0], rep.genus)}"
                )
            if lines_cross(line, base_axes[j]):
                raise NotDisjoint(f"components {i} and {j} have crossing lifts")
    return GraftedStructure(rep, multicurve)


def _domain_diameter(genus):
    from .groups import polygon_radius

    return polygon_radius(genus)


def fuchsian_structure(genus, cfg=DEFAULT):
    """The uniformized structure: canonical representation, empty multicurve."""
    return GraftedStructure(canonical_rep(genus), WeightedMulticurve(()))


# ---------------------------------------------------------------------------
# Decomposition bookkeeping


def _f2_kernel_dim(vectors):
    if not vectors:
        return 0
    mat = np.array(vectors, dtype=np.int64) % 2
    rows, cols = mat.shape
    rank = 0
    pivot_row = 0
    for col in range(cols):
        hit = None
        for r in range(pivot_row, rows):
            if mat[r, col]:
                hit = r
                break
        if hit is None:
            continue
        mat[[pivot_row, hit]] = mat[[hit, pivot_row]]
        for r in range(rows):
            if r != pivot_row and mat[r, col]:
                mat[r] ^= mat[pivot_row]
        rank += 1
        pivot_row += 1
    return rows - rank


def region_info(s, index, cfg=DEFAULT):
    word, weight = s.multicurve.components[index]
    axis = axis_of(evaluate(s.rep, word), cfg.tau_alg)
    annuli = tuple(
        (-weight + 2 * h - 2, -weight + 2 * h) for h in range(1, weight + 1)
    )
    return GraftingRegionInfo(index, word, weight, axis, annuli)


def decomposition_summary(s, cfg=DEFAULT):
    """Counts of positive, negative, and real pieces of the decomposition.

    Each weight-M component contributes M negative annuli, 2M real curves
    and M-1 positive annuli between them; the positive pieces not between
    annuli are the complement components of the multicurve, counted through
    the rank of its component classes in homology mod 2.
    """
    comps = s.multicurve.components
    classes = [exponent_sums(w, s.genus) for w, _ in comps]
    complement = 1 + _f2_kernel_dim(classes)
    total = s.multicurve.total_weight()
    positive = complement + sum(m - 1 for _, m in comps)
    regions = tuple(region_info(s, i, cfg) for i in range(len(comps)))
    return DecompositionSummary(positive, total, 2 * total, regions)


# ---------------------------------------------------------------------------
# Collars


def choose_epsilon(s, lines, cfg=DEFAULT):
    """Largest collar half-step certified against the given lift lines.

    lines holds every (weight, Line) pair relevant to a scene: all
    translate axes near the arcs plus the base axes.  The full collar of a
    weight-M line spans (M+1) levels of size epsilon on each side, so
    disjointness with margin needs
    (Mi+1)*eps + (Mj+1)*eps + tau_sep <= dist for every pair; a factor 4
    of slack and the configured cap give the returned value.
    """
    if not lines:
        return cfg.epsilon_cap
    m_max = max(m for m, _ in lines)
    delta = math.inf
    for (mi, li), (mj, lj) in itertools.combinations(lines, 2):
        if li.key() == lj.key():
            continue
        d = line_line_dist(li, lj, cfg.tau_alg)
        if d == 0.0:
            raise CollarOverlap("relevant lift lines cross")
        delta = min(delta, d)
    if delta is math.inf:
        return cfg.epsilon_cap
    if delta < 4.0 * cfg.tau_sep:
        raise NoValidEpsilon(f"minimal lift separation {delta:.3e} too small")
    eps = min(cfg.epsilon_cap, delta / (8.0 * (m_max + 1)))
    for (mi, li), (mj, lj) in itertools.combinations(lines, 2):
        if li.key() == lj.key():
            continue
        d = line_line_dist(li, lj, cfg.tau_alg)
        if (mi + 1) * eps + (mj + 1) * eps + cfg.tau_sep > d:
            raise NoValidEpsilon("collar budget exceeded after capping")
    return eps


def collar_system(s, region_index, epsilon, cfg=DEFAULT):
    if epsilon <= 0.0:
        raise NoValidEpsilon(f"epsilon {epsilon:g} not positive")
    info = region_info(s, region_index, cfg)
    sys = CollarSystem(info, epsilon)
    # chain structure: annulus h meets annulus h+1 exactly in one level
    for h in range(1, info.weight):
        if sys.annulus_levels(h)[1] != sys.annulus_levels(h + 1)[0]:
            raise CollarOverlap("annulus chain levels do not meet")
    return sys


# ---------------------------------------------------------------------------
# Equality and grafting


def _same_class(rep, w1, w2, cfg):
    """Conjugacy of two hyperbolic words, by trace and translated-axis match."""
    m1 = evaluate(rep, w1)
    m2 = evaluate(rep, w2)
    if abs(abs(m1.trace()) - abs(m2.trace())) > 1e-6:
        return False
    axis2 = axis_of(m2, cfg.tau_alg)
    center = axis2.point_at(0.0)
    key2 = axis2.key(6)
    for line, _ in translated_axes(
        rep, w1, cfg.ball_disjoint, center=center, reach=1.0, tol=cfg.tau_alg, cap=cfg.ball_cap
    ):
        if line.key(6) == key2:
            return True
    return False


def structure_equal(s1, s2, cfg=DEFAULT):
    """Equality in normal form: same representation, same weighted classes."""
    if s1.genus != s2.genus:
        return False
    for g1, g2 in zip(s1.rep.gens, s2.rep.gens):
        if max(abs(g1.a - g2.a), abs(g1.b - g2.b), abs(g1.c - g2.c), abs(g1.d - g2.d)) > cfg.tau_alg:
            return False
    c1 = list(s1.multicurve.components)
    c2 = list(s2.multicurve.components)
    if len(c1) != len(c2):
        return False
    used = [False] * len(c2)
    for w1, m1 in c1:
        hit = None
        for j, (w2, m2) in enumerate(c2):
            if used[j] or m1 != m2:
                continue
            if _same_class(s1.rep, w1, w2, cfg):
                hit = j
                break
        if hit is None:
            return False
        used[hit] = True
    return True


def graft(s, word, m, cfg=DEFAULT):
    """Insert m annuli along the named geodesic, merging weights per class."""
    if not isinstance(m, int) or m < 1:
        raise BadIndex(f"weight {m!r} must be a positive integer")
    word = free_reduce(tuple(word))
    comps = list(s.multicurve.components)
    for i, (w, weight) in enumerate(comps):
        if _same_class(s.rep, w, word, cfg):
            comps[i] = (w, weight + m)
            return GraftedStructure(s.rep, WeightedMulticurve(tuple(comps)))
    comps.append((word, m))
    return build_structure(s.rep, WeightedMulticurve(tuple(comps)), cfg)
