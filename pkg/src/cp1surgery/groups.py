"""Surface group words and a canonical Fuchsian representation per genus.

Words in the standard generators are tuples of nonzero ints: letter i in
1..g is the i-th handle's first generator, g+i the second, negatives are
inverses.  String form uses a1..ag, b1..bg with capitals for inverses.

The canonical representation for genus g comes from the regular 4g-gon
whose corner angles sum to 2 pi.  Side pairings carry each edge onto its
partner two steps away with reversed boundary orientation; the blocks are
labeled so that the product of commutators of the generators is the
identity, which is asserted at build time.  All pairings are conjugates of
a single translation by the polygon's rotational symmetry; we construct
each directly by midpoint-and-direction transport.  The polygon radius is
found by bisection on the angle-sum condition.

Ball enumeration is vectorized: freely reduced words grow level by level
through batched 2x2 products, and axes of conjugated elements are
extracted in bulk.  Results are cached per genus, since every structure in
this package shares the canonical representation.
"""

from __future__ import annotations

import cmath
import dataclasses
import math

import numpy as np

from .config import DEFAULT
from .errors import BadIndex, BallTooLarge, NotHyperbolic, RelatorViolation
from .hyp import INF, Line, MobiusMap, line_through, point_map

# ---------------------------------------------------------------------------
# Words


def parse_word(text, genus):
    """Read a word like 'a1B2' into signed letters; capitals are inverses."""
    word = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch not in "abAB":
            raise BadIndex(f"bad generator letter {ch!r} in {text!r}")
        j = i + 1
        while j < len(text) and text[j].isdigit():
            j += 1
        if j == i + 1:
            raise BadIndex(f"missing index after {ch!r} in {text!r}")
        idx = int(text[i + 1 : j])
        if not 1 <= idx <= genus:
            raise BadIndex(f"index {idx} out of range for genus {genus}")
        letter = idx if ch in "aA" else genus + idx
        if ch.isupper():
            letter = -letter
        word.append(letter)
        i = j
    if not word:
        raise BadIndex(f"empty word {text!r}")
    return tuple(word)


def word_str(word, genus):
    out = []
    for letter in word:
        k = abs(letter)
        if k <= genus:
            ch, idx = "a", k
        else:
            ch, idx = "b", k - genus
        out.append((ch.upper() if letter < 0 else ch) + str(idx))
    return "".join(out)


def free_reduce(word):
    stack = []
    for letter in word:
        if stack and stack[-1] == -letter:
            stack.pop()
        else:
            stack.append(letter)
    return tuple(stack)


def inverse_word(word):
    return tuple(-letter for letter in reversed(word))


def cyclic_reduce(word):
    word = list(free_reduce(word))
    while len(word) >= 2 and word[0] == -word[-1]:
        word = word[1:-1]
    return tuple(word)


def is_proper_power(word):
    w = cyclic_reduce(word)
    n = len(w)
    for p in range(1, n):
        if n % p == 0 and all(w[i] == w[i % p] for i in range(n)):
            return True
    return False


def exponent_sums(word, genus):
    """Image in first homology, as a length-2g integer vector."""
    v = np.zeros(2 * genus, dtype=np.int64)
    for letter in word:
        v[abs(letter) - 1] += 1 if letter > 0 else -1
    return v


def relator_word(genus):
    word = []
    for i in range(1, genus + 1):
        word.extend((i, genus + i, -i, -(genus + i)))
    return tuple(word)


# ---------------------------------------------------------------------------
# Representations


@dataclasses.dataclass(frozen=True)
class FuchsianRep:
    """Genus and generator matrices of a discrete faithful representation."""

    genus: int
    gens: tuple

    def generator(self, letter):
        if not 1 <= abs(letter) <= 2 * self.genus:
            raise BadIndex(f"letter {letter} out of range for genus {self.genus}")
        g = self.gens[abs(letter) - 1]
        return g if letter > 0 else g.inverse()


def evaluate(rep, word):
    """Product of generator matrices, leftmost letter first."""
    m = MobiusMap.identity()
    for letter in word:
        m = m @ rep.generator(letter)
    return m


def relator_residual(rep):
    w = evaluate(rep, relator_word(rep.genus))
    res = []
    for sign in (1.0, -1.0):
        res.append(max(abs(w.a - sign), abs(w.b), abs(w.c), abs(w.d - sign)))
    return min(res)


def polygon_radius(genus, tol=1e-12):
    """Circumradius of the regular 4g-gon with corner angles summing to 2 pi.

    The corner angle at circumradius R satisfies
    tan(angle/2) = cot(pi/4g) / cosh(R); the angle sum is monotone in R, so
    bisection pins R to the requested width.
    """
    if genus < 2:
        raise BadIndex("hyperbolic polygon needs genus at least 2")
    n = 4 * genus
    cot = 1.0 / math.tan(math.pi / n)

    def angle_sum(r):
        return n * 2.0 * math.atan(cot / math.cosh(r)) - 2.0 * math.pi

    lo, hi = 0.5, 10.0
    if angle_sum(lo) <= 0.0 or angle_sum(hi) >= 0.0:
        raise RelatorViolation("polygon radius bracket failed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if angle_sum(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _cayley(w):
    return 1j * (1.0 + w) / (1.0 - w)


def _edge_transport(zs, ze, ws, we):
    """Isometry carrying the oriented geodesic segment zs->ze onto ws->we."""
    src = line_through(zs, ze)
    dst = line_through(ws, we)
    sm = 0.5 * (src.foot_param(zs) + src.foot_param(ze))
    dm = 0.5 * (dst.foot_param(ws) + dst.foot_param(we))
    return point_map(
        src.point_at(sm), src.direction_at(sm), dst.point_at(dm), dst.direction_at(dm)
    )


_REP_CACHE: dict[int, FuchsianRep] = {}


def canonical_rep(genus, tol=1e-9):
    """The package's reference representation for the given genus.

    Edge k of handle block i pairs with edge k+2, mapped with flipped
    boundary orientation; reading the neighbor labels around the polygon in
    the order fixed below makes the vertex cycle spell the standard
    relator.  The result is checked against that relator before caching.
    """
    if genus in _REP_CACHE:
        return _REP_CACHE[genus]
    n = 4 * genus
    radius = polygon_radius(genus)
    re = math.tanh(radius / 2.0)
    verts = [_cayley(cmath.rect(re, 2.0 * math.pi * j / n)) for j in range(n)]
    gens = []
    for i in range(genus):
        k = 4 * i
        gens.append(_edge_transport(verts[k + 2], verts[k + 3], verts[k + 1], verts[k]))
    for i in range(genus):
        k = 4 * i
        gens.append(
            _edge_transport(verts[k + 1], verts[k + 2], verts[(k + 4) % n], verts[k + 3])
        )
    rep = FuchsianRep(genus, tuple(gens))
    for g in gens:
        if g.classify(tol) != "hyperbolic":
            raise NotHyperbolic("side pairing map is not hyperbolic")
    res = relator_residual(rep)
    if res > tol:
        raise RelatorViolation(f"relator residual {res:.3e}")
    _REP_CACHE[genus] = rep
    return rep


# ---------------------------------------------------------------------------
# Ball enumeration


_BALL_CACHE: dict[tuple, tuple] = {}


def _alphabet(genus):
    """Letters as signed ints indexed 0..4g-1, inverses in the second half."""
    g2 = 2 * genus
    return [k + 1 for k in range(g2)] + [-(k + 1) for k in range(g2)]


def _is_canonical(rep):
    cached = _REP_CACHE.get(rep.genus)
    return cached is not None and cached.gens == rep.gens


def _ball_arrays(rep, length, cap=8):
    """Freely reduced words of length <= length with their matrices.

    Returns (mats, parents, alpha): mats is (N,2,2); word i is recovered by
    walking parents from i collecting alphabet indices.  Entry 0 is the
    identity.  Cached for the canonical representation only.
    """
    if length > cap:
        raise BallTooLarge(f"ball radius {length} exceeds cap {cap}")
    key = (rep.genus, length)
    if _is_canonical(rep) and key in _BALL_CACHE:
        return _BALL_CACHE[key]
    g2 = 2 * rep.genus
    letters = _alphabet(rep.genus)
    gen_mats = np.empty((2 * g2, 2, 2))
    for k, letter in enumerate(letters):
        m = rep.generator(letter)
        gen_mats[k] = [[m.a, m.b], [m.c, m.d]]

    mats = [np.eye(2)[None, :, :]]
    parents = [np.array([-1], dtype=np.int64)]
    alpha = [np.array([-1], dtype=np.int16)]
    level_mats = mats[0]
    level_alpha = alpha[0]
    level_base = 0
    total = 1
    for _ in range(length):
        new_m, new_p, new_a = [], [], []
        for k in range(2 * g2):
            inv_k = (k + g2) % (2 * g2)
            keep = level_alpha != inv_k
            if not keep.any():
                continue
            src = level_mats[keep]
            new_m.append(np.einsum("nij,jk->nik", src, gen_mats[k]))
            new_p.append(np.nonzero(keep)[0] + level_base)
            new_a.append(np.full(int(keep.sum()), k, dtype=np.int16))
        level_base = total
        level_mats = np.concatenate(new_m)
        level_parent = np.concatenate(new_p)
        level_alpha = np.concatenate(new_a)
        total += len(level_mats)
        mats.append(level_mats)
        parents.append(level_parent)
        alpha.append(level_alpha)
    out = (np.concatenate(mats), np.concatenate(parents), np.concatenate(alpha))
    if _is_canonical(rep):
        _BALL_CACHE[key] = out
    return out


def _ball_word(index, parents, alpha, genus):
    letters = _alphabet(genus)
    word = []
    while index > 0:
        word.append(letters[alpha[index]])
        index = parents[index]
    return tuple(reversed(word))


def _sign_normalized(flat, thresh=1e-3):
    """Flip each row's sign so its first entry larger than thresh is positive."""
    sgn = np.zeros(len(flat))
    for col in range(flat.shape[1]):
        need = sgn == 0.0
        big = need & (np.abs(flat[:, col]) > thresh)
        sgn[big] = np.sign(flat[big, col])
    sgn[sgn == 0.0] = 1.0
    return flat * sgn[:, None]


def enumerate_ball(rep, length, cfg=DEFAULT):
    """Distinct group elements of word length <= length, as (word, map) pairs.

    Words are freely reduced; elements that coincide as matrices (after
    projective sign normalization, entrywise within tau_alg) are listed
    once, under their first word in length-then-discovery order.
    """
    mats, parents, alpha = _ball_arrays(rep, length, cfg.ball_cap)
    if len(mats) > cfg.ball_count_cap:
        raise BallTooLarge(f"ball holds {len(mats)} elements, cap {cfg.ball_count_cap}")
    flat = _sign_normalized(mats.reshape(len(mats), 4))
    quant = np.round(flat / max(cfg.tau_alg, 1e-12) / 1000.0)
    seen = {}
    out = []
    for i in range(len(flat)):
        key = tuple(quant[i])
        if key in seen:
            continue
        seen[key] = i
        m = mats[i]
        out.append(
            (
                _ball_word(i, parents, alpha, rep.genus),
                MobiusMap(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1])),
            )
        )
    return out


def discreteness_gap(rep, length=6, cfg=DEFAULT):
    """min |trace| - 2 over nontrivial ball elements; nonnegative when discrete.

    Identity coincidences (words equal to the trivial element) are skipped:
    for the canonical representations none exist below the relator length.
    """
    mats, _, _ = _ball_arrays(rep, length, cfg.ball_cap)
    tr = np.abs(mats[:, 0, 0] + mats[:, 1, 1])
    offdiag = np.abs(mats[:, 0, 1]) + np.abs(mats[:, 1, 0])
    diaggap = np.abs(np.abs(mats[:, 0, 0]) - 1.0) + np.abs(np.abs(mats[:, 1, 1]) - 1.0)
    nontrivial = (offdiag + diaggap) > 1e-6
    return float(np.min(tr[nontrivial])) - 2.0


def validate_rep(rep, cfg=DEFAULT):
    """Assert the representation invariants; raises on failure."""
    if rep.genus < 2:
        raise BadIndex("genus must be at least 2")
    if len(rep.gens) != 2 * rep.genus:
        raise BadIndex("wrong number of generators")
    for g in rep.gens:
        if g.classify(cfg.tau_alg) != "hyperbolic":
            raise NotHyperbolic("generator is not hyperbolic")
    res = relator_residual(rep)
    if res > cfg.tau_alg:
        raise RelatorViolation(f"relator residual {res:.3e}")
    if discreteness_gap(rep, cfg.ball_disc, cfg) < -cfg.tau_alg:
        raise RelatorViolation("discreteness heuristic failed: small trace in ball")
    return rep


# ---------------------------------------------------------------------------
# Axes of conjugates


def _axis_point_dist_batch(p, q, z0):
    """Distance from z0 to the geodesics with finite real endpoints p, q."""
    m = 0.5 * (p + q)
    r = 0.5 * np.abs(p - q)
    num = np.abs(np.abs(z0 - m) ** 2 - r * r)
    return np.arcsinh(num / (2.0 * r * z0.imag))


_CONJ_CACHE: dict[tuple, tuple] = {}


def _conj_axis_arrays(rep, word, length, tol, cap):
    """Axis endpoints of all ball conjugates of a word, plus odd rows.

    Returns (rep_pts, att, rows, odd) where rows indexes into the ball for
    the generic finite-endpoint axes and odd lists (index, Line) for
    conjugates with an endpoint at infinity.
    """
    key = (rep.genus, word, length)
    if _is_canonical(rep) and key in _CONJ_CACHE:
        return _CONJ_CACHE[key]
    w = evaluate(rep, word)
    if w.classify(tol) != "hyperbolic":
        raise NotHyperbolic(f"word {word} has trace {w.trace():g}")
    mats, parents, alpha = _ball_arrays(rep, length, cap)
    wm = np.array([[w.a, w.b], [w.c, w.d]])
    inv = np.empty_like(mats)
    inv[:, 0, 0] = mats[:, 1, 1]
    inv[:, 0, 1] = -mats[:, 0, 1]
    inv[:, 1, 0] = -mats[:, 1, 0]
    inv[:, 1, 1] = mats[:, 0, 0]
    conj = np.einsum("nij,jk,nkl->nil", mats, wm, inv)
    a, b = conj[:, 0, 0], conj[:, 0, 1]
    c, d = conj[:, 1, 0], conj[:, 1, 1]
    tr = a + d
    root = np.sqrt(np.maximum(tr * tr - 4.0, 0.0))
    generic = np.abs(c) > 1e-12 * (1.0 + np.abs(a) + np.abs(d))
    denom = np.where(generic, 2.0 * c, 1.0)
    att = ((a - d) + np.sign(tr) * root) / denom
    rep_pt = ((a - d) - np.sign(tr) * root) / denom
    rows = np.nonzero(generic)[0]
    odd = []
    for i in np.nonzero(~generic)[0]:
        m = MobiusMap(float(a[i]), float(b[i]), float(c[i]), float(d[i]))
        try:
            at, rp = m.fixed_points(tol)
        except NotHyperbolic:
            continue
        odd.append((int(i), Line(rp, at)))
    out = (rep_pt[rows], att[rows], rows, odd)
    if _is_canonical(rep):
        _CONJ_CACHE[key] = out
    return out


def translated_axes(rep, word, length, center=1j, reach=6.0, tol=1e-9, cap=8):
    """Axes of ball conjugates of a word, near a center point, deduplicated.

    For each group element u in the ball, the axis of u w u^-1 is the
    u-image of the axis of w.  Axes farther than reach from the center are
    dropped.  Conjugators stabilizing the axis reproduce it up to float
    noise, so coincidence is decided by endpoint proximity, far below the
    separation of genuinely distinct lifts; each cluster keeps its shortest
    conjugating word.  Returns a list of (Line, conjugator word) sorted by
    that word.
    """
    rep_pts, att, rows, odd = _conj_axis_arrays(rep, word, length, tol, cap)
    _, parents, alpha = _ball_arrays(rep, length, cap)
    near = _axis_point_dist_batch(rep_pts, att, center) <= reach
    cands = []
    for j in np.nonzero(near)[0]:
        wrd = _ball_word(int(rows[j]), parents, alpha, rep.genus)
        p, q = float(rep_pts[j]), float(att[j])
        cands.append((p, q, Line(p, q), wrd))
    for i, line in odd:
        if line.dist_to(center) > reach:
            continue
        wrd = _ball_word(i, parents, alpha, rep.genus)
        p = math.inf if line.p is INF else float(line.p)
        q = math.inf if line.q is INF else float(line.q)
        cands.append((p, q, line, wrd))

    def coincide(a, b):
        for x, y in ((a[0], b[0]), (a[1], b[1])):
            if math.isinf(x) or math.isinf(y):
                if x != y:
                    return False
            elif abs(x - y) > 1e-6 * (1.0 + abs(x)):
                return False
        return True

    cands.sort(key=lambda c: (len(c[3]), c[3]))
    kept = []
    for c in cands:
        if not any(coincide(c, k) for k in kept):
            kept.append(c)
    return [(line, wrd) for _, _, line, wrd in kept]
