"""Exception hierarchy.

Every failure mode that callers may want to catch gets its own class, all
rooted at CP1Error.  Numerical near-misses (a trace within tolerance of 2, a
tangency between curve pieces) raise rather than guess: the caller decides
whether to perturb and retry.
"""


class CP1Error(Exception):
    """Base class for all errors raised by this package."""


class NonInvertible(CP1Error):
    """Matrix determinant vanishes within tolerance."""


class NotHyperbolic(CP1Error):
    """A group element required to be hyperbolic is elliptic or parabolic."""


class BoundaryPoint(CP1Error):
    """A point expected in the open upper half plane lies on or below the real axis."""


class RelatorViolation(CP1Error):
    """Surface group relator does not evaluate to the identity within tolerance."""


class BadIndex(CP1Error):
    """Generator index out of range for the given genus."""


class BallTooLarge(CP1Error):
    """Requested word-length ball exceeds the configured enumeration cap."""


class NotHyperbolicHolonomy(NotHyperbolic):
    """A multicurve component's holonomy is not hyperbolic, so it has no geodesic."""


class NotSimple(CP1Error):
    """A curve that must be simple has a self-crossing among its lifts."""


class NotDisjoint(CP1Error):
    """Two curves that must be disjoint have crossing lifts."""


class NoValidEpsilon(CP1Error):
    """No collar half-width satisfies all separation constraints."""


class CollarOverlap(CP1Error):
    """Collar neighborhoods of distinct lift lines intersect."""


class Tangency(CP1Error):
    """Two curve pieces meet tangentially; transversality is required throughout."""


class SelfIntersection(CP1Error):
    """An arc crosses itself."""


class InterleavedDetours(CP1Error):
    """Detour chords interleave on an annulus boundary, so the arc cannot embed."""


class DegenerateEndpoint(CP1Error):
    """Arc endpoint lies inside a collar, on a lift line, or coincides with the other endpoint."""


class TransversalityViolation(CP1Error):
    """An axis crossing is not transversal, or successive crossings disagree in sense."""


class TangentCrossing(CP1Error):
    """Two crossing parameters on one line collide within the separation tolerance."""


class EmbeddingCheckFailed(CP1Error):
    """Independent geometric check found (or could not exclude) a self-intersection."""


class NotABubble(CP1Error):
    """The record passed to debubbling does not describe a bubble of this structure."""


class NotFullCover(CP1Error):
    """The arc does not cross every required region, or crosses one twice."""


class ArcSynthesisFailed(CP1Error):
    """Could not construct a valid full-cover arc for the requested multicurve."""


class SceneParseError(CP1Error):
    """Scene file is malformed.  Message carries line and column."""


class Inconclusive(CP1Error):
    """A certified check could neither confirm nor refute at the resolution cap."""


class DuplicateParameter(CP1Error):
    """Two detours on one annulus share a boundary parameter value."""
