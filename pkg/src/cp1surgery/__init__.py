"""Surgery calculus for complex projective structures with Fuchsian holonomy.

A structure is held as a pair: a discrete faithful representation of a
surface group into PSL(2,R), given by its generator matrices, together with
a weighted collection of disjoint simple closed geodesics recording where
annular pieces were inserted.  The package builds such structures, grafts
them, attaches and removes bubbles along transversal arcs, and reroutes a
bubble boundary to trade wrapping against the inserted annuli.  Every
surgery output is checked by an independent sampling oracle before it is
returned.
"""

from .config import Config, DEFAULT, load_config
from .errors import CP1Error

__all__ = ["Config", "DEFAULT", "load_config", "CP1Error"]
__version__ = "0.1.0"
