"""Convexity on monoids and groups with exact arithmetic.

Hulls, function classes, minorants, duality witnesses and value functions
over finite windows of built-in instances (lattices, dyadic rationals, finite
cyclic groups, Q/Z, set algebras, meet-semilattices and the arctan semigroup).
"""

from .algebra import (
    ExplicitWindow,
    NCombination,
    StructureDescriptor,
    Window,
    enumerate_combinations,
    is_semidivisible,
    probe_divisibility,
)
from .errors import *  # noqa: F401,F403
from .functions import FunctionTable
from .instances import (
    ArctanSemigroup,
    BoxWindow,
    CarrierWindow,
    DyadicRationals,
    DyadicWindow,
    FiniteCyclic,
    GeneralLattice,
    LatticeZd,
    MeetSemilattice,
    Mod1Window,
    RationalsMod1,
    SetAlgebraGroup,
)
from .maps import AdditiveMap
from .scalar import NINF, PINF, ExtendedScalar

__version__ = "0.1.0"
