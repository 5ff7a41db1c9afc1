"""Finite models of coarse spaces, coarse groups and coarse dynamical systems."""

__version__ = "0.1.0"

from .relation_core import GroundSet, Relation
from .coarse_space import CoarseSpace, bounded, discrete, from_line, from_metric, validate
from .coarse_maps import PointMap, classify
from .coarse_group import FiniteGroup, IdealChain, group_space, validate_ideal_chain
from .dynamics import CoarseDynamicalSystem, Conjugacy, TimeGroup, check_conjugacy, validate_cds
from .hyperspace import exp_space, lift_cds
from .asdim import asdim_upper_witness

__all__ = [
    "GroundSet",
    "Relation",
    "CoarseSpace",
    "bounded",
    "discrete",
    "from_line",
    "from_metric",
    "validate",
    "PointMap",
    "classify",
    "FiniteGroup",
    "IdealChain",
    "group_space",
    "validate_ideal_chain",
    "CoarseDynamicalSystem",
    "Conjugacy",
    "TimeGroup",
    "check_conjugacy",
    "validate_cds",
    "exp_space",
    "lift_cds",
    "asdim_upper_witness",
]
