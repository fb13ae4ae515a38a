"""Numerical models of sc-smooth gluing constructions on cylinders."""

from .errors import DomainError, GridError, MembershipError, ParseError, RangeError, ScglueError
from .fields import (
    DEFAULT_WEIGHTS,
    AntiGluedField,
    FiniteCylinderField,
    GluingParameter,
    HalfCylinderField,
    WeightSequence,
)
from .profile import EXP_CUTOFF, TAN_CUTOFF, CutoffModel, phi, phi_inv

__version__ = "0.1.0"
