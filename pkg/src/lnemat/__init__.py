"""Certified inner paths on matrix rank strata and Lipschitz normal embedding checks."""

from .errors import InputError, LnematError, NumericalError, PreconditionError
from .matcore import MatrixPoint, frobenius_dist, make_point, numerical_rank
from .strata import StratumSpec, classify_component

__version__ = "0.1.0"

__all__ = [
    "InputError", "LnematError", "MatrixPoint", "NumericalError", "PreconditionError",
    "StratumSpec", "classify_component", "frobenius_dist", "make_point", "numerical_rank",
]
