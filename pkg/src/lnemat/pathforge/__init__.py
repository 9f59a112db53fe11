"""Explicit paths inside rank strata and their closures, with certificates."""

from .closure import closure_path, closure_path_sqrt2
from .combinators import cone_path, product_path, product_point
from .paths import Certificate, PiecewisePath, certify, path_length, sample_path
from .segments import (
    BlockScaling,
    Embedded,
    EpsilonCorrected,
    Framed,
    Linear,
    Mapped,
    Parametric,
    Reversed,
    Rotation,
    block_scaling_primitive,
)
from .stratum import stratum_path

__all__ = [
    "BlockScaling", "Certificate", "Embedded", "EpsilonCorrected", "Framed", "Linear", "Mapped",
    "Parametric", "PiecewisePath", "Reversed", "Rotation", "block_scaling_primitive", "certify",
    "closure_path", "closure_path_sqrt2", "cone_path", "path_length", "product_path",
    "product_point", "sample_path", "stratum_path",
]
