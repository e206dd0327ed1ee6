"""Computing and bounding S(k) operator norms, with applications to
k-block positivity, Schmidt number detection and quantum channels."""

from . import apps, blockpos, channels, conic, densemat, schmidt, sknorm, tensor
from .densemat import DimensionError
from .sknorm import NormEstimate, estimate

__version__ = "0.1.0"

__all__ = ["apps", "blockpos", "channels", "conic", "densemat", "schmidt", "sknorm", "tensor",
           "DimensionError", "NormEstimate", "estimate"]
