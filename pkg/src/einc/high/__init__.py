"""HighIR transformations: fusion, normalization and index reductions."""

from .fusion import fuse
from .normalize import is_normal, normalize
from .reduce import fold, reduce_indices

__all__ = ["fold", "fuse", "is_normal", "normalize", "reduce_indices"]
