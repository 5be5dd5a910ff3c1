from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SizeMismatch


@dataclass(frozen=True, eq=False)
class Image:
    """Sampled tensor data on a regular grid.

    ``data`` has shape ``(*sizes, *shape)`` with axis 0 the spatial x axis.
    ``A`` and ``b`` map world points to continuous index space: ``x = A p + b``.
    """

    data: np.ndarray
    dim: int
    shape: tuple
    A: np.ndarray
    b: np.ndarray

    @classmethod
    def from_array(cls, data, dim: int | None = None, A=None, b=None) -> "Image":
        data = np.ascontiguousarray(data, dtype=float)
        if dim is None:
            dim = data.ndim
        if not 1 <= dim <= 3 or data.ndim < dim:
            raise SizeMismatch(f"cannot build a {dim}-d image from an array of rank {data.ndim}")
        A = np.eye(dim) if A is None else np.asarray(A, dtype=float).reshape(dim, dim)
        b = np.zeros(dim) if b is None else np.asarray(b, dtype=float).reshape(dim)
        if abs(np.linalg.det(A)) < 1e-300:
            raise SizeMismatch("world-to-image matrix is singular")
        return cls(data, dim, tuple(data.shape[dim:]), A, b)

    @classmethod
    def from_index_to_world(cls, data, dim, directions, origin) -> "Image":
        """Build from image-to-world metadata: ``p = D x + o`` (columns of D are axis directions)."""
        D = np.asarray(directions, dtype=float).reshape(dim, dim)
        Ainv = np.linalg.inv(D)
        return cls.from_array(data, dim, Ainv, -Ainv @ np.asarray(origin, dtype=float))

    @property
    def sizes(self) -> tuple:
        return tuple(self.data.shape[:self.dim])

    @property
    def ncomp(self) -> int:
        return int(np.prod(self.shape, dtype=int))

    def to_world(self, x) -> np.ndarray:
        """Continuous index to world point (inverse of the stored map)."""
        return np.linalg.solve(self.A, np.asarray(x, dtype=float) - self.b)

    def flat(self) -> np.ndarray:
        """Voxel data in file order: components fastest, then x, y, z."""
        axes = tuple(reversed(range(self.dim))) + tuple(range(self.dim, self.data.ndim))
        return np.ascontiguousarray(self.data.transpose(axes)).reshape(-1)

    def with_shape(self, shape) -> "Image":
        """Same samples viewed with a different per-voxel tensor shape."""
        shape = tuple(shape)
        if int(np.prod(shape, dtype=int)) != self.ncomp:
            raise SizeMismatch(f"image has {self.ncomp} components per voxel, shape {list(shape)} needs "
                               f"{int(np.prod(shape, dtype=int))}")
        return Image(self.data.reshape(self.sizes + shape), self.dim, shape, self.A, self.b)
