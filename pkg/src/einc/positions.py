"""Position sets for running programs: regular grids and point files."""

from __future__ import annotations

import numpy as np

from .errors import BindingError
from .frontend.syntax import Grid, Points


def grid_positions(grid: Grid) -> np.ndarray:
    """Points of a regular grid, shape ``(prod(counts), d)``; the last axis varies fastest."""
    axes = [np.linspace(lo, hi, int(n)) for lo, hi, n in zip(grid.lo, grid.hi, grid.counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def parse_grid(text: str, dim: int) -> Grid:
    """``lo,hi,counts`` with each part a number or ``a:b:c`` per-axis list."""
    parts = text.split(",")
    if len(parts) != 3:
        raise BindingError(f"grid {text!r} must be lo,hi,counts")

    def vec(s, conv):
        vals = tuple(conv(x) for x in s.split(":"))
        if len(vals) == 1:
            return vals * dim
        if len(vals) != dim:
            raise BindingError(f"grid component {s!r} has {len(vals)} values, positions have {dim}")
        return vals

    try:
        return Grid(vec(parts[0], float), vec(parts[1], float), vec(parts[2], int))
    except ValueError:
        raise BindingError(f"cannot parse grid {text!r}") from None


def load_points(path: str, dim: int) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                row = [float(x) for x in line.split()]
            except ValueError:
                raise BindingError(f"{path}:{n}: not a list of numbers") from None
            if len(row) != dim:
                raise BindingError(f"{path}:{n}: point has {len(row)} coordinates, expected {dim}")
            rows.append(row)
    return np.array(rows, dtype=float).reshape(-1, dim)


def domain_positions(domain, dim: int) -> np.ndarray:
    if isinstance(domain, Grid):
        return grid_positions(domain)
    if isinstance(domain, Points):
        return load_points(domain.path, dim)
    raise BindingError("no positions given and the output declares no domain")
