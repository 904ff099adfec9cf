"""Uniform cell-list index for fixed-radius neighbor queries.

A query with radius ``r <= cell_size`` only has to inspect the 3x3 block of
cells around the query location, and returns exactly the points within the
closed ball of radius ``r`` (same result as a brute-force scan).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class GridIndex:
    """Read-only cell list over a fixed point set."""

    points: np.ndarray          # (m, 2) float64
    cell_size: float
    buckets: dict = field(default_factory=dict)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        c = self.cell_size
        return (math.floor(x / c), math.floor(y / c))


def build_grid(points, cell_size: float) -> GridIndex:
    """Bucket `points` into square cells of side `cell_size`."""
    if not (cell_size > 0):
        raise ValueError(f"cell_size must be > 0, got {cell_size}")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    grid = GridIndex(points=pts, cell_size=float(cell_size))
    for i in range(pts.shape[0]):
        key = grid.cell_of(pts[i, 0], pts[i, 1])
        grid.buckets.setdefault(key, []).append(i)
    return grid


def neighbors_within(grid: GridIndex, p, r: float) -> list[int]:
    """Indices of all points with euclid(p, q) <= r (closed ball).

    Requires r <= cell_size so the 3x3 cell neighborhood is sufficient.
    """
    if r > grid.cell_size:
        raise ValueError(f"radius {r} exceeds cell size {grid.cell_size}")
    px, py = float(p[0]), float(p[1])
    cx, cy = grid.cell_of(px, py)
    r2 = r * r
    out = []
    pts = grid.points
    for ix in (cx - 1, cx, cx + 1):
        for iy in (cy - 1, cy, cy + 1):
            for i in grid.buckets.get((ix, iy), ()):
                dx = pts[i, 0] - px
                dy = pts[i, 1] - py
                if dx * dx + dy * dy <= r2:
                    out.append(i)
    out.sort()
    return out
