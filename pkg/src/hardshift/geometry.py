"""Planar geometry primitives: norms and distances on points.

Points are ``(x, y)`` pairs (tuples, lists or length-2 arrays).  All
distances are plain doubles; the hard core is the *open* condition
``euclid > 1`` while slow-down supports use the *closed* ball
``euclid <= 1 + eps``.
"""

from __future__ import annotations

import math


def max_norm(p) -> float:
    """Maximum norm max(|x|, |y|)."""
    x, y = p
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"non-finite point {p!r}")
    return max(abs(x), abs(y))


def euclid(p, q) -> float:
    """Euclidean distance between two points."""
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return math.sqrt(dx * dx + dy * dy)
