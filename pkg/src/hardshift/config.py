"""Particle configurations: interior points in the box, frozen boundary.

A configuration stores the interior particles of ``[-n, n]^2`` and the
boundary particles outside the box.  Hard-core validity means every
distinct pair (interior and boundary together) keeps Euclidean distance
strictly above 1.

Serialization is bit-exact: JSON uses shortest round-trip float repr, CSV
uses 17 significant digits.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Configuration:
    """Immutable particle configuration for box parameter ``n``."""

    n: int
    interior: np.ndarray   # (m, 2) float64, max_norm <= n
    boundary: np.ndarray   # (b, 2) float64, max_norm > n

    def __post_init__(self):
        object.__setattr__(self, "interior", _as_points(self.interior))
        object.__setattr__(self, "boundary", _as_points(self.boundary))
        self.interior.setflags(write=False)
        self.boundary.setflags(write=False)
        n = self.n
        if self.interior.size:
            mn = np.max(np.abs(self.interior), axis=1)
            if np.any(mn > n):
                bad = int(np.argmax(mn > n))
                raise ValueError(
                    f"interior particle {bad} at {self.interior[bad]} outside the box (n={n})")
        if self.boundary.size:
            mn = np.max(np.abs(self.boundary), axis=1)
            if np.any(mn <= n):
                bad = int(np.argmax(mn <= n))
                raise ValueError(
                    f"boundary particle {bad} at {self.boundary[bad]} inside the box (n={n})")

    @property
    def count(self) -> int:
        return self.interior.shape[0]

    def all_points(self) -> np.ndarray:
        """Interior followed by boundary, as one (m+b, 2) array."""
        return np.concatenate([self.interior, self.boundary], axis=0)


def _as_points(a) -> np.ndarray:
    pts = np.array(a, dtype=np.float64, copy=True).reshape(-1, 2)
    if pts.size and not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates in configuration")
    return pts


def check_hard_core(cfg: Configuration) -> list[tuple[int, int]]:
    """All unordered pairs at Euclidean distance <= 1 (strict violations).

    Indices refer to ``cfg.all_points()`` ordering (interior first).  An
    empty list means the configuration is a valid hard-core configuration.
    """
    pts = cfg.all_points()
    m = pts.shape[0]
    if m < 2:
        return []
    # cell list with cell size 1: any pair at distance <= 1 shares a 3x3 block
    buckets: dict[tuple[int, int], list[int]] = {}
    for i in range(m):
        key = (math.floor(pts[i, 0]), math.floor(pts[i, 1]))
        buckets.setdefault(key, []).append(i)
    out = []
    for (cx, cy), members in buckets.items():
        for i in members:
            for ix in (cx - 1, cx, cx + 1):
                for iy in (cy - 1, cy, cy + 1):
                    for j in buckets.get((ix, iy), ()):
                        if j <= i:
                            continue
                        dx = pts[i, 0] - pts[j, 0]
                        dy = pts[i, 1] - pts[j, 1]
                        if dx * dx + dy * dy <= 1.0:
                            out.append((i, j))
    out.sort()
    return out


def is_hard_core(cfg: Configuration) -> bool:
    return not check_hard_core(cfg)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def to_json_obj(cfg: Configuration) -> dict:
    return {
        "n": cfg.n,
        "interior": [[float(x), float(y)] for x, y in cfg.interior],
        "boundary": [[float(x), float(y)] for x, y in cfg.boundary],
    }


def to_json(cfg: Configuration) -> str:
    return json.dumps(to_json_obj(cfg))


def from_json_obj(obj: dict) -> Configuration:
    try:
        return Configuration(n=int(obj["n"]),
                             interior=obj.get("interior", []),
                             boundary=obj.get("boundary", []))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed configuration object: {exc}") from exc


def from_json(text: str) -> Configuration:
    return from_json_obj(json.loads(text))


def to_csv(cfg: Configuration) -> str:
    """CSV with a `# n=<n>` comment line and kind,x,y rows (17 sig digits)."""
    buf = io.StringIO()
    buf.write(f"# n={cfg.n}\n")
    buf.write("kind,x,y\n")
    for x, y in cfg.interior:
        buf.write(f"interior,{x:.17g},{y:.17g}\n")
    for x, y in cfg.boundary:
        buf.write(f"boundary,{x:.17g},{y:.17g}\n")
    return buf.getvalue()


def from_csv(text: str) -> Configuration:
    n = None
    interior, boundary = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key.strip() == "n":
                n = int(val)
            continue
        if line.lower().startswith("kind,"):
            continue
        kind, xs, ys = line.split(",")
        row = [float(xs), float(ys)]
        if kind == "interior":
            interior.append(row)
        elif kind == "boundary":
            boundary.append(row)
        else:
            raise ValueError(f"unknown particle kind {kind!r}")
    if n is None:
        raise ValueError("CSV is missing the '# n=...' header line")
    return Configuration(n=n, interior=interior, boundary=boundary)
