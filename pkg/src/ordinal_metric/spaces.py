"""Analytic compact geodesic spaces used as ground truth.

Every space reports distances normalized so that its diameter is exactly 1.
Nothing in here is visible to the reconstruction code; it only talks to an
:class:`~ordinal_metric.oracle.OrdinalOracle` built from these distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

KINDS = ("segment", "circle", "sphere", "flat-torus", "euclidean-box")
ALIASES = {"torus": "flat-torus", "box": "euclidean-box"}

# Distances are rounded onto a 2**-45 lattice. Dyadic ground-truth values
# (grids with n a power of two) then come out exact, equal true distances
# compare equal, and strictly increasing distortions cannot merge values.
_LATTICE = 2.0 ** 45

DEFAULT_RESOLUTION = 1e-4


class DomainError(ValueError):
    """Coordinates outside the domain of a space."""


def _snap(d):
    return np.clip(np.rint(np.asarray(d, dtype=float) * _LATTICE) / _LATTICE, 0.0, 1.0)


@dataclass(frozen=True)
class SpaceModel:
    """A compact geodesic space with diameter normalized to 1.

    ``size`` holds the shape parameters: the length for a segment, the
    radius for circle and sphere, and the side lengths for torus and box.
    """

    kind: str
    size: tuple[float, ...] = ()
    dim: int = field(init=False)
    coord_dim: int = field(init=False)
    normalization: float = field(init=False)

    def __post_init__(self):
        kind = ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        size = tuple(float(s) for s in self.size)
        if not size:
            size = {"segment": (1.0,), "circle": (1.0,), "sphere": (1.0,),
                    "flat-torus": (1.0, 1.0), "euclidean-box": (1.0, 1.0)}[kind]
        if any(not math.isfinite(s) or s <= 0 for s in size):
            raise ValueError(f"space size must be positive, got {size}")
        if kind in ("segment", "circle", "sphere") and len(size) != 1:
            raise ValueError(f"{kind} takes one size parameter")
        if kind == "flat-torus" and len(size) != 2:
            raise ValueError("flat-torus takes two side lengths")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "size", size)

        if kind in ("segment", "circle"):
            dim = coord_dim = 1
        elif kind in ("sphere", "flat-torus"):
            dim = coord_dim = 2
        else:
            dim = coord_dim = len(size)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "coord_dim", coord_dim)

        if kind == "segment":
            norm = size[0]
        elif kind in ("circle", "sphere"):
            norm = math.pi * size[0]
        elif kind == "flat-torus":
            # farthest point from the origin, found over all lattice translates
            half = np.array([[size[0] / 2, size[1] / 2]])
            norm = float(_torus_raw(np.zeros((1, 2)), half, np.array(size))[0])
        else:
            norm = math.sqrt(sum(s * s for s in size))
        object.__setattr__(self, "normalization", float(norm))

    @property
    def params(self) -> dict[str, Any]:
        if self.kind == "segment":
            return {"length": self.size[0]}
        if self.kind in ("circle", "sphere"):
            return {"radius": self.size[0]}
        return {"sides": list(self.size)}

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": self.params}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "SpaceModel":
        params = obj.get("params") or {}
        if "sides" in params:
            size = tuple(params["sides"])
        elif "length" in params:
            size = (params["length"],)
        elif "radius" in params:
            size = (params["radius"],)
        else:
            size = ()
        return cls(obj["kind"], size)

    def check_points(self, points) -> np.ndarray:
        """Validate intrinsic coordinates; returns an ``(m, coord_dim)`` array."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 0 or (pts.ndim == 1 and self.coord_dim == 1):
            pts = pts.reshape(-1, 1)
        elif pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if pts.ndim != 2 or pts.shape[1] != self.coord_dim:
            raise DomainError(
                f"{self.kind} expects {self.coord_dim} coordinate(s) per point, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DomainError("coordinates must be finite")
        eps = 1e-12
        if self.kind == "segment":
            if np.any(pts < -eps) or np.any(pts > self.size[0] + eps):
                raise DomainError(f"segment coordinate outside [0, {self.size[0]}]")
        elif self.kind == "sphere":
            if np.any(np.abs(pts[:, 0]) > math.pi / 2 + eps):
                raise DomainError("sphere latitude outside [-pi/2, pi/2]")
        elif self.kind == "euclidean-box":
            if np.any(pts < -eps) or np.any(pts > np.array(self.size) + eps):
                raise DomainError("box coordinate outside the box")
        return pts

    def _raw(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        # x, y broadcastable (..., coord_dim) arrays of valid coordinates
        if self.kind == "segment":
            return np.abs(x[..., 0] - y[..., 0])
        if self.kind == "circle":
            delta = np.mod(np.abs(x[..., 0] - y[..., 0]), 2 * math.pi)
            return self.size[0] * np.minimum(delta, 2 * math.pi - delta)
        if self.kind == "sphere":
            return self.size[0] * _sphere_angle(x, y)
        if self.kind == "flat-torus":
            return _torus_raw(x, y, np.array(self.size))
        return np.sqrt(np.sum((x - y) ** 2, axis=-1))

    def distance_matrix(self, points) -> np.ndarray:
        """All pairwise normalized distances between ``points``."""
        pts = self.check_points(points)
        d = self._raw(pts[:, None, :], pts[None, :, :]) / self.normalization
        d = _snap(d)
        d = np.minimum(d, d.T)
        np.fill_diagonal(d, 0.0)
        return d


def _sphere_angle(x, y):
    lat1, lon1 = x[..., 0], x[..., 1]
    lat2, lon2 = y[..., 0], y[..., 1]
    # haversine is well conditioned for both small and near-antipodal pairs
    h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def _torus_raw(x, y, sides):
    delta = np.mod(x - y, sides)
    best = None
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            shift = np.array([i * sides[0], j * sides[1]])
            d = np.sqrt(np.sum((delta + shift) ** 2, axis=-1))
            best = d if best is None else np.minimum(best, d)
    return best


def make_space(kind: str, size: Sequence[float] = ()) -> SpaceModel:
    return SpaceModel(kind, tuple(size))


def geodesic_distance(space: SpaceModel, x, y) -> float:
    """Normalized geodesic distance between two points, in [0, 1]."""
    px = space.check_points(x)
    py = space.check_points(y)
    if len(px) != 1 or len(py) != 1:
        raise DomainError("geodesic_distance takes single points")
    return float(_snap(space._raw(px[0], py[0]) / space.normalization))


@dataclass(frozen=True, eq=False)
class SampleSet:
    """``n`` points of a space; point ids are the row indices of ``points``."""

    space: SpaceModel
    points: np.ndarray
    mode: str = "grid"
    seed: int = 0

    @property
    def n(self) -> int:
        return len(self.points)

    def distance_matrix(self) -> np.ndarray:
        return self.space.distance_matrix(self.points)

    def to_json(self) -> dict[str, Any]:
        return {
            "space": self.space.to_json(),
            "mode": self.mode,
            "seed": int(self.seed),
            "points": [[float(c) for c in row] for row in self.points],
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "SampleSet":
        space = SpaceModel.from_json(obj["space"])
        pts = space.check_points(obj["points"])
        if len(pts) < 2:
            raise ValueError("a sample needs at least two points")
        return cls(space, pts, obj.get("mode", "grid"), int(obj.get("seed") or 0))


def sample(space: SpaceModel, n: int, mode: str = "uniform-iid", seed: int = 0) -> SampleSet:
    """Draw ``n`` points, either i.i.d. from the uniform measure or as a grid."""
    if n < 2:
        raise ValueError(f"need n >= 2 points, got {n}")
    if mode == "grid":
        pts = _grid(space, n)
    elif mode == "uniform-iid":
        pts = _uniform(space, n, np.random.default_rng(seed))
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return SampleSet(space, space.check_points(pts), mode, int(seed))


def _uniform(space, n, rng):
    if space.kind == "segment":
        return rng.uniform(0.0, space.size[0], size=(n, 1))
    if space.kind == "circle":
        return rng.uniform(0.0, 2 * math.pi, size=(n, 1))
    if space.kind == "sphere":
        z = rng.uniform(-1.0, 1.0, size=n)
        lon = rng.uniform(0.0, 2 * math.pi, size=n)
        return np.column_stack([np.arcsin(z), lon])
    return rng.uniform(0.0, 1.0, size=(n, space.coord_dim)) * np.array(space.size)


def _near_square(n):
    r = int(math.isqrt(n))
    while n % r:
        r -= 1
    return r, n // r


def _grid(space, n):
    if space.kind == "segment":
        return np.linspace(0.0, space.size[0], n).reshape(-1, 1)
    if space.kind == "circle":
        return (2 * math.pi * np.arange(n) / n).reshape(-1, 1)
    if space.kind == "sphere":
        # Fibonacci lattice
        k = np.arange(n)
        lat = np.arcsin(1.0 - (2 * k + 1) / n)
        lon = np.mod(2 * math.pi * k * (2 / (1 + math.sqrt(5))), 2 * math.pi)
        return np.column_stack([lat, lon])
    sides = np.array(space.size)
    if space.kind == "flat-torus":
        r, c = _near_square(n)
        if 2 * r >= math.sqrt(n):
            i, j = np.meshgrid(np.arange(c), np.arange(r), indexing="xy")
            return np.column_stack([i.ravel() * sides[0] / c, j.ravel() * sides[1] / r])
        return qmc.Halton(d=2, scramble=False).random(n) * sides
    k = space.dim
    m = round(n ** (1.0 / k))
    if m ** k == n and m >= 2:
        axes = [np.linspace(0.0, s, m) for s in sides]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([g.ravel() for g in mesh])
    return qmc.Halton(d=k, scramble=False).random(n) * sides


def hausdorff_to_space(space: SpaceModel, smp: SampleSet | np.ndarray,
                       resolution: float = DEFAULT_RESOLUTION) -> float:
    """Hausdorff distance between a finite sample and the whole space.

    Exact on segment and circle. On surfaces and boxes a branch-and-bound
    refinement brackets the value to within ``resolution`` and the upper end
    of the bracket is returned.
    """
    if not resolution > 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    return hausdorff_bracket(space, smp, resolution)[1]


def hausdorff_bracket(space: SpaceModel, smp: SampleSet | np.ndarray,
                      resolution: float = DEFAULT_RESOLUTION) -> tuple[float, float]:
    if not resolution > 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    pts = smp.points if isinstance(smp, SampleSet) else space.check_points(smp)
    if isinstance(smp, SampleSet) and smp.space != space:
        raise ValueError("sample was drawn from a different space")
    if space.kind == "segment":
        x = np.sort(pts[:, 0])
        length = space.size[0]
        gaps = [x[0], length - x[-1]]
        if len(x) > 1:
            gaps.append(np.max(np.diff(x)) / 2)
        h = float(max(gaps)) / length
        return h, h
    if space.kind == "circle":
        a = np.sort(np.mod(pts[:, 0], 2 * math.pi))
        gaps = np.diff(np.concatenate([a, [a[0] + 2 * math.pi]]))
        h = float(np.max(gaps)) / 2 / math.pi
        return h, h
    return _branch_and_bound(space, pts, resolution)


def _nearest_fn(space, pts):
    """Normalized distance from query points to the nearest sample point."""
    if space.kind == "sphere":
        lat, lon = pts[:, 0], pts[:, 1]
        xyz = np.column_stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])
        tree = cKDTree(xyz)

        def nearest(q):
            qx = np.column_stack([np.cos(q[:, 0]) * np.cos(q[:, 1]),
                                  np.cos(q[:, 0]) * np.sin(q[:, 1]), np.sin(q[:, 0])])
            chord, _ = tree.query(qx)
            return 2 * np.arcsin(np.clip(chord / 2, 0.0, 1.0)) / math.pi
        return nearest
    sides = np.array(space.size)
    if space.kind == "flat-torus":
        data = np.mod(pts, sides)
        data = np.where(data >= sides, 0.0, data)
        tree = cKDTree(data, boxsize=sides)
    else:
        tree = cKDTree(pts)

    def nearest(q):
        dist, _ = tree.query(q)
        return dist / space.normalization
    return nearest


def _cell_radius(space, lo, hi):
    """Upper bound on the normalized distance from a cell center to any point of the cell."""
    if space.kind == "sphere":
        dlat = hi[:, 0] - lo[:, 0]
        dlon = hi[:, 1] - lo[:, 1]
        # along the meridian, then along the widest parallel in the cell
        min_abs_lat = np.where(lo[:, 0] * hi[:, 0] <= 0, 0.0,
                               np.minimum(np.abs(lo[:, 0]), np.abs(hi[:, 0])))
        return (dlat / 2 + np.cos(min_abs_lat) * dlon / 2) / math.pi
    return np.sqrt(np.sum(((hi - lo) / 2) ** 2, axis=1)) / space.normalization


def _branch_and_bound(space, pts, resolution):
    nearest = _nearest_fn(space, pts)
    if space.kind == "sphere":
        dom_lo = np.array([-math.pi / 2, 0.0])
        dom_hi = np.array([math.pi / 2, 2 * math.pi])
    else:
        dom_lo = np.zeros(space.coord_dim)
        dom_hi = np.array(space.size, dtype=float)
    k = space.coord_dim
    per_axis = max(2, int(round(4096 ** (1.0 / k))))
    edges = [np.linspace(dom_lo[i], dom_hi[i], per_axis + 1) for i in range(k)]
    idx = np.meshgrid(*[np.arange(per_axis)] * k, indexing="ij")
    idx = np.column_stack([g.ravel() for g in idx])
    lo = np.column_stack([edges[i][idx[:, i]] for i in range(k)])
    hi = np.column_stack([edges[i][idx[:, i] + 1] for i in range(k)])
    corners = np.array(np.meshgrid(*[[0, 1]] * k, indexing="ij")).reshape(k, -1).T

    lower = 0.0
    finished_upper = 0.0
    while len(lo):
        f = nearest((lo + hi) / 2)
        r = _cell_radius(space, lo, hi)
        lower = max(lower, float(f.max()))
        keep = f + r > lower
        done = keep & (r <= resolution)
        if done.any():
            finished_upper = max(finished_upper, float((f + r)[done].max()))
        split = keep & ~done
        lo, hi = lo[split], hi[split]
        if not len(lo):
            break
        mid = (lo + hi) / 2
        new_lo, new_hi = [], []
        for c in corners:
            new_lo.append(np.where(c == 0, lo, mid))
            new_hi.append(np.where(c == 0, mid, hi))
        lo = np.concatenate(new_lo)
        hi = np.concatenate(new_hi)
    return lower, max(lower, finished_upper)
