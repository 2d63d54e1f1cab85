"""Geometric primitives and analytic signed-distance fields.

All lengths are in meters. A point is a numpy array of shape ``(3,)``;
point batches have shape ``(..., 3)`` and every SDF broadcasts over the
leading dimensions. Signed distances follow the usual convention:
negative inside, zero on the surface, positive outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "as_point3",
    "normalize_yaw",
    "Aabb",
    "RigidPose2D",
    "Shape",
    "Sphere",
    "Box",
    "Cylinder",
    "Union",
    "make_o1",
    "make_o2",
    "make_o3",
]

# Full cuboid used in the three resting presets below: the only cuboid
# consistent with footprints 15.5 x 5.5 cm and 15.5 x 8.25 cm.
_EDGES_M = (0.155, 0.0825, 0.055)


def as_point3(p) -> np.ndarray:
    """Coerce *p* to a finite float64 array of shape (3,)."""
    a = np.asarray(p, dtype=np.float64)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"point has non-finite coordinates: {a}")
    return a


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle in radians into (-pi, pi]."""
    y = float(yaw) % (2.0 * math.pi)
    if y > math.pi:
        y -= 2.0 * math.pi
    return y


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box given by its two extreme corners.

    Strictly positive volume is required unless ``allow_degenerate`` is
    set (used for flat or collapsed boxes in intermediate computations).
    """

    lo: np.ndarray
    hi: np.ndarray
    allow_degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lo", as_point3(self.lo))
        object.__setattr__(self, "hi", as_point3(self.hi))
        if np.any(self.lo > self.hi):
            raise ValueError(f"lo must be <= hi component-wise: {self.lo} vs {self.hi}")
        if not self.allow_degenerate and not np.all(self.lo < self.hi):
            raise ValueError("degenerate box (zero extent on some axis); "
                             "pass allow_degenerate=True if intended")

    @property
    def size(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.size))

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return np.all((p >= self.lo) & (p <= self.hi), axis=-1)

    def clamp(self, points) -> np.ndarray:
        """Component-wise projection onto the box. Identity on interior points."""
        p = np.asarray(points, dtype=np.float64)
        return np.clip(p, self.lo, self.hi)


@dataclass(frozen=True)
class RigidPose2D:
    """Planar pose on the table: position in meters, yaw in radians.

    Yaw is normalized into (-pi, pi] on construction.
    """

    x: float
    y: float
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "yaw"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)

    def translated(self, dx: float, dy: float) -> "RigidPose2D":
        return RigidPose2D(self.x + dx, self.y + dy, self.yaw)


class Shape:
    """Base class for analytic ground-truth shapes.

    Subclasses implement :meth:`sdf` (exact or conservative signed
    distance, 1-Lipschitz) and :meth:`surface_samples` (approximately
    area-uniform random points on the surface).
    """

    def sdf(self, points) -> np.ndarray:
        raise NotImplementedError

    def surface_samples(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def sdf_at(self, p) -> float:
        """Scalar convenience wrapper around :meth:`sdf`."""
        return float(self.sdf(as_point3(p)))


@dataclass(frozen=True)
class Sphere(Shape):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point3(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0.0:
            raise ValueError(f"radius must be > 0, got {self.radius}")

    def sdf(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return np.linalg.norm(p - self.center, axis=-1) - self.radius

    def surface_samples(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.normal(size=(n, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return self.center + self.radius * u


@dataclass(frozen=True)
class Box(Shape):
    """Axis-aligned box, optionally rotated by ``yaw`` about the vertical axis."""

    center: np.ndarray
    half_extents: np.ndarray
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", as_point3(self.center))
        object.__setattr__(self, "half_extents", as_point3(self.half_extents))
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))
        if not np.all(self.half_extents > 0.0):
            raise ValueError(f"half_extents must be > 0, got {self.half_extents}")

    def _to_local(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64) - self.center
        if self.yaw != 0.0:
            c, s = math.cos(-self.yaw), math.sin(-self.yaw)
            x = p[..., 0] * c - p[..., 1] * s
            y = p[..., 0] * s + p[..., 1] * c
            p = np.stack([x, y, p[..., 2]], axis=-1)
        return p

    def _to_world(self, local) -> np.ndarray:
        p = np.asarray(local, dtype=np.float64)
        if self.yaw != 0.0:
            c, s = math.cos(self.yaw), math.sin(self.yaw)
            x = p[..., 0] * c - p[..., 1] * s
            y = p[..., 0] * s + p[..., 1] * c
            p = np.stack([x, y, p[..., 2]], axis=-1)
        return p + self.center

    def sdf(self, points) -> np.ndarray:
        # Exact box SDF: norm of the positive excess outside, largest
        # (negative) axis excess inside.
        q = np.abs(self._to_local(points)) - self.half_extents
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside

    def surface_samples(self, n: int, rng: np.random.Generator) -> np.ndarray:
        hx, hy, hz = self.half_extents
        areas = np.array([hy * hz, hy * hz, hx * hz, hx * hz, hx * hy, hx * hy])
        face = rng.choice(6, size=n, p=areas / areas.sum())
        uv = rng.uniform(-1.0, 1.0, size=(n, 2))
        local = np.empty((n, 3))
        for f, (fixed_axis, sign) in enumerate([(0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1)]):
            m = face == f
            free = [a for a in range(3) if a != fixed_axis]
            local[m, fixed_axis] = sign * self.half_extents[fixed_axis]
            local[m, free[0]] = uv[m, 0] * self.half_extents[free[0]]
            local[m, free[1]] = uv[m, 1] * self.half_extents[free[1]]
        return self._to_world(local)


@dataclass(frozen=True)
class Cylinder(Shape):
    """Right circular cylinder with its axis along z."""

    center: np.ndarray
    radius: float
    half_height: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point3(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "half_height", float(self.half_height))
        if not (self.radius > 0.0 and self.half_height > 0.0):
            raise ValueError("radius and half_height must be > 0")

    def sdf(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64) - self.center
        d_r = np.hypot(p[..., 0], p[..., 1]) - self.radius
        d_z = np.abs(p[..., 2]) - self.half_height
        d = np.stack([d_r, d_z], axis=-1)
        outside = np.linalg.norm(np.maximum(d, 0.0), axis=-1)
        inside = np.minimum(np.max(d, axis=-1), 0.0)
        return outside + inside

    def surface_samples(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lateral = 2.0 * math.pi * self.radius * 2.0 * self.half_height
        cap = math.pi * self.radius**2
        which = rng.choice(3, size=n, p=np.array([lateral, cap, cap]) / (lateral + 2 * cap))
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
        out = np.empty((n, 3))
        m = which == 0
        out[m, 0] = self.radius * np.cos(theta[m])
        out[m, 1] = self.radius * np.sin(theta[m])
        out[m, 2] = rng.uniform(-self.half_height, self.half_height, size=int(m.sum()))
        for w, sign in ((1, 1.0), (2, -1.0)):
            m = which == w
            r = self.radius * np.sqrt(rng.uniform(size=int(m.sum())))
            out[m, 0] = r * np.cos(theta[m])
            out[m, 1] = r * np.sin(theta[m])
            out[m, 2] = sign * self.half_height
        return out + self.center


@dataclass(frozen=True)
class Union(Shape):
    """Union of member shapes; SDF is the member minimum.

    The minimum is the exact distance outside the union and a valid
    (1-Lipschitz, correctly signed) bound inside.
    """

    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) == 0:
            raise ValueError("union needs at least one member")

    def sdf(self, points) -> np.ndarray:
        return np.min([m.sdf(points) for m in self.members], axis=0)

    def surface_samples(self, n: int, rng: np.random.Generator) -> np.ndarray:
        # Member surface points strictly inside another member are not on
        # the union surface; resample until enough survive.
        kept = []
        total = 0
        for _ in range(64):
            per = max(n, 32)
            idx = rng.integers(len(self.members), size=per)
            batch = np.concatenate(
                [self.members[i].surface_samples(int((idx == i).sum()), rng)
                 for i in range(len(self.members))]
            )
            ok = batch[self.sdf(batch) > -1e-9]
            kept.append(ok)
            total += len(ok)
            if total >= n:
                break
        samples = np.concatenate(kept)
        if len(samples) < n:
            raise RuntimeError("failed to draw enough union surface samples")
        return samples[:n]


def _resting_box(footprint_x: float, footprint_y: float, height: float) -> Box:
    """Box resting on the z=0 table plane, centered on the origin in x/y."""
    he = np.array([footprint_x, footprint_y, height]) / 2.0
    return Box(center=np.array([0.0, 0.0, he[2]]), half_extents=he)


def make_o1() -> Box:
    """First preset: the cuboid on its lateral face, 15.5 x 5.5 cm footprint."""
    return _resting_box(_EDGES_M[0], _EDGES_M[2], _EDGES_M[1])


def make_o2() -> Box:
    """Second preset: the cuboid on its larger base, 15.5 x 8.25 cm footprint."""
    return _resting_box(_EDGES_M[0], _EDGES_M[1], _EDGES_M[2])


def make_o3() -> Box:
    """Third preset: the cuboid upright on its smaller base, 15.5 cm tall."""
    return _resting_box(_EDGES_M[1], _EDGES_M[2], _EDGES_M[0])
