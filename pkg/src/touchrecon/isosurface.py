"""Field sampling on a lattice, marching-cubes extraction, variance coloring.

Marching cubes follows the classic 256-case table (see
:mod:`touchrecon._mc_tables`). Cube corners are numbered

    0 (i,   j,   k)    4 (i,   j,   k+1)
    1 (i+1, j,   k)    5 (i+1, j,   k+1)
    2 (i+1, j+1, k)    6 (i+1, j+1, k+1)
    3 (i,   j+1, k)    7 (i,   j+1, k+1)

and cube edges 0-11 connect corner pairs (0,1) (1,2) (2,3) (3,0) (4,5)
(5,6) (6,7) (7,4) (0,4) (1,5) (2,6) (3,7). Corners with field value
below the iso level are "inside". Vertices are welded per lattice edge:
each crossing edge yields exactly one vertex shared by every incident
triangle, which is what makes interior surfaces closed 2-manifolds.
Extraction is fully vectorized and deterministic (fixed lattice order).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._mc_tables import EDGE_TABLE, TRI_TABLE
from .geometry import Aabb
from .gp import GpModel

__all__ = [
    "GridSpec",
    "VolumeGrid",
    "ColoredMesh",
    "sample_grid",
    "marching_cubes",
    "colorize",
]

COLOR_LOW_VARIANCE = (0, 0, 255)  # blue
COLOR_HIGH_VARIANCE = (255, 0, 0)  # red

# Padded triangle table: (256, 15) edge slots, -1 beyond the case's triangles.
_TRI_PAD = np.full((256, 15), -1, dtype=np.int64)
for _case, _tris in enumerate(TRI_TABLE):
    _TRI_PAD[_case, : len(_tris)] = _tris
_EDGE_TABLE = np.asarray(EDGE_TABLE, dtype=np.int32)


@dataclass(frozen=True)
class GridSpec:
    """Sampling lattice: bounding box split into cells per axis (>= 2 each)."""

    bounds: Aabb
    resolution: tuple

    def __post_init__(self):
        res = tuple(int(r) for r in np.atleast_1d(self.resolution).repeat(
            3 if np.ndim(self.resolution) == 0 else 1))
        if len(res) != 3:
            raise ValueError(f"resolution must be scalar or 3 values, got {self.resolution}")
        if any(r < 2 for r in res):
            raise ValueError(f"resolution must be >= 2 cells per axis, got {res}")
        object.__setattr__(self, "resolution", res)

    @property
    def corner_shape(self) -> tuple:
        nx, ny, nz = self.resolution
        return (nx + 1, ny + 1, nz + 1)

    @property
    def n_corners(self) -> int:
        return int(np.prod(self.corner_shape))

    @property
    def spacing(self) -> np.ndarray:
        return self.bounds.size / np.asarray(self.resolution, dtype=np.float64)

    def axes(self) -> tuple:
        lo, hi = self.bounds.lo, self.bounds.hi
        return tuple(np.linspace(lo[a], hi[a], self.resolution[a] + 1) for a in range(3))

    def lattice_points(self) -> np.ndarray:
        """All corner coordinates, shape (n_corners, 3), C-order in (ix, iy, iz)."""
        xs, ys, zs = self.axes()
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)


@dataclass(frozen=True)
class VolumeGrid:
    """Posterior mean and variance sampled at every lattice corner."""

    spec: GridSpec
    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        shape = self.spec.corner_shape
        for name, arr in (("mean", self.mean), ("var", self.var)):
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")


@dataclass(frozen=True)
class ColoredMesh:
    """Triangle mesh with per-vertex variance and optional RGB colors.

    ``variance_range`` records the (min, max) used by the color ramp so a
    consumer can reconstruct absolute variances from colors.
    """

    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int64
    vertex_variance: np.ndarray  # (V,) float64
    colors: Optional[np.ndarray] = None  # (V, 3) uint8
    variance_range: Optional[tuple] = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        w = np.asarray(self.vertex_variance, dtype=np.float64).reshape(-1)
        if len(w) != len(v):
            raise ValueError("one variance value per vertex required")
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        if len(t) and ((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])).any():
            raise ValueError("degenerate triangle (repeated vertex index)")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "vertex_variance", w)
        if self.colors is not None:
            c = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
            if len(c) != len(v):
                raise ValueError("one color per vertex required")
            object.__setattr__(self, "colors", c)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def is_empty(self) -> bool:
        return len(self.triangles) == 0


def sample_grid(model: GpModel, spec: GridSpec) -> VolumeGrid:
    """Evaluate the posterior at every lattice corner.

    Identical to calling the model pointwise; queries are batched
    internally so grid refreshes stay cheap.
    """
    mu, var = model.predict(spec.lattice_points())
    shape = spec.corner_shape
    return VolumeGrid(spec=spec, mean=mu.reshape(shape), var=var.reshape(shape))


def _edge_vertices(axis: int, mu: np.ndarray, var: np.ndarray, axes: tuple):
    """Crossing positions/variances for all lattice edges along one axis.

    Returns (id_grid, positions, variances): id_grid maps an edge's base
    corner to its vertex index (-1 when the edge does not cross), with
    indices assigned in C order so extraction is deterministic.
    """
    sl_lo = [slice(None)] * 3
    sl_hi = [slice(None)] * 3
    sl_lo[axis] = slice(None, -1)
    sl_hi[axis] = slice(1, None)
    a = mu[tuple(sl_lo)]
    b = mu[tuple(sl_hi)]
    cross = (a < 0.0) != (b < 0.0)
    n = int(cross.sum())
    ids = np.full(a.shape, -1, dtype=np.int64)
    ids[cross] = np.arange(n)

    ia, ja, ka = np.nonzero(cross)
    along = (ia, ja, ka)[axis]
    base = np.stack([axes[0][ia], axes[1][ja], axes[2][ka]], axis=1)
    step = np.zeros((n, 3))
    step[:, axis] = axes[axis][along + 1] - axes[axis][along]

    va = a[cross]
    vb = b[cross]
    t = va / (va - vb)
    pos = base + t[:, None] * step
    wa = var[tuple(sl_lo)][cross]
    wb = var[tuple(sl_hi)][cross]
    return ids, pos, wa + t * (wb - wa)


def marching_cubes(grid: VolumeGrid, iso: float = 0.0) -> ColoredMesh:
    """Extract the iso level set of the mean field as a welded triangle mesh.

    Vertices sit at the linear-interpolation zero crossing of their
    lattice edge and carry the variance interpolated with the same
    weight. A field with no sign change yields an empty mesh. Triangles
    are oriented so normals point toward positive field values (outward
    for an SDF).
    """
    mu = grid.mean - float(iso)
    ins = (mu < 0.0).astype(np.uint8)

    cube_index = (
        ins[:-1, :-1, :-1]
        | ins[1:, :-1, :-1] << 1
        | ins[1:, 1:, :-1] << 2
        | ins[:-1, 1:, :-1] << 3
        | ins[:-1, :-1, 1:] << 4
        | ins[1:, :-1, 1:] << 5
        | ins[1:, 1:, 1:] << 6
        | ins[:-1, 1:, 1:] << 7
    )
    active = _EDGE_TABLE[cube_index] != 0
    if not active.any():
        empty3 = np.empty((0, 3))
        return ColoredMesh(empty3, np.empty((0, 3), dtype=np.int64), np.empty(0))

    axes = grid.spec.axes()
    ids_x, pos_x, var_x = _edge_vertices(0, mu, grid.var, axes)
    ids_y, pos_y, var_y = _edge_vertices(1, mu, grid.var, axes)
    ids_z, pos_z, var_z = _edge_vertices(2, mu, grid.var, axes)
    ids_y += np.where(ids_y >= 0, len(pos_x), 0)
    ids_z += np.where(ids_z >= 0, len(pos_x) + len(pos_y), 0)
    vertices = np.concatenate([pos_x, pos_y, pos_z])
    variance = np.concatenate([var_x, var_y, var_z])

    ci, cj, ck = np.nonzero(active)
    # Vertex index on each of the 12 cube edges, per active cell.
    slots = np.stack(
        [
            ids_x[ci, cj, ck],
            ids_y[ci + 1, cj, ck],
            ids_x[ci, cj + 1, ck],
            ids_y[ci, cj, ck],
            ids_x[ci, cj, ck + 1],
            ids_y[ci + 1, cj, ck + 1],
            ids_x[ci, cj + 1, ck + 1],
            ids_y[ci, cj, ck + 1],
            ids_z[ci, cj, ck],
            ids_z[ci + 1, cj, ck],
            ids_z[ci + 1, cj + 1, ck],
            ids_z[ci, cj + 1, ck],
        ],
        axis=1,
    )
    per_cell = _TRI_PAD[cube_index[ci, cj, ck]]  # (A, 15) edge slots or -1
    gathered = np.take_along_axis(slots, np.maximum(per_cell, 0), axis=1)
    tri = gathered.reshape(-1, 3)[per_cell[:, ::3].reshape(-1) >= 0]
    if tri.min() < 0:
        raise AssertionError("case tables referenced an edge without a crossing")
    # Table order gives inward-facing winding for negative-inside fields; flip.
    tri = tri[:, [0, 2, 1]]
    return ColoredMesh(vertices, tri, variance)


def colorize(mesh: ColoredMesh) -> ColoredMesh:
    """Map per-vertex variance onto a blue-to-red ramp.

    The frame's own variance range is used: minimum maps to blue
    (0, 0, 255), maximum to red (255, 0, 0), linearly in between with
    round-half-up per channel. A constant-variance mesh is all blue.
    The range is recorded in ``variance_range``.
    """
    if mesh.n_vertices == 0:
        return replace(mesh, colors=np.empty((0, 3), dtype=np.uint8),
                       variance_range=(0.0, 0.0))
    vmin = float(mesh.vertex_variance.min())
    vmax = float(mesh.vertex_variance.max())
    if vmax <= vmin:
        t = np.zeros(mesh.n_vertices)
    else:
        t = (mesh.vertex_variance - vmin) / (vmax - vmin)
    colors = np.zeros((mesh.n_vertices, 3), dtype=np.uint8)
    colors[:, 0] = np.floor(255.0 * t + 0.5).astype(np.uint8)
    colors[:, 2] = np.floor(255.0 * (1.0 - t) + 0.5).astype(np.uint8)
    return replace(mesh, colors=colors, variance_range=(vmin, vmax))
