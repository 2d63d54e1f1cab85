"""Reconstruction accuracy and pick-and-place scoring.

Two families of numbers: geometric accuracy of a reconstructed mesh
against the analytic ground truth (SDF residuals, chamfer distance,
coverage, variance split by probed/unprobed surface regions), and the
placement score of a trial, reported as planar centroid distance d (cm)
and long-axis orientation error alpha (degrees, folded by the object's
180-degree symmetry). Session statistics use the sample (n-1) standard
deviation over successful trials and count failures as "k/n".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geometry import RigidPose2D, Shape
from .gp import ContactDataset
from .isosurface import ColoredMesh

__all__ = [
    "PlacementError",
    "placement_error",
    "ReconReport",
    "recon_report",
    "EmptyMeshError",
    "TrialResult",
    "SessionSummary",
    "summarize",
]

# Defaults for surface-sample based metrics: a true-surface sample counts
# as covered within COVERAGE_TOL_M of a mesh vertex, and as probed within
# PROBED_RADIUS_M of any contact.
COVERAGE_TOL_M = 0.01
PROBED_RADIUS_M = 0.02
N_SURFACE_SAMPLES = 10_000


class EmptyMeshError(ValueError):
    """Reconstruction produced no geometry to evaluate."""


@dataclass(frozen=True)
class PlacementError:
    """Placement score: position error d in cm, orientation error in degrees."""

    d_cm: float
    alpha_deg: float

    def __post_init__(self):
        if self.d_cm < 0.0 or not (0.0 <= self.alpha_deg <= 90.0):
            raise ValueError(f"invalid placement error ({self.d_cm}, {self.alpha_deg})")


def placement_error(placed: RigidPose2D, target: RigidPose2D) -> PlacementError:
    """Score a placement against the target pose.

    d is the planar Euclidean centroid distance (reported in cm); alpha
    is the absolute angle between the long axes, folded into [0, 90]
    degrees because a rectangle rotated by 180 degrees is the same
    placement.
    """
    d_m = math.hypot(placed.x - target.x, placed.y - target.y)
    delta = abs(placed.yaw - target.yaw) % math.pi
    if delta > math.pi / 2.0:
        delta = math.pi - delta
    return PlacementError(d_cm=d_m * 100.0, alpha_deg=math.degrees(delta))


@dataclass(frozen=True)
class ReconReport:
    """Accuracy of a reconstructed mesh against ground truth.

    ``coverage`` fractions are over true-surface samples; the probed
    region is the set of samples within ``probed_radius_m`` of any
    contact. Variance means are taken from each sample's nearest mesh
    vertex; they are None when the corresponding region is empty.
    """

    mean_abs_sdf: float
    max_abs_sdf: float
    chamfer: float
    coverage: float
    coverage_probed: Optional[float]
    var_mean_probed: Optional[float]
    var_mean_unprobed: Optional[float]
    n_surface_samples: int
    coverage_tol_m: float
    probed_radius_m: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def recon_report(
    mesh: ColoredMesh,
    truth: Shape,
    contacts: Optional[ContactDataset] = None,
    n_samples: int = N_SURFACE_SAMPLES,
    coverage_tol: float = COVERAGE_TOL_M,
    probed_radius: float = PROBED_RADIUS_M,
    seed: int = 0,
) -> ReconReport:
    """Compare mesh vertices against ``n_samples`` true-surface samples."""
    if mesh.n_vertices == 0:
        raise EmptyMeshError("cannot evaluate an empty reconstruction")
    rng = np.random.default_rng(seed)
    verts = mesh.vertices
    samples = truth.surface_samples(n_samples, rng)

    abs_sdf = np.abs(truth.sdf(verts))
    vert_tree = cKDTree(verts)
    d_sample_to_mesh, nearest_vert = vert_tree.query(samples)
    d_mesh_to_sample, _ = cKDTree(samples).query(verts)
    chamfer = 0.5 * (d_sample_to_mesh.mean() + d_mesh_to_sample.mean())
    covered = d_sample_to_mesh <= coverage_tol

    if contacts is not None and len(contacts) > 0:
        d_to_contact, _ = cKDTree(contacts.positions).query(samples)
        probed = d_to_contact <= probed_radius
    else:
        probed = np.zeros(len(samples), dtype=bool)
    sample_var = mesh.vertex_variance[nearest_vert]

    def _mean(arr: np.ndarray, mask: np.ndarray) -> Optional[float]:
        return float(arr[mask].mean()) if mask.any() else None

    return ReconReport(
        mean_abs_sdf=float(abs_sdf.mean()),
        max_abs_sdf=float(abs_sdf.max()),
        chamfer=float(chamfer),
        coverage=float(covered.mean()),
        coverage_probed=_mean(covered.astype(np.float64), probed),
        var_mean_probed=_mean(sample_var, probed),
        var_mean_unprobed=_mean(sample_var, ~probed),
        n_surface_samples=n_samples,
        coverage_tol_m=coverage_tol,
        probed_radius_m=probed_radius,
    )


@dataclass(frozen=True)
class TrialResult:
    """One trial: placement score (None means failure) and completion time."""

    error: Optional[PlacementError]
    time_s: float

    @property
    def succeeded(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class SessionSummary:
    """Descriptive statistics over a trial list, successes only.

    Means/stds are None when the session has no successes; failures are
    always counted and formatted as "k/n". A single success reports a
    standard deviation of 0 by convention.
    """

    n_trials: int
    n_failures: int
    pos_mean_cm: Optional[float]
    pos_std_cm: Optional[float]
    ori_mean_deg: Optional[float]
    ori_std_deg: Optional[float]
    time_mean_s: Optional[float]
    time_std_s: Optional[float]

    @property
    def failures(self) -> str:
        return f"{self.n_failures}/{self.n_trials}"

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["failures"] = self.failures
        return out


def _mean_std(values: Sequence[float]) -> tuple:
    v = np.asarray(values, dtype=np.float64)
    if len(v) == 0:
        return None, None
    std = 0.0 if len(v) == 1 else float(v.std(ddof=1))
    return float(v.mean()), std


def summarize(trials: Sequence[TrialResult]) -> SessionSummary:
    """Aggregate a session of trials into mean/std rows and failure counts."""
    if len(trials) == 0:
        raise ValueError("trial list must be non-empty")
    ok = [t for t in trials if t.succeeded]
    pos_mean, pos_std = _mean_std([t.error.d_cm for t in ok])
    ori_mean, ori_std = _mean_std([t.error.alpha_deg for t in ok])
    time_mean, time_std = _mean_std([t.time_s for t in ok])
    return SessionSummary(
        n_trials=len(trials),
        n_failures=len(trials) - len(ok),
        pos_mean_cm=pos_mean,
        pos_std_cm=pos_std,
        ori_mean_deg=ori_mean,
        ori_std_deg=ori_std,
        time_mean_s=time_mean,
        time_std_s=time_std,
    )
