"""Shape-from-touch reconstruction with Gaussian-process implicit surfaces.

Sparse contact points stream into a GP signed-distance estimate with
calibrated uncertainty; the zero level set is extracted as a triangle
mesh colored by posterior variance, and a simulated tactile exploration
harness validates the pipeline against analytic ground-truth objects.
"""

from .geometry import (
    Aabb,
    Box,
    Cylinder,
    RigidPose2D,
    Shape,
    Sphere,
    Union,
    make_o1,
    make_o2,
    make_o3,
)
from .gp import (
    ContactDataset,
    ContactPoint,
    FieldSample,
    GpModel,
    NumericalError,
    SphericalPrior,
    TpsKernel,
    model_from_contacts,
)
from .isosurface import ColoredMesh, GridSpec, VolumeGrid, colorize, marching_cubes, sample_grid
from .metrics import (
    PlacementError,
    ReconReport,
    SessionSummary,
    TrialResult,
    placement_error,
    recon_report,
    summarize,
)
from .scenario import ConfigError, ScenarioConfig, load_config, run_scenario
from .simulate import (
    ExplorationPolicy,
    ProbeRay,
    ProtocolError,
    TrialTimeline,
    WorkspaceFixture,
    explore,
    probe,
)

__version__ = "0.1.0"
