import numpy as np
import pytest

from touchrecon.geometry import Aabb
from touchrecon.gp import SphericalPrior, TpsKernel

WORKSPACE = Aabb(lo=(-0.30, -0.30, 0.0), hi=(0.30, 0.30, 0.40))


@pytest.fixture
def kernel() -> TpsKernel:
    return TpsKernel(scale=WORKSPACE.diagonal)


@pytest.fixture
def prior() -> SphericalPrior:
    return SphericalPrior(center=(0.0, 0.0, 0.06), radius=0.08)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


def random_contact_positions(rng, n, center=(0.0, 0.0, 0.06), spread=0.08,
                             min_sep=1.5e-3) -> np.ndarray:
    """Well-separated random positions in a desk-scale ball."""
    center = np.asarray(center, dtype=float)
    pts: list[np.ndarray] = []
    while len(pts) < n:
        p = center + rng.uniform(-spread, spread, 3)
        if all(np.linalg.norm(p - q) > min_sep for q in pts):
            pts.append(p)
    return np.array(pts)
