"""Gaussian-process implicit surface over sparse contact points.

The estimated object is a signed distance field. Contact positions form
the training set X with implicit targets Y = 0 (every contact lies on
the surface), a spherical signed-distance prior supplies the mean
function, and a cubic polyharmonic ("thin-plate") covariance supplies
the kernel. The posterior at query points ``Q`` is

    mean(Q) = prior(Q) + Kq' inv(K + D) (0 - prior(X))
    var(Q)  = k(q, q)  - kq' inv(K + D) kq

with ``D`` the diagonal of measurement noise plus a small stabilizing
jitter. The Cholesky factor of (K + D) is cached and extended by one
row per accepted contact, so streaming updates cost O(N^2) instead of a
full O(N^3) refactorization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.spatial.distance import cdist

from .geometry import as_point3

__all__ = [
    "NumericalError",
    "ContactPoint",
    "ContactDataset",
    "SphericalPrior",
    "TpsKernel",
    "FieldSample",
    "GpModel",
    "DEDUP_RADIUS_M",
]

# Contacts closer than this to an existing one are rejected: below tactile
# localization accuracy, and keeps the Gram matrix away from singularity.
DEDUP_RADIUS_M = 1e-3

# Variance this far below zero is round-off; anything lower is a failure.
VAR_CLAMP_FLOOR = -1e-9

_QUERY_CHUNK = 32768


class NumericalError(RuntimeError):
    """Factorization breakdown or an impossible posterior value."""


@dataclass(frozen=True)
class ContactPoint:
    """A single surface contact: position, virtual-clock time, sensor label."""

    position: np.ndarray
    t_ms: float = 0.0
    sensor_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "position", as_point3(self.position))
        object.__setattr__(self, "t_ms", float(self.t_ms))
        object.__setattr__(self, "sensor_id", int(self.sensor_id))


class ContactDataset:
    """Ordered, deduplicated contact positions (the training set X).

    Targets are identically zero and never stored. Appends are rejected
    (returning False) when the new position lies within ``dedup_radius``
    of an existing contact; timestamps must be non-decreasing.
    """

    def __init__(self, dedup_radius: float = DEDUP_RADIUS_M):
        if not dedup_radius >= 0.0:
            raise ValueError("dedup_radius must be >= 0")
        self.dedup_radius = float(dedup_radius)
        self._contacts: list[ContactPoint] = []
        self._positions = np.empty((0, 3), dtype=np.float64)

    def __len__(self) -> int:
        return len(self._contacts)

    def __iter__(self):
        return iter(self._contacts)

    @property
    def positions(self) -> np.ndarray:
        """(N, 3) array view of contact positions, in insertion order."""
        return self._positions

    @property
    def contacts(self) -> tuple:
        return tuple(self._contacts)

    def accepts(self, contact: ContactPoint) -> bool:
        if len(self) == 0:
            return True
        d = np.linalg.norm(self._positions - contact.position, axis=1)
        return bool(d.min() > self.dedup_radius)

    def append(self, contact: ContactPoint) -> bool:
        if self._contacts and contact.t_ms < self._contacts[-1].t_ms:
            raise ValueError(
                f"timestamps must be non-decreasing: {contact.t_ms} after "
                f"{self._contacts[-1].t_ms}")
        if not self.accepts(contact):
            return False
        self._contacts.append(contact)
        self._positions = np.concatenate([self._positions, contact.position[None, :]])
        return True

    def copy(self) -> "ContactDataset":
        out = ContactDataset(self.dedup_radius)
        out._contacts = list(self._contacts)
        out._positions = self._positions.copy()
        return out


@dataclass(frozen=True)
class SphericalPrior:
    """Mean function: exact signed distance to a fixed sphere.

    Using a signed-distance prior lets surface-only (Y = 0) contacts
    define a closed estimate without artificial interior/exterior
    training points: far from data the field reverts to the sphere.
    """

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point3(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0.0:
            raise ValueError(f"prior radius must be > 0, got {self.radius}")

    def mean(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return np.linalg.norm(p - self.center, axis=-1) - self.radius


@dataclass(frozen=True)
class TpsKernel:
    """Cubic polyharmonic covariance k(d) = 2 d^3 - 3 R d^2 + R^3.

    ``scale`` (R) must be at least the largest distance between points
    the kernel will see: k decreases from R^3 at d = 0 to 0 at d = R and
    would grow again beyond. Choosing R as the workspace diagonal keeps
    every pairwise evaluation on the decreasing branch.
    """

    scale: float

    def __post_init__(self):
        object.__setattr__(self, "scale", float(self.scale))
        if not self.scale > 0.0:
            raise ValueError(f"kernel scale must be > 0, got {self.scale}")

    @property
    def zero_distance_value(self) -> float:
        """k(0) = R^3, the prior variance of the field."""
        return self.scale**3

    def at_distance(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=np.float64)
        r = self.scale
        return 2.0 * d**3 - 3.0 * r * d**2 + r**3

    def __call__(self, a, b) -> float:
        return float(self.at_distance(np.linalg.norm(as_point3(a) - as_point3(b))))

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Kernel matrix between point sets of shapes (N, 3) and (M, 3)."""
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(b, dtype=np.float64))
        return self.at_distance(cdist(a, b))


class FieldSample(NamedTuple):
    """Posterior field values: SDF mean(s) and variance(s)."""

    mean: np.ndarray
    var: np.ndarray


class GpModel:
    """Streaming GP posterior over the contact dataset.

    Single-writer: :meth:`add_contact` and :meth:`refit` need exclusive
    access, queries are read-only. ``noise`` is the measurement noise
    variance (sigma_n^2, in squared SDF units); a diagonal jitter starting
    at ``1e-10 * k(0)`` is always added for stability and escalates
    tenfold on factorization breakdown, up to ``1e-6 * k(0)``, before a
    :class:`NumericalError` is raised.
    """

    JITTER_INITIAL_REL = 1e-10
    JITTER_MAX_REL = 1e-6
    NOISE_DEFAULT_REL = 1e-6

    def __init__(
        self,
        kernel: TpsKernel,
        prior: SphericalPrior,
        noise: Optional[float] = None,
        dedup_radius: float = DEDUP_RADIUS_M,
        _dataset: Optional[ContactDataset] = None,
        _jitter: Optional[float] = None,
    ):
        self.kernel = kernel
        self.prior = prior
        k0 = kernel.zero_distance_value
        self.noise = k0 * self.NOISE_DEFAULT_REL if noise is None else float(noise)
        if self.noise < 0.0:
            raise ValueError(f"noise variance must be >= 0, got {self.noise}")
        self._jitter = k0 * self.JITTER_INITIAL_REL if _jitter is None else float(_jitter)
        self._data = ContactDataset(dedup_radius) if _dataset is None else _dataset
        self._chol: Optional[np.ndarray] = None  # lower-triangular factor of K + D
        self._alpha: Optional[np.ndarray] = None  # solve(K + D, -prior(X))
        if len(self._data) > 0:
            self._factorize()

    # -- bookkeeping ------------------------------------------------------

    @property
    def n_contacts(self) -> int:
        return len(self._data)

    @property
    def dataset(self) -> ContactDataset:
        return self._data

    @property
    def jitter(self) -> float:
        return self._jitter

    @property
    def effective_noise(self) -> float:
        """Actual diagonal added to K: measurement noise plus jitter."""
        return self.noise + self._jitter

    def _diag(self) -> float:
        return self.kernel.zero_distance_value + self.effective_noise

    def _refresh_alpha(self) -> None:
        resid = -self.prior.mean(self._data.positions)
        z = solve_triangular(self._chol, resid, lower=True)
        self._alpha = solve_triangular(self._chol.T, z, lower=False)

    def _factorize(self) -> None:
        """Build the Cholesky factor from scratch, escalating jitter on failure."""
        x = self._data.positions
        k0 = self.kernel.zero_distance_value
        gram = self.kernel.pairwise(x, x)
        while True:
            try:
                a = gram + (self.noise + self._jitter) * np.eye(len(x))
                self._chol = cholesky(a, lower=True)
                break
            except np.linalg.LinAlgError:
                if self._jitter * 10.0 > k0 * self.JITTER_MAX_REL * (1 + 1e-12):
                    raise NumericalError(
                        f"Gram matrix not positive definite at max jitter "
                        f"{k0 * self.JITTER_MAX_REL:g}") from None
                self._jitter *= 10.0
        self._refresh_alpha()

    # -- mutation ---------------------------------------------------------

    def add_contact(self, contact: ContactPoint) -> bool:
        """Register one contact. Returns False when deduplication rejects it.

        Accepted contacts extend the cached factor by one row/column;
        the O(N^3) rebuild only happens if the appended pivot fails and
        jitter must escalate.
        """
        if not self._data.accepts(contact):
            return False
        if self.n_contacts == 0:
            self._data.append(contact)
            self._factorize()
            return True

        old_x = self._data.positions
        cross = self.kernel.pairwise(old_x, contact.position[None, :])[:, 0]
        row = solve_triangular(self._chol, cross, lower=True)
        pivot2 = self._diag() - float(row @ row)
        self._data.append(contact)
        if pivot2 <= 0.0:
            # Appended pivot lost positivity: escalate jitter and rebuild.
            k0 = self.kernel.zero_distance_value
            if self._jitter * 10.0 > k0 * self.JITTER_MAX_REL * (1 + 1e-12):
                raise NumericalError(
                    "contact dataset is ill-conditioned: non-positive pivot "
                    f"at max jitter {k0 * self.JITTER_MAX_REL:g}")
            self._jitter *= 10.0
            self._factorize()
            return True
        n = self.n_contacts
        grown = np.zeros((n, n), dtype=np.float64)
        grown[: n - 1, : n - 1] = self._chol
        grown[n - 1, : n - 1] = row
        grown[n - 1, n - 1] = np.sqrt(pivot2)
        self._chol = grown
        self._refresh_alpha()
        return True

    def refit(self) -> "GpModel":
        """From-scratch rebuild with the same data and hyperparameters.

        Serves as the oracle for the incremental path: posterior answers
        must agree within round-off accumulation (1e-8 relative).
        """
        return GpModel(
            kernel=self.kernel,
            prior=self.prior,
            noise=self.noise,
            _dataset=self._data.copy(),
            _jitter=self._jitter,
        )

    # -- queries ----------------------------------------------------------

    def _query_points(self, queries) -> np.ndarray:
        q = np.asarray(queries, dtype=np.float64)
        if q.ndim == 1:
            q = q[None, :]
        if q.ndim != 2 or q.shape[1] != 3:
            raise ValueError(f"queries must have shape (M, 3), got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("queries contain non-finite coordinates")
        return q

    def mean(self, queries) -> np.ndarray:
        """Posterior SDF mean at each query point."""
        q = self._query_points(queries)
        out = self.prior.mean(q)
        if self.n_contacts == 0:
            return out
        x = self._data.positions
        for lo in range(0, len(q), _QUERY_CHUNK):
            chunk = q[lo : lo + _QUERY_CHUNK]
            ks = self.kernel.pairwise(x, chunk)
            out[lo : lo + _QUERY_CHUNK] += ks.T @ self._alpha
        return out

    def variance(self, queries) -> np.ndarray:
        """Posterior variance at each query point (clamped round-off only)."""
        return self.predict(queries).var

    def predict(self, queries) -> FieldSample:
        """Posterior mean and variance in one pass over the query batch."""
        q = self._query_points(queries)
        k0 = self.kernel.zero_distance_value
        mu = self.prior.mean(q)
        if self.n_contacts == 0:
            return FieldSample(mu, np.full(len(q), k0))
        var = np.empty(len(q), dtype=np.float64)
        x = self._data.positions
        for lo in range(0, len(q), _QUERY_CHUNK):
            chunk = q[lo : lo + _QUERY_CHUNK]
            ks = self.kernel.pairwise(x, chunk)
            mu[lo : lo + _QUERY_CHUNK] += ks.T @ self._alpha
            w = solve_triangular(self._chol, ks, lower=True)
            var[lo : lo + _QUERY_CHUNK] = k0 - np.einsum("ij,ij->j", w, w)
        low = var.min()
        if low < VAR_CLAMP_FLOOR:
            raise NumericalError(f"posterior variance {low:g} below clamp floor")
        np.clip(var, 0.0, None, out=var)
        return FieldSample(mu, var)


def model_from_contacts(
    contacts: Sequence[ContactPoint],
    kernel: TpsKernel,
    prior: SphericalPrior,
    noise: Optional[float] = None,
    dedup_radius: float = DEDUP_RADIUS_M,
) -> GpModel:
    """Build a model by streaming ``contacts`` through deduplication."""
    model = GpModel(kernel, prior, noise=noise, dedup_radius=dedup_radius)
    for c in contacts:
        model.add_contact(c)
    return model
