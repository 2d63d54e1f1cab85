"""Simulated tactile exploration against analytic ground-truth shapes.

A scripted probing policy stands in for the human operator: rays are
cast at the object, contacts are found by sphere tracing the analytic
SDF, perturbed with isotropic Gaussian sensor noise, and clamped into
the workspace fixture box. The trial clock is virtual (explicit ticks),
so every run is deterministic under a fixed seed.

The trial itself follows a three-phase protocol: search until first
contact, reconstruct under a 20 s green timer, then place under a 120 s
blue timer; letting the blue timer expire fails the trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import Aabb, Shape, as_point3
from .gp import ContactPoint

__all__ = [
    "WorkspaceFixture",
    "ProbeRay",
    "ExplorationPolicy",
    "POLICY_KINDS",
    "probe",
    "explore",
    "TrialTimeline",
    "ProtocolError",
    "GREEN_PHASE_S",
    "BLUE_PHASE_S",
    "CONTACT_TOL_M",
    "MIN_STEP_M",
]

# Sphere-tracing constants: report contact when |sdf| drops below
# CONTACT_TOL_M; never step less than MIN_STEP_M so grazing rays terminate.
CONTACT_TOL_M = 0.05e-3
MIN_STEP_M = 0.1e-3

# Countdown durations of the reconstruction (green) and placement (blue)
# phases of a trial.
GREEN_PHASE_S = 20.0
BLUE_PHASE_S = 120.0

POLICY_KINDS = ("radial_inward", "top_down_grid", "random_directions")

DEFAULT_FIXTURE = Aabb(lo=(-0.30, -0.30, 0.0), hi=(0.30, 0.30, 0.40))


@dataclass(frozen=True)
class WorkspaceFixture:
    """Virtual fixture: motion (and thus every contact) is confined to a box."""

    allowed: Aabb = DEFAULT_FIXTURE

    def clamp(self, points) -> np.ndarray:
        return self.allowed.clamp(points)


@dataclass(frozen=True)
class ProbeRay:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", as_point3(self.origin))
        d = as_point3(self.direction)
        norm = float(np.linalg.norm(d))
        if abs(norm - 1.0) > 1e-12:
            if norm == 0.0:
                raise ValueError("direction must be nonzero")
            d = d / norm
        object.__setattr__(self, "direction", d)

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


def probe(shape: Shape, ray: ProbeRay, max_dist: float) -> Optional[np.ndarray]:
    """Sphere-trace the shape's SDF along the ray.

    Steps by the current |sdf| with a floor of MIN_STEP_M; returns the
    trace point (pre-noise) once |sdf| < CONTACT_TOL_M, or None when the
    march exceeds ``max_dist``. Rays tangent within the tolerance band
    may legitimately report either outcome.
    """
    if not max_dist > 0.0:
        raise ValueError("max_dist must be > 0")
    t = 0.0
    while t <= max_dist:
        p = ray.at(t)
        d = float(shape.sdf(p))
        if abs(d) < CONTACT_TOL_M:
            return p
        t += max(abs(d), MIN_STEP_M)
    return None


def _launch_point(rng: np.random.Generator, center: np.ndarray, standoff: float) -> np.ndarray:
    """Uniform point on the launch sphere, kept above the table plane (z >= 0)."""
    while True:
        u = rng.normal(size=3)
        n = np.linalg.norm(u)
        if n < 1e-12:
            continue
        p = center + standoff * (u / n)
        if p[2] >= 0.0:
            return p


@dataclass(frozen=True)
class ExplorationPolicy:
    """Scripted probing strategy replacing the human operator.

    ``center``/``standoff`` define the launch dome (normally the prior
    semi-sphere): probes start ``standoff`` meters from ``center``,
    never below the table plane. ``noise_sigma`` is the isotropic
    Gaussian sensor noise applied to each contact position. Identical
    parameters and seed reproduce the contact sequence bit for bit.
    """

    kind: str
    n_probes: int
    seed: int
    noise_sigma: float = 0.5e-3
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    standoff: float = 0.25
    dt_ms: float = 50.0  # virtual time between probe attempts

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.n_probes < 1:
            raise ValueError(f"n_probes must be >= 1, got {self.n_probes}")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")
        if not self.standoff > 0.0:
            raise ValueError("standoff must be > 0")
        if not self.dt_ms > 0.0:
            raise ValueError("dt_ms must be > 0")
        object.__setattr__(self, "center", as_point3(self.center))

    def rays(self) -> list:
        """The deterministic probe schedule for this policy."""
        rng = np.random.default_rng(self.seed)
        out = []
        if self.kind == "top_down_grid":
            side = math.ceil(math.sqrt(self.n_probes))
            xs = np.linspace(-self.standoff, self.standoff, side) + self.center[0]
            ys = np.linspace(-self.standoff, self.standoff, side) + self.center[1]
            height = self.center[2] + self.standoff
            for j in range(side):
                for i in range(side):
                    out.append(ProbeRay(origin=(xs[i], ys[j], height),
                                        direction=(0.0, 0.0, -1.0)))
            return out[: self.n_probes]
        for _ in range(self.n_probes):
            origin = _launch_point(rng, self.center, self.standoff)
            if self.kind == "radial_inward":
                target = self.center
            else:  # random_directions: aim near, not exactly at, the center
                target = self.center + rng.uniform(-0.2, 0.2, size=3) * self.standoff
            direction = target - origin
            if np.linalg.norm(direction) < 1e-12:
                direction = self.center - origin
            out.append(ProbeRay(origin=origin, direction=direction))
        return out


def explore(policy: ExplorationPolicy, shape: Shape,
            fixture: WorkspaceFixture = WorkspaceFixture()) -> list:
    """Run the probe schedule; return the resulting contact points.

    Misses produce nothing. Each contact position gets Gaussian noise of
    ``policy.noise_sigma`` and is clamped into the fixture; timestamps
    are the (strictly increasing) virtual attempt times. An empty list
    means nothing was touched; the caller decides whether that fails.
    """
    rng = np.random.default_rng(np.random.SeedSequence([policy.seed, 1]))
    max_dist = 2.0 * policy.standoff
    contacts = []
    for i, ray in enumerate(policy.rays()):
        hit = probe(shape, ray, max_dist)
        if hit is None:
            continue
        pos = hit if policy.noise_sigma == 0.0 else hit + rng.normal(0.0, policy.noise_sigma, 3)
        contacts.append(ContactPoint(position=fixture.clamp(pos),
                                     t_ms=(i + 1) * policy.dt_ms))
    return contacts


class ProtocolError(RuntimeError):
    """An event was applied in a phase where it is not legal."""


SEARCHING = "searching"
RECONSTRUCTING = "reconstructing"
PLACING = "placing"
DONE = "done"


@dataclass(frozen=True)
class TrialTimeline:
    """Trial phase state machine driven by a virtual clock.

    Phases: searching -> (first_contact) -> reconstructing for exactly
    GREEN_PHASE_S -> placing for at most BLUE_PHASE_S -> done. The
    outcome is "success" if the object was placed before the blue timer
    expired, "timeout" otherwise. Tick overflow carries across a phase
    boundary so the green phase lasts exactly its duration.
    """

    phase: str = SEARCHING
    t_s: float = 0.0
    green_remaining: Optional[float] = None
    blue_remaining: Optional[float] = None
    outcome: Optional[str] = None
    phase_entries: tuple = ((SEARCHING, 0.0),)

    def _enter(self, phase: str, t: float, **kw) -> "TrialTimeline":
        return TrialTimeline(phase=phase, t_s=t,
                             phase_entries=self.phase_entries + ((phase, t),), **kw)

    def first_contact(self) -> "TrialTimeline":
        if self.phase != SEARCHING:
            raise ProtocolError(f"first_contact is only legal while searching, not {self.phase}")
        return self._enter(RECONSTRUCTING, self.t_s, green_remaining=GREEN_PHASE_S)

    def tick(self, dt_s: float) -> "TrialTimeline":
        if dt_s < 0.0:
            raise ValueError("dt_s must be >= 0")
        if self.phase == DONE:
            raise ProtocolError("trial is already done")
        if self.phase == SEARCHING:
            return TrialTimeline(phase=SEARCHING, t_s=self.t_s + dt_s,
                                 phase_entries=self.phase_entries)
        if self.phase == RECONSTRUCTING:
            if dt_s < self.green_remaining:
                return TrialTimeline(phase=RECONSTRUCTING, t_s=self.t_s + dt_s,
                                     green_remaining=self.green_remaining - dt_s,
                                     phase_entries=self.phase_entries)
            spill = dt_s - self.green_remaining
            nxt = self._enter(PLACING, self.t_s + self.green_remaining,
                              blue_remaining=BLUE_PHASE_S)
            return nxt.tick(spill) if spill > 0.0 else nxt
        # placing
        if dt_s < self.blue_remaining:
            return TrialTimeline(phase=PLACING, t_s=self.t_s + dt_s,
                                 blue_remaining=self.blue_remaining - dt_s,
                                 phase_entries=self.phase_entries)
        return self._enter(DONE, self.t_s + self.blue_remaining, outcome="timeout")

    def placed(self) -> "TrialTimeline":
        if self.phase != PLACING:
            raise ProtocolError(f"placed is only legal while placing, not {self.phase}")
        return self._enter(DONE, self.t_s, outcome="success")
