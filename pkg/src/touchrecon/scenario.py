"""Scenario configuration and end-to-end run orchestration.

A scenario file (YAML or JSON) selects the ground-truth object, prior,
kernel, probing policy, sampling grid, and fixture box. Running a
scenario explores the object, streams contacts into the GP model while
driving the trial-phase timeline, periodically extracts variance-colored
snapshot meshes, and writes the artifact set: contact log, snapshots,
final mesh, accuracy report, timeline log, update stream, and a hashed
manifest. All artifact timestamps come from the virtual trial clock, so
a fixed seed reproduces every byte (the ``deterministic`` flag
additionally strips wall-clock metadata from the manifest).
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import io_formats
from .geometry import Aabb, Box, Shape, Sphere, make_o1, make_o2, make_o3
from .gp import ContactPoint, GpModel, SphericalPrior, TpsKernel
from .isosurface import ColoredMesh, GridSpec, colorize, marching_cubes, sample_grid
from .metrics import EmptyMeshError, recon_report
from .simulate import (
    GREEN_PHASE_S,
    POLICY_KINDS,
    ExplorationPolicy,
    TrialTimeline,
    WorkspaceFixture,
    explore,
)

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "run_scenario"]

OBJECT_KINDS = ("sphere", "o1", "o2", "o3", "box")


class ConfigError(ValueError):
    """A scenario file failed validation; the message names the bad key."""


def _as_vec3(value, key: str) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a list of 3 numbers, got {value!r}") from None
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ConfigError(f"{key} must be 3 finite numbers, got {value!r}")
    return v


def _as_num(value, key: str, minimum: Optional[float] = None, strict: bool = False) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    v = float(value)
    if minimum is not None and (v <= minimum if strict else v < minimum):
        op = ">" if strict else ">="
        raise ConfigError(f"{key} must be {op} {minimum}, got {value!r}")
    return v


def _as_int(value, key: str, minimum: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return value


def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{name} must be a mapping, got {sec!r}")
    return sec


def _reject_unknown(d: dict, known: Sequence[str], prefix: str = "") -> None:
    for k in d:
        if k not in known:
            raise ConfigError(f"unknown key {prefix}{k!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully resolved scenario, ready to run."""

    shape: Shape
    prior: SphericalPrior
    kernel: TpsKernel
    noise: Optional[float]
    policy: ExplorationPolicy
    grid: GridSpec
    fixture: WorkspaceFixture
    out_dir: Path
    snapshot_every: int
    placement_s: float
    deterministic: bool
    normalized: dict

    @staticmethod
    def from_dict(cfg: dict, seed: Optional[int] = None,
                  out_dir: Optional[str] = None,
                  deterministic: Optional[bool] = None) -> "ScenarioConfig":
        """Validate and resolve a raw config mapping.

        ``seed``/``out_dir``/``deterministic`` are command-line overrides.
        """
        if not isinstance(cfg, dict):
            raise ConfigError(f"config root must be a mapping, got {type(cfg).__name__}")
        _reject_unknown(cfg, ("object", "sphere", "box", "prior", "kernel_scale",
                              "noise", "policy", "grid", "fixture", "run"))

        kind = cfg.get("object")
        if kind not in OBJECT_KINDS:
            raise ConfigError(f"object must be one of {OBJECT_KINDS}, got {kind!r}")
        if kind == "sphere":
            sec = _section(cfg, "sphere")
            _reject_unknown(sec, ("center", "radius"), "sphere.")
            radius = _as_num(sec.get("radius", 0.06), "sphere.radius", 0.0, strict=True)
            center = _as_vec3(sec.get("center", [0.0, 0.0, radius]), "sphere.center")
            shape: Shape = Sphere(center=center, radius=radius)
            obj_center = center
        elif kind == "box":
            sec = _section(cfg, "box")
            _reject_unknown(sec, ("center", "extents", "yaw"), "box.")
            if "extents" not in sec:
                raise ConfigError("box.extents is required when object is 'box'")
            extents = _as_vec3(sec["extents"], "box.extents")
            if not np.all(extents > 0.0):
                raise ConfigError(f"box.extents must be > 0, got {sec['extents']!r}")
            center = _as_vec3(sec.get("center", [0.0, 0.0, extents[2] / 2.0]), "box.center")
            yaw = _as_num(sec.get("yaw", 0.0), "box.yaw")
            shape = Box(center=center, half_extents=extents / 2.0, yaw=yaw)
            obj_center = center
        else:
            shape = {"o1": make_o1, "o2": make_o2, "o3": make_o3}[kind]()
            obj_center = shape.center

        sec = _section(cfg, "prior")
        _reject_unknown(sec, ("center", "radius"), "prior.")
        prior = SphericalPrior(
            center=_as_vec3(sec.get("center", obj_center), "prior.center"),
            radius=_as_num(sec.get("radius", 0.10), "prior.radius", 0.0, strict=True),
        )

        sec = _section(cfg, "fixture")
        _reject_unknown(sec, ("lo", "hi"), "fixture.")
        lo = _as_vec3(sec.get("lo", [-0.30, -0.30, 0.0]), "fixture.lo")
        hi = _as_vec3(sec.get("hi", [0.30, 0.30, 0.40]), "fixture.hi")
        if np.any(lo >= hi):
            raise ConfigError(f"fixture.lo must be < fixture.hi, got {lo} vs {hi}")
        fixture = WorkspaceFixture(Aabb(lo=lo, hi=hi))

        scale = cfg.get("kernel_scale")
        if scale is None:
            # Workspace diagonal: largest possible pairwise distance, which
            # keeps the kernel on its decreasing branch.
            scale = fixture.allowed.diagonal
        kernel = TpsKernel(_as_num(scale, "kernel_scale", 0.0, strict=True))

        noise = cfg.get("noise")
        if noise is not None:
            noise = _as_num(noise, "noise", 0.0)

        sec = _section(cfg, "policy")
        _reject_unknown(sec, ("kind", "probes", "seed", "noise_sigma", "standoff",
                              "center", "dt_ms"), "policy.")
        if seed is None:
            if "seed" not in sec:
                raise ConfigError("policy.seed is required (no implicit entropy)")
            seed = _as_int(sec["seed"], "policy.seed", 0)
        probes = _as_int(sec.get("probes", 300), "policy.probes", 1)
        dt_ms = sec.get("dt_ms")
        if dt_ms is None:
            # All probe attempts fit inside the reconstruction window.
            dt_ms = min(50.0, GREEN_PHASE_S * 1000.0 / (probes + 1))
        policy_kind = sec.get("kind", "radial_inward")
        if policy_kind not in POLICY_KINDS:
            raise ConfigError(f"policy.kind must be one of {POLICY_KINDS}, got {policy_kind!r}")
        policy = ExplorationPolicy(
            kind=policy_kind,
            n_probes=probes,
            seed=seed,
            noise_sigma=_as_num(sec.get("noise_sigma", 0.5e-3), "policy.noise_sigma", 0.0),
            center=_as_vec3(sec.get("center", prior.center), "policy.center"),
            standoff=_as_num(sec.get("standoff", prior.radius), "policy.standoff",
                             0.0, strict=True),
            dt_ms=_as_num(dt_ms, "policy.dt_ms", 0.0, strict=True),
        )

        sec = _section(cfg, "grid")
        _reject_unknown(sec, ("lo", "hi", "center", "size", "resolution"), "grid.")
        if "lo" in sec or "hi" in sec:
            if not ("lo" in sec and "hi" in sec):
                raise ConfigError("grid.lo and grid.hi must be given together")
            glo = _as_vec3(sec["lo"], "grid.lo")
            ghi = _as_vec3(sec["hi"], "grid.hi")
        elif "center" in sec or "size" in sec:
            gc = _as_vec3(sec.get("center", prior.center), "grid.center")
            size = sec.get("size", 0.20)
            gs = (np.full(3, _as_num(size, "grid.size", 0.0, strict=True))
                  if np.ndim(size) == 0 else _as_vec3(size, "grid.size"))
            glo, ghi = gc - gs / 2.0, gc + gs / 2.0
        else:
            glo, ghi = fixture.allowed.lo, fixture.allowed.hi
        res = sec.get("resolution", 48)
        try:
            grid = GridSpec(bounds=Aabb(lo=glo, hi=ghi), resolution=res)
        except ValueError as e:
            raise ConfigError(f"grid: {e}") from None

        sec = _section(cfg, "run")
        _reject_unknown(sec, ("out_dir", "snapshot_every", "placement_s",
                              "deterministic"), "run.")
        if out_dir is None:
            out_dir = sec.get("out_dir", "out")
        if not isinstance(out_dir, str):
            raise ConfigError(f"run.out_dir must be a string, got {out_dir!r}")
        snapshot_every = _as_int(sec.get("snapshot_every", 5), "run.snapshot_every", 0)
        placement_s = _as_num(sec.get("placement_s", 10.0), "run.placement_s", 0.0)
        if deterministic is None:
            deterministic = bool(sec.get("deterministic", False))

        normalized = {
            "object": kind,
            "shape": _shape_dict(shape),
            "prior": {"center": prior.center.tolist(), "radius": prior.radius},
            "kernel_scale": kernel.scale,
            "noise": noise,
            "policy": {
                "kind": policy.kind, "probes": policy.n_probes, "seed": policy.seed,
                "noise_sigma": policy.noise_sigma, "center": policy.center.tolist(),
                "standoff": policy.standoff, "dt_ms": policy.dt_ms,
            },
            "grid": {"lo": glo.tolist(), "hi": ghi.tolist(), "resolution": list(grid.resolution)},
            "fixture": {"lo": lo.tolist(), "hi": hi.tolist()},
            "run": {"snapshot_every": snapshot_every, "placement_s": placement_s,
                    "deterministic": deterministic},
        }
        return ScenarioConfig(
            shape=shape, prior=prior, kernel=kernel, noise=noise, policy=policy,
            grid=grid, fixture=fixture, out_dir=Path(out_dir),
            snapshot_every=snapshot_every, placement_s=placement_s,
            deterministic=deterministic, normalized=normalized,
        )

    def make_model(self) -> GpModel:
        return GpModel(kernel=self.kernel, prior=self.prior, noise=self.noise)


def _shape_dict(shape: Shape) -> dict:
    if isinstance(shape, Sphere):
        return {"kind": "sphere", "center": shape.center.tolist(), "radius": shape.radius}
    if isinstance(shape, Box):
        return {"kind": "box", "center": shape.center.tolist(),
                "half_extents": shape.half_extents.tolist(), "yaw": shape.yaw}
    return {"kind": type(shape).__name__.lower()}


def load_config(path, **overrides) -> ScenarioConfig:
    """Load and validate a YAML/JSON scenario file."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    try:
        data = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML/JSON: {e}") from None
    return ScenarioConfig.from_dict(data, **overrides)


def _extract(model: GpModel, grid: GridSpec) -> ColoredMesh:
    return colorize(marching_cubes(sample_grid(model, grid)))


def run_scenario(config: ScenarioConfig,
                 contacts: Optional[Sequence[ContactPoint]] = None) -> dict:
    """Run (or, given ``contacts``, replay) a scenario; return artifact paths.

    Contacts are streamed into the model in timestamp order while the
    trial timeline advances; contacts arriving after the reconstruction
    window closes are dropped, matching the live protocol. Raises
    :class:`ConfigError`, :class:`EmptyMeshError`, OSError, or
    :class:`touchrecon.gp.NumericalError` on the distinct failure modes.
    """
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)

    if contacts is None:
        contacts = explore(config.policy, config.shape, config.fixture)
    else:
        contacts = list(contacts)

    model = config.make_model()
    timeline = TrialTimeline()
    updates = []
    artifacts = {}
    accepted = dropped = 0
    for c in contacts:
        t_c = c.t_ms / 1000.0
        if timeline.phase == "searching":
            timeline = timeline.tick(max(0.0, t_c - timeline.t_s)).first_contact()
        else:
            timeline = timeline.tick(max(0.0, t_c - timeline.t_s))
        if timeline.phase != "reconstructing":
            dropped += 1
            continue
        if not model.add_contact(c):
            continue
        accepted += 1
        if config.snapshot_every and accepted % config.snapshot_every == 0:
            mesh = _extract(model, config.grid)
            mesh_path = None
            if not mesh.is_empty():
                mesh_path = snap_dir / f"mesh_{accepted:05d}.ply"
                io_formats.write_ply(mesh, mesh_path)
                artifacts[f"snapshot_{accepted:05d}"] = mesh_path
                mesh_path = str(mesh_path.relative_to(out))
            var_lo, var_hi = mesh.variance_range if mesh.variance_range else (0.0, 0.0)
            updates.append(io_formats.UpdateMessage(
                seq=len(updates), t_ms=c.t_ms, n_contacts=model.n_contacts,
                n_vertices=mesh.n_vertices, n_triangles=mesh.n_triangles,
                var_min=var_lo, var_max=var_hi, mesh_path=mesh_path))

    if model.n_contacts == 0:
        raise EmptyMeshError("no usable contacts; nothing to reconstruct")

    # Close out the trial: let the green timer expire, then place.
    if timeline.phase == "reconstructing":
        timeline = timeline.tick(timeline.green_remaining)
    if timeline.phase == "placing":
        timeline = timeline.tick(config.placement_s)
        if timeline.phase == "placing":
            timeline = timeline.placed()

    final_mesh = _extract(model, config.grid)
    if final_mesh.is_empty():
        raise EmptyMeshError("final reconstruction contains no surface")
    report = recon_report(final_mesh, config.shape, model.dataset)

    paths = {
        "config": out / "config.json",
        "contacts": out / "contacts.csv",
        "final_mesh": out / "final_mesh.ply",
        "report": out / "report.json",
        "timeline": out / "timeline.json",
        "updates": out / "updates.ndjson",
    }
    with open(paths["config"], "w", encoding="ascii", newline="\n") as f:
        json.dump(config.normalized, f, indent=2, sort_keys=True)
        f.write("\n")
    io_formats.write_contact_log(contacts, paths["contacts"])
    io_formats.write_ply(final_mesh, paths["final_mesh"])
    with open(paths["report"], "w", encoding="ascii", newline="\n") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    timeline_log = {
        "phases": [{"phase": p, "t_s": t} for p, t in timeline.phase_entries],
        "outcome": timeline.outcome,
        "t_end_s": timeline.t_s,
        "contacts_emitted": len(contacts),
        "contacts_accepted": accepted,
        "contacts_dropped_after_window": dropped,
    }
    with open(paths["timeline"], "w", encoding="ascii", newline="\n") as f:
        json.dump(timeline_log, f, indent=2, sort_keys=True)
        f.write("\n")
    io_formats.write_update_stream(updates, paths["updates"])

    artifacts.update(paths)
    extra = {"deterministic": config.deterministic}
    if not config.deterministic:
        extra["created_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    manifest_path = out / "manifest.json"
    io_formats.write_manifest(manifest_path, artifacts, extra)
    artifacts["manifest"] = manifest_path
    return {k: Path(v) for k, v in artifacts.items()}
