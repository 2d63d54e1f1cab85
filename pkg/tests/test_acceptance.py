"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest -s`` to see them as they complete).
"""

import contextlib
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
import yaml

from conftest import random_contact_positions
from touchrecon import cli
from touchrecon.geometry import Aabb, RigidPose2D, Sphere, make_o1
from touchrecon.gp import ContactPoint, GpModel, SphericalPrior, model_from_contacts
from touchrecon.io_formats import read_contact_log
from touchrecon.isosurface import GridSpec, VolumeGrid, marching_cubes
from touchrecon.metrics import PlacementError, TrialResult, placement_error, summarize
from touchrecon.scenario import load_config, run_scenario
from touchrecon.simulate import ProbeRay, ProtocolError, TrialTimeline, probe

REPO = Path(__file__).resolve().parent.parent


@contextlib.contextmanager
def criterion(num: int, title: str):
    try:
        yield
    except BaseException:
        print(f"[acceptance] criterion {num:2d}: FAIL  {title}")
        raise
    print(f"[acceptance] criterion {num:2d}: PASS  {title}")


def test_c01_gp_interpolation(kernel, prior):
    with criterion(1, "GP interpolation: |mean| < 1e-6 at every contact, 20 datasets"):
        rng = np.random.default_rng(101)
        t0 = time.perf_counter()
        for trial in range(20):
            n = int(rng.integers(5, 51))
            pts = random_contact_positions(rng, n)
            model = GpModel(kernel, prior, noise=0.0)
            for p in pts:
                assert model.add_contact(ContactPoint(position=p))
            assert np.max(np.abs(model.mean(pts))) < 1e-6
        assert time.perf_counter() - t0 < 5.0


def test_c02_incremental_equals_batch(kernel, prior):
    with criterion(2, "incremental factor append == batch refit within 1e-8 relative"):
        rng = np.random.default_rng(102)
        model = GpModel(kernel, prior)
        for p in random_contact_positions(rng, 50):
            assert model.add_contact(ContactPoint(position=p))
        queries = prior.center + rng.uniform(-0.15, 0.15, size=(100, 3))
        mu_inc, var_inc = model.predict(queries)
        mu_bat, var_bat = model.refit().predict(queries)
        np.testing.assert_allclose(mu_inc, mu_bat, rtol=1e-8, atol=1e-13)
        np.testing.assert_allclose(var_inc, var_bat, rtol=1e-8, atol=1e-13)


def test_c03_variance_monotone(kernel, prior):
    with criterion(3, "variance never increases as contacts are added"):
        rng = np.random.default_rng(103)
        queries = prior.center + rng.uniform(-0.12, 0.12, size=(20, 3))
        model = GpModel(kernel, prior)
        prev = model.variance(queries)
        for p in random_contact_positions(rng, 50):
            model.add_contact(ContactPoint(position=p))
            cur = model.variance(queries)
            assert np.all(cur <= prev + 1e-9)
            prev = cur


def test_c04_scalar_oracle(kernel, prior):
    with criterion(4, "single-contact posterior matches 1x1 closed forms within 1e-12"):
        model = GpModel(kernel, prior)
        p = np.array([0.04, -0.03, 0.08])
        model.add_contact(ContactPoint(position=p))
        k0 = kernel.zero_distance_value
        s = model.effective_noise  # noise diagonal actually applied to the 1x1 system
        m_p = float(prior.mean(p))
        mean_expect = m_p + k0 / (k0 + s) * (0.0 - m_p)
        var_expect = k0 - k0 * k0 / (k0 + s)
        assert model.mean(p)[0] == pytest.approx(mean_expect, abs=1e-12)
        assert model.variance(p)[0] == pytest.approx(var_expect, abs=1e-12)


def test_c05_sphere_end_to_end(tmp_path):
    with criterion(5, "sphere scenario: mean|sdf| <= 3 mm, probed coverage >= 0.95, < 60 s"):
        t0 = time.perf_counter()
        cfg = load_config(REPO / "configs" / "sphere_e2e.yaml",
                          out_dir=str(tmp_path / "out"), deterministic=True)
        artifacts = run_scenario(cfg)
        report = json.loads(artifacts["report"].read_text())
        elapsed = time.perf_counter() - t0
        assert report["mean_abs_sdf"] <= 3e-3
        assert report["coverage_probed"] >= 0.95
        assert elapsed < 60.0


def test_c06_box_unprobed_face_uncertainty(kernel):
    with criterion(6, "unprobed bottom face carries >= 2x the variance of probed faces"):
        box = make_o1()
        he, c = box.half_extents, box.center
        rays = []
        for x in np.linspace(-0.9 * he[0], 0.9 * he[0], 10):
            for y in np.linspace(-0.9 * he[1], 0.9 * he[1], 6):
                rays.append(ProbeRay(origin=(c[0] + x, c[1] + y, 0.3),
                                     direction=(0.0, 0.0, -1.0)))
        for z in np.linspace(0.015, 0.07, 4):
            for y in np.linspace(-0.9 * he[1], 0.9 * he[1], 5):
                rays.append(ProbeRay(origin=(0.3, c[1] + y, z), direction=(-1, 0, 0)))
                rays.append(ProbeRay(origin=(-0.3, c[1] + y, z), direction=(1, 0, 0)))
            for x in np.linspace(-0.9 * he[0], 0.9 * he[0], 8):
                rays.append(ProbeRay(origin=(c[0] + x, 0.3, z), direction=(0, -1, 0)))
                rays.append(ProbeRay(origin=(c[0] + x, -0.3, z), direction=(0, 1, 0)))
        rng = np.random.default_rng(106)
        contacts = []
        for i, ray in enumerate(rays):
            hit = probe(box, ray, max_dist=0.8)
            if hit is not None:
                contacts.append(ContactPoint(position=hit + rng.normal(0.0, 0.5e-3, 3),
                                             t_ms=10.0 * (i + 1)))
        model = model_from_contacts(contacts, kernel,
                                    SphericalPrior(center=c, radius=0.10))
        assert model.n_contacts > 50
        samples = box.surface_samples(4000, np.random.default_rng(1))
        bottom = samples[:, 2] < 1e-9  # the one face no probe can reach
        var = model.variance(samples)
        ratio = var[bottom].mean() / var[~bottom].mean()
        assert ratio >= 2.0


def test_c07_marching_cubes_topology():
    with criterion(7, "interior sphere -> closed 2-manifold; all-positive field -> empty"):
        spec = GridSpec(bounds=Aabb(lo=(-0.1, -0.1, -0.1), hi=(0.1, 0.1, 0.1)),
                        resolution=32)
        sphere = Sphere(center=(0.0, 0.0, 0.0), radius=0.06)
        pts = spec.lattice_points()
        grid = VolumeGrid(spec=spec, mean=sphere.sdf(pts).reshape(spec.corner_shape),
                          var=np.zeros(spec.corner_shape))
        mesh = marching_cubes(grid)
        counts: dict = {}
        for t in mesh.triangles:
            for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                e = (min(a, b), max(a, b))
                counts[e] = counts.get(e, 0) + 1
        assert set(counts.values()) == {2}
        assert mesh.n_vertices - len(counts) + mesh.n_triangles == 2

        empty = marching_cubes(VolumeGrid(spec=spec, mean=np.ones(spec.corner_shape),
                                          var=np.zeros(spec.corner_shape)))
        assert empty.is_empty()


def test_c08_placement_metrics():
    with criterion(8, "placement error values and session summary formatting"):
        err = placement_error(RigidPose2D(0.03, 0.04, 0.0), RigidPose2D(0.0, 0.0, 0.0))
        assert err.d_cm == pytest.approx(5.0, rel=1e-12)
        assert err.alpha_deg == pytest.approx(0.0, abs=1e-12)
        folded = placement_error(RigidPose2D(0.0, 0.0, math.radians(170.0)),
                                 RigidPose2D(0.0, 0.0, 0.0))
        assert folded.alpha_deg == pytest.approx(10.0, rel=1e-9)

        ok = lambda d: TrialResult(error=PlacementError(d_cm=d, alpha_deg=2.0), time_s=16.0)
        fail = TrialResult(error=None, time_s=140.0)
        summary = summarize([ok(2.0), ok(4.0)])
        assert summary.pos_mean_cm == pytest.approx(3.0)
        assert summary.pos_std_cm == pytest.approx(math.sqrt(2.0))
        assert summarize([ok(1.0)] * 12 + [fail] * 3).failures == "3/15"


def test_c09_timeline_protocol():
    with criterion(9, "trial protocol: 20 s green, 120 s blue, timeout, illegal events"):
        t = TrialTimeline().tick(2.0).first_contact()
        assert t.phase == "reconstructing"
        assert t.green_remaining == 20.0
        t = t.tick(20.0)
        assert t.phase == "placing"
        assert t.blue_remaining == 120.0
        success = t.tick(15.0).placed()
        assert success.outcome == "success"
        timeout = t.tick(120.0)
        assert timeout.phase == "done"
        assert timeout.outcome == "timeout"
        with pytest.raises(ProtocolError):
            TrialTimeline().placed()
        with pytest.raises(ProtocolError):
            TrialTimeline().first_contact().first_contact()
        with pytest.raises(ProtocolError):
            timeout.tick(1.0)


def test_c10_determinism_and_replay(tmp_path):
    with criterion(10, "fixed seed: byte-identical runs; replay reproduces the mesh"):
        cfg = {
            "object": "sphere",
            "sphere": {"center": [0.0, 0.0, 0.06], "radius": 0.06},
            "prior": {"center": [0.0, 0.0, 0.06], "radius": 0.10},
            "policy": {"kind": "radial_inward", "probes": 64, "seed": 5},
            "grid": {"center": [0.0, 0.0, 0.06], "size": 0.20, "resolution": 24},
            "run": {"snapshot_every": 16},
        }
        path = tmp_path / "scenario.yaml"
        path.write_text(yaml.safe_dump(cfg))
        assert cli.main(["run", str(path), "--out", str(tmp_path / "a"),
                         "--deterministic"]) == 0
        assert cli.main(["run", str(path), "--out", str(tmp_path / "b"),
                         "--deterministic"]) == 0
        for name in ("contacts.csv", "final_mesh.ply", "manifest.json",
                     "updates.ndjson"):
            assert (tmp_path / "a" / name).read_bytes() == \
                   (tmp_path / "b" / name).read_bytes(), name
        assert cli.main(["replay", str(tmp_path / "a" / "contacts.csv"), str(path),
                         "--out", str(tmp_path / "c"), "--deterministic"]) == 0
        assert (tmp_path / "a" / "final_mesh.ply").read_bytes() == \
               (tmp_path / "c" / "final_mesh.ply").read_bytes()
        # The replayed log is the ingested log, byte for byte.
        replayed = read_contact_log(tmp_path / "c" / "contacts.csv")
        original = read_contact_log(tmp_path / "a" / "contacts.csv")
        assert len(replayed) == len(original)
        assert (tmp_path / "a" / "contacts.csv").read_bytes() == \
               (tmp_path / "c" / "contacts.csv").read_bytes()
