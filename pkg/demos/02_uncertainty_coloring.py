"""Show that variance coloring separates explored from unexplored regions.

The first box preset is probed from above and from the four sides, but
never from below. The posterior variance on the untouched bottom face
stays high while the probed faces drop to the noise floor, so the
exported mesh shades blue where fingers have been and red underneath.

Run from the repository root:  python demos/02_uncertainty_coloring.py
"""

from pathlib import Path

import numpy as np

from touchrecon import (
    Aabb,
    ContactPoint,
    GridSpec,
    SphericalPrior,
    TpsKernel,
    colorize,
    make_o1,
    marching_cubes,
    model_from_contacts,
    probe,
    sample_grid,
)
from touchrecon.io_formats import write_ply
from touchrecon.simulate import ProbeRay

OUT = Path("out/demo02")

box = make_o1()
he, center = box.half_extents, box.center
print(f"object: box footprint {2 * he[0] * 100:.1f} x {2 * he[1] * 100:.1f} cm, "
      f"height {2 * he[2] * 100:.2f} cm")

# Probe schedule: downward grid on the top face, horizontal grids on the
# four lateral faces. The bottom face is unreachable, as on a real table.
rays = []
for x in np.linspace(-0.9 * he[0], 0.9 * he[0], 12):
    for y in np.linspace(-0.9 * he[1], 0.9 * he[1], 6):
        rays.append(ProbeRay(origin=(x, y, 0.3), direction=(0, 0, -1)))
for z in np.linspace(0.01, 0.075, 5):
    for y in np.linspace(-0.9 * he[1], 0.9 * he[1], 5):
        rays.append(ProbeRay(origin=(0.3, y, z), direction=(-1, 0, 0)))
        rays.append(ProbeRay(origin=(-0.3, y, z), direction=(1, 0, 0)))
    for x in np.linspace(-0.9 * he[0], 0.9 * he[0], 10):
        rays.append(ProbeRay(origin=(x, 0.3, z), direction=(0, -1, 0)))
        rays.append(ProbeRay(origin=(x, -0.3, z), direction=(0, 1, 0)))

rng = np.random.default_rng(0)
contacts = []
for i, ray in enumerate(rays):
    hit = probe(box, ray, max_dist=0.8)
    if hit is not None:
        contacts.append(ContactPoint(position=hit + rng.normal(0, 0.5e-3, 3),
                                     t_ms=10.0 * (i + 1)))
print(f"{len(rays)} probes -> {len(contacts)} contacts on 5 of 6 faces")

kernel = TpsKernel(scale=Aabb(lo=(-0.3, -0.3, 0.0), hi=(0.3, 0.3, 0.4)).diagonal)
model = model_from_contacts(contacts, kernel, SphericalPrior(center=center, radius=0.10))

samples = box.surface_samples(4000, np.random.default_rng(1))
var = model.variance(samples)
bottom = samples[:, 2] < 1e-9
print(f"mean posterior variance, probed faces:   {var[~bottom].mean():.3e}")
print(f"mean posterior variance, bottom face:    {var[bottom].mean():.3e}")
print(f"uncertainty ratio (unexplored/explored): {var[bottom].mean() / var[~bottom].mean():.1f}x")

grid = GridSpec(bounds=Aabb(lo=(-0.13, -0.13, -0.04), hi=(0.13, 0.13, 0.14)),
                resolution=48)
mesh = colorize(marching_cubes(sample_grid(model, grid)))
reds = np.sum(mesh.colors[:, 0] > mesh.colors[:, 2])
print(f"mesh: {mesh.n_vertices} vertices, {reds} shaded toward red (uncertain)")

OUT.mkdir(parents=True, exist_ok=True)
write_ply(mesh, OUT / "box_partial.ply")
print(f"wrote {OUT / 'box_partial.ply'}; view it to see the red underside")
