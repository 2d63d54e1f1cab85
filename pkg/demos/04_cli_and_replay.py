"""Drive the ``recon`` command line end to end, including replay.

Runs the shipped sphere scenario twice with ``--deterministic`` to show
byte-identical artifacts, replays the saved contact log to reproduce the
final mesh exactly, then exports OBJ and recomputes metrics from the
files alone.

Run from the repository root:  python demos/04_cli_and_replay.py
"""

import json
from pathlib import Path

from touchrecon.cli import main

CONFIG = "configs/sphere_e2e.yaml"
OUT = Path("out/demo04")


def run(argv) -> None:
    print(f"$ recon {' '.join(argv)}")
    code = main(argv)
    assert code == 0, f"exit code {code}"


run(["run", CONFIG, "--out", str(OUT / "a"), "--deterministic"])
run(["run", CONFIG, "--out", str(OUT / "b"), "--deterministic"])
same = all(
    (OUT / "a" / n).read_bytes() == (OUT / "b" / n).read_bytes()
    for n in ("contacts.csv", "final_mesh.ply", "manifest.json")
)
print(f"two seeded runs byte-identical: {same}\n")

run(["replay", str(OUT / "a" / "contacts.csv"), CONFIG, "--out", str(OUT / "r"),
     "--deterministic"])
replayed = (OUT / "a" / "final_mesh.ply").read_bytes() == \
           (OUT / "r" / "final_mesh.ply").read_bytes()
print(f"replayed mesh byte-identical: {replayed}\n")

run(["export", str(OUT / "a" / "final_mesh.ply"), "--format", "obj",
     "--out", str(OUT / "final_mesh.obj")])
run(["metrics", str(OUT / "a" / "final_mesh.ply"), CONFIG,
     "--contacts", str(OUT / "a" / "contacts.csv")])

manifest = json.loads((OUT / "a" / "manifest.json").read_text())
print(f"\nmanifest lists {len(manifest['artifacts'])} artifacts, e.g.:")
name, entry = sorted(manifest["artifacts"].items())[0]
print(f"  {name}: {entry['path']} ({entry['bytes']} bytes, sha256 {entry['sha256'][:12]}...)")
