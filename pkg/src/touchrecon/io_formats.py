"""Artifact file formats: PLY/OBJ meshes, contact logs, update streams.

PLY is the primary mesh format because it carries the per-vertex
variance coloring natively: binary little-endian, float32 x/y/z, uchar
red/green/blue, plus a float32 ``variance`` property so metrics can be
recomputed from the file alone. OBJ export keeps geometry only. The
contact log is plain CSV with full-precision floats, so re-ingesting a
log reproduces the reconstruction byte for byte. Update streams are
newline-delimited JSON records ending in a terminal marker.
"""

from __future__ import annotations

import hashlib
import json
import struct
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .gp import ContactPoint
from .isosurface import ColoredMesh

__all__ = [
    "export_mesh",
    "write_ply",
    "read_ply",
    "write_obj",
    "write_contact_log",
    "read_contact_log",
    "UpdateMessage",
    "write_update_stream",
    "read_update_stream",
    "write_manifest",
]

CONTACT_LOG_HEADER = "timestamp_ms,sensor_id,x_m,y_m,z_m"


def write_ply(mesh: ColoredMesh, path) -> None:
    """Write a colored mesh as binary little-endian PLY.

    Requires colors (run :func:`touchrecon.isosurface.colorize` first)
    and a non-empty mesh. The variance range used for coloring is kept
    as a header comment.
    """
    if mesh.n_vertices == 0:
        raise ValueError("refusing to export an empty mesh to PLY")
    if mesh.colors is None:
        raise ValueError("mesh has no colors; colorize it before PLY export")
    header = ["ply", "format binary_little_endian 1.0"]
    if mesh.variance_range is not None:
        header.append("comment variance_range %r %r"
                      % (float(mesh.variance_range[0]), float(mesh.variance_range[1])))
    header += [
        f"element vertex {mesh.n_vertices}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "property float variance",
        f"element face {mesh.n_triangles}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    verts = mesh.vertices.astype("<f4")
    var = mesh.vertex_variance.astype("<f4")
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        for i in range(mesh.n_vertices):
            f.write(struct.pack("<3f", *verts[i]))
            f.write(struct.pack("<3B", *mesh.colors[i]))
            f.write(struct.pack("<f", var[i]))
        for tri in mesh.triangles:
            f.write(struct.pack("<B3i", 3, int(tri[0]), int(tri[1]), int(tri[2])))


def read_ply(path) -> ColoredMesh:
    """Read a PLY written by :func:`write_ply`."""
    raw = Path(path).read_bytes()
    end = raw.find(b"end_header\n")
    if not raw.startswith(b"ply") or end < 0:
        raise ValueError(f"{path}: not a PLY file")
    header = raw[:end].decode("ascii").splitlines()
    body = raw[end + len(b"end_header\n"):]
    n_vertex = n_face = 0
    variance_range = None
    for line in header:
        if line.startswith("element vertex"):
            n_vertex = int(line.split()[-1])
        elif line.startswith("element face"):
            n_face = int(line.split()[-1])
        elif line.startswith("comment variance_range"):
            _, _, lo, hi = line.split()
            variance_range = (float(lo), float(hi))
        elif line.startswith("format") and "binary_little_endian" not in line:
            raise ValueError(f"{path}: unsupported PLY format {line!r}")

    vert_rec = np.dtype([("xyz", "<f4", 3), ("rgb", "u1", 3), ("var", "<f4")])
    verts = np.frombuffer(body, dtype=vert_rec, count=n_vertex)
    offset = n_vertex * vert_rec.itemsize
    face_rec = np.dtype([("n", "u1"), ("idx", "<i4", 3)])
    faces = np.frombuffer(body, dtype=face_rec, count=n_face, offset=offset)
    if n_face and not np.all(faces["n"] == 3):
        raise ValueError(f"{path}: non-triangular face found")
    return ColoredMesh(
        vertices=verts["xyz"].astype(np.float64),
        triangles=faces["idx"].astype(np.int64).reshape(-1, 3),
        vertex_variance=verts["var"].astype(np.float64),
        colors=verts["rgb"].copy(),
        variance_range=variance_range,
    )


def write_obj(mesh: ColoredMesh, path) -> None:
    """Write geometry-only OBJ. Colors are dropped (OBJ cannot carry them)."""
    if mesh.colors is not None:
        warnings.warn("OBJ export drops per-vertex colors; use PLY to keep them",
                      stacklevel=2)
    with open(path, "w", encoding="ascii") as f:
        for v in mesh.vertices:
            f.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for t in mesh.triangles:
            f.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def export_mesh(mesh: ColoredMesh, fmt: str, path) -> None:
    fmt = fmt.lower()
    if fmt == "ply":
        write_ply(mesh, path)
    elif fmt == "obj":
        write_obj(mesh, path)
    else:
        raise ValueError(f"unsupported mesh format {fmt!r} (expected ply or obj)")


def write_contact_log(contacts: Iterable[ContactPoint], path) -> None:
    """CSV contact log; floats use repr so parsing is an exact round trip."""
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(CONTACT_LOG_HEADER + "\n")
        for c in contacts:
            x, y, z = (float(v) for v in c.position)
            f.write(f"{c.t_ms!r},{c.sensor_id},{x!r},{y!r},{z!r}\n")


def read_contact_log(path) -> list:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != CONTACT_LOG_HEADER:
        raise ValueError(f"{path}: missing contact log header {CONTACT_LOG_HEADER!r}")
    out = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"{path}:{ln}: expected 5 fields, got {len(parts)}")
        t_ms, sensor_id, x, y, z = parts
        out.append(ContactPoint(position=(float(x), float(y), float(z)),
                                t_ms=float(t_ms), sensor_id=int(sensor_id)))
    return out


@dataclass(frozen=True)
class UpdateMessage:
    """One reconstruction refresh in the live update stream."""

    seq: int
    t_ms: float
    n_contacts: int
    n_vertices: int
    n_triangles: int
    var_min: float
    var_max: float
    mesh_path: Optional[str] = None


def write_update_stream(messages: Sequence[UpdateMessage], path) -> None:
    """Newline-delimited JSON, one record per update plus a terminal record.

    Any prefix of the stream is a consistent view; the terminal record
    carries the next sequence number and ``"terminal": true``.
    """
    seqs = [m.seq for m in messages]
    if any(b <= a for a, b in zip(seqs, seqs[1:])):
        raise ValueError("update sequence numbers must be strictly increasing")
    counts = [m.n_contacts for m in messages]
    if any(b < a for a, b in zip(counts, counts[1:])):
        raise ValueError("contact counts must be non-decreasing across updates")
    with open(path, "w", encoding="ascii", newline="\n") as f:
        for m in messages:
            f.write(json.dumps({"terminal": False, **asdict(m)}, sort_keys=True) + "\n")
        terminal_seq = seqs[-1] + 1 if seqs else 0
        f.write(json.dumps({"terminal": True, "seq": terminal_seq}, sort_keys=True) + "\n")


def read_update_stream(path) -> list:
    """Parse an update stream back into messages; validates the terminal record."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty update stream")
    records = [json.loads(line) for line in lines]
    if not records[-1]["terminal"]:
        raise ValueError(f"{path}: stream is not terminated")
    out = []
    for rec in records[:-1]:
        if rec.pop("terminal"):
            raise ValueError(f"{path}: terminal record before end of stream")
        out.append(UpdateMessage(**rec))
    return out


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, artifacts: dict, extra: Optional[dict] = None) -> dict:
    """List run artifacts with sizes and content hashes; returns the manifest."""
    base = Path(path).parent
    entries = {}
    for name, p in sorted(artifacts.items()):
        p = Path(p)
        entries[name] = {
            "path": str(p.relative_to(base)) if p.is_relative_to(base) else str(p),
            "bytes": p.stat().st_size,
            "sha256": _sha256(p),
        }
    manifest = {"artifacts": entries}
    if extra:
        manifest.update(extra)
    with open(path, "w", encoding="ascii", newline="\n") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest
