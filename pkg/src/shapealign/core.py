"""Geometry primitives and the point-configuration data model.

Rotations are plain (d, d) numpy arrays restricted to SO(d) for d in {2, 3}.
The Euler convention for d=3 is fixed as Z(t12) @ Y(t13) @ X(t23), with t13
restricted to the open interval (-pi/2, pi/2); the invariant (Haar) measure
in these coordinates is cos(t13) dt12 dt13 dt23.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ROTATION_TOL = 1e-10


def rotation_from_euler(angles) -> np.ndarray:
    """Build a rotation matrix from one angle (d=2) or (t12, t13, t23) (d=3).

    d=3 composes the elementary rotations in the fixed order
    Z(t12) @ Y(t13) @ X(t23).
    """
    arr = np.atleast_1d(np.asarray(angles, dtype=float))
    if not np.all(np.isfinite(arr)):
        raise ValueError("rotation angles must be finite")
    if arr.shape == (1,):
        t = arr[0]
        c, s = np.cos(t), np.sin(t)
        return np.array([[c, -s], [s, c]])
    if arr.shape != (3,):
        raise ValueError(f"expected 1 or 3 angles, got shape {arr.shape}")
    t12, t13, t23 = arr
    if not -np.pi / 2 < t13 < np.pi / 2:
        raise ValueError("t13 must lie in (-pi/2, pi/2)")
    c1, s1 = np.cos(t12), np.sin(t12)
    c2, s2 = np.cos(t13), np.sin(t13)
    c3, s3 = np.cos(t23), np.sin(t23)
    rz = np.array([[c1, -s1, 0.0], [s1, c1, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[c2, 0.0, s2], [0.0, 1.0, 0.0], [-s2, 0.0, c2]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, c3, -s3], [0.0, s3, c3]])
    return rz @ ry @ rx


def euler_from_rotation(rotation: np.ndarray) -> np.ndarray:
    """Invert rotation_from_euler. d=3 fails within 1e-7 of gimbal lock."""
    r = np.asarray(rotation, dtype=float)
    if r.shape == (2, 2):
        return np.array([np.arctan2(r[1, 0], r[0, 0])])
    if r.shape != (3, 3):
        raise ValueError(f"expected a 2x2 or 3x3 matrix, got {r.shape}")
    if abs(r[2, 0]) >= 1.0 - 1e-7:
        raise ValueError("rotation too close to t13 = +/-pi/2 for angle extraction")
    t13 = np.arcsin(-r[2, 0])
    t12 = np.arctan2(r[1, 0], r[0, 0])
    t23 = np.arctan2(r[2, 1], r[2, 2])
    return np.array([t12, t13, t23])


def is_rotation_matrix(matrix: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    """True if matrix is in SO(d) to the given tolerance (d=2 or 3)."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3):
        return False
    if not np.all(np.isfinite(m)):
        return False
    d = m.shape[0]
    if not np.allclose(m.T @ m, np.eye(d), atol=tol, rtol=0.0):
        return False
    return abs(np.linalg.det(m) - 1.0) <= tol


def _require_rotation(matrix: np.ndarray, tol: float = ROTATION_TOL) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if not is_rotation_matrix(m, tol):
        raise ValueError("matrix is not a rotation (orthonormal, det +1) to tolerance")
    return m


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform rotation; d=2 via a uniform angle, d=3 via a quaternion."""
    if dim == 2:
        return rotation_from_euler(rng.uniform(-np.pi, np.pi))
    if dim != 3:
        raise ValueError("only d in {2, 3} supported")
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotation_geodesic_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Geodesic angle between two rotations in SO(d)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    d = a.shape[0]
    t = float(np.trace(a.T @ b))
    if d == 2:
        cos_phi = t / 2.0
    else:
        cos_phi = (t - 1.0) / 2.0
    return float(np.arccos(np.clip(cos_phi, -1.0, 1.0)))


@dataclass(frozen=True)
class Configuration:
    """An ordered set of d-dimensional points with optional sequence/group data.

    points is (m, d) with d in {2, 3}; seq, when present, must increase
    strictly with row order; group, when present, assigns each point to {0, 1}.
    """

    id: str
    points: np.ndarray
    seq: np.ndarray | None = None
    group: np.ndarray | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise ValueError(f"points must be (m, d) with d in {{2, 3}}, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.seq is not None:
            seq = np.asarray(self.seq, dtype=int)
            if seq.shape != (pts.shape[0],):
                raise ValueError("seq must have one entry per point")
            if np.any(np.diff(seq) <= 0):
                raise ValueError("seq must be strictly increasing with row order")
            seq = seq.copy()
            seq.flags.writeable = False
            object.__setattr__(self, "seq", seq)
        if self.group is not None:
            grp = np.asarray(self.group, dtype=int)
            if grp.shape != (pts.shape[0],):
                raise ValueError("group must have one entry per point")
            if not np.all((grp == 0) | (grp == 1)):
                raise ValueError("group labels must be 0 or 1")
            grp = grp.copy()
            grp.flags.writeable = False
            object.__setattr__(self, "group", grp)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SimilarityTransform:
    """y -> scale * rotation @ y + translation."""

    rotation: np.ndarray
    translation: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        rot = _require_rotation(self.rotation)
        object.__setattr__(self, "rotation", rot)
        tr = np.asarray(self.translation, dtype=float).reshape(-1)
        if tr.shape != (rot.shape[0],):
            raise ValueError("translation dimension must match rotation")
        if not np.all(np.isfinite(tr)):
            raise ValueError("translation must be finite")
        object.__setattr__(self, "translation", tr)
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError("scale must be positive and finite")

    @property
    def dim(self) -> int:
        return self.rotation.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "SimilarityTransform":
        return cls(np.eye(dim), np.zeros(dim), 1.0)


def apply_similarity(cfg: Configuration, t: SimilarityTransform) -> Configuration:
    """Apply p -> scale * rotation @ p + translation to every point."""
    if cfg.dim != t.dim:
        raise ValueError(f"dimension mismatch: configuration d={cfg.dim}, transform d={t.dim}")
    pts = t.scale * cfg.points @ t.rotation.T + t.translation
    return Configuration(cfg.id, pts, seq=cfg.seq, group=cfg.group)


def compose(t2: SimilarityTransform, t1: SimilarityTransform) -> SimilarityTransform:
    """Transform equal to applying t1 first, then t2."""
    if t1.dim != t2.dim:
        raise ValueError("dimension mismatch")
    return SimilarityTransform(
        t2.rotation @ t1.rotation,
        t2.scale * t2.rotation @ t1.translation + t2.translation,
        t2.scale * t1.scale,
    )


def centroid(cfg: Configuration) -> np.ndarray:
    if cfg.m == 0:
        raise ValueError("centroid of an empty configuration")
    return cfg.points.mean(axis=0)


def write_configuration_csv(cfg: Configuration, path) -> None:
    """Write the `id,seq,group,x,y[,z]` point file (full float precision)."""
    coords = ["x", "y", "z"][: cfg.dim]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "seq", "group"] + coords)
        for i in range(cfg.m):
            seq = "" if cfg.seq is None else str(int(cfg.seq[i]))
            grp = "" if cfg.group is None else str(int(cfg.group[i]))
            writer.writerow([cfg.id, seq, grp] + [repr(float(v)) for v in cfg.points[i]])


def read_configuration_csv(path) -> Configuration:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty configuration file") from None
        if header[:3] != ["id", "seq", "group"] or header[3:] not in (["x", "y"], ["x", "y", "z"]):
            raise ValueError(f"{path}: bad header {header!r}; expected id,seq,group,x,y[,z]")
        dim = len(header) - 3
        ids, seqs, groups, points = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path} line {lineno}: expected {len(header)} fields, got {len(row)}")
            ids.append(row[0])
            seqs.append(row[1].strip())
            groups.append(row[2].strip())
            try:
                points.append([float(v) for v in row[3 : 3 + dim]])
            except ValueError as exc:
                raise ValueError(f"{path} line {lineno}: {exc}") from None
    if not points:
        raise ValueError(f"{path}: no points")
    if len(set(ids)) != 1:
        raise ValueError(f"{path}: multiple configuration ids {sorted(set(ids))}")
    seq = None
    if any(seqs):
        if not all(seqs):
            raise ValueError(f"{path}: seq column must be all present or all empty")
        seq = np.array([int(s) for s in seqs])
    group = None
    if any(groups):
        if not all(groups):
            raise ValueError(f"{path}: group column must be all present or all empty")
        group = np.array([int(g) for g in groups])
    return Configuration(ids[0], np.array(points), seq=seq, group=group)
