"""Secondary-structure-element ingestion: C-alpha clouds to vector configurations.

Each strand or helix is reduced to a single 3-vector: the principal axis of
its C-alpha cloud is computed, the first and last residues are projected
orthogonally onto that axis, and the element vector is the difference
(end projection minus start projection).  Taking differences removes any
translation component, so downstream alignment of these configurations
runs without a translation term.

Fixture file format (CSV, one row per C-alpha, angstroms):

    element_index,kind,res_seq,x,y,z

with kind in {strand, helix}; rows of one element are contiguous and
element_index increases strictly from element to element.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Configuration

__all__ = [
    "SSERecord",
    "DegenerateElementError",
    "principal_axis_vector",
    "configuration_from_sses",
    "parse_sse_file",
    "write_sse_file",
]

KINDS = ("strand", "helix")


class DegenerateElementError(ValueError):
    """The element's C-alpha cloud has no usable principal axis."""


@dataclass(frozen=True)
class SSERecord:
    element_index: int
    kind: str
    residues: np.ndarray  # (k, 3) C-alpha coordinates
    res_seq: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        res = np.atleast_2d(np.asarray(self.residues, dtype=float))
        if res.ndim != 2 or res.shape[1] != 3:
            raise ValueError("residues must be (k, 3)")
        if res.shape[0] < 2:
            raise ValueError("an element needs at least 2 residues")
        if not np.all(np.isfinite(res)):
            raise ValueError("residue coordinates must be finite")
        res = res.copy()
        res.flags.writeable = False
        object.__setattr__(self, "residues", res)
        if self.res_seq is not None:
            rs = np.asarray(self.res_seq, dtype=int)
            if rs.shape != (res.shape[0],):
                raise ValueError("res_seq must have one entry per residue")
            object.__setattr__(self, "res_seq", rs)

    @property
    def n_residues(self) -> int:
        return self.residues.shape[0]


def principal_axis_vector(sse: SSERecord) -> np.ndarray:
    """Element vector: end-to-start difference of projections onto the
    principal axis of the C-alpha cloud, oriented first -> last residue."""
    pts = sse.residues
    center = pts.mean(axis=0)
    centered = pts - center
    cov = centered.T @ centered / pts.shape[0]
    scale = float(np.trace(cov))
    if scale <= 1e-18:
        raise DegenerateElementError("all residues coincide; no principal axis")
    evals, evecs = np.linalg.eigh(cov)
    if evals[-1] - evals[-2] <= 1e-12 * evals[-1]:
        raise DegenerateElementError("top covariance eigenvalues tie; axis undefined")
    axis = evecs[:, -1]
    end_to_end = pts[-1] - pts[0]
    span = float(axis @ end_to_end)
    if span == 0.0:
        raise DegenerateElementError("principal axis orthogonal to the chain direction")
    if span < 0:
        axis = -axis
        span = -span
    return axis * span


def configuration_from_sses(domain, id: str) -> Configuration:
    """One point per element, seq = element_index, dim = 3."""
    records = list(domain)
    if not records:
        raise ValueError("no secondary structure elements")
    indices = [rec.element_index for rec in records]
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise ValueError("element_index must be strictly increasing")
    vectors = np.array([principal_axis_vector(rec) for rec in records])
    return Configuration(id, vectors, seq=np.array(indices))


def parse_sse_file(path) -> list[SSERecord]:
    """Read the documented fixture format, validating as it goes."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (lineno == 1 and row[0] == "element_index"):
                continue
            if len(row) != 6:
                raise ValueError(f"{path} line {lineno}: expected 6 fields, got {len(row)}")
            try:
                idx = int(row[0])
                kind = row[1].strip()
                res_seq = int(row[2])
                coords = [float(v) for v in row[3:6]]
            except ValueError as exc:
                raise ValueError(f"{path} line {lineno}: {exc}") from None
            if kind not in KINDS:
                raise ValueError(f"{path} line {lineno}: unknown element kind {kind!r}")
            rows.append((idx, kind, res_seq, coords))
    records: list[SSERecord] = []
    i = 0
    while i < len(rows):
        idx, kind = rows[i][0], rows[i][1]
        block = []
        while i < len(rows) and rows[i][0] == idx:
            if rows[i][1] != kind:
                raise ValueError(f"{path}: element {idx} mixes kinds")
            block.append(rows[i])
            i += 1
        if records and idx <= records[-1].element_index:
            raise ValueError(f"{path}: element_index {idx} not strictly increasing")
        if len(block) < 2:
            raise ValueError(f"{path}: element {idx} has fewer than 2 residues")
        records.append(
            SSERecord(
                element_index=idx,
                kind=kind,
                residues=np.array([b[3] for b in block]),
                res_seq=np.array([b[2] for b in block]),
            )
        )
    return records


def write_sse_file(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["element_index", "kind", "res_seq", "x", "y", "z"])
        for rec in records:
            seqs = rec.res_seq if rec.res_seq is not None else range(1, rec.n_residues + 1)
            for rs, xyz in zip(seqs, rec.residues):
                writer.writerow(
                    [rec.element_index, rec.kind, int(rs)] + [repr(float(v)) for v in xyz]
                )
