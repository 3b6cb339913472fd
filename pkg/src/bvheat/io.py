"""Manifold, field and endomorphism file formats.

* Manifold JSON: ``{"schema_version": 1, "mode": "graph" | "mesh", ...}`` with
  the arrays of :class:`~bvheat.geometry.DiscreteManifold`.
* OFF triangle meshes (vertex volumes are lumped areas / 3).
* Field CSV: header ``vertex_id,re,im``.
* Endomorphism CSV: ``vertex_id`` followed by m*m row-major entries written
  as Python complex literals (``1.5`` or ``0.2+1j``).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .geometry import DiscreteManifold, GeometryError

SCHEMA_VERSION = 1


class IngestError(ValueError):
    """Malformed input; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


def manifold_to_dict(M: DiscreteManifold) -> dict:
    d = {"schema_version": SCHEMA_VERSION, "mode": M.mode, "dimension": M.dimension,
         "vertex_volumes": M.vertex_volumes.tolist(), "meta": M.meta}
    if M.positions is not None:
        d["positions"] = M.positions.tolist()
    if M.mode == "graph":
        d.update(edges=M.edges.tolist(), edge_lengths=M.edge_lengths.tolist(),
                 edge_volumes=M.edge_volumes.tolist())
    else:
        d.update(triangles=M.triangles.tolist(), tri_coords=M.tri_coords.tolist())
    return d


def _require(d: dict, key: str):
    if key not in d:
        raise IngestError(f"missing field {key!r}", key)
    return d[key]


def manifold_from_dict(d: dict) -> DiscreteManifold:
    if not isinstance(d, dict):
        raise IngestError("manifold document must be a JSON object", "<root>")
    version = _require(d, "schema_version")
    if version != SCHEMA_VERSION:
        raise IngestError(f"unsupported schema_version {version!r}", "schema_version")
    mode = _require(d, "mode")
    for name in ("vertex_volumes", "edge_lengths", "edge_volumes"):
        if d.get(name) is None:
            continue
        try:
            a = np.asarray(d[name], dtype=float)
        except (TypeError, ValueError) as exc:
            raise IngestError(f"field {name!r} is not numeric", name) from exc
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise IngestError(f"field {name!r} must be finite and positive", name)
    key = "mode"
    try:
        if mode == "graph":
            key = "vertex_volumes"
            vol = np.asarray(_require(d, "vertex_volumes"), dtype=float)
            key = "edges"
            edges = np.asarray(_require(d, "edges"), dtype=np.int64)
            key = "edge_lengths"
            ell = np.asarray(_require(d, "edge_lengths"), dtype=float)
            key = "edge_volumes"
            w = d.get("edge_volumes")
            return DiscreteManifold.graph(vol, edges, ell, w, dimension=int(d.get("dimension", 1)),
                                          positions=d.get("positions"), meta=d.get("meta"))
        if mode == "mesh":
            key = "triangles"
            tri = _require(d, "triangles")
            key = "tri_coords"
            return DiscreteManifold.mesh(tri, tri_coords=d.get("tri_coords"),
                                         positions=d.get("positions"),
                                         vertex_volumes=d.get("vertex_volumes"), meta=d.get("meta"))
    except GeometryError as exc:
        raise IngestError(f"invalid manifold ({key}): {exc}", key) from exc
    except (TypeError, ValueError) as exc:
        raise IngestError(f"invalid manifold field {key!r}: {exc}", key) from exc
    raise IngestError(f"unknown mode {mode!r}", "mode")


def save_manifold(M: DiscreteManifold, path) -> None:
    Path(path).write_text(json.dumps(manifold_to_dict(M), sort_keys=True))


def load_manifold(path) -> DiscreteManifold:
    path = Path(path)
    if not path.exists():
        raise IngestError(f"file not found: {path}", "path")
    if path.suffix.lower() == ".off":
        return read_off(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise IngestError(f"not valid JSON: {exc}", "<root>") from exc
    return manifold_from_dict(d)


def read_off(path) -> DiscreteManifold:
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise IngestError("missing OFF header", "header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = np.array(tokens[4:4 + 3 * nv], dtype=float).reshape(nv, 3)
        rest = tokens[4 + 3 * nv:]
        tris, i = [], 0
        for _ in range(nf):
            k = int(rest[i])
            if k != 3:
                raise IngestError("only triangular faces are supported", "faces")
            tris.append([int(x) for x in rest[i + 1:i + 4]])
            i += 4
    except (IndexError, ValueError) as exc:
        raise IngestError(f"truncated or malformed OFF data: {exc}", "faces") from exc
    try:
        return DiscreteManifold.mesh(np.array(tris), positions=pos, meta={"source": str(path)})
    except GeometryError as exc:
        raise IngestError(f"invalid mesh: {exc}", "faces") from exc


def write_field_csv(f, path) -> None:
    f = np.asarray(f)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex_id", "re", "im"])
        for i, z in enumerate(f):
            w.writerow([i, repr(float(np.real(z))), repr(float(np.imag(z)))])


def read_field_csv(path, n_vertices: int | None = None) -> np.ndarray:
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "vertex_id" not in reader.fieldnames or "re" not in reader.fieldnames:
            raise IngestError("field CSV needs columns vertex_id,re[,im]", "header")
        for line, row in enumerate(reader, start=2):
            try:
                rows[int(row["vertex_id"])] = complex(float(row["re"]), float(row.get("im") or 0.0))
            except (TypeError, ValueError) as exc:
                raise IngestError(f"line {line}: {exc}", "re/im") from exc
    n = max(rows) + 1 if n_vertices is None else n_vertices
    if sorted(rows) != list(range(n)):
        raise IngestError("field CSV must list every vertex exactly once", "vertex_id")
    return np.array([rows[i] for i in range(n)])


def write_endomorphism_csv(R, path) -> None:
    R = np.asarray(R)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for i, A in enumerate(R):
            w.writerow([i] + [repr(complex(z)) if np.iscomplexobj(R) else repr(float(z)) for z in A.ravel()])


def read_endomorphism_csv(path) -> np.ndarray:
    rows = {}
    with open(path, newline="") as fh:
        for line, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                vals = [complex(x.strip().strip("()")) for x in row[1:]]
                rows[int(row[0])] = vals
            except ValueError as exc:
                raise IngestError(f"line {line}: {exc}", "entries") from exc
    if not rows:
        raise IngestError("empty endomorphism CSV", "entries")
    lens = {len(v) for v in rows.values()}
    m = int(round(np.sqrt(lens.pop()))) if len(lens) == 1 else -1
    if m < 1 or lens or any(len(v) != m * m for v in rows.values()):
        raise IngestError("every row needs m*m entries for one m", "entries")
    R = np.array([rows[i] for i in sorted(rows)]).reshape(-1, m, m)
    return R.real.copy() if np.all(R.imag == 0) else R
