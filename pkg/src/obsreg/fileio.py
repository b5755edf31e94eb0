"""
Binary snapshots, JSON observation files and deterministic text reports.

Snapshot layout (little-endian)::

    offset  size  field
    0       7     magic  b"OBSREG1"
    7       1     reserved (0)
    8       2     version (uint16)
    10      8     kind, ASCII, NUL-padded ("velocity", "forcing", ...)
    18      8     L (float64)
    26      4     n_spec (uint32)
    30      8     time (float64)
    38      ...   payload: n^3 modes in lexicographic FFT-index order
                  (k1 slowest); per mode x.re x.im y.re y.im z.re z.im,
                  each float64

Reports print every float with 17 significant digits; JSON keys are sorted.
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ObsRegError, SnapshotFormatError
from .nse_solver import SolverConfig, Trajectory
from .observers import ModalData, NodalData
from .spectral_core import SpectralField, TorusConfig

MAGIC = b"OBSREG1"
VERSION = 1
_HEADER = struct.Struct("<7sxH8sdId")
HEADER_SIZE = _HEADER.size


@dataclass(frozen=True)
class Snapshot:
    field: SpectralField
    time: float
    kind: str


def snapshot_bytes(f: SpectralField, time: float = 0.0, kind: str = "velocity") -> bytes:
    tag = kind.encode("ascii")
    if len(tag) > 8:
        raise ValueError(f"snapshot kind {kind!r} longer than 8 characters")
    cfg = f.config
    head = _HEADER.pack(MAGIC, VERSION, tag.ljust(8, b"\0"), cfg.L, cfg.n_spec, time)
    payload = np.ascontiguousarray(np.moveaxis(f.coeffs, 0, -1), dtype="<c16").tobytes()
    return head + payload


def parse_snapshot(buf: bytes, source: str = "<bytes>") -> Snapshot:
    if len(buf) < HEADER_SIZE:
        raise SnapshotFormatError(f"{source}: file too short for header ({len(buf)} < {HEADER_SIZE} bytes)")
    magic, version, tag, L, n, t = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotFormatError(
            f"{source}: snapshot format version {version} is not supported (this reader handles "
            f"version {VERSION}); upgrade obsreg or re-export the file with a matching version"
        )
    expected = HEADER_SIZE + n**3 * 3 * 16
    if len(buf) != expected:
        raise SnapshotFormatError(f"{source}: expected {expected} bytes for n_spec={n}, got {len(buf)}")
    cfg = TorusConfig(L, n)
    c = np.frombuffer(buf, dtype="<c16", offset=HEADER_SIZE).reshape(n, n, n, 3)
    return Snapshot(SpectralField(np.moveaxis(c, -1, 0), cfg), t, tag.rstrip(b"\0").decode("ascii"))


def save_snapshot(f: SpectralField, path, time: float = 0.0, kind: str = "velocity") -> Path:
    path = Path(path)
    _write_bytes(path, snapshot_bytes(f, time, kind))
    return path


def load_snapshot(path) -> Snapshot:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as e:
        raise ObsRegError(f"cannot read snapshot {path}: {e.strerror or e}") from e
    return parse_snapshot(buf, str(path))


def _write_bytes(path: Path, data: bytes):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as e:
        raise ObsRegError(f"cannot write {path}: {e.strerror or e}") from e


def _write_text(path: Path, text: str):
    _write_bytes(Path(path), text.encode("utf-8"))


# -- trajectories ------------------------------------------------------------


def save_trajectory(traj: Trajectory, directory) -> Path:
    d = Path(directory)
    rows = []
    for i, (t, u) in enumerate(traj):
        name = f"snap_{i:05d}.obsreg"
        save_snapshot(u, d / name, t)
        rows.append((i, t, name))
    write_csv(d / "index.csv", ("index", "t", "file"), rows)
    return d


def load_trajectory(directory, solver: SolverConfig) -> Trajectory:
    d = Path(directory)
    index = d / "index.csv"
    if not index.exists():
        raise ObsRegError(f"no trajectory index at {index}")
    with open(index, newline="") as fh:
        rows = list(csv.DictReader(fh))
    snaps = [load_snapshot(d / r["file"]) for r in rows]
    if not snaps:
        raise ObsRegError(f"trajectory at {d} is empty")
    return Trajectory(tuple(s.time for s in snaps), tuple(s.field for s in snaps), solver, snaps[0].field.config)


# -- deterministic text ------------------------------------------------------


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def dumps_json(obj, indent: int = 2) -> str:
    """JSON with sorted keys and 17-significant-digit floats."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return fmt_float(o)
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(o[k], level + 1)}" for k in sorted(o, key=str)]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            seq = list(o)
            if not seq:
                return "[]"
            if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
                return "[" + ", ".join(enc(v, level + 1) for v in seq) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in seq) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    _write_text(path, dumps_json(obj))
    return path


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as e:
        raise ObsRegError(f"cannot read {path}: {e.strerror or e}") from e
    except json.JSONDecodeError as e:
        raise ObsRegError(f"{path} is not valid JSON: {e}") from e


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    _write_text(path, csv_text(header, rows))
    return path


# -- observations ------------------------------------------------------------


def observation_to_dict(data: ModalData | NodalData, t: float) -> dict:
    if isinstance(data, ModalData):
        c = data.coeffs
        return {
            "format": "obsreg-modal",
            "version": VERSION,
            "t": t,
            "L": data.config.L,
            "n_spec": data.config.n_spec,
            "N": data.N,
            "lambda_N": data.lambda_N,
            "wavevectors": data.wavevectors.tolist(),
            "coeffs": np.stack([c.real, c.imag], axis=-1).reshape(len(c), 6).tolist(),
        }
    return {
        "format": "obsreg-nodal",
        "version": VERSION,
        "t": t,
        "L": data.L,
        "n_cubes": data.n_cubes,
        "periodic": data.periodic,
        "samples": np.asarray(data.samples).ravel().tolist(),
    }


def observation_from_dict(d: dict, source: str = "<dict>") -> tuple[float, ModalData | NodalData]:
    try:
        fmt = d["format"]
        if d.get("version") != VERSION:
            raise SnapshotFormatError(f"{source}: unsupported observation version {d.get('version')}")
        t = float(d["t"])
        if fmt == "obsreg-modal":
            cfg = TorusConfig(float(d["L"]), int(d["n_spec"]))
            raw = np.asarray(d["coeffs"], dtype=np.float64).reshape(-1, 3, 2)
            k = np.asarray(d["wavevectors"], dtype=np.int64).reshape(-1, 3)
            return t, ModalData(int(d["N"]), float(d["lambda_N"]), k, raw[..., 0] + 1j * raw[..., 1], cfg)
        if fmt == "obsreg-nodal":
            n = int(d["n_cubes"])
            m = n if d.get("periodic", True) else n + 1
            s = np.asarray(d["samples"], dtype=np.float64).reshape(m, m, m, 3)
            return t, NodalData(n, float(d["L"]), s)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, SnapshotFormatError):
            raise
        raise SnapshotFormatError(f"{source}: malformed observation ({e})") from e
    raise SnapshotFormatError(f"{source}: unknown observation format {fmt!r}")


def save_observation(data, t: float, path) -> Path:
    return write_json(path, observation_to_dict(data, t))


def load_observation(path):
    return observation_from_dict(read_json(path), str(path))


# -- reports -----------------------------------------------------------------


def emit_report(report, path) -> list[Path]:
    """Write a CriterionReport (JSON), SyncSeries (CSV) or H1Norms (JSON).

    Returns the paths written.
    """
    from .nudging import SyncSeries
    from .regularity_monitor import CriterionReport
    from .tetra_interpolant import H1Norms

    path = Path(path)
    if isinstance(report, CriterionReport):
        return [write_json(path.with_suffix(".json"), report.to_dict())]
    if isinstance(report, SyncSeries):
        return [write_csv(path.with_suffix(".csv"), ("t", "l2", "h1"), report.rows)]
    if isinstance(report, H1Norms):
        d = report._asdict()
        d.update(exact2=report.exact**2, data2=report.data**2)
        return [write_json(path.with_suffix(".json"), d)]
    raise TypeError(f"no report writer for {type(report).__name__}")
