"""Structured-text containers for map datasets, tensor families and CSV tables.

Container layout::

    # fcstt-container v1
    # header {"kind": ..., ...}            (JSON, keys sorted)
    record,lam_index,n,alpha,beta,re,im
    L,0,1,0,0,<re>,<im>
    ...

Record type ``L`` holds data point ``L[beta, alpha]`` of the map at step
``n >= 1`` (the identity at ``n = 0`` is implicit); record type ``T`` holds
element ``[beta, alpha]`` of the transfer tensor at lag ``n``. Records are
ordered by lam_index, n, alpha, beta. Floats use 17 significant digits, which
round-trips IEEE doubles exactly.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import IncompleteDataError
from .tomography import MapDataset, identity_data
from .transfer import TtFamily

MAGIC = "# fcstt-container v1"
COLUMNS = ("record", "lam_index", "n", "alpha", "beta", "re", "im")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[fmt(v.real), fmt(v.imag)] for v in row] for row in m]


def _decode_matrix(rows) -> np.ndarray:
    return np.array([[float(re) + 1j * float(im) for re, im in row] for row in rows])


def _write(path, header: dict, record: str, blocks) -> None:
    buf = io.StringIO()
    buf.write(MAGIC + "\n")
    buf.write("# header " + json.dumps(header, sort_keys=True) + "\n")
    buf.write(",".join(COLUMNS) + "\n")
    for li, n, mat in blocks:
        dim = mat.shape[0]
        for a in range(dim):
            for b in range(dim):
                v = mat[b, a]
                buf.write(f"{record},{li},{n},{a},{b},{fmt(v.real)},{fmt(v.imag)}\n")
    Path(path).write_text(buf.getvalue())


def _read(path) -> tuple[dict, list]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != MAGIC:
        raise IncompleteDataError(f"{path}: not an fcstt container")
    if len(lines) < 3 or not lines[1].startswith("# header "):
        raise IncompleteDataError(f"{path}: missing header")
    header = json.loads(lines[1][len("# header "):])
    if tuple(lines[2].split(",")) != COLUMNS:
        raise IncompleteDataError(f"{path}: unexpected column line {lines[2]!r}")
    return header, lines[3:]


def _fill(records, record: str, shape) -> tuple[np.ndarray, int]:
    out = np.full(shape, np.nan + 0j)
    seen = 0
    for line in records:
        if not line:
            continue
        kind, li, n, a, b, re, im = line.split(",")
        if kind != record:
            raise IncompleteDataError(f"unexpected record type {kind!r}")
        out[int(li), int(n), int(b), int(a)] = float(re) + 1j * float(im)
        seen += 1
    return out, seen


def write_dataset(path, ds: MapDataset) -> None:
    header = {
        "kind": "maps",
        "lambdas": [fmt(x) for x in ds.lambdas],
        "dt": fmt(ds.dt),
        "n_steps": ds.n_steps,
        "d": ds.d,
        "in_basis": ds.in_basis,
        "out_basis": ds.out_basis,
        "meta": ds.meta,
    }
    blocks = ((li, n, ds.data[li, n]) for li in range(len(ds.lambdas))
              for n in range(1, ds.n_steps + 1))
    _write(path, header, "L", blocks)


def read_dataset(path) -> MapDataset:
    header, records = _read(path)
    if header.get("kind") != "maps":
        raise IncompleteDataError(f"{path}: container kind {header.get('kind')!r} is not 'maps'")
    lambdas = tuple(float(x) for x in header["lambdas"])
    n_steps, d = int(header["n_steps"]), int(header["d"])
    dim = d * d
    data, seen = _fill(records, "L", (len(lambdas), n_steps + 1, dim, dim))
    expected = len(lambdas) * n_steps * dim * dim
    if seen != expected or np.isnan(data[:, 1:]).any():
        raise IncompleteDataError(f"{path}: {seen} records, expected {expected}")
    # the n = 0 slot is the identity map expressed in the stored bases
    data[:, 0] = identity_data(header["in_basis"], header["out_basis"], d)
    return MapDataset(lambdas, float(header["dt"]), n_steps, d, data, header["in_basis"],
                      header["out_basis"], header.get("meta", {}))


def write_families(path, families: list[TtFamily], meta=None) -> None:
    m = families[0].m
    header = {
        "kind": "tensors",
        "lambdas": [fmt(f.lam) for f in families],
        "dt": fmt(families[0].dt),
        "m": m,
        "dim": families[0].tensors.shape[1],
        "smoothing": families[0].smoothing,
        "meta": dict(meta or {}),
    }
    blocks = ((li, n, f.tensors[n - 1]) for li, f in enumerate(families) for n in range(1, m + 1))
    _write(path, header, "T", blocks)


def read_families(path) -> list[TtFamily]:
    header, records = _read(path)
    if header.get("kind") != "tensors":
        raise IncompleteDataError(f"{path}: container kind {header.get('kind')!r} is not 'tensors'")
    lambdas = [float(x) for x in header["lambdas"]]
    m, dim = int(header["m"]), int(header["dim"])
    data, seen = _fill(records, "T", (len(lambdas), m + 1, dim, dim))
    if seen != len(lambdas) * m * dim * dim or np.isnan(data[:, 1:]).any():
        raise IncompleteDataError(f"{path}: incomplete tensor records")
    dt = float(header["dt"])
    return [TtFamily(data[i, 1:], lam, dt, int(header["smoothing"])) for i, lam in enumerate(lambdas)]


def encode_state(rho) -> list:
    return _encode_matrix(rho)


def decode_state(rows) -> np.ndarray:
    return _decode_matrix(rows)


def write_csv(path, columns, rows) -> None:
    """CSV with a fixed column order; floats at 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
