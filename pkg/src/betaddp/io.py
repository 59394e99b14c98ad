"""Readers and writers for datasets, chain archives and analysis tables.

Every writer has a matching reader, and numbers are written with 17
significant digits (``%.17g``) so values survive a round trip exactly.

Chain archive (JSON Lines)
--------------------------
Line 1 is ``{"type": "meta", ...}`` with the run settings (scheme, r, sizes,
sweeps, burn_in, thin, seed, tuning, acceptance rates, ...). Each further line
is ``{"type": "record", ...}`` with keys

``sweep``         1-based sweep number
``alpha``         concentration parameters
``n_clusters``    occupied components per series
``D``             allocations per series (1-based component labels)
``occupied``      sorted labels of occupied components
``atoms``         ``{name: [value per occupied component]}``
``weights``       per-series weights of the occupied components
``K``, ``nstar_max``, ``kappa``, ``accept``  sampler bookkeeping
``y_pred``        one posterior predictive draw per series (after burn-in)
``upsilon``       VAR coefficients, VAR runs only

Keys are sorted and separators fixed, so a fixed-seed run yields identical bytes.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import DensityGrid, LSClustering, PairwiseMatrix
from .gibbs import PosteriorArchive

__all__ = [
    "DataFormatError",
    "MixDataset",
    "VarDataset",
    "fmt",
    "write_mix_csv",
    "read_mix_csv",
    "write_var_csv",
    "read_var_csv",
    "write_archive",
    "read_archive",
    "write_density_csv",
    "read_density_csv",
    "write_count_histogram",
    "read_count_histogram",
    "write_pairwise_csv",
    "read_pairwise_csv",
    "write_ls_clustering",
    "read_ls_clustering",
    "write_table",
    "read_table",
]


class DataFormatError(ValueError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def _float(path, line, text):
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(path, line, f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise DataFormatError(path, line, f"non-finite value {text!r}")
    return value


def _split_header(path):
    """Leading ``# key: value`` lines and the remaining (line number, text) pairs."""
    meta, body = [], []
    with open(path, newline="") as fh:
        for n, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#") and not body:
                meta.append((n, line[1:].strip()))
            else:
                body.append((n, line))
    return meta, body


# -- mixture data -------------------------------------------------------------

@dataclass
class MixDataset:
    series: list  # one float array per series
    meta: dict = field(default_factory=dict)
    components: list = field(default_factory=list)  # (series, weight, mean, variance)


def write_mix_csv(path, series, meta=None, components=()):
    """``series_id,value`` rows after a ``#`` header with metadata and component table."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write("# betaddp mixture data\n")
        for key, value in (meta or {}).items():
            fh.write(f"# {key}: {value}\n")
        if components:
            fh.write("# components: series,weight,mean,variance\n")
            for s, w, m, v in components:
                fh.write(f"# component: {int(s)},{fmt(w)},{fmt(m)},{fmt(v)}\n")
        fh.write("series_id,value\n")
        for i, values in enumerate(series, start=1):
            for v in values:
                fh.write(f"{i},{fmt(v)}\n")


def read_mix_csv(path) -> MixDataset:
    path = Path(path)
    head, body = _split_header(path)
    meta, components = {}, []
    for n, text in head:
        if ":" not in text:
            continue
        key, value = (part.strip() for part in text.split(":", 1))
        if key == "component":
            parts = value.split(",")
            if len(parts) != 4:
                raise DataFormatError(path, n, "component rows need series,weight,mean,variance")
            components.append((int(parts[0]), *(_float(path, n, p) for p in parts[1:])))
        elif key != "components":
            meta[key] = value
    if not body or body[0][1].replace(" ", "") != "series_id,value":
        raise DataFormatError(path, body[0][0] if body else 1, "expected header 'series_id,value'")
    values = {}
    for n, text in body[1:]:
        parts = text.split(",")
        if len(parts) != 2:
            raise DataFormatError(path, n, f"expected 2 fields, got {len(parts)}")
        try:
            sid = int(parts[0])
        except ValueError:
            raise DataFormatError(path, n, f"series_id must be an integer, got {parts[0]!r}") from None
        if sid < 1:
            raise DataFormatError(path, n, "series_id must be >= 1")
        values.setdefault(sid, []).append(_float(path, n, parts[1]))
    if sorted(values) != list(range(1, len(values) + 1)) or len(values) < 2:
        raise DataFormatError(path, body[-1][0], f"need series ids 1..r with r >= 2, got {sorted(values)}")
    return MixDataset([np.array(values[i]) for i in sorted(values)], meta, components)


# -- VAR data -----------------------------------------------------------------

@dataclass
class VarDataset:
    dates: list
    series1: np.ndarray
    series2: np.ndarray
    kind: str  # "level" or "growth"
    meta: dict = field(default_factory=dict)


def write_var_csv(path, dates, series1, series2, kind="level", meta=None):
    if kind not in ("level", "growth"):
        raise ValueError(f"kind must be 'level' or 'growth', got {kind!r}")
    with open(path, "w", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}: {value}\n")
        fh.write(f"date,series1_{kind},series2_{kind}\n")
        for d, a, b in zip(dates, series1, series2):
            fh.write(f"{d},{fmt(a)},{fmt(b)}\n")


def read_var_csv(path) -> VarDataset:
    path = Path(path)
    head, body = _split_header(path)
    meta = {}
    for _, text in head:
        if ":" in text:
            key, value = (part.strip() for part in text.split(":", 1))
            meta[key] = value
    if not body:
        raise DataFormatError(path, 1, "empty file")
    cols = [c.strip() for c in body[0][1].split(",")]
    kinds = {"level": ["date", "series1_level", "series2_level"], "growth": ["date", "series1_growth", "series2_growth"]}
    kind = next((k for k, want in kinds.items() if cols == want), None)
    if kind is None:
        raise DataFormatError(path, body[0][0], f"unexpected columns {cols}; want {kinds['level']} or {kinds['growth']}")
    dates, a, b = [], [], []
    for n, text in body[1:]:
        parts = text.split(",")
        if len(parts) != 3:
            raise DataFormatError(path, n, f"expected 3 fields, got {len(parts)}")
        dates.append(parts[0].strip())
        a.append(_float(path, n, parts[1]))
        b.append(_float(path, n, parts[2]))
    return VarDataset(dates, np.array(a), np.array(b), kind, meta)


# -- archive ------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_archive(path, archive: PosteriorArchive):
    with open(path, "w") as fh:
        fh.write(_dumps(dict(archive.meta, type="meta")) + "\n")
        for rec in archive.records:
            fh.write(_dumps(dict(rec, type="record")) + "\n")


def read_archive(path) -> PosteriorArchive:
    path = Path(path)
    meta, records = None, []
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(path, n, f"invalid JSON: {exc.msg}") from None
            kind = obj.pop("type", None)
            if kind == "meta":
                if meta is not None:
                    raise DataFormatError(path, n, "second meta line")
                meta = obj
            elif kind == "record":
                records.append(obj)
            else:
                raise DataFormatError(path, n, f"unknown line type {kind!r}")
    if meta is None:
        raise DataFormatError(path, 1, "missing meta line")
    return PosteriorArchive(meta, records)


# -- analysis tables ----------------------------------------------------------

def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool) else v for v in row])


def read_table(path):
    """Header and rows (as strings) of a CSV written by :func:`write_table`."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(path, 1, "empty table")
    width = len(rows[0])
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DataFormatError(path, n, f"expected {width} fields, got {len(row)}")
    return rows[0], rows[1:]


def _numeric(path, header, rows, want):
    if header != want:
        raise DataFormatError(path, 1, f"expected columns {want}, got {header}")
    return np.array([[_float(path, n, v) for v in row] for n, row in enumerate(rows, start=2)]).reshape(len(rows), len(want))


def write_density_csv(path, density: DensityGrid):
    r = density.values.shape[0]
    header = ["y"] + [f"f{i}" for i in range(1, r + 1)]
    write_table(path, header, ([y, *density.values[:, g]] for g, y in enumerate(density.grid)))


def read_density_csv(path) -> DensityGrid:
    header, rows = read_table(path)
    arr = _numeric(path, header, rows, ["y"] + [f"f{i}" for i in range(1, len(header))])
    return DensityGrid(arr[:, 0], arr[:, 1:].T.copy())


def write_count_histogram(path, histograms):
    """``histograms`` maps series number to ``{count: probability}``."""
    rows = [(int(i), int(c), float(p)) for i in sorted(histograms) for c, p in sorted(histograms[i].items())]
    write_table(path, ["series", "count", "probability"], rows)


def read_count_histogram(path):
    header, rows = read_table(path)
    arr = _numeric(path, header, rows, ["series", "count", "probability"])
    out = {}
    for s, c, p in arr:
        out.setdefault(int(s), {})[int(c)] = float(p)
    return out


def write_pairwise_csv(path, pm: PairwiseMatrix):
    """Dense matrix; the first row and column hold 1-based observation indices.

    The corner cell records ``i-j:M`` (series pair and number of samples).
    """
    i, j = pm.pair
    header = [f"{i}-{j}:{pm.M}"] + [str(t) for t in range(1, pm.P.shape[1] + 1)]
    write_table(path, header, ([s, *pm.P[s - 1]] for s in range(1, pm.P.shape[0] + 1)))


def read_pairwise_csv(path) -> PairwiseMatrix:
    path = Path(path)
    header, rows = read_table(path)
    try:
        pair, M = header[0].split(":")
        i, j = (int(v) for v in pair.split("-"))
        M = int(M)
    except ValueError:
        raise DataFormatError(path, 1, f"bad corner cell {header[0]!r}; expected 'i-j:M'") from None
    P = np.array([[_float(path, n, v) for v in row[1:]] for n, row in enumerate(rows, start=2)])
    return PairwiseMatrix(P.reshape(len(rows), len(header) - 1), M, (i, j))


def write_ls_clustering(path, ls: LSClustering, atom_names=("mu", "sigma2")):
    """``index,cluster,<atom values>`` per observation; the sweep goes in a comment line."""
    names = list(atom_names)
    with open(path, "w", newline="") as fh:
        fh.write(f"# sweep: {ls.sweep}\n# position: {ls.position}\n# loss: {fmt(ls.loss)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "cluster", *names])
        for t, k in enumerate(ls.allocation, start=1):
            w.writerow([t, int(k), *(fmt(ls.atoms[n][t - 1]) for n in names)])


def read_ls_clustering(path) -> LSClustering:
    path = Path(path)
    head, body = _split_header(path)
    meta = dict((part.strip() for part in text.split(":", 1)) for _, text in head if ":" in text)
    if not body:
        raise DataFormatError(path, 1, "missing table")
    header = [c.strip() for c in body[0][1].split(",")]
    if header[:2] != ["index", "cluster"]:
        raise DataFormatError(path, body[0][0], "expected columns index,cluster,...")
    alloc, atoms = [], {n: [] for n in header[2:]}
    for n, text in body[1:]:
        parts = text.split(",")
        if len(parts) != len(header):
            raise DataFormatError(path, n, f"expected {len(header)} fields, got {len(parts)}")
        alloc.append(int(parts[1]))
        for name, v in zip(header[2:], parts[2:]):
            atoms[name].append(_float(path, n, v))
    try:
        sweep, position, loss = int(meta["sweep"]), int(meta["position"]), float(meta["loss"])
    except (KeyError, ValueError):
        raise DataFormatError(path, 1, "header must give sweep, position and loss") from None
    return LSClustering(sweep, position, np.array(alloc, dtype=np.int64), loss,
                        {k: np.array(v) for k, v in atoms.items()})
