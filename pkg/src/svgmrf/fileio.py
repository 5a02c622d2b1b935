"""Plain-text interchange formats: CSV matrices, edge lists, key-value manifests.

Everything is line-oriented and diffable.  Floats are written with their
shortest round-trip representation, so identical values produce identical
bytes.  Edge-list indices are 1-based in files (matching the cluster-file
numbering); in-memory arrays are 0-based.
"""

import csv
from pathlib import Path

import numpy as np

from .covariance import ClusterDataset
from .errors import FormatError


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse_scalar(text):
    text = text.strip()
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


# ---------------------------------------------------------------------------
# numeric matrices
# ---------------------------------------------------------------------------

def write_matrix_csv(path, M, header=None):
    M = np.asarray(M, dtype=float)
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in M:
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")


def read_matrix_csv(path):
    """Numeric CSV; a non-numeric first line is treated as a header."""
    rows = []
    with open(path, newline="") as fh:
        for ln, line in enumerate(csv.reader(fh)):
            if not line:
                continue
            try:
                rows.append([float(v) for v in line])
            except ValueError:
                if ln == 0:
                    continue
                raise FormatError(f"{path}: non-numeric value on line {ln + 1}")
    if not rows:
        raise FormatError(f"{path}: no numeric rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FormatError(f"{path}: ragged rows")
    return np.array(rows)


# ---------------------------------------------------------------------------
# samples
# ---------------------------------------------------------------------------

def write_samples(directory, data):
    """One samples_k<k>.csv per cluster (k is 1-based), rows are observations."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, X in enumerate(data.samples):
        p = directory / f"samples_k{k + 1}.csv"
        write_matrix_csv(p, X)
        paths.append(p)
    return paths


def load_samples(path):
    """Load a dataset from a directory of samples_k*.csv files, or from one
    CSV whose leading integer column is the 1-based cluster id.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("samples_k*.csv"),
                       key=lambda p: int(p.stem.split("samples_k")[1]))
        if not files:
            raise FormatError(f"{path}: no samples_k*.csv files")
        return ClusterDataset(tuple(read_matrix_csv(p) for p in files))
    M = read_matrix_csv(path)
    ids = M[:, 0]
    if not np.all(ids == np.round(ids)) or ids.min() < 1:
        raise FormatError(
            f"{path}: first column must hold 1-based integer cluster ids")
    ids = ids.astype(int)
    K = ids.max()
    groups = [M[ids == k + 1, 1:] for k in range(K)]
    if any(g.shape[0] == 0 for g in groups):
        raise FormatError(f"{path}: some cluster id in 1..{K} has no rows")
    return ClusterDataset(tuple(groups))


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

def write_weights(path, W):
    write_matrix_csv(path, W)


def load_weights(path, expected_K=None):
    W = read_matrix_csv(path)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise FormatError(f"{path}: weight matrix must be square")
    if expected_K is not None and W.shape[0] != expected_K:
        raise FormatError(
            f"{path}: weight matrix is {W.shape[0]}x{W.shape[0]}, expected K={expected_K}")
    if not np.allclose(W, W.T, rtol=0, atol=1e-12 * max(1.0, np.abs(W).max())):
        raise FormatError(f"{path}: weight matrix is not symmetric")
    if W.min() < 0:
        raise FormatError(f"{path}: weight matrix has negative entries")
    return 0.5 * (W + W.T)


# ---------------------------------------------------------------------------
# edge lists
# ---------------------------------------------------------------------------

def write_edge_lists(directory, matrices, prefix="edges"):
    """Per cluster: rows "i,j,value" for nonzeros with i <= j, 1-based."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, M in enumerate(matrices):
        M = np.asarray(M, dtype=float)
        iu, ju = np.triu_indices(M.shape[0])
        vals = M[iu, ju]
        keep = vals != 0.0
        p = directory / f"{prefix}_k{k + 1}.csv"
        with open(p, "w", newline="") as fh:
            fh.write("i,j,value\n")
            for i, j, v in zip(iu[keep], ju[keep], vals[keep]):
                fh.write(f"{i + 1},{j + 1},{_fmt(float(v))}\n")
        paths.append(p)
    return paths


def load_edge_lists(directory, d, K, prefix="edges"):
    """Rebuild K dense symmetric d x d matrices from edge-list files."""
    directory = Path(directory)
    mats = []
    for k in range(K):
        p = directory / f"{prefix}_k{k + 1}.csv"
        if not p.exists():
            raise FormatError(f"missing edge list {p}")
        M = np.zeros((d, d))
        with open(p, newline="") as fh:
            reader = csv.reader(fh)
            first = next(reader, None)
            if first is None:
                raise FormatError(f"{p}: empty file")
            if first != ["i", "j", "value"]:
                reader = _chain_row(first, reader)
            for row in reader:
                if not row:
                    continue
                try:
                    i, j, v = int(row[0]) - 1, int(row[1]) - 1, float(row[2])
                except (ValueError, IndexError):
                    raise FormatError(f"{p}: bad edge row {row!r}")
                if not (0 <= i <= j < d):
                    raise FormatError(f"{p}: indices out of range in {row!r}")
                M[i, j] = M[j, i] = v
        mats.append(M)
    return mats


def _chain_row(first, rest):
    yield first
    yield from rest


# ---------------------------------------------------------------------------
# key-value manifests
# ---------------------------------------------------------------------------

def write_manifest(path, mapping):
    """Flat "key: value" lines; nested dicts use dotted keys, sequences are
    comma-joined.  Keys are written in insertion order.
    """
    lines = []

    def emit(prefix, value):
        if isinstance(value, dict):
            for k, v in value.items():
                emit(f"{prefix}.{k}" if prefix else str(k), v)
        elif isinstance(value, (list, tuple, np.ndarray)):
            lines.append(f"{prefix}: {','.join(_fmt(v) for v in value)}")
        else:
            lines.append(f"{prefix}: {_fmt(value)}")

    emit("", dict(mapping))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_manifest(path):
    out = {}
    with open(path) as fh:
        for ln, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if ": " not in line and not line.endswith(":"):
                raise FormatError(f"{path}: line {ln + 1} is not 'key: value'")
            key, _, raw = line.partition(":")
            raw = raw.strip()
            if "," in raw:
                out[key.strip()] = [_parse_scalar(v) for v in raw.split(",")]
            else:
                out[key.strip()] = _parse_scalar(raw)
    return out


# ---------------------------------------------------------------------------
# tabular reports
# ---------------------------------------------------------------------------

def write_table(path, rows, fieldnames):
    """CSV with a fixed column order; None renders as the empty string."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow(["" if row.get(c) is None else _fmt(row.get(c))
                             for c in fieldnames])


def read_table(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [{k: _parse_scalar(v) if v != "" else None
                 for k, v in row.items()} for row in reader]


def bic_report_rows(report, counts):
    rows = []
    for i, r in enumerate(report.rows):
        row = {
            "c1": r.c1, "c2": r.c2, "c3": r.c3,
            "mu": r.mu, "gamma": r.gamma,
            "score": "" if not r.valid else r.score,
            "valid": r.valid,
            "selected": i == report.selected,
            "reason": r.reason,
        }
        for k in range(len(counts)):
            row[f"df_k{k + 1}"] = r.dfs[k] if r.dfs else None
        rows.append(row)
    return rows


def write_bic_report(path, report, counts):
    fields = ["c1", "c2", "c3", "mu", "gamma", "score", "valid", "selected",
              "reason"] + [f"df_k{k + 1}" for k in range(len(counts))]
    write_table(path, bic_report_rows(report, counts), fields)
