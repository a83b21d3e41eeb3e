"""JSON model/report documents and CSV series files.

Floats are written with ``repr`` (shortest round-trip decimal), JSON keys
are sorted, so identical inputs give byte-identical files.
"""

import csv
import json
import math

import numpy as np

from .exceptions import ShapeError, ValidationError
from .model import (
    ExogenousSpec,
    ModelSpec,
    RegimeCoefficients,
    ThresholdPartition,
    check_model,
)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(doc):
    return json.dumps(_plain(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def save_report(path, report):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(report))


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def model_to_dict(spec):
    part = spec.partition
    regimes = []
    for J in sorted(spec.regimes):
        c = spec.regimes[J]
        regimes.append({"index": list(J), "a0": c.a0, "A": c.A, "Lambda": c.Lambda})
    doc = {
        "dims": {"D": spec.D, "kappa": spec.kappa, "p": spec.p, "q": spec.q, "d": spec.d},
        "partition": [list(b) for b in part.breakpoints],
        "regimes": regimes,
        "exogenous": {"Xi": spec.exogenous.Xi, "noise_cov": spec.exogenous.noise_cov},
        "noise_cov_eps": spec.noise_cov_eps,
    }
    if spec.name:
        doc["name"] = spec.name
    return _plain(doc)


def _matrix(value, rows, cols, what):
    a = np.asarray(value, dtype=float)
    if a.size == 0:
        return np.zeros((rows, cols))
    if a.ndim != 2:
        raise ShapeError(f"{what} must be a matrix, got shape {a.shape}")
    return a


def _stack(value, rows, cols, what):
    a = np.asarray(value, dtype=float)
    if a.size == 0:
        return np.zeros((0, rows, cols))
    if a.ndim != 3:
        raise ShapeError(f"{what} must be a list of matrices, got shape {a.shape}")
    return a


def model_from_dict(doc):
    """Build a ModelSpec; structural problems raise ValidationError."""
    try:
        dims = doc["dims"]
        D, kappa = int(dims["D"]), int(dims.get("kappa", 0))
        p, q, d = int(dims["p"]), int(dims.get("q", 0)), int(dims["d"])
        partition = ThresholdPartition(doc["partition"])
        regimes = {}
        for i, r in enumerate(doc["regimes"]):
            J = tuple(int(j) for j in r["index"])
            if J in regimes:
                raise ValidationError(f"duplicate regime {J}")
            regimes[J] = RegimeCoefficients(
                a0=np.asarray(r["a0"], dtype=float),
                A=_stack(r["A"], D, D, f"regimes[{i}].A"),
                Lambda=_matrix(r.get("Lambda", []), D, kappa, f"regimes[{i}].Lambda"),
            )
        exo_doc = doc.get("exogenous") or {}
        exo = ExogenousSpec(
            Xi=_stack(exo_doc.get("Xi", []), kappa, kappa, "exogenous.Xi"),
            noise_cov=_matrix(exo_doc.get("noise_cov", []), kappa, kappa, "exogenous.noise_cov"),
        )
        return ModelSpec(
            D=D,
            kappa=kappa,
            p=p,
            q=q,
            d=d,
            partition=partition,
            regimes=regimes,
            exogenous=exo,
            noise_cov_eps=_matrix(doc["noise_cov_eps"], D, D, "noise_cov_eps"),
            name=str(doc.get("name", "")),
        )
    except KeyError as exc:
        raise ValidationError(f"model document is missing key {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed model document: {exc}") from exc


def load_model(path):
    """Read and validate a model document; every violation is reported."""
    return check_model(model_from_dict(load_json(path)))


def save_model(path, spec):
    save_report(path, model_to_dict(spec))


def write_series(path, Y, F=None, regime=None):
    """CSV with header ``t,y1..yD[,f1..fK][,regime]``."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    T, D = Y.shape
    F = np.zeros((T, 0)) if F is None else np.asarray(F, dtype=float).reshape(T, -1)
    header = ["t"] + [f"y{i + 1}" for i in range(D)] + [f"f{i + 1}" for i in range(F.shape[1])]
    if regime is not None:
        header.append("regime")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(T):
            row = [str(t)] + [repr(v) for v in Y[t].tolist()] + [repr(v) for v in F[t].tolist()]
            if regime is not None:
                row.append(str(int(regime[t])))
            w.writerow(row)


def _check_header(header):
    if not header or header[0] != "t":
        raise ValidationError("series header must start with 't'")
    names = header[1:]
    has_regime = bool(names) and names[-1] == "regime"
    if has_regime:
        names = names[:-1]
    ys = [c for c in names if c.startswith("y")]
    fs = names[len(ys) :]
    if [f"y{i + 1}" for i in range(len(ys))] != ys or not ys:
        raise ValidationError(f"expected columns y1..yD after 't', got {header[1:]}")
    if [f"f{i + 1}" for i in range(len(fs))] != fs:
        raise ValidationError(f"expected columns f1..fK after the y columns, got {fs}")
    return len(ys), len(fs), has_regime


def read_series(path):
    """Returns ``(Y, F, regime)``; ``F`` has zero columns and ``regime`` is None when absent."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        D, K, has_regime = _check_header(header)
        width = len(header)
        rows = []
        for n, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != width:
                raise ValidationError(f"ragged row {n}: {len(row)} fields, header has {width}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ValidationError(f"non-numeric cell in row {n}: {row}") from None
            if not all(math.isfinite(v) for v in rows[-1]):
                raise ValidationError(f"non-finite value in row {n}")
            t = rows[-1][0]
            expected_min = 0 if n == 1 else rows[-2][0]
            if (n == 1 and t != 0) or (n > 1 and t <= expected_min):
                raise ValidationError(f"time column must increase strictly from 0 (row {n})")
    data = np.array(rows, dtype=float).reshape(-1, width)
    Y = data[:, 1 : 1 + D]
    F = data[:, 1 + D : 1 + D + K]
    regime = data[:, -1].astype(np.int64) if has_regime else None
    return Y, F, regime
