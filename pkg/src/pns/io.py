"""Dataset ingestion, model persistence and atomic file output.

The model document is plain JSON; floats are written with 17 significant
digits so a load-save cycle is lossless, and keys are emitted in a fixed
order so identical models serialize to identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .core import LevelRecord, NestedSphereModel
from .fastpns import FastPnsBasis
from .geometry import Subsphere
from .selection import LevelTestResult

__all__ = [
    "Dataset",
    "load_csv",
    "write_matrix_csv",
    "model_to_dict",
    "model_from_dict",
    "dumps_model",
    "atomic_write_text",
]


@dataclass
class Dataset:
    matrix: np.ndarray
    row_labels: list[str] | None = None
    col_labels: list[str] | None = None
    normalized: bool = False

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.matrix.shape[1] - 1


def _try_float(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(path, normalize: bool = True, transpose: bool = False) -> Dataset:
    """Read a numeric matrix with rows as observations.

    A non-numeric first row becomes column labels and a non-numeric first
    column row labels. Rows of zeros are rejected (they have no direction),
    as are ragged rows and non-numeric body cells.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: file is empty")

    col_labels = None
    if any(_try_float(c) is None for c in rows[0]):
        col_labels = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: no data rows below the header")

    row_labels = None
    if rows and _try_float(rows[0][0]) is None:
        row_labels = [r[0].strip() for r in rows]
        rows = [r[1:] for r in rows]
        if col_labels is not None and len(col_labels) == len(rows[0]) + 1:
            col_labels = col_labels[1:]

    width = len(rows[0])
    matrix = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {i} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            val = _try_float(cell)
            if val is None or not math.isfinite(val):
                raise ValueError(f"{path}: row {i}, column {j}: not a finite number: {cell!r}")
            matrix[i, j] = val

    if transpose:
        matrix = matrix.T
        row_labels, col_labels = col_labels, row_labels

    norms = np.linalg.norm(matrix, axis=1)
    zero = np.flatnonzero(norms < 1e-300)
    if zero.size:
        raise ValueError(f"{path}: row {zero[0]} has zero norm and cannot be normalized")
    if normalize:
        matrix = matrix / norms[:, None]
    return Dataset(matrix=matrix, row_labels=row_labels, col_labels=col_labels,
                   normalized=normalize)


def write_matrix_csv(matrix, header: list[str] | None = None) -> str:
    """Render a matrix as CSV text with full-precision floats."""
    import io as _io

    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(header)
    for row in np.asarray(matrix):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


# -- model document -----------------------------------------------------------

def _test_to_dict(test: LevelTestResult | None):
    if test is None:
        return None
    return {
        "name": test.test,
        "statistic": test.statistic,
        "p": test.p_value,
    }


def model_to_dict(model: NestedSphereModel, basis: FastPnsBasis | None = None) -> dict:
    doc = {
        "ambient_dim": model.ambient_dim,
        "mode": model.mode,
        "alpha": model.alpha,
        "levels": [
            {
                "axis": sub.axis.tolist(),
                "angle": sub.angle,
                "choice": rec.choice,
                "test": _test_to_dict(rec.test),
                "rss_great": rec.rss_great,
                "rss_small": rec.rss_small,
            }
            for sub, rec in zip(model.subspheres, model.level_choices)
        ],
        "final_mean": model.final_mean,
        "pns_mean": model.pns_mean.tolist(),
        "cumulative_radii": model.cumulative_radii.tolist(),
        "truncated": model.truncated,
    }
    if model.collapse_point is not None:
        doc["collapse_point"] = model.collapse_point.tolist()
    if basis is not None:
        doc["fast_basis"] = {
            "mean": basis.mean.tolist(),
            "arithmetic_mean": basis.arithmetic_mean.tolist(),
            "loadings": basis.loadings.tolist(),
            "eigenvalues": basis.eigenvalues.tolist(),
            "pct_variance": basis.pct_variance,
        }
    return doc


def model_from_dict(doc: dict) -> tuple[NestedSphereModel, FastPnsBasis | None]:
    d = int(doc["ambient_dim"])
    subspheres = []
    records = []
    for lv in doc["levels"]:
        sub = Subsphere(np.asarray(lv["axis"], dtype=float), float(lv["angle"]))
        subspheres.append(sub)
        test = lv.get("test")
        result = None
        if test is not None:
            result = LevelTestResult(
                test=test["name"],
                statistic=test["statistic"],
                p_value=test["p"],
                chose_small=lv["choice"] == "small",
                n=0,
            )
        records.append(
            LevelRecord(
                sphere_dim=sub.axis.size - 1,
                choice=lv.get("choice") or "small",
                angle=sub.angle,
                test=result,
                rss_great=lv.get("rss_great"),
                rss_small=lv.get("rss_small"),
                converged=True,
            )
        )
    collapse = doc.get("collapse_point")
    model = NestedSphereModel(
        ambient_dim=d,
        subspheres=tuple(subspheres),
        final_mean=None if doc["final_mean"] is None else float(doc["final_mean"]),
        pns_mean=np.asarray(doc["pns_mean"], dtype=float),
        cumulative_radii=np.asarray(doc["cumulative_radii"], dtype=float),
        level_choices=tuple(records),
        mode=doc.get("mode", "small"),
        alpha=float(doc.get("alpha", 0.05)),
        truncated=bool(doc.get("truncated", False)),
        collapse_point=None if collapse is None else np.asarray(collapse, dtype=float),
    )
    basis = None
    if "fast_basis" in doc:
        fb = doc["fast_basis"]
        basis = FastPnsBasis(
            mean=np.asarray(fb["mean"], dtype=float),
            arithmetic_mean=np.asarray(fb["arithmetic_mean"], dtype=float),
            loadings=np.asarray(fb["loadings"], dtype=float),
            eigenvalues=np.asarray(fb["eigenvalues"], dtype=float),
            pct_variance=float(fb["pct_variance"]),
        )
    return model, basis


def _emit_json(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError("cannot serialize non-finite number")
        out.append(f"{float(obj):.17g}")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(", ")
            _emit_json(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, val) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _emit_json(val, out)
        out.append("}")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps_model(doc: dict) -> str:
    """Serialize a JSON document with 17-significant-digit floats."""
    out: list[str] = []
    _emit_json(doc, out)
    return "".join(out) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file and rename, so readers never see partials."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
