"""Task metrics and the CSV files experiments emit."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


class MetricsError(ValueError):
    pass


def hamming_accuracy(pred, truth, threshold: float = 0.5) -> float:
    """Share of label bits placed correctly after thresholding.

    pred holds truth degrees in [0, 1]; truth holds crisp 0/1 indicator
    rows (one-hot or multi-hot).
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise MetricsError(f"shape mismatch: pred {pred.shape} vs truth {truth.shape}")
    if pred.ndim != 2:
        raise MetricsError(f"expected (n, classes) arrays, got {pred.ndim}-d")
    if not 0.0 < threshold < 1.0:
        raise MetricsError(f"threshold must be in (0, 1), got {threshold}")
    if not np.all((truth == 0.0) | (truth == 1.0)):
        raise MetricsError("truth entries must be exactly 0 or 1")
    hard = (pred >= threshold).astype(np.float64)
    return float(1.0 - np.mean(np.abs(hard - truth)))


def rmse(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise MetricsError(f"length mismatch: {pred.shape[0]} vs {truth.shape[0]}")
    if pred.size == 0:
        raise MetricsError("rmse needs at least one pair")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def regression_score(pred, truth) -> float:
    """Squash RMSE into [0, 1] so regression runs fill the accuracy fields."""
    return math.exp(-rmse(pred, truth))


@dataclass
class MetricsRecord:
    epoch: int
    sat_train: float
    sat_test: float
    acc_train: float
    acc_test: float
    queries: dict = field(default_factory=dict)  # name -> truth value


_UNIT_FIELDS = ("sat_train", "sat_test", "acc_train", "acc_test")


def _check_records(records):
    if not records:
        raise MetricsError("no metrics records to write")
    names = tuple(records[0].queries)
    last = None
    for r in records:
        if last is not None and r.epoch <= last:
            raise MetricsError(f"epochs must strictly increase, saw {last} then {r.epoch}")
        last = r.epoch
        if tuple(r.queries) != names:
            raise MetricsError("query columns differ between records")
        for fname in _UNIT_FIELDS:
            v = getattr(r, fname)
            if not 0.0 <= v <= 1.0:
                raise MetricsError(f"{fname}={v} at epoch {r.epoch} is outside [0, 1]")
        for q, v in r.queries.items():
            if not 0.0 <= v <= 1.0:
                raise MetricsError(f"query {q}={v} at epoch {r.epoch} is outside [0, 1]")
    return names


def write_metrics_csv(records, path):
    """Write per-epoch training metrics with 6 fractional digits."""
    names = _check_records(records)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", *_UNIT_FIELDS, *names])
        for r in records:
            row = [str(r.epoch)]
            row += [f"{getattr(r, f):.6f}" for f in _UNIT_FIELDS]
            row += [f"{r.queries[q]:.6f}" for q in names]
            w.writerow(row)


def read_metrics_csv(path):
    """Inverse of write_metrics_csv; returns (records, query names)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise MetricsError(f"{path}: metrics file has no data rows")
    header = rows[0]
    if header[: 1 + len(_UNIT_FIELDS)] != ["epoch", *_UNIT_FIELDS]:
        raise MetricsError(f"{path}: unexpected header {header}")
    names = header[1 + len(_UNIT_FIELDS) :]
    records = []
    for row in rows[1:]:
        vals = [float(v) for v in row[1:]]
        records.append(
            MetricsRecord(
                epoch=int(row[0]),
                sat_train=vals[0],
                sat_test=vals[1],
                acc_train=vals[2],
                acc_test=vals[3],
                queries=dict(zip(names, vals[4:])),
            )
        )
    return records, tuple(names)


def write_predictions_csv(y, y_pred, path):
    """Per-sample regression table, worst predictions first."""
    y = np.asarray(y, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y.shape != y_pred.shape:
        raise MetricsError(f"length mismatch: {y.shape[0]} vs {y_pred.shape[0]}")
    dif = np.abs(y - y_pred)
    order = np.argsort(-dif, kind="stable")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "y_pred", "dif"])
        for i in order:
            w.writerow([f"{y[i]:.6f}", f"{y_pred[i]:.6f}", f"{dif[i]:.6f}"])


def write_series_csv(path, header, rows):
    """Small generic writer for two-column plot data and loss tables."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
