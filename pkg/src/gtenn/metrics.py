"""External clustering scores: purity, NMI, homogeneity, completeness.

All entropies use natural logarithms. Degenerate cases follow the usual
V-measure conventions: homogeneity is 1 when the truth has a single class,
completeness is 1 when the prediction has a single cluster, and NMI is 1
when both sides are single-cluster partitions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError

METRICS = ("purity", "nmi", "homogeneity", "completeness")


def _labels(x) -> np.ndarray:
    return np.asarray(getattr(x, "labels", x)).reshape(-1)


@dataclass(frozen=True)
class ContingencyTable:
    """``counts[k, j]`` = nodes in predicted community k and true community j."""

    counts: np.ndarray

    @classmethod
    def build(cls, pred, truth) -> "ContingencyTable":
        p, t = _labels(pred), _labels(truth)
        if p.shape != t.shape:
            raise ValidationError(f"partitions cover different node sets ({len(p)} vs {len(t)} nodes)")
        if len(p) == 0:
            raise ValidationError("cannot score an empty partition")
        _, pi = np.unique(p, return_inverse=True)
        _, ti = np.unique(t, return_inverse=True)
        counts = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
        np.add.at(counts, (pi, ti), 1)
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def pred_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def true_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _entropy(sizes: np.ndarray, total: int) -> float:
    p = sizes[sizes > 0] / total
    return float(-(p * np.log(p)).sum())


def _conditional_entropy(table: ContingencyTable) -> float:
    """H(truth | pred)."""
    c = table.counts
    nz = c > 0
    rows = np.broadcast_to(table.pred_sizes[:, None], c.shape)
    joint = c[nz] / table.total
    return float(-(joint * np.log(c[nz] / rows[nz])).sum())


def _mutual_information(table: ContingencyTable) -> float:
    c = table.counts
    n = table.total
    nz = c > 0
    outer = np.outer(table.pred_sizes, table.true_sizes)
    joint = c[nz] / n
    return float((joint * np.log(c[nz] * n / outer[nz])).sum())


def _clip(x: float) -> float:
    return min(1.0, max(0.0, x))


def _purity(table: ContingencyTable) -> float:
    return float(table.counts.max(axis=1).sum() / table.total)


def _nmi(table: ContingencyTable) -> float:
    h_pred = _entropy(table.pred_sizes, table.total)
    h_true = _entropy(table.true_sizes, table.total)
    if h_pred + h_true == 0:
        return 1.0
    return _clip(2.0 * _mutual_information(table) / (h_pred + h_true))


def _homogeneity(table: ContingencyTable) -> float:
    h_true = _entropy(table.true_sizes, table.total)
    if h_true == 0:
        return 1.0
    return _clip(1.0 - _conditional_entropy(table) / h_true)


def purity(pred, truth) -> float:
    return _purity(ContingencyTable.build(pred, truth))


def nmi(pred, truth) -> float:
    return _nmi(ContingencyTable.build(pred, truth))


def homogeneity(pred, truth) -> float:
    """``1 - H(truth | pred) / H(truth)``: each predicted cluster holds one class."""
    return _homogeneity(ContingencyTable.build(pred, truth))


def completeness(pred, truth) -> float:
    """``1 - H(pred | truth) / H(pred)``: each class sits in one predicted cluster."""
    return homogeneity(truth, pred)


def score(pred, truth) -> dict[str, float]:
    table = ContingencyTable.build(pred, truth)
    return {
        "purity": _purity(table),
        "nmi": _nmi(table),
        "homogeneity": _homogeneity(table),
        "completeness": _homogeneity(ContingencyTable(table.counts.T)),
    }


@dataclass
class SequenceReport:
    per_snapshot: list[dict[str, float]]

    @property
    def means(self) -> dict[str, float]:
        return {m: float(np.mean([row[m] for row in self.per_snapshot])) for m in METRICS}


def evaluate_sequence(preds: Sequence, truths: Sequence) -> SequenceReport:
    if len(preds) != len(truths):
        raise ValidationError(f"{len(preds)} predicted snapshots but {len(truths)} ground-truth snapshots")
    if not preds:
        raise ValidationError("nothing to evaluate")
    return SequenceReport([score(p, t) for p, t in zip(preds, truths)])


def write_metrics_csv(path, report: SequenceReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *METRICS])
        for t, row in enumerate(report.per_snapshot, start=1):
            w.writerow([t, *[repr(row[m]) for m in METRICS]])
        means = report.means
        w.writerow(["mean", *[repr(means[m]) for m in METRICS]])
