"""Classification metrics, ROC/AUC, evasion curves, and report emission.

All computations here are pure functions over score/label arrays; callers
evaluate models (possibly concurrently) and pass the results in. Percentages
are stored as fractions throughout and scaled only when printed elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .ioutil import canonical_dumps, write_text_atomic

METRICS_CSV_HEADER = "model,accuracy,precision,recall,f1,auc,tp,fp,tn,fn"
ROC_CSV_HEADER = "fpr,tpr,threshold"
EVASION_CSV_HEADER = "x,evasion_rate,n_attempts"

REPORT_FORMATS = ("csv", "json")

# CSV marker for AUC on single-class label sets, where it has no meaning
AUC_UNDEFINED = "undefined"


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    n: int


@dataclass(frozen=True)
class RocCurve:
    """Stepwise ROC: (fpr, tpr, threshold) rows, thresholds descending."""

    points: tuple

    def __post_init__(self):
        pts = tuple((float(f), float(t), float(thr)) for f, t, thr in self.points)
        object.__setattr__(self, "points", pts)
        fprs = [p[0] for p in pts]
        tprs = [p[1] for p in pts]
        if any(b < a for a, b in zip(fprs, fprs[1:])):
            raise ValueError("fpr must be non-decreasing along the curve")
        if any(b < a for a, b in zip(tprs, tprs[1:])):
            raise ValueError("tpr must be non-decreasing along the curve")


@dataclass(frozen=True)
class EvasionCurve:
    axis_name: str
    points: tuple  # (x, evasion_rate, n_attempts)

    def __post_init__(self):
        pts = tuple((float(x), float(r), int(n)) for x, r, n in self.points)
        object.__setattr__(self, "points", pts)
        for x, rate, attempts in pts:
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"evasion rate {rate} at x={x} outside [0, 1]")
            if attempts <= 0:
                raise ValueError(f"n_attempts must be positive, got {attempts}")


@dataclass(frozen=True)
class ComparisonEntry:
    """One model's clean scores plus its measured under-attack evasion.

    immune marks rows whose construction guarantees zero evasion (the
    non-negative defenses under an additive attack); the table generator
    refuses to emit a table contradicting that guarantee.
    """

    name: str
    scores: np.ndarray
    evasion_rate: float
    n_attempts: int
    immune: bool = False


def _checked_arrays(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape[0] != labels.shape[0]:
        raise ValueError(f"scores length {scores.shape[0]} != labels length {labels.shape[0]}")
    if scores.shape[0] == 0:
        raise ValueError("no samples")
    return scores, labels


def roc_curve(scores, labels) -> RocCurve:
    """Stepwise curve with one threshold per distinct score, (0,0) pinned."""
    scores, labels = _checked_arrays(scores, labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_curve needs both classes present")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = (labels[order] == 1).astype(np.int64)
    tps = np.cumsum(sorted_pos)
    fps = np.cumsum(1 - sorted_pos)
    # keep the last row of each tied-score block: that is the step the
    # threshold actually produces when predictions use score >= threshold
    last_of_block = np.nonzero(np.diff(sorted_scores, append=-np.inf))[0]
    points = [(0.0, 0.0, math.inf)]
    for i in last_of_block:
        points.append((fps[i] / n_neg, tps[i] / n_pos, float(sorted_scores[i])))
    return RocCurve(points=tuple(points))


def _auc_trapezoid(curve: RocCurve) -> float:
    area = 0.0
    for (x0, y0, _), (x1, y1, _) in zip(curve.points, curve.points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def compute_metrics(scores, labels, threshold: float = 0.5) -> MetricsReport:
    """Confusion counts at the threshold (ties predict positive) plus AUC."""
    scores, labels = _checked_arrays(scores, labels)
    pred = scores >= threshold
    pos = labels == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    tn = int(np.sum(~pred & ~pos))
    fn = int(np.sum(~pred & pos))
    n = len(labels)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    single_class = pos.all() or not pos.any()
    auc = None if single_class else _auc_trapezoid(roc_curve(scores, labels))
    return MetricsReport(accuracy=(tp + tn) / n, precision=precision,
                         recall=recall, f1=f1, auc=auc,
                         tp=tp, fp=fp, tn=tn, fn=fn, n=n)


def defense_comparison(entries, labels, threshold: float = 0.5) -> list:
    """Clean metrics next to under-attack evasion, one row per model."""
    labels = np.asarray(labels).reshape(-1)
    rows = []
    for entry in entries:
        if entry.immune and entry.evasion_rate != 0.0:
            raise RuntimeError(
                f"model {entry.name!r} is declared immune but shows evasion "
                f"rate {entry.evasion_rate}")
        report = compute_metrics(entry.scores, labels, threshold)
        row = {"model": entry.name, **asdict(report),
               "evasion_rate": float(entry.evasion_rate),
               "n_attempts": int(entry.n_attempts), "immune": entry.immune}
        rows.append(row)
    return rows


def _fmt(value) -> str:
    if value is None:
        return AUC_UNDEFINED
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.6g" % value


def _metrics_csv_row(label: str, fields: dict) -> str:
    cells = [label] + [_fmt(fields[k]) for k in
                       ("accuracy", "precision", "recall", "f1", "auc",
                        "tp", "fp", "tn", "fn")]
    return ",".join(cells)


def _render_csv(obj, label: str) -> str:
    if isinstance(obj, MetricsReport):
        return "\n".join([METRICS_CSV_HEADER,
                          _metrics_csv_row(label, asdict(obj))]) + "\n"
    if isinstance(obj, RocCurve):
        rows = [",".join(_fmt(v) for v in pt) for pt in obj.points]
        return "\n".join([ROC_CSV_HEADER] + rows) + "\n"
    if isinstance(obj, EvasionCurve):
        rows = [",".join(_fmt(v) for v in pt)
                for pt in sorted(obj.points, key=lambda p: p[0])]
        return "\n".join([EVASION_CSV_HEADER] + rows) + "\n"
    if isinstance(obj, list):
        rows = [_metrics_csv_row(r["model"], r) for r in obj]
        return "\n".join([METRICS_CSV_HEADER] + rows) + "\n"
    raise TypeError(f"cannot render {type(obj).__name__} as a report")


def _render_json(obj, label: str) -> str:
    if isinstance(obj, MetricsReport):
        return canonical_dumps({"model": label, **asdict(obj)})
    if isinstance(obj, (RocCurve, EvasionCurve)):
        return canonical_dumps(asdict(obj))
    if isinstance(obj, list):
        return canonical_dumps(obj)
    raise TypeError(f"cannot render {type(obj).__name__} as a report")


def emit_report(obj, path, fmt: str = "csv", *, label: str = "model") -> None:
    """Write a report file; CSV floats use 6 significant digits."""
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; expected one of {REPORT_FORMATS}")
    text = _render_csv(obj, label) if fmt == "csv" else _render_json(obj, label)
    try:
        write_text_atomic(Path(path), text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
