"""Confusion metrics, ROC/AUC, balanced leave-one-group-out folds, threshold sweeps and EER.

The valid user is the positive class throughout.
"""

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from wearauth.errors import DataError

METRIC_NAMES = ("ACC", "RMSE", "FAR", "FRR", "F1", "AUC_ROC")
THRESHOLDS = np.round(np.arange(101) / 100.0, 2)


@dataclass(frozen=True)
class ConfusionCounts:
    TP: int
    FN: int
    FP: int
    TN: int

    @property
    def total(self):
        return self.TP + self.FN + self.FP + self.TN

    @classmethod
    def from_predictions(cls, valid, accepted):
        valid = np.asarray(valid, dtype=bool)
        accepted = np.asarray(accepted, dtype=bool)
        return cls(int(np.sum(valid & accepted)), int(np.sum(valid & ~accepted)),
                   int(np.sum(~valid & accepted)), int(np.sum(~valid & ~accepted)))


@dataclass(frozen=True)
class MetricReport:
    ACC: float
    RMSE: float
    FAR: float
    FRR: float
    F1: float
    AUC_ROC: float = float("nan")


def metrics(counts, auc=float("nan")):
    """Accuracy, RMSE (sqrt of the misclassification rate), FAR, FRR and F1."""
    tp, fn, fp, tn = counts.TP, counts.FN, counts.FP, counts.TN
    total = counts.total
    if total <= 0:
        raise DataError("metrics need at least one counted instance")
    acc = (tp + tn) / total
    rmse = math.sqrt((fp + fn) / total)
    far = fp / (fp + tn) if fp + tn else 0.0
    frr = fn / (tp + fn) if tp + fn else 0.0
    if tp == 0:
        f1 = 1.0 if fp == 0 and fn == 0 else 0.0
    else:
        f1 = 2 * tp / (2 * tp + fp + fn)
    return MetricReport(acc, rmse, far, frr, f1, auc)


def _check_both(labels):
    labels = np.asarray(labels, dtype=bool)
    if labels.all() or not labels.any():
        raise DataError("need both valid and imposter rows")
    return labels


def roc_curve(scores, valid):
    """(FPR, TPR) points over every distinct score threshold, equal scores grouped."""
    valid = _check_both(valid)
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    v = valid[order]
    last = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    tps = np.cumsum(v)[last]
    fps = np.cumsum(~v)[last]
    tpr = np.r_[0.0, tps / v.sum()]
    fpr = np.r_[0.0, fps / (~v).sum()]
    return fpr, tpr


def roc_auc(scores, valid):
    """Trapezoidal area under the ROC curve."""
    fpr, tpr = roc_curve(scores, valid)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


@dataclass(frozen=True)
class SweepCurve:
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray


def threshold_sweep(scores, valid, thresholds=THRESHOLDS):
    """FAR and FRR when accepting every row whose confidence is >= each threshold."""
    valid = _check_both(valid)
    scores = np.asarray(scores, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    accept = scores[None, :] >= thresholds[:, None]
    far = (accept & ~valid).sum(axis=1) / (~valid).sum()
    frr = (~accept & valid).sum(axis=1) / valid.sum()
    return SweepCurve(thresholds, far, frr)


@dataclass(frozen=True)
class EerResult:
    threshold: float
    rate: float
    flagged: bool = False


def eer(curve):
    """Equal error rate by linear interpolation at the first FAR/FRR crossing.

    Without a crossing the grid point with the smallest |FAR - FRR| is
    returned and ``flagged`` is set.
    """
    th, far, frr = curve.thresholds, curve.far, curve.frr
    d = far - frr
    for k in range(d.size):
        if d[k] == 0:
            return EerResult(float(th[k]), float(far[k]))
        if k + 1 < d.size and d[k] > 0 > d[k + 1]:
            t = d[k] / (d[k] - d[k + 1])
            return EerResult(float(th[k] + t * (th[k + 1] - th[k])), float(far[k] + t * (far[k + 1] - far[k])))
    k = int(np.argmin(np.abs(d)))
    return EerResult(float(th[k]), float((far[k] + frr[k]) / 2.0), True)


# --- fold planning --------------------------------------------------------

@dataclass(frozen=True)
class FoldPlan:
    subject: str
    held_out_group: int
    train_rows: np.ndarray
    test_rows: np.ndarray
    train_valid: np.ndarray  # boolean, aligned with train_rows
    test_valid: np.ndarray


def plan_folds(subjects, groups, seed=0):
    """Leave-one-group-out folds with balanced imposter sampling.

    ``subjects`` and ``groups`` label every instance row. For each valid
    subject and held-out group ``g``: the valid subject's other groups train
    and group ``g`` tests; each imposter contributes ``n_train // n_imp``
    rows drawn from its groups other than ``g`` and ``n_test // n_imp`` rows
    from its group ``g``, uniformly without replacement.
    """
    subjects = np.asarray(subjects)
    groups = np.asarray(groups)
    ids = sorted(set(subjects.tolist()))
    if len(ids) < 2:
        raise DataError("fold planning needs at least 2 subjects")
    group_ids = sorted(set(groups.tolist()))
    if len(group_ids) < 2:
        raise DataError("group structure missing: need at least 2 groups per subject")
    for s in ids:
        if sorted(set(groups[subjects == s].tolist())) != group_ids:
            raise DataError(f"subject {s} lacks the common group structure {group_ids}")
    plans = []
    for si, s in enumerate(ids):
        imposters = [o for o in ids if o != s]
        for g in group_ids:
            own = subjects == s
            valid_train = np.flatnonzero(own & (groups != g))
            valid_test = np.flatnonzero(own & (groups == g))
            per_train = valid_train.size // len(imposters)
            per_test = valid_test.size // len(imposters)
            rng = np.random.default_rng([seed, si, int(g)])
            imp_train, imp_test = [], []
            for o in imposters:
                theirs = subjects == o
                pool_train = np.flatnonzero(theirs & (groups != g))
                pool_test = np.flatnonzero(theirs & (groups == g))
                if pool_train.size < per_train or pool_test.size < per_test:
                    raise DataError(f"imposter {o} has too few rows for balanced sampling")
                imp_train.append(np.sort(rng.choice(pool_train, per_train, replace=False)))
                imp_test.append(np.sort(rng.choice(pool_test, per_test, replace=False)))
            train = np.concatenate([valid_train, *imp_train])
            test = np.concatenate([valid_test, *imp_test])
            plans.append(FoldPlan(s, int(g), train, test,
                                  np.arange(train.size) < valid_train.size,
                                  np.arange(test.size) < valid_test.size))
    return plans


# --- aggregation ----------------------------------------------------------

def aggregate(reports, bin_width=0.05):
    """Mean, sample std, five-number summary and PDF/CDF histogram per metric."""
    if not reports:
        raise DataError("nothing to aggregate")
    edges = np.linspace(0.0, 1.0, int(round(1.0 / bin_width)) + 1)
    out = {}
    for name in METRIC_NAMES:
        vals = np.array([getattr(r, name) for r in reports], dtype=float)
        vals = vals[~np.isnan(vals)]
        if vals.size == 0:
            continue
        counts, _ = np.histogram(np.clip(vals, 0.0, 1.0), bins=edges)
        pdf = counts / vals.size
        out[name] = {
            "mean": float(vals.mean()),
            "std": float(vals.std(ddof=1)) if np.ptp(vals) > 0 else 0.0,
            "min": float(vals.min()),
            "q1": float(np.percentile(vals, 25)),
            "median": float(np.median(vals)),
            "q3": float(np.percentile(vals, 75)),
            "max": float(vals.max()),
            "bin_edges": edges.tolist(),
            "pdf": pdf.tolist(),
            "cdf": np.cumsum(pdf).tolist(),
        }
    return out


def _fmt(v):
    return repr(float(v))


def write_reports_csv(path, rows):
    """``rows``: dicts with subject, fold, model, classifier and the metric columns."""
    fields = ["subject", "fold", "model", "classifier", *METRIC_NAMES]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([row[f] if f in ("subject", "fold", "model", "classifier") else _fmt(row[f])
                             for f in fields])


def report_row(subject, fold, model, classifier, report):
    return {"subject": subject, "fold": fold, "model": model, "classifier": classifier, **asdict(report)}


def write_aggregate_csv(path, model, classifier, summary):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "classifier", "metric", "mean", "std", "min", "q1", "median", "q3", "max"])
        for name, s in summary.items():
            writer.writerow([model, classifier, name, *(_fmt(s[k]) for k in
                                                       ("mean", "std", "min", "q1", "median", "q3", "max"))])


def write_curve_csv(path, curve):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "FAR", "FRR"])
        for row in zip(curve.thresholds, curve.far, curve.frr):
            writer.writerow([_fmt(v) for v in row])


def format_table(model, classifier, summary, k=20):
    """One row in the style of the results tables: mean (std) per metric."""
    cells = []
    for name in METRIC_NAMES:
        s = summary.get(name)
        cells.append("N/A" if s is None else f"{s['mean']:.2f} ({s['std']:.2f})")
    header = " | ".join(["model", "classifier", "features", *METRIC_NAMES])
    return header + "\n" + " | ".join([model, classifier, str(k), *cells])
