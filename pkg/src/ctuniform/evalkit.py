"""Classifier evaluation: AUC, accuracy, ROC export, cross-validation.

AUC is the Mann-Whitney statistic computed from average ranks. Ranks are
integers or exact halves, so the statistic is bit-identical to explicit
pair counting (wins plus half the ties over positive*negative pairs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateLabelsError, EmptyInputError, IoError


def _validated(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.ndim != 1 or labels.shape != scores.shape:
        raise EmptyInputError(
            f"scores and labels must be matching 1-D arrays, got {scores.shape} and {labels.shape}"
        )
    if scores.size == 0:
        raise EmptyInputError("no samples to evaluate")
    if not np.all((labels == 0) | (labels == 1)):
        raise DegenerateLabelsError("labels must be 0 or 1")
    return scores, labels


def _average_ranks(scores):
    """1-based ranks with ties averaged; exact halves for even-size ties."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    start = 0
    while start < scores.size:
        end = start
        while end + 1 < scores.size and sorted_scores[end + 1] == sorted_scores[start]:
            end += 1
        ranks[order[start:end + 1]] = (start + end + 2) / 2.0
        start = end + 1
    return ranks


def auc(scores, labels) -> float:
    """Probability a positive outscores a negative, ties counting half."""
    scores, labels = _validated(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(
            f"AUC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )
    ranks = _average_ranks(scores)
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def acc(scores, labels, threshold=0.5) -> float:
    """Fraction of samples where (score >= threshold) matches the label."""
    scores, labels = _validated(scores, labels)
    predicted = (scores >= threshold).astype(np.int64)
    return float((predicted == labels).mean())


def roc_points(scores, labels):
    """(threshold, fpr, tpr) rows: +inf sentinel, distinct scores descending, -inf."""
    scores, labels = _validated(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(
            f"ROC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    l = labels[order]
    rows = [(math.inf, 0.0, 0.0)]
    tp = 0
    fp = 0
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and s[j + 1] == s[i]:
            j += 1
        group = l[i:j + 1]
        tp += int(group.sum())
        fp += group.size - int(group.sum())
        rows.append((float(s[i]), fp / n_neg, tp / n_pos))
        i = j + 1
    rows.append((-math.inf, 1.0, 1.0))
    return rows


def trapezoid_auc(points) -> float:
    """Area under the (fpr, tpr) polyline of roc_points rows."""
    area = 0.0
    for (_, f0, t0), (_, f1, t1) in zip(points, points[1:]):
        area += (f1 - f0) * (t0 + t1) / 2.0
    return area


def export_roc(scores, labels, path) -> None:
    rows = roc_points(scores, labels)
    lines = ["threshold,fpr,tpr"]
    for threshold, fpr, tpr in rows:
        lines.append(f"{threshold!r},{fpr!r},{tpr!r}")
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write ROC file {path}: {exc}") from exc


@dataclass(frozen=True)
class EvalSample:
    id: str
    score: float
    label: int


@dataclass(frozen=True)
class EvalReport:
    samples: tuple
    auc: float
    acc: float


def make_report(ids, scores, labels) -> EvalReport:
    scores_arr, labels_arr = _validated(scores, labels)
    ids = [str(i) for i in ids]
    if len(ids) != scores_arr.size:
        raise EmptyInputError(f"{len(ids)} ids for {scores_arr.size} scores")
    samples = tuple(
        EvalSample(i, float(s), int(l)) for i, s, l in zip(ids, scores_arr, labels_arr)
    )
    return EvalReport(samples, auc(scores_arr, labels_arr), acc(scores_arr, labels_arr))


@dataclass(frozen=True)
class TrialResult:
    trial: int
    auc: float
    acc: float


@dataclass(frozen=True)
class CrossValSummary:
    trials: tuple
    mean_auc: float
    std_auc: float
    mean_acc: float
    std_acc: float


def cross_validate(payloads, labels, pipeline, trials=10, train_fraction=0.8, seed=0):
    """Repeated random split evaluation.

    ``pipeline(train_payloads, train_labels, test_payloads, rng)`` must return
    one score per test payload. Splits whose train or test fold is single-class
    are redrawn (at most 100 attempts per trial). The fold permutation and the
    rng handed to the pipeline are derived from (seed, trial, attempt), so a
    summary is reproducible independently of earlier trials.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = len(payloads)
    if n < 5:
        raise EmptyInputError(f"cross-validation needs at least 5 samples, got {n}")
    if labels.shape != (n,):
        raise EmptyInputError(f"labels shape {labels.shape} does not match {n} payloads")
    if labels.min() == labels.max():
        raise DegenerateLabelsError("cross-validation needs both classes in the dataset")
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n_train = int(math.floor(train_fraction * n))
    if n_train < 2 or n - n_train < 2:
        raise ConfigError(
            f"train_fraction {train_fraction} leaves a fold with fewer than 2 samples"
        )

    results = []
    for trial in range(int(trials)):
        chosen = None
        for attempt in range(100):
            rng = np.random.default_rng([int(seed), trial, attempt])
            perm = rng.permutation(n)
            train_idx = perm[:n_train]
            test_idx = perm[n_train:]
            folds_ok = (
                labels[train_idx].min() != labels[train_idx].max()
                and labels[test_idx].min() != labels[test_idx].max()
            )
            if folds_ok:
                chosen = (train_idx, test_idx, attempt)
                break
        if chosen is None:
            raise DegenerateLabelsError(
                f"trial {trial}: no two-class split found in 100 attempts"
            )
        train_idx, test_idx, attempt = chosen
        pipeline_rng = np.random.default_rng([int(seed), trial, attempt, 1])
        train_payloads = [payloads[i] for i in train_idx]
        test_payloads = [payloads[i] for i in test_idx]
        scores = np.asarray(
            pipeline(train_payloads, labels[train_idx], test_payloads, pipeline_rng),
            dtype=np.float64,
        )
        if scores.shape != (len(test_payloads),):
            raise EmptyInputError(
                f"pipeline returned {scores.shape} scores for {len(test_payloads)} test samples"
            )
        results.append(
            TrialResult(trial, auc(scores, labels[test_idx]), acc(scores, labels[test_idx]))
        )
    aucs = np.array([r.auc for r in results])
    accs = np.array([r.acc for r in results])
    return CrossValSummary(
        trials=tuple(results),
        mean_auc=float(aucs.mean()),
        std_auc=float(aucs.std()),
        mean_acc=float(accs.mean()),
        std_acc=float(accs.std()),
    )
