"""Max-score novelty decisions, threshold grids, and ROC/AUC evaluation.

An instance is flagged novel when its best class score falls strictly
below the threshold; novelty is the ROC-positive class, so the detection
rate is the TPR. AUC is the trapezoidal area of the empirical curve,
which (by construction of the threshold grid) coincides with the rank
statistic P(score_novel < score_known) + 0.5 * P(tie).
"""

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ParameterError
from .model import LabeledDataset, ScoreModel, score_matrix

KNOWN = "known"
NOVEL = "novel"


@dataclass(frozen=True)
class Detection:
    max_score: float
    best_class: int
    verdict: str


@dataclass
class RocCurve:
    """Operating points ordered by ascending threshold.

    fpr/tpr are aligned with thresholds; `points` yields the
    (threshold, fpr, tpr) triples. As the threshold decreases, fewer
    instances are flagged, so fpr and tpr are non-increasing.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self):
        return list(zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist()))


def trapezoid_area(x, y) -> float:
    """Trapezoidal area under the polyline (x ascending)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(0.5 * np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1])))


def max_score(model: ScoreModel, x):
    """(max_c f_c(x), argmax class index); smallest index wins ties."""
    scores = score_matrix(model, np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]
    best = int(np.argmax(scores))
    return float(scores[best]), best


def detect(model: ScoreModel, x, epsilon: float) -> Detection:
    """Flag x novel iff its max class score is strictly below epsilon."""
    ms, best = max_score(model, x)
    return Detection(max_score=ms, best_class=best,
                     verdict=NOVEL if ms < epsilon else KNOWN)


def max_scores(model: ScoreModel, xs) -> np.ndarray:
    """Batch max-over-classes scores, shape (n,)."""
    return score_matrix(model, xs).max(axis=1)


def threshold_grid(model: ScoreModel, dataset: LabeledDataset) -> np.ndarray:
    """Sorted unique max-scores of every training instance, with -inf/+inf
    sentinels; sweeping it yields the full empirical ROC on that data."""
    values = np.unique(max_scores(model, dataset.instances))
    return np.concatenate(([-np.inf], values, [np.inf]))


def roc_from_scores(scores, novel_mask, thresholds=None) -> RocCurve:
    """Empirical ROC of max-scores against ground-truth novelty flags.

    The swept grid always contains every distinct score plus the -inf/+inf
    sentinels, so the curve is complete and its trapezoidal AUC equals the
    tie-aware rank statistic; any extra `thresholds` (e.g. a grid derived
    from training instances) are merged in as additional reported points.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    novel_mask = np.asarray(novel_mask, dtype=bool).ravel()
    if scores.shape != novel_mask.shape:
        raise ParameterError("scores and novelty flags must align")
    n_novel = int(novel_mask.sum())
    n_known = scores.size - n_novel
    if n_novel == 0 or n_known == 0:
        raise EvaluationError(
            f"ROC undefined: {n_novel} novel and {n_known} known instances")
    grid = np.unique(scores)
    if thresholds is not None:
        grid = np.union1d(grid, np.asarray(thresholds, dtype=np.float64))
    grid = np.unique(np.concatenate((grid, [-np.inf, np.inf])))
    novel_sorted = np.sort(scores[novel_mask])
    known_sorted = np.sort(scores[~novel_mask])
    tpr = np.searchsorted(novel_sorted, grid, side="left") / n_novel
    fpr = np.searchsorted(known_sorted, grid, side="left") / n_known
    return RocCurve(thresholds=grid, fpr=fpr, tpr=tpr, auc=trapezoid_area(fpr, tpr))


def roc(model: ScoreModel, dataset: LabeledDataset, thresholds=None) -> RocCurve:
    """ROC over all instances of an evaluation dataset.

    Every instance must carry a ground-truth class tag; an instance is
    truly novel iff its tag lies outside the model's known label set.
    All test instances are pooled, whichever bag they came from.
    """
    tags = dataset.true_classes_flat()
    if any(t is None for t in tags):
        raise EvaluationError("every evaluation instance needs a ground-truth class tag")
    known = set(model.label_order)
    novel_mask = np.array([t not in known for t in tags], dtype=bool)
    scores = max_scores(model, dataset.instances)
    return roc_from_scores(scores, novel_mask, thresholds=thresholds)
