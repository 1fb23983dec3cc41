"""Attack evaluation: ROC staircase, AUROC, balanced accuracy, TPR at FPR.

Scores are member-oriented by contract (larger means more likely member).
The ROC is the empirical staircase over distinct thresholds with ties
grouped; TPR-at-FPR reads operating points off that staircase without
interpolation, since interpolating would fabricate operating points at low
FPR where sample counts are tiny.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RocCurve:
    """(fpr, tpr) staircase from (0,0) to (1,1), nondecreasing in both."""

    points: np.ndarray  # [n_points, 2] columns (fpr, tpr)
    n_pos: int
    n_neg: int

    @property
    def fpr(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def tpr(self) -> np.ndarray:
        return self.points[:, 1]


def _check_scores(scores, side: str) -> np.ndarray:
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 1 or len(arr) == 0:
        raise ValueError(f"{side} scores must be a nonempty 1-d array")
    if not np.isfinite(arr).all():
        raise ValueError(f"{side} scores must be finite")
    return arr


def roc_curve(member_scores, nonmember_scores) -> RocCurve:
    """Descending-threshold sweep; each distinct score value is one segment."""
    pos = _check_scores(member_scores, "member")
    neg = _check_scores(nonmember_scores, "nonmember")
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    pos_sorted = np.sort(pos)
    neg_sorted = np.sort(neg)
    # count of scores >= t via binary search on the ascending sort
    tp = len(pos) - np.searchsorted(pos_sorted, thresholds, side="left")
    fp = len(neg) - np.searchsorted(neg_sorted, thresholds, side="left")
    fpr = np.concatenate([[0.0], fp / len(neg)])
    tpr = np.concatenate([[0.0], tp / len(pos)])
    return RocCurve(points=np.column_stack([fpr, tpr]), n_pos=len(pos), n_neg=len(neg))


def auroc(curve: RocCurve) -> float:
    """Trapezoidal area; equals P(member > nonmember) + 0.5 P(tie).

    Accumulated over the integer confusion counts so the result is the
    correctly-rounded rational, matching exhaustive pair counting exactly.
    """
    fp = np.rint(curve.fpr * curve.n_neg).astype(np.int64)
    tp = np.rint(curve.tpr * curve.n_pos).astype(np.int64)
    twice_area = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    return twice_area / (2 * curve.n_pos * curve.n_neg)


def balanced_accuracy(curve: RocCurve) -> float:
    """max over operating points of (TPR + TNR) / 2, member orientation fixed."""
    return float(np.max((curve.tpr + 1.0 - curve.fpr) / 2.0))


def tpr_at_fpr(curve: RocCurve, fpr_target: float) -> float:
    """Largest TPR among staircase points with FPR <= target."""
    if not 0.0 <= fpr_target <= 1.0:
        raise ValueError(f"fpr_target must lie in [0, 1], got {fpr_target}")
    feasible = curve.tpr[curve.fpr <= fpr_target]
    return float(feasible.max()) if len(feasible) else 0.0


def fpr_key(target: float) -> str:
    """Compact report key for an FPR target: 0.001 -> '1e-3'."""
    if target == 0:
        return "0"
    exp = int(np.floor(np.log10(abs(target))))
    mantissa = target / 10.0 ** exp
    if np.isclose(mantissa, round(mantissa)):
        m = int(round(mantissa))
        return str(m * 10 ** exp) if exp >= 0 else f"{m}e{exp}"
    return format(target, ".17g")


def evaluate_scores(member_scores, nonmember_scores,
                    fpr_targets=(0.1, 0.01, 0.001)) -> dict:
    """Full metric report for one method's scores."""
    curve = roc_curve(member_scores, nonmember_scores)
    return {
        "auroc": auroc(curve),
        "bal_acc": balanced_accuracy(curve),
        "tpr_at": {fpr_key(t): tpr_at_fpr(curve, t) for t in fpr_targets},
        "n_pos": curve.n_pos,
        "n_neg": curve.n_neg,
    }


def roc_points_csv(curve: RocCurve) -> str:
    lines = ["fpr,tpr"]
    lines += [f"{format(f, '.17g')},{format(t, '.17g')}" for f, t in curve.points]
    return "\n".join(lines) + "\n"
