"""Membership scores: Gaussian likelihood-ratio tests on curvature plus baselines.

The shadow ensemble gives every example two score sample sets: one from
models that trained on it (IN) and one from models that did not (OUT).  Each
side is summarized by a Gaussian, and membership is scored as the
log-density difference at the target model's observation.

Two fitting conventions realize the LR/NLL method pair:

* ``curv_lr``  — equal-variance test: both sides share the pooled sample
  standard deviation.
* ``curv_nll`` — per-side test: each side keeps its own fitted deviation.

Given the same fitted pair, :func:`curv_lr_score` and :func:`curv_nll_score`
are the same function (both log-density differences, member-oriented); the
two methods differ only through the variance convention used at fit time.

All scores in this module are oriented so that larger means more likely
member.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .data import MembershipLedger
from .nn import PROB_CLIP

SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class GaussianPair:
    """Per-example fitted IN/OUT score model."""

    mu_in: float
    sigma_in: float
    mu_out: float
    sigma_out: float
    n_in: int
    n_out: int

    def swapped(self) -> "GaussianPair":
        return GaussianPair(mu_in=self.mu_out, sigma_in=self.sigma_out,
                            mu_out=self.mu_in, sigma_out=self.sigma_in,
                            n_in=self.n_out, n_out=self.n_in)


@dataclass(frozen=True)
class AttackScore:
    example_id: int
    method: str
    value: float


def _fit_side(values: np.ndarray) -> tuple[float, float]:
    mu = float(values.mean())
    sigma = float(values.std(ddof=1))
    return mu, max(sigma, SIGMA_FLOOR)


def fit_gaussian_pairs(score_matrix: np.ndarray, ledger: MembershipLedger) -> list[GaussianPair]:
    """Fit one IN/OUT Gaussian pair per example from shadow observations.

    score_matrix[j, i] is model j's score for example i; ledger row j marks
    model j's training subset.  Every example needs >= 2 observations on
    each side; offenders are reported together.
    """
    scores = np.asarray(score_matrix, dtype=np.float64)
    if scores.shape != ledger.in_matrix.shape:
        raise ValueError(f"score matrix shape {scores.shape} does not match "
                         f"ledger shape {ledger.in_matrix.shape}")
    n_in = ledger.in_matrix.sum(axis=0)
    n_out = ledger.n_models - n_in
    starved = np.flatnonzero((n_in < 2) | (n_out < 2))
    if len(starved):
        raise ValueError("examples with fewer than 2 IN or 2 OUT observations: "
                         f"{starved.tolist()}")
    pairs = []
    for i in range(ledger.m):
        in_mask = ledger.in_matrix[:, i]
        mu_in, s_in = _fit_side(scores[in_mask, i])
        mu_out, s_out = _fit_side(scores[~in_mask, i])
        pairs.append(GaussianPair(mu_in=mu_in, sigma_in=s_in, mu_out=mu_out,
                                  sigma_out=s_out, n_in=int(n_in[i]), n_out=int(n_out[i])))
    return pairs


def pooled_sigma(pair: GaussianPair) -> float:
    """Pooled sample standard deviation across the two sides, floored."""
    dof = pair.n_in + pair.n_out - 2
    pooled_var = ((pair.n_in - 1) * pair.sigma_in ** 2
                  + (pair.n_out - 1) * pair.sigma_out ** 2) / dof
    return max(math.sqrt(pooled_var), SIGMA_FLOOR)


def pool_pair(pair: GaussianPair) -> GaussianPair:
    """Equal-variance version of `pair` for the LR convention."""
    s = pooled_sigma(pair)
    return replace(pair, sigma_in=s, sigma_out=s)


def _log_density(x: float, mu: float, sigma: float) -> float:
    z = (x - mu) / sigma
    return -math.log(sigma) - 0.5 * z * z


def curv_lr_score(target: float, pair: GaussianPair) -> float:
    """log N(target | in) - log N(target | out); larger means member."""
    return _log_density(target, pair.mu_in, pair.sigma_in) \
        - _log_density(target, pair.mu_out, pair.sigma_out)


def curv_nll_score(target: float, pair: GaussianPair) -> float:
    """Member-oriented negative-log-likelihood-ratio test.

    Identical to curv_lr_score on the same pair; the NLL method differs
    upstream by keeping per-side deviations instead of pooling.
    """
    return curv_lr_score(target, pair)


# -- baselines ---------------------------------------------------------------

def yeom_score(loss: float) -> float:
    """Global loss threshold attack: low loss means member."""
    return -float(loss)


def lira_score(target_logit: float, pair: GaussianPair) -> float:
    """Gaussian log-LR on scaled-logit confidences fitted from shadows."""
    return curv_lr_score(target_logit, pair)


def watson_offline_score(loss: float, out_losses: np.ndarray) -> float:
    """Loss calibrated by the mean loss of models not trained on the example."""
    out_losses = np.asarray(out_losses, dtype=np.float64)
    if len(out_losses) == 0:
        raise ValueError("watson_offline needs at least one OUT-model loss")
    return -float(loss) + float(out_losses.mean())


def sablayrolles_score(loss: float, shadow_losses: np.ndarray) -> float:
    """Loss against a per-example hardness calibration over all shadow losses."""
    shadow_losses = np.asarray(shadow_losses, dtype=np.float64)
    if len(shadow_losses) == 0:
        raise ValueError("sablayrolles needs at least one shadow loss")
    return -(float(loss) - float(shadow_losses.mean()))


def modified_entropy(probs: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Mentr = -(1 - p_y) log p_y - sum_{i != y} p_i log(1 - p_i), rowwise.

    Log arguments are clamped at PROB_CLIP so saturated predictions stay
    finite.
    """
    p = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    rows = np.arange(len(p))
    log_p = np.log(np.maximum(p, PROB_CLIP))
    log_1mp = np.log(np.maximum(1.0 - p, PROB_CLIP))
    p_true = p[rows, y]
    off_class = np.sum(p * log_1mp, axis=1) - p_true * log_1mp[rows, y]
    return -(1.0 - p_true) * log_p[rows, y] - off_class


def song_mentr_score(probs: np.ndarray, y: int) -> float:
    """Negated modified entropy of one prediction vector."""
    return -float(modified_entropy(np.asarray(probs)[None, :], np.array([y]))[0])


def ye_quantile_score(loss: float, out_losses: np.ndarray) -> float:
    """Right-tail midrank of the target loss within the OUT loss distribution.

    Fraction of OUT losses strictly above the target (ties counted half),
    i.e. the left-tail rank of the confidence -loss.  Near 1 when the loss
    is smaller than almost every OUT loss.
    """
    out_losses = np.asarray(out_losses, dtype=np.float64)
    if len(out_losses) == 0:
        raise ValueError("ye_quantile needs at least one OUT-model loss")
    above = np.count_nonzero(out_losses > loss)
    ties = np.count_nonzero(out_losses == loss)
    return (above + 0.5 * ties) / len(out_losses)


def baseline_score(kind: str, inputs: dict) -> float:
    """Dispatch a baseline by name; `inputs` carries its required statistics."""
    table = {
        "yeom": lambda: yeom_score(inputs["loss"]),
        "lira": lambda: lira_score(inputs["target_logit"], inputs["pair"]),
        "watson_offline": lambda: watson_offline_score(inputs["loss"], inputs["out_losses"]),
        "sablayrolles": lambda: sablayrolles_score(inputs["loss"], inputs["shadow_losses"]),
        "song_mentr": lambda: song_mentr_score(inputs["probs"], inputs["y"]),
        "ye_quantile": lambda: ye_quantile_score(inputs["loss"], inputs["out_losses"]),
    }
    if kind not in table:
        raise ValueError(f"unknown baseline {kind!r}")
    try:
        return table[kind]()
    except KeyError as exc:
        raise ValueError(f"baseline {kind!r} is missing required input {exc}") from None


def aggregate_augmented(scores_per_transform) -> float:
    """Arithmetic mean of one statistic across input transforms.

    Applied before any Gaussian fitting: distributions are fitted on the
    aggregated values.
    """
    values = np.asarray(list(scores_per_transform), dtype=np.float64)
    if len(values) == 0:
        raise ValueError("cannot aggregate an empty transform set")
    return float(values.mean())
