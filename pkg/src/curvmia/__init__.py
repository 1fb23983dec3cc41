"""curvmia: membership-inference auditing with input loss curvature.

Train small classifiers and shadow ensembles, estimate each example's input
loss curvature with a zero-order (loss-oracle-only) estimator, run
likelihood-ratio membership attacks against standard baselines, evaluate
them on empirical ROC staircases, and compare against the train-test
distinguishability bounds.
"""

from .attacks import (
    AttackScore, GaussianPair, aggregate_augmented, baseline_score, curv_lr_score,
    curv_nll_score, fit_gaussian_pairs, lira_score, pool_pair, pooled_sigma,
    sablayrolles_score, song_mentr_score, watson_offline_score, ye_quantile_score,
    yeom_score,
)
from .curvature import (
    CurvatureConfig, CurvatureScore, exact_trace_oracle, hutchinson_curvature,
    hutchinson_from_grad, mlp_input_grad, mlp_loss_oracle, zo_curvature,
)
from .data import (
    CsvSchema, Dataset, MembershipLedger, TransformSpec, apply_transform,
    dataset_digest, gen_gaussian_mixture, load_csv, sample_subset,
    select_lowest_curvature,
)
from .estimators import CurvatureMembershipAuditor, MlpClassifier
from .metrics import RocCurve, auroc, balanced_accuracy, evaluate_scores, roc_curve, tpr_at_fpr
from .nn import (
    Example, LOSS_CEILING, MlpParams, PROB_CLIP, forward_loss, grad_input, grad_params,
    init_mlp, scaled_logit,
)
from .pipeline import DatasetSpec, ExperimentManifest, StageError, run_experiment, \
    sweep_dataset_size
from .theory import (
    BoundInputs, FitResult, bound_report, empirical_kl_report, fit_bound_curve,
    kl_gaussian, curvature_upper_bound, confidence_kl_bound, curvature_kl_bound, crossover_dataset_size,
)
from .train import ShadowEnsemble, TrainHyper, train_model, train_shadow_ensemble

__version__ = "0.1.0"
