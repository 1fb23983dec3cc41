"""scikit-learn style estimators wrapping the functional core.

``MlpClassifier`` is a plain fit/predict classifier, so the audited model
composes with pipelines, cross-validation, and friends.
``CurvatureMembershipAuditor`` is fit on a data pool (it trains the shadow
ensemble and fits the per-example score distributions) and then scores any
target model's per-example membership evidence.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import nn
from .attacks import curv_lr_score, fit_gaussian_pairs, pool_pair
from .curvature import CurvatureConfig, curvature_of_example, per_call_config
from .data import Dataset
from .train import TrainHyper, train_model, train_shadow_ensemble


class MlpClassifier(ClassifierMixin, BaseEstimator):
    """Small tanh MLP trained with SGD + momentum; deterministic in random_state."""

    def __init__(self, hidden_layer_sizes=(16,), epochs=200, batch_size=32,
                 lr=0.05, momentum=0.9, weight_decay=0.0,
                 lr_decay_epochs=(120, 160), lr_decay_factor=0.1, random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.lr_decay_epochs = lr_decay_epochs
        self.lr_decay_factor = lr_decay_factor
        self.random_state = random_state

    def _hyper(self) -> TrainHyper:
        return TrainHyper(epochs=self.epochs, batch_size=self.batch_size, lr=self.lr,
                          momentum=self.momentum, weight_decay=self.weight_decay,
                          lr_decay_epochs=tuple(self.lr_decay_epochs),
                          lr_decay_factor=self.lr_decay_factor)

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes")
        self.n_features_in_ = X.shape[1]
        dataset = Dataset(X=X, y=y_idx, k=len(self.classes_), name="fit", seed=0)
        arch = (dataset.d, *self.hidden_layer_sizes, dataset.k)
        self.params_ = train_model(dataset, np.ones(dataset.m, dtype=bool), arch,
                                   self._hyper(), self.random_state)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        return nn.forward_probs(self.params_, X)

    def predict(self, X):
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]


class CurvatureMembershipAuditor(BaseEstimator):
    """Membership-evidence scorer built from a shadow ensemble.

    fit(X, y) treats (X, y) as the example pool: it trains
    ``n_shadow_models`` classifiers on random half-pools, scores the input
    loss curvature of every (example, model) pair, and fits each example's
    IN/OUT Gaussian pair.  ``score_samples(model)`` then returns the
    member-oriented log likelihood ratio of every pool example under a
    target model (an ``MlpClassifier`` or raw ``MlpParams``); larger means
    more likely member of that model's training set.
    """

    def __init__(self, n_shadow_models=16, shadow_fraction=0.5,
                 hidden_layer_sizes=(16,), epochs=200, batch_size=32, lr=0.05,
                 momentum=0.9, h=1e-3, n_iter=10, probe_mode="coupled",
                 variant="zero_order", pool_variance=False, n_jobs=1, random_state=0):
        self.n_shadow_models = n_shadow_models
        self.shadow_fraction = shadow_fraction
        self.hidden_layer_sizes = hidden_layer_sizes
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.momentum = momentum
        self.h = h
        self.n_iter = n_iter
        self.probe_mode = probe_mode
        self.variant = variant
        self.pool_variance = pool_variance
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _curv_config(self) -> CurvatureConfig:
        return CurvatureConfig(h=self.h, n_iter=self.n_iter, probe_mode=self.probe_mode,
                               variant=self.variant, seed=self.random_state)

    def _curvatures(self, params: nn.MlpParams, dataset: Dataset) -> np.ndarray:
        cfg = self._curv_config()
        digest = nn.params_digest(params)
        return np.array([
            curvature_of_example(params, dataset.example(i), per_call_config(cfg, i, digest))
            for i in range(dataset.m)])

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        classes, y_idx = np.unique(y, return_inverse=True)
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        pool = Dataset(X=X, y=y_idx, k=len(classes), name="audit_pool", seed=0)
        hyper = TrainHyper(epochs=self.epochs, batch_size=self.batch_size,
                           lr=self.lr, momentum=self.momentum)
        arch = (pool.d, *self.hidden_layer_sizes, pool.k)
        ensemble = train_shadow_ensemble(pool, self.n_shadow_models, self.shadow_fraction,
                                         arch, hyper, self.random_state, n_jobs=self.n_jobs)
        matrix = np.stack([self._curvatures(p, pool) for p in ensemble.models])
        pairs = fit_gaussian_pairs(matrix, ensemble.ledger)
        if self.pool_variance:
            pairs = [pool_pair(p) for p in pairs]
        self.pool_ = pool
        self.ensemble_ = ensemble
        self.pairs_ = pairs
        return self

    def score_samples(self, model) -> np.ndarray:
        """Membership evidence of each pool example under `model`."""
        check_is_fitted(self, "pairs_")
        params = model.params_ if isinstance(model, MlpClassifier) else model
        target = self._curvatures(params, self.pool_)
        return np.array([curv_lr_score(float(target[i]), self.pairs_[i])
                         for i in range(self.pool_.m)])
