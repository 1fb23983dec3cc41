"""SGD training of single models and shadow-model ensembles.

The shadow protocol trains `n_models` classifiers, each on an independent
random subset of the pool; the ledger records every model's subset so that
per-example IN/OUT score distributions can be read off afterwards.  Each
model's subset sampling, initialization, and batch shuffling derive from
(master_seed, model index) alone, so ensembles are reproducible and
independent of training order or parallelism.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import nn
from .data import Dataset, MembershipLedger, SubsetMask, dataset_digest, sample_subset
from .seeding import SHUFFLE_STREAM, derive_seed
from .serialize import write_canonical


@dataclass(frozen=True)
class TrainHyper:
    """SGD hyperparameters.

    Defaults deliberately overfit small MLPs; a memorized training set is
    what produces a measurable membership signal at this scale.
    """

    epochs: int = 200
    batch_size: int = 32
    lr: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 0.0
    lr_decay_epochs: tuple[int, ...] = (120, 160)
    lr_decay_factor: float = 0.1

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if not 0 < self.lr_decay_factor <= 1:
            raise ValueError("lr_decay_factor must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs, "batch_size": self.batch_size, "lr": self.lr,
            "momentum": self.momentum, "weight_decay": self.weight_decay,
            "lr_decay_epochs": list(self.lr_decay_epochs),
            "lr_decay_factor": self.lr_decay_factor,
        }

    @staticmethod
    def from_dict(doc: dict) -> "TrainHyper":
        return TrainHyper(
            epochs=int(doc.get("epochs", 200)),
            batch_size=int(doc.get("batch_size", 32)),
            lr=float(doc.get("lr", 0.05)),
            momentum=float(doc.get("momentum", 0.9)),
            weight_decay=float(doc.get("weight_decay", 0.0)),
            lr_decay_epochs=tuple(int(e) for e in doc.get("lr_decay_epochs", (120, 160))),
            lr_decay_factor=float(doc.get("lr_decay_factor", 0.1)),
        )


@dataclass
class ShadowEnsemble:
    models: list[nn.MlpParams]
    ledger: MembershipLedger
    dataset_digest: str
    master_seed: int
    seeds: list[int] = field(default_factory=list)

    @property
    def model_digests(self) -> list[str]:
        return [nn.params_digest(p) for p in self.models]


def train_model(dataset: Dataset, mask: SubsetMask, arch: nn.LayerSizes,
                hyper: TrainHyper, seed: int) -> nn.MlpParams:
    """SGD with momentum on the masked subset; deterministic in (inputs, seed).

    Shuffling uses a generator derived from `seed` but distinct from the one
    used by init_mlp, so epochs=0 returns init_mlp(arch, seed) exactly.
    The learning rate is multiplied by lr_decay_factor at the start of each
    epoch listed in lr_decay_epochs (0-based).
    """
    mask = np.asarray(mask, dtype=bool)
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        raise ValueError("training subset is empty")
    params = nn.init_mlp(arch, seed)
    if hyper.epochs == 0:
        return params
    X, y = dataset.X[idx], dataset.y[idx]
    weights = [w.copy() for w, _ in params.layers]
    biases = [b.copy() for _, b in params.layers]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    shuffle_rng = np.random.default_rng(derive_seed(seed, SHUFFLE_STREAM))
    lr = hyper.lr
    decay_at = set(hyper.lr_decay_epochs)
    work = replace_arrays(params, weights, biases)
    for epoch in range(hyper.epochs):
        if epoch in decay_at:
            lr *= hyper.lr_decay_factor
        order = shuffle_rng.permutation(len(idx))
        for start in range(0, len(idx), hyper.batch_size):
            rows = order[start:start + hyper.batch_size]
            grads = nn.grad_params_arrays(work, X[rows], y[rows])
            for li, (gw, gb) in enumerate(grads):
                if hyper.weight_decay:
                    gw = gw + hyper.weight_decay * weights[li]
                vel_w[li] = hyper.momentum * vel_w[li] - lr * gw
                vel_b[li] = hyper.momentum * vel_b[li] - lr * gb
                weights[li] += vel_w[li]
                biases[li] += vel_b[li]
    return work


def replace_arrays(params: nn.MlpParams, weights: list[np.ndarray],
                   biases: list[np.ndarray]) -> nn.MlpParams:
    return nn.MlpParams(layers=list(zip(weights, biases)), arch=params.arch,
                        seed=params.seed, activation=params.activation,
                        config_digest=params.config_digest)


def evaluate_accuracy(params: nn.MlpParams, dataset: Dataset,
                      mask: SubsetMask | None = None) -> float:
    X, y = dataset.X, dataset.y
    if mask is not None:
        sel = np.asarray(mask, dtype=bool)
        X, y = X[sel], y[sel]
    probs = nn.forward_probs(params, X)
    return float((probs.argmax(axis=1) == y).mean())


def mean_loss(params: nn.MlpParams, dataset: Dataset, mask: SubsetMask | None = None) -> float:
    X, y = dataset.X, dataset.y
    if mask is not None:
        sel = np.asarray(mask, dtype=bool)
        X, y = X[sel], y[sel]
    return float(nn.batch_losses(params, X, y).mean())


def _train_one_shadow(dataset: Dataset, fraction: float, arch, hyper: TrainHyper,
                      seed: int) -> tuple[SubsetMask, nn.MlpParams]:
    mask = sample_subset(dataset, fraction, seed)
    return mask, train_model(dataset, mask, arch, hyper, seed)


def train_shadow_ensemble(dataset: Dataset, n_models: int, fraction: float,
                          arch: nn.LayerSizes, hyper: TrainHyper, master_seed: int,
                          n_jobs: int = 1) -> ShadowEnsemble:
    """Train `n_models` shadow models on independent subsets of the pool.

    Model j uses seed derive_seed(master_seed, j) for both its subset and
    its training run; the ledger row j records that subset.
    """
    if n_models < 2:
        raise ValueError("an ensemble needs at least 2 models")
    seeds = [derive_seed(master_seed, j) for j in range(n_models)]
    if n_jobs == 1:
        results = [_train_one_shadow(dataset, fraction, arch, hyper, s) for s in seeds]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_train_one_shadow)(dataset, fraction, arch, hyper, s) for s in seeds)
    masks = np.stack([mask for mask, _ in results])
    models = [params for _, params in results]
    return ShadowEnsemble(models=models, ledger=MembershipLedger(in_matrix=masks),
                          dataset_digest=dataset_digest(dataset),
                          master_seed=int(master_seed), seeds=seeds)


# -- persistence -------------------------------------------------------------

def save_ensemble(ensemble: ShadowEnsemble, out_dir) -> None:
    """Write ledger.json plus model_<j>.json into `out_dir`."""
    os.makedirs(out_dir, exist_ok=True)
    digests = []
    for j, params in enumerate(ensemble.models):
        nn.save_params(params, os.path.join(out_dir, f"model_{j}.json"))
        digests.append(nn.params_digest(params))
    write_canonical(os.path.join(out_dir, "ledger.json"), {
        "in_matrix": ensemble.ledger.in_matrix.astype(int).tolist(),
        "seeds": ensemble.seeds,
        "model_digests": digests,
        "dataset_digest": ensemble.dataset_digest,
        "master_seed": ensemble.master_seed,
    })


def load_ensemble(out_dir) -> ShadowEnsemble:
    with open(os.path.join(out_dir, "ledger.json"), "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    in_matrix = np.asarray(doc["in_matrix"], dtype=bool)
    models = [nn.load_params(os.path.join(out_dir, f"model_{j}.json"))
              for j in range(len(in_matrix))]
    ensemble = ShadowEnsemble(models=models, ledger=MembershipLedger(in_matrix=in_matrix),
                              dataset_digest=doc["dataset_digest"],
                              master_seed=int(doc["master_seed"]),
                              seeds=[int(s) for s in doc["seeds"]])
    if ensemble.model_digests != doc["model_digests"]:
        raise ValueError(f"{out_dir}: model files do not match recorded digests")
    return ensemble
