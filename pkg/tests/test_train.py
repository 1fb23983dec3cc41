"""Training determinism, overfitting behavior, and shadow ensembles."""

import numpy as np
import pytest

from curvmia.data import gen_gaussian_mixture, sample_subset
from curvmia.nn import init_mlp, params_digest
from curvmia.seeding import derive_seed
from curvmia.train import (
    TrainHyper, evaluate_accuracy, load_ensemble, mean_loss,
    save_ensemble, train_model, train_shadow_ensemble,
)

FAST = TrainHyper(epochs=40, batch_size=16, lr=0.05, momentum=0.9, lr_decay_epochs=(25, 35))


class TestTrainModel:
    def test_zero_epochs_returns_initialization(self):
        ds = gen_gaussian_mixture(2, 3, 10, 4, 1, seed=0)
        params = train_model(ds, np.ones(ds.m, dtype=bool), (3, 8, 2),
                             TrainHyper(epochs=0), seed=9)
        assert params_digest(params) == params_digest(init_mlp((3, 8, 2), 9))

    def test_learns_separable_mixture(self):
        ds = gen_gaussian_mixture(k=2, d=2, per_class=50, separation=6, noise=0.5, seed=11)
        hyper = TrainHyper(epochs=100, batch_size=32, lr=0.05, momentum=0.9,
                           lr_decay_epochs=(60, 80))
        params = train_model(ds, np.ones(ds.m, dtype=bool), (2, 16, 2), hyper, seed=5)
        assert evaluate_accuracy(params, ds) >= 0.95

    def test_bit_identical_reruns(self):
        ds = gen_gaussian_mixture(2, 3, 20, 4, 1, seed=2)
        mask = sample_subset(ds, 0.5, seed=1)
        a = train_model(ds, mask, (3, 6, 2), FAST, seed=3)
        b = train_model(ds, mask, (3, 6, 2), FAST, seed=3)
        assert params_digest(a) == params_digest(b)

    def test_empty_subset_rejected(self):
        ds = gen_gaussian_mixture(2, 2, 5, 4, 1, seed=0)
        with pytest.raises(ValueError):
            train_model(ds, np.zeros(ds.m, dtype=bool), (2, 4, 2), FAST, seed=0)

    def test_training_reduces_mean_loss(self):
        ds = gen_gaussian_mixture(2, 4, 30, 2, 1.0, seed=7)
        mask = np.ones(ds.m, dtype=bool)
        before = mean_loss(init_mlp((4, 8, 2), 1), ds, mask)
        after = mean_loss(train_model(ds, mask, (4, 8, 2), FAST, seed=1), ds, mask)
        assert after <= before

    def test_weight_decay_shrinks_weights(self):
        ds = gen_gaussian_mixture(2, 2, 20, 4, 1, seed=3)
        mask = np.ones(ds.m, dtype=bool)
        plain = train_model(ds, mask, (2, 8, 2), FAST, seed=2)
        decayed = train_model(ds, mask, (2, 8, 2),
                              TrainHyper(epochs=40, batch_size=16, lr=0.05, momentum=0.9,
                                         weight_decay=0.05, lr_decay_epochs=(25, 35)), seed=2)
        norm = lambda p: sum(float(np.sum(w ** 2)) for w, _ in p.layers)
        assert norm(decayed) < norm(plain)


class TestShadowEnsemble:
    def test_ledger_cardinality(self):
        ds = gen_gaussian_mixture(2, 2, 10, 4, 1, seed=1)  # m = 20
        ens = train_shadow_ensemble(ds, n_models=8, fraction=0.5, arch=(2, 4, 2),
                                    hyper=TrainHyper(epochs=2), master_seed=5)
        assert ens.ledger.in_matrix.shape == (8, 20)
        assert (ens.ledger.in_matrix.sum(axis=1) == 10).all()

    def test_per_example_in_count_within_binomial_band(self):
        ds = gen_gaussian_mixture(2, 2, 15, 4, 1, seed=1)  # m = 30
        ens = train_shadow_ensemble(ds, n_models=64, fraction=0.5, arch=(2, 4, 2),
                                    hyper=TrainHyper(epochs=0), master_seed=9)
        counts = ens.ledger.in_matrix.sum(axis=0)
        # Binomial(64, 1/2): mean 32, sd 4; 3-sigma band
        assert (counts >= 20).all() and (counts <= 44).all()

    def test_rerun_reproduces_ledger_and_digests(self):
        ds = gen_gaussian_mixture(2, 3, 12, 4, 1, seed=4)
        a = train_shadow_ensemble(ds, 4, 0.5, (3, 4, 2), TrainHyper(epochs=3), 77)
        b = train_shadow_ensemble(ds, 4, 0.5, (3, 4, 2), TrainHyper(epochs=3), 77)
        assert np.array_equal(a.ledger.in_matrix, b.ledger.in_matrix)
        assert a.model_digests == b.model_digests

    def test_schedule_independence(self):
        # each model derives only from (master_seed, j): training model j in
        # isolation reproduces the ensemble's model j exactly
        ds = gen_gaussian_mixture(2, 3, 12, 4, 1, seed=4)
        ens = train_shadow_ensemble(ds, 5, 0.5, (3, 4, 2), TrainHyper(epochs=3), 88)
        j = 3
        seed_j = derive_seed(88, j)
        mask_j = sample_subset(ds, 0.5, seed_j)
        alone = train_model(ds, mask_j, (3, 4, 2), TrainHyper(epochs=3), seed_j)
        assert np.array_equal(mask_j, ens.ledger.in_matrix[j])
        assert params_digest(alone) == ens.model_digests[j]

    def test_parallel_jobs_match_sequential(self):
        ds = gen_gaussian_mixture(2, 2, 10, 4, 1, seed=2)
        seq = train_shadow_ensemble(ds, 4, 0.5, (2, 4, 2), TrainHyper(epochs=2), 3, n_jobs=1)
        par = train_shadow_ensemble(ds, 4, 0.5, (2, 4, 2), TrainHyper(epochs=2), 3, n_jobs=2)
        assert seq.model_digests == par.model_digests
        assert np.array_equal(seq.ledger.in_matrix, par.ledger.in_matrix)

    def test_needs_two_models(self):
        ds = gen_gaussian_mixture(2, 2, 5, 4, 1, seed=0)
        with pytest.raises(ValueError):
            train_shadow_ensemble(ds, 1, 0.5, (2, 4, 2), TrainHyper(epochs=1), 0)

    def test_persistence_round_trip(self, tmp_path):
        ds = gen_gaussian_mixture(2, 2, 8, 4, 1, seed=6)
        ens = train_shadow_ensemble(ds, 3, 0.5, (2, 4, 2), TrainHyper(epochs=2), 11)
        save_ensemble(ens, tmp_path / "shadows")
        back = load_ensemble(tmp_path / "shadows")
        assert back.model_digests == ens.model_digests
        assert np.array_equal(back.ledger.in_matrix, ens.ledger.in_matrix)
        assert back.master_seed == ens.master_seed

    def test_tampered_model_file_detected(self, tmp_path):
        ds = gen_gaussian_mixture(2, 2, 8, 4, 1, seed=6)
        ens = train_shadow_ensemble(ds, 3, 0.5, (2, 4, 2), TrainHyper(epochs=2), 11)
        save_ensemble(ens, tmp_path / "shadows")
        victim = tmp_path / "shadows" / "model_1.json"
        doc = victim.read_text().replace("0.", "1.", 1)
        victim.write_text(doc)
        with pytest.raises(ValueError):
            load_ensemble(tmp_path / "shadows")
