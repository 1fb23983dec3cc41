"""Dataset construction, splitting, selection, and transforms."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvmia.data import (
    CsvSchema, Dataset, MembershipLedger, TransformSpec, apply_transform,
    dataset_digest, dataset_from_dict, dataset_to_dict, gen_gaussian_mixture,
    load_csv, sample_count, sample_subset, select_lowest_curvature,
)
from curvmia.nn import Example


class TestGaussianMixture:
    def test_counts(self):
        ds = gen_gaussian_mixture(k=2, d=2, per_class=5, separation=4, noise=1, seed=1)
        assert ds.m == 10 and ds.d == 2 and ds.k == 2
        assert np.count_nonzero(ds.y == 0) == 5
        assert np.count_nonzero(ds.y == 1) == 5

    def test_deterministic(self):
        a = gen_gaussian_mixture(3, 4, 7, 2.0, 0.5, seed=9)
        b = gen_gaussian_mixture(3, 4, 7, 2.0, 0.5, seed=9)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
        assert dataset_digest(a) == dataset_digest(b)

    def test_nearest_centroid_oracle_on_separated_classes(self):
        ds = gen_gaussian_mixture(k=3, d=5, per_class=40, separation=10, noise=0.1, seed=3)
        centroids = np.stack([ds.X[ds.y == c].mean(axis=0) for c in range(ds.k)])
        dists = ((ds.X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assert (dists.argmin(axis=1) == ds.y).all()

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            gen_gaussian_mixture(1, 2, 5, 1.0, 1.0, seed=0)
        with pytest.raises(ValueError):
            gen_gaussian_mixture(2, 2, 5, 1.0, 0.0, seed=0)

    def test_centers_distinct_when_k_exceeds_d(self):
        ds = gen_gaussian_mixture(k=4, d=2, per_class=200, separation=8, noise=0.1, seed=0)
        centroids = np.stack([ds.X[ds.y == c].mean(axis=0) for c in range(4)])
        for a in range(4):
            for b in range(a + 1, 4):
                assert np.linalg.norm(centroids[a] - centroids[b]) > 1.0


class TestLoadCsv:
    def test_small_file(self, tmp_path):
        path = tmp_path / "toy.csv"
        path.write_text("0.0,1.0,0\n1.0,0.0,1\n0.5,0.5,0\n")
        ds = load_csv(path)
        assert ds.m == 3 and ds.d == 2 and ds.k == 2
        np.testing.assert_allclose(ds.X[1], [1.0, 0.0])
        assert list(ds.y) == [0, 1, 0]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError):
            load_csv(path)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("0.0,1\n0.5,0.5,0\n")
        with pytest.raises(ValueError, match="columns"):
            load_csv(path, CsvSchema(n_features=2))

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,x,0\n1.0,0.0,1\n")
        with pytest.raises(ValueError, match="non-numeric"):
            load_csv(path)

    def test_label_exceeds_declared_classes(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("0.0,1.0,0\n1.0,0.0,3\n")
        with pytest.raises(ValueError, match="declared class count"):
            load_csv(path, CsvSchema(n_classes=2))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "nope.csv")

    def test_header_skip(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("f1,f2,label\n0.0,1.0,0\n1.0,0.0,1\n")
        ds = load_csv(path, CsvSchema(header=True))
        assert ds.m == 2


class TestSampleSubset:
    def test_cardinality(self):
        ds = gen_gaussian_mixture(2, 2, 5, 4, 1, seed=1)
        mask = sample_subset(ds, 0.5, seed=3)
        assert mask.sum() == 5

    def test_full_fraction(self):
        ds = gen_gaussian_mixture(2, 2, 5, 4, 1, seed=1)
        assert sample_subset(ds, 1.0, seed=0).all()

    def test_inclusion_frequency(self):
        ds = gen_gaussian_mixture(2, 2, 10, 4, 1, seed=1)
        counts = np.zeros(ds.m)
        n_trials = 1000
        for seed in range(n_trials):
            counts += sample_subset(ds, 0.5, seed)
        freq = counts / n_trials
        assert (freq >= 0.45).all() and (freq <= 0.55).all()

    def test_deterministic(self):
        ds = gen_gaussian_mixture(2, 3, 20, 4, 1, seed=1)
        assert np.array_equal(sample_subset(ds, 0.3, 11), sample_subset(ds, 0.3, 11))

    def test_degenerate_fraction(self):
        ds = gen_gaussian_mixture(2, 2, 2, 4, 1, seed=1)
        with pytest.raises(ValueError):
            sample_subset(ds, 0.1, seed=0)  # floor(0.4) = 0
        with pytest.raises(ValueError):
            sample_subset(ds, 0.0, seed=0)

    def test_sample_count_exact(self):
        ds = gen_gaussian_mixture(2, 2, 25, 4, 1, seed=1)
        assert sample_count(ds, 7, seed=5).sum() == 7


class TestSelectLowestCurvature:
    def test_smallest_scores_selected(self):
        ds = gen_gaussian_mixture(2, 2, 2, 4, 1, seed=1)  # m = 4
        mask = select_lowest_curvature(ds, np.array([3.0, 1.0, 2.0, 9.0]), count=2)
        assert list(np.flatnonzero(mask)) == [1, 2]

    def test_tie_goes_to_lower_id(self):
        ds = gen_gaussian_mixture(2, 2, 2, 4, 1, seed=1)
        mask = select_lowest_curvature(ds, np.array([1.0, 1.0, 1.0, 1.0]), count=1)
        assert list(np.flatnonzero(mask)) == [0]

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(7)
        ds = gen_gaussian_mixture(2, 2, 50, 4, 1, seed=1)
        for trial in range(20):
            scores = rng.normal(size=ds.m)
            count = int(rng.integers(1, ds.m))
            mask = select_lowest_curvature(ds, scores, count)
            oracle = sorted(range(ds.m), key=lambda i: (scores[i], i))[:count]
            assert sorted(np.flatnonzero(mask)) == sorted(oracle)

    def test_rejects_nan_and_overflow(self):
        ds = gen_gaussian_mixture(2, 2, 2, 4, 1, seed=1)
        with pytest.raises(ValueError):
            select_lowest_curvature(ds, np.array([1.0, np.nan, 0.0, 0.0]), 1)
        with pytest.raises(ValueError):
            select_lowest_curvature(ds, np.zeros(4), 5)


class TestTransforms:
    def test_identity(self):
        ex = Example(0, np.array([1.0, 2.0, 3.0]), 1)
        out = apply_transform(ex, TransformSpec("identity"))
        assert np.array_equal(out.x, ex.x) and out.y == ex.y and out.id == ex.id

    def test_mirror(self):
        ex = Example(0, np.array([1.0, 2.0, 3.0]), 1)
        out = apply_transform(ex, TransformSpec("mirror"))
        np.testing.assert_array_equal(out.x, [3.0, 2.0, 1.0])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20))
    def test_mirror_is_involution(self, values):
        ex = Example(0, np.array(values), 0)
        t = TransformSpec("mirror")
        twice = apply_transform(apply_transform(ex, t), t)
        np.testing.assert_array_equal(twice.x, ex.x)

    def test_jitter_deterministic_and_label_preserving(self):
        ex = Example(3, np.zeros(4), 1)
        t = TransformSpec("gaussian_jitter", sigma=0.5, seed=9)
        a = apply_transform(ex, t)
        b = apply_transform(ex, t)
        assert np.array_equal(a.x, b.x) and a.y == 1
        assert not np.array_equal(a.x, ex.x)

    def test_jitter_requires_positive_sigma(self):
        with pytest.raises(ValueError):
            TransformSpec("gaussian_jitter", sigma=0.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            TransformSpec("rotate")


class TestDatasetInvariants:
    def test_minimum_size(self):
        with pytest.raises(ValueError):
            Dataset(X=np.zeros((1, 2)), y=np.zeros(1, dtype=int), k=2)

    def test_label_range(self):
        with pytest.raises(ValueError):
            Dataset(X=np.zeros((3, 2)), y=np.array([0, 1, 2]), k=2)

    def test_round_trip(self):
        ds = gen_gaussian_mixture(2, 3, 4, 2.0, 0.7, seed=4)
        doc = dataset_to_dict(ds)
        back = dataset_from_dict(doc)
        assert dataset_digest(back) == dataset_digest(ds)

    def test_restrict_reindexes(self):
        ds = gen_gaussian_mixture(2, 2, 5, 4, 1, seed=1)
        mask = np.zeros(ds.m, dtype=bool)
        mask[[0, 3, 7]] = True
        sub = ds.restrict(mask)
        assert sub.m == 3
        np.testing.assert_array_equal(sub.X[1], ds.X[3])

    def test_ledger_shape(self):
        ledger = MembershipLedger(in_matrix=np.zeros((4, 10), dtype=bool))
        assert ledger.n_models == 4 and ledger.m == 10
