import numpy as np
import pytest

from conftest import random_dataset
from disvm.domain import (SOURCE, TARGET_LABELED, TARGET_TEST, Dataset,
                          concat, encode_domains, recode_labels)


def make(labels, roles, exp=None, subj=None):
    n = len(labels)
    return Dataset(
        features=np.zeros((2, n)),
        labels=np.array(labels),
        experiment_id=np.array(exp or ["A"] * n, dtype=object),
        subject_id=np.array(subj or ["A:s0"] * n, dtype=object),
        role=np.array(roles, dtype=object),
    )


class TestDataset:
    def test_valid_roundtrip(self):
        ds = make([1, -1, 0], [SOURCE, TARGET_LABELED, TARGET_TEST])
        assert ds.n == 3 and ds.d == 2

    def test_rejects_bad_label_values(self):
        with pytest.raises(ValueError, match="labels"):
            make([2, -1], [SOURCE, SOURCE])

    def test_rejects_unknown_role(self):
        with pytest.raises(ValueError, match="unknown roles"):
            make([1, -1], [SOURCE, "validation"])

    def test_rejects_unlabeled_source(self):
        with pytest.raises(ValueError, match="must carry a label"):
            make([1, 0], [SOURCE, SOURCE])

    def test_rejects_labeled_test_sample(self):
        with pytest.raises(ValueError, match="must be unlabeled"):
            make([1, -1], [SOURCE, TARGET_TEST])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            Dataset(features=np.zeros((2, 3)), labels=np.array([1, -1]),
                    experiment_id=np.array(["A"] * 3, dtype=object),
                    subject_id=np.array(["A:s0"] * 3, dtype=object),
                    role=np.array([SOURCE] * 3, dtype=object))

    def test_subset_preserves_fields(self, rng):
        ds = random_dataset(rng, n=10)
        sub = ds.subset([1, 3, 5])
        assert sub.n == 3
        assert np.array_equal(sub.labels, ds.labels[[1, 3, 5]])
        assert np.array_equal(sub.features, ds.features[:, [1, 3, 5]])


class TestConcat:
    def test_concatenates_samplewise(self, rng):
        a, b = random_dataset(rng, n=5), random_dataset(rng, n=7)
        both = concat([a, b])
        assert both.n == 12
        assert np.array_equal(both.features[:, :5], a.features)

    def test_rejects_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="dimensions differ"):
            concat([random_dataset(rng, d=3), random_dataset(rng, d=4)])


class TestEncodeDomains:
    def test_one_hot_shapes_and_column_sums(self, rng):
        ds = random_dataset(rng, n=30, experiments=2, subjects=3)
        dom = encode_domains(ds)
        assert dom.E.shape == (30, dom.p)
        assert dom.S.shape == (30, dom.q)
        assert dom.A.shape == (dom.p + dom.q, 30)
        # each sample carries exactly one experiment and one subject
        assert np.allclose(dom.A.sum(axis=0), 2.0)
        assert np.allclose(dom.E.sum(axis=1), 1.0)
        assert np.allclose(dom.S.sum(axis=1), 1.0)

    def test_indicator_columns_match_ids(self):
        ds = make([1, -1, 1, -1], [SOURCE] * 4,
                  exp=["A", "B", "A", "B"],
                  subj=["A:s0", "B:s0", "A:s1", "B:s0"])
        dom = encode_domains(ds)
        assert dom.p == 2 and dom.q == 3
        i = dom.experiment_index
        assert np.array_equal(dom.E[:, i["A"]], [1, 0, 1, 0])
        j = dom.subject_index
        assert np.array_equal(dom.S[:, j["B:s0"]], [0, 1, 0, 1])

    def test_deterministic_first_appearance_order(self):
        ds = make([1, -1], [SOURCE] * 2, exp=["Z", "A"], subj=["Z:s0", "A:s0"])
        dom = encode_domains(ds)
        assert list(dom.experiment_index) == ["Z", "A"]

    def test_empty_rejected(self):
        ds = make([1, -1], [SOURCE] * 2)
        with pytest.raises(ValueError, match="empty"):
            encode_domains(ds.subset([]))


class TestRecodeLabels:
    def test_values_and_zero_for_unlabeled(self):
        ds = make([1, -1, 0], [SOURCE, SOURCE, TARGET_TEST])
        y = recode_labels(ds)
        assert np.array_equal(y, [1, -1, 0])

    def test_returns_copy(self):
        ds = make([1, -1], [SOURCE] * 2)
        y = recode_labels(ds)
        y[0] = -1
        assert ds.labels[0] == 1
