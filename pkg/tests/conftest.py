"""Shared helpers for the test suite."""

import numpy as np
import pytest

from disvm.domain import SOURCE, TARGET_LABELED, Dataset


def random_dataset(rng, n=20, d=4, experiments=2, subjects=3,
                   unlabeled_fraction=0.0) -> Dataset:
    """Random multi-domain dataset with both classes guaranteed present."""
    features = rng.standard_normal((d, n))
    labels = rng.choice([1, -1], size=n)
    labels[0], labels[1] = 1, -1
    exp = rng.integers(0, experiments, size=n)
    subj = rng.integers(0, subjects, size=n)
    role = np.full(n, SOURCE, dtype=object)
    if unlabeled_fraction > 0:
        k = int(unlabeled_fraction * n)
        drop = rng.choice(np.arange(2, n), size=min(k, n - 2), replace=False)
        labels = labels.copy()
        labels[drop] = 0
        role[drop] = "target_test"
    return Dataset(
        features=features,
        labels=labels,
        experiment_id=np.array([f"E{e}" for e in exp], dtype=object),
        subject_id=np.array([f"E{e}:s{s}" for e, s in zip(exp, subj)], dtype=object),
        role=role,
    )


def single_domain_dataset(rng, n=16, d=4) -> Dataset:
    features = rng.standard_normal((d, n))
    labels = rng.choice([1, -1], size=n)
    labels[0], labels[1] = 1, -1
    return Dataset(
        features=features,
        labels=labels,
        experiment_id=np.full(n, "A", dtype=object),
        subject_id=np.full(n, "A:s0", dtype=object),
        role=np.full(n, SOURCE, dtype=object),
    )


def labeled_pool(X, y, experiment_id=None, subject_id=None) -> Dataset:
    """Fully labeled single-role dataset from plain arrays."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n = X.shape[1]
    if experiment_id is None:
        experiment_id = np.full(n, "A", dtype=object)
    if subject_id is None:
        subject_id = np.full(n, "A:s0", dtype=object)
    return Dataset(
        features=X, labels=y,
        experiment_id=np.asarray(experiment_id, dtype=object),
        subject_id=np.asarray(subject_id, dtype=object),
        role=np.full(n, SOURCE, dtype=object),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
