"""Multi-domain dataset container, one-hot domain encoding, and label recoding.

Labels are integers in {+1, -1, 0}; 0 marks an unlabeled sample. Roles are
"source", "target_labeled", or "target_test"; test samples are unlabeled
during training.
"""

from dataclasses import dataclass, field

import numpy as np

SOURCE = "source"
TARGET_LABELED = "target_labeled"
TARGET_TEST = "target_test"

ROLES = (SOURCE, TARGET_LABELED, TARGET_TEST)
UNLABELED = 0


@dataclass
class Dataset:
    """Column-wise feature matrix plus per-sample labels, domain ids, and roles."""

    features: np.ndarray  # (d, n)
    labels: np.ndarray  # (n,) int in {+1, -1, 0}
    experiment_id: np.ndarray  # (n,) identifiers
    subject_id: np.ndarray  # (n,) identifiers
    role: np.ndarray  # (n,) in ROLES

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.experiment_id = np.asarray(self.experiment_id, dtype=object)
        self.subject_id = np.asarray(self.subject_id, dtype=object)
        self.role = np.asarray(self.role, dtype=object)
        if self.features.ndim != 2:
            raise ValueError("features must be 2-D (d, n)")
        n = self.features.shape[1]
        for name in ("labels", "experiment_id", "subject_id", "role"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have length {n}")
        if not np.isin(self.labels, (-1, 0, 1)).all():
            raise ValueError("labels must be in {+1, -1, 0}")
        unknown = set(self.role) - set(ROLES)
        if unknown:
            raise ValueError(f"unknown roles: {sorted(unknown)}")
        must_label = np.isin(self.role, (SOURCE, TARGET_LABELED))
        if (self.labels[must_label] == UNLABELED).any():
            raise ValueError("source and target_labeled samples must carry a label")
        if (self.labels[self.role == TARGET_TEST] != UNLABELED).any():
            raise ValueError("target_test samples must be unlabeled")

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def d(self) -> int:
        return self.features.shape[0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        if idx.dtype != bool and not np.issubdtype(idx.dtype, np.integer):
            idx = idx.astype(int)
        return Dataset(
            features=self.features[:, idx],
            labels=self.labels[idx],
            experiment_id=self.experiment_id[idx],
            subject_id=self.subject_id[idx],
            role=self.role[idx],
        )


def concat(datasets) -> Dataset:
    """Concatenate datasets sample-wise; feature dimensions must agree."""
    datasets = list(datasets)
    dims = {ds.d for ds in datasets}
    if len(dims) != 1:
        raise ValueError(f"feature dimensions differ across datasets: {sorted(dims)}")
    return Dataset(
        features=np.concatenate([ds.features for ds in datasets], axis=1),
        labels=np.concatenate([ds.labels for ds in datasets]),
        experiment_id=np.concatenate([ds.experiment_id for ds in datasets]),
        subject_id=np.concatenate([ds.subject_id for ds in datasets]),
        role=np.concatenate([ds.role for ds in datasets]),
    )


@dataclass
class DomainMatrix:
    """One-hot encoding of experiment and subject identity.

    E is n x p, S is n x q, and A = [E^T; S^T] is (p + q) x n, so every
    column of A sums to exactly 2.
    """

    A: np.ndarray
    E: np.ndarray
    S: np.ndarray
    p: int
    q: int
    experiment_index: dict = field(default_factory=dict)
    subject_index: dict = field(default_factory=dict)


def _one_hot(ids: np.ndarray) -> tuple[np.ndarray, dict]:
    index: dict = {}
    for v in ids:
        if v not in index:
            index[v] = len(index)
    M = np.zeros((len(ids), len(index)))
    for i, v in enumerate(ids):
        M[i, index[v]] = 1.0
    return M, index


def encode_domains(ds: Dataset) -> DomainMatrix:
    """Build the auxiliary domain matrix A from experiment and subject ids.

    One-hot columns are ordered by first appearance of each identifier, so the
    encoding is deterministic for a fixed dataset.
    """
    if ds.n == 0:
        raise ValueError("cannot encode domains of an empty dataset")
    E, e_index = _one_hot(ds.experiment_id)
    S, s_index = _one_hot(ds.subject_id)
    A = np.concatenate([E.T, S.T], axis=0)
    return DomainMatrix(
        A=A, E=E, S=S, p=E.shape[1], q=S.shape[1],
        experiment_index=e_index, subject_index=s_index,
    )


def recode_labels(ds: Dataset) -> np.ndarray:
    """Length-n vector over {-1, 0, +1}; 0 exactly for unlabeled samples."""
    return ds.labels.copy()
