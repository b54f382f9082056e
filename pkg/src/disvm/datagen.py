"""Synthetic multi-domain data with controllable domain shift.

The class signal lives on a fixed unit direction u; subject offsets and the
per-experiment rotations are confined to the orthogonal complement of u, so a
decision rule aligned with u transfers perfectly across domains while
empirical fits can be misled by the nuisance structure.
"""

import string
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .domain import SOURCE, Dataset


@dataclass(frozen=True)
class SynthConfig:
    d: int = 50
    experiments: int = 2
    subjects_per_experiment: int = 4
    samples_per_subject_per_class: int = 20
    class_signal_strength: float = 0.5
    subject_shift_strength: float = 5.0
    experiment_shift_strength: float = 1.0
    noise_std: float = 0.3
    seed: int = 0

    def __post_init__(self):
        for name in ("d", "experiments", "subjects_per_experiment",
                     "samples_per_subject_per_class"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("class_signal_strength", "subject_shift_strength",
                     "experiment_shift_strength"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.noise_std > 0:
            raise ValueError("noise_std must be positive")


def experiment_name(i: int) -> str:
    letters = string.ascii_uppercase
    return letters[i] if i < len(letters) else f"E{i}"


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def generate_synthetic(cfg: SynthConfig) -> dict[str, Dataset]:
    """One fully labeled dataset per experiment, keyed by experiment name."""
    if cfg.d < 3:
        raise ValueError("d must be >= 3 so nuisance directions fit in the complement")
    rng = np.random.default_rng(cfg.seed)
    d = cfg.d
    u = _unit(rng.standard_normal(d))
    # orthonormal basis of the complement of u
    raw = np.concatenate([u[:, None], rng.standard_normal((d, d - 1))], axis=1)
    Q, _ = np.linalg.qr(raw)
    comp = Q[:, 1:]

    datasets: dict[str, Dataset] = {}
    per_class = cfg.samples_per_subject_per_class
    for e in range(cfg.experiments):
        name = experiment_name(e)
        skew = rng.standard_normal((d - 1, d - 1))
        skew = (skew - skew.T) / 2.0
        skew /= max(np.linalg.norm(skew, 2), 1e-12)
        rot = scipy.linalg.expm(cfg.experiment_shift_strength * skew)
        R = np.outer(u, u) + comp @ rot @ comp.T

        cols, labels, subj_ids = [], [], []
        for s in range(cfg.subjects_per_experiment):
            offset = cfg.subject_shift_strength * (comp @ rng.standard_normal(d - 1))
            for label in (1, -1):
                base = cfg.class_signal_strength * label * u + offset
                noise = cfg.noise_std * rng.standard_normal((d, per_class))
                cols.append((R @ base)[:, None] + noise)
                labels.extend([label] * per_class)
                subj_ids.extend([f"{name}:s{s}"] * per_class)
        n = len(labels)
        datasets[name] = Dataset(
            features=np.concatenate(cols, axis=1),
            labels=np.array(labels),
            experiment_id=np.full(n, name, dtype=object),
            subject_id=np.array(subj_ids, dtype=object),
            role=np.full(n, SOURCE, dtype=object),
        )
    return datasets
