"""Dataset CSV I/O.

Schema (UTF-8, comma separated, header first):
    sample_id, experiment_id, subject_id, label, role, f0 ... f{d-1}
with label in {1, -1, NA} and role in {source, target_labeled, target_test}.
Features round-trip at full precision via shortest-repr floats.
"""

import csv
from pathlib import Path

import numpy as np

from .domain import ROLES, Dataset


class SchemaError(Exception):
    """The file does not conform to the dataset CSV schema."""


_FIXED_COLUMNS = ["sample_id", "experiment_id", "subject_id", "label", "role"]
_LABEL_TOKENS = {"1": 1, "-1": -1, "NA": 0}


def write_dataset(ds: Dataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_FIXED_COLUMNS + [f"f{j}" for j in range(ds.d)])
        for i in range(ds.n):
            label = "NA" if ds.labels[i] == 0 else str(int(ds.labels[i]))
            writer.writerow(
                [str(i), str(ds.experiment_id[i]), str(ds.subject_id[i]), label,
                 str(ds.role[i])]
                + [repr(float(v)) for v in ds.features[:, i]]
            )


def read_dataset(path) -> Dataset:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header[: len(_FIXED_COLUMNS)] != _FIXED_COLUMNS:
            raise SchemaError(
                f"{path}: malformed header, expected it to start with {_FIXED_COLUMNS}"
            )
        feature_cols = header[len(_FIXED_COLUMNS):]
        d = len(feature_cols)
        if d == 0:
            raise SchemaError(f"{path}: no feature columns")
        if feature_cols != [f"f{j}" for j in range(d)]:
            raise SchemaError(f"{path}: feature columns must be named f0..f{d - 1}")

        features, labels, exp_ids, subj_ids, roles = [], [], [], [], []
        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: row {rownum} has {len(row)} columns, expected {len(header)}"
                )
            _, exp, subj, label_tok, role = row[: len(_FIXED_COLUMNS)]
            if label_tok not in _LABEL_TOKENS:
                raise SchemaError(f"{path}: row {rownum} has invalid label {label_tok!r}")
            if role not in ROLES:
                raise SchemaError(f"{path}: row {rownum} has unknown role {role!r}")
            try:
                features.append([float(v) for v in row[len(_FIXED_COLUMNS):]])
            except ValueError:
                raise SchemaError(
                    f"{path}: row {rownum} has a non-numeric feature value"
                ) from None
            labels.append(_LABEL_TOKENS[label_tok])
            exp_ids.append(exp)
            subj_ids.append(subj)
            roles.append(role)
    if not features:
        raise SchemaError(f"{path}: no samples")
    try:
        return Dataset(
            features=np.array(features, dtype=float).T,
            labels=np.array(labels),
            experiment_id=np.array(exp_ids, dtype=object),
            subject_id=np.array(subj_ids, dtype=object),
            role=np.array(roles, dtype=object),
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
