"""Kernel functions, Gram matrices, and the centering/eigen algebra shared by all models.

Samples are stored column-wise: a feature matrix has shape (d, n) with one
sample per column.
"""

from dataclasses import dataclass

import numpy as np

LINEAR = "linear"
RBF = "rbf"
POLYNOMIAL = "polynomial"

_FAMILIES = (LINEAR, RBF, POLYNOMIAL)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its parameters.

    gamma is a direct multiplier of the squared distance for the RBF kernel,
    k(a, b) = exp(-gamma * ||a - b||^2). degree/coef apply to the polynomial
    kernel (a.b + coef)^degree.
    """

    family: str = LINEAR
    gamma: float = 1.0
    degree: int = 3
    coef: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family: {self.family!r}")
        if self.family == RBF and not self.gamma > 0:
            raise ValueError(f"rbf kernel requires gamma > 0, got {self.gamma}")
        if self.family == POLYNOMIAL and self.degree < 1:
            raise ValueError(f"polynomial kernel requires degree >= 1, got {self.degree}")


def gram(X_a: np.ndarray, X_b: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Gram matrix k(X_a, X_b) of shape (n_a, n_b) for column-wise sample matrices."""
    X_a = np.asarray(X_a, dtype=float)
    X_b = np.asarray(X_b, dtype=float)
    if X_a.ndim != 2 or X_b.ndim != 2:
        raise ValueError("feature matrices must be 2-D (d, n)")
    if X_a.shape[0] != X_b.shape[0]:
        raise ValueError(
            f"feature dimension mismatch: {X_a.shape[0]} vs {X_b.shape[0]}"
        )
    inner = X_a.T @ X_b
    if spec.family == LINEAR:
        return inner
    if spec.family == POLYNOMIAL:
        return (inner + spec.coef) ** spec.degree
    # rbf
    sq_a = np.sum(X_a * X_a, axis=0)
    sq_b = np.sum(X_b * X_b, axis=0)
    sq_dist = sq_a[:, None] - 2.0 * inner + sq_b[None, :]
    np.maximum(sq_dist, 0.0, out=sq_dist)
    if X_a is X_b or (X_a.shape == X_b.shape and np.shares_memory(X_a, X_b)):
        np.fill_diagonal(sq_dist, 0.0)
    return np.exp(-spec.gamma * sq_dist)


def centering_matrix(n: int) -> np.ndarray:
    """H = I - (1/n) 11^T; symmetric, idempotent, annihilates the ones vector."""
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def center_rows(M: np.ndarray) -> np.ndarray:
    """Apply H on the left (H @ M) without forming H: subtract column means."""
    M = np.asarray(M, dtype=float)
    return M - M.mean(axis=0, keepdims=True)


def sym_eig_top(M: np.ndarray, h: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-h eigenpairs of a symmetric matrix.

    Returns (eigenvalues descending, eigenvectors as columns, orthonormal).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    n = M.shape[0]
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    if not 1 <= h <= n:
        raise ValueError(f"subspace dimension {h} out of range [1, {n}]")
    vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(vals)[::-1][:h]
    return vals[order], vecs[:, order]
