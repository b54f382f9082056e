"""Empirical HSIC and the classifier-level simplified dependence penalty."""

import numpy as np

from .kernels import KernelSpec, center_rows, gram


def hsic(X: np.ndarray, Y: np.ndarray, kx: KernelSpec, ky: KernelSpec) -> float:
    """Empirical HSIC between two column-wise sample sets with n shared samples.

    Returns (1 / (n-1)^2) * tr(K H L H); zero iff the sets are independent for
    characteristic kernels.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"sample count mismatch: {X.shape[1]} vs {Y.shape[1]}")
    n = X.shape[1]
    if n < 2:
        raise ValueError("hsic requires at least 2 samples")
    K = gram(X, X, kx)
    L = gram(Y, Y, ky)
    KH = center_rows(center_rows(K).T)  # H K H
    return float(np.sum(KH * L) / (n - 1) ** 2)


def simplified_hsic(beta: np.ndarray, K: np.ndarray, K_a: np.ndarray) -> float:
    """Dependence of the 1-D classifier mapping on domain information.

    Computes beta^T K H K_a H K beta with no (n-1)^-2 normalization; the
    regularization weight absorbs the scale. Nonnegative for PSD K_a.
    """
    beta = np.asarray(beta, dtype=float)
    K = np.asarray(K, dtype=float)
    K_a = np.asarray(K_a, dtype=float)
    n = beta.shape[0]
    if K.shape != (n, n) or K_a.shape != (n, n):
        raise ValueError("beta, K, and K_a dimensions are inconsistent")
    q = K @ beta
    q = q - q.mean()  # H (K beta)
    return float(q @ K_a @ q)
