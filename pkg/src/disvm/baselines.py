"""Comparison methods: standard kernel SVM, PCA mappings, and the
dependence-minimizing projections (variance-maximizing subspaces penalized by
domain dependence, optionally rewarded for label dependence)."""

from dataclasses import dataclass, field

import numpy as np

from . import qp
from .domain import DomainMatrix
from .kernels import KernelSpec, center_rows, gram, sym_eig_top

PCA = "pca"
MIDA = "mida"
SMIDA = "smida"


@dataclass
class SvmModel:
    beta: np.ndarray
    train_features: np.ndarray
    spec: KernelSpec
    C: float
    diagnostics: dict = field(default_factory=dict)


def fit_svm(X: np.ndarray, y: np.ndarray, spec: KernelSpec = KernelSpec(),
            C: float = 1.0, tol: float = 1e-6) -> SvmModel:
    """Soft-margin kernel SVM over fully labeled samples (no intercept)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[1] != y.shape[0]:
        raise ValueError("label count must match the sample count")
    if np.unique(y[y != 0]).size < 2:
        raise ValueError("need both classes present")
    K = gram(X, X, spec)
    cache = qp.MarginQpCache(K)
    res = cache.solve(y, C, 0.0, tol=tol)
    if not res.converged:
        raise qp.QpError(f"SVM solver did not reach tolerance {tol:g}: kkt={res.kkt}")
    objective = res.quad + C * res.slack_sum
    return SvmModel(
        beta=res.beta, train_features=np.array(X, copy=True), spec=spec, C=float(C),
        diagnostics={"objective": objective, "kkt": res.kkt,
                     "slack_sum": res.slack_sum, "iterations": res.iterations},
    )


def svm_decision_values(model: SvmModel, X_new: np.ndarray) -> np.ndarray:
    return gram(np.asarray(X_new, dtype=float), model.train_features, model.spec) @ model.beta


def svm_predict(model: SvmModel, X_new: np.ndarray) -> np.ndarray:
    return np.where(svm_decision_values(model, X_new) >= 0.0, 1, -1)


@dataclass
class ProjectionModel:
    W: np.ndarray  # d x h for PCA, n x h for kernel projections
    h: int
    spec: KernelSpec
    train_features: np.ndarray
    kind: str
    mu_var: float = 1.0
    mu_y: float = 0.0
    mean: np.ndarray | None = None  # PCA training mean
    eigenvalues: np.ndarray | None = None


def fit_pca(X: np.ndarray, h: int) -> ProjectionModel:
    """Top-h principal directions of the mean-centered sample covariance."""
    X = np.asarray(X, dtype=float)
    d, n = X.shape
    if not 1 <= h <= min(d, n):
        raise ValueError(f"h={h} out of range [1, {min(d, n)}]")
    mean = X.mean(axis=1, keepdims=True)
    Xc = X - mean
    cov = Xc @ Xc.T / n
    vals, vecs = sym_eig_top(cov, h)
    return ProjectionModel(W=vecs, h=h, spec=KernelSpec(), train_features=X,
                           kind=PCA, mean=mean, eigenvalues=vals)


def _dependence_eig_matrix(K: np.ndarray, K_a: np.ndarray, mu_var: float,
                           K_y: np.ndarray | None, mu_y: float) -> np.ndarray:
    """K (mu_var H + mu_y H K_y H - H K_a H) K, symmetrized."""
    HK = center_rows(K)  # H K
    M = mu_var * (K @ HK) - HK.T @ K_a @ HK
    if K_y is not None and mu_y != 0.0:
        M = M + mu_y * (HK.T @ K_y @ HK)
    return 0.5 * (M + M.T)


def fit_mida(X: np.ndarray, A: DomainMatrix, h: int, mu_var: float = 1.0,
             spec: KernelSpec = KernelSpec()) -> ProjectionModel:
    """Kernel subspace maximizing captured variance minus domain dependence."""
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    if not 1 <= h <= n:
        raise ValueError(f"h={h} out of range [1, {n}]")
    if A.A.shape[1] != n:
        raise ValueError("domain matrix does not match the sample count")
    K = gram(X, X, spec)
    K_a = A.A.T @ A.A
    M = _dependence_eig_matrix(K, K_a, mu_var, None, 0.0)
    vals, vecs = sym_eig_top(M, h)
    return ProjectionModel(W=vecs, h=h, spec=spec, train_features=X, kind=MIDA,
                           mu_var=mu_var, eigenvalues=vals)


def fit_smida(X: np.ndarray, A: DomainMatrix, y_tilde: np.ndarray, h: int,
              mu_var: float = 1.0, mu_y: float = 1.0,
              spec: KernelSpec = KernelSpec()) -> ProjectionModel:
    """Semi-supervised variant: also rewards dependence on the label kernel
    K_y = y~ y~ᵀ (zeros for unlabeled samples)."""
    X = np.asarray(X, dtype=float)
    y_tilde = np.asarray(y_tilde, dtype=float)
    n = X.shape[1]
    if y_tilde.shape != (n,):
        raise ValueError("recoded label vector must match the sample count")
    if not 1 <= h <= n:
        raise ValueError(f"h={h} out of range [1, {n}]")
    K = gram(X, X, spec)
    K_a = A.A.T @ A.A
    K_y = np.outer(y_tilde, y_tilde)
    M = _dependence_eig_matrix(K, K_a, mu_var, K_y, mu_y)
    vals, vecs = sym_eig_top(M, h)
    return ProjectionModel(W=vecs, h=h, spec=spec, train_features=X, kind=SMIDA,
                           mu_var=mu_var, mu_y=mu_y, eigenvalues=vals)


def transform(model: ProjectionModel, X_new: np.ndarray) -> np.ndarray:
    """Projected features, shape (h, n'). PCA subtracts the training mean;
    kernel projections expand against the training samples."""
    X_new = np.asarray(X_new, dtype=float)
    if X_new.shape[0] != model.train_features.shape[0]:
        raise ValueError("feature dimension mismatch")
    if model.kind == PCA:
        return model.W.T @ (X_new - model.mean)
    return model.W.T @ gram(model.train_features, X_new, model.spec)
