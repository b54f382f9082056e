"""The domain-independent SVM estimator.

Training assembles one quadratic program from the pool of labeled and
unlabeled samples: the kernel SVM objective plus a dependence penalty tying
the decision values to the one-hot domain matrix. Unlabeled samples appear in
the kernel and penalty terms but contribute no margin constraints.
"""

from dataclasses import dataclass, field

import numpy as np

from . import qp
from .domain import Dataset, encode_domains, recode_labels
from .hsic import simplified_hsic
from .kernels import KernelSpec, center_rows, gram


@dataclass
class DisvmModel:
    beta: np.ndarray
    train_features: np.ndarray
    spec: KernelSpec
    C: float
    lam: float
    diagnostics: dict = field(default_factory=dict)


def penalty_matrix(K: np.ndarray, A: np.ndarray) -> np.ndarray:
    """K H K_a H K with K_a = AᵀA, computed as BᵀB with B = A H K."""
    B = A @ center_rows(K)
    return B.T @ B


def assemble_problem(K: np.ndarray, P: np.ndarray, y_tilde: np.ndarray,
                     C: float, lam: float) -> tuple[qp.QpProblem, np.ndarray]:
    """Stacked primal QP over (beta, xi_labeled); returns it with the labeled index.

    The beta block of Q is K + lam*P regularized by eps*I with
    eps = 1e-8 * trace(K) / n; constraints are the margin inequalities for
    labeled samples and nonnegativity of their slacks.
    """
    n = K.shape[0]
    lab = np.flatnonzero(y_tilde != 0)
    L = lab.size
    eps = max(1e-8 * float(np.trace(K)) / n, 1e-12)
    Q = np.zeros((n + L, n + L))
    Q[:n, :n] = K + lam * P + eps * np.eye(n)
    c = np.concatenate([np.zeros(n), np.full(L, float(C))])
    G = np.zeros((2 * L, n + L))
    # -y_i (K beta)_i - xi_i <= -1 for labeled i
    G[:L, :n] = -(y_tilde[lab, None] * K[lab, :])
    G[np.arange(L), n + np.arange(L)] = -1.0
    # -xi_i <= 0
    G[L + np.arange(L), n + np.arange(L)] = -1.0
    h = np.concatenate([-np.ones(L), np.zeros(L)])
    return qp.QpProblem(Q=Q, c=c, G=G, h=h), lab


def fit(ds: Dataset, spec: KernelSpec = KernelSpec(), C: float = 1.0,
        lam: float = 1.0, tol: float = 1e-6, solver: str = "auto") -> DisvmModel:
    """Train on all pool samples; unlabeled ones only shape the dependence penalty.

    solver: "dual" (structured solver, default under "auto"), or "primal"
    (stacked-variable interior point). Both target the same QP and the same
    KKT tolerance.
    """
    if ds.n == 0:
        raise ValueError("cannot fit on an empty dataset")
    if not C > 0:
        raise ValueError("C must be positive")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    y = recode_labels(ds)
    classes = np.unique(y[y != 0])
    if classes.size < 2:
        raise ValueError("need at least one labeled sample per class")
    dom = encode_domains(ds)
    K = gram(ds.features, ds.features, spec)
    P = penalty_matrix(K, dom.A)
    K_a = dom.A.T @ dom.A

    if solver == "auto":
        solver = "dual"
    if solver == "dual":
        cache = qp.MarginQpCache(K, P)
        res = cache.solve(y, C, lam, tol=tol)
        if not res.converged:
            raise qp.QpError(
                f"margin solver did not reach tolerance {tol:g}: kkt={res.kkt}"
            )
        beta = res.beta
        xi_sum = res.slack_sum
        kkt = res.kkt
        iterations = res.iterations
    elif solver == "primal":
        problem, lab = assemble_problem(K, P, y, C, lam)
        sol = qp.solve_qp(problem, tol=tol)
        if not sol.converged:
            raise qp.QpError(f"QP solver did not converge: kkt={sol.kkt}")
        beta = sol.x[: K.shape[0]]
        xi_sum = float(sol.x[K.shape[0]:].sum())
        kkt = sol.kkt
        iterations = sol.iterations
    else:
        raise ValueError(f"unknown solver {solver!r}")

    shsic = simplified_hsic(beta, K, K_a)
    objective = float(0.5 * beta @ K @ beta) + C * xi_sum + 0.5 * lam * shsic
    return DisvmModel(
        beta=beta,
        train_features=np.array(ds.features, copy=True),
        spec=spec, C=float(C), lam=float(lam),
        diagnostics={
            "objective": objective,
            "kkt": kkt,
            "simplified_hsic": shsic,
            "slack_sum": xi_sum,
            "iterations": iterations,
            "solver": solver,
        },
    )


def decision_values(model: DisvmModel, X_new: np.ndarray) -> np.ndarray:
    """gram(X_new, train) @ beta for each query column."""
    return gram(np.asarray(X_new, dtype=float), model.train_features, model.spec) @ model.beta


def predict(model: DisvmModel, X_new: np.ndarray) -> np.ndarray:
    """Elementwise sign of the decision values; an exact zero maps to +1."""
    return np.where(decision_values(model, X_new) >= 0.0, 1, -1)
