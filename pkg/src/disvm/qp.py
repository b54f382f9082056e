"""Convex quadratic programming with inequality constraints and KKT certification.

Two entry points:

* solve_qp -- general dense QP  min ½ xᵀQx + cᵀx  s.t.  Gx ≤ h, solved by an
  interior-point method with an active-set polish. The contract is only that
  the returned KKT residuals are below the requested tolerance.
* MarginQpCache -- a structured solver for the soft-margin training problems
  used by the classifiers, exploiting the fact that grid searches re-solve the
  same pool with different labels and hyper-parameters.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from cvxopt import matrix as _cvx_matrix
from cvxopt import solvers as _cvx_solvers


class QpError(Exception):
    """Solver failure: infeasibility or non-convergence that cannot be repaired."""


@dataclass
class QpProblem:
    """min ½ xᵀQx + cᵀx  subject to  Gx ≤ h."""

    Q: np.ndarray
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        m = self.c.shape[0]
        if self.G is None:
            self.G = np.zeros((0, m))
            self.h = np.zeros(0)
        self.G = np.asarray(self.G, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        if self.Q.shape != (m, m):
            raise ValueError("Q must be square and match c")
        if self.G.shape != (self.h.shape[0], m):
            raise ValueError("G and h dimensions are inconsistent")

    def validate(self):
        scale = max(1.0, float(np.max(np.abs(self.Q))))
        if np.max(np.abs(self.Q - self.Q.T)) > 1e-10 * scale:
            raise ValueError("Q is not symmetric within tolerance")
        min_eig = float(np.linalg.eigvalsh(0.5 * (self.Q + self.Q.T)).min())
        if min_eig < -1e-8 * scale:
            raise ValueError(f"Q is not positive semidefinite (min eig {min_eig:g})")

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.Q @ x + self.c @ x)


@dataclass
class QpSolution:
    x: np.ndarray
    duals: np.ndarray
    objective: float
    kkt: dict
    iterations: int
    converged: bool = True


def kkt_residuals(p: QpProblem, s: QpSolution) -> tuple[float, float, float]:
    """(stationarity, primal feasibility, complementarity) infinity norms."""
    x, z = np.asarray(s.x, dtype=float), np.asarray(s.duals, dtype=float)
    if x.shape[0] != p.c.shape[0] or z.shape[0] != p.h.shape[0]:
        raise ValueError("solution dimensions do not match the problem")
    stat = float(np.max(np.abs(p.Q @ x + p.c + p.G.T @ z), initial=0.0))
    slack = p.G @ x - p.h
    feas = float(np.max(np.clip(slack, 0.0, None), initial=0.0))
    comp = float(np.max(np.abs(z * slack), initial=0.0))
    return stat, feas, comp


def _residuals_dict(p: QpProblem, x, z) -> dict:
    stat, feas, comp = kkt_residuals(p, QpSolution(x, z, 0.0, {}, 0))
    return {"stationarity": stat, "primal_feasibility": feas, "complementarity": comp}


def _polish_active_set(p: QpProblem, x: np.ndarray, z: np.ndarray, tol: float):
    """Refine an interior-point iterate by solving the KKT system on the active set."""
    m = x.shape[0]
    scale = max(1.0, float(np.max(np.abs(p.h), initial=0.0)))
    active = (z > np.maximum(1e-8, 1e-6 * np.max(z, initial=0.0))) | (
        p.h - p.G @ x < 1e-6 * scale
    )
    for _ in range(m + 10):
        Ga = p.G[active]
        na = Ga.shape[0]
        K = np.block([[p.Q, Ga.T], [Ga, np.zeros((na, na))]])
        rhs = np.concatenate([-p.c, p.h[active]])
        try:
            sol = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
        x_new = sol[:m]
        za = sol[m:]
        if (za < -1e-9).any():
            drop = np.flatnonzero(active)[np.argmin(za)]
            active[drop] = False
            continue
        violation = p.G @ x_new - p.h
        if violation.max(initial=0.0) > tol:
            add = np.argmax(violation)
            if active[add]:
                break
            active[add] = True
            continue
        z_new = np.zeros_like(z)
        z_new[active] = np.clip(za, 0.0, None)
        return x_new, z_new
    return x, z


def solve_qp(p: QpProblem, tol: float = 1e-6, max_iter: int = 500) -> QpSolution:
    """Solve the QP to KKT residuals <= tol; deterministic for fixed inputs.

    Raises QpError on detected infeasibility; a max_iter exhaustion returns the
    best iterate flagged as non-converged.
    """
    p.validate()
    m = p.c.shape[0]
    if p.h.shape[0] == 0:
        try:
            x = scipy.linalg.solve(p.Q, -p.c, assume_a="sym")
        except (scipy.linalg.LinAlgError, ValueError):
            x, *_ = np.linalg.lstsq(p.Q, -p.c, rcond=None)
        sol = QpSolution(x, np.zeros(0), p.objective(x), {}, 1)
        sol.kkt = _residuals_dict(p, x, sol.duals)
        sol.converged = max(sol.kkt.values()) <= tol
        return sol

    opts = {
        "show_progress": False,
        "abstol": min(tol, 1e-9),
        "reltol": min(tol, 1e-9),
        "feastol": min(tol, 1e-9),
        "maxiters": int(max_iter),
    }
    raw = None
    # the LDL fallback copes with semidefinite blocks the default Cholesky
    # based KKT solver rejects
    for kktsolver in (None, "ldl"):
        try:
            raw = _cvx_solvers.qp(
                _cvx_matrix(p.Q), _cvx_matrix(p.c),
                _cvx_matrix(p.G), _cvx_matrix(p.h),
                kktsolver=kktsolver, options=opts,
            )
        except (ValueError, ArithmeticError) as exc:
            if kktsolver == "ldl":
                raise QpError(f"interior-point solver failed: {exc}") from exc
            continue
        if raw["status"] == "optimal":
            break
    status = raw["status"]
    if "infeasible" in status:
        raise QpError(f"problem reported {status}")
    x = np.asarray(raw["x"], dtype=float).ravel()
    z = np.clip(np.asarray(raw["z"], dtype=float).ravel(), 0.0, None)
    kkt = _residuals_dict(p, x, z)
    if max(kkt.values()) > tol:
        x2, z2 = _polish_active_set(p, x, z, tol)
        kkt2 = _residuals_dict(p, x2, z2)
        if max(kkt2.values()) < max(kkt.values()):
            x, z, kkt = x2, z2, kkt2
    scale_h = max(1.0, float(np.max(np.abs(p.h), initial=0.0)))
    if status != "optimal" and kkt["primal_feasibility"] > 1e-3 * scale_h:
        raise QpError(
            f"no feasible point found (status {status}, "
            f"feasibility residual {kkt['primal_feasibility']:g})"
        )
    sol = QpSolution(x, z, p.objective(x), kkt, int(raw["iterations"]))
    sol.converged = status == "optimal" and max(kkt.values()) <= tol
    if status == "unknown" and not sol.converged:
        sol.converged = False
    return sol


# ---------------------------------------------------------------------------
# Structured soft-margin solver
# ---------------------------------------------------------------------------


@dataclass
class MarginFit:
    """Solution of one soft-margin training problem over a fixed pool."""

    beta: np.ndarray
    xi: np.ndarray
    alpha: np.ndarray
    labeled: np.ndarray
    kkt: dict
    iterations: int
    converged: bool
    quad: float  # ½ βᵀKβ
    penalty: float  # βᵀPβ (simplified dependence quadratic form)
    slack_sum: float

    def objective(self, C: float, lam: float) -> float:
        return self.quad + C * self.slack_sum + 0.5 * lam * self.penalty


class MarginQpCache:
    """Soft-margin QP solver with per-pool caching.

    Solves  min ½ βᵀKβ + C Σ_{i:y_i≠0} ξ_i + ½ λ βᵀPβ
            s.t. y_i (Kβ)_i ≥ 1 − ξ_i,  ξ ≥ 0
    restricted to the range of K (the objective and constraints only see β
    through Kβ and the K-weighted quadratic forms, so this loses nothing and
    removes the rank deficiency of coefficient space). Internally the problem
    is rewritten over u with β = V Λ^{-1/2} u, where K = V Λ Vᵀ keeps the
    strictly positive eigenvalues; the reduced Hessian I + λ·Pr is perfectly
    conditioned and its Cholesky factor is cached per λ, so sweeping C or
    relabeling samples reuses all heavy linear algebra.

    Each solve runs a smoothed-hinge Newton continuation followed by an exact
    active-set finish on the face it identifies, and is certified by primal
    KKT residuals measured relative to max(1, C).
    """

    def __init__(self, K: np.ndarray, P: np.ndarray | None = None):
        self.K = np.asarray(K, dtype=float)
        self.n = self.K.shape[0]
        if self.K.shape != (self.n, self.n):
            raise ValueError("K must be square")
        self.P = None if P is None else np.asarray(P, dtype=float)
        if self.P is not None and self.P.shape != self.K.shape:
            raise ValueError("P must match K")
        w, V = np.linalg.eigh(0.5 * (self.K + self.K.T))
        keep = w > max(float(w[-1]), 0.0) * 1e-12
        self.r = int(np.count_nonzero(keep))
        w_r, V_r = w[keep], V[:, keep]
        s = np.sqrt(w_r)
        self.Z = s[:, None] * V_r.T  # r × n, K = ZᵀZ
        self._coef_map = V_r / s  # u → β
        if self.P is not None and self.r:
            Pr = self._coef_map.T @ self.P @ self._coef_map
            self.Pr = 0.5 * (Pr + Pr.T)
        else:
            self.Pr = None
        self._factors: dict = {}
        self._warm: dict = {}
        self._geom: dict = {}  # (lam, labeled-pattern) -> (Zy, MiZy, G)

    def _factor(self, lam: float):
        key = float(lam)
        if key not in self._factors:
            Mu = np.eye(self.r)
            if self.Pr is not None and lam != 0.0:
                Mu = Mu + lam * self.Pr
            cho = scipy.linalg.cho_factor(Mu, lower=True)
            self._factors[key] = (Mu, cho)
        return self._factors[key]

    def solve(self, y: np.ndarray, C: float, lam: float = 0.0,
              tol: float = 1e-6, max_iter: int = 500,
              exact: bool = True) -> MarginFit:
        """Fit one margin problem.

        exact=True runs the Newton continuation plus an exact finish and
        certifies KKT residuals against tol * max(1, C). exact=False stops at
        the smoothed-hinge solution -- orders of magnitude faster and accurate
        enough for hyper-parameter scoring, but the complementarity residual
        is only as small as the smoothing allows and `converged` reflects the
        smoothed problem.
        """
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n,):
            raise ValueError("label vector length must match the pool")
        if not C > 0:
            raise ValueError("C must be positive")
        lab = np.flatnonzero(y != 0)
        if lab.size == 0:
            raise QpError("no labeled samples: margin problem is vacuous")
        y_l = y[lab]
        L = lab.size
        if self.r == 0:
            # K = 0: decision values vanish, every labeled sample sits at
            # slack 1 and the dual saturates
            return MarginFit(
                beta=np.zeros(self.n), xi=np.ones(L), alpha=np.full(L, float(C)),
                labeled=lab, kkt={"stationarity": 0.0, "primal_feasibility": 0.0,
                                  "complementarity": 0.0},
                iterations=0, converged=True, quad=0.0, penalty=0.0,
                slack_sum=float(L),
            )
        Mu, cho = self._factor(lam)
        C = float(C)
        scale = max(1.0, C)
        warm_key = (float(lam), lab.tobytes())
        u = self._warm.get(warm_key)
        u = np.zeros(self.r) if u is None else u.copy()
        Zy = None
        geom = self._geom.get(warm_key)
        if geom is not None:
            Zy, MiZy, G = geom
        if Zy is None:
            Zy = self.Z[:, lab] * y_l

        iters = 0
        final_delta = 1e-3 if not exact else 1e-5
        newton_ok = False
        for delta in (1e-1, 1e-3, 1e-5):
            u, it, newton_ok = _hinge_newton(u, Mu, Zy, C, delta, tol)
            iters += it
            if delta >= final_delta:
                break
        self._warm[warm_key] = u.copy()

        if not exact:
            m = Zy.T @ u
            w = np.where(m <= 1.0 - final_delta, 1.0,
                         np.where(m < 1.0, (1.0 - m) / final_delta, 0.0))
            alpha = C * w
            kkt = _margin_kkt(Mu, Zy, C, u, alpha)
            return self._package(u, alpha, lab, Zy, kkt, iters, newton_ok)

        if geom is None:
            MiZy = scipy.linalg.cho_solve(cho, Zy)
            G = Zy.T @ MiZy
            if len(self._geom) >= 64:
                self._geom.pop(next(iter(self._geom)))
            self._geom[warm_key] = (Zy, MiZy, G)
        alpha, u_star, kkt, it2 = _face_finish(Mu, Zy, MiZy, G, C, u,
                                               final_delta, tol)
        iters += it2
        res = max(kkt.values())
        converged = res <= tol * scale

        if not converged:
            # the interior-point solver handles the degenerate faces the
            # active-set finish cannot settle; the box is rescaled to [0, 1]
            # so large C does not wreck its conditioning
            box = QpProblem(
                Q=0.5 * (G + G.T), c=np.full(L, -1.0 / C),
                G=np.vstack([np.eye(L), -np.eye(L)]),
                h=np.concatenate([np.ones(L), np.zeros(L)]),
            )
            try:
                sol = solve_qp(box, tol=min(tol, 1e-8))
            except QpError:
                sol = None
            if sol is not None:
                a2 = C * np.clip(sol.x, 0.0, 1.0)
                u2 = MiZy @ a2
                kkt2 = _margin_kkt(Mu, Zy, C, u2, a2)
                iters += sol.iterations
                if max(kkt2.values()) < res:
                    alpha, u_star, kkt = a2, u2, kkt2
                    res = max(kkt2.values())
                    converged = res <= tol * scale
        self._warm[warm_key] = u_star.copy()
        return self._package(u_star, alpha, lab, Zy, kkt, iters, converged)

    def _package(self, u, alpha, lab, Zy, kkt, iters, converged):
        beta = self._coef_map @ u
        quad = float(0.5 * u @ u)
        penalty = float(u @ self.Pr @ u) if self.Pr is not None else 0.0
        xi = np.clip(1.0 - Zy.T @ u, 0.0, None)
        return MarginFit(
            beta=beta, xi=xi, alpha=alpha, labeled=lab, kkt=kkt,
            iterations=iters, converged=converged,
            quad=quad, penalty=penalty, slack_sum=float(xi.sum()),
        )


def _huber_objective(u, Mu, Zy, C, delta):
    m = Zy.T @ u
    phi = np.where(m >= 1.0, 0.0,
                   np.where(m <= 1.0 - delta, 1.0 - m - 0.5 * delta,
                            (1.0 - m) ** 2 / (2.0 * delta)))
    return 0.5 * u @ Mu @ u + C * phi.sum()


def _hinge_newton(u, Mu, Zy, C, delta, tol, max_steps=60):
    """Damped Newton on the smoothed-hinge primal.

    Returns (u, steps, converged) where converged means the gradient of the
    smoothed objective dropped below its tolerance.
    """
    gtol = 0.1 * tol * max(1.0, C)
    for step_count in range(max_steps):
        m = Zy.T @ u
        w = np.where(m <= 1.0 - delta, 1.0,
                     np.where(m < 1.0, (1.0 - m) / delta, 0.0))
        grad = Mu @ u - C * (Zy @ w)
        if np.max(np.abs(grad)) <= gtol:
            return u, step_count, True
        quad_mask = (m > 1.0 - delta) & (m < 1.0)
        H = Mu.copy()
        if quad_mask.any():
            Zq = Zy[:, quad_mask]
            H += (C / delta) * (Zq @ Zq.T)
        step = scipy.linalg.solve(H, -grad, assume_a="pos")
        decrement = -float(grad @ step)
        j0 = _huber_objective(u, Mu, Zy, C, delta)
        t = 1.0
        while t > 1e-13:
            if _huber_objective(u + t * step, Mu, Zy, C, delta) <= j0 - 1e-4 * t * decrement:
                break
            t *= 0.5
        u = u + t * step
        if t <= 1e-13:
            return u, step_count + 1, False
    m = Zy.T @ u
    w = np.where(m <= 1.0 - delta, 1.0, np.where(m < 1.0, (1.0 - m) / delta, 0.0))
    grad = Mu @ u - C * (Zy @ w)
    return u, max_steps, bool(np.max(np.abs(grad)) <= gtol)


def _margin_kkt(Mu, Zy, C, u, alpha) -> dict:
    margins = Zy.T @ u
    xi = np.clip(1.0 - margins, 0.0, None)
    stat = float(np.max(np.abs(Mu @ u - Zy @ alpha), initial=0.0))
    comp_margin = float(np.max(np.abs(alpha * np.minimum(1.0 - margins, 0.0)),
                               initial=0.0))
    comp_slack = float(np.max((C - alpha) * xi, initial=0.0))
    return {"stationarity": stat, "primal_feasibility": 0.0,
            "complementarity": max(comp_margin, comp_slack)}


def _face_finish(Mu, Zy, MiZy, G, C, u, delta, tol, max_rounds=150):
    """Exact solve on the active face suggested by a near-optimal primal point.

    Active-set refinement on the box dual: free coordinates solve an equality
    system; bound-pattern updates move whole violating blocks at once and the
    best certified iterate is kept, so occasional oscillation is harmless.
    """
    L = Zy.shape[1]
    m = Zy.T @ u
    state = np.zeros(L, dtype=np.int8)  # -1 lower (alpha=0), 0 free, +1 upper
    state[m >= 1.0] = -1
    state[m <= 1.0 - delta] = 1
    eta = 1e-9 * max(1.0, C)
    best = None
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        free = state == 0
        upper = state == 1
        alpha = np.where(upper, C, 0.0)
        sol = None
        if free.any():
            rhs = 1.0 - C * G[np.ix_(free, upper)].sum(axis=1)
            sol, *_ = scipy.linalg.lstsq(G[np.ix_(free, free)], rhs,
                                         cond=None, check_finite=False)
            alpha[free] = np.clip(sol, 0.0, C)
        margins = G @ alpha
        u_star = MiZy @ alpha
        kkt = _margin_kkt(Mu, Zy, C, u_star, alpha)
        res = max(kkt.values())
        if best is None or res < best[0]:
            best = (res, alpha, u_star, kkt)
        if res <= tol * max(1.0, C):
            break
        moved = False
        if sol is not None:
            idx_free = np.flatnonzero(free)
            low = sol < -eta
            high = sol > C + eta
            if low.any() or high.any():
                state[idx_free[low]] = -1
                state[idx_free[high]] = 1
                moved = True
        if not moved:
            grad_viol = np.where(state == -1,
                                 np.clip(1.0 - margins, 0.0, None),
                                 np.where(state == 1,
                                          np.clip(margins - 1.0, 0.0, None),
                                          0.0))
            maxviol = grad_viol.max(initial=0.0)
            if maxviol <= max(tol, eta):
                break
            state[grad_viol >= 0.5 * maxviol] = 0
    _, alpha, u_star, kkt = best
    return alpha, u_star, kkt, rounds
