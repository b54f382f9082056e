import numpy as np
import pytest

from disvm.qp import (MarginQpCache, QpError, QpProblem, QpSolution,
                      kkt_residuals, solve_qp)


def random_qp(rng, m, r):
    """Strictly convex feasible random problem."""
    A = rng.standard_normal((m, m))
    Q = A @ A.T + 0.5 * np.eye(m)
    c = rng.standard_normal(m)
    G = rng.standard_normal((r, m))
    x0 = rng.standard_normal(m)
    h = G @ x0 + rng.uniform(0.1, 1.0, size=r)  # x0 strictly feasible
    return QpProblem(Q=Q, c=c, G=G, h=h)


def projected_gradient_oracle(p, tol=1e-9, max_iter=500_000):
    """Projected gradient ascent on the dual of a strictly convex QP.

    x(z) = -Q^{-1}(c + G^T z); dual gradient is h - G x(z), projected onto
    z >= 0. Independent of the interior-point machinery under test.
    """
    Qi = np.linalg.inv(p.Q)
    z = np.zeros(p.h.shape[0])
    lips = np.linalg.norm(p.G @ Qi @ p.G.T, 2) + 1e-12
    step = 1.0 / lips
    for _ in range(max_iter):
        x = -Qi @ (p.c + p.G.T @ z)
        grad = p.G @ x - p.h
        z_new = np.clip(z + step * grad, 0.0, None)
        if np.max(np.abs(z_new - z)) < tol * step:
            z = z_new
            break
        z = z_new
    x = -Qi @ (p.c + p.G.T @ z)
    return p.objective(x), x, z


class TestQpProblem:
    def test_rejects_asymmetric_q(self, rng):
        Q = rng.standard_normal((3, 3)) + 10 * np.eye(3)
        p = QpProblem(Q=Q, c=np.zeros(3), G=None, h=None)
        with pytest.raises(ValueError, match="symmetric"):
            p.validate()

    def test_rejects_indefinite_q(self):
        p = QpProblem(Q=-np.eye(2), c=np.zeros(2), G=None, h=None)
        with pytest.raises(ValueError, match="positive semidefinite"):
            p.validate()

    def test_rejects_inconsistent_constraints(self):
        with pytest.raises(ValueError, match="inconsistent"):
            QpProblem(Q=np.eye(2), c=np.zeros(2), G=np.zeros((3, 2)),
                      h=np.zeros(2))


class TestSolveQp:
    def test_unconstrained_1d(self):
        # min 0.5 x^2 - x  ->  x = 1, objective -0.5
        p = QpProblem(Q=np.eye(1), c=np.array([-1.0]), G=None, h=None)
        sol = solve_qp(p)
        assert sol.converged
        assert sol.x[0] == pytest.approx(1.0, abs=1e-9)
        assert sol.objective == pytest.approx(-0.5, abs=1e-9)

    def test_active_constraint_1d(self):
        # min 0.5 x^2 - x  s.t.  x <= 0.5  ->  x = 0.5, dual = 0.5
        p = QpProblem(Q=np.eye(1), c=np.array([-1.0]),
                      G=np.array([[1.0]]), h=np.array([0.5]))
        sol = solve_qp(p)
        assert sol.converged
        assert sol.x[0] == pytest.approx(0.5, abs=1e-7)
        assert sol.duals[0] == pytest.approx(0.5, abs=1e-6)

    def test_matches_projected_gradient_oracle(self, rng):
        for _ in range(5):
            m = int(rng.integers(4, 12))
            p = random_qp(rng, m, m // 2 + 1)
            sol = solve_qp(p)
            assert sol.converged
            obj_ref, _, _ = projected_gradient_oracle(p)
            assert sol.objective == pytest.approx(obj_ref, abs=1e-6)

    def test_self_certification(self, rng):
        p = random_qp(rng, 8, 4)
        sol = solve_qp(p, tol=1e-6)
        assert sol.converged
        assert max(kkt_residuals(p, sol)) <= 1e-6
        assert (sol.duals >= -1e-10).all()

    def test_scale_invariance_of_argmin(self, rng):
        p = random_qp(rng, 6, 3)
        scaled = QpProblem(Q=7.0 * p.Q, c=7.0 * p.c, G=p.G, h=p.h)
        x1 = solve_qp(p).x
        x2 = solve_qp(scaled).x
        assert np.allclose(x1, x2, atol=1e-5)

    def test_deterministic(self, rng):
        p = random_qp(rng, 6, 3)
        a = solve_qp(p)
        b = solve_qp(p)
        assert np.array_equal(a.x, b.x)

    def test_infeasible_raises(self):
        # x <= -1 and -x <= -2 (x >= 2) cannot both hold
        p = QpProblem(Q=np.eye(1), c=np.zeros(1),
                      G=np.array([[1.0], [-1.0]]), h=np.array([-1.0, -2.0]))
        with pytest.raises(QpError):
            solve_qp(p)


class TestKktResiduals:
    def setup_method(self):
        self.p = QpProblem(Q=np.eye(1), c=np.array([-1.0]),
                           G=np.array([[1.0]]), h=np.array([0.5]))

    def test_zero_at_optimum(self):
        sol = QpSolution(np.array([0.5]), np.array([0.5]), 0.0, {}, 0)
        assert max(kkt_residuals(self.p, sol)) <= 1e-10

    def test_linear_growth_under_perturbation(self):
        sol = QpSolution(np.array([0.6]), np.array([0.5]), 0.0, {}, 0)
        stat, feas, comp = kkt_residuals(self.p, sol)
        assert stat == pytest.approx(0.1, abs=1e-12)
        assert feas == pytest.approx(0.1, abs=1e-12)

    def test_interior_optimum_zero_duals(self):
        p = QpProblem(Q=np.eye(1), c=np.array([-1.0]),
                      G=np.array([[1.0]]), h=np.array([5.0]))
        sol = QpSolution(np.array([1.0]), np.array([0.0]), 0.0, {}, 0)
        stat, feas, comp = kkt_residuals(p, sol)
        assert comp == 0.0 and stat <= 1e-12 and feas == 0.0

    def test_dimension_mismatch(self):
        sol = QpSolution(np.zeros(2), np.zeros(1), 0.0, {}, 0)
        with pytest.raises(ValueError, match="dimensions"):
            kkt_residuals(self.p, sol)


def margin_reference(K, P, y, C, lam, tol=1e-8):
    """Reference fit via the general-purpose stacked interior-point path."""
    from disvm.model import assemble_problem

    problem, lab = assemble_problem(K, P, y, C, lam)
    sol = solve_qp(problem, tol=tol)
    n = K.shape[0]
    return sol.x[:n], sol.objective


class TestMarginQpCache:
    def make_problem(self, rng, n=24, d=6, unlabeled=4):
        X = rng.standard_normal((d, n))
        K = X.T @ X
        onehot = np.zeros((3, n))
        onehot[rng.integers(0, 3, size=n), np.arange(n)] = 1.0
        A = np.vstack([onehot, np.ones((1, n))])
        Kc = K - K.mean(axis=0, keepdims=True)
        B = A @ Kc
        P = B.T @ B
        y = rng.choice([1.0, -1.0], size=n)
        y[rng.choice(n, size=unlabeled, replace=False)] = 0.0
        if np.unique(y[y != 0]).size < 2:
            y[:2] = (1.0, -1.0)
        return K, P, y

    @pytest.mark.parametrize("C,lam", [(1.0, 0.0), (0.1, 1.0), (100.0, 10.0)])
    def test_matches_stacked_reference(self, rng, C, lam):
        K, P, y = self.make_problem(rng)
        cache = MarginQpCache(K, P)
        fit = cache.solve(y, C, lam)
        assert fit.converged
        beta_ref, _ = margin_reference(K, P, y, C, lam)
        # beta itself may be non-unique; compare through the objective and
        # the decision values
        obj = fit.objective(C, lam)
        obj_ref = 0.5 * beta_ref @ K @ beta_ref + C * np.sum(np.clip(
            1.0 - y[y != 0] * (K @ beta_ref)[y != 0], 0.0, None)) \
            + 0.5 * lam * beta_ref @ P @ beta_ref
        assert obj == pytest.approx(obj_ref, rel=1e-4, abs=1e-6)

    def test_kkt_certified(self, rng):
        K, P, y = self.make_problem(rng)
        cache = MarginQpCache(K, P)
        for C in (0.01, 1.0, 100.0, 1e4):
            fit = cache.solve(y, C, 1.0)
            assert fit.converged
            assert max(fit.kkt.values()) <= 1e-6 * max(1.0, C)

    def test_duals_within_box(self, rng):
        K, P, y = self.make_problem(rng)
        cache = MarginQpCache(K, P)
        fit = cache.solve(y, 10.0, 0.1)
        assert (fit.alpha >= -1e-8).all()
        assert (fit.alpha <= 10.0 + 1e-6).all()

    def test_slack_consistency(self, rng):
        K, P, y = self.make_problem(rng)
        cache = MarginQpCache(K, P)
        fit = cache.solve(y, 1.0, 1.0)
        f = K @ fit.beta
        lab = fit.labeled
        xi_ref = np.clip(1.0 - y[lab] * f[lab], 0.0, None)
        assert np.allclose(fit.xi, xi_ref, atol=1e-8)
        assert fit.slack_sum == pytest.approx(xi_ref.sum(), abs=1e-8)

    def test_warm_start_consistent_with_cold(self, rng):
        K, P, y = self.make_problem(rng)
        warm = MarginQpCache(K, P)
        for C in (0.1, 1.0, 10.0):
            warm.solve(y, C, 1.0)
        reheated = warm.solve(y, 1.0, 1.0)
        cold = MarginQpCache(K, P).solve(y, 1.0, 1.0)
        assert reheated.objective(1.0, 1.0) == pytest.approx(
            cold.objective(1.0, 1.0), rel=1e-6, abs=1e-8)

    def test_fast_mode_close_to_exact(self, rng):
        K, P, y = self.make_problem(rng)
        cache = MarginQpCache(K, P)
        exact = cache.solve(y, 1.0, 1.0, exact=True)
        fast = cache.solve(y, 1.0, 1.0, exact=False)
        assert fast.objective(1.0, 1.0) == pytest.approx(
            exact.objective(1.0, 1.0), rel=1e-2, abs=1e-6)

    def test_rejects_bad_inputs(self, rng):
        K, P, y = self.make_problem(rng)
        cache = MarginQpCache(K, P)
        with pytest.raises(ValueError, match="C must be positive"):
            cache.solve(y, 0.0)
        with pytest.raises(ValueError, match="length"):
            cache.solve(y[:-1], 1.0)
        with pytest.raises(QpError, match="no labeled"):
            cache.solve(np.zeros_like(y), 1.0)

    def test_zero_kernel_degenerate_case(self):
        cache = MarginQpCache(np.zeros((4, 4)))
        y = np.array([1.0, -1.0, 1.0, 0.0])
        fit = cache.solve(y, 2.0)
        assert fit.converged
        assert np.allclose(fit.beta, 0.0)
        assert fit.slack_sum == pytest.approx(3.0)
