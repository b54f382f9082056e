import numpy as np
import pytest

from conftest import labeled_pool, random_dataset, single_domain_dataset
from disvm import baselines
from disvm.domain import concat, encode_domains
from disvm.hsic import simplified_hsic
from disvm.kernels import RBF, KernelSpec, gram
from disvm.model import decision_values, fit, predict
from disvm.datagen import SynthConfig, generate_synthetic

LIN = KernelSpec()

# regression fixtures: dependence penalty of the fitted solution on the
# standard synthetic two-experiment task (seed 7, C = 1)
SHSIC_LAM0 = 1688.6879244590111
SHSIC_LAM1 = 0.020073709510604276


class TestFitValidation:
    def test_rejects_single_class(self, rng):
        ds = labeled_pool(rng.standard_normal((3, 6)), np.ones(6, dtype=int))
        with pytest.raises(ValueError, match="per class"):
            fit(ds)

    def test_rejects_bad_hyperparameters(self, rng):
        ds = random_dataset(rng)
        with pytest.raises(ValueError, match="C must be positive"):
            fit(ds, C=0.0)
        with pytest.raises(ValueError, match="nonnegative"):
            fit(ds, lam=-1.0)

    def test_rejects_unknown_solver(self, rng):
        with pytest.raises(ValueError, match="unknown solver"):
            fit(random_dataset(rng), solver="genetic")


class TestLambdaZeroReduction:
    @pytest.mark.parametrize("spec", [LIN, KernelSpec(RBF, gamma=0.5)])
    def test_agrees_with_plain_svm(self, rng, spec):
        for trial in range(5):
            ds = random_dataset(rng, n=30, d=5, unlabeled_fraction=0.2)
            m = fit(ds, spec, C=1.0, lam=0.0)
            lab = ds.labels != 0
            svm = baselines.fit_svm(ds.features[:, lab], ds.labels[lab],
                                    spec, C=1.0)
            X_new = rng.standard_normal((5, 40))
            agree = np.mean(predict(m, X_new)
                            == baselines.svm_predict(svm, X_new))
            assert agree >= 0.99
            obj_m = m.diagnostics["objective"]
            obj_s = svm.diagnostics["objective"]
            assert obj_m == pytest.approx(obj_s, rel=1e-4)


class TestSingleDomainDegeneracy:
    def test_beta_independent_of_lambda(self, rng):
        ds = single_domain_dataset(rng, n=18, d=4)
        base = fit(ds, LIN, C=1.0, lam=0.0).beta
        for lam in (0.01, 0.1, 1.0, 10.0, 100.0):
            beta = fit(ds, LIN, C=1.0, lam=lam).beta
            assert np.max(np.abs(beta - base)) <= 1e-6


class TestDiagnostics:
    def test_objective_decomposition(self, rng):
        ds = random_dataset(rng, n=25, d=4, unlabeled_fraction=0.2)
        m = fit(ds, LIN, C=2.0, lam=0.5)
        K = gram(ds.features, ds.features, LIN)
        dom = encode_domains(ds)
        K_a = dom.A.T @ dom.A
        lab = ds.labels != 0
        f = K @ m.beta
        xi = np.clip(1.0 - ds.labels[lab] * f[lab], 0.0, None)
        recomputed = (0.5 * m.beta @ K @ m.beta + 2.0 * xi.sum()
                      + 0.25 * simplified_hsic(m.beta, K, K_a))
        assert m.diagnostics["objective"] == pytest.approx(recomputed, rel=1e-8)

    def test_kkt_below_tolerance(self, rng):
        ds = random_dataset(rng, n=25, d=4)
        m = fit(ds, LIN, C=1.0, lam=1.0, tol=1e-6)
        assert max(m.diagnostics["kkt"].values()) <= 1e-6

    def test_penalty_nonincreasing_in_lambda(self, rng):
        ds = random_dataset(rng, n=30, d=5, unlabeled_fraction=0.1)
        values = [fit(ds, LIN, C=1.0, lam=lam).diagnostics["simplified_hsic"]
                  for lam in (0.0, 0.01, 0.1, 1.0, 10.0, 100.0)]
        for prev, cur in zip(values, values[1:]):
            assert cur <= prev + 1e-8


class TestSolverPaths:
    def test_primal_and_dual_paths_agree(self, rng):
        ds = random_dataset(rng, n=20, d=4, unlabeled_fraction=0.2)
        m_dual = fit(ds, LIN, C=1.0, lam=1.0, solver="dual")
        m_primal = fit(ds, LIN, C=1.0, lam=1.0, solver="primal")
        assert m_dual.diagnostics["objective"] == pytest.approx(
            m_primal.diagnostics["objective"], rel=1e-4, abs=1e-6)
        X_new = rng.standard_normal((4, 50))
        assert np.mean(predict(m_dual, X_new)
                       == predict(m_primal, X_new)) >= 0.98


class TestSyntheticPenaltyFixture:
    def test_penalized_fit_reduces_dependence(self):
        data = generate_synthetic(SynthConfig(seed=7))
        pool = concat(data.values())
        s0 = fit(pool, LIN, C=1.0, lam=0.0).diagnostics["simplified_hsic"]
        s1 = fit(pool, LIN, C=1.0, lam=1.0).diagnostics["simplified_hsic"]
        assert s1 < s0
        assert s0 == pytest.approx(SHSIC_LAM0, rel=1e-3)
        assert s1 == pytest.approx(SHSIC_LAM1, rel=1e-2)


class TestPrediction:
    def test_zero_beta_gives_zero_values(self, rng):
        ds = random_dataset(rng, n=10, d=3)
        m = fit(ds, LIN, C=1.0, lam=0.0)
        m.beta = np.zeros_like(m.beta)
        assert np.allclose(decision_values(m, rng.standard_normal((3, 5))), 0.0)

    def test_training_points_reproduce_margins(self, rng):
        ds = random_dataset(rng, n=12, d=3)
        m = fit(ds, LIN, C=1.0, lam=0.5)
        K = gram(ds.features, ds.features, LIN)
        assert np.allclose(decision_values(m, ds.features), K @ m.beta,
                           atol=1e-10)

    def test_duplicated_query_duplicated_output(self, rng):
        ds = random_dataset(rng, n=10, d=3)
        m = fit(ds, LIN, C=1.0)
        x = rng.standard_normal((3, 1))
        vals = decision_values(m, np.concatenate([x, x], axis=1))
        assert vals[0] == vals[1]

    def test_sign_rule_with_tie_to_positive(self, rng):
        ds = random_dataset(rng, n=10, d=3)
        m = fit(ds, LIN, C=1.0)
        m.beta = np.zeros_like(m.beta)  # forces decision value exactly 0
        assert (predict(m, rng.standard_normal((3, 4))) == 1).all()

    def test_separable_two_point_training_recovered(self):
        ds = labeled_pool(np.array([[1.0, -1.0]]), np.array([1, -1]))
        m = fit(ds, LIN, C=10.0, lam=0.0)
        assert np.array_equal(predict(m, ds.features), [1, -1])

    def test_dimension_mismatch(self, rng):
        ds = random_dataset(rng, n=10, d=3)
        m = fit(ds, LIN, C=1.0)
        with pytest.raises(ValueError, match="dimension mismatch"):
            decision_values(m, rng.standard_normal((4, 2)))
