import numpy as np
import pytest

from surrogate_cara.cate import cate_at, fit_cate, pseudo_outcome
from surrogate_cara.config import EstimationConfig
from surrogate_cara.dgp import ScenarioSpec, cond_mean, sample_baseline, sample_outcomes, true_cate
from surrogate_cara.trial import CaseData

GRID = np.linspace(-3.5, 3.5, 15)


def rct_cases(spec, n, k, seed, p1=0.5):
    rng = np.random.default_rng(seed)
    w = sample_baseline(spec, rng, n)
    a = (rng.random(n) < p1).astype(np.int64)
    y = sample_outcomes(spec, a, w, rng)[:, k - 1]
    p = np.full(n, p1)
    return CaseData(np.arange(n), w, a, np.where(a == 1, p, 1 - p), p, y)


def const_q(c1, c0):
    return lambda a, w: np.where(np.asarray(a) == 1, c1, c0) * np.ones(len(np.atleast_1d(a)))


class TestPseudoOutcome:
    def test_treated_case(self):
        assert pseudo_outcome(np.array([1.0]), np.array([1]), None, const_q(0.5, 0.2), 0.5)[0] \
            == pytest.approx(1.3, abs=1e-15)

    def test_control_case(self):
        assert pseudo_outcome(np.array([0.0]), np.array([0]), None, const_q(0.5, 0.2), 0.5)[0] \
            == pytest.approx(0.7, abs=1e-15)

    def test_zero_residual(self):
        eta = pseudo_outcome(np.array([0.5, 0.2]), np.array([1, 0]), None, const_q(0.5, 0.2), 0.3)
        assert np.allclose(eta, 0.3)

    def test_positivity(self):
        for g in (0.0, 1.0):
            with pytest.raises(ValueError):
                pseudo_outcome(np.array([1.0]), np.array([1]), None, const_q(0.5, 0.2), g)

    def test_unbiased_over_arms(self):
        # averaging eta over the arm lottery recovers m1 - m0 even with a zero regression
        g, m1, m0 = 0.3, 1.7, -0.4
        eta1 = pseudo_outcome(np.array([m1]), np.array([1]), None, const_q(0.0, 0.0), g)[0]
        eta0 = pseudo_outcome(np.array([m0]), np.array([0]), None, const_q(0.0, 0.0), g)[0]
        assert g * eta1 + (1 - g) * eta0 == pytest.approx(m1 - m0, abs=1e-14)


class TestFitCate:
    def test_true_q_noise_free(self):
        spec = ScenarioSpec("scenario2", noise_sd=0.0)
        data = rct_cases(spec, 2000, 1, 0)
        model = fit_cate(data, qbar=lambda a, w: cond_mean(spec, 1, a, w))
        b, _ = cate_at(model, GRID)
        assert np.max(np.abs(b - true_cate(spec, 1, GRID))) <= 0.05

    def test_zero_q_double_robust(self):
        # same noise-free setting as above; only the outcome regression is wrong
        spec = ScenarioSpec("scenario2", noise_sd=0.0)
        data = rct_cases(spec, 5000, 1, 1)
        model = fit_cate(data, qbar=lambda a, w: np.zeros(len(np.atleast_1d(a))))
        b, _ = cate_at(model, GRID)
        assert np.max(np.abs(b - true_cate(spec, 1, GRID))) <= 0.05

    def test_binned_pseudo_outcomes(self):
        spec = ScenarioSpec("scenario2")
        data = rct_cases(spec, 5000, 1, 2)
        for qbar in (lambda a, w: cond_mean(spec, 1, a, w),
                     lambda a, w: np.zeros(len(np.atleast_1d(a)))):
            eta = pseudo_outcome(data.y, data.a, data.w, qbar, data.p1)
            edges = np.linspace(-4, 4, 9)
            w = data.w[:, 0]
            for lo, hi in zip(edges[:-1], edges[1:]):
                sel = (w >= lo) & (w < hi)
                se = eta[sel].std() / np.sqrt(sel.sum())
                truth = true_cate(spec, 1, w[sel]).mean()
                assert abs(eta[sel].mean() - truth) <= 3 * se + 1e-12

    def test_single_row(self):
        data = CaseData(np.arange(1), np.array([[0.3]]), np.array([1]), np.array([0.5]),
                        np.array([0.5]), np.array([1.0]))
        model = fit_cate(data, qbar=const_q(0.5, 0.2))
        b, _ = cate_at(model, np.array([-2.0, 0.0, 3.0]))
        assert np.allclose(b, 1.3)

    def test_identical_covariates(self):
        spec = ScenarioSpec("scenario1", w_low=0.5, w_high=0.5)
        model = fit_cate(rct_cases(spec, 200, 5, 3), config=EstimationConfig(knot_cap=30))
        b, tau = cate_at(model, np.array([-1.0, 0.5, 2.0]))
        assert np.ptp(b) == 0 and np.ptp(tau) == 0

    def test_linear_cate_representable(self):
        rng = np.random.default_rng(4)
        n = 400
        w = rng.uniform(-2, 2, (n, 1))
        a = rng.integers(0, 2, n)
        y = np.where(a == 1, 0.5 + 0.8 * w[:, 0], -0.5 - 0.2 * w[:, 0])
        data = CaseData(np.arange(n), w, a, np.full(n, 0.5), np.full(n, 0.5), y)
        truth = lambda a_, w_: np.where(np.asarray(a_) == 1, 0.5 + 0.8 * w_[:, 0], -0.5 - 0.2 * w_[:, 0])
        model = fit_cate(data, qbar=truth, config=EstimationConfig(knot_cap=50, lambda_ratio=1e-7))
        grid = np.linspace(w.min(), w.max(), 25)
        b, _ = cate_at(model, grid)
        assert np.max(np.abs(b - (1.0 + grid))) <= 1e-3

    def test_duplicated_data_shrinks_tau(self):
        spec = ScenarioSpec("scenario2")
        data = rct_cases(spec, 300, 1, 5)
        cfg = EstimationConfig(knot_cap=20)
        model = fit_cate(data, config=cfg, qbar=lambda a, w: np.zeros(len(np.atleast_1d(a))))
        idx = np.repeat(np.arange(data.n), 2)
        dup = CaseData(np.arange(2 * data.n), data.w[idx], data.a[idx], data.g0[idx], data.p1[idx],
                       data.y[idx])
        # the same penalty is forced so only the sandwich scaling differs
        from surrogate_cara.hal import build_basis, cv_select
        eta = pseudo_outcome(dup.y, dup.a, dup.w, lambda a, w: np.zeros(len(a)), dup.p1)
        basis = build_basis(data.w, order=1, cap=cfg.knot_cap)
        fit2 = cv_select(basis, dup.w, eta, lambda_grid=[model.fit.lam])
        model2 = type(model)(k=0, fit=fit2, n_used=dup.n)
        b1, t1 = cate_at(model, GRID)
        b2, t2 = cate_at(model2, GRID)
        assert np.allclose(b1, b2, atol=1e-8)
        assert np.all(t2 < t1)

    def test_tau_shrinks_with_n(self):
        spec = ScenarioSpec("scenario2")
        cfg = EstimationConfig(knot_cap=20, n_lambda=20)
        med = {}
        for n in (500, 2000):
            taus = [np.median(cate_at(fit_cate(rct_cases(spec, n, 1, 100 + s), config=cfg), GRID)[1])
                    for s in range(20)]
            med[n] = np.median(taus)
        assert med[2000] < med[500]

    def test_rejects_empty(self):
        data = CaseData(np.zeros(0, dtype=np.int64), np.zeros((0, 1)), np.zeros(0, dtype=np.int64),
                        np.zeros(0), np.zeros(0), np.zeros(0))
        with pytest.raises(ValueError):
            fit_cate(data)
