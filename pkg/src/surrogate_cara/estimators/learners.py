"""Initial outcome regressions and the discrete cross-validated selector."""
import numpy as np

from ..config import EstimationConfig
from ..hal import build_basis, cv_select, predict as hal_predict


def _design(w, a):
    w = np.asarray(w, dtype=float).reshape(len(a), -1)
    a = np.asarray(a, dtype=float)
    return np.column_stack([np.ones(len(a)), w, a, w * a[:, None]])


class ArmMeans:
    name = "arm_means"

    def fit(self, w, a, y):
        overall = float(np.mean(y))
        self.means = np.array([np.mean(y[a == arm]) if np.any(a == arm) else overall
                               for arm in (0, 1)])
        return self

    def predict(self, a, w):
        return self.means[np.asarray(a, dtype=np.int64)]


class InteractionLinear:
    name = "interaction_linear"

    def fit(self, w, a, y):
        self.coef, *_ = np.linalg.lstsq(_design(w, a), y, rcond=None)
        return self

    def predict(self, a, w):
        return _design(w, a) @ self.coef


class HalLearner:
    """First-order HAL on (w, a) with pairwise tensor sections, so arm interactions enter."""

    name = "hal"

    def __init__(self, config: EstimationConfig):
        self.config = config

    def fit(self, w, a, y):
        x = np.column_stack([np.asarray(w, dtype=float).reshape(len(a), -1), a])
        basis = build_basis(x, order=1, cap=self.config.q_knot_cap, max_degree=2)
        self.fit_ = cv_select(basis, x, y, folds=self.config.folds, n_lambda=self.config.n_lambda,
                              ratio=self.config.lambda_ratio)
        self.cv_risk = float(np.min(self.fit_.cv_risk)) if self.fit_.cv_risk is not None else np.inf
        return self

    def predict(self, a, w):
        w = np.asarray(w, dtype=float)
        w = w.reshape(-1, 1) if w.ndim == 1 else w
        a = np.broadcast_to(np.asarray(a, dtype=float), (w.shape[0],))
        return hal_predict(self.fit_, np.column_stack([w, a]))


class FittedQ:
    """Selected conditional-mean estimator; ``predict(a, w)`` on the raw outcome scale."""

    def __init__(self, learner, cv_risk):
        self.learner = learner
        self.name = learner.name
        self.cv_risk = cv_risk

    def predict(self, a, w):
        w = np.asarray(w, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        a = np.broadcast_to(np.asarray(a), (w.shape[0],))
        return self.learner.predict(a, w)


def _cv_mse(make, w, a, y, folds):
    n = len(y)
    fold = np.arange(n) % folds
    sse = 0.0
    for v in range(folds):
        hold = fold == v
        model = make().fit(w[~hold], a[~hold], y[~hold])
        sse += float(np.sum((y[hold] - model.predict(a[hold], w[hold])) ** 2))
    return sse / n


def fit_initial_q(w, a, y, config: EstimationConfig = None, learners=None):
    """Pick among arm-wise means, interaction-linear and HAL by V-fold CV MSE.

    Learners are listed simplest first and a later one must beat the
    incumbent by more than rounding noise to be chosen.  The HAL learner is
    scored by the CV risk of its own selected penalty on the same folds.
    """
    config = config or EstimationConfig()
    w = np.asarray(w, dtype=float)
    w = w[:, None] if w.ndim == 1 else w
    a = np.asarray(a, dtype=np.int64)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 2:
        raise ValueError("need at least two rows to fit an outcome regression")
    folds = min(config.folds, n)
    names = learners or config.q_learners
    best, best_risk, risks = None, np.inf, {}
    for name in names:
        if name == "hal":
            learner = HalLearner(config).fit(w, a, y)
            risk = learner.cv_risk
        else:
            make = {"arm_means": ArmMeans, "interaction_linear": InteractionLinear}[name]
            risk = _cv_mse(make, w, a, y, folds)
            learner = None
        risks[name] = risk
        if best is None or risk < best_risk * (1 - 1e-9) - 1e-14:
            best, best_risk = (name, learner), risk
    name, learner = best
    if learner is None:
        learner = {"arm_means": ArmMeans, "interaction_linear": InteractionLinear}[name]().fit(w, a, y)
    return FittedQ(learner, risks)
