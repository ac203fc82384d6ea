"""Doubly-robust CATE: pseudo-outcomes regressed on baseline covariates by first-order HAL."""
from dataclasses import dataclass

import numpy as np

from .config import EstimationConfig
from .estimators.learners import fit_initial_q
from .hal import HalFit, build_basis, cv_select, pointwise_se, predict


@dataclass(frozen=True)
class CateModel:
    k: int
    fit: HalFit
    n_used: int
    fitted_at: int = 0


def pseudo_outcome(y, a, w, qbar, g):
    """eta = (2a-1)/g(a|w) (y - qbar(a,w)) + qbar(1,w) - qbar(0,w).

    ``qbar(a, w)`` is vectorized; ``g`` is the probability of arm 1.
    """
    g = np.asarray(g, dtype=float)
    if np.any((g <= 0) | (g >= 1)):
        raise ValueError("positivity violation: probability of arm 1 at 0 or 1")
    a = np.asarray(a)
    y = np.asarray(y, dtype=float)
    ga = np.where(a == 1, g, 1.0 - g)
    q1, q0 = qbar(np.ones_like(a), w), qbar(np.zeros_like(a), w)
    qa = np.where(a == 1, q1, q0)
    return (2 * a - 1) / ga * (y - qa) + q1 - q0


def fit_cate(data, qbar=None, config: EstimationConfig = None, k=0, t=0):
    """Fit the CATE of ``data.y`` on ``data.w``; ``qbar`` defaults to the learner stack."""
    if data.n < 1:
        raise ValueError("no rows to fit a CATE model")
    config = config or EstimationConfig()
    if qbar is None:
        qbar = fit_initial_q(data.w, data.a, data.y, config)
    predict_q = qbar.predict if hasattr(qbar, "predict") else qbar
    eta = pseudo_outcome(data.y, data.a, data.w, predict_q, data.p1)
    basis = build_basis(data.w, order=1, cap=config.knot_cap)
    fit = cv_select(basis, data.w, eta, folds=config.folds, n_lambda=config.n_lambda,
                    ratio=config.lambda_ratio)
    return CateModel(k=k, fit=fit, n_used=data.n, fitted_at=t)


def cate_at(model: CateModel, w):
    """(B, tau) arrays at covariate rows ``w``; tau is inf when the SE is unavailable."""
    w = np.asarray(w, dtype=float)
    if w.ndim <= 1:
        w = w.reshape(-1, model.fit.basis.n_features)
    return predict(model.fit, w), pointwise_se(model.fit, w)
