"""Lasso path fitting, cross-validated bound selection and working-model SEs."""
from dataclasses import dataclass, field

import numpy as np

from ._kernels import lasso_path
from .basis import HalBasis, _as_2d

RIDGE = 1e-8
COND_LIMIT = 1e12


@dataclass
class _Moments:
    sxx: np.ndarray
    sx: np.ndarray
    sxy: np.ndarray
    sy: float
    syy: float
    sw: float

    def __sub__(self, other):
        return _Moments(self.sxx - other.sxx, self.sx - other.sx, self.sxy - other.sxy,
                        self.sy - other.sy, self.syy - other.syy, self.sw - other.sw)

    def centered(self):
        """Mean-scaled centered Gram, cross moment, y second moment and means."""
        xbar = self.sx / self.sw
        ybar = self.sy / self.sw
        G = self.sxx / self.sw - np.outer(xbar, xbar)
        c = self.sxy / self.sw - xbar * ybar
        yy = self.syy / self.sw - ybar * ybar
        return G, c, max(yy, 0.0), xbar, ybar

    def sse(self, coef):
        """Weighted SSE of intercept-first coefficients on these moments."""
        b0, b = coef[0], coef[1:]
        return (self.syy - 2.0 * (b0 * self.sy + b @ self.sxy) + b0 * b0 * self.sw
                + 2.0 * b0 * (b @ self.sx) + b @ self.sxx @ b)


def _moments(X, y, w):
    Xw = X * w[:, None]
    return _Moments(Xw.T @ X, Xw.sum(axis=0), Xw.T @ y, float(w @ y), float(w @ (y * y)),
                    float(w.sum()))


def _check_inputs(X, y, w):
    if w is None:
        w = np.ones(len(y))
    w = np.asarray(w, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise ValueError("non-finite input to HAL fit")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative with positive sum")
    return y, w


def lambda_max(G_or_c, c=None):
    """Smallest penalty at which every penalized coefficient is zero."""
    c = G_or_c if c is None else c
    return float(np.max(np.abs(c))) if len(c) else 0.0


def default_grid(lam_max, n_lambda=50, ratio=1e-4):
    if lam_max <= 0:
        return np.array([0.0])
    return np.geomspace(lam_max, lam_max * ratio, n_lambda)


def _solve_path(mom, lambdas, **kw):
    G, c, yy, xbar, ybar = mom.centered()
    betas, _, status = lasso_path(G, c, lambdas, **kw)
    b0 = ybar - betas @ xbar
    return np.column_stack([b0, betas]), status


def fit_path(basis: HalBasis, x, y, weights=None, lambda_grid=None, **solver_kw):
    """Lasso solutions along a decreasing penalty grid, intercept first in each row."""
    X = basis.evaluate(x)
    y, w = _check_inputs(X, y, weights)
    lambdas = np.asarray(lambda_grid, dtype=np.float64)
    if np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambda grid must be strictly decreasing")
    coefs, _ = _solve_path(_moments(X, y, w), lambdas, **solver_kw)
    return coefs


def kkt_gradient(basis, x, y, coef, weights=None):
    """Mean-scaled gradient X_c' W (y - fit) / sum(w) of the smooth loss part."""
    X = basis.evaluate(x)
    y, w = _check_inputs(X, y, weights)
    resid = y - coef[0] - X @ coef[1:]
    return (X * w[:, None]).T @ resid / w.sum()


@dataclass
class HalFit:
    basis: HalBasis
    beta: np.ndarray  # intercept first
    l1_bound: float
    lam: float
    active: np.ndarray
    covariance: np.ndarray
    loss: float
    cv_risk: np.ndarray = field(default=None, repr=False)
    lambda_grid: np.ndarray = field(default=None, repr=False)
    singular: bool = False

    @property
    def intercept(self):
        return float(self.beta[0])


def _sandwich(X, y, w, coef, active):
    Xa = np.column_stack([np.ones(X.shape[0]), X[:, active]])
    resid = y - coef[0] - X @ coef[1:]
    sw = w.sum()
    bread = (Xa * w[:, None]).T @ Xa / sw + RIDGE * np.eye(Xa.shape[1])
    try:
        cond = np.linalg.cond(bread)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > COND_LIMIT:
        return None
    s = Xa * (w * resid)[:, None]
    meat = s.T @ s / (sw * sw)
    inv = np.linalg.inv(bread)
    cov = inv @ meat @ inv
    return 0.5 * (cov + cov.T)


def _finalize(basis, X, y, w, coef, lam, cv_risk=None, grid=None):
    active = np.flatnonzero(coef[1:] != 0.0)
    cov = _sandwich(X, y, w, coef, active)
    resid = y - coef[0] - X @ coef[1:]
    return HalFit(basis=basis, beta=coef, l1_bound=float(np.abs(coef[1:]).sum()), lam=float(lam),
                  active=active, covariance=cov, loss=float(w @ resid**2 / w.sum()),
                  cv_risk=cv_risk, lambda_grid=grid, singular=cov is None)


def cv_select(basis: HalBasis, x, y, weights=None, folds=5, lambda_grid=None, n_lambda=50,
              ratio=1e-4):
    """V-fold CV over the penalty path, then refit on all rows.

    Folds are assigned by row index modulo V; with fewer rows than folds
    this becomes leave-one-out.
    """
    X = basis.evaluate(x)
    y, w = _check_inputs(X, y, weights)
    n = len(y)
    full = _moments(X, y, w)
    if lambda_grid is None:
        G, c, *_ = full.centered()
        lambda_grid = default_grid(lambda_max(c), n_lambda, ratio)
    grid = np.asarray(lambda_grid, dtype=np.float64)
    V = min(folds, n)
    if len(grid) == 1 or V < 2:
        coefs, _ = _solve_path(full, grid)
        return _finalize(basis, X, y, w, coefs[-1], grid[-1], None, grid)
    fold_id = np.arange(n) % V
    sse = np.zeros(len(grid))
    for v in range(V):
        hold = fold_id == v
        held = _moments(X[hold], y[hold], w[hold])
        train = full - held
        if train.sw <= 0:
            continue
        coefs, _ = _solve_path(train, grid)
        sse += np.array([held.sse(cf) for cf in coefs])
    risk = sse / w.sum()
    best = int(np.argmin(risk))  # first minimum = largest penalty among ties
    coefs, _ = _solve_path(full, grid[: best + 1])
    return _finalize(basis, X, y, w, coefs[-1], grid[best], risk, grid)


def predict(fit: HalFit, x_new):
    X = fit.basis.evaluate(x_new)
    return fit.beta[0] + X @ fit.beta[1:]


def pointwise_se(fit: HalFit, x_new):
    """Delta-method SE in the selected working model; +inf if the Gram was singular."""
    x_new = _as_2d(x_new)
    if fit.covariance is None:
        return np.full(x_new.shape[0], np.inf)
    X = fit.basis.evaluate(x_new)
    phi = np.column_stack([np.ones(X.shape[0]), X[:, fit.active]])
    var = np.einsum("ij,jk,ik->i", phi, fit.covariance, phi)
    return np.sqrt(np.maximum(var, 0.0))
