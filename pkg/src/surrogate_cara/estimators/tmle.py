"""Targeted estimators: surrogate utility, ATE, rule value and CV-TMLE.

All fluctuations are logistic with a single offset coefficient per
submodel, fit on outcomes mapped into (0, 1) by an ``OutcomeScaler``.
Standard errors are computed on the raw outcome scale.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit
from scipy.stats import norm

from ..config import EstimationConfig
from ..trial import CaseData
from .learners import fit_initial_q

TRUNC_LO, TRUNC_HI = 0.005, 0.995
EPS_BOUND = 20.0
SCORE_TOL = 1e-10


class PositivityError(ValueError):
    """Recorded assignment probabilities violate the design's exploration floor."""


@dataclass(frozen=True)
class OutcomeScaler:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("scaler needs hi > lo")

    @classmethod
    def from_outcomes(cls, y, pad=0.1):
        lo, hi = float(np.min(y)), float(np.max(y))
        span = hi - lo
        if span <= 0:
            span = max(abs(lo), 1.0)
        return cls(lo - pad * span, hi + pad * span)

    def scale(self, y):
        return np.clip((np.asarray(y, dtype=float) - self.lo) / (self.hi - self.lo), TRUNC_LO, TRUNC_HI)

    def unscale(self, s):
        return self.lo + (self.hi - self.lo) * np.asarray(s, dtype=float)


@dataclass
class TmleFit:
    psi_hat: float
    epsilon_hat: float
    eif_residual: float
    sigma2_hat: float
    se: float
    ci_lo: float
    ci_hi: float
    n: int
    degenerate: bool = False
    label: str = ""
    epsilons: tuple = field(default=(), repr=False)


def z_value(alpha):
    return float(norm.ppf(1 - alpha / 2))


def fluctuate(q_init, y, weights, bound=EPS_BOUND, tol=SCORE_TOL, max_iter=200):
    """Weighted logistic intercept fit with offset logit(q_init).

    Returns ``(epsilon, degenerate)``; the mean weighted score
    (1/n) sum h (y - expit(logit q + eps)) is within ``tol`` of zero unless
    the root lies outside [-bound, bound], in which case the bound is
    returned and the degenerate flag is set.
    """
    q_init = np.asarray(q_init, dtype=float)
    y = np.asarray(y, dtype=float)
    h = np.asarray(weights, dtype=float)
    if np.any(h < 0) or not np.all(np.isfinite(h)):
        raise ValueError("fluctuation weights must be finite and nonnegative")
    if h.sum() <= 0:
        raise ValueError("all fluctuation weights are zero")
    off = logit(q_init)
    n = len(y)

    def score(e):
        return float(h @ (y - expit(off + e))) / n

    lo, hi = -bound, bound
    if score(lo) <= 0:
        return lo, True
    if score(hi) >= 0:
        return hi, True
    e = 0.0
    for _ in range(max_iter):
        q = expit(off + e)
        s = float(h @ (y - q)) / n
        if abs(s) <= tol:
            return e, False
        if s > 0:
            lo = e
        else:
            hi = e
        info = float(h @ (q * (1 - q))) / n
        step = e + s / info if info > 0 else np.nan
        e = step if lo < step < hi else 0.5 * (lo + hi)
    return e, abs(score(e)) > tol


def _update(q, eps):
    return expit(logit(q) + eps)


def plugin_psi(q1, q0, p1):
    """(1/n) sum_i [q1_i p1_i + q0_i (1 - p1_i)]."""
    p1 = np.asarray(p1, dtype=float)
    return float(np.mean(np.asarray(q1) * p1 + np.asarray(q0) * (1.0 - p1)))


def _check_positivity(g0, nu):
    if np.any(g0 <= 0) or np.any(g0 > 1):
        raise PositivityError("assignment probability outside (0, 1]")
    if nu is not None and (np.any(g0 < nu - 1e-12) or np.any(g0 > 1 - nu + 1e-12)):
        raise PositivityError(f"assignment probability outside [{nu}, {1 - nu}]")


def _initial(data, qbar, config):
    if qbar is None:
        qbar = fit_initial_q(data.w, data.a, data.y, config)
    return qbar.predict(np.ones(data.n, dtype=np.int64), data.w), \
        qbar.predict(np.zeros(data.n, dtype=np.int64), data.w)


def _finish(psi, eps, resid_terms_raw, eif, n, alpha, degenerate, label, epsilons=()):
    sigma2 = float(np.mean(resid_terms_raw ** 2))
    se = float(np.sqrt(sigma2 / n))
    z = z_value(alpha)
    return TmleFit(psi_hat=float(psi), epsilon_hat=float(eps), eif_residual=float(eif),
                   sigma2_hat=sigma2, se=se, ci_lo=float(psi - z * se), ci_hi=float(psi + z * se),
                   n=int(n), degenerate=bool(degenerate), label=label,
                   epsilons=tuple(epsilons) or (float(eps),))


def tmle_psi_tk(data: CaseData, rule_p1, qbar=None, config: EstimationConfig = None, nu=None,
                alpha=0.05, label=""):
    """Targeted estimate of the mean final outcome under candidate rules ``rule_p1``.

    ``rule_p1[i]`` is the candidate rule's probability of arm 1 for row i;
    ``data.g0`` is the recorded probability of the arm actually assigned.
    """
    if data.n < 2:
        raise ValueError("need at least two complete cases")
    _check_positivity(data.g0, nu)
    rule_p1 = np.asarray(rule_p1, dtype=float)
    q1, q0 = _initial(data, qbar, config)
    scaler = OutcomeScaler.from_outcomes(data.y)
    ys = scaler.scale(data.y)
    q1s, q0s = scaler.scale(q1), scaler.scale(q0)
    a1 = data.a == 1
    h = np.where(a1, rule_p1, 1.0 - rule_p1) / data.g0
    eps, degenerate = fluctuate(np.where(a1, q1s, q0s), ys, h)
    q1s, q0s = _update(q1s, eps), _update(q0s, eps)
    qas = np.where(a1, q1s, q0s)
    eif = float(np.mean(h * (ys - qas)))
    psi = float(scaler.unscale(plugin_psi(q1s, q0s, rule_p1)))
    resid_raw = h * (data.y - scaler.unscale(qas))
    return _finish(psi, eps, resid_raw, eif, data.n, alpha, degenerate, label)


def tmle_ate(data: CaseData, qbar=None, config: EstimationConfig = None, nu=None, alpha=0.05):
    """ATE on the final outcome via one weighted fluctuation per arm."""
    if data.n < 2:
        raise ValueError("need at least two complete cases")
    _check_positivity(data.g0, nu)
    q1, q0 = _initial(data, qbar, config)
    scaler = OutcomeScaler.from_outcomes(data.y)
    ys = scaler.scale(data.y)
    q1s, q0s = scaler.scale(q1), scaler.scale(q0)
    a1 = data.a == 1
    if a1.all() or (~a1).all():
        raise ValueError("both arms must be observed to target the ATE")
    inv = 1.0 / data.g0
    eps1, deg1 = fluctuate(q1s[a1], ys[a1], inv[a1])
    eps0, deg0 = fluctuate(q0s[~a1], ys[~a1], inv[~a1])
    q1s, q0s = _update(q1s, eps1), _update(q0s, eps0)
    qas = np.where(a1, q1s, q0s)
    h = np.where(a1, 1.0, -1.0) * inv
    eif = float(np.mean(h * (ys - qas)))
    psi = (scaler.hi - scaler.lo) * float(np.mean(q1s - q0s))
    resid_raw = h * (data.y - scaler.unscale(qas))
    eps = eps1 if abs(eps1) >= abs(eps0) else eps0
    return _finish(psi, eps, resid_raw, eif, data.n, alpha, deg1 or deg0, "ate", (eps1, eps0))


def _rule_arms(rule, w):
    d = rule(w) if callable(rule) else rule
    return np.asarray(d, dtype=np.int64).reshape(-1)


def tmle_rule_value(data: CaseData, rule, qbar=None, config: EstimationConfig = None, nu=None,
                    alpha=0.05):
    """Mean final outcome had every row followed the deterministic rule ``rule``."""
    if data.n < 1:
        raise ValueError("no rows")
    _check_positivity(data.g0, nu)
    d = _rule_arms(rule, data.w)
    q1, q0 = _initial(data, qbar, config)
    scaler = OutcomeScaler.from_outcomes(data.y)
    ys = scaler.scale(data.y)
    q1s, q0s = scaler.scale(q1), scaler.scale(q0)
    a1 = data.a == 1
    h = (data.a == d) / data.g0
    eps, degenerate = fluctuate(np.where(a1, q1s, q0s), ys, h)
    q1s, q0s = _update(q1s, eps), _update(q0s, eps)
    qas = np.where(a1, q1s, q0s)
    eif = float(np.mean(h * (ys - qas)))
    psi = float(scaler.unscale(np.mean(np.where(d == 1, q1s, q0s))))
    resid_raw = h * (data.y - scaler.unscale(qas))
    return _finish(psi, eps, resid_raw, eif, data.n, alpha, degenerate, "rule_value")


def cate_rule_learner(config: EstimationConfig = None):
    """Rule learner: treat where the doubly-robust CATE of the final outcome is positive."""
    from ..cate import cate_at, fit_cate

    def learn(train: CaseData):
        model = fit_cate(train, config=config)
        return lambda w: (cate_at(model, w)[0] > 0).astype(np.int64)

    return learn


def cvtmle_rule_value(data: CaseData, rule_learner=None, folds=2, config: EstimationConfig = None,
                      nu=None, alpha=0.05):
    """Cross-validated TMLE of a learned rule's value.

    Rows are split by index parity (index modulo ``folds``).  For each
    validation fold the rule and the initial outcome regression are learned
    on the remaining rows; the validation-fold estimates and variances are
    averaged.  Folds whose training rows contain a single arm are skipped
    and the result is flagged degenerate.
    """
    if data.n < 4:
        raise ValueError("CV-TMLE needs at least four rows")
    rule_learner = rule_learner or cate_rule_learner(config)
    fold = np.arange(data.n) % folds
    psis, sig2s, eifs, epss = [], [], [], []
    degenerate = False
    for v in range(folds):
        train, valid = data.subset(fold != v), data.subset(fold == v)
        if len(np.unique(train.a)) < 2:
            degenerate = True
            continue
        rule = rule_learner(train)
        qbar = fit_initial_q(train.w, train.a, train.y, config)
        f = tmle_rule_value(valid, rule, qbar=qbar, nu=nu, alpha=alpha)
        psis.append(f.psi_hat)
        sig2s.append(f.sigma2_hat)
        eifs.append(f.eif_residual)
        epss.append(f.epsilon_hat)
        degenerate = degenerate or f.degenerate
    if not psis:
        raise ValueError("every CV-TMLE fold was degenerate")
    psi = float(np.mean(psis))
    sigma2 = float(np.mean(sig2s))
    se = float(np.sqrt(sigma2 / data.n))
    z = z_value(alpha)
    return TmleFit(psi_hat=psi, epsilon_hat=float(np.mean(epss)), eif_residual=float(np.mean(eifs)),
                   sigma2_hat=sigma2, se=se, ci_lo=psi - z * se, ci_hi=psi + z * se, n=data.n,
                   degenerate=degenerate, label="cv_rule_value", epsilons=tuple(epss))


def eif_residual(fit: TmleFit):
    """Mean weighted residual (scaled outcomes) left after targeting."""
    return fit.eif_residual
