"""Simulation data-generating processes and their ground-truth oracles."""
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import expit

KINDS = ("scenario1", "scenario2", "glm_table")


@dataclass(frozen=True)
class ScenarioSpec:
    """Outcome model for K outcomes given a binary arm and baseline covariates.

    ``glm`` (glm_table kind only) maps ``intercept`` -> [K], ``w`` -> [K][d],
    ``a`` -> [K], ``aw`` -> [K][d] and optionally ``link`` -> identity|logit.
    """

    kind: str = "scenario1"
    K: int = 5
    gamma: tuple = (3.0, 2.0, 1.0, 0.5, 0.25)
    noise_sd: float = 1.0
    w_low: float = -4.0
    w_high: float = 4.0
    covariate_dim: int = 1
    glm: dict = field(default=None, hash=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not np.isfinite(self.noise_sd) or self.noise_sd < 0:
            raise ValueError("noise_sd must be finite and nonnegative")
        if self.w_high < self.w_low:
            raise ValueError("w_high < w_low")
        if self.kind == "scenario2" and len(self.gamma) != self.K:
            raise ValueError("scenario2 needs one gamma per outcome")
        if self.kind == "glm_table":
            if self.glm is None:
                raise ValueError("glm_table needs a coefficient table")
            for key in ("intercept", "a"):
                if len(self.glm[key]) != self.K:
                    raise ValueError(f"glm.{key} needs K entries")
            for key in ("w", "aw"):
                tab = np.asarray(self.glm[key], dtype=float).reshape(self.K, -1)
                if tab.shape[1] != self.covariate_dim:
                    raise ValueError(f"glm.{key} needs K x covariate_dim entries")


def sample_baseline(spec: ScenarioSpec, rng, n=None):
    """Uniform baseline covariates; shape (d,) or (n, d)."""
    size = (spec.covariate_dim,) if n is None else (n, spec.covariate_dim)
    if spec.w_low == spec.w_high:
        return np.full(size, float(spec.w_low))
    return rng.uniform(spec.w_low, spec.w_high, size=size)


def _w_matrix(spec, w):
    w = np.asarray(w, dtype=float)
    if w.ndim == 0:
        return w.reshape(1, 1), True
    if w.ndim == 1:
        if spec.covariate_dim == 1:
            return w[:, None], False
        return w[None, :], True
    return w, False


def cond_mean(spec: ScenarioSpec, k, a, w):
    """True E[Y_k | A=a, W=w]; ``w`` is a scalar, (n,) for d=1, or (n, d)."""
    if not 1 <= k <= spec.K:
        raise ValueError(f"outcome index {k} outside 1..{spec.K}")
    W, scalar = _w_matrix(spec, w)
    a = np.asarray(a, dtype=float)
    if spec.kind == "scenario1":
        out = (2 * a - 1) * (0.5 - expit((3 - k) + W[:, 0]))
    elif spec.kind == "scenario2":
        out = (2 * a - 1) * (0.5 - expit(spec.gamma[k - 1] * W[:, 0]))
    else:
        g = spec.glm
        bw = np.asarray(g["w"], dtype=float).reshape(spec.K, -1)[k - 1]
        baw = np.asarray(g["aw"], dtype=float).reshape(spec.K, -1)[k - 1]
        lp = g["intercept"][k - 1] + W @ bw + a * (g["a"][k - 1] + W @ baw)
        out = expit(lp) if g.get("link", "identity") == "logit" else lp
    out = np.asarray(out, dtype=float)
    return float(out.reshape(-1)[0]) if scalar and out.size == 1 else out


def sample_outcomes(spec: ScenarioSpec, a, w, rng):
    """All K outcomes for each row: conditional mean plus independent N(0, sd^2)."""
    W, _ = _w_matrix(spec, w)
    a = np.broadcast_to(np.asarray(a, dtype=float), (W.shape[0],))
    means = np.column_stack([cond_mean(spec, k, a, W) for k in range(1, spec.K + 1)])
    noise = rng.standard_normal(means.shape) * spec.noise_sd
    return means + noise


def true_cate(spec: ScenarioSpec, k, w):
    return cond_mean(spec, k, 1, w) - cond_mean(spec, k, 0, w)


def optimal_rule(spec: ScenarioSpec, k, w):
    """Arm maximizing E[Y_k | A, w]; a CATE of exactly zero maps to arm 0."""
    b = true_cate(spec, k, w)
    if np.ndim(b) == 0:
        return int(b > 0)
    return (b > 0).astype(np.int64)


def _expect_w(spec: ScenarioSpec, fn):
    """E_W[fn(W)] for W uniform on the covariate box."""
    lo, hi = spec.w_low, spec.w_high
    if lo == hi:
        return float(np.asarray(fn(np.full((1, spec.covariate_dim), lo))).reshape(-1)[0])
    if spec.covariate_dim == 1:
        val, _ = integrate.quad(lambda x: float(np.asarray(fn(np.array([[x]]))).reshape(-1)[0]),
                                lo, hi, epsabs=1e-13, epsrel=1e-12, limit=500)
        return val / (hi - lo)
    # tensor Gauss-Legendre for d > 1
    nodes, weights = np.polynomial.legendre.leggauss(64)
    x = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    grids = np.meshgrid(*([x] * spec.covariate_dim), indexing="ij")
    pts = np.column_stack([g.reshape(-1) for g in grids])
    wts = np.ones(len(pts))
    for gw in np.meshgrid(*([weights] * spec.covariate_dim), indexing="ij"):
        wts *= gw.reshape(-1)
    return float(wts @ np.asarray(fn(pts))) / 2.0**spec.covariate_dim


def true_ate(spec: ScenarioSpec, k=None):
    """E_W[B_{0,k}(W)] by adaptive quadrature; k defaults to the final outcome."""
    k = spec.K if k is None else k
    return _expect_w(spec, lambda W: true_cate(spec, k, W))


def true_rule_value(spec: ScenarioSpec, rule=None, k=None):
    """E_W[E(Y_k | A=rule(W), W)]; the default rule is the optimal one for Y_k."""
    k = spec.K if k is None else k
    if rule is None:
        return _expect_w(spec, lambda W: np.maximum(cond_mean(spec, k, 1, W),
                                                    cond_mean(spec, k, 0, W)))
    return _expect_w(spec, lambda W: cond_mean(spec, k, np.asarray(rule(W), dtype=float), W))
