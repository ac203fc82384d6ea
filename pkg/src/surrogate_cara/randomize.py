"""The CARA randomization map: h_nu, surrogate-specific rules and design rules."""
import re
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class RuleConfig:
    nu: float = 0.1
    alpha: float = 0.05

    def __post_init__(self):
        if not 0 <= self.nu < 0.5:
            raise ValueError("nu must lie in [0, 0.5)")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def z(self):
        return float(norm.ppf(1 - self.alpha / 2))


@dataclass(frozen=True)
class StochasticRule:
    """Probability of arm 1 (scalar or one entry per participant)."""

    p1: object
    source_k: object = None  # surrogate index, or None for a fair coin
    informed: bool = False

    @property
    def p0(self):
        return 1.0 - np.asarray(self.p1, dtype=float)


_FIXED = re.compile(r"^fixed\(?(\d+)\)?$")


def parse_design(name, K):
    """``rct`` -> ("rct", None); ``fixed3`` or ``fixed(3)`` -> ("fixed", 3); ``sl`` -> ("sl", None)."""
    key = str(name).strip().lower()
    if key == "rct":
        return "rct", None
    if key in ("sl", "superlearner"):
        return "sl", None
    m = _FIXED.match(key)
    if m:
        k = int(m.group(1))
        if not 1 <= k <= K:
            raise ValueError(f"design {name!r}: surrogate index outside 1..{K}")
        return "fixed", k
    raise ValueError(f"unknown design {name!r}")


def expand_designs(text):
    """Expand a comma list such as ``rct,fixed1..fixed5,sl``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        m = re.match(r"^fixed(\d+)\.\.fixed(\d+)$", part)
        if m:
            out.extend(f"fixed{k}" for k in range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            out.append(part)
    return out


def h_nu(x, b, nu):
    """Smooth map from a CATE estimate x and CI half-width b > 0 to a probability in [nu, 1 - nu]."""
    b_arr = np.asarray(b, dtype=float)
    if np.any(~(b_arr > 0)):
        raise ValueError("h_nu needs b > 0")
    x = np.asarray(x, dtype=float)
    u = np.clip(x / b_arr, -1.0, 1.0)
    out = 0.5 + (0.5 - nu) * (1.5 * u - 0.5 * u ** 3)
    out = np.where(x <= -b_arr, nu, np.where(x >= b_arr, 1.0 - nu, out))
    return float(out) if out.ndim == 0 else out


def surrogate_rule(summary, k, config: RuleConfig):
    """Rule g*_k from a CATE summary ``(B, tau)``; ``None`` means no Y_k seen yet.

    tau = 0 follows the b -> 0 limit (sign rule) and tau = inf gives a fair coin.
    """
    if summary is None:
        return StochasticRule(0.5, k, False)
    B, tau = (np.asarray(v, dtype=float) for v in summary)
    B, tau = np.broadcast_arrays(B, tau)
    p1 = np.full(B.shape, 0.5)
    ok = np.isfinite(tau) & (tau > 0)
    p1[ok] = h_nu(B[ok], config.z * tau[ok], config.nu)
    zero = np.isfinite(tau) & (tau <= 0)
    p1[zero & (B > 0)] = 1.0 - config.nu
    p1[zero & (B < 0)] = config.nu
    return StochasticRule(float(p1) if p1.ndim == 0 else p1, k, True)


def design_rule(design, t, summaries, selected_k, config: RuleConfig, K):
    """Assignment rule actually used at time t.

    ``summaries`` maps k to the CATE summary of the current cohort (or None
    when Y_k has not been observed); ``selected_k`` is the selector output
    for the superlearner design, None while no selection exists.
    """
    kind, k = parse_design(design, K) if isinstance(design, str) else design
    if kind == "rct":
        return StochasticRule(0.5)
    if kind == "fixed":
        if t <= k:
            return StochasticRule(0.5, k, False)
        return surrogate_rule(summaries.get(k), k, config)
    if t <= K:
        return StochasticRule(0.5)
    if selected_k is None:
        raise ValueError(f"superlearner design has no selection at t={t}")
    return surrogate_rule(summaries.get(selected_k), selected_k, config)
