"""Online superlearner: pick the surrogate with the highest lower confidence bound."""
import numpy as np

from .randomize import RuleConfig


class NoValidFitError(ValueError):
    """Every candidate fit was missing or degenerate."""


def lower_bounds(fits, alpha=0.05):
    z = RuleConfig(alpha=alpha).z
    return {k: f.psi_hat - z * f.se for k, f in fits.items()
            if f is not None and not f.degenerate and np.isfinite(f.psi_hat) and np.isfinite(f.se)}


def select_surrogate(fits, alpha=0.05):
    """argmax_k psi_hat_k - z se_k over non-degenerate fits; ties go to the smallest k."""
    lbs = lower_bounds(fits, alpha)
    if not lbs:
        raise NoValidFitError("no valid fit to select from")
    best = max(lbs.values())
    return min(k for k, v in lbs.items() if v == best)
