"""Ground-truth targets and Monte Carlo performance summaries."""
from collections import OrderedDict

import numpy as np

from .dgp import ScenarioSpec, cond_mean, optimal_rule, true_cate

PER_REP_COLUMNS = ("scenario", "design", "rep", "t", "k", "psi_true_run", "psi_hat", "se", "ci_lo",
                   "ci_hi", "covered", "epsilon_hat", "eif_residual", "selected_k", "regret",
                   "p_nonopt")
AGGREGATE_COLUMNS = ("scenario", "design", "t", "k", "n_reps", "truth_mean", "bias", "variance",
                     "coverage", "regret_mean", "p_nonopt_mean", "sel_freq")


def truth_psi(spec: ScenarioSpec, w, rule_p1):
    """(1/n) sum_i sum_a Qbar_{0,K}(a, w_i) g*_i(a) with oracle conditional means."""
    rule_p1 = np.asarray(rule_p1, dtype=float)
    q1 = cond_mean(spec, spec.K, np.ones(len(rule_p1)), w)
    q0 = cond_mean(spec, spec.K, np.zeros(len(rule_p1)), w)
    return float(np.mean(q1 * rule_p1 + q0 * (1.0 - rule_p1)))


def per_run_truth_psi(history, spec: ScenarioSpec, t, k, rule_p1=None):
    """Per-run target over the N(t - K) completed participants.

    ``rule_p1`` defaults to the candidate rule for surrogate k recorded at
    enrollment; k = 0 stands for the fair coin.
    """
    n = history.N(t - spec.K)
    if n == 0:
        return np.nan
    w = history.w[:n]
    if rule_p1 is None:
        rule_p1 = np.full(n, 0.5) if k == 0 else history.rule_p1[:n, k - 1]
    return truth_psi(spec, w, rule_p1)


def realized_psi(history, spec: ScenarioSpec, t):
    """Mean oracle Qbar_{0,K}(A_i, w_i) over completed participants (one marginal-oracle run)."""
    n = history.N(t - spec.K)
    if n == 0:
        return np.nan
    return float(np.mean(cond_mean(spec, spec.K, history.arm[:n], history.w[:n])))


def marginal_psi_oracle(config, scenario, design, t, reps, seed=None):
    """Grand mean over ``reps`` independent runs of ``realized_psi`` at time t.

    Runs use a stream family disjoint from the main experiment's.
    """
    from .simulate import run_trial

    if reps < 1:
        raise ValueError("reps must be >= 1")
    spec = config.scenario_spec(scenario)
    vals = []
    for rep in range(reps):
        history, _ = run_trial(config, scenario, design, rep, seed=seed, stop_at=t, oracle=True,
                               record=False)
        vals.append(realized_psi(history, spec, t))
    return float(np.mean(vals))


def _cohort(history, t):
    ids = history.cohort(t)
    if ids.size == 0:
        return None, None
    return ids, history.w[ids]


def regret_at(history, spec: ScenarioSpec, t):
    """Cohort-average |B_{0,K}(w)| forgone by non-optimal assignments; NaN for an empty cohort."""
    ids, w = _cohort(history, t)
    if ids is None:
        return np.nan
    wrong = history.arm[ids] != optimal_rule(spec, spec.K, w)
    return float(np.mean(wrong * np.abs(true_cate(spec, spec.K, w))))


def prob_nonopt_at(history, spec: ScenarioSpec, t):
    ids, w = _cohort(history, t)
    if ids is None:
        return np.nan
    return float(np.mean(history.arm[ids] != optimal_rule(spec, spec.K, w)))


def aggregate(records):
    """Collapse per-rep rows into one row per (scenario, design, t, k).

    Bias and coverage use each run's own truth; variance is the population
    variance of psi_hat across runs; sel_freq is the share of runs whose
    selection at t equals k (empty for designs without a selector).
    """
    groups = OrderedDict()
    for r in records:
        groups.setdefault((r["scenario"], r["design"], int(r["t"]), int(r["k"])), []).append(r)
    out = []
    for key in sorted(groups, key=lambda g: (g[0], g[1], g[2], g[3])):
        rows = groups[key]
        truth = np.array([r["psi_true_run"] for r in rows], dtype=float)
        psi = np.array([r["psi_hat"] for r in rows], dtype=float)
        covered = np.array([r["covered"] for r in rows], dtype=float)
        est = np.isfinite(psi)
        sel = [r["selected_k"] for r in rows]
        has_sel = any(s not in (None, "") for s in sel)
        out.append({
            "scenario": key[0], "design": key[1], "t": key[2], "k": key[3],
            "n_reps": len(rows),
            "truth_mean": float(np.nanmean(truth)) if np.any(np.isfinite(truth)) else np.nan,
            "bias": float(np.mean(psi[est] - truth[est])) if est.any() else np.nan,
            "variance": float(np.var(psi[est])) if est.any() else np.nan,
            "coverage": float(np.mean(covered[est])) if est.any() else np.nan,
            "regret_mean": float(np.nanmean([r["regret"] for r in rows])),
            "p_nonopt_mean": float(np.nanmean([r["p_nonopt"] for r in rows])),
            "sel_freq": (float(np.mean([s not in (None, "") and int(s) == key[3] for s in sel]))
                         if has_sel else np.nan),
        })
    return out
