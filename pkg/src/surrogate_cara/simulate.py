"""One replicate of a CARA trial under a given design.

Per time point t = 1..T the order is: reveal outcomes due at t, refit CATE
models for surrogates with new data, (superlearner only, t >= K+1) target
every Psi_{t,k} and select, enroll the cohort, compute candidate and design
rules, sample arms, pre-draw the cohort's latent outcomes, and record
metrics at reporting times.

Randomness comes from independent streams keyed by (scenario, design, rep,
t, purpose), so adding a design or a time point never shifts another
stream.  A replay source substitutes logged baselines, arms and outcomes
for sampling; the rule computations are then identical.
"""
import numpy as np

from .cate import cate_at, fit_cate
from .dgp import KINDS, sample_baseline, sample_outcomes
from .estimators import fit_initial_q, tmle_psi_tk
from .metrics import per_run_truth_psi, prob_nonopt_at, regret_at
from .randomize import StochasticRule, design_rule, parse_design, surrogate_rule
from .selector import NoValidFitError, select_surrogate
from .trial import (TrialHistory, complete_cases, enroll_cohort, reveal_outcomes,
                    surrogate_cases)

BASELINE, ARMS, OUTCOMES = 0, 1, 2
ORACLE_OFFSET = 16


class ReplicateError(RuntimeError):
    """A replicate aborted; ``context`` says where."""

    def __init__(self, msg, context):
        super().__init__(msg)
        self.context = context


def design_id(kind, k):
    return {"rct": 0, "fixed": k, "sl": 1000}[kind]


def stream(seed, scenario, design, rep, t, purpose, K):
    kind, k = parse_design(design, K)
    ss = np.random.SeedSequence(entropy=seed,
                                spawn_key=(KINDS.index(scenario), design_id(kind, k), rep, t, purpose))
    return np.random.default_rng(ss)


def _needed_k(kind, k, K):
    if kind == "fixed":
        return (k,)
    if kind == "sl":
        return tuple(range(1, K + 1))
    return ()


def run_trial(config, scenario, design, rep, seed=None, stop_at=None, oracle=False, replay=None,
              record=True):
    """Simulate (or replay) one replicate; returns ``(history, trace)``.

    ``trace`` holds per-rep rows at reporting times (``rows``), the
    superlearner selection at every t (``selected``) and, in replay mode,
    the recomputed probability of arm 1 (``replayed_p1``).
    """
    seed = config.seed if seed is None else seed
    spec = config.scenario_spec(scenario)
    tcfg = config.trial_config()
    rcfg = config.rule_config()
    est = config.estimation
    K, T = tcfg.K, tcfg.T
    kind, fixed_k = parse_design(design, K)
    needed = _needed_k(kind, fixed_k, K)
    stop = T if stop_at is None else min(stop_at, T)
    report = set(config.report_times) if record else set()
    offset = ORACLE_OFFSET if oracle else 0

    def rng(t, purpose):
        return stream(seed, scenario, design, rep, t, purpose + offset, K)

    history = TrialHistory(tcfg)
    latent = np.full((history.entry_time.shape[0], K), np.nan)
    models, last_fit = {}, {}
    selected, selections, rows = None, {}, []
    replayed = np.full(len(latent), np.nan)

    def sampler(ids, k):
        return latent[ids, k - 1]

    for t in range(1, stop + 1):
        where = {"scenario": scenario, "design": design, "rep": rep, "t": t}
        history.advance(t)
        reveal_outcomes(history, t, sampler)

        for k in needed:
            if history.N(t - k) == 0:
                continue
            if k in last_fit and t - last_fit[k] < est.refit_interval:
                continue
            cases = surrogate_cases(history, t, k)
            qbar = fit_initial_q(cases.w, cases.a, cases.y, est)
            models[k] = fit_cate(cases, qbar, est, k=k, t=t)
            last_fit[k] = t

        fits, qK, complete = {}, None, None
        if t >= K + 1 and (kind == "sl" or t in report):
            complete = complete_cases(history, t)
            qK = fit_initial_q(complete.w, complete.a, complete.y, est)
        if kind == "sl" and t >= K + 1:
            for k in needed:
                fits[k] = tmle_psi_tk(complete, complete.rule_p1[:, k - 1], qbar=qK, nu=rcfg.nu,
                                      alpha=rcfg.alpha, label=f"k={k}")
            try:
                selected = select_surrogate(fits, rcfg.alpha)
            except NoValidFitError:
                pass  # keep the previous selection
            selections[t] = selected

        m = tcfg.E(t)
        if replay is not None:
            base = replay["w"][replay["entry_time"] == t]
        else:
            base = sample_baseline(spec, rng(t, BASELINE), m)
        ids = enroll_cohort(history, t, base)
        if len(latent) < history.n:
            latent = np.vstack([latent, np.full((history.n - len(latent), K), np.nan)])
            replayed = np.concatenate([replayed, np.full(history.n - len(replayed), np.nan)])
        if ids.size:
            w = history.w[ids]
            summaries = {}
            for k in needed:
                summaries[k] = cate_at(models[k], w) if k in models else None
                history.rule_p1[ids, k - 1] = surrogate_rule(summaries[k], k, rcfg).p1
            if kind == "sl" and t >= K + 1 and selected is None:
                rule = StochasticRule(0.5)
            else:
                rule = design_rule((kind, fixed_k), t, summaries, selected, rcfg, K)
            p1 = np.broadcast_to(np.asarray(rule.p1, dtype=float), ids.shape).copy()
            if np.any((p1 < rcfg.nu - 1e-12) | (p1 > 1 - rcfg.nu + 1e-12)):
                raise ReplicateError("assignment probability violates the exploration floor", where)
            replayed[ids] = p1
            if replay is not None:
                arms = replay["arm"][ids]
                latent[ids] = replay["y"][ids]
            else:
                arms = (rng(t, ARMS).random(ids.size) < p1).astype(np.int64)
                latent[ids] = sample_outcomes(spec, arms, w, rng(t, OUTCOMES))
            source = "coin" if not rule.informed else f"k={rule.source_k}"
            history.assign(ids, p1, arms, source)

        if t in report:
            rows.extend(_report_rows(history, spec, scenario, design, rep, t, kind, fixed_k,
                                     complete, qK, fits, selected, rcfg))

    return history, {"rows": rows, "selected": selections, "replayed_p1": replayed[: history.n]}


def _report_rows(history, spec, scenario, design, rep, t, kind, fixed_k, complete, qK, fits,
                 selected, rcfg):
    regret, p_non = regret_at(history, spec, t), prob_nonopt_at(history, spec, t)
    if kind == "sl":
        ks = sorted(fits)
    elif kind == "fixed":
        ks = [fixed_k]
    else:
        ks = [0]
    out = []
    for k in ks:
        if k in fits:
            fit = fits[k]
        else:
            p1 = np.full(complete.n, 0.5) if k == 0 else complete.rule_p1[:, k - 1]
            fit = tmle_psi_tk(complete, p1, qbar=qK, nu=rcfg.nu, alpha=rcfg.alpha)
        truth = per_run_truth_psi(history, spec, t, k)
        out.append({
            "scenario": scenario, "design": design, "rep": rep, "t": t, "k": k,
            "psi_true_run": truth, "psi_hat": fit.psi_hat, "se": fit.se,
            "ci_lo": fit.ci_lo, "ci_hi": fit.ci_hi,
            "covered": int(fit.ci_lo <= truth <= fit.ci_hi),
            "epsilon_hat": fit.epsilon_hat, "eif_residual": fit.eif_residual,
            "selected_k": "" if kind != "sl" or selected is None else int(selected),
            "regret": regret, "p_nonopt": p_non,
        })
    return out


def run_replicate(config, scenario, design, rep):
    """Per-rep record set for one (scenario, design, rep)."""
    _, trace = run_trial(config, scenario, design, rep)
    return trace["rows"]
