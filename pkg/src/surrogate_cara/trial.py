"""Sequential trial state: enrollment, delayed outcome revelation, case datasets.

Storage is flat and columnar (one row per participant).  The view available
at clock ``t`` is recovered by filtering on reveal time, so an outcome slot
``k`` of participant ``i`` is filled exactly when ``t >= t_i + k``.
"""
import csv
from dataclasses import dataclass, field

import numpy as np


class TrialStateError(RuntimeError):
    """Raised when an operation would break the trial's reveal discipline."""


@dataclass(frozen=True)
class TrialConfig:
    T: int = 50
    K: int = 5
    cohort_size: object = 50  # int, or a list with one entry per time point
    covariate_dim: int = 1

    def __post_init__(self):
        if self.K < 1 or self.T < 1:
            raise ValueError("T and K must be >= 1")
        if self.T < self.K + 1:
            raise ValueError("T must be at least K + 1")
        if self.covariate_dim < 1:
            raise ValueError("covariate_dim must be >= 1")
        sizes = self.schedule()
        if np.any(sizes < 0):
            raise ValueError("cohort sizes must be nonnegative")

    def schedule(self):
        """E(1..T) as an integer array."""
        if np.ndim(self.cohort_size) == 0:
            return np.full(self.T, int(self.cohort_size), dtype=np.int64)
        sizes = np.asarray(self.cohort_size, dtype=np.int64)
        if sizes.shape != (self.T,):
            raise ValueError("cohort_size list must have T entries")
        return sizes

    def E(self, t):
        return int(self.schedule()[t - 1]) if 1 <= t <= self.T else 0

    def N(self, t):
        """Cumulative enrollment through time t (0 for t <= 0)."""
        if t <= 0:
            return 0
        return int(self.schedule()[: min(t, self.T)].sum())


@dataclass(frozen=True)
class ParticipantRecord:
    id: int
    entry_time: int
    w: np.ndarray
    arm: object  # int or None
    assign_prob: object  # probability of the assigned arm, or None
    outcomes: tuple  # length K, None where not yet revealed
    rule_provenance: str = ""


@dataclass
class CaseData:
    """Rows handed to estimators; ``g0`` is the probability of the assigned arm."""

    ids: np.ndarray
    w: np.ndarray
    a: np.ndarray
    g0: np.ndarray
    p1: np.ndarray
    y: np.ndarray
    rule_p1: np.ndarray = field(default=None, repr=False)

    @property
    def n(self):
        return len(self.ids)

    def subset(self, mask):
        return CaseData(self.ids[mask], self.w[mask], self.a[mask], self.g0[mask], self.p1[mask],
                        self.y[mask], None if self.rule_p1 is None else self.rule_p1[mask])


class TrialHistory:
    """Append-only participant table for one replicate."""

    def __init__(self, config: TrialConfig):
        self.config = config
        K, d = config.K, config.covariate_dim
        cap = max(config.N(config.T), 1)
        self.clock = 0
        self.n = 0
        self.entry_time = np.zeros(cap, dtype=np.int64)
        self.w = np.zeros((cap, d))
        self.arm = np.full(cap, -1, dtype=np.int64)
        self.p1 = np.full(cap, np.nan)
        self.outcomes = np.full((cap, K), np.nan)
        self.revealed = np.zeros((cap, K), dtype=bool)
        # candidate rule probabilities of arm 1, column k-1 for surrogate k
        self.rule_p1 = np.full((cap, K), np.nan)
        self.provenance = [""] * cap
        self._enrolled_at = np.zeros(config.T + 1, dtype=np.int64)

    def advance(self, t):
        if t != self.clock + 1:
            raise TrialStateError(f"clock must advance one step at a time ({self.clock} -> {t})")
        self.clock = t

    def N(self, t):
        """Enrolled through time t as recorded in the history."""
        if t <= 0:
            return 0
        return int(self._enrolled_at[1: min(t, self.config.T) + 1].sum())

    @property
    def assign_prob(self):
        a = self.arm[: self.n]
        p = self.p1[: self.n]
        return np.where(a == 1, p, np.where(a == 0, 1.0 - p, np.nan))

    def record(self, i):
        arm = int(self.arm[i]) if self.arm[i] >= 0 else None
        prob = float(self.assign_prob[i]) if arm is not None else None
        outs = tuple(float(v) if r else None for v, r in zip(self.outcomes[i], self.revealed[i]))
        return ParticipantRecord(i, int(self.entry_time[i]), self.w[i].copy(), arm, prob, outs,
                                 self.provenance[i])

    def cohort(self, t):
        """Indices of participants enrolled at t."""
        return np.flatnonzero(self.entry_time[: self.n] == t)

    def assign(self, ids, p1, arms, provenance=""):
        ids = np.asarray(ids, dtype=np.int64)
        if np.any(self.arm[ids] >= 0):
            raise TrialStateError("participant already assigned")
        p1 = np.broadcast_to(np.asarray(p1, dtype=float), ids.shape)
        if np.any((p1 <= 0) | (p1 >= 1)):
            raise TrialStateError("assignment probability outside (0, 1)")
        self.arm[ids] = np.asarray(arms, dtype=np.int64)
        self.p1[ids] = p1
        for i in ids:
            self.provenance[i] = provenance


def enroll_cohort(history: TrialHistory, t, baselines):
    """Append a cohort at the current clock; returns the new participant ids."""
    if t != history.clock:
        raise TrialStateError(f"enrollment at t={t} but clock is {history.clock}")
    baselines = np.asarray(baselines, dtype=float)
    m = len(baselines)
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    if t > history.config.T:
        raise TrialStateError("enrollment after the final time point")
    baselines = baselines.reshape(m, history.config.covariate_dim)
    if history.n + m > len(history.entry_time):
        _grow(history, history.n + m)
    ids = np.arange(history.n, history.n + m)
    history.entry_time[ids] = t
    history.w[ids] = baselines
    history.n += m
    history._enrolled_at[t] += m
    return ids


def _grow(history, size):
    extra = size - len(history.entry_time)
    K, d = history.config.K, history.config.covariate_dim
    history.entry_time = np.concatenate([history.entry_time, np.zeros(extra, dtype=np.int64)])
    history.w = np.vstack([history.w, np.zeros((extra, d))])
    history.arm = np.concatenate([history.arm, np.full(extra, -1, dtype=np.int64)])
    history.p1 = np.concatenate([history.p1, np.full(extra, np.nan)])
    history.outcomes = np.vstack([history.outcomes, np.full((extra, K), np.nan)])
    history.revealed = np.vstack([history.revealed, np.zeros((extra, K), dtype=bool)])
    history.rule_p1 = np.vstack([history.rule_p1, np.full((extra, K), np.nan)])
    history.provenance.extend([""] * extra)


def reveal_outcomes(history: TrialHistory, t, sampler):
    """Reveal Y_{i, t - t_i} for every participant with 1 <= t - t_i <= K.

    ``sampler(ids, k)`` returns the outcome values for those participants.
    """
    if t != history.clock:
        raise TrialStateError(f"reveal at t={t} but clock is {history.clock}")
    K = history.config.K
    count = 0
    for k in range(1, K + 1):
        ids = np.flatnonzero(history.entry_time[: history.n] == t - k)
        if ids.size == 0:
            continue
        if np.any(history.revealed[ids, k - 1]):
            raise TrialStateError(f"outcome slot {k} revealed twice")
        history.outcomes[ids, k - 1] = np.asarray(sampler(ids, k), dtype=float)
        history.revealed[ids, k - 1] = True
        count += ids.size
    return count


def _cases(history, t, k):
    n = history.N(t - k)
    if n == 0:
        d = history.config.covariate_dim
        empty = np.zeros(0)
        return CaseData(np.zeros(0, dtype=np.int64), np.zeros((0, d)), np.zeros(0, dtype=np.int64),
                        empty, empty, empty, np.zeros((0, history.config.K)))
    if t > history.clock or not np.all(history.revealed[:n, k - 1]):
        raise TrialStateError(f"outcome {k} not revealed for all of the first {n} participants")
    ids = np.arange(n)
    a = history.arm[:n].copy()
    p1 = history.p1[:n].copy()
    g0 = np.where(a == 1, p1, 1.0 - p1)
    return CaseData(ids, history.w[:n].copy(), a, g0, p1, history.outcomes[:n, k - 1].copy(),
                    history.rule_p1[:n].copy())


def complete_cases(history: TrialHistory, t):
    """The N(t - K) participants whose final outcome is observed by time t."""
    return _cases(history, t, history.config.K)


def surrogate_cases(history: TrialHistory, t, k):
    """The N(t - k) participants whose Y_k is observed by time t."""
    if not 1 <= k <= history.config.K:
        raise ValueError(f"outcome index {k} outside 1..{history.config.K}")
    return _cases(history, t, k)


def write_trial_log(history: TrialHistory, path):
    """One CSV row per participant; floats use repr so they round-trip exactly."""
    K, d = history.config.K, history.config.covariate_dim
    header = (["id", "entry_time"] + [f"w{j + 1}" for j in range(d)]
              + ["arm", "assign_prob", "rule_provenance"] + [f"Y{k}" for k in range(1, K + 1)])
    probs = history.assign_prob
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for i in range(history.n):
            ys = [repr(float(v)) if r else "" for v, r in zip(history.outcomes[i], history.revealed[i])]
            arm = int(history.arm[i])
            out.writerow([i, int(history.entry_time[i])] + [repr(float(v)) for v in history.w[i]]
                         + [arm if arm >= 0 else "", repr(float(probs[i])) if arm >= 0 else "",
                            history.provenance[i]] + ys)


def read_trial_log(path):
    """Parse a trial log into column arrays (NaN for missing outcomes)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"empty trial log {path}")
    wcols = sorted((c for c in rows[0] if c.startswith("w") and c[1:].isdigit()),
                   key=lambda c: int(c[1:]))
    ycols = sorted((c for c in rows[0] if c.startswith("Y") and c[1:].isdigit()),
                   key=lambda c: int(c[1:]))

    def num(v):
        return float(v) if v != "" else np.nan

    return {
        "id": np.array([int(r["id"]) for r in rows]),
        "entry_time": np.array([int(r["entry_time"]) for r in rows]),
        "w": np.array([[float(r[c]) for c in wcols] for r in rows]),
        "arm": np.array([int(r["arm"]) if r["arm"] != "" else -1 for r in rows]),
        "assign_prob": np.array([num(r["assign_prob"]) for r in rows]),
        "rule_provenance": [r["rule_provenance"] for r in rows],
        "y": np.array([[num(r[c]) for c in ycols] for r in rows]),
    }
