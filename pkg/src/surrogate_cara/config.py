"""Run configuration: dataclasses plus the flat dotted-key YAML schema.

Recognised keys (nested YAML mappings are flattened to dotted keys)::

    scenario.kind          scenario1 | scenario2 | glm_table, or a list of them
    scenario.gamma         list of K slopes (scenario2)
    scenario.noise_sd      float
    scenario.w_low / w_high
    scenario.glm.*         intercept, w, a, aw, link (glm_table)
    trial.T, trial.K       ints
    trial.cohort_size      int or list of T ints
    trial.covariate_dim    int
    rule.nu, rule.alpha    floats
    rule.designs           list such as [rct, fixed1, fixed5, sl]
    hal.knot_cap           knot cap of the CATE regression
    hal.q_knot_cap         knot cap of the HAL outcome learner
    hal.lambda_grid        number of penalties on the path
    hal.lambda_ratio       smallest / largest penalty
    hal.folds              CV folds
    estimation.refit_interval
    estimation.q_learners  subset of [arm_means, interaction_linear, hal]
    mc.reps, mc.seed, mc.workers
    report.times           list of time points
    output.dir, output.trial_logs
"""
from dataclasses import dataclass, field, replace

import yaml


@dataclass(frozen=True)
class EstimationConfig:
    knot_cap: int = 100
    q_knot_cap: int = 100
    n_lambda: int = 50
    lambda_ratio: float = 1e-4
    folds: int = 5
    refit_interval: int = 1
    q_learners: tuple = ("arm_means", "interaction_linear", "hal")

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least two CV folds")
        if self.refit_interval < 1:
            raise ValueError("refit_interval must be >= 1")
        unknown = set(self.q_learners) - {"arm_means", "interaction_linear", "hal"}
        if unknown or not self.q_learners:
            raise ValueError(f"bad learner list {self.q_learners}")


def flatten(tree, prefix=""):
    out = {}
    for key, val in (tree or {}).items():
        name = f"{prefix}{key}"
        if isinstance(val, dict) and not name.endswith("scenario.glm"):
            out.update(flatten(val, name + "."))
        else:
            out[name] = val
    return out


@dataclass
class RunConfig:
    scenarios: tuple = ("scenario1",)
    gamma: tuple = (3.0, 2.0, 1.0, 0.5, 0.25)
    noise_sd: float = 1.0
    w_low: float = -4.0
    w_high: float = 4.0
    glm: dict = None
    T: int = 50
    K: int = 5
    cohort_size: object = 50
    covariate_dim: int = 1
    nu: float = 0.1
    alpha: float = 0.05
    designs: tuple = ("rct", "fixed1", "fixed2", "fixed3", "fixed4", "fixed5", "sl")
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    reps: int = 100
    seed: int = 20240101
    workers: int = 1
    report_times: tuple = (11, 21, 31, 41, 50)
    out_dir: str = "out"
    trial_logs: bool = False

    def __post_init__(self):
        from .randomize import parse_design

        if self.reps < 1:
            raise ValueError("mc.reps must be >= 1")
        for d in self.designs:
            parse_design(d, self.K)
        self.scenario_specs()
        self.trial_config()
        self.rule_config()

    def scenario_spec(self, kind):
        from .dgp import ScenarioSpec

        return ScenarioSpec(kind=kind, K=self.K, gamma=tuple(self.gamma), noise_sd=self.noise_sd,
                            w_low=self.w_low, w_high=self.w_high,
                            covariate_dim=self.covariate_dim, glm=self.glm)

    def scenario_specs(self):
        return [self.scenario_spec(k) for k in self.scenarios]

    def trial_config(self):
        from .trial import TrialConfig

        return TrialConfig(T=self.T, K=self.K, cohort_size=self.cohort_size,
                           covariate_dim=self.covariate_dim)

    def rule_config(self):
        from .randomize import RuleConfig

        return RuleConfig(nu=self.nu, alpha=self.alpha)

    def with_overrides(self, **kw):
        return replace(self, **kw)

    def to_flat(self):
        est = self.estimation
        return {
            "scenario.kind": list(self.scenarios), "scenario.gamma": list(self.gamma),
            "scenario.noise_sd": self.noise_sd, "scenario.w_low": self.w_low,
            "scenario.w_high": self.w_high, "scenario.glm": self.glm,
            "trial.T": self.T, "trial.K": self.K,
            "trial.cohort_size": (self.cohort_size if isinstance(self.cohort_size, int)
                                  else list(self.cohort_size)),
            "trial.covariate_dim": self.covariate_dim,
            "rule.nu": self.nu, "rule.alpha": self.alpha, "rule.designs": list(self.designs),
            "hal.knot_cap": est.knot_cap, "hal.q_knot_cap": est.q_knot_cap,
            "hal.lambda_grid": est.n_lambda, "hal.lambda_ratio": est.lambda_ratio,
            "hal.folds": est.folds, "estimation.refit_interval": est.refit_interval,
            "estimation.q_learners": list(est.q_learners),
            "mc.reps": self.reps, "mc.seed": self.seed, "mc.workers": self.workers,
            "report.times": list(self.report_times), "output.dir": self.out_dir,
            "output.trial_logs": self.trial_logs,
        }

    @classmethod
    def from_flat(cls, flat):
        kw, est = {}, {}
        mapping = {
            "scenario.gamma": ("gamma", tuple), "scenario.noise_sd": ("noise_sd", float),
            "scenario.w_low": ("w_low", float), "scenario.w_high": ("w_high", float),
            "scenario.glm": ("glm", dict), "trial.T": ("T", int), "trial.K": ("K", int),
            "trial.covariate_dim": ("covariate_dim", int), "rule.nu": ("nu", float),
            "rule.alpha": ("alpha", float), "rule.designs": ("designs", tuple),
            "mc.reps": ("reps", int), "mc.seed": ("seed", int), "mc.workers": ("workers", int),
            "report.times": ("report_times", tuple), "output.dir": ("out_dir", str),
            "output.trial_logs": ("trial_logs", bool),
        }
        est_mapping = {
            "hal.knot_cap": ("knot_cap", int), "hal.q_knot_cap": ("q_knot_cap", int),
            "hal.lambda_grid": ("n_lambda", int), "hal.lambda_ratio": ("lambda_ratio", float),
            "hal.folds": ("folds", int), "estimation.refit_interval": ("refit_interval", int),
            "estimation.q_learners": ("q_learners", tuple),
        }
        for key, val in flat.items():
            if val is None:
                continue
            if key == "scenario.kind":
                kw["scenarios"] = (val,) if isinstance(val, str) else tuple(val)
            elif key == "trial.cohort_size":
                kw["cohort_size"] = int(val) if isinstance(val, int) else tuple(int(v) for v in val)
            elif key == "rule.designs" and isinstance(val, str):
                from .randomize import expand_designs

                kw["designs"] = tuple(expand_designs(val))
            elif key in mapping:
                name, conv = mapping[key]
                kw[name] = conv(val)
            elif key in est_mapping:
                name, conv = est_mapping[key]
                est[name] = conv(val)
            else:
                raise ValueError(f"unknown config key {key!r}")
        kw["estimation"] = EstimationConfig(**est)
        return cls(**kw)


def load_config(path):
    with open(path) as fh:
        tree = yaml.safe_load(fh) or {}
    return RunConfig.from_flat(flatten(tree))
