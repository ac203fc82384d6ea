"""Command line: ``run``, ``truth`` and ``audit``."""
import argparse
import sys

import numpy as np

from .config import RunConfig, load_config
from .dgp import true_ate, true_cate, true_rule_value
from .harness import audit_log, run_experiment
from .metrics import marginal_psi_oracle
from .randomize import expand_designs

SCENARIO_ALIASES = {"s1": "scenario1", "s2": "scenario2", "glm": "glm_table"}


def _config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    kw = {}
    if getattr(args, "scenario", None):
        kw["scenarios"] = tuple(SCENARIO_ALIASES.get(s, s) for s in args.scenario.split(","))
    if getattr(args, "designs", None):
        kw["designs"] = tuple(expand_designs(args.designs))
    for name in ("reps", "seed", "workers"):
        if getattr(args, name, None) is not None:
            kw[name] = getattr(args, name)
    if getattr(args, "out", None):
        kw["out_dir"] = args.out
    if getattr(args, "trial_logs", False):
        kw["trial_logs"] = True
    return cfg.with_overrides(**kw) if kw else cfg


def cmd_run(args):
    cfg = _config(args)
    status = run_experiment(cfg, allow_partial=args.allow_partial)
    print(f"wrote {cfg.out_dir}/per_rep.csv and {cfg.out_dir}/aggregate.csv")
    if status:
        print(f"aborted replicates listed in {cfg.out_dir}/errors.csv", file=sys.stderr)
    return status


def cmd_truth(args):
    cfg = _config(args)
    for spec in cfg.scenario_specs():
        print(f"# {spec.kind}")
        if spec.covariate_dim == 1:
            grid = np.linspace(spec.w_low, spec.w_high, args.grid)
            print("w," + ",".join(f"cate_k{k}" for k in range(1, spec.K + 1)))
            for w in grid:
                vals = [true_cate(spec, k, w) for k in range(1, spec.K + 1)]
                print(f"{w:.4f}," + ",".join(f"{v:.6f}" for v in vals))
        print("k,true_ate,optimal_rule_value")
        for k in range(1, spec.K + 1):
            print(f"{k},{true_ate(spec, k):.7f},{true_rule_value(spec, k=k):.7f}")
        if args.oracle_reps > 0:
            t = max(cfg.report_times)
            print(f"design,t,psi_tilde  # {args.oracle_reps} runs each")
            for d in cfg.designs:
                val = marginal_psi_oracle(cfg, spec.kind, d, t, args.oracle_reps)
                print(f"{d},{t},{val:.6f}")
    return 0


def cmd_audit(args):
    n, bad = audit_log(args.log)
    if bad:
        print(f"audit FAILED: {len(bad)} of {n} assignment probabilities differ (ids {bad[:10]})")
        return 1
    print(f"audit ok: {n} assignment probabilities reproduced exactly")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="surrogate-cara",
                                description="CARA trial simulation with online surrogate selection")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the Monte Carlo experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--scenario", help="s1, s2 or a comma list")
    run.add_argument("--designs", help="e.g. rct,fixed1..fixed5,sl")
    run.add_argument("--reps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--out")
    run.add_argument("--trial-logs", action="store_true", help="write per-replicate trial logs")
    run.add_argument("--allow-partial", action="store_true",
                     help="exit 0 even if some replicates aborted")
    run.set_defaults(func=cmd_run)

    truth = sub.add_parser("truth", help="oracle tables: CATE grid, ATE, rule value, marginal target")
    truth.add_argument("--config", required=True)
    truth.add_argument("--scenario")
    truth.add_argument("--designs")
    truth.add_argument("--grid", type=int, default=9, help="points on the CATE grid")
    truth.add_argument("--oracle-reps", type=int, default=20,
                       help="runs per design for the marginal oracle (0 skips it)")
    truth.set_defaults(func=cmd_truth)

    audit = sub.add_parser("audit", help="replay a trial log and check every assignment probability")
    audit.add_argument("--log", required=True)
    audit.set_defaults(func=cmd_audit)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
