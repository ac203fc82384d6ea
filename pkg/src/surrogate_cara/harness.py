"""Monte Carlo conductor: replicate fan-out, ordered join, CSV output and replay audit."""
import csv
import json
import os
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import RunConfig
from .metrics import AGGREGATE_COLUMNS, PER_REP_COLUMNS, aggregate
from .simulate import ReplicateError, run_trial
from .trial import read_trial_log, write_trial_log

ERROR_COLUMNS = ("scenario", "design", "rep", "t", "error")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(columns)
        for r in rows:
            out.writerow([_fmt(r[c]) for c in columns])


def _log_stem(out_dir, scenario, design, rep):
    return os.path.join(out_dir, "logs", f"{scenario}_{design}_rep{rep:04d}")


def _task(args):
    config, scenario, design, rep = args
    try:
        history, trace = run_trial(config, scenario, design, rep)
    except ReplicateError as exc:
        return scenario, design, rep, [], {**exc.context, "error": str(exc)}
    except Exception as exc:  # any breach aborts only this replicate
        return scenario, design, rep, [], {"scenario": scenario, "design": design, "rep": rep,
                                           "t": "", "error": f"{type(exc).__name__}: {exc}",
                                           "trace": traceback.format_exc()}
    if config.trial_logs:
        stem = _log_stem(config.out_dir, scenario, design, rep)
        write_trial_log(history, stem + ".csv")
        with open(stem + ".json", "w") as fh:
            json.dump({"scenario": scenario, "design": design, "rep": rep,
                       "config": config.to_flat()}, fh, indent=1, sort_keys=True)
    return scenario, design, rep, trace["rows"], None


def tasks(config: RunConfig):
    return [(config, s, d, r) for s in config.scenarios for d in config.designs
            for r in range(config.reps)]


def run_tasks(config: RunConfig):
    """Run every replicate; results come back in task order whatever the worker count."""
    jobs = tasks(config)
    if config.workers <= 1:
        return [_task(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(_task, jobs, chunksize=1))


def run_experiment(config: RunConfig, allow_partial=False):
    """Write per_rep.csv and aggregate.csv (plus errors.csv on failures); returns an exit status."""
    os.makedirs(config.out_dir, exist_ok=True)
    if config.trial_logs:
        os.makedirs(os.path.join(config.out_dir, "logs"), exist_ok=True)
    results = run_tasks(config)
    rows = [r for res in results for r in res[3]]
    errors = [res[4] for res in results if res[4] is not None]
    write_csv(os.path.join(config.out_dir, "per_rep.csv"), PER_REP_COLUMNS, rows)
    write_csv(os.path.join(config.out_dir, "aggregate.csv"), AGGREGATE_COLUMNS, aggregate(rows))
    if errors:
        write_csv(os.path.join(config.out_dir, "errors.csv"), ERROR_COLUMNS, errors)
        return 0 if allow_partial else 1
    return 0


def audit_log(log_path):
    """Replay a trial log and compare every recomputed assignment probability bit for bit.

    Returns ``(n_checked, mismatches)`` where mismatches lists participant ids.
    """
    stem, _ = os.path.splitext(log_path)
    with open(stem + ".json") as fh:
        meta = json.load(fh)
    config = RunConfig.from_flat(meta["config"])
    log = read_trial_log(log_path)
    assigned = log["arm"] >= 0
    last_t = int(log["entry_time"].max())
    replay = {"w": log["w"], "entry_time": log["entry_time"], "arm": log["arm"], "y": log["y"]}
    history, trace = run_trial(config, meta["scenario"], meta["design"], int(meta["rep"]),
                               stop_at=last_t, replay=replay, record=False)
    p1 = trace["replayed_p1"]
    if len(p1) != len(log["arm"]):
        return len(p1), list(range(len(log["arm"])))
    recomputed = np.where(log["arm"] == 1, p1, 1.0 - p1)
    bad = np.flatnonzero(assigned & (recomputed != log["assign_prob"]))
    return int(assigned.sum()), bad.tolist()
