import csv
import os

import numpy as np
import pytest

from surrogate_cara import harness
from surrogate_cara.cli import main
from surrogate_cara.config import RunConfig, load_config
from surrogate_cara.metrics import AGGREGATE_COLUMNS, PER_REP_COLUMNS
from surrogate_cara.simulate import run_replicate, run_trial
from surrogate_cara.trial import complete_cases

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SMOKE = os.path.join(ROOT, "configs", "smoke.yaml")


def smoke(tmp_path, **kw):
    return load_config(SMOKE).with_overrides(out_dir=str(tmp_path), **kw)


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_smoke_preset(self):
        cfg = load_config(SMOKE)
        assert cfg.T == 12 and cfg.designs == ("rct", "fixed1", "sl")
        assert cfg.estimation.knot_cap == 30

    def test_default_preset(self):
        cfg = load_config(os.path.join(ROOT, "configs", "default.yaml"))
        assert cfg.reps == 100 and len(cfg.designs) == 7
        assert set(cfg.scenarios) == {"scenario1", "scenario2"}

    def test_flat_round_trip(self):
        cfg = load_config(SMOKE)
        assert RunConfig.from_flat(cfg.to_flat()) == cfg

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("trial:\n  Tee: 4\n")
        with pytest.raises(ValueError):
            load_config(p)

    def test_bad_design(self):
        with pytest.raises(ValueError):
            RunConfig(designs=("fixed9",))


class TestReplicate:
    def test_rct_never_adapts(self, tmp_path):
        history, _ = run_trial(smoke(tmp_path), "scenario2", "rct", 0)
        assert np.all(history.p1[: history.n] == 0.5)

    def test_repeatable(self, tmp_path):
        cfg = smoke(tmp_path)
        assert run_replicate(cfg, "scenario2", "sl", 1) == run_replicate(cfg, "scenario2", "sl", 1)

    def test_superlearner_first_selection(self, tmp_path):
        cfg = smoke(tmp_path, report_times=(6,))
        history, trace = run_trial(cfg, "scenario2", "sl", 0)
        rows = [r for r in trace["rows"] if r["t"] == 6]
        assert sorted(r["k"] for r in rows) == [1, 2, 3, 4, 5]
        assert set(trace["selected"]) == set(range(6, cfg.T + 1))
        assert all(np.isfinite(r["psi_hat"]) for r in rows)
        assert complete_cases(history, 6).n == 20

    def test_adaptive_floor(self, tmp_path):
        history, _ = run_trial(smoke(tmp_path), "scenario2", "fixed1", 0)
        p = history.p1[: history.n]
        assert np.all((p >= 0.1 - 1e-12) & (p <= 0.9 + 1e-12))
        assert np.all(p[history.entry_time[: history.n] == 1] == 0.5)


class TestExperiment:
    def test_two_files(self, tmp_path):
        cfg = smoke(tmp_path, designs=("rct",), reps=1, trial_logs=False)
        assert harness.run_experiment(cfg) == 0
        assert sorted(os.listdir(tmp_path)) == ["aggregate.csv", "per_rep.csv"]
        rows = read(tmp_path / "per_rep.csv")
        assert tuple(rows[0]) == PER_REP_COLUMNS
        assert tuple(read(tmp_path / "aggregate.csv")[0]) == AGGREGATE_COLUMNS

    def test_aggregate_covers_report_times(self, tmp_path):
        cfg = smoke(tmp_path, trial_logs=False)
        harness.run_experiment(cfg)
        agg = read(tmp_path / "aggregate.csv")
        assert {int(r["t"]) for r in agg} == set(cfg.report_times)
        assert {r["design"] for r in agg} == set(cfg.designs)

    def test_worker_count_invariance(self, tmp_path):
        out = {}
        for w in (1, 8):
            d = tmp_path / f"w{w}"
            harness.run_experiment(smoke(d, workers=w, trial_logs=False))
            out[w] = ((d / "per_rep.csv").read_bytes(), (d / "aggregate.csv").read_bytes())
        assert out[1] == out[8]

    def test_aborted_replicate(self, tmp_path, monkeypatch):
        real = harness.run_trial

        def flaky(config, scenario, design, rep, **kw):
            if rep == 1:
                raise RuntimeError("injected failure")
            return real(config, scenario, design, rep, **kw)

        monkeypatch.setattr(harness, "run_trial", flaky)
        cfg = smoke(tmp_path, designs=("rct",), trial_logs=False)
        assert harness.run_experiment(cfg) == 1
        errs = read(tmp_path / "errors.csv")
        assert len(errs) == 1 and "injected" in errs[0]["error"]
        assert harness.run_experiment(cfg, allow_partial=True) == 0


class TestAudit:
    def test_replay_matches(self, tmp_path):
        harness.run_experiment(smoke(tmp_path))
        logs = sorted((tmp_path / "logs").glob("*.csv"))
        assert len(logs) == 6
        for log in logs:
            n, bad = harness.audit_log(str(log))
            assert n > 0 and bad == []

    def test_tampered_log(self, tmp_path):
        harness.run_experiment(smoke(tmp_path, designs=("fixed1",), reps=1))
        log = tmp_path / "logs" / "scenario2_fixed1_rep0000.csv"
        lines = log.read_text().splitlines()
        header = lines[0].split(",")
        col = header.index("assign_prob")
        # alter the last participant's probability; the replay must flag it
        cells = lines[-1].split(",")
        cells[col] = repr(float(cells[col]) * 0.5)
        lines[-1] = ",".join(cells)
        log.write_text("\n".join(lines) + "\n")
        _, bad = harness.audit_log(str(log))
        assert bad == [len(lines) - 2]


class TestCli:
    def test_run_and_audit(self, tmp_path, capsys):
        out = tmp_path / "cli"
        assert main(["run", "--config", SMOKE, "--scenario", "s2", "--designs", "fixed1",
                     "--reps", "1", "--out", str(out), "--trial-logs"]) == 0
        assert (out / "aggregate.csv").exists()
        log = out / "logs" / "scenario2_fixed1_rep0000.csv"
        assert main(["audit", "--log", str(log)]) == 0
        assert "audit ok" in capsys.readouterr().out

    def test_truth(self, capsys):
        assert main(["truth", "--config", SMOKE, "--scenario", "s1", "--oracle-reps", "0"]) == 0
        text = capsys.readouterr().out
        assert "5,0.4688869" in text

    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            main([])
