"""Configs, runners, sweep protocol, CSV schema, CLI."""

import filecmp
import math

import numpy as np
import pytest

from mvekit import cli, harness
from mvekit.harness import ConfigError, CurveLog, ExperimentConfig


def tiny_control(**kw):
    defaults = dict(agent="dqn", total_steps=3000, log_every=1000, warmup=500)
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestConfigValidation:
    def test_defaults_are_valid(self):
        ExperimentConfig()

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config field"):
            harness.config_from_mapping({"learning_rate": "0.1"})

    @pytest.mark.parametrize(
        "field,value",
        [
            ("kind", "simulation"),
            ("agent", "sarsa"),
            ("weighting", "inverse"),
            ("value_hidden", "3x7"),
            ("model_hidden", 5),
            ("tau", 0.0),
            ("value_lr", -0.1),
            ("batch_size", 0),
            ("epsilon", 1.5),
            ("gamma", -0.2),
            ("method", "svi"),
            ("capacity", "huge"),
        ],
    )
    def test_bad_value_names_offending_field(self, field, value):
        with pytest.raises(ConfigError, match=field):
            ExperimentConfig(**{field: value})

    def test_weighting_agent_consistency(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(agent="mve", weighting="learned-variance")
        with pytest.raises(ConfigError):
            ExperimentConfig(agent="selective-mve", weighting="uniform")

    def test_derived_ensemble_sizes(self):
        combined = ExperimentConfig(agent="selective-mve", weighting="combined", model_hidden=4)
        assert combined.n_members == 20
        ens = ExperimentConfig(agent="selective-mve", weighting="ensemble-variance")
        assert ens.n_members == 5
        override = ExperimentConfig(
            agent="selective-mve", weighting="combined", ensemble_size=7, model_hidden=4
        )
        assert override.n_members == 7


class TestConfigFile:
    def test_parse_and_override(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# comment line\n"
            "agent = dqn\n"
            "total_steps = 4000  # inline comment\n"
            "value_lr = 0.003\n"
            "sweep.batch_size = 16, 32, 64\n"
        )
        base, grid = harness.parse_config_file(path)
        config = harness.config_from_mapping(base)
        assert config.agent == "dqn"
        assert config.total_steps == 4000
        assert config.value_lr == 0.003
        assert grid == {"batch_size": [16, 32, 64]}

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("this is not a key value line\n")
        with pytest.raises(ConfigError):
            harness.parse_config_file(path)

    def test_unknown_sweep_field_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("sweep.step_size = 1, 2\n")
        with pytest.raises(ConfigError):
            harness.parse_config_file(path)


class TestRunControl:
    def test_cadence_row_count(self):
        log = harness.run_control(tiny_control(total_steps=10000, log_every=2000), 0)
        assert [row[0] for row in log.rows] == [2000, 4000, 6000, 8000, 10000]

    def test_byte_identical_rerun(self, tmp_path):
        cfg = tiny_control()
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        harness.run_control(cfg, 3, a)
        harness.run_control(cfg, 3, b)
        assert filecmp.cmp(a, b, shallow=False)

    def test_different_seeds_differ(self):
        cfg = tiny_control()
        a = harness.run_control(cfg, 0)
        b = harness.run_control(cfg, 1)
        assert a.rows != b.rows

    def test_metadata_records_key_hyperparameters(self, tmp_path):
        path = tmp_path / "run.csv"
        harness.run_control(tiny_control(), 5, path)
        log = CurveLog.read_csv(path)
        assert log.metadata["epsilon"] == "0.1"
        assert log.metadata["gamma"] == "1.0"
        assert log.metadata["target_sync"] == "256"
        assert log.metadata["seed"] == "5"

    def test_dqn_leaves_model_columns_empty(self):
        log = harness.run_control(tiny_control(), 0)
        assert log.columns == ["step", "avg_return", "expected_rollout_len", "model_loss"]
        for row in log.rows:
            assert row[2] is None and row[3] is None

    def test_mve_fills_model_columns(self):
        cfg = tiny_control(
            agent="selective-mve", weighting="learned-variance", model_hidden=4, rollout_h=3
        )
        log = harness.run_control(cfg, 0)
        last = log.rows[-1]
        assert last[2] is not None and 1.0 <= last[2] <= 3.0
        assert last[3] is not None

    def test_regression_kind_rejected(self):
        cfg = ExperimentConfig(kind="regression")
        with pytest.raises(ConfigError):
            harness.run_control(cfg, 0)

    def test_correlation_schema_and_ranges(self):
        cfg = ExperimentConfig(
            kind="correlation",
            agent="selective-mve",
            weighting="combined",
            model_hidden=4,
            ensemble_size=3,
            total_steps=2000,
            log_every=1000,
            warmup=500,
        )
        log = harness.run_control(cfg, 0)
        assert log.columns[-3:] == ["r_learned", "r_ensemble", "r_combined"]
        for row in log.rows:
            for value in row[-3:]:
                if value is not None:
                    assert -1.0 <= value <= 1.0


class TestCurveLogRoundtrip:
    def test_read_back_equals_written(self, tmp_path):
        log = CurveLog(
            columns=["step", "avg_return", "expected_rollout_len", "model_loss"],
            rows=[[1000, -10.5, None, None], [2000, -9.25, 1.5, -3.75]],
            metadata={"kind": "control", "seed": 0},
        )
        path = tmp_path / "log.csv"
        log.write_csv(path)
        back = CurveLog.read_csv(path)
        assert back.columns == log.columns
        assert back.rows == [[1000.0, -10.5, None, None], [2000.0, -9.25, 1.5, -3.75]]
        assert back.metadata["kind"] == "control"

    def test_column_extraction_with_missing(self):
        log = CurveLog(
            columns=["step", "avg_return"],
            rows=[[1000, None], [2000, -5.0]],
            metadata={},
        )
        col = log.column("avg_return")
        assert math.isnan(col[0]) and col[1] == -5.0


class TestSweep:
    def test_scoring_uses_second_half_sum(self):
        curve = np.array([-100.0, -90.0, -10.0, -20.0])
        assert harness.score_curve(curve) == -30.0

    def test_constant_curves_pick_higher_sum(self):
        rows_a = [[(i + 1) * 1000, -10.0, None, None] for i in range(6)]
        rows_b = [[(i + 1) * 1000, -5.0, None, None] for i in range(6)]
        cols = ["step", "avg_return", "expected_rollout_len", "model_loss"]
        log_a = CurveLog(cols, rows_a, {})
        log_b = CurveLog(cols, rows_b, {})
        score_a = harness.score_curve(harness.average_curves([log_a, log_a]))
        score_b = harness.score_curve(harness.average_curves([log_b, log_b]))
        assert score_b > score_a

    def test_grid_expansion_order_and_empty(self):
        base = tiny_control()
        configs = harness.expand_grid(base, {"batch_size": [16, 32], "value_lr": [0.1, 0.2]})
        assert [(c.batch_size, c.value_lr) for c in configs] == [
            (16, 0.1), (16, 0.2), (32, 0.1), (32, 0.2),
        ]
        assert harness.expand_grid(base, {}) == [base]
        with pytest.raises(ConfigError):
            harness.expand_grid(base, {"batch_size": []})

    def test_end_to_end_sweep(self, tmp_path):
        base = tiny_control(total_steps=2000, log_every=500, seeds=2, winner_seeds=2)
        result = harness.run_sweep(
            base, {"value_lr": [0.003, 1e-09]}, out_dir=tmp_path, workers=1
        )
        assert result.best_index == 0  # a vanishing step size cannot win
        assert result.boundary_flag and result.boundary_fields == ["value_lr"]
        assert (tmp_path / "sweep_summary.csv").exists()
        assert (tmp_path / "config_000" / "seed_0.csv").exists()
        assert (tmp_path / "winner" / "seed_2.csv").exists()
        assert len(result.winner_curves) == 2

    def test_single_config_grid_vacuous_flag(self):
        base = tiny_control(total_steps=1000, log_every=500, seeds=1, winner_seeds=1)
        result = harness.run_sweep(base, {"value_lr": [0.003]}, workers=1)
        assert result.best_index == 0
        assert not result.boundary_flag

    def test_score_permutation_invariance(self, tmp_path):
        base = tiny_control(total_steps=2000, log_every=500, seeds=2, winner_seeds=1)
        grid = {"value_lr": [0.003, 1e-09]}
        fwd = harness.run_sweep(base, grid, workers=1)
        rev = harness.run_sweep(base, {"value_lr": [1e-09, 0.003]}, workers=1)
        assert sorted(fwd.scores) == sorted(rev.scores)
        assert fwd.best_config.value_lr == rev.best_config.value_lr


class TestRegressionRunner:
    def test_grid_endpoints_and_schema(self, tmp_path):
        cfg = ExperimentConfig(
            kind="regression", method="hetero", capacity="small", epochs=2, n_train=200
        )
        path = tmp_path / harness.regression_csv_name(cfg, 0)
        res = harness.run_regression(cfg, 0, path)
        assert res.x[0] == -1.5 and res.x[-1] == 2.5
        assert len(res.x) == cfg.eval_points
        text = path.read_text().splitlines()
        header_idx = next(i for i, l in enumerate(text) if not l.startswith("#"))
        assert text[header_idx] == "x,y_true,mean,std"

    def test_hetero_std_respects_floor(self):
        cfg = ExperimentConfig(
            kind="regression", method="hetero", capacity="small", epochs=1, n_train=100
        )
        res = harness.run_regression(cfg, 0)
        assert np.all(res.std >= math.sqrt(1e-6) * (1 - 1e-12))

    def test_deterministic(self, tmp_path):
        cfg = ExperimentConfig(
            kind="regression", method="ensemble", capacity="small",
            epochs=1, n_train=100, ensemble_size=2,
        )
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        harness.run_regression(cfg, 4, a)
        harness.run_regression(cfg, 4, b)
        assert filecmp.cmp(a, b, shallow=False)

    def test_bootstrap_and_priors_methods_run(self):
        for method in ("rpf", "rpf-bootstrap", "mc-dropout", "ensemble+hetero"):
            cfg = ExperimentConfig(
                kind="regression", method=method, capacity="small",
                epochs=1, n_train=60, ensemble_size=2,
            )
            res = harness.run_regression(cfg, 0)
            assert np.isfinite(res.mean).all()
            assert np.all(res.std >= 0.0)


class TestCli:
    def test_control_success_and_output(self, tmp_path):
        code = cli.main(
            [
                "control",
                "--seed", "1",
                "--out", str(tmp_path),
                "--set", "total_steps=1500",
                "--set", "warmup=300",
                "--set", "log_every=500",
            ]
        )
        assert code == 0
        assert (tmp_path / "control_dqn_uniform_seed1.csv").exists()

    def test_config_error_exit_code(self, tmp_path, capsys):
        code = cli.main(["control", "--out", str(tmp_path), "--set", "agent=banana"])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_unknown_field_exit_code(self, tmp_path):
        assert cli.main(["control", "--out", str(tmp_path), "--set", "nope=1"]) == 2

    def test_runtime_failure_exit_code(self, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise RuntimeError("exploded")

        monkeypatch.setattr(harness, "run_control", boom)
        code = cli.main(["control", "--out", str(tmp_path), "--set", "total_steps=100"])
        assert code == 3

    def test_flags_override_config_file(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("total_steps = 99999\nwarmup = 300\nlog_every = 500\n")
        code = cli.main(
            [
                "control",
                "--config", str(cfg_file),
                "--out", str(tmp_path),
                "--set", "total_steps=1000",
            ]
        )
        assert code == 0
        log = CurveLog.read_csv(tmp_path / "control_dqn_uniform_seed0.csv")
        assert log.metadata["total_steps"] == "1000"

    def test_multi_seed_runs(self, tmp_path):
        code = cli.main(
            [
                "control",
                "--seeds", "2",
                "--out", str(tmp_path),
                "--set", "total_steps=1000",
                "--set", "warmup=300",
                "--set", "log_every=500",
            ]
        )
        assert code == 0
        assert (tmp_path / "control_dqn_uniform_seed0.csv").exists()
        assert (tmp_path / "control_dqn_uniform_seed1.csv").exists()

    def test_regression_subcommand(self, tmp_path):
        code = cli.main(
            [
                "regression",
                "--out", str(tmp_path),
                "--set", "method=hetero",
                "--set", "capacity=small",
                "--set", "epochs=1",
                "--set", "n_train=100",
            ]
        )
        assert code == 0
        assert (tmp_path / "regression_hetero_small_lr0.001_seed0.csv").exists()

    def test_sweep_subcommand(self, tmp_path):
        cfg_file = tmp_path / "sweep.cfg"
        cfg_file.write_text(
            "total_steps = 1000\nwarmup = 300\nlog_every = 500\n"
            "seeds = 1\nwinner_seeds = 1\n"
            "sweep.value_lr = 0.003, 0.001\n"
        )
        code = cli.main(["sweep", "--config", str(cfg_file), "--out", str(tmp_path / "sw")])
        assert code == 0
        assert (tmp_path / "sw" / "sweep_summary.csv").exists()
