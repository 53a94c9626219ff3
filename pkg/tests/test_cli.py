import numpy as np

from mdp_tcm.metrics import REPORT_KEYS
from mdp_tcm.model_io import load_model
from mdp_tcm.multistate import EcsDbnModel

from conftest import DE_FLAGS, TRAIN_FLAGS, run_cli


def tree_bytes(root, suffixes=(".csv", ".model", ".txt")):
    """Byte content of every non-sidecar file under root, keyed by name."""
    return {p.name: p.read_bytes() for p in sorted(root.rglob("*"))
            if p.suffix in suffixes}


class TestGenerate:
    def test_writes_runs_and_sidecars(self, data_dir):
        assert len(list(data_dir.glob("*.csv"))) == 3
        assert len(list(data_dir.glob("*.meta"))) == 3

    def test_prints_state_counts(self, tmp_path, capsys):
        code = run_cli(["generate", "--out", str(tmp_path), "--runs", "1",
                        "--seed", "3", "--desk-scale", "--run-seconds", "30"])
        assert code == 0
        out = capsys.readouterr().out
        for state in range(4):
            assert f"state {state}:" in out

    def test_zero_runs_is_usage_error(self, tmp_path):
        assert run_cli(["generate", "--out", str(tmp_path), "--runs", "0"]) == 1

    def test_repeat_invocation_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["--runs", "2", "--seed", "9", "--desk-scale", "--run-seconds", "20"]
        assert run_cli(["generate", "--out", str(a)] + args) == 0
        assert run_cli(["generate", "--out", str(b)] + args) == 0
        assert tree_bytes(a) == tree_bytes(b)
        assert tree_bytes(a)  # non-empty


class TestTrain:
    def test_ecs_dbn_has_four_costs(self, tmp_path, data_dir):
        out = tmp_path / "ecs.model"
        code = run_cli(["train", "--data", str(data_dir), "--out", str(out),
                        "--kind", "ecs-dbn", "--seed", "2"] + TRAIN_FLAGS + DE_FLAGS)
        assert code == 0
        model = load_model(out)
        assert isinstance(model, EcsDbnModel)
        assert len(model.costs) == 4
        assert (tmp_path / "ecs.model.de_history.csv").exists()
        assert (tmp_path / "ecs.model.finetune_loss.csv").exists()

    def test_sparse_states_fall_back(self, tmp_path, data_dir, capsys):
        out = tmp_path / "ms.model"
        code = run_cli(["train", "--data", str(data_dir), "--out", str(out),
                        "--kind", "multistate", "--seed", "2",
                        "--min-state-samples", "100000"] + TRAIN_FLAGS + DE_FLAGS)
        assert code == 0
        assert "routing to fallback" in capsys.readouterr().out
        model = load_model(out)
        assert model.regressors == {}

    def test_train_repeat_byte_identical(self, tmp_path, data_dir):
        args = ["train", "--data", str(data_dir), "--kind", "dbn-regressor",
                "--seed", "4"] + TRAIN_FLAGS
        a, b = tmp_path / "a.model", tmp_path / "b.model"
        assert run_cli(args + ["--out", str(a)]) == 0
        assert run_cli(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_missing_data_dir_is_data_error(self, tmp_path):
        assert run_cli(["train", "--data", str(tmp_path / "void"),
                        "--out", str(tmp_path / "m.model")]) == 2

    def test_finetune_loss_rows_match_epochs(self, tmp_path, data_dir):
        out = tmp_path / "reg.model"
        flags = [f for i, f in enumerate(TRAIN_FLAGS)
                 if TRAIN_FLAGS[i - i % 2] != "--finetune-epochs"]
        code = run_cli(["train", "--data", str(data_dir), "--out", str(out),
                        "--kind", "dbn-regressor", "--seed", "4",
                        "--finetune-epochs", "9"] + flags)
        assert code == 0
        rows = (tmp_path / "reg.model.finetune_loss.csv").read_text().splitlines()
        assert len(rows) == 1 + 9


class TestEvaluate:
    def test_saved_model_evaluation_deterministic(self, tmp_path, data_dir,
                                                  multistate_model):
        args = ["evaluate", "--data", str(data_dir), "--model",
                str(multistate_model)]
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli(args + ["--out", str(a)]) == 0
        assert run_cli(args + ["--out", str(b)]) == 0
        assert (a.parent / "a.report.csv").read_bytes() == \
            (b.parent / "b.report.csv").read_bytes()

    def test_report_schema_keys_exact(self, tmp_path, data_dir, multistate_model):
        out = tmp_path / "rep"
        assert run_cli(["evaluate", "--data", str(data_dir), "--model",
                        str(multistate_model), "--out", str(out)]) == 0
        header = (tmp_path / "rep.report.csv").read_text().splitlines()[0]
        assert header.split(",") == list(REPORT_KEYS)
        kv = (tmp_path / "rep.report.txt").read_text()
        assert [line.split(" = ")[0] for line in kv.strip().splitlines()] \
            == list(REPORT_KEYS)

    def test_channel_subset_not_in_dataset(self, tmp_path, data_dir,
                                           multistate_model):
        code = run_cli(["evaluate", "--data", str(data_dir), "--model",
                        str(multistate_model), "--channels", "bogus",
                        "--out", str(tmp_path / "r")])
        assert code == 2

    def test_holdout_split_evaluation(self, tmp_path, data_dir, multistate_model):
        out = tmp_path / "ho"
        code = run_cli(["evaluate", "--data", str(data_dir), "--model",
                        str(multistate_model), "--out", str(out),
                        "--holdout", "--split-mode", "run", "--seed", "1"])
        assert code == 0
        full = tmp_path / "full"
        assert run_cli(["evaluate", "--data", str(data_dir), "--model",
                        str(multistate_model), "--out", str(full)]) == 0
        assert (tmp_path / "ho.report.csv").read_text() \
            != (tmp_path / "full.report.csv").read_text()

    def test_trials_emit_mean_and_std(self, tmp_path, data_dir):
        out = tmp_path / "tr"
        code = run_cli(["evaluate", "--data", str(data_dir), "--out", str(out),
                        "--kind", "dbn-regressor", "--trials", "2", "--seed", "1",
                        "--split-mode", "run"] + TRAIN_FLAGS)
        assert code == 0
        trials = (tmp_path / "tr.trials.csv").read_text().splitlines()
        assert len(trials) == 1 + 2
        report = (tmp_path / "tr.report.csv").read_text().splitlines()
        assert len(report) == 1 + 2  # mean row + std row


class TestPredict:
    def test_prediction_stream(self, tmp_path, data_dir, multistate_model):
        run_file = sorted(data_dir.glob("*.csv"))[0]
        out = tmp_path / "pred.csv"
        assert run_cli(["predict", "--model", str(multistate_model),
                        "--run", str(run_file), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        header = lines[0].split(",")
        assert header == ["frame_index", "diagnosed_state", "posterior_0",
                          "posterior_1", "posterior_2", "posterior_3",
                          "wear_estimate_um", "wear_smoothed_um"]
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        # row count equals frame count of the windowed run
        from mdp_tcm.signal_pipeline import WindowSpec, build_dataset, load_run_csv
        from mdp_tcm.synth import read_run_meta
        meta = read_run_meta(run_file.with_suffix(".meta"))
        channels, wear = load_run_csv(run_file, float(meta["sampling_rate_hz"]))
        ds = build_dataset(channels, WindowSpec(
            spindle_rpm=float(meta["spindle_rpm"]),
            sampling_rate_hz=float(meta["sampling_rate_hz"])), wear)
        assert data.shape[0] == len(ds)
        # smoothed column recomputable as the trailing mean of the raw column
        from mdp_tcm.multistate import smooth
        model = load_model(multistate_model)
        recomputed = smooth(data[:, 6], model.smoothing_window)
        assert np.allclose(recomputed, data[:, 7], atol=1e-9)
        # posteriors on the simplex
        assert np.allclose(data[:, 2:6].sum(axis=1), 1.0, atol=1e-9)
        # worn frames mostly flagged worn
        worn = ds.state_labels == 3
        assert worn.sum() > 30
        assert np.mean(data[worn, 1] == 3) >= 0.9

    def test_predict_deterministic(self, tmp_path, data_dir, multistate_model):
        run_file = sorted(data_dir.glob("*.csv"))[0]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert run_cli(["predict", "--model", str(multistate_model),
                            "--run", str(run_file), "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_wrong_model_kind_rejected(self, tmp_path, data_dir):
        reg = tmp_path / "reg.model"
        assert run_cli(["train", "--data", str(data_dir), "--out", str(reg),
                        "--kind", "dbn-regressor", "--seed", "1"] + TRAIN_FLAGS) == 0
        run_file = sorted(data_dir.glob("*.csv"))[0]
        code = run_cli(["predict", "--model", str(reg), "--run", str(run_file),
                        "--out", str(tmp_path / "p.csv")])
        assert code == 2


class TestConfigHandling:
    def test_three_layer_precedence(self, tmp_path, data_dir):
        # preset default finetune 500 < file 9 < flag 6
        config = tmp_path / "run.conf"
        config.write_text("finetune-epochs = 9  # file layer\n")
        base = ["train", "--data", str(data_dir), "--kind", "dbn-regressor",
                "--seed", "3", "--preset", "prognosis-default",
                "--pretrain-epochs", "2", "--batch-size", "64",
                "--hidden-range", "4,8", "--regressor-learning-rate", "0.003"]

        out_file = tmp_path / "file.model"
        assert run_cli(base + ["--config", str(config), "--out", str(out_file)]) == 0
        rows = (tmp_path / "file.model.finetune_loss.csv").read_text().splitlines()
        assert len(rows) == 1 + 9  # file value wins over preset

        out_flag = tmp_path / "flag.model"
        assert run_cli(base + ["--config", str(config), "--out", str(out_flag),
                               "--finetune-epochs", "6"]) == 0
        rows = (tmp_path / "flag.model.finetune_loss.csv").read_text().splitlines()
        assert len(rows) == 1 + 6  # flag value wins over file

    def test_unknown_config_key_rejected(self, tmp_path, data_dir):
        config = tmp_path / "bad.conf"
        config.write_text("not-a-real-key = 1\n")
        code = run_cli(["train", "--data", str(data_dir),
                        "--out", str(tmp_path / "m.model"),
                        "--config", str(config)])
        assert code == 1

    def test_missing_required_option(self):
        assert run_cli(["train"]) == 1

    def test_unknown_command_usage_error(self):
        assert run_cli(["frobnicate"]) == 1


class TestAblateAndCompare:
    def test_ablate_sensors_table(self, tmp_path, data_dir):
        out = tmp_path / "abl"
        code = run_cli(["ablate-sensors", "--data", str(data_dir),
                        "--out", str(out), "--subsets", "force;all",
                        "--trials", "1", "--seed", "2", "--split-mode", "run"]
                       + TRAIN_FLAGS)
        assert code == 0
        rows = (tmp_path / "abl.sensor_ablation.csv").read_text().splitlines()
        assert rows[0].startswith("subset,rmse_mean")
        assert len(rows) == 1 + 2

    def test_compare_frameworks_table(self, tmp_path, data_dir):
        out = tmp_path / "cmp"
        code = run_cli(["compare-frameworks", "--data", str(data_dir),
                        "--out", str(out), "--trials", "1", "--seed", "2",
                        "--split-mode", "run"] + TRAIN_FLAGS + DE_FLAGS)
        assert code == 0
        rows = (tmp_path / "cmp.frameworks.csv").read_text().splitlines()
        names = [r.split(",")[0] for r in rows[1:]]
        assert names == ["multistate-smoothed", "multistate", "single-state-dbn"]
