"""Command-line surface for offline experiments.

Commands: generate, train, evaluate, predict, ablate-sensors,
compare-frameworks. Every option can come from a flat `key = value`
config file (--config); flags override file values, which override
preset defaults. Unknown config keys are rejected.

Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
MDP_TCM_THREADS caps the worker count for multi-trial fan-out.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import dbn
from .adaptive_de import DeConfig, evolve
from .cost_sensitive import predict_cs
from .errors import DataError, NumericError
from .experiments import window_spec_for, windowed_run
from .metrics import MetricsReport, classification_report, regression_report
from .model_io import (KIND_CLASSIFIER, KIND_ECS, KIND_MULTISTATE,
                       KIND_REGRESSOR, load_model, save_model)
from .multistate import (EcsDbnModel, MdpTrainConfig, MultiStateModel,
                         estimate_wear_detailed, train_mdp)
from .signal_pipeline import (FrameDataset, N_STATES, WindowSpec,
                              build_dataset, load_run_csv)
from .synth import (SynthConfig, generate_fleet, read_run_meta,
                    write_run_csv, write_run_meta)
from .seeding import substream

_REQUIRED = object()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise UsageError(message)


def _opt_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_range(text: str) -> tuple:
    lo, hi = (int(p) for p in text.split(","))
    return lo, hi


# (name, type, default, help); default _REQUIRED must be supplied,
# default None means "derived later"
_COMMON_TRAIN_OPTS = [
    ("preset", str, None, "training preset: diagnosis-default | prognosis-default"),
    ("pretrain-epochs", int, None, "CD pretraining epochs"),
    ("finetune-epochs", int, None, "SGD fine-tuning epochs"),
    ("learning-rate", float, None, "learning rate for pretraining and fine-tuning"),
    ("classifier-learning-rate", float, None, "override for the state classifier"),
    ("regressor-learning-rate", float, None, "override for the wear regressors"),
    ("batch-size", int, None, "mini-batch size"),
    ("hidden-range", _opt_range, None, "hidden width interval, e.g. 5,60"),
    ("stride", int, None, "window stride in samples (default: one window)"),
    ("train-ratio", float, 0.85, "train fraction of the split"),
    ("split-mode", str, "frame", "frame | run (run-level split avoids leakage)"),
]

COMMANDS = {
    "generate": [
        ("out", str, _REQUIRED, "output directory"),
        ("runs", int, 1, "number of runs to generate"),
        ("seed", int, 0, "base seed"),
        ("desk-scale", _opt_bool, False, "sample at 200 Hz instead of 20 kHz"),
        ("rpm", float, 1650.0, "spindle speed"),
        ("run-seconds", float, 120.0, "run length"),
        ("skew", float, 10.0, "state dwell-time imbalance ratio"),
        ("wear-end", float, 400.0, "end-of-life wear in micrometers"),
        ("noise-std", float, None, "override all channel noise levels"),
        ("noise-scale", float, 1.0, "multiplier on the per-channel noise levels"),
        ("band-frac", float, 0.5, "fraction of wear coupling via channel sub-bands"),
    ],
    "train": [
        ("data", str, _REQUIRED, "directory of run CSVs"),
        ("out", str, _REQUIRED, "model file to write"),
        ("kind", str, "multistate",
         "multistate | ecs-dbn | dbn-classifier | dbn-regressor"),
        ("seed", int, 0, "run seed"),
        ("smoothing-window", int, 50, "trailing smoothing window (multistate)"),
        ("sticky-steps", int, 1, "diagnoses needed to switch the routed state"),
        ("min-state-samples", int, 50, "frames needed for a dedicated regressor"),
        ("de-population", int, 30, "DE population size"),
        ("de-generations", int, 50, "DE generations"),
    ] + _COMMON_TRAIN_OPTS,
    "evaluate": [
        ("data", str, _REQUIRED, "directory of run CSVs"),
        ("out", str, _REQUIRED, "output prefix for report files"),
        ("model", str, None, "model file (omit when using --trials)"),
        ("channels", str, "all", "comma-separated channel subset"),
        ("holdout", _opt_bool, False, "evaluate only the held-out split"),
        ("trials", int, 1, "repeated seeded train+evaluate trials"),
        ("kind", str, "multistate", "model kind for --trials"),
        ("seed", int, 0, "run seed"),
        ("smoothing-window", int, 50, "trailing smoothing window (multistate)"),
        ("sticky-steps", int, 1, "diagnoses needed to switch the routed state"),
        ("min-state-samples", int, 50, "frames needed for a dedicated regressor"),
        ("de-population", int, 30, "DE population size"),
        ("de-generations", int, 50, "DE generations"),
    ] + _COMMON_TRAIN_OPTS,
    "predict": [
        ("model", str, _REQUIRED, "multistate model file"),
        ("run", str, _REQUIRED, "run CSV to predict on"),
        ("out", str, _REQUIRED, "prediction CSV to write"),
        ("rpm", float, None, "spindle rpm (default: run sidecar)"),
        ("rate", float, None, "sampling rate Hz (default: run sidecar)"),
        ("stride", int, None, "window stride in samples"),
    ],
    "ablate-sensors": [
        ("data", str, _REQUIRED, "directory of run CSVs"),
        ("out", str, _REQUIRED, "output prefix"),
        ("subsets", str, "force;torque;vibration;force,torque;all",
         "semicolon-separated channel subsets"),
        ("trials", int, 1, "seeded trials"),
        ("seed", int, 0, "base seed"),
    ] + _COMMON_TRAIN_OPTS,
    "compare-frameworks": [
        ("data", str, _REQUIRED, "directory of run CSVs"),
        ("out", str, _REQUIRED, "output prefix"),
        ("trials", int, 1, "seeded trials"),
        ("seed", int, 0, "base seed"),
        ("smoothing-window", int, 50, "trailing smoothing window"),
        ("sticky-steps", int, 1, "diagnoses needed to switch the routed state"),
        ("min-state-samples", int, 50, "frames needed for a dedicated regressor"),
        ("de-population", int, 30, "DE population size"),
        ("de-generations", int, 50, "DE generations"),
    ] + _COMMON_TRAIN_OPTS,
}


def parse_config_file(path: str) -> dict:
    """Flat `key = value` lines; `#` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        values[key] = value
    return values


class RunConfig:
    """Resolved options for one command: flag > file > default."""

    def __init__(self, command: str, args: argparse.Namespace, file_values: dict):
        spec = {name: (typ, default) for name, typ, default, _ in COMMANDS[command]}
        unknown = set(file_values) - set(spec)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        self.command = command
        self._values = {}
        for name, (typ, default) in spec.items():
            flag_val = getattr(args, name.replace("-", "_"))
            if flag_val is not None:
                self._values[name] = flag_val
            elif name in file_values:
                try:
                    self._values[name] = typ(file_values[name])
                except ValueError as exc:
                    raise UsageError(f"config key {name}: {exc}") from None
            elif default is _REQUIRED:
                raise UsageError(f"missing required option --{name}")
            else:
                self._values[name] = default

    def __getitem__(self, name: str):
        return self._values[name]


def _train_config(cfg: RunConfig, default_preset: str,
                  role: str | None = None) -> dbn.TrainConfig:
    base = dbn.preset(cfg["preset"] or default_preset)
    overrides = {}
    for key, attr in (("pretrain-epochs", "pretrain_epochs"),
                      ("finetune-epochs", "finetune_epochs"),
                      ("learning-rate", "learning_rate"),
                      ("batch-size", "batch_size"),
                      ("hidden-range", "hidden_range")):
        if cfg[key] is not None:
            overrides[attr] = cfg[key]
    if role is not None and cfg[f"{role}-learning-rate"] is not None:
        overrides["learning_rate"] = cfg[f"{role}-learning-rate"]
    return replace(base, **overrides)


def build_parser() -> _Parser:
    parser = _Parser(prog="mdp-tcm",
                     description="Tool-condition monitoring: multi-state "
                                 "diagnosis and wear prognosis experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in COMMANDS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", default=None, help="key = value config file")
        for name, typ, default, help_text in opts:
            if typ is _opt_bool:
                p.add_argument(f"--{name}", type=_opt_bool, default=None,
                               nargs="?", const=True, help=help_text)
            else:
                p.add_argument(f"--{name}", type=typ, default=None, help=help_text)
    return parser


# ---------------------------------------------------------------------------
# data plumbing
# ---------------------------------------------------------------------------

def _load_runs(data_dir: str, stride: int | None):
    """Per-run windowed datasets from a directory of run CSVs + sidecars."""
    root = Path(data_dir)
    files = sorted(root.glob("*.csv"))
    if not files:
        raise DataError(f"no run CSVs found in {data_dir}")
    datasets = []
    for f in files:
        meta_path = f.with_suffix(".meta")
        if not meta_path.exists():
            raise DataError(f"missing sidecar {meta_path}")
        meta = read_run_meta(meta_path)
        rate = float(meta["sampling_rate_hz"])
        rpm = float(meta["spindle_rpm"])
        channels, wear = load_run_csv(f, rate)
        spec = WindowSpec(spindle_rpm=rpm, sampling_rate_hz=rate, stride=stride)
        datasets.append(build_dataset(channels, spec, wear))
    return datasets


def _split_runs(datasets, mode: str, ratio: float, seed: int):
    """(train pool, held-out per-run datasets) under the chosen split mode."""
    if mode == "run":
        if len(datasets) < 2:
            raise DataError("run-level split needs at least 2 runs; "
                            f"got {len(datasets)}")
        order = substream(seed, "split").permutation(len(datasets))
        n_train = int(math.ceil(ratio * len(datasets)))
        if n_train == len(datasets):
            n_train -= 1
        train = FrameDataset.concat([datasets[i] for i in order[:n_train]])
        test = [datasets[i] for i in order[n_train:]]
        return train, test
    if mode == "frame":
        from .signal_pipeline import SplitSpec, split as frame_split
        pooled = FrameDataset.concat(datasets)
        train, test = frame_split(pooled, SplitSpec(train_ratio=ratio, seed=seed))
        if len(test) == 0:
            raise DataError(f"train ratio {ratio} leaves no test frames "
                            f"out of {len(pooled)}")
        return train, [test]
    raise UsageError(f"unknown split mode {mode!r}")


def _fmt(v) -> str:
    return f"{v:.10g}" if isinstance(v, float) else str(v)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("MDP_TCM_THREADS", "1")))
    except ValueError:
        return 1


def _map_trials(fn, seeds):
    # threads rather than processes: trial closures stay picklable-free and
    # the numba kernels run nogil, so fan-out still overlaps the hot loops
    workers = min(_worker_count(), len(seeds))
    if workers <= 1:
        return [fn(s) for s in seeds]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_generate(cfg: RunConfig) -> int:
    if cfg["runs"] < 1:
        raise UsageError("--runs must be at least 1")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    synth = SynthConfig(
        spindle_rpm=cfg["rpm"],
        sampling_rate_hz=200.0 if cfg["desk-scale"] else 20000.0,
        run_seconds=cfg["run-seconds"],
        wear_end_um=cfg["wear-end"],
        imbalance_skew=cfg["skew"],
        noise_std=cfg["noise-std"],
        noise_scale=cfg["noise-scale"],
        band_frac=cfg["band-frac"],
        seed=cfg["seed"],
    )
    runs = generate_fleet(synth, cfg["runs"])
    spec = window_spec_for(synth)
    created = datetime.now(timezone.utc).isoformat()
    counts = np.zeros(N_STATES, dtype=np.int64)
    for i, run in enumerate(runs):
        stem = out / f"run{i:03d}"
        write_run_csv(run, stem.with_suffix(".csv"))
        write_run_meta(run, stem.with_suffix(".meta"), created=created)
        ds = windowed_run(run, spec)
        counts += np.bincount(ds.state_labels, minlength=N_STATES)
    print(f"wrote {len(runs)} runs to {out}")
    for state, count in enumerate(counts):
        print(f"state {state}: {count} frames")
    return 0


def _mdp_config(cfg: RunConfig) -> MdpTrainConfig:
    return MdpTrainConfig(
        classifier=_train_config(cfg, "diagnosis-default", "classifier"),
        regressor=_train_config(cfg, "prognosis-default", "regressor"),
        de=DeConfig(population_size=cfg["de-population"],
                    max_generations=cfg["de-generations"],
                    seed=cfg["seed"]),
        min_state_samples=cfg["min-state-samples"],
        smoothing_window=cfg["smoothing-window"] or None,
        sticky_steps=cfg["sticky-steps"],
    )


def _train_one(cfg: RunConfig, train_set: FrameDataset, seed: int):
    """Train the requested kind; returns (model, history dict)."""
    kind = cfg["kind"]
    n_in = train_set.n_features
    if kind == KIND_MULTISTATE:
        return train_mdp(train_set, _mdp_config(cfg), seed, log=print)
    if kind in (KIND_ECS, KIND_CLASSIFIER):
        config = _train_config(cfg, "diagnosis-default", "classifier")
        hidden = dbn.draw_hidden_sizes(config, substream(seed, "arch-clf"))
        model, loss = dbn.train_classifier(train_set.frames, train_set.state_labels,
                                           (n_in,) + hidden + (N_STATES,), config, seed)
        if kind == KIND_CLASSIFIER:
            return model, {"loss": {"classifier": loss}}
        costs, de_history = evolve(
            model, train_set.frames, train_set.state_labels,
            DeConfig(population_size=cfg["de-population"],
                     max_generations=cfg["de-generations"], seed=seed))
        return EcsDbnModel(model, costs), {"de": de_history,
                                           "loss": {"classifier": loss}}
    if kind == KIND_REGRESSOR:
        config = _train_config(cfg, "prognosis-default", "regressor")
        hidden = dbn.draw_hidden_sizes(config, substream(seed, "arch-reg"))
        model, loss = dbn.train_regressor(train_set.frames, train_set.wear_targets,
                                          (n_in,) + hidden + (1,), config, seed)
        return model, {"loss": {"regressor": loss}}
    raise UsageError(f"unknown model kind {kind!r}")


def _write_histories(out_stem: Path, history: dict) -> None:
    losses = history.get("loss", {})
    if losses:
        rows = [(name, epoch, float(val))
                for name, arr in losses.items()
                for epoch, val in enumerate(arr)]
        _write_csv(out_stem.parent / f"{out_stem.name}.finetune_loss.csv",
                   ["model", "epoch", "loss"], rows)
    de = history.get("de")
    if de is not None:
        rows = [(g, float(de["best_fitness"][g]), float(de["mu_f"][g]),
                 float(de["mu_cr"][g]))
                for g in range(len(de["best_fitness"]))]
        _write_csv(out_stem.parent / f"{out_stem.name}.de_history.csv",
                   ["generation", "best_fitness", "mu_f", "mu_cr"], rows)


def cmd_train(cfg: RunConfig) -> int:
    datasets = _load_runs(cfg["data"], cfg["stride"])
    if cfg["train-ratio"] >= 1.0:
        train_set = FrameDataset.concat(datasets)
    else:
        train_set, _ = _split_runs(datasets, cfg["split-mode"],
                                   cfg["train-ratio"], cfg["seed"])
    per_state = np.bincount(train_set.state_labels, minlength=N_STATES)
    if cfg["kind"] in (KIND_ECS, KIND_CLASSIFIER, KIND_MULTISTATE) and np.any(per_state == 0):
        missing = [s for s in range(N_STATES) if per_state[s] == 0]
        print(f"warning: training split has no frames for states {missing}")
    model, history = _train_one(cfg, train_set, cfg["seed"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(out, model, train_config={
        "seed": cfg["seed"], "kind": cfg["kind"],
        "preset": cfg["preset"] or "", "n_train_frames": len(train_set)})
    _write_histories(out, history)
    print(f"trained {cfg['kind']} on {len(train_set)} frames -> {out}")
    return 0


def _evaluate_model(model, datasets, smoothing_override=None):
    """Eight-key report for any model kind over per-run datasets."""
    report = MetricsReport()
    if isinstance(model, MultiStateModel):
        states_true, states_pred = [], []
        wear_true, wear_est = [], []
        for ds in datasets:
            states, _, raw, smoothed = estimate_wear_detailed(model, ds.frames)
            states_true.append(ds.state_labels)
            states_pred.append(states)
            wear_true.append(ds.wear_targets)
            wear_est.append(smoothed if model.smoothing_window else raw)
        cls = classification_report(np.concatenate(states_true),
                                    np.concatenate(states_pred), N_STATES)
        reg = regression_report(np.concatenate(wear_true), np.concatenate(wear_est))
        return MetricsReport(accuracy=cls.accuracy, gmean=cls.gmean,
                             precision=cls.precision, recall=cls.recall, f1=cls.f1,
                             rmse=reg.rmse, r2score=reg.r2score, mape=reg.mape)
    if isinstance(model, EcsDbnModel):
        y = np.concatenate([ds.state_labels for ds in datasets])
        frames = np.vstack([ds.frames for ds in datasets])
        preds = predict_cs(dbn.predict_proba(model.base, frames), model.costs)
        return classification_report(y, preds, N_STATES)
    if model.head == dbn.SOFTMAX:
        y = np.concatenate([ds.state_labels for ds in datasets])
        frames = np.vstack([ds.frames for ds in datasets])
        preds = np.argmax(dbn.predict_proba(model, frames), axis=1)
        return classification_report(y, preds, N_STATES)
    wear = np.concatenate([ds.wear_targets for ds in datasets])
    frames = np.vstack([ds.frames for ds in datasets])
    return regression_report(wear, dbn.predict_regression(model, frames))


def _select_channels(datasets, channels: str):
    if channels.strip() in ("", "all"):
        return datasets
    names = [c.strip() for c in channels.split(",") if c.strip()]
    expanded = []
    for name in names:
        if name == "vibration":
            expanded += [c for c in datasets[0].channel_ids if c.startswith("vib")]
        else:
            expanded.append(name)
    return [ds.select_channels(expanded) for ds in datasets]


def _write_report(out_prefix: Path, report: MetricsReport) -> None:
    _write_csv(out_prefix.parent / f"{out_prefix.name}.report.csv",
               MetricsReport.csv_header().split(","),
               [tuple(report.as_dict().values())])
    (out_prefix.parent / f"{out_prefix.name}.report.txt").write_text(
        report.to_kv_text(), encoding="utf-8")


def cmd_evaluate(cfg: RunConfig) -> int:
    datasets = _load_runs(cfg["data"], cfg["stride"])
    datasets = _select_channels(datasets, cfg["channels"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)

    if cfg["model"]:
        model = load_model(cfg["model"])
        if cfg["holdout"]:
            _, eval_sets = _split_runs(datasets, cfg["split-mode"],
                                       cfg["train-ratio"], cfg["seed"])
        else:
            eval_sets = datasets
        report = _evaluate_model(model, eval_sets)
        _write_report(out, report)
        print(report.to_kv_text(), end="")
        return 0

    # no model file: run seeded train+evaluate trials
    def one_trial(seed: int) -> MetricsReport:
        train_set, eval_sets = _split_runs(datasets, cfg["split-mode"],
                                           cfg["train-ratio"], seed)
        model, _ = _train_one(cfg, train_set, seed)
        return _evaluate_model(model, eval_sets)

    seeds = [cfg["seed"] + i for i in range(cfg["trials"])]
    reports = _map_trials(one_trial, seeds)
    rows = [tuple(r.as_dict().values()) for r in reports]
    _write_csv(out.parent / f"{out.name}.trials.csv",
               ["trial"] + list(MetricsReport.csv_header().split(",")),
               [(seed,) + row for seed, row in zip(seeds, rows)])
    arr = np.array(rows, dtype=np.float64)
    mean, std = arr.mean(axis=0), arr.std(axis=0)
    _write_csv(out.parent / f"{out.name}.report.csv",
               MetricsReport.csv_header().split(","), [tuple(mean), tuple(std)])
    lines = [f"{k} = {m:.10g} +- {s:.10g}"
             for k, m, s in zip(MetricsReport.csv_header().split(","), mean, std)]
    (out.parent / f"{out.name}.report.txt").write_text(
        "\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return 0


def cmd_predict(cfg: RunConfig) -> int:
    model = load_model(cfg["model"])
    if not isinstance(model, MultiStateModel):
        raise DataError("predict needs a multistate model file")
    run_path = Path(cfg["run"])
    meta_path = run_path.with_suffix(".meta")
    rpm, rate = cfg["rpm"], cfg["rate"]
    if (rpm is None or rate is None) and meta_path.exists():
        meta = read_run_meta(meta_path)
        rpm = rpm if rpm is not None else float(meta["spindle_rpm"])
        rate = rate if rate is not None else float(meta["sampling_rate_hz"])
    if rpm is None or rate is None:
        raise UsageError("no sidecar found; supply --rpm and --rate")
    channels, wear = load_run_csv(run_path, rate)
    spec = WindowSpec(spindle_rpm=rpm, sampling_rate_hz=rate, stride=cfg["stride"])
    ds = build_dataset(channels, spec, wear)
    states, posteriors, raw, smoothed = estimate_wear_detailed(model, ds.frames)
    header = (["frame_index", "diagnosed_state"]
              + [f"posterior_{k}" for k in range(N_STATES)]
              + ["wear_estimate_um", "wear_smoothed_um"])
    rows = [(i, int(states[i])) + tuple(float(p) for p in posteriors[i])
            + (float(raw[i]), float(smoothed[i])) for i in range(len(ds))]
    Path(cfg["out"]).parent.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg["out"], header, rows)
    print(f"wrote {len(rows)} predictions to {cfg['out']}")
    return 0


def cmd_ablate_sensors(cfg: RunConfig) -> int:
    datasets = _load_runs(cfg["data"], cfg["stride"])
    subsets = [s.strip() for s in cfg["subsets"].split(";") if s.strip()]
    reg_config = _train_config(cfg, "prognosis-default", "regressor")

    def one_trial(seed: int):
        train_set, eval_sets = _split_runs(datasets, cfg["split-mode"],
                                           cfg["train-ratio"], seed)
        row = {}
        for subset in subsets:
            tr = _select_channels([train_set], subset)[0]
            tests = _select_channels(eval_sets, subset)
            hidden = dbn.draw_hidden_sizes(reg_config, substream(seed, f"arch-{subset}"))
            model, _ = dbn.train_regressor(tr.frames, tr.wear_targets,
                                           (tr.n_features,) + hidden + (1,),
                                           reg_config, seed)
            wear = np.concatenate([t.wear_targets for t in tests])
            pred = np.concatenate([dbn.predict_regression(model, t.frames)
                                   for t in tests])
            row[subset] = regression_report(wear, pred)
        return row

    seeds = [cfg["seed"] + i for i in range(cfg["trials"])]
    results = _map_trials(one_trial, seeds)
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for subset in subsets:
        rmses = np.array([r[subset].rmse for r in results])
        r2s = np.array([r[subset].r2score for r in results])
        mapes = np.array([r[subset].mape for r in results])
        rows.append((subset, rmses.mean(), rmses.std(), r2s.mean(), r2s.std(),
                     mapes.mean(), mapes.std()))
    _write_csv(out.parent / f"{out.name}.sensor_ablation.csv",
               ["subset", "rmse_mean", "rmse_std", "r2score_mean", "r2score_std",
                "mape_mean", "mape_std"], rows)
    for row in rows:
        print(f"{row[0]}: rmse {row[1]:.4g} +- {row[2]:.4g}")
    return 0


def cmd_compare_frameworks(cfg: RunConfig) -> int:
    datasets = _load_runs(cfg["data"], cfg["stride"])

    def one_trial(seed: int):
        train_set, eval_sets = _split_runs(datasets, cfg["split-mode"],
                                           cfg["train-ratio"], seed)
        mdp_cfg = _mdp_config(cfg)
        mdp_cfg = MdpTrainConfig(classifier=mdp_cfg.classifier,
                                 regressor=mdp_cfg.regressor,
                                 de=replace(mdp_cfg.de, seed=seed),
                                 min_state_samples=mdp_cfg.min_state_samples,
                                 smoothing_window=mdp_cfg.smoothing_window)
        model, _ = train_mdp(train_set, mdp_cfg, seed)
        wear, raw, smoothed, single = [], [], [], []
        for ds in eval_sets:
            _, _, r, sm = estimate_wear_detailed(model, ds.frames)
            wear.append(ds.wear_targets)
            raw.append(r)
            smoothed.append(sm)
            single.append(dbn.predict_regression(model.fallback, ds.frames))
        wear = np.concatenate(wear)
        return {
            "multistate-smoothed": regression_report(wear, np.concatenate(smoothed)),
            "multistate": regression_report(wear, np.concatenate(raw)),
            "single-state-dbn": regression_report(wear, np.concatenate(single)),
        }

    seeds = [cfg["seed"] + i for i in range(cfg["trials"])]
    results = _map_trials(one_trial, seeds)
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for framework in ("multistate-smoothed", "multistate", "single-state-dbn"):
        rmses = np.array([r[framework].rmse for r in results])
        r2s = np.array([r[framework].r2score for r in results])
        rows.append((framework, rmses.mean(), rmses.std(), r2s.mean(), r2s.std()))
    _write_csv(out.parent / f"{out.name}.frameworks.csv",
               ["framework", "rmse_mean", "rmse_std", "r2score_mean", "r2score_std"],
               rows)
    for row in rows:
        print(f"{row[0]}: rmse {row[1]:.4g} +- {row[2]:.4g}")
    return 0


_HANDLERS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "ablate-sensors": cmd_ablate_sensors,
    "compare-frameworks": cmd_compare_frameworks,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        file_values = parse_config_file(args.config) if args.config else {}
        cfg = RunConfig(args.command, args, file_values)
        return _HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
