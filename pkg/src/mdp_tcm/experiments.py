"""Seeded end-to-end experiment trials on the synthetic fleet.

Each trial regenerates its data from the trial seed, trains fresh models
and reports test metrics, so repeated trials give honest mean/std spreads.
The comparisons mirror the pipeline's claims: cost-evolved classification
vs plain argmax on imbalanced states, multi-state routing vs one global
regressor, smoothed vs raw estimates, and multi-sensor fusion vs single
channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import dbn
from .adaptive_de import DeConfig, evolve
from .cost_sensitive import predict_cs
from .metrics import classification_report, confusion, gmean, rmse
from .multistate import MdpTrainConfig, estimate_wear_detailed, train_mdp
from .signal_pipeline import (FrameDataset, N_STATES, SplitSpec, WindowSpec,
                              build_dataset, split)
from .synth import SynthConfig, generate_fleet
from .seeding import substream

# deliberately small training budgets: the directional comparisons hold at
# desk scale without paper-sized epoch counts
DESK_CLASSIFIER = dbn.TrainConfig(pretrain_epochs=10, finetune_epochs=300,
                                  learning_rate=0.03, batch_size=128,
                                  hidden_range=(5, 60))
DESK_REGRESSOR = dbn.TrainConfig(pretrain_epochs=10, finetune_epochs=300,
                                 learning_rate=0.003, batch_size=128,
                                 hidden_range=(5, 60))
DESK_DE = DeConfig(population_size=30, max_generations=50)

SINGLE_CHANNEL_SUBSETS = {"force": ["force"], "torque": ["torque"], "vib1_x": ["vib1_x"]}


def window_spec_for(config: SynthConfig, stride: int | None = None) -> WindowSpec:
    return WindowSpec(spindle_rpm=config.spindle_rpm,
                      sampling_rate_hz=config.sampling_rate_hz,
                      multiple=1, stride=stride)


def windowed_run(run, spec: WindowSpec) -> FrameDataset:
    return build_dataset(run.channels, spec, run.wear_trajectory)


@dataclass(frozen=True)
class TrialConfig:
    """Shared knobs for one seeded trial at desk scale."""

    synth: SynthConfig = field(default_factory=lambda: SynthConfig.desk(run_seconds=90.0))
    classifier: dbn.TrainConfig = DESK_CLASSIFIER
    regressor: dbn.TrainConfig = DESK_REGRESSOR
    de: DeConfig = DESK_DE
    n_train_runs: int = 2
    n_test_runs: int = 1
    smoothing_window: int = 50


def _fleet_datasets(trial: TrialConfig, seed: int):
    """Train pool plus per-run test datasets (run-level split, leakage free)."""
    synth = replace(trial.synth, seed=seed * 1000 + 17)
    spec = window_spec_for(synth)
    runs = generate_fleet(synth, trial.n_train_runs + trial.n_test_runs)
    datasets = [windowed_run(r, spec) for r in runs]
    train = FrameDataset.concat(datasets[:trial.n_train_runs])
    return train, datasets[trial.n_train_runs:]


def imbalance_trial(seed: int, trial: TrialConfig | None = None) -> dict:
    """Plain-argmax vs cost-evolved G-mean on an imbalanced state dataset."""
    trial = trial or TrialConfig()
    synth = replace(trial.synth, seed=seed * 1000 + 29)
    spec = window_spec_for(synth)
    pooled = FrameDataset.concat(
        [windowed_run(r, spec) for r in generate_fleet(synth, trial.n_train_runs)])
    train, test = split(pooled, SplitSpec(seed=seed))
    hidden = dbn.draw_hidden_sizes(trial.classifier, substream(seed, "arch-clf"))
    sizes = (train.n_features,) + hidden + (N_STATES,)
    model, _ = dbn.train_classifier(train.frames, train.state_labels, sizes,
                                    trial.classifier, seed)
    posteriors = dbn.predict_proba(model, test.frames)
    plain = np.argmax(posteriors, axis=1)
    costs, _ = evolve(model, train.frames, train.state_labels, replace(trial.de, seed=seed))
    tuned = predict_cs(posteriors, costs)
    return {
        "gmean_dbn": gmean(confusion(test.state_labels, plain, N_STATES)),
        "gmean_ecs": gmean(confusion(test.state_labels, tuned, N_STATES)),
        "report_dbn": classification_report(test.state_labels, plain, N_STATES),
        "report_ecs": classification_report(test.state_labels, tuned, N_STATES),
        "costs": costs,
    }


def framework_trial(seed: int, trial: TrialConfig | None = None) -> dict:
    """Multi-state vs single-state wear estimation on held-out runs.

    The single-state baseline is the pipeline's own fallback regressor
    (trained on all frames with the same budget), so the comparison
    isolates the multi-state routing.
    """
    trial = trial or TrialConfig()
    train, test_runs = _fleet_datasets(trial, seed)
    mdp_config = MdpTrainConfig(classifier=trial.classifier,
                                regressor=trial.regressor,
                                de=replace(trial.de, seed=seed),
                                smoothing_window=trial.smoothing_window)
    model, _ = train_mdp(train, mdp_config, seed)
    specialist_better, specialist_total = 0, 0
    for state, reg in model.regressors.items():
        idx = train.state_labels == state
        err_s = rmse(train.wear_targets[idx], dbn.predict_regression(reg, train.frames[idx]))
        err_g = rmse(train.wear_targets[idx],
                     dbn.predict_regression(model.fallback, train.frames[idx]))
        specialist_total += 1
        specialist_better += err_s <= err_g
    raw_all, smooth_all, single_all, wear_all = [], [], [], []
    per_run = []
    for ds in test_runs:
        _, _, raw, smoothed = estimate_wear_detailed(model, ds.frames)
        single = dbn.predict_regression(model.fallback, ds.frames)
        per_run.append({
            "rmse_raw": rmse(ds.wear_targets, raw),
            "rmse_smoothed": rmse(ds.wear_targets, smoothed),
            "rmse_single": rmse(ds.wear_targets, single),
        })
        raw_all.append(raw)
        smooth_all.append(smoothed)
        single_all.append(single)
        wear_all.append(ds.wear_targets)
    wear = np.concatenate(wear_all)
    return {
        "rmse_mdp": rmse(wear, np.concatenate(raw_all)),
        "rmse_mdp_smoothed": rmse(wear, np.concatenate(smooth_all)),
        "rmse_single": rmse(wear, np.concatenate(single_all)),
        "specialist_wins": (specialist_better, specialist_total),
        "per_run": per_run,
        "model": model,
    }


def sensor_subset_trial(seed: int, subsets: dict, trial: TrialConfig | None = None) -> dict:
    """Test RMSE of one regressor per channel subset, same budget each."""
    trial = trial or TrialConfig()
    train, test_runs = _fleet_datasets(trial, seed)
    results = {}
    for name, channels in subsets.items():
        tr = train if channels is None else train.select_channels(channels)
        tests = test_runs if channels is None else [t.select_channels(channels) for t in test_runs]
        hidden = dbn.draw_hidden_sizes(trial.regressor, substream(seed, f"arch-{name}"))
        sizes = (tr.n_features,) + hidden + (1,)
        model, _ = dbn.train_regressor(tr.frames, tr.wear_targets, sizes,
                                       trial.regressor, seed)
        preds = [dbn.predict_regression(model, t.frames) for t in tests]
        wear = np.concatenate([t.wear_targets for t in tests])
        results[name] = rmse(wear, np.concatenate(preds))
    return results


def summarize_trials(rows: list) -> dict:
    """Column-wise mean and std over a list of per-trial dicts."""
    keys = [k for k in rows[0] if np.isscalar(rows[0][k])]
    out = {}
    for k in keys:
        vals = np.array([r[k] for r in rows], dtype=np.float64)
        out[k] = (float(vals.mean()), float(vals.std()))
    return out
