import pytest

from mdp_tcm import cli


def run_cli(args):
    return cli.main(list(args))


# training-size flags accepted by every train-ish command
TRAIN_FLAGS = [
    "--pretrain-epochs", "5", "--finetune-epochs", "150",
    "--classifier-learning-rate", "0.01", "--regressor-learning-rate", "0.003",
    "--batch-size", "64", "--hidden-range", "6,16",
]

# extra flags for commands that evolve costs / smooth estimates
DE_FLAGS = [
    "--de-population", "10", "--de-generations", "12",
    "--smoothing-window", "10",
]


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    """Small desk-scale fleet shared by the CLI tests."""
    out = tmp_path_factory.mktemp("runs")
    code = run_cli(["generate", "--out", str(out), "--runs", "3", "--seed", "7",
                    "--desk-scale", "--run-seconds", "40", "--skew", "8"])
    assert code == 0
    return out


@pytest.fixture(scope="session")
def multistate_model(tmp_path_factory, data_dir):
    """One trained multistate model file shared by evaluate/predict tests."""
    out = tmp_path_factory.mktemp("models") / "pipeline.model"
    code = run_cli(["train", "--data", str(data_dir), "--out", str(out),
                    "--kind", "multistate", "--seed", "5",
                    "--train-ratio", "1.0"] + TRAIN_FLAGS + DE_FLAGS)
    assert code == 0
    return out
