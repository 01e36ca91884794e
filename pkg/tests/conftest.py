import numpy as np
import pytest

from privtsf import runner
from privtsf.forecaster import TrainConfig
from privtsf.synth import GeneratorConfig


@pytest.fixture(scope="session")
def small_wb():
    """Small trained workbench shared by augmentation and runner tests.

    Deliberately overfit a little so membership signal exists; stays under
    half a minute to build.
    """
    cfg = runner.RunConfig(
        method="baseline",
        seed=23,
        generator=GeneratorConfig(n_episodes=300, seed=23),
        train=TrainConfig(learning_rate=0.02, batch_size=32, max_epochs=60, hidden_dim=32, n=32, horizon=24, seed=23),
        baseline_epochs=300,
        max_train_windows=150,
        max_eval_windows=400,
    )
    return cfg, runner.build_workbench(cfg)


@pytest.fixture(scope="session")
def small_tau(small_wb):
    _, wb = small_wb
    from privtsf.metrics import mse_set

    return mse_set(wb.train_pts, wb.baseline_params)
