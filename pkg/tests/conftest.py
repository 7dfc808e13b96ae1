import numpy as np
import pytest

from rcequalizer.harness.config import ExperimentConfig

ACCEPTANCE_LINES: list[str] = []


def small_config(**run) -> ExperimentConfig:
    """Desk-scale config shrunk to a few thousand symbols for fast tests."""
    cfg = ExperimentConfig(name="small")
    cfg.trainer.train_length = 3_000
    cfg.run.test_length = 3_000
    cfg.run.masks = 2
    cfg.channel.calibration_length = 10_000
    for k, v in run.items():
        setattr(cfg.run, k, v)
    return cfg


@pytest.fixture
def small_cfg():
    return small_config()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
