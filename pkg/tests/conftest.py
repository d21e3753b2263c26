import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_config(epochs=6, ratio=0.0, seed=0, **schedule):
    """A config small enough to train in a few seconds."""
    from segharmony.data import DisturbanceConfig, GeneratorConfig
    from segharmony.model import EncoderConfig
    from segharmony.pipeline import ExperimentConfig, PoolConfig
    from segharmony.training import Schedule, TrainRunConfig

    sched = dict(E_eta=3, E_g=1, N_l=5, epochs=epochs)
    sched.update(schedule)
    return ExperimentConfig(
        generator=GeneratorConfig(n_intervals=16, runs_per_interval=4),
        disturbance=DisturbanceConfig(ratio=ratio, seed=seed),
        pools=PoolConfig(window_len=16, stride=8, interval_len=64, per_level_train=4,
                         per_level_val=2, per_level_test=2),
        train=TrainRunConfig(batch_size=8, seed=seed, schedule=Schedule(**sched),
                             encoder=EncoderConfig(d=8, d_ffn=16, n_heads=2, n_layers=1,
                                                   conv_channels=(4, 4, 8), dropout=0.0)),
        data_seed=seed,
    )


@pytest.fixture
def tiny():
    return tiny_config


# acceptance bookkeeping: criterion -> list of (part, passed, detail)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name}: {d}" for name, _, d in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  ({detail})")
