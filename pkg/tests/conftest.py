"""Shared Monte Carlo fixtures for the benchmark-scale tests.

These are the expensive runs (two full comparison tables and the
reduced-order ML column); session scope lets the acceptance suite and the
benchmark invariants share them.
"""

import pytest

import wienerid as w

from suite_config import MASTER_SEED, N_OBS, table_config


@pytest.fixture(scope="session")
def gaussian_experiment():
    return w.run_experiment(table_config(w.DistributionKind.GAUSSIAN_WHITE))


@pytest.fixture(scope="session")
def uniform_experiment():
    return w.run_experiment(table_config(w.DistributionKind.UNIFORM_WHITE))


@pytest.fixture(scope="session")
def ml_desk_experiment():
    config = w.ExperimentConfig(
        theta_o=0.5, sigma_v2=0.2, sigma_e2=0.1, sigma_u2=1 / 3,
        input_kind=w.DistributionKind.GAUSSIAN_WHITE, n_obs=N_OBS,
        realizations=200, methods=("ML",), master_seed=MASTER_SEED, desk_scale=True,
    )
    return w.run_experiment(config)
