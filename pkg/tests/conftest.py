import json
import os

import matplotlib
import numpy as np
import pytest

matplotlib.use("Agg")

from src.data_generation.mackey_glass import MGParams, generate_mackey_glass  # noqa: E402
from src.processing.prepare_series import standardize  # noqa: E402

SIGMA = 1.0


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the long benchmark checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def mg_series():
    return generate_mackey_glass(MGParams(), 5000)


@pytest.fixture(scope="session")
def mg_scaled(mg_series):
    scaled, _ = standardize(mg_series)
    return scaled


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def smoke_doc(tmp_path):
    """A tiny experiment config as a dict, writing into tmp_path."""
    return {
        "name": "smoke",
        "sigma": SIGMA,
        "trials": 2,
        "n_train": 40,
        "n_test": 15,
        "checkpoint_stride": 10,
        "seed": 11,
        "snr_db": [None, 8],
        "learning_rates": [0.4],
        "threads": 1,
        "timing": False,
        "output_dir": str(tmp_path / "run"),
        "series": {"n_samples": 300, "burn_in": 50},
        "algorithms": [
            {"name": "LMS", "filter": "lms", "features": "identity"},
            {"name": "NT-KLMS-TS", "filter": "lms", "features": "ts", "degree": 2},
            {"name": "NT-KLMS-RFF1", "filter": "lms", "features": "rff1", "dim": 20},
            {"name": "NT-KLMS-GQ", "filter": "lms", "features": "gq", "dim": 20,
             "quadrature": {"rule": "dense", "points": 2}},
            {"name": "QKLMS", "filter": "qklms", "params": {"q_factor": 0.3}},
        ],
    }


@pytest.fixture
def write_config(tmp_path):
    def write(doc, name="config.json"):
        path = os.path.join(tmp_path, name)
        with open(path, "w") as f:
            json.dump(doc, f, indent=4)
        return path

    return write
