import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import numpy as np
import pytest

from csisense.config import PipelineConfig
from csisense.pipeline import featurize, simulate


def synthetic_features(subject_variation, n_subjects=14, reps=20, seed=0, noise=0.5):
    cfg = PipelineConfig.from_dict({
        "seed": seed,
        "simulation": {"n_subjects": n_subjects, "reps_per_class": reps,
                       "subject_variation": subject_variation, "noise_std": noise},
    })
    return featurize(simulate(cfg), cfg)


@pytest.fixture(scope="session")
def shared_archetypes():
    return synthetic_features(0.0)


@pytest.fixture(scope="session")
def varied_subjects():
    return synthetic_features(0.5)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[key])
