import numpy as np
import pytest

from ldts.data import SynthConfig, generate_synthetic


@pytest.fixture(scope="session")
def small_dataset():
    return generate_synthetic(SynthConfig(n_target=300, C=3, d=6, noise_fraction=0.2, aux_types=2, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
