"""Shared fixtures."""

import pytest

from edgeflow.core.fit import fit_network
from edgeflow.experiments.generator import bail_network
from edgeflow.storage.model_file import save_model
from tests.networks import make_kite, make_med, make_tiny


@pytest.fixture
def tiny():
    return make_tiny()


@pytest.fixture
def med():
    return make_med()


@pytest.fixture
def kite():
    return make_kite()


@pytest.fixture(scope="session")
def bail():
    """Bail network at equal strengths with seed-0 scores."""
    return bail_network()


@pytest.fixture(scope="session")
def bail_fitted(bail):
    return fit_network(bail)


@pytest.fixture
def tiny_file(tmp_path, tiny):
    return str(save_model(tiny, tmp_path / "tiny.yaml"))


@pytest.fixture
def bail_file(tmp_path, bail):
    return str(save_model(bail, tmp_path / "bail.yaml"))
