import pytest

from qdesign.circuit import CircuitParams
from qdesign.config import default_config_path, load_config


@pytest.fixture(scope="session")
def cfg():
    return load_config(default_config_path())


@pytest.fixture()
def device_params():
    """Extracted parameter set of the reference device (sweet spot)."""
    return CircuitParams(e_c=0.24, e_j0=45.0, e_l=128.0, d=0.32, c_total=81.0)
