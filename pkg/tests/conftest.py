import pytest
from hypothesis import HealthCheck, settings

from amorsim.config import paper_default, validate_config

settings.register_profile(
    "ci", deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@pytest.fixture(scope="session")
def default_cfg():
    return validate_config(paper_default())
