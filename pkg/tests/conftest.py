import pytest

from squeezewell.config import reference_config
from squeezewell.pipeline import prepare


@pytest.fixture(scope="session")
def ref_cfg():
    return reference_config()


@pytest.fixture(scope="session")
def ref_stage(ref_cfg):
    return prepare(ref_cfg)


@pytest.fixture(scope="session")
def sweep_stages(ref_cfg):
    return [prepare(ref_cfg, L=L) for L in (6.0, 8.0, 10.0)]


@pytest.fixture(scope="session")
def free_stage(ref_cfg):
    return prepare(ref_cfg, lam=0.0)
