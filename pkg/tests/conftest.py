import pytest

from dmnlife import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile jitted kernels once so individual tests are not charged for it
    _kernels.warmup()
