import pytest

from wignerflow.quantum import SystemConfig

CONFIGS = [(n, a) for n in (0, 1, 2) for a in (1.5, 2.5)]


@pytest.fixture(params=CONFIGS, ids=lambda p: f"n{p[0]}-a{p[1]}")
def cfg(request):
    return SystemConfig(*request.param)
