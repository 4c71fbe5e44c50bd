import os

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def params_1e4():
    from blab.params import ScalingParams
    return ScalingParams(1e4, "0.55", "0.01")


@pytest.fixture(scope="session")
def point_1e4(params_1e4):
    from blab.pipeline import evaluate
    from blab.potential import soft_sphere
    return evaluate(params_1e4, soft_sphere())


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("BLAB_CACHE_DIR", os.fspath(tmp_path / "cache"))
    return tmp_path / "cache"


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
