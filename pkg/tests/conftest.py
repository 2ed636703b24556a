import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# criterion id -> (passed, detail), filled by the acceptance suite
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture(scope="session", autouse=True)
def _null_table_cache(tmp_path_factory):
    """Keep Berk-Jones null tables out of the user's cache during tests."""
    old = os.environ.get("SIMSIG_CACHE_DIR")
    os.environ["SIMSIG_CACHE_DIR"] = str(tmp_path_factory.mktemp("bj-cache"))
    yield
    if old is None:
        os.environ.pop("SIMSIG_CACHE_DIR", None)
    else:
        os.environ["SIMSIG_CACHE_DIR"] = old


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")
