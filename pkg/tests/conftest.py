import shutil
from datetime import datetime, timezone
from pathlib import Path

import pytest

from ragdesk.config import load_config
from ragdesk.service import ServiceState

FIXTURES = Path(__file__).parent / "fixtures"

FIXED_NOW = datetime(2025, 6, 2, 12, 0, 0, tzinfo=timezone.utc)


def fixed_clock():
    return FIXED_NOW


@pytest.fixture
def fixture_env(tmp_path):
    """Copy of the committed fixture tree, safe to mutate."""
    target = tmp_path / "fx"
    shutil.copytree(FIXTURES, target)
    return target


@pytest.fixture
def service_state(fixture_env):
    """Fully wired components against the fixture corpus, indexes refreshed."""
    config = load_config(fixture_env / "config.yaml")
    state = ServiceState(config, clock=fixed_clock)
    state.run_refresh()
    return state
