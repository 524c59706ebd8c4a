import sys
import shutil
from datetime import datetime

import pytest

from roadghg import pipeline
from roadghg.ingest import CountRecord
from roadghg.synth import build_fixture
from roadghg.vehicles import LENGTH_CLASSES, Direction


def make_record(ts="2017-03-01T08:15", counts=(12, 3, 4, 1), speed=98.2, site="site1", direction="A"):
    counts = dict(zip(LENGTH_CLASSES, counts))
    total = None if any(v is None for v in counts.values()) else sum(counts.values())
    return CountRecord(datetime.fromisoformat(ts), site, Direction(direction), counts, total, speed)


@pytest.fixture
def record():
    return make_record()


@pytest.fixture(scope="session")
def trained_fixture(tmp_path_factory):
    """Two-direction synthetic fixture with trained weights; returns the config path."""
    root = tmp_path_factory.mktemp("fixture")
    cfg_path = build_fixture(root, seed=7, days=30)
    pipeline.run_train(pipeline.load_config(cfg_path))
    return cfg_path


@pytest.fixture
def fixture_copy(trained_fixture, tmp_path):
    """A private copy of the trained fixture, safe to write into."""
    dst = tmp_path / "fx"
    shutil.copytree(trained_fixture.parent, dst)
    return dst / "config.json"


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance and acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.RESULTS:
            terminalreporter.write_line(line)
