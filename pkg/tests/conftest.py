import os
import tempfile

import pytest

# config.py builds its singleton on import; keep it away from the source tree
os.environ.setdefault('EFX_CONFIG', os.path.join(tempfile.mkdtemp(prefix='efx-test-'), 'efx_config.json'))

from generators import example_one
from logger import LogHub, MemorySink, set_hub
from models import Instance, PartialAllocation


@pytest.fixture
def memory_sink():
    return MemorySink()

@pytest.fixture(autouse=True)
def hub(memory_sink):
    """Synchronous in-memory logging for every test"""
    hub = LogHub([memory_sink], synchronous=True, verbose=True, debug=True)
    previous = set_hub(hub)
    yield hub
    set_hub(previous)

@pytest.fixture
def example():
    return example_one()

@pytest.fixture
def example_inst(example):
    return example.to_instance()

@pytest.fixture
def isolated_config(tmp_path, monkeypatch):
    from config import config
    monkeypatch.setenv('EFX_CONFIG', str(tmp_path / 'efx_config.json'))
    monkeypatch.setenv('EFX_CRASH_DIR', str(tmp_path / 'crashes'))
    monkeypatch.delenv('EFX_DEBUG', raising=False)
    config.reload()
    yield config
    monkeypatch.undo()
    config.reload()

def alloc(bundles, m):
    return PartialAllocation.from_lists(bundles, m)

def inst(rows):
    return Instance.from_rows(rows)
