import os
import pytest
import tempfile
from pathlib import Path
import sys

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

# Keep settings, logs and stores out of the real home directory; must happen before
# the package creates its logger.
os.environ["GENERATIVEMPC_HOME"] = tempfile.mkdtemp(prefix="generativempc-tests-")

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"


@pytest.fixture
def data_home(tmp_path, monkeypatch):
    """Fresh data root for one test"""
    home = tmp_path / "home"
    monkeypatch.setenv("GENERATIVEMPC_HOME", str(home))
    return home


@pytest.fixture(autouse=True)
def reset_store_override():
    """Automatically reset the episode store path override after each test"""
    yield

    try:
        from generativempc.db import episodes
        episodes.set_store_path(None)
    except ImportError:
        pass


@pytest.fixture
def seeded_store():
    from generativempc.semantics.seeds import seed_store
    return seed_store("sim")


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR
