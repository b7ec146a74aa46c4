import shutil
import sys
from pathlib import Path

import pytest

VIZ_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(VIZ_ROOT))

GOLDEN = Path(__file__).resolve().parent / "data" / "run"


@pytest.fixture()
def run_dir(tmp_path):
    """A throwaway copy of the golden run directory."""
    dest = tmp_path / "run"
    shutil.copytree(GOLDEN, dest)
    return dest
