from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import write_sine_corpus  # noqa: E402


@pytest.fixture()
def sine_data_dir(tmp_path):
    """Two-file EDF corpus with 50 Hz contamination on every channel."""
    data = tmp_path / "data"
    write_sine_corpus(data, n_files=2, line_freq=50.0, seed=11)
    return data
