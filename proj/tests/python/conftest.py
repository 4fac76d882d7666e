import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture
def data_dir():
    return ROOT / "data"


@pytest.fixture
def cli():
    exe = os.environ.get("ALPHALOGICS_CLI")
    if not exe:
        pytest.skip("ALPHALOGICS_CLI is not set")
    return exe
