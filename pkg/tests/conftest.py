import json
import shutil
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
DATA_DIR = TESTS_DIR / "data"
GOLDEN_DIR = TESTS_DIR / "golden"
CONTRACTS_DIR = TESTS_DIR.parent / "contracts"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def contracts_dir() -> Path:
    return CONTRACTS_DIR


@pytest.fixture
def corpus_copy(tmp_path) -> Path:
    """Mutable copy of the fixture corpus for failure-injection tests."""
    target = tmp_path / "data"
    shutil.copytree(DATA_DIR, target)
    return target


def load_schema(name: str) -> dict:
    path = CONTRACTS_DIR / "schemas" / f"{name}.schema.json"
    return json.loads(path.read_text(encoding="utf-8"))
