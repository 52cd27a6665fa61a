from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
TOY_DIR = REPO_ROOT / "data" / "toy"


@pytest.fixture(scope="session")
def toy_dir() -> Path:
    assert TOY_DIR.is_dir(), "bundled toy dataset missing; run scripts/build_toy_data.py"
    return TOY_DIR


@pytest.fixture(scope="session")
def toy_vectors(toy_dir):
    from ppikg.vectors import WordVectors

    return WordVectors.load(toy_dir / "vectors.txt")
