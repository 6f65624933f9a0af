import pathlib
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))


def corpus(name: str) -> str:
    return (CORPUS / name).read_text()


def corpus_path(name: str) -> str:
    return str(CORPUS / name)


@pytest.fixture(scope="session")
def solver():
    from overture.constraints import shared_solver
    return shared_solver()
