from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def flight_text() -> str:
    return (FIXTURES / "flight.conllu").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def flight_tree(flight_text):
    from sga import read_conllu

    return read_conllu(flight_text)[0]
