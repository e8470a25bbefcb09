from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def bgs_workbook_path() -> Path:
    return FIXTURES / "bgs.fmea"


@pytest.fixture(scope="session")
def broken_workbook_path() -> Path:
    return FIXTURES / "broken.fmea"


@pytest.fixture(scope="session")
def bgs_workbook(bgs_workbook_path):
    from klafate.fmea import load_workbook

    return load_workbook(bgs_workbook_path)
