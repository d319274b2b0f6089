from pathlib import Path

import pytest

from patent_highlight.corpus import write_corpus
from patent_highlight.synthetic import synthetic_corpus

FIXTURES = Path(__file__).parent / "fixtures"
BULK_FIXTURE = FIXTURES / "ipg200107_fixture.xml"


@pytest.fixture(scope="session")
def bulk_bytes() -> bytes:
    return BULK_FIXTURE.read_bytes()


@pytest.fixture(scope="session")
def synth():
    return synthetic_corpus(100, seed=0)


@pytest.fixture(scope="session")
def synth_csv(tmp_path_factory, synth):
    path = tmp_path_factory.mktemp("corpus") / "synthetic.csv"
    write_corpus(synth, path)
    return path


# acceptance criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k)):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {status}  {detail}")
