import pytest

from defextract.crf import TrainConfig, train
from defextract.synthetic import load_shipped_corpus


@pytest.fixture
def shipped():
    return load_shipped_corpus()


@pytest.fixture(scope="session")
def trained_model():
    return train(load_shipped_corpus(), config=TrainConfig(epochs=15)).model


def pytest_terminal_summary(terminalreporter):
    from fixtures import ACCEPTANCE_RESULTS

    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
