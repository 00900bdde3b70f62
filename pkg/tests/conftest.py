import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hsiclab.data import DATA_DIR_ENV, find_mnist  # noqa: E402

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"

# one line per acceptance criterion, printed again in the terminal summary
ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "invariant: dataset-free invariant suite")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def mnist_source(tmp_path_factory):
    """``(directory, is_proxy)`` for MNIST IDX files.

    Real files under ``$HSICLAB_DATA_DIR`` take precedence; otherwise stand-in
    files are written from the digit sample bundled with mlxtend.
    """
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        try:
            find_mnist(env, "train")
            find_mnist(env, "test")
            return Path(env), False
        except FileNotFoundError:
            pass
    pytest.importorskip("mlxtend")
    from mnist_proxy import write_proxy

    return write_proxy(tmp_path_factory.mktemp("mnist")), True
