import numpy as np
import pytest

from stnet.data import SyntheticConfig, generate_synthetic_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Ten clips per class on disk (manifest + containers)."""
    root = tmp_path_factory.mktemp("tiny")
    manifest, clips = generate_synthetic_dataset(SyntheticConfig(clips_per_class=10, seed=3), root)
    return root, manifest, clips


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for the acceptance summary and print it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def _report(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
