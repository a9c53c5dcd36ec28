import numpy as np
import pytest

from simplexquant.synth import SynthSpec, generate

ACCEPTANCE_RESULTS: dict = {}


def record(criterion: int, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def random3():
    """Three-class overlapping synthetic data: (training, pool)."""
    return generate(SynthSpec(n_classes=3, n_features=10, train_size=300, pool_per_class=400, seed=5))


@pytest.fixture(scope="session")
def separable3():
    return generate(
        SynthSpec(n_classes=3, n_features=9, train_size=300, pool_per_class=2000, profile="disjoint", seed=2)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
