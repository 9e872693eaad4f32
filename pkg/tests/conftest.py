import pytest

from branequant.weights import WeightCache, WeightProvider

SAMPLES = 1_000_000
SEED = 0


@pytest.fixture(scope="session")
def cache(tmp_path_factory):
    """One weight cache for the whole run; k=2 weights are integrated once."""
    return WeightCache(tmp_path_factory.mktemp("weights") / "weights.jsonl")


@pytest.fixture(scope="session")
def provider(cache):
    return WeightProvider(cache, samples=SAMPLES, seed=SEED)


@pytest.fixture(scope="session")
def exact_provider(cache):
    return WeightProvider(cache, samples=SAMPLES, seed=SEED, exact=True)


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
