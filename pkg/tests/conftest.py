import pytest

from siplab.counterexample import build_instance


@pytest.fixture(scope="session")
def small_instance():
    """One shared pipeline instance with a reduced sweep budget for unit tests."""
    return build_instance(seed=42, n_dirs=1500, probe_pairs=32)
