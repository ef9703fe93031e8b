import numpy as np
import pytest

from urnflow.models import (
    build_replicator,
    build_selection_mutation,
    cyclic_mutation_example,
    hypercycle,
)


@pytest.fixture(scope="session")
def hyper5():
    """(model, system, A) for the 5-strategy hypercycle at b=1, d=2.5, nu=4."""
    return build_replicator(hypercycle(5))


@pytest.fixture(scope="session")
def hyper3():
    return build_replicator(hypercycle(3))


@pytest.fixture(scope="session")
def sm_fixture():
    params = cyclic_mutation_example()
    model, system = build_selection_mutation(params)
    return params, model, system


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
