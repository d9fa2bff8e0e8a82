import random

import pytest


def pytest_addoption(parser):
    parser.addoption("--seed", action="store", type=int, default=20240611,
                     help="Seed for the randomized property tests (default: 20240611).")


@pytest.fixture
def seed(request):
    return request.config.getoption("--seed")


@pytest.fixture
def rng(seed):
    return random.Random(seed)
