import functools

import numpy as np
import pytest

from twistfcs import formfactor, oracle
from twistfcs.twist import CountingSpec, Twist

REFERENCE_CASES = [
    ("x", (1, 0, 1)),
    ("x", (1, 1, 1)),
    ("y", (1, 0, 1)),
    ("y", (1, 1, 1)),
    ("y", (1, -1, 2)),
]


def case_id(case):
    axis, beta = case
    return f"sigma{axis}-" + "_".join(str(b) for b in beta)


@functools.lru_cache(maxsize=None)
def setup_for(axis: str, beta: tuple, L: int, branch: int = 0):
    cfg = oracle.ChainConfig(L, 1.0)
    return cfg, formfactor.prepare(Twist.pauli(axis), CountingSpec(beta), 0, cfg, branch)


@functools.lru_cache(maxsize=None)
def fcs_table(axis: str, beta: tuple, L: int, branch: int = 0):
    cfg = oracle.ChainConfig(L, 1.0)
    return formfactor.fcs_sum(Twist.pauli(axis), CountingSpec(beta), 0, cfg, branch=branch, with_oracle=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)
