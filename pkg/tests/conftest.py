import numpy as np
import pytest

from parafeq.models import heat_torus, ks_interval_coronlu, ks_torus
from parafeq.spectral import ControlOperator, SpectralOperator
from parafeq.synthesis import synthesize


@pytest.fixture(scope="session")
def ks():
    return ks_torus(64)


@pytest.fixture(scope="session")
def ks_result(ks):
    op, B = ks
    return synthesize(op, B, 20.0, 24.0)


@pytest.fixture(scope="session")
def coronlu():
    return ks_interval_coronlu(64, 1.0)


@pytest.fixture(scope="session")
def heat():
    return heat_torus(64, 0.0)


def make_model(eigs, rows, s=0.0, **kw):
    return SpectralOperator(np.asarray(eigs, dtype=complex), **kw), ControlOperator(np.atleast_2d(rows), s)
