"""Shared fixtures for thermoctl tests."""
import math

import numpy as np
import pytest

from src.core.channels import bit_hamiltonian
from src.core.families import HamiltonianFamily
from src.core.quantum_core import DensityMatrix, Pair, ThermoContext, pauli, tensor

E = math.e


@pytest.fixture
def ctx():
    """Unit inverse temperature."""
    return ThermoContext(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def zz():
    return tensor(pauli("z"), pauli("z"))


@pytest.fixture
def bit_family():
    """Qubit gaps in [0.1, 1]."""
    return HamiltonianFamily.two_level_norm_bounded(0.1, 1.0)


@pytest.fixture
def cold_bit():
    """Excitation 0.05 at gap 1, below the thermal excitation 1/(1 + e)."""
    return Pair(DensityMatrix.excitation(0.05), bit_hamiltonian(1.0))


@pytest.fixture
def mixed_zz(zz):
    return Pair(DensityMatrix.maximally_mixed(4), zz)


def binary_entropy(p: float) -> float:
    return -sum(x * math.log(x) for x in (p, 1 - p) if x > 0)


def bit_delta_f(p_e: float, gap: float, beta: float = 1.0) -> float:
    """Closed-form Delta F of diag(1 - p_e, p_e) at gap `gap`."""
    return p_e * gap - binary_entropy(p_e) / beta + math.log1p(math.exp(-beta * gap)) / beta
