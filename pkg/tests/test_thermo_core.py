"""Unit tests for Gibbs states and free energies."""
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import ValidationError
from src.core.quantum_core import (
    DensityMatrix,
    HermitianOperator,
    Pair,
    ThermoContext,
    pauli,
    relative_entropy,
    tensor,
)
from src.core.thermo_core import (
    delta_f,
    delta_f_via_relative_entropy,
    free_energy,
    gibbs_hamiltonian,
    gibbs_state,
    log_partition,
    peierls_residual,
    thermal_excitation,
)
from src.core.channels import bit_hamiltonian
from src.utils.sampling import random_density, random_hermitian
from tests.conftest import bit_delta_f

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def test_log_partition_large_energies():
    """No overflow when beta * ||H|| is in the hundreds."""
    ctx = ThermoContext(1.0)
    assert log_partition(HermitianOperator.diagonal([0.0, 800.0]), ctx) == pytest.approx(0.0, abs=1e-12)
    assert log_partition(HermitianOperator.diagonal([-800.0, -800.0]), ctx) == pytest.approx(800 + math.log(2))


def test_gibbs_state_of_bit(ctx):
    """Test the Gibbs state of a bit."""
    omega = gibbs_state(bit_hamiltonian(1.0), ctx)
    assert omega.state.matrix[1, 1].real == pytest.approx(1 / (1 + math.e), abs=1e-14)
    assert omega.free_energy == pytest.approx(-math.log(1 + math.exp(-1.0)), abs=1e-14)


def test_thermal_excitation_matches_gibbs_state(ctx):
    """Test the thermal excitation against the Gibbs state."""
    for gap in (0.1, 1.0, 5.0):
        expected = gibbs_state(bit_hamiltonian(gap), ctx).state.matrix[1, 1].real
        assert thermal_excitation(gap, ctx) == pytest.approx(expected, abs=1e-14)


def test_free_energy_report(ctx, cold_bit):
    """Test the free energy report fields."""
    report = free_energy(cold_bit, ctx)
    assert report.energy == pytest.approx(0.05)
    assert report.free_energy == pytest.approx(report.energy - report.entropy)
    assert report.delta_f == pytest.approx(bit_delta_f(0.05, 1.0), abs=1e-12)


def test_delta_f_vanishes_at_equilibrium(ctx, rng):
    """Test that Delta F vanishes at equilibrium."""
    h = random_hermitian(3, rng)
    assert delta_f(gibbs_state(h, ctx).pair, ctx) == pytest.approx(0.0, abs=1e-12)


@given(seeds, st.integers(min_value=2, max_value=4), st.floats(min_value=0.1, max_value=5.0))
@settings(max_examples=50, deadline=None)
def test_delta_f_equals_relative_entropy_over_beta(seed, d, beta):
    """Test Delta F against D(rho """
    rng = np.random.default_rng(seed)
    ctx = ThermoContext(beta)
    pair = Pair(random_density(d, rng), random_hermitian(d, rng))
    value = delta_f(pair, ctx)
    assert value >= -1e-12
    assert value == pytest.approx(delta_f_via_relative_entropy(pair, ctx), abs=1e-9)


@pytest.mark.parametrize("gap", [30.0, 2000.0])
def test_relative_entropy_form_on_large_gaps(gap):
    """Underflowing Gibbs weights still count as support: Delta F = gap/2 - ln 2 + ln(1 + e^{-gap})."""
    ctx = ThermoContext(1.0)
    pair = Pair(DensityMatrix.maximally_mixed(2), bit_hamiltonian(gap))
    expected = gap / 2 - math.log(2) + math.log1p(math.exp(-gap))
    assert delta_f_via_relative_entropy(pair, ctx) == pytest.approx(expected, rel=1e-12)
    assert delta_f(pair, ctx) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("beta", [4.0, 5.0, 20.0])
def test_relative_entropy_form_at_low_temperature(beta):
    """Both Delta F routes agree to 1e-8 when beta * ||H|| is large."""
    rng = np.random.default_rng(0)
    ctx = ThermoContext(beta)
    pair = Pair(random_density(4, rng), random_hermitian(4, rng))
    assert delta_f_via_relative_entropy(pair, ctx) == pytest.approx(delta_f(pair, ctx), abs=1e-8)


def test_peierls_residual_closed_form(ctx):
    """Test the residual for sigma_z and sigma_x."""
    expected = math.log(2 * math.cosh(math.sqrt(2))) - math.log(2 * math.cosh(1.0))
    assert peierls_residual(pauli("z"), pauli("x"), ctx) == pytest.approx(expected, abs=1e-12)


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_peierls_residual_is_non_negative(seed):
    """Test that the residual is non-negative."""
    rng = np.random.default_rng(seed)
    ctx = ThermoContext(float(rng.uniform(0.2, 3.0)))
    assert peierls_residual(random_hermitian(3, rng), random_hermitian(3, rng), ctx) >= -1e-12


@given(seeds, st.integers(min_value=2, max_value=5), st.floats(min_value=0.1, max_value=5.0))
@settings(max_examples=50, deadline=None)
def test_gibbs_state_minimises_free_energy(seed, d, beta):
    """No state beats omega_H at fixed H and beta."""
    rng = np.random.default_rng(seed)
    ctx = ThermoContext(beta)
    h = random_hermitian(d, rng)
    equilibrium = gibbs_state(h, ctx).free_energy
    assert free_energy(Pair(random_density(d, rng), h), ctx).free_energy >= equilibrium - 1e-12


@given(seeds, st.integers(min_value=2, max_value=5), st.floats(min_value=0.2, max_value=3.0))
@settings(max_examples=50, deadline=None)
def test_peierls_residual_is_relative_entropy(seed, d, beta):
    """The residual is D(omega_A || omega_{A+B})/beta."""
    rng = np.random.default_rng(seed)
    ctx = ThermoContext(beta)
    a, b = random_hermitian(d, rng), random_hermitian(d, rng)
    divergence = relative_entropy(gibbs_state(a, ctx).state, gibbs_state(a + b, ctx).state)
    assert peierls_residual(a, b, ctx) == pytest.approx(divergence / beta, abs=1e-8)


def test_peierls_residual_for_local_field_on_zz(ctx):
    """B = 0.3 (1 (x) sigma_z) has zero mean in omega_V but still a positive residual."""
    v = tensor(pauli("z"), pauli("z"))
    b = 0.3 * tensor(HermitianOperator.identity(2), pauli("z"))
    assert b.expectation(gibbs_state(v, ctx).state) == pytest.approx(0.0, abs=1e-10)
    expected = math.log((math.cosh(1.3) + math.cosh(0.7)) / (2 * math.cosh(1.0)))
    residual = peierls_residual(v, b, ctx)
    assert residual > 0
    assert residual == pytest.approx(expected, abs=1e-12)


def test_peierls_dimension_mismatch(ctx):
    """Test that the residual checks dimensions."""
    with pytest.raises(ValidationError):
        peierls_residual(pauli("z"), HermitianOperator.zeros(3), ctx)


def test_gibbs_hamiltonian_inverts_gibbs_state(ctx, rng):
    """Test that the modular Hamiltonian reproduces the state."""
    rho = random_density(3, rng)
    h_star = gibbs_hamiltonian(rho, ctx)
    assert h_star.spectrum[0] == pytest.approx(0.0, abs=1e-12)
    assert gibbs_state(h_star, ctx).state.allclose(rho, tol=1e-10)


def test_gibbs_hamiltonian_floors_kernel(ctx):
    """Test that kernels get finite energies."""
    h_star = gibbs_hamiltonian(DensityMatrix.pure([1, 0]), ctx)
    assert math.isfinite(h_star.spectrum[-1])
    assert h_star.spectrum[-1] == pytest.approx(-math.log(1e-15), rel=1e-6)


@pytest.mark.performance
def test_peierls_residual_full_suite():
    """Test 10^4 random pairs within the time budget."""
    rng = np.random.default_rng(8)
    ctx = ThermoContext(1.0)
    start = time.perf_counter()
    worst = min(peierls_residual(random_hermitian(int(d), rng), random_hermitian(int(d), rng), ctx)
                for d in rng.integers(2, 9, size=10000))
    assert worst >= -1e-10
    assert time.perf_counter() - start < 30.0
