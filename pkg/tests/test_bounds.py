"""Unit tests for penalty terms, work bounds, passivity certificates and the worked examples."""
import math
import time

import numpy as np
import pytest

from src.core.bounds import (
    BOUND_UPPER,
    FamilyKind,
    HamiltonianFamily,
    OrbitKind,
    check_second_law,
    cyclic_work_bound,
    example_i_analysis,
    example_ii_analysis,
    example_ii_critical_t,
    example_ii_curves,
    example_ii_gap,
    involution_factors,
    local_passivity_certificate,
    penalty_term,
    second_law_bound,
)
from src.core.channels import bit_hamiltonian
from src.core.errors import UnsupportedFamilyError, ValidationError
from src.core.protocols import random_protocol, run_protocol
from src.core.quantum_core import (
    DensityMatrix,
    HermitianOperator,
    Pair,
    ThermoContext,
    pauli,
    tensor,
    tensor_all,
)
from src.core.thermo_core import delta_f, gibbs_state
from src.utils.sampling import random_density, random_hermitian
from tests.conftest import bit_delta_f

LN_COSH_1 = math.log(math.cosh(1.0))
CRITICAL_FIELD = math.atanh((math.e ** 2 - 1) / (2 * math.e ** 2))


def example_ii_work(t: float) -> float:
    return t * math.tanh(t) - math.log(math.cosh(t))


class TestPenaltyTerm:
    def test_unrestricted_is_free(self, ctx, rng):
        """Test that the unrestricted family has zero penalty."""
        pair = Pair(random_density(3, rng), random_hermitian(3, rng))
        report = penalty_term(pair, HamiltonianFamily.unrestricted(), ctx)
        assert report.penalty == 0.0
        assert gibbs_state(report.minimizer_h, ctx).state.allclose(pair.state, tol=1e-10)

    def test_unrestricted_pure_state_is_free(self, ctx):
        """Test that a rank-deficient state still has exactly zero penalty."""
        pair = Pair(DensityMatrix.excitation(0.0), bit_hamiltonian(1.0))
        report = penalty_term(pair, HamiltonianFamily.unrestricted(), ctx)
        assert report.penalty == 0.0
        assert np.all(np.isfinite(report.minimizer_h.spectrum))
        assert delta_f(Pair(pair.state, report.minimizer_h), ctx) == pytest.approx(0.0, abs=1e-12)

    def test_cold_bit_penalty_is_its_own_delta_f(self, ctx, cold_bit, bit_family):
        """Test that a cold bit loses its whole free energy to the gap window."""
        report = penalty_term(cold_bit, bit_family, ctx)
        expected = 0.05 - (-(0.05 * math.log(0.05) + 0.95 * math.log(0.95))) + math.log(1 + math.exp(-1))
        assert report.penalty == pytest.approx(expected, abs=1e-9)
        assert report.minimizer_h.spectrum[1] == pytest.approx(1.0, abs=1e-9)
        assert report.method == "two_level:passive_reduction"

    def test_inverted_bit_has_no_penalty(self, ctx, bit_family):
        """Test that an inverted bit whose matching gap is allowed pays nothing."""
        pair = Pair(DensityMatrix.excitation(0.6), bit_hamiltonian(1.0))
        report = penalty_term(pair, bit_family, ctx)
        assert report.penalty == pytest.approx(0.0, abs=1e-12)
        assert report.minimizer_h.spectrum[1] == pytest.approx(math.log(1.5), abs=1e-6)
        assert report.minimizer_state.matrix[0, 0].real == pytest.approx(0.6)

    def test_reduction_agrees_with_direct_search(self, ctx, bit_family, rng):
        """Test the one-dimensional reduction against a direct gap search."""
        for _ in range(5):
            pair = Pair(random_density(2, rng), bit_hamiltonian(1.0))
            reduced = penalty_term(pair, bit_family, ctx)
            direct = penalty_term(pair, bit_family, ctx, use_passive_reduction=False)
            assert direct.method == "two_level:direct_search"
            assert direct.penalty == pytest.approx(reduced.penalty, abs=1e-6)

    def test_two_level_needs_qubit(self, ctx, bit_family):
        """Test that the norm-bounded family rejects non-qubit pairs."""
        pair = Pair(DensityMatrix.maximally_mixed(3), HermitianOperator.zeros(3))
        with pytest.raises(ValidationError):
            penalty_term(pair, bit_family, ctx)

    def test_two_level_needs_full_orbit(self, ctx, cold_bit):
        """Test that the norm-bounded family only supports the full orbit."""
        family = HamiltonianFamily(kind=FamilyKind.TWO_LEVEL_NORM_BOUNDED, orbit_kind=OrbitKind.FIXED_STATE,
                                   delta_min=0.1, delta_max=1.0)
        with pytest.raises(UnsupportedFamilyError):
            penalty_term(cold_bit, family, ctx)

    def test_local_fixed_state(self, ctx, zz, mixed_zz):
        """Test the fixed-state penalty for sigma_z (x) sigma_z."""
        report = penalty_term(mixed_zz, HamiltonianFamily.local(zz, (2, 2)), ctx, seed=0)
        assert report.penalty == pytest.approx(LN_COSH_1, abs=1e-7)
        assert report.method == "local:fixed_state"

    def test_local_fixed_state_needs_mixed_state(self, ctx, zz, rng):
        """Test that the fixed-state orbit requires the maximally mixed state."""
        pair = Pair(random_density(4, rng), zz)
        with pytest.raises(UnsupportedFamilyError):
            penalty_term(pair, HamiltonianFamily.local(zz, (2, 2)), ctx)

    def test_local_full_orbit_on_mixed_state(self, ctx, zz, mixed_zz):
        """Test the full-orbit penalty on the maximally mixed state."""
        family = HamiltonianFamily.local(zz, (2, 2), OrbitKind.FULL_UNITARY_GROUP)
        report = penalty_term(mixed_zz, family, ctx, seed=0)
        assert report.penalty == pytest.approx(LN_COSH_1, abs=1e-7)

    def test_local_full_orbit_beats_starting_point(self, ctx, zz, rng):
        """Test that the full orbit never does worse than Delta F of the start."""
        pair = Pair(random_density(4, rng), zz)
        family = HamiltonianFamily.local(zz, (2, 2), OrbitKind.FULL_UNITARY_GROUP)
        report = penalty_term(pair, family, ctx, seed=1)
        assert family.contains(report.minimizer_h)
        assert np.allclose(report.minimizer_state.spectrum, pair.state.spectrum, atol=1e-10)
        assert report.penalty <= delta_f(pair, ctx) + 1e-12

    def test_local_sampled_is_an_upper_bound(self, ctx, zz, rng):
        """Test that the sampled orbit is reported as an upper bound."""
        pair = Pair(random_density(4, rng), zz)
        family = HamiltonianFamily.local(zz, (2, 2), OrbitKind.SAMPLED_PRODUCT_UNITARIES)
        report = penalty_term(pair, family, ctx, seed=2)
        assert report.bound_direction == BOUND_UPPER
        assert report.penalty <= delta_f(pair, ctx) + 1e-12
        assert family.contains(report.minimizer_h)

    def test_local_dimension_mismatch(self, ctx, zz, cold_bit):
        """Test that local penalties check the state dimension."""
        with pytest.raises(ValidationError):
            penalty_term(cold_bit, HamiltonianFamily.local(zz, (2, 2)), ctx)

    def test_summary_fields(self, ctx, cold_bit, bit_family):
        """Test the keys of the penalty summary."""
        summary = penalty_term(cold_bit, bit_family, ctx).summary()
        assert set(summary) == {"penalty", "method", "bound_direction", "minimizer_spectrum", "evaluations"}


class TestSecondLaw:
    def test_cyclic_bound_unrestricted_is_delta_f(self, ctx, cold_bit):
        """Test that the unrestricted cyclic bound equals Delta F."""
        bound = cyclic_work_bound(cold_bit, HamiltonianFamily.unrestricted(), ctx)
        assert bound == pytest.approx(bit_delta_f(0.05, 1.0), abs=1e-12)

    def test_cold_bit_cannot_give_work_by_contact(self, ctx, cold_bit, bit_family):
        """Test that a cold bit in the gap window yields no cyclic work."""
        assert cyclic_work_bound(cold_bit, bit_family, ctx) == pytest.approx(0.0, abs=1e-9)

    def test_bound_uses_given_penalty(self, ctx, cold_bit, bit_family):
        """Test that a precomputed penalty gives the same bound."""
        penalty = penalty_term(cold_bit, bit_family, ctx)
        final = gibbs_state(cold_bit.hamiltonian, ctx).pair
        assert second_law_bound(cold_bit, final, bit_family, ctx, penalty) == pytest.approx(
            second_law_bound(cold_bit, final, bit_family, ctx))

    @pytest.mark.parametrize("family_name", ["unrestricted", "two_level", "local"])
    def test_random_protocols_respect_bound(self, ctx, rng, zz, family_name):
        """Test random protocols against the restricted second law."""
        if family_name == "unrestricted":
            family = HamiltonianFamily.unrestricted()
            pairs = [Pair(random_density(3, rng), random_hermitian(3, rng)) for _ in range(3)]
        elif family_name == "two_level":
            family = HamiltonianFamily.two_level_norm_bounded(0.1, 1.0)
            pairs = [Pair(random_density(2, rng), bit_hamiltonian(1.0)) for _ in range(3)]
        else:
            family = HamiltonianFamily.local(zz, (2, 2))
            pairs = [Pair(DensityMatrix.maximally_mixed(4), zz)]

        for p0 in pairs:
            penalty = penalty_term(p0, family, ctx, seed=0)
            for seed in range(40):
                prot = random_protocol(p0, family, ctx, seed=seed)
                pf, ledger = run_protocol(p0, prot, ctx, family=family)
                ok, slack = check_second_law(p0, pf, ledger, family, ctx, tol=1e-8, penalty=penalty)
                assert ok, f"slack {slack} for seed {seed}"


class TestInvolutionFactors:
    @pytest.mark.parametrize("labels", ["zz", "zx", "xyz"])
    def test_product_of_paulis(self, labels):
        """Test factorisation of Pauli products into site involutions."""
        v = tensor_all([pauli(c) for c in labels])
        factors = involution_factors(v, (2,) * len(labels))
        product = factors[0]
        for factor in factors[1:]:
            product = np.kron(product, factor)
        assert np.allclose(product, v.matrix, atol=1e-10)

    def test_not_an_involution(self, zz):
        """Test rejection of operators that do not square to the identity."""
        with pytest.raises(ValidationError, match="square to the identity"):
            involution_factors(2 * zz, (2, 2))

    def test_entangled_operator(self):
        """Test rejection of operators that are not site products."""
        swap_like = 0.5 * (tensor(pauli("x"), pauli("x")) + tensor(pauli("y"), pauli("y"))
                           + tensor(pauli("z"), pauli("z")) + HermitianOperator.identity(4))
        with pytest.raises(ValidationError, match="not a product"):
            involution_factors(swap_like, (2, 2))

    def test_identity_factor_is_not_traceless(self):
        """Test rejection of identity factors."""
        v = tensor(pauli("z"), HermitianOperator.identity(2))
        with pytest.raises(ValidationError, match="traceless"):
            involution_factors(v, (2, 2))


class TestPassivityCertificate:
    def test_zz_is_passive(self, ctx, zz):
        """Test the passivity certificate for sigma_z (x) sigma_z."""
        cert = local_passivity_certificate(zz, (2, 2), ctx, n_starts=4, seed=0, grid_per_axis=16,
                                           peierls_samples=16)
        assert cert.passive
        assert cert.stationary
        assert cert.in_scope
        assert cert.baseline_free_energy == pytest.approx(-math.log(4 * math.cosh(1.0)), abs=1e-12)
        assert cert.gibbs_form_residual <= 1e-12
        assert cert.min_peierls_residual >= -1e-12
        assert cert.grid_size == 256

    def test_single_site_is_out_of_scope(self, ctx):
        """Test that a single-site operator is flagged out of scope."""
        cert = local_passivity_certificate(pauli("z"), (2,), ctx, n_starts=4, seed=0, grid_per_axis=16,
                                           peierls_samples=4)
        assert not cert.in_scope
        assert not cert.stationary
        assert not cert.passive
        assert cert.gradients["z@0"] == pytest.approx(-math.tanh(1.0), abs=1e-12)

    def test_rejects_non_product(self, ctx, zz):
        """Test that the certificate rejects non-product operators."""
        with pytest.raises(ValidationError):
            local_passivity_certificate(zz + tensor(pauli("x"), pauli("x")), (2, 2), ctx)

    def test_summary_reports_excess(self, ctx, zz):
        """Test the free energy excess in the certificate summary."""
        summary = local_passivity_certificate(zz, (2, 2), ctx, n_starts=2, seed=0, grid_per_axis=8,
                                              peierls_samples=2).summary()
        assert summary["excess"] <= 1e-6
        assert set(summary["gradients"]) == {"x@0", "y@0", "z@0", "x@1", "y@1", "z@1"}


class TestExampleI:
    def test_reference_values(self, ctx):
        """Test the norm-bounded qubit example against closed forms."""
        report = example_i_analysis(0.05, 0.1, 1.0, ctx, r=0.0, grid=2001)
        p_star = math.exp(-1.0) * 0.95
        assert report.hypothesis_ok
        assert report.tc_optimum == pytest.approx(0.0, abs=1e-12)
        assert report.p_star == pytest.approx(p_star, abs=1e-15)
        assert report.delta_star == pytest.approx(math.log((1 - p_star) / p_star), abs=1e-12)
        assert report.p_star == pytest.approx(0.349485, abs=1e-6)
        assert report.delta_star == pytest.approx(0.62131, abs=1e-5)
        assert not report.constraint_limited
        assert report.to_work == pytest.approx(bit_delta_f(p_star, 1.0), abs=1e-12)
        assert report.to_work > 0

    def test_hot_bit_gains_from_contact(self, ctx):
        """Test that a hot bit extracts work by thermal contact."""
        report = example_i_analysis(0.5, 0.1, 1.0, ctx, grid=1001)
        assert not report.hypothesis_ok
        assert report.tc_optimum > 0
        assert report.tc_argmax_delta == pytest.approx(0.1)

    def test_constraint_limited(self, ctx):
        """Test that a narrow window is flagged as constraint limited."""
        report = example_i_analysis(0.05, 0.8, 1.0, ctx, grid=101)
        assert report.constraint_limited
        assert report.delta_used == 0.8
        expected = bit_delta_f(report.p_star, 1.0) - bit_delta_f(report.p_star, 0.8)
        assert report.to_work == pytest.approx(expected, abs=1e-12)

    def test_identity_map_gives_nothing(self, ctx):
        """Test that r = 1 leaves nothing for the map route."""
        report = example_i_analysis(0.05, 0.1, 1.0, ctx, r=1.0, grid=101)
        assert report.p_star == pytest.approx(0.05)
        assert report.constraint_limited
        assert report.to_work == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("kwargs", [
        {"p0_excitation": 1.2, "delta_min": 0.1, "delta_max": 1.0},
        {"p0_excitation": 0.1, "delta_min": 0.0, "delta_max": 1.0},
        {"p0_excitation": 0.1, "delta_min": 0.1, "delta_max": 1.0, "r": -0.1},
    ])
    def test_invalid_inputs(self, ctx, kwargs):
        """Test error handling for invalid inputs."""
        with pytest.raises(ValidationError):
            example_i_analysis(ctx=ctx, **kwargs)


class TestExampleII:
    def test_critical_t(self, ctx):
        """Test the critical field against its closed form."""
        assert example_ii_critical_t(ctx) == pytest.approx(CRITICAL_FIELD, abs=1e-7)

    @pytest.mark.parametrize("t", [0.0, 0.1, 0.3, 0.46])
    def test_feasible_work(self, ctx, t):
        """Test the extracted work below the critical field."""
        report = example_ii_analysis(t, ctx)
        assert report.feasible
        assert report.work == pytest.approx(example_ii_work(t), abs=1e-12)
        assert report.work <= report.work_upper_bound

    def test_work_at_critical_point(self, ctx):
        """Test the extracted work at the critical field."""
        t_c = example_ii_critical_t(ctx)
        report = example_ii_analysis(t_c, ctx)
        assert report.feasible
        assert report.work == pytest.approx(example_ii_work(CRITICAL_FIELD), abs=1e-7)

    @pytest.mark.parametrize("t", [0.47, 0.8, 3.0])
    def test_infeasible(self, ctx, t):
        """Test that fields above the critical value are infeasible."""
        report = example_ii_analysis(t, ctx)
        assert not report.feasible
        assert report.work is None

    def test_upper_bound(self, ctx):
        """Test that the work never exceeds ln cosh 1."""
        assert example_ii_analysis(0.2, ctx).work_upper_bound == pytest.approx(LN_COSH_1, abs=1e-12)

    def test_negative_t(self, ctx):
        """Test that negative fields are rejected."""
        with pytest.raises(ValidationError):
            example_ii_analysis(-0.1, ctx)

    def test_critical_t_moves_with_beta(self):
        """Test that the critical field depends on beta."""
        assert example_ii_critical_t(ThermoContext(2.0)) != pytest.approx(CRITICAL_FIELD, abs=1e-3)

    def test_curves(self, ctx):
        """Test the Lorenz curve table of the local-field example."""
        t = 0.3
        curves = example_ii_curves(t, ctx)
        assert list(curves.columns) == ["x", "g", "f", "id"]
        assert curves["x"].is_monotonic_increasing
        a = (math.e ** 2 - 1) / (2 * math.e ** 2)
        assert np.interp(0.5, curves["x"], curves["g"]) == pytest.approx((1 + a) / 2, abs=1e-9)
        assert np.interp(0.5, curves["x"], curves["f"]) == pytest.approx((1 + math.tanh(t)) / 2, abs=1e-9)
        assert np.all(curves["g"] >= curves["f"] - 1e-9)

    def test_curves_cross_beyond_critical_point(self, ctx):
        """Test that the curves cross once the field exceeds its critical value."""
        curves = example_ii_curves(0.8, ctx)
        assert np.any(curves["f"] > curves["g"] + 1e-6)

    def test_gap_to_thermal_contact(self, ctx):
        """Test the gap between map and thermal-contact work."""
        gap = example_ii_gap(0.3, ctx, seed=0)
        assert gap.tc_bound == pytest.approx(0.0, abs=1e-6)
        assert gap.gap == pytest.approx(example_ii_work(0.3), abs=1e-6)
        assert gap.penalty_method == "local:fixed_state"


@pytest.mark.performance
class TestBoundsPerformance:
    """Full-size runs: default grids and 1000 random protocols per family."""

    def test_full_certificate(self, ctx, zz):
        """Test the certificate on the default grid within its time budget."""
        start = time.perf_counter()
        cert = local_passivity_certificate(zz, (2, 2), ctx, seed=0)
        assert time.perf_counter() - start < 30.0
        assert cert.passive and cert.stationary
        assert cert.grid_size == 1024

    @pytest.mark.parametrize("family_name", ["unrestricted", "two_level", "local"])
    def test_thousand_protocols(self, ctx, zz, family_name):
        """Test 1000 random protocols per family against the bound."""
        rng = np.random.default_rng(99)
        if family_name == "unrestricted":
            family = HamiltonianFamily.unrestricted()
            p0 = Pair(random_density(3, rng), random_hermitian(3, rng))
        elif family_name == "two_level":
            family = HamiltonianFamily.two_level_norm_bounded(0.1, 1.0)
            p0 = Pair(random_density(2, rng), bit_hamiltonian(0.7))
        else:
            family = HamiltonianFamily.local(zz, (2, 2))
            p0 = Pair(DensityMatrix.maximally_mixed(4), zz)
        start = time.perf_counter()
        penalty = penalty_term(p0, family, ctx, seed=0)
        for seed in range(1000):
            pf, ledger = run_protocol(p0, random_protocol(p0, family, ctx, seed=seed), ctx, family=family)
            assert check_second_law(p0, pf, ledger, family, ctx, tol=1e-8, penalty=penalty)[0]
        assert time.perf_counter() - start < 60.0
