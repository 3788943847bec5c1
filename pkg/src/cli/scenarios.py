"""
Scenario configuration and runners for the command-line harness.

Each runner returns a ScenarioResult: a JSON-ready results mapping, an
optional table (written when CSV output is requested) and an exit code.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from src.config.logging_config import get_logger
from src.config.settings import (
    BISECTION_TOLERANCE,
    DEFAULT_BETA,
    DEFAULT_N_STEPS,
    DEFAULT_SEED,
    FEASIBILITY_TOLERANCE,
    GOLDEN_TOLERANCE,
    MEMBERSHIP_TOLERANCE,
    MULTI_STARTS,
    PASSIVITY_TOLERANCE,
    SWEEP_WORKERS,
)
from src.core.bounds import (
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
    local_passivity_certificate,
    penalty_term,
)
from src.core.channels import MapKind, bit_hamiltonian, gp_bit_map
from src.core.errors import ConfigError
from src.core.protocols import (
    Protocol,
    ProtocolStep,
    isothermal_segment,
    optimal_tc_protocol,
    random_protocol,
    run_protocol,
)
from src.core.quantum_core import (
    DensityMatrix,
    HermitianOperator,
    Pair,
    ThermoContext,
    pauli,
    tensor_all,
)
from src.core.thermo_core import delta_f, free_energy, gibbs_state
from src.storage.operations import read_json, work_table, write_csv_table, write_protocol_document
from src.storage.serialization import protocol_to_document, replay_inputs
from src.utils.sampling import random_density, random_diagonal_density, random_hermitian

logger = get_logger(__name__)


class Scenario(str, Enum):
    EXAMPLE1 = "example1"
    EXAMPLE2 = "example2"
    ISOTHERMAL = "isothermal-convergence"
    PASSIVITY = "passivity-cert"
    PENALTY = "penalty"
    BOUND_CHECK = "bound-check"
    REPLAY = "replay"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


FAMILY_CHOICES = ("unrestricted", "two_level", "local")
THERMALIZING_CHOICES = ("tc", "gp")


@dataclass
class ScenarioConfig:
    """Validated parameters of one CLI run; unused fields keep their defaults."""

    scenario: Scenario
    beta: float = DEFAULT_BETA
    seed: int = DEFAULT_SEED
    # Example I / two-level family
    p0: Optional[float] = None
    delta_min: float = 0.1
    delta_max: float = 1.0
    r: float = 0.0
    # Example II
    t: Optional[float] = None
    t_range: Optional[Tuple[float, float, int]] = None
    tc_bound: bool = False
    # Protocols
    n_steps: int = DEFAULT_N_STEPS
    n_values: Tuple[int, ...] = (100, 1000, 10000)
    delta_start: float = 0.6213
    delta_end: float = 1.0
    # Families and searches
    family: str = "two_level"
    orbit: str = OrbitKind.FIXED_STATE.value
    v: str = "zz"
    dim: int = 2
    n_starts: int = MULTI_STARTS
    grid_per_axis: int = 32
    compare_reduction: bool = False
    # Bound checks
    n_protocols: int = 1000
    n_states: int = 10
    protocol_length: int = 8
    thermalizing: str = "tc"
    # Tolerances
    feasibility_tol: float = FEASIBILITY_TOLERANCE
    bound_tol: float = 1e-6
    # Outputs
    output: Optional[Path] = None
    output_format: OutputFormat = OutputFormat.JSON
    emit_curves: Optional[Path] = None
    emit_protocol: Optional[Path] = None
    emit_work: Optional[Path] = None
    protocol: Optional[Path] = None
    workers: int = SWEEP_WORKERS

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "ScenarioConfig":
        """
        Build a config from raw strings (config file) or typed values (flags).

        Raises:
            ConfigError: On unknown keys or unparsable values
        """
        known = {f.name for f in fields(cls)}
        kwargs: Dict[str, Any] = {}
        for raw_key, raw_value in values.items():
            key = raw_key.strip().lower().replace("-", "_")
            if key not in known:
                raise ConfigError(f"Unknown configuration key {raw_key!r}")
            if raw_value is None:
                continue
            try:
                kwargs[key] = _CONVERTERS.get(key, _identity)(raw_value)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"Invalid value for {key}: {raw_value!r} ({e})") from None
        if "scenario" not in kwargs:
            raise ConfigError("No scenario given")
        return cls(**kwargs)

    def validate(self) -> Optional[str]:
        """
        Validate parameters against the preconditions of the target operation.

        Returns:
            Optional[str]: Error message if validation fails, None if successful
        """
        if not (self.beta > 0 and math.isfinite(self.beta)):
            return "beta must be a positive finite number"
        if self.seed < 0:
            return "seed must be non-negative"
        if self.p0 is not None and not 0 <= self.p0 <= 1:
            return "p0 must lie in [0, 1]"
        if not 0 < self.delta_min <= self.delta_max:
            return "delta range must satisfy 0 < delta_min <= delta_max"
        if not 0 <= self.r <= 1:
            return "r must lie in [0, 1]"
        if self.t is not None and self.t < 0:
            return "t must be non-negative"
        if self.t_range is not None:
            start, stop, num = self.t_range
            if start < 0 or stop < start or num < 1:
                return "t-range must be START:STOP:NUM with 0 <= START <= STOP and NUM >= 1"
        if self.n_steps < 1 or any(n < 1 for n in self.n_values):
            return "step counts must be positive"
        if self.family not in FAMILY_CHOICES:
            return f"family must be one of {', '.join(FAMILY_CHOICES)}"
        if self.orbit not in {kind.value for kind in OrbitKind}:
            return f"orbit must be one of {', '.join(kind.value for kind in OrbitKind)}"
        if not self.v or any(c not in "xyz" for c in self.v):
            return "v must be a non-empty string of Pauli labels x, y, z"
        if self.dim < 1 or self.n_starts < 1 or self.grid_per_axis < 2 or self.workers < 1:
            return "dim, n_starts, workers must be positive and grid_per_axis at least 2"
        if self.n_protocols < 1 or self.n_states < 1 or self.protocol_length < 1:
            return "bound-check counts must be positive"
        if self.thermalizing not in THERMALIZING_CHOICES:
            return "thermalizing must be 'tc' or 'gp'"
        if self.feasibility_tol < 0 or self.bound_tol < 0:
            return "tolerances must be non-negative"

        if self.scenario is Scenario.EXAMPLE2:
            if self.t is None and self.t_range is None:
                return "example2 needs --t or --t-range"
            if self.emit_curves is not None and self.t is None:
                return "--emit-curves needs a single --t"
        if self.scenario is Scenario.REPLAY and self.protocol is None:
            return "replay needs --protocol"
        if self.scenario is Scenario.BOUND_CHECK and self.thermalizing == "gp" and self.family == "local":
            return "Gibbs-preserving bound checks run on diagonal families only (unrestricted, two_level)"
        if self.output_format is OutputFormat.CSV and self.output is None:
            return "CSV output needs --output"
        return None

    def inputs(self) -> Dict[str, Any]:
        values = asdict(self)
        return {key: (value.value if isinstance(value, Enum) else value) for key, value in values.items()}

    def tolerances(self) -> Dict[str, float]:
        return {
            "feasibility": self.feasibility_tol,
            "bisection": BISECTION_TOLERANCE,
            "golden_section": GOLDEN_TOLERANCE,
            "membership": MEMBERSHIP_TOLERANCE,
            "passivity": PASSIVITY_TOLERANCE,
            "bound": self.bound_tol,
        }


def _identity(value: Any) -> Any:
    return value


def _to_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def parse_t_range(value: Any) -> Tuple[float, float, int]:
    """'START:STOP:NUM' -> (start, stop, num)."""
    if isinstance(value, tuple):
        return value
    parts = str(value).split(":")
    if len(parts) != 3:
        raise ValueError("expected START:STOP:NUM")
    return float(parts[0]), float(parts[1]), int(parts[2])


def parse_int_list(value: Any) -> Tuple[int, ...]:
    if isinstance(value, (tuple, list)):
        return tuple(int(v) for v in value)
    return tuple(int(v) for v in str(value).split(",") if v.strip())


_CONVERTERS: Dict[str, Callable[[Any], Any]] = {
    "scenario": Scenario,
    "beta": float,
    "seed": int,
    "p0": float,
    "delta_min": float,
    "delta_max": float,
    "r": float,
    "t": float,
    "t_range": parse_t_range,
    "tc_bound": _to_bool,
    "n_steps": int,
    "n_values": parse_int_list,
    "delta_start": float,
    "delta_end": float,
    "family": str,
    "orbit": str,
    "v": lambda value: str(value).lower(),
    "dim": int,
    "n_starts": int,
    "grid_per_axis": int,
    "compare_reduction": _to_bool,
    "n_protocols": int,
    "n_states": int,
    "protocol_length": int,
    "thermalizing": str,
    "feasibility_tol": float,
    "bound_tol": float,
    "output": Path,
    "output_format": OutputFormat,
    "emit_curves": Path,
    "emit_protocol": Path,
    "emit_work": Path,
    "protocol": Path,
    "workers": int,
}


@dataclass
class ScenarioResult:
    results: Dict[str, Any]
    table: Optional[pd.DataFrame] = None
    exit_code: int = 0
    artifacts: List[str] = field(default_factory=list)


def product_hamiltonian(labels: str) -> Tuple[HermitianOperator, Tuple[int, ...]]:
    """'zz' -> sigma_z (x) sigma_z on two qubits."""
    return tensor_all([pauli(label) for label in labels]), (2,) * len(labels)


def _family(config: ScenarioConfig) -> HamiltonianFamily:
    if config.family == "unrestricted":
        return HamiltonianFamily.unrestricted()
    if config.family == "two_level":
        return HamiltonianFamily.two_level_norm_bounded(config.delta_min, config.delta_max)
    v, dims = product_hamiltonian(config.v)
    return HamiltonianFamily.local(v, dims, OrbitKind(config.orbit))


def run_example1(config: ScenarioConfig) -> ScenarioResult:
    ctx = ThermoContext(config.beta)
    p0 = 0.05 if config.p0 is None else config.p0
    report = example_i_analysis(p0, config.delta_min, config.delta_max, ctx, r=config.r)
    result = ScenarioResult(results=report.summary())

    if config.emit_protocol is None and config.emit_work is None:
        return result

    family = HamiltonianFamily.two_level_norm_bounded(config.delta_min, config.delta_max)
    h0 = bit_hamiltonian(config.delta_max)
    initial = Pair(DensityMatrix.excitation(p0), h0)
    gp_step = Protocol((ProtocolStep.thermalize(gp_bit_map(config.delta_max, config.r, ctx)),))
    after_gp, _ = run_protocol(initial, gp_step, ctx, family=family)
    prot = gp_step + optimal_tc_protocol(after_gp, family, ctx, n_steps=config.n_steps)
    _, ledger = run_protocol(initial, prot, ctx, family=family, record_trajectory=config.emit_work is not None)

    result.results["protocol_work"] = ledger.total
    result.results["protocol_steps"] = len(prot)
    if config.emit_protocol is not None:
        document = protocol_to_document(prot, initial=initial, beta=ctx.beta,
                                        metadata={"scenario": Scenario.EXAMPLE1.value, "p0": p0, "r": config.r})
        write_protocol_document(config.emit_protocol, document)
        result.artifacts.append(str(config.emit_protocol))
    if config.emit_work is not None:
        result.table = work_table(prot, ledger)
        write_csv_table(config.emit_work, result.table)
        result.artifacts.append(str(config.emit_work))
    return result


def run_example2(config: ScenarioConfig) -> ScenarioResult:
    ctx = ThermoContext(config.beta)
    t_critical = example_ii_critical_t(ctx, config.feasibility_tol)

    if config.t_range is not None:
        start, stop, num = config.t_range
        ts = [float(t) for t in np.linspace(start, stop, num)]
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            reports = list(pool.map(lambda t: example_ii_analysis(t, ctx, config.feasibility_tol), ts))
        points = [report.summary() for report in reports]
        result = ScenarioResult(
            results={
                "t_critical": t_critical,
                "work_upper_bound": reports[0].work_upper_bound,
                "points": points,
            },
            table=pd.DataFrame([{"t": p["t"], "feasible": p["feasible"], "work": p["work"]} for p in points]),
        )
    else:
        report = example_ii_analysis(config.t, ctx, config.feasibility_tol)
        result = ScenarioResult(results=report.summary())
        if config.tc_bound:
            gap = example_ii_gap(config.t, ctx, seed=config.seed)
            result.results.update(tc_bound=gap.tc_bound, gap=gap.gap)

    if config.emit_curves is not None:
        curves = example_ii_curves(config.t, ctx)
        write_csv_table(config.emit_curves, curves)
        result.artifacts.append(str(config.emit_curves))
        if result.table is None:
            result.table = curves
    return result


def run_isothermal(config: ScenarioConfig) -> ScenarioResult:
    """
    Without p0: a bare isothermal segment between two qubit gaps.
    With p0: the optimal thermal-contact protocol on the unrestricted qubit,
    whose work should approach Delta F(p0).
    """
    ctx = ThermoContext(config.beta)
    rows = []
    if config.p0 is None:
        h_start, h_end = bit_hamiltonian(config.delta_start), bit_hamiltonian(config.delta_end)
        start = gibbs_state(h_start, ctx)
        target = start.free_energy - gibbs_state(h_end, ctx).free_energy
        for n in config.n_values:
            _, ledger = run_protocol(start.pair, isothermal_segment(h_start, h_end, n), ctx)
            rows.append({"n_steps": n, "work": ledger.total, "error": abs(ledger.total - target)})
        mode = "isothermal_segment"
    else:
        p0 = Pair(DensityMatrix.excitation(config.p0), bit_hamiltonian(config.delta_end))
        family = HamiltonianFamily.unrestricted()
        target = delta_f(p0, ctx)
        for n in config.n_values:
            _, ledger = run_protocol(p0, optimal_tc_protocol(p0, family, ctx, n_steps=n), ctx)
            rows.append({"n_steps": n, "work": ledger.total, "error": abs(ledger.total - target)})
        mode = "optimal_tc_protocol"

    for previous, current in zip(rows[:-1], rows[1:]):
        if current["error"] > 0 and previous["error"] > 0:
            current["order"] = math.log(previous["error"] / current["error"]) / math.log(
                current["n_steps"] / previous["n_steps"])
    return ScenarioResult(
        results={"mode": mode, "target": target, "runs": rows},
        table=pd.DataFrame(rows),
    )


def run_passivity(config: ScenarioConfig) -> ScenarioResult:
    ctx = ThermoContext(config.beta)
    v, dims = product_hamiltonian(config.v)
    certificate = local_passivity_certificate(
        v, dims, ctx,
        n_starts=config.n_starts,
        seed=config.seed,
        grid_per_axis=config.grid_per_axis,
        workers=config.workers,
    )
    return ScenarioResult(results=certificate.summary())


def _penalty_pair(config: ScenarioConfig, rng: np.random.Generator) -> Pair:
    if config.family == "local":
        v, _ = product_hamiltonian(config.v)
        if OrbitKind(config.orbit) is OrbitKind.FIXED_STATE:
            return Pair(DensityMatrix.maximally_mixed(v.dim), v)
        return Pair(random_density(v.dim, rng), v)
    p0 = 0.05 if config.p0 is None else config.p0
    return Pair(DensityMatrix.excitation(p0), bit_hamiltonian(config.delta_max))


def run_penalty(config: ScenarioConfig) -> ScenarioResult:
    ctx = ThermoContext(config.beta)
    family = _family(config)
    p0 = _penalty_pair(config, np.random.default_rng(config.seed))
    report = penalty_term(p0, family, ctx, seed=config.seed, n_starts=config.n_starts)
    results = {
        "family": family.describe(),
        "delta_f": delta_f(p0, ctx),
        "cyclic_bound": cyclic_work_bound(p0, family, ctx, report),
        **report.summary(),
    }
    if config.compare_reduction and family.kind is FamilyKind.TWO_LEVEL_NORM_BOUNDED:
        direct = penalty_term(p0, family, ctx, use_passive_reduction=False, seed=config.seed)
        results["direct_search_penalty"] = direct.penalty
        results["reduction_agreement"] = abs(direct.penalty - report.penalty)
    return ScenarioResult(results=results)


def _bound_check_pair(config: ScenarioConfig, rng: np.random.Generator) -> Pair:
    if config.family == "local":
        v, _ = product_hamiltonian(config.v)
        return Pair(DensityMatrix.maximally_mixed(v.dim), v)
    gp = config.thermalizing == "gp"
    if config.family == "two_level":
        state = random_diagonal_density(2, rng) if gp else random_density(2, rng)
        return Pair(state, bit_hamiltonian(config.delta_max))
    if gp:
        return Pair(random_diagonal_density(config.dim, rng),
                    HermitianOperator.diagonal(rng.uniform(-2.0, 2.0, config.dim)))
    return Pair(random_density(config.dim, rng), random_hermitian(config.dim, rng))


def run_bound_check(config: ScenarioConfig) -> ScenarioResult:
    """
    Random protocols against the restricted second law (thermal contact) or
    against F(p0) - F(pf) (Gibbs-preserving maps, no penalty).
    """
    ctx = ThermoContext(config.beta)
    family = _family(config)
    rng = np.random.default_rng(config.seed)
    thermalizing = MapKind.CLASSICAL_GP if config.thermalizing == "gp" else MapKind.THERMAL_CONTACT
    per_state = max(1, config.n_protocols // config.n_states)

    slacks: List[float] = []
    works: List[float] = []
    for _ in range(config.n_states):
        p0 = _bound_check_pair(config, rng)
        penalty = None
        if thermalizing is MapKind.THERMAL_CONTACT:
            penalty = penalty_term(p0, family, ctx, seed=int(rng.integers(2**31)), n_starts=config.n_starts)
        for _ in range(per_state):
            prot = random_protocol(p0, family, ctx, seed=int(rng.integers(2**31)),
                                   length=config.protocol_length, thermalizing=thermalizing)
            pf, ledger = run_protocol(p0, prot, ctx, family=family)
            if penalty is not None:
                _, slack = check_second_law(p0, pf, ledger, family, ctx, config.bound_tol, penalty)
            else:
                slack = free_energy(p0, ctx).free_energy - free_energy(pf, ctx).free_energy - ledger.total
            slacks.append(slack)
            works.append(ledger.total)

    violations = sum(1 for slack in slacks if slack < -config.bound_tol)
    if violations:
        logger.warning("Bound violations found", violations=violations, min_slack=min(slacks))
    results = {
        "family": family.describe(),
        "thermalizing": thermalizing.value,
        "n_protocols": len(slacks),
        "violations": violations,
        "min_slack": min(slacks),
        "max_work": max(works),
    }
    return ScenarioResult(
        results=results,
        table=pd.DataFrame({"protocol": range(len(slacks)), "work": works, "slack": slacks}),
        exit_code=4 if violations else 0,
    )


def run_replay(config: ScenarioConfig) -> ScenarioResult:
    p0, ctx, prot = replay_inputs(read_json(config.protocol))
    pf, ledger = run_protocol(p0, prot, ctx, record_trajectory=config.emit_work is not None)
    result = ScenarioResult(results={
        "beta": ctx.beta,
        "steps": len(prot),
        "total_work": ledger.total,
        "per_step": ledger.per_step.tolist(),
        "initial_free_energy": free_energy(p0, ctx).free_energy,
        "final_free_energy": free_energy(pf, ctx).free_energy,
    })
    if config.emit_work is not None:
        result.table = work_table(prot, ledger)
        write_csv_table(config.emit_work, result.table)
        result.artifacts.append(str(config.emit_work))
    return result


RUNNERS: Dict[Scenario, Callable[[ScenarioConfig], ScenarioResult]] = {
    Scenario.EXAMPLE1: run_example1,
    Scenario.EXAMPLE2: run_example2,
    Scenario.ISOTHERMAL: run_isothermal,
    Scenario.PASSIVITY: run_passivity,
    Scenario.PENALTY: run_penalty,
    Scenario.BOUND_CHECK: run_bound_check,
    Scenario.REPLAY: run_replay,
}


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """
    Raises:
        ConfigError: If the configuration fails validation
    """
    error = config.validate()
    if error:
        raise ConfigError(error)
    logger.info("Running scenario", scenario=config.scenario.value, seed=config.seed)
    return RUNNERS[config.scenario](config)
