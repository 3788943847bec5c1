"""End-to-end tests of the thermoctl command line."""
import json
import math

import numpy as np
import pandas as pd
import pytest

from src.cli.main import build_parser, config_from_args, error_payload, main
from src.cli.scenarios import OutputFormat, Scenario, ScenarioConfig
from src.core.channels import bit_hamiltonian, gp_bit_map
from src.core.errors import ConfigError, ConstraintError, NumericalError
from src.core.protocols import Protocol, ProtocolStep
from src.core.quantum_core import DensityMatrix, Pair, ThermoContext
from src.storage.serialization import protocol_to_document
from tests.conftest import bit_delta_f


def last_error(capsys) -> dict:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.strip()]
    return json.loads(lines[-1])


def read_report(path) -> dict:
    return json.loads(path.read_text())


def write_document(path, document) -> None:
    path.write_text(json.dumps(document))


class TestExitCodes:
    def test_invalid_beta_is_config_error(self, capsys):
        """Test that a non-positive beta exits with code 2."""
        assert main(["example1", "--beta", "-1"]) == 2
        payload = last_error(capsys)
        assert payload["error"] == "ConfigError"
        assert payload["exit_code"] == 2
        assert "beta" in payload["message"]

    def test_unknown_subcommand(self, capsys):
        """Test that an unknown subcommand is a configuration error."""
        assert main(["teleport"]) == 2
        assert last_error(capsys)["error"] == "ConfigError"

    def test_unknown_config_key(self, tmp_path, capsys):
        """Test that unknown config file keys are rejected."""
        config = tmp_path / "run.env"
        config.write_text("BETA=1.0\nFOO=3\n")
        assert main(["example1", "--config", str(config)]) == 2
        assert "FOO" in last_error(capsys)["message"]

    def test_missing_config_file(self, tmp_path, capsys):
        """Test that a missing config file is a configuration error."""
        assert main(["example1", "--config", str(tmp_path / "absent.env")]) == 2

    def test_example2_needs_t(self, capsys):
        """Test that example2 requires --t or --t-range."""
        assert main(["example2"]) == 2

    def test_coherent_replay_through_gibbs_preserving_map(self, tmp_path, capsys):
        """Test that replaying coherent input through a GP map exits with code 3."""
        ctx = ThermoContext(1.0)
        coherent = Pair(DensityMatrix.pure([1, 1]), bit_hamiltonian(1.0))
        prot = Protocol((ProtocolStep.thermalize(gp_bit_map(1.0, 0.5, ctx)),))
        path = tmp_path / "coherent.json"
        write_document(path, protocol_to_document(prot, coherent, ctx.beta))
        assert main(["replay", "--protocol", str(path)]) == 3
        assert last_error(capsys)["error"] == "ScopeError"

    def test_unsupported_schema(self, tmp_path, capsys):
        """Test that an unknown schema version exits with code 4."""
        ctx = ThermoContext(1.0)
        document = protocol_to_document(Protocol(), Pair(DensityMatrix.excitation(0.1), bit_hamiltonian(1.0)),
                                        ctx.beta)
        document["schema_version"] = "99"
        path = tmp_path / "future.json"
        write_document(path, document)
        assert main(["replay", "--protocol", str(path)]) == 4
        assert last_error(capsys)["error"] == "ValidationError"

    def test_csv_needs_a_table(self, tmp_path, capsys):
        """Test that CSV output needs a tabular scenario."""
        assert main(["penalty", "--format", "csv", "--output", str(tmp_path / "out.csv")]) == 2
        assert "tabular" in last_error(capsys)["message"]

    def test_output_path_is_a_directory(self, tmp_path, capsys):
        """An unwritable report target is a configuration error and leaves no temp file behind."""
        target = tmp_path / "reports"
        target.mkdir()
        assert main(["example2", "--t", "0.3", "--output", str(target)]) == 2
        payload = last_error(capsys)
        assert payload["error"] == "ConfigError"
        assert payload["exit_code"] == 2
        assert list(tmp_path.glob(".reports.*")) == []

    def test_config_path_is_a_directory(self, tmp_path, capsys):
        """Test that a directory given as config file is a configuration error."""
        assert main(["example1", "--config", str(tmp_path)]) == 2
        assert last_error(capsys)["error"] == "ConfigError"

    def test_replay_of_malformed_json(self, tmp_path, capsys):
        """Test that a malformed protocol document is a configuration error."""
        path = tmp_path / "broken.json"
        path.write_text("{\"schema_version\": ")
        assert main(["replay", "--protocol", str(path)]) == 2
        assert "Invalid JSON" in last_error(capsys)["message"]

    def test_numerical_failure(self, mocker, capsys):
        """Test that numerical failures exit with code 4."""
        mocker.patch("src.cli.main.run_scenario", side_effect=NumericalError("eigendecomposition did not converge"))
        assert main(["example1"]) == 4
        payload = last_error(capsys)
        assert payload["error"] == "NumericalError"
        assert "converge" in payload["message"]

    def test_invalid_environment_settings(self, mocker, capsys):
        """Test that invalid environment settings stop before running."""
        mocker.patch("src.cli.main.validate_config", return_value="THERMOCTL_BETA must be positive")
        run = mocker.patch("src.cli.main.run_scenario")
        assert main(["example1"]) == 2
        run.assert_not_called()

    def test_constraint_error_payload_names_step(self):
        """Test that constraint errors report the offending step."""
        payload = error_payload(ConstraintError("left the family", step=3))
        assert payload == {"error": "ConstraintError", "message": "left the family", "exit_code": 3, "step": 3}


class TestConfiguration:
    def test_flags_override_config_file(self, tmp_path):
        """Test that command-line flags override config file values."""
        config = tmp_path / "run.env"
        config.write_text("BETA=2.0\nT=0.3\nSEED=5\n")
        args = build_parser().parse_args(["example2", "--config", str(config), "--beta", "1.0"])
        merged = config_from_args(args)
        assert merged.scenario is Scenario.EXAMPLE2
        assert merged.beta == 1.0
        assert merged.t == 0.3
        assert merged.seed == 5

    def test_mapping_keys_are_normalised(self):
        """Test key normalisation in scenario configs."""
        config = ScenarioConfig.from_mapping({"scenario": "example2", "T-RANGE": "0:1:3", "output_format": "csv"})
        assert config.t_range == (0.0, 1.0, 3)
        assert config.output_format is OutputFormat.CSV

    @pytest.mark.parametrize("values", [
        {"scenario": "example1", "beta": "warm"},
        {"scenario": "example2", "t_range": "0:1"},
        {"scenario": "penalty", "compare_reduction": "maybe"},
        {"beta": "1.0"},
    ])
    def test_bad_values(self, values):
        """Test rejection of malformed config values."""
        with pytest.raises(ConfigError):
            ScenarioConfig.from_mapping(values)

    @pytest.mark.parametrize("values, message", [
        ({"scenario": "replay"}, "--protocol"),
        ({"scenario": "example2", "t_range": "0:1:3", "emit_curves": "c.csv"}, "single --t"),
        ({"scenario": "bound-check", "family": "local", "thermalizing": "gp"}, "diagonal"),
        ({"scenario": "example1", "r": "1.5"}, "r must"),
        ({"scenario": "example1", "delta_min": "2", "delta_max": "1"}, "delta range"),
    ])
    def test_scenario_rules(self, values, message):
        """Test per-scenario validation messages."""
        assert message in ScenarioConfig.from_mapping(values).validate()


class TestScenarios:
    def test_example1_report(self, tmp_path):
        """Test the example1 JSON report."""
        out = tmp_path / "example1.json"
        assert main(["example1", "--output", str(out)]) == 0
        report = read_report(out)
        assert report["scenario"] == "example1"
        assert report["inputs"]["beta"] == 1.0
        assert set(report["tolerances"]) >= {"feasibility", "bisection", "membership"}
        results = report["results"]
        assert results["p_star"] == pytest.approx(math.exp(-1.0) * 0.95, abs=1e-10)
        assert results["hypothesis_ok"] is True
        assert results["to_work"] > 0

    def test_json_is_byte_identical(self, capsys):
        """Test that repeated runs print identical bytes."""
        assert main(["example2", "--t", "0.3"]) == 0
        first = capsys.readouterr().out
        assert main(["example2", "--t", "0.3"]) == 0
        assert capsys.readouterr().out == first
        assert json.loads(first)["results"]["feasible"] is True

    def test_emitted_protocol_replays_to_same_work(self, tmp_path):
        """Test that an emitted protocol replays to the same work."""
        protocol_path = tmp_path / "protocol.json"
        work_path = tmp_path / "work.csv"
        first = tmp_path / "first.json"
        assert main(["example1", "--n-steps", "200", "--emit-protocol", str(protocol_path),
                     "--emit-work", str(work_path), "--output", str(first)]) == 0
        results = read_report(first)["results"]
        assert 0 < results["protocol_work"] <= results["to_work"] + 1e-9
        assert results["protocol_work"] == pytest.approx(results["to_work"], abs=2e-3)

        table = pd.read_csv(work_path)
        assert table["kind"].iloc[0] == "thermalize"
        assert table["cumulative_work"].iloc[-1] == pytest.approx(results["protocol_work"], abs=1e-9)

        second = tmp_path / "second.json"
        assert main(["replay", "--protocol", str(protocol_path), "--output", str(second)]) == 0
        replay = read_report(second)["results"]
        assert replay["total_work"] == pytest.approx(results["protocol_work"], abs=1e-10)
        assert replay["steps"] == results["protocol_steps"]

    def test_example2_sweep_as_csv(self, tmp_path):
        """Test the example2 field sweep as CSV."""
        out = tmp_path / "sweep.csv"
        assert main(["example2", "--t-range", "0:0.8:5", "--format", "csv", "--output", str(out)]) == 0
        table = pd.read_csv(out)
        assert list(table.columns) == ["t", "feasible", "work"]
        assert table["feasible"].tolist() == [True, True, True, False, False]
        assert table["work"].iloc[1] == pytest.approx(0.2 * math.tanh(0.2) - math.log(math.cosh(0.2)), abs=1e-10)
        assert table["work"].iloc[3:].isna().all()

    def test_example2_curves_and_gap(self, tmp_path):
        """Test the example2 curves file and thermal-contact bound."""
        curves = tmp_path / "curves.csv"
        out = tmp_path / "example2.json"
        assert main(["example2", "--t", "0.3", "--tc-bound", "--emit-curves", str(curves),
                     "--output", str(out)]) == 0
        assert list(pd.read_csv(curves).columns) == ["x", "g", "f", "id"]
        results = read_report(out)["results"]
        assert results["tc_bound"] == pytest.approx(0.0, abs=1e-6)
        assert results["gap"] == pytest.approx(results["work"], abs=1e-6)

    def test_isothermal_order(self, tmp_path):
        """Test the convergence order of isothermal protocols."""
        out = tmp_path / "iso.json"
        assert main(["isothermal-convergence", "--n-values", "100,200,400", "--output", str(out)]) == 0
        runs = read_report(out)["results"]["runs"]
        assert [run["n_steps"] for run in runs] == [100, 200, 400]
        assert "order" not in runs[0]
        for run in runs[1:]:
            assert run["order"] == pytest.approx(1.0, abs=0.2)

    def test_isothermal_from_excitation(self, tmp_path):
        """Test isothermal convergence from an excited bit."""
        out = tmp_path / "iso.json"
        assert main(["isothermal-convergence", "--p0", "0.1", "--n-values", "200,400", "--output", str(out)]) == 0
        results = read_report(out)["results"]
        assert results["mode"] == "optimal_tc_protocol"
        assert results["target"] == pytest.approx(bit_delta_f(0.1, 1.0), abs=1e-10)
        assert results["runs"][1]["error"] < results["runs"][0]["error"]

    def test_penalty_with_reduction_check(self, capsys):
        """Test the penalty scenario with the reduction check."""
        assert main(["penalty", "--family", "two_level", "--p0", "0.05", "--compare-reduction"]) == 0
        results = json.loads(capsys.readouterr().out)["results"]
        assert results["penalty"] == pytest.approx(results["delta_f"], abs=1e-9)
        assert results["cyclic_bound"] == pytest.approx(0.0, abs=1e-9)
        assert results["reduction_agreement"] < 1e-6

    def test_local_penalty(self, capsys):
        """Test the penalty scenario for a local family."""
        assert main(["penalty", "--family", "local", "--v", "zz", "--seed", "1"]) == 0
        results = json.loads(capsys.readouterr().out)["results"]
        assert results["method"] == "local:fixed_state"
        assert results["penalty"] == pytest.approx(math.log(math.cosh(1.0)), abs=1e-7)

    def test_passivity_certificate(self, capsys):
        """Test the passivity-cert scenario."""
        assert main(["passivity-cert", "--v", "zz", "--n-starts", "2", "--grid-per-axis", "8"]) == 0
        results = json.loads(capsys.readouterr().out)["results"]
        assert results["passive"] is True
        assert results["stationary"] is True

    @pytest.mark.parametrize("family, thermalizing", [
        ("two_level", "tc"), ("two_level", "gp"), ("unrestricted", "tc"), ("unrestricted", "gp"), ("local", "tc"),
    ])
    def test_bound_check_has_no_violations(self, tmp_path, family, thermalizing):
        """Test that bound-check finds no violations."""
        out = tmp_path / "check.csv"
        code = main(["bound-check", "--family", family, "--thermalizing", thermalizing, "--dim", "3",
                     "--n-protocols", "20", "--n-states", "2", "--seed", "3", "--format", "csv",
                     "--output", str(out)])
        assert code == 0
        table = pd.read_csv(out)
        assert len(table) == 20
        assert np.all(table["slack"] >= -1e-6)
