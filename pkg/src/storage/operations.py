"""
Report and artifact files.
All writes go through atomic_write: a temporary file in the target
directory, renamed into place once complete.
"""
import json
import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Generator, IO, Optional, Union

import numpy as np
import pandas as pd

from src import __version__
from src.config.logging_config import get_logger
from src.config.settings import REPORT_SCHEMA_VERSION, REPORT_SIGNIFICANT_DIGITS
from src.core.errors import ConfigError
from src.core.protocols import Protocol, WorkLedger
from src.core.quantum_core import eig_hermitian, populations_in

logger = get_logger(__name__)

PathLike = Union[str, Path]


@contextmanager
def atomic_write(path: PathLike, mode: str = "w") -> Generator[IO, None, None]:
    """
    Context manager for all-or-nothing file writes.
    The target is only replaced when the block exits without error.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        mode=mode, dir=target.parent, prefix=f".{target.name}.", suffix=".tmp", delete=False,
        **({"encoding": "utf-8", "newline": ""} if "b" not in mode else {})
    )
    try:
        yield handle
        handle.flush()
        os.fsync(handle.fileno())
        handle.close()
        os.replace(handle.name, target)
    except Exception as e:
        handle.close()
        os.unlink(handle.name)
        logger.error("Write failed", path=str(target), error=str(e))
        raise


def normalize(value: Any, digits: int = REPORT_SIGNIFICANT_DIGITS) -> Any:
    """
    Make a report value JSON-ready and deterministic.

    Floats are rounded to `digits` significant digits; non-finite floats
    become the strings "inf", "-inf" and "nan"; numpy scalars and arrays
    become Python values and lists.
    """
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        rounded = float(f"{value:.{digits}g}")
        return 0.0 if rounded == 0 else rounded
    if isinstance(value, np.ndarray):
        return normalize(value.tolist(), digits)
    if isinstance(value, dict):
        return {str(key): normalize(item, digits) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize(item, digits) for item in value]
    if isinstance(value, Path):
        return str(value)
    return value


def build_report(
    scenario: str,
    inputs: Dict[str, Any],
    tolerances: Dict[str, float],
    seed: Optional[int],
    results: Any
) -> Dict[str, Any]:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "library_version": __version__,
        "scenario": scenario,
        "inputs": inputs,
        "tolerances": tolerances,
        "seed": seed,
        "results": results,
    }


def render_json(report: Dict[str, Any]) -> str:
    """Sorted keys, fixed indentation, trailing newline: identical inputs give identical bytes."""
    return json.dumps(normalize(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json_report(path: PathLike, report: Dict[str, Any]) -> None:
    with atomic_write(path) as handle:
        handle.write(render_json(report))
    logger.info("Wrote JSON report", path=str(path))


def write_protocol_document(path: PathLike, document: Dict[str, Any]) -> None:
    """Protocol documents keep full float precision for exact replay."""
    with atomic_write(path) as handle:
        handle.write(json.dumps(document, sort_keys=True) + "\n")
    logger.info("Wrote protocol document", path=str(path), steps=len(document.get("steps", [])))


def read_json(path: PathLike) -> Dict[str, Any]:
    """
    Raises:
        ConfigError: If the file is missing or is not a JSON object
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except FileNotFoundError as e:
        raise ConfigError(f"File not found: {path}") from e
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ConfigError(f"Invalid JSON in {path}: {e}") from e
    except OSError as e:
        raise ConfigError(f"Cannot read {path}: {e.strerror or e}") from e
    if not isinstance(payload, dict):
        raise ConfigError(f"Expected a JSON object in {path}")
    return payload


def write_csv_table(path: PathLike, frame: pd.DataFrame) -> None:
    with atomic_write(path) as handle:
        frame.to_csv(handle, index=False, float_format=f"%.{REPORT_SIGNIFICANT_DIGITS}g")
    logger.info("Wrote CSV table", path=str(path), rows=len(frame))


def work_table(prot: Protocol, ledger: WorkLedger) -> pd.DataFrame:
    """
    Per-step table of a recorded run: gap and top-level population after
    each step, the step's work and the running total.

    Raises:
        ConfigError: If the ledger was recorded without a trajectory
    """
    if len(ledger.trajectory) != len(prot) + 1:
        raise ConfigError("Work table needs a ledger recorded with its trajectory")
    rows = []
    for index, (step, pair, work) in enumerate(zip(prot, ledger.trajectory[1:], ledger.per_step)):
        energies, basis = eig_hermitian(pair.hamiltonian)
        rows.append({
            "step": index,
            "kind": "quench" if step.is_quench else step.kind.value,
            "delta": float(energies[-1] - energies[0]),
            "excitation": float(populations_in(pair.state, basis)[-1]),
            "work": float(work),
        })
    frame = pd.DataFrame(rows, columns=["step", "kind", "delta", "excitation", "work"])
    frame["cumulative_work"] = frame["work"].cumsum()
    return frame
