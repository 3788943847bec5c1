"""
Protocol documents: JSON-ready encodings of matrices, pairs, maps and steps.

Complex matrices are nested lists of [re, im] pairs; floats are left as
Python floats so json writes their shortest round-tripping repr.
"""
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.config.logging_config import get_logger
from src.config.settings import PROTOCOL_SCHEMA_VERSION
from src.core.channels import MapKind, ThermalizingMap
from src.core.errors import ConfigError, ValidationError
from src.core.protocols import Protocol, ProtocolStep, StepKind
from src.core.quantum_core import DensityMatrix, HermitianOperator, Pair, ThermoContext

logger = get_logger(__name__)


def encode_matrix(matrix: np.ndarray) -> List[List[List[float]]]:
    matrix = np.asarray(matrix, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


def decode_matrix(payload: Any) -> np.ndarray:
    """
    Inverse of encode_matrix.

    Raises:
        ValidationError: If the payload is not a square grid of [re, im] pairs
    """
    try:
        array = np.array(payload, dtype=float)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Malformed matrix payload: {e}") from e
    if array.ndim != 3 or array.shape[2] != 2 or array.shape[0] != array.shape[1]:
        raise ValidationError(f"Matrix payload must have shape (d, d, 2), got {array.shape}")
    return array[:, :, 0] + 1j * array[:, :, 1]


def encode_pair(pair: Pair) -> Dict[str, Any]:
    return {"state": encode_matrix(pair.state.matrix), "hamiltonian": encode_matrix(pair.hamiltonian.matrix)}


def decode_pair(payload: Dict[str, Any]) -> Pair:
    try:
        return Pair(DensityMatrix(decode_matrix(payload["state"])),
                    HermitianOperator(decode_matrix(payload["hamiltonian"])))
    except KeyError as e:
        raise ValidationError(f"Pair payload is missing {e}") from e


def encode_map(thermal_map: ThermalizingMap) -> Dict[str, Any]:
    if thermal_map.kind is MapKind.THERMAL_CONTACT:
        return {"type": MapKind.THERMAL_CONTACT.value}
    return {
        "type": MapKind.CLASSICAL_GP.value,
        "matrix": [[float(x) for x in row] for row in thermal_map.matrix],
        "hamiltonian": encode_matrix(thermal_map.hamiltonian.matrix),
        "beta": float(thermal_map.beta),
    }


def decode_map(payload: Dict[str, Any]) -> ThermalizingMap:
    kind = payload.get("type")
    if kind == MapKind.THERMAL_CONTACT.value:
        return ThermalizingMap.thermal_contact()
    if kind == MapKind.CLASSICAL_GP.value:
        return ThermalizingMap.classical_gp(
            np.array(payload["matrix"], dtype=float),
            HermitianOperator(decode_matrix(payload["hamiltonian"])),
            ThermoContext(float(payload["beta"])),
        )
    raise ValidationError(f"Unknown map type {kind!r}")


def encode_step(step: ProtocolStep) -> Dict[str, Any]:
    if step.kind is StepKind.THERMALIZE:
        return {"kind": StepKind.THERMALIZE.value, "map": encode_map(step.thermal_map)}
    return {
        "kind": StepKind.UNITARY.value,
        "unitary": None if step.unitary is None else encode_matrix(step.unitary),
        "h_end": encode_matrix(step.h_end.matrix),
    }


def decode_step(payload: Dict[str, Any]) -> ProtocolStep:
    kind = payload.get("kind")
    if kind == StepKind.THERMALIZE.value:
        return ProtocolStep.thermalize(decode_map(payload["map"]))
    if kind == StepKind.UNITARY.value:
        h_end = HermitianOperator(decode_matrix(payload["h_end"]))
        if payload.get("unitary") is None:
            return ProtocolStep.quench(h_end)
        return ProtocolStep.unitary_step(decode_matrix(payload["unitary"]), h_end)
    raise ValidationError(f"Unknown step kind {kind!r}")


def protocol_to_document(
    prot: Protocol,
    initial: Optional[Pair] = None,
    beta: Optional[float] = None,
    metadata: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """
    Document form of a protocol; with `initial` and `beta` it is a replay document.

    Args:
        prot: Protocol to encode
        initial: Initial pair the protocol was run from
        beta: Inverse temperature of the run
        metadata: Free-form scenario description

    Returns:
        Dict[str, Any]: JSON-ready document
    """
    document: Dict[str, Any] = {
        "schema_version": PROTOCOL_SCHEMA_VERSION,
        "steps": [encode_step(step) for step in prot],
    }
    if initial is not None:
        document["initial"] = encode_pair(initial)
    if beta is not None:
        document["beta"] = float(beta)
    if metadata:
        document["metadata"] = dict(metadata)
    return document


def protocol_from_document(document: Dict[str, Any]) -> Protocol:
    """
    Raises:
        ValidationError: On an unknown schema version or malformed steps
    """
    version = document.get("schema_version")
    if version != PROTOCOL_SCHEMA_VERSION:
        raise ValidationError(f"Unsupported protocol schema version {version!r}")
    steps = document.get("steps")
    if not isinstance(steps, list):
        raise ValidationError("Protocol document has no step list")
    try:
        return Protocol(tuple(decode_step(step) for step in steps))
    except (KeyError, TypeError) as e:
        raise ValidationError(f"Malformed protocol step: {e}") from e


def replay_inputs(document: Dict[str, Any]) -> Tuple[Pair, ThermoContext, Protocol]:
    """
    Unpack a replay document into (initial pair, context, protocol).

    Raises:
        ConfigError: If the document carries no initial pair or beta
    """
    if "initial" not in document or "beta" not in document:
        raise ConfigError("Replay needs a protocol document with 'initial' and 'beta'")
    prot = protocol_from_document(document)
    initial = decode_pair(document["initial"])
    logger.debug("Loaded replay document", steps=len(prot), dim=initial.dim)
    return initial, ThermoContext(float(document["beta"])), prot
