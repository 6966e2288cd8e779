"""Readers and writers for state, operation and channel files.

Files ending in ``.yaml`` / ``.yml`` are parsed as YAML, everything else as
JSON. Complex entries are ``[re, im]`` pairs in both formats.
"""

import hashlib
from pathlib import Path
from typing import Type, TypeVar, Union

import yaml
from pydantic import BaseModel, ValidationError

from septrans import ruchannel, sepops
from septrans.numerics import DEFAULT_TOL
from septrans.schemas.models import (
    ChannelFile,
    ChannelTerm,
    InputError,
    KrausEntry,
    OperationFile,
    StateFile,
    decode_matrix,
    encode_matrix,
    encode_vector,
)
from septrans.states import BipartiteState

PathLike = Union[str, Path]
ModelT = TypeVar("ModelT", bound=BaseModel)

YAML_SUFFIXES = {".yaml", ".yml"}


def _read_model(path: PathLike, model: Type[ModelT]) -> ModelT:
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"Cannot read {file_path}: {e}")

    try:
        if file_path.suffix.lower() in YAML_SUFFIXES:
            data = yaml.safe_load(text)
            if data is None:
                raise InputError(f"{file_path} is empty")
            return model.model_validate(data)
        return model.model_validate_json(text)
    except ValidationError as e:
        raise InputError(f"Invalid {model.__name__} in {file_path}: {e}")
    except yaml.YAMLError as e:
        raise InputError(f"YAML parsing error in {file_path}: {e}")


def load_state_file(path: PathLike) -> BipartiteState:
    parsed = _read_model(path, StateFile)
    d_a, d_b = parsed.dims
    return BipartiteState(d_a, d_b, parsed.to_array())


def load_operation_file(path: PathLike, tol: float = DEFAULT_TOL) -> sepops.SeparableOperation:
    """Parse an operation and reject it unless the closure condition holds."""
    parsed = _read_model(path, OperationFile)
    d_a, d_b = parsed.dims
    op = sepops.SeparableOperation(
        d_a,
        d_b,
        tuple(
            sepops.KrausPair(decode_matrix(entry.A), decode_matrix(entry.B))
            for entry in parsed.kraus
        ),
    )
    closure = sepops.validate_closure(op, tol)
    if not closure.valid:
        raise InputError(
            f"Operation in {path} violates the closure condition "
            f"(residual {closure.residual:.3e})"
        )
    return op


def load_channel_file(path: PathLike, tol: float = DEFAULT_TOL) -> ruchannel.RandomUnitaryChannel:
    """Parse a channel and reject it unless every U_m and V_m is unitary."""
    parsed = _read_model(path, ChannelFile)
    ch = ruchannel.RandomUnitaryChannel(
        parsed.dim,
        tuple(
            ruchannel.UnitaryTerm(term.p, decode_matrix(term.U), decode_matrix(term.V))
            for term in parsed.terms
        ),
    )
    validation = ruchannel.validate_channel(ch, tol)
    if not validation.valid:
        raise InputError(
            f"Channel in {path} is invalid (unitarity residuals "
            f"{', '.join(f'{r:.3e}' for r in validation.unitarity_residuals)}; "
            f"closure residual {validation.closure_residual:.3e})"
        )
    return ch


def state_to_file(psi: BipartiteState) -> StateFile:
    return StateFile(dims=psi.dims, amplitudes=encode_vector(psi.amplitudes))


def operation_to_file(op: sepops.SeparableOperation) -> OperationFile:
    return OperationFile(
        dims=(op.dA, op.dB),
        kraus=[KrausEntry(A=encode_matrix(p.A), B=encode_matrix(p.B)) for p in op.pairs],
    )


def channel_to_file(ch: ruchannel.RandomUnitaryChannel) -> ChannelFile:
    return ChannelFile(
        dim=ch.d,
        terms=[
            ChannelTerm(p=t.p, U=encode_matrix(t.U), V=encode_matrix(t.V))
            for t in ch.terms
        ],
    )


def write_model(model: BaseModel, path: PathLike) -> Path:
    """Write a file model as JSON, or YAML for a .yaml/.yml path."""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    if file_path.suffix.lower() in YAML_SUFFIXES:
        file_path.write_text(
            yaml.safe_dump(model.model_dump(mode="json"), sort_keys=False),
            encoding="utf-8",
        )
    else:
        file_path.write_text(model.model_dump_json(indent=2), encoding="utf-8")
    return file_path


def file_digest(path: PathLike) -> str:
    """SHA-256 of the raw file bytes, echoed in JSON output."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
