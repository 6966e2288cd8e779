import math
from typing import Any, Dict, List, Literal, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ComplexPair = Tuple[float, float]
MatrixRows = List[List[ComplexPair]]

FILE_NORM_TOL = 1e-9


class SeptransError(Exception):
    """Base exception for septrans-specific errors."""

    pass


class InputError(SeptransError):
    """Raised when an input violates a documented precondition."""

    pass


class InconsistencyError(SeptransError):
    """Raised when two independently computed results contradict each other."""

    pass


class ConfigurationError(SeptransError):
    """Raised when there's a settings validation error."""

    pass


def encode_vector(values: Sequence[complex]) -> List[ComplexPair]:
    """Encode complex numbers as [re, im] pairs."""
    return [(float(z.real), float(z.imag)) for z in np.asarray(values).ravel()]


def encode_matrix(matrix: np.ndarray) -> MatrixRows:
    """Encode a complex matrix as row-major nested [re, im] pairs."""
    return [encode_vector(row) for row in np.atleast_2d(matrix)]


def decode_vector(pairs: Sequence[ComplexPair]) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)


def decode_matrix(rows: MatrixRows) -> np.ndarray:
    if not rows:
        return np.zeros((0, 0), dtype=np.complex128)
    return np.array(
        [[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128
    )


def _check_square(rows: MatrixRows, size: int, label: str) -> None:
    if len(rows) != size or any(len(row) != size for row in rows):
        raise ValueError(f"{label} must be a {size}x{size} matrix")


class StateFile(BaseModel):
    """Serialized bipartite pure state."""

    model_config = ConfigDict(frozen=True)

    dims: Tuple[int, int]
    amplitudes: List[ComplexPair]

    @field_validator("dims")
    @classmethod
    def validate_dims(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 1 or v[1] < 1:
            raise ValueError("Dimensions must be positive integers")
        return v

    @model_validator(mode="after")
    def validate_amplitudes(self) -> "StateFile":
        """Validate length and normalization of the amplitude list."""
        d_a, d_b = self.dims
        if len(self.amplitudes) != d_a * d_b:
            raise ValueError(
                f"Expected {d_a * d_b} amplitudes for dims {d_a}x{d_b}, "
                f"got {len(self.amplitudes)}"
            )
        if not all(math.isfinite(re) and math.isfinite(im) for re, im in self.amplitudes):
            raise ValueError("Amplitudes must be finite")
        norm = math.sqrt(sum(re * re + im * im for re, im in self.amplitudes))
        if abs(norm - 1.0) > FILE_NORM_TOL:
            raise ValueError(f"State is not normalized (norm = {norm:.12g})")
        return self

    def to_array(self) -> np.ndarray:
        return decode_vector(self.amplitudes)


class KrausEntry(BaseModel):
    """One product Kraus operator A ⊗ B."""

    model_config = ConfigDict(frozen=True)

    A: MatrixRows
    B: MatrixRows


class OperationFile(BaseModel):
    """Serialized separable operation."""

    model_config = ConfigDict(frozen=True)

    dims: Tuple[int, int]
    kraus: List[KrausEntry] = Field(min_length=1)

    @field_validator("dims")
    @classmethod
    def validate_dims(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 1 or v[1] < 1:
            raise ValueError("Dimensions must be positive integers")
        return v

    @model_validator(mode="after")
    def validate_shapes(self) -> "OperationFile":
        """Validate that every Kraus factor matches the declared dimensions."""
        d_a, d_b = self.dims
        for index, entry in enumerate(self.kraus, start=1):
            _check_square(entry.A, d_a, f"kraus[{index}].A")
            _check_square(entry.B, d_b, f"kraus[{index}].B")
        return self


class ChannelTerm(BaseModel):
    """One weighted local unitary pair (p, U, V)."""

    model_config = ConfigDict(frozen=True)

    p: float = Field(gt=0.0)
    U: MatrixRows
    V: MatrixRows


class ChannelFile(BaseModel):
    """Serialized separable random unitary channel."""

    model_config = ConfigDict(frozen=True)

    dim: int = Field(ge=1)
    terms: List[ChannelTerm] = Field(min_length=1)

    @model_validator(mode="after")
    def validate_terms(self) -> "ChannelFile":
        """Validate shapes and the probability sum."""
        for index, term in enumerate(self.terms, start=1):
            _check_square(term.U, self.dim, f"terms[{index}].U")
            _check_square(term.V, self.dim, f"terms[{index}].V")
        total = sum(term.p for term in self.terms)
        if abs(total - 1.0) > FILE_NORM_TOL:
            raise ValueError(f"Probabilities must sum to 1 (sum = {total:.12g})")
        return self


class Settings(BaseModel):
    """Runtime settings shared by the CLI commands."""

    tol: float = 1e-9
    rank_cutoff: float = 1e-10
    workers: int = Field(default=1, ge=1)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    @field_validator("tol")
    @classmethod
    def validate_tol(cls, v: float) -> float:
        if not 0.0 < v < 1e-2:
            raise ValueError(f"Tolerance must lie in (0, 1e-2), got {v}")
        return v

    @field_validator("rank_cutoff")
    @classmethod
    def validate_rank_cutoff(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError(f"Rank cutoff must lie in (0, 1), got {v}")
        return v

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        return v.upper() if isinstance(v, str) else v


class JsonEnvelope(BaseModel):
    """Wrapper around every --json result."""

    model_config = ConfigDict(frozen=True)

    tool: str
    version: str
    tol: float
    inputs: Dict[str, str] = Field(default_factory=dict)
    result: Any
