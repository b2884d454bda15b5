"""Truncated multimode Fock space and Kronecker-embedded mode operators.

Mode order is fixed as [cavity, mech1, mech2, detector]; the composite
basis index runs row-major over the per-mode truncation dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ParameterError

DEFAULT_DIM_CAP = 256

MODE_CAVITY = 0
MODE_MECH1 = 1
MODE_MECH2 = 2
MODE_DETECTOR = 3

_HERMITIAN_ATOL = 1e-12


@dataclass
class OperatorMatrix:
    """Dense complex operator on the composite space.

    When ``hermitian`` is True the matrix is verified against
    ``max |M - M^dag| < 1e-12`` at construction.
    """

    mat: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=complex)
        if self.mat.ndim != 2 or self.mat.shape[0] != self.mat.shape[1]:
            raise ParameterError("operator matrix must be square")
        if self.hermitian:
            dev = np.max(np.abs(self.mat - self.mat.conj().T))
            if dev >= _HERMITIAN_ATOL:
                raise ParameterError(
                    f"matrix flagged hermitian deviates by {dev:.3e}"
                )

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


def _single_mode_annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


@dataclass
class ModeSpace:
    """Composite truncated Fock space for [cavity, mech1, mech2, detector].

    Immutable after construction; the operator cache is read-only and the
    instance can be shared freely across workers.
    """

    dims: tuple
    total_dim: int = field(init=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.total_dim = int(np.prod(self.dims))

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def _embed(self, mode: int, op: np.ndarray) -> np.ndarray:
        mats = [np.eye(d, dtype=complex) for d in self.dims]
        mats[mode] = op
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    def _check_mode(self, mode: int) -> None:
        if not 0 <= mode < self.n_modes:
            raise ParameterError(f"mode index {mode} out of range for {self.n_modes} modes")

    def annihilation(self, mode: int) -> np.ndarray:
        return self._op(mode, "annihilation")

    def creation(self, mode: int) -> np.ndarray:
        return self._op(mode, "creation")

    def number(self, mode: int) -> np.ndarray:
        return self._op(mode, "number")

    def identity(self) -> np.ndarray:
        return np.eye(self.total_dim, dtype=complex)

    def _op(self, mode: int, kind: str) -> np.ndarray:
        self._check_mode(mode)
        key = (mode, kind)
        if key not in self._cache:
            a = _single_mode_annihilation(self.dims[mode])
            if kind == "annihilation":
                local = a
            elif kind == "creation":
                local = a.conj().T
            elif kind == "number":
                local = a.conj().T @ a
            else:
                raise ParameterError(f"unknown operator kind {kind!r}")
            self._cache[key] = self._embed(mode, local)
        return self._cache[key]

    def projector(self, mode: int, level: int) -> np.ndarray:
        self._check_mode(mode)
        if not 0 <= level < self.dims[mode]:
            raise ParameterError(
                f"Fock level {level} out of range for mode {mode} (dim {self.dims[mode]})"
            )
        key = (mode, f"proj{level}")
        if key not in self._cache:
            local = np.zeros((self.dims[mode],) * 2, dtype=complex)
            local[level, level] = 1.0
            self._cache[key] = self._embed(mode, local)
        return self._cache[key]

    def basis_labels(self):
        """Occupation tuple for every composite basis index, row-major."""
        return [
            tuple(idx)
            for idx in np.ndindex(*self.dims)
        ]


def build_mode_space(dims, dim_cap: int = DEFAULT_DIM_CAP) -> ModeSpace:
    """Build the composite space and pre-cache all mode operators."""
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ParameterError("need at least one mode")
    if any(d < 2 for d in dims):
        raise ParameterError(f"every mode needs >= 2 Fock levels, got {dims}")
    total = int(np.prod(dims))
    if total > dim_cap:
        raise CapacityError(f"total dimension {total} exceeds cap {dim_cap}")
    space = ModeSpace(dims)
    for mode in range(space.n_modes):
        for kind in ("annihilation", "creation", "number"):
            space._op(mode, kind)
    return space


def ladder_operator(space: ModeSpace, mode: int, kind: str) -> OperatorMatrix:
    """Kronecker-embedded ladder operator acting as identity elsewhere."""
    mat = space._op(mode, kind)
    return OperatorMatrix(mat, hermitian=(kind == "number"))


def embed_projector(space: ModeSpace, mode: int, level: int) -> OperatorMatrix:
    """Projector onto a single Fock level of one mode."""
    return OperatorMatrix(space.projector(mode, level), hermitian=True)
