"""Dense density-matrix algebra and the suitability metric.

All objects here are small (a few dozen dimensions at most), immutable, and
compared against a fixed absolute tolerance of ``ATOL``.

The suitability of a source ("gun") for a detector ("target") is

    S_GT = Tr(rho_G rho_T) / Tr(rho_T rho_T)

which reduces to the squared overlap when both are pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateTargetError, DimensionError, DomainError, InvalidStateError

ATOL = 1e-12
MAX_DIMENSION = 256


def _check_dimension(dim: int) -> None:
    if dim > MAX_DIMENSION:
        raise DimensionError(
            f"dimension {dim} exceeds MAX_DIMENSION={MAX_DIMENSION}"
        )


@dataclass(frozen=True)
class HilbertLabel:
    """Name and dimension of a (possibly composite) state space."""

    name: str
    dimension: int

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dimension!r}")
        _check_dimension(self.dimension)

    def tensor(self, other: "HilbertLabel") -> "HilbertLabel":
        return HilbertLabel(f"{self.name}*{other.name}", self.dimension * other.dimension)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    space: HilbertLabel
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (self.space.dimension,):
            raise DimensionError(
                f"{self.space.name} has dimension {self.space.dimension}, "
                f"got {amps.shape[0]} amplitudes"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise InvalidStateError(f"state norm is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, space: HilbertLabel, amplitudes) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise DomainError("cannot normalize the zero vector")
        return cls(space, amps / norm)

    def inner(self, other: "PureState") -> complex:
        """<self|other>."""
        if self.space != other.space:
            raise DimensionError(f"{self.space} vs {other.space}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class Violation:
    """One failed density-matrix invariant and how badly it failed."""

    invariant: str  # "square", "hermitian", "trace" or "psd"
    magnitude: float
    detail: str = ""


def validate(matrix, atol: float = ATOL) -> list[Violation]:
    """Diagnose a candidate density matrix.

    Accepts a ``DensityMatrix`` or any array-like. Returns an empty list when
    the matrix is Hermitian, has unit trace and no eigenvalue below ``-atol``.
    The ``magnitude`` of each violation is the offending quantity itself:
    max Hermiticity residual, the trace, or the most negative eigenvalue.
    """
    entries = matrix.entries if isinstance(matrix, DensityMatrix) else np.asarray(matrix, dtype=complex)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        return [Violation("square", float("nan"), f"shape {entries.shape}")]

    found = []
    herm_residual = float(np.max(np.abs(entries - entries.conj().T))) if entries.size else 0.0
    if herm_residual > atol:
        found.append(Violation("hermitian", herm_residual, "max |rho - rho^dagger|"))
    trace = complex(np.trace(entries))
    if abs(trace - 1.0) > atol:
        found.append(Violation("trace", float(trace.real), f"trace = {trace!r}"))
    # eigvalsh reads only one triangle, so symmetrize first
    eigs = np.linalg.eigvalsh((entries + entries.conj().T) / 2)
    lowest = float(eigs[0])
    if lowest < -atol:
        found.append(Violation("psd", lowest, f"min eigenvalue {lowest!r}"))
    return found


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix on ``space``.

    Construction validates; pass ``check=False`` only for intermediates that
    are immediately renormalized inside a single function.
    """

    space: HilbertLabel
    entries: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        entries = _frozen(self.entries)
        dim = self.space.dimension
        if entries.shape != (dim, dim):
            raise DimensionError(f"{self.space.name} expects ({dim}, {dim}), got {entries.shape}")
        object.__setattr__(self, "entries", entries)
        if self.check:
            problems = validate(entries)
            if problems:
                summary = "; ".join(f"{v.invariant} ({v.magnitude:.3g})" for v in problems)
                raise InvalidStateError(f"not a density matrix: {summary}", problems)

    @property
    def dimension(self) -> int:
        return self.space.dimension

    @classmethod
    def maximally_mixed(cls, space: HilbertLabel) -> "DensityMatrix":
        return cls(space, np.eye(space.dimension) / space.dimension)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def allclose(self, other, atol: float = ATOL) -> bool:
        other = other.entries if isinstance(other, DensityMatrix) else np.asarray(other)
        return bool(np.allclose(self.entries, other, rtol=0, atol=atol))


@dataclass(frozen=True)
class SuitabilityValue:
    value: float
    numerator: float  # F_GT
    denominator: float  # F_TT

    def __float__(self):
        return self.value


def _same_space(a: DensityMatrix, b: DensityMatrix) -> None:
    if a.space != b.space:
        raise DimensionError(f"space mismatch: {a.space} vs {b.space}")


def density_from_states(states: Sequence[PureState]) -> DensityMatrix:
    """Uniform mixture (1/N) sum_i |psi_i><psi_i| of the given pure states."""
    states = list(states)
    if not states:
        raise DomainError("need at least one state")
    space = states[0].space
    for s in states[1:]:
        if s.space != space:
            raise DimensionError(f"space mismatch: {space} vs {s.space}")
    amps = np.stack([s.amplitudes for s in states])
    rho = amps.T @ amps.conj() / len(states)
    return DensityMatrix(space, rho)


def fidelity_product(a: DensityMatrix, b: DensityMatrix) -> float:
    """F_ab = Tr(rho_a rho_b), real for Hermitian inputs."""
    _same_space(a, b)
    # Tr(AB) = sum_ij A_ij B_ji without forming the product
    return float(np.einsum("ij,ji->", a.entries, b.entries).real)


def purity(rho: DensityMatrix) -> float:
    return fidelity_product(rho, rho)


def suitability(gun: DensityMatrix, target: DensityMatrix) -> SuitabilityValue:
    f_gt = fidelity_product(gun, target)
    f_tt = purity(target)
    if f_tt <= 0.0:
        raise DegenerateTargetError("target has Tr(rho_T^2) = 0")
    return SuitabilityValue(f_gt / f_tt, f_gt, f_tt)


def tensor_product(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(a.space.tensor(b.space), np.kron(a.entries, b.entries), check=a.check and b.check)


def partial_trace(rho: DensityMatrix, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Reduced matrix of a bipartite ``rho`` with factor dimensions ``dims``.

    ``keep`` is 0 for the first factor, 1 for the second.
    """
    d0, d1 = dims
    if d0 * d1 != rho.dimension:
        raise DimensionError(f"{dims} does not factor dimension {rho.dimension}")
    t = rho.entries.reshape(d0, d1, d0, d1)
    if keep == 0:
        return np.einsum("ajbj->ab", t)
    if keep == 1:
        return np.einsum("iaib->ab", t)
    raise DomainError("keep must be 0 or 1")


def random_density(dim: int, rng: np.random.Generator, n_states: int | None = None,
                   name: str = "random") -> DensityMatrix:
    """Random mixture of Haar-ish random pure states; handy for property checks."""
    n_states = n_states or int(rng.integers(1, 2 * dim + 1))
    vecs = rng.normal(size=(n_states, dim)) + 1j * rng.normal(size=(n_states, dim))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    weights = rng.dirichlet(np.ones(n_states))
    rho = (vecs.T * weights) @ vecs.conj()
    return DensityMatrix(HilbertLabel(name, dim), rho)
