"""Two-state polarization protocol: gun/target states and the 2x2 table.

Alice encodes bit 0 as |H> and bit 1 as (|H> - |V>)/sqrt2. Bob's analyzer for
setting 0 passes (|H> + |V>)/sqrt2 and for setting 1 passes |V>. Each of Bob's
analyzers is orthogonal to exactly one of Alice's states, so a click on
setting j means Alice could only have sent i == j, with probability 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .qstate import ATOL, DensityMatrix, HilbertLabel, PureState, fidelity_product

POLARIZATION = HilbertLabel("polarization", 2)

_S = 1 / math.sqrt(2)


def jones(h, v) -> PureState:
    """Polarization state from its H and V amplitudes (must be normalized)."""
    return PureState(POLARIZATION, np.array([h, v], dtype=complex))


H = jones(1, 0)
V = jones(0, 1)
DIAG = jones(_S, _S)
ANTIDIAG = jones(_S, -_S)


@dataclass(frozen=True)
class ProtocolConfig:
    alice_states: tuple = (H, ANTIDIAG)
    bob_targets: tuple = (DIAG, V)

    def __post_init__(self):
        for name in ("alice_states", "bob_targets"):
            states = tuple(getattr(self, name))
            if len(states) != 2:
                raise DomainError(f"{name} needs exactly two states, got {len(states)}")
            for s in states:
                if s.space != POLARIZATION:
                    raise DomainError(f"{name} must be polarization states, got {s.space}")
            object.__setattr__(self, name, states)


DEFAULT_PROTOCOL = ProtocolConfig()


@dataclass(frozen=True)
class SuitabilityTable:
    """entries[i][j]: Alice bit i against Bob setting j."""

    entries: np.ndarray = field(repr=False)

    @property
    def sum_ab(self) -> float:
        return float(self.entries.sum())

    def __getitem__(self, ij):
        return float(self.entries[ij])

    def tolist(self) -> list[list[float]]:
        return self.entries.tolist()


def _bit(b) -> int:
    if b not in (0, 1):
        raise DomainError(f"bit must be 0 or 1, got {b!r}")
    return int(b)


def alice_gun_density(config: ProtocolConfig, i: int) -> DensityMatrix:
    return config.alice_states[_bit(i)].projector()


def bob_target_density(config: ProtocolConfig, j: int) -> DensityMatrix:
    return config.bob_targets[_bit(j)].projector()


def polarization_suitability_table(config: ProtocolConfig = DEFAULT_PROTOCOL) -> SuitabilityTable:
    """Lossless, unit-efficiency detection probabilities Tr(rho_A,i rho_B,j).

    Bob's target is a single pure state per setting, so Tr(rho_T^2) = 1 and the
    suitability is the bare fidelity product.
    """
    table = np.empty((2, 2))
    for i in (0, 1):
        rho_a = alice_gun_density(config, i)
        for j in (0, 1):
            table[i, j] = fidelity_product(rho_a, bob_target_density(config, j))
    table.setflags(write=False)
    return SuitabilityTable(table)


@dataclass(frozen=True)
class Finding:
    kind: str  # "off_diagonal", "asymmetry" or "degenerate"
    where: tuple
    value: float

    def __str__(self):
        return f"{self.kind} at {self.where}: {self.value:.6g}"


def protocol_audit(config: ProtocolConfig, atol: float = ATOL) -> list[Finding]:
    """Flag departures from the clean 0.5*delta_ij table structure."""
    table = polarization_suitability_table(config).entries
    findings = []
    for i, j in ((0, 1), (1, 0)):
        if table[i, j] > atol:
            findings.append(Finding("off_diagonal", (i, j), float(table[i, j])))
    if abs(table[0, 0] - table[1, 1]) > atol:
        findings.append(Finding("asymmetry", (0, 1), float(table[0, 0] - table[1, 1])))
    a0, a1 = config.alice_states
    overlap = abs(a0.inner(a1)) ** 2
    if abs(overlap - 1.0) <= atol:
        findings.append(Finding("degenerate", (0, 1), float(overlap)))
    return findings
