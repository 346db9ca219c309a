"""Weak coherent pulses: Poisson photon statistics and PNS leakage.

A laser pulse with mean photon number mu carries n photons with probability
P(n) = exp(-mu) mu^n / n!. Bob can use any pulse with n >= 1; an ideal
photon-number-splitting eavesdropper keeps one photon in flight to Bob and
measures the surplus whenever n >= 2. Every suitability here is the
polarization table entry scaled by the relevant photon-number probability,
and each closed form has a matrix counterpart built on the truncated Fock
space (``*_matrix`` functions) that must agree with it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc

from .errors import DomainError, TruncationError, UndefinedRatioError
from .polarization import (
    DEFAULT_PROTOCOL,
    ProtocolConfig,
    alice_gun_density,
    bob_target_density,
    polarization_suitability_table,
)
from .qstate import DensityMatrix, HilbertLabel, tensor_product

TAIL_TOL = 1e-12
MU_MAX = 50.0


@dataclass(frozen=True)
class CoherentSourceModel:
    mu: float

    def __post_init__(self):
        if not math.isfinite(self.mu) or self.mu < 0:
            raise DomainError(f"mu must be finite and >= 0, got {self.mu!r}")
        if self.mu > MU_MAX:
            raise DomainError(f"mu={self.mu} exceeds supported maximum {MU_MAX}")

    @property
    def alpha(self) -> float:
        """Real coherent amplitude with |alpha|^2 = mu."""
        return math.sqrt(self.mu)

    @property
    def p_nonvacuum(self) -> float:
        return -math.expm1(-self.mu)

    @property
    def p_multiphoton(self) -> float:
        return multiphoton_probability(self.mu)


@dataclass(frozen=True)
class ChannelModel:
    """Link transmittance plus the per-bit arrival-time bias (ps).

    ``length_km`` is informational only.
    """

    eta: float = 1.0
    length_km: float = 0.0
    bias0_ps: float = 0.0
    bias1_ps: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta!r}")
        if self.length_km < 0:
            raise DomainError(f"length_km must be >= 0, got {self.length_km!r}")

    @property
    def timing_bias(self) -> tuple[float, float]:
        return (self.bias0_ps, self.bias1_ps)


@dataclass(frozen=True)
class FockDistribution:
    mu: float
    n_max: int
    weights: np.ndarray = field(repr=False)

    @property
    def tail(self) -> float:
        return poisson_tail(self.mu, self.n_max)


def multiphoton_probability(mu: float) -> float:
    """P(n >= 2) = 1 - e^-mu - mu e^-mu, written to avoid cancellation."""
    return -math.expm1(-mu) - mu * math.exp(-mu)


def poisson_tail(mu: float, n_max: int) -> float:
    """P(n > n_max) for a Poisson(mu) variable."""
    if mu == 0:
        return 0.0
    # regularized lower incomplete gamma: P(N >= k) = P(k, mu)
    return float(gammainc(n_max + 1, mu))


def truncation_order(mu: float, tail_tol: float = TAIL_TOL) -> int:
    """Smallest n_max whose Poisson tail mass beyond n_max is below ``tail_tol``."""
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    if not 0 < tail_tol < 1:
        raise DomainError(f"tail_tol must lie in (0, 1), got {tail_tol!r}")
    n = 0
    while poisson_tail(mu, n) >= tail_tol:
        n += 1
    return n


def poisson_weights(mu: float, n_max: int, tail_tol: float = TAIL_TOL) -> FockDistribution:
    """Poisson probabilities for n = 0..n_max via P(n) = P(n-1) * mu / n."""
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    if mu > MU_MAX:
        raise DomainError(f"mu={mu} exceeds supported maximum {MU_MAX}")
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max!r}")
    tail = poisson_tail(mu, n_max)
    if tail >= tail_tol:
        need = truncation_order(mu, tail_tol)
        raise TruncationError(
            f"Poisson tail {tail:.3g} beyond n_max={n_max} exceeds {tail_tol:g}; need n_max >= {need}",
            need,
        )
    weights = np.empty(n_max + 1)
    weights[0] = math.exp(-mu)
    for n in range(1, n_max + 1):
        weights[n] = weights[n - 1] * mu / n
    weights.setflags(write=False)
    return FockDistribution(mu, n_max, weights)


def number_space(n_max: int) -> HilbertLabel:
    return HilbertLabel("number", n_max + 1)


def weak_coherent_density(source: CoherentSourceModel, pol: DensityMatrix,
                          n_max: int | None = None) -> DensityMatrix:
    """Phase-averaged coherent state: (sum_n P(n)|n><n|) (x) rho_pol.

    Truncated at ``n_max`` (chosen automatically when omitted) and
    renormalized to unit trace.
    """
    if n_max is None:
        n_max = truncation_order(source.mu)
    dist = poisson_weights(source.mu, n_max)
    w = dist.weights / dist.weights.sum()
    number = DensityMatrix(number_space(n_max), np.diag(w))
    return tensor_product(number, pol)


def attenuate(source: CoherentSourceModel, channel: ChannelModel) -> CoherentSourceModel:
    """Loss thins a coherent state to another coherent state: alpha -> sqrt(eta) alpha."""
    return CoherentSourceModel(source.mu * channel.eta)


def bob_suitability_wcp(source: CoherentSourceModel, config: ProtocolConfig = DEFAULT_PROTOCOL,
                        i: int = 0, j: int = 0) -> float:
    """S_AB_ij = P(n >= 1) * Tr(rho_A,i rho_B,j); (1 - e^-mu) delta_ij / 2 by default."""
    return source.p_nonvacuum * polarization_suitability_table(config)[i, j]


def eve_suitability_pns(source: CoherentSourceModel, config: ProtocolConfig = DEFAULT_PROTOCOL,
                        i: int = 0, j: int = 0) -> float:
    """S_AE_ij = P(n >= 2) * Tr(rho_A,i rho_B,j), Eve measuring like Bob.

    Zero for mu == 0: no pulse ever has a spare photon to divert.
    """
    return source.p_multiphoton * polarization_suitability_table(config)[i, j]


def _threshold_suitability_matrix(source, config, i, j, n_min, n_max):
    rho_g = weak_coherent_density(source, alice_gun_density(config, i), n_max)
    n_dim = rho_g.dimension // 2
    count_gate = np.diag((np.arange(n_dim) >= n_min).astype(float))
    target = np.kron(count_gate, bob_target_density(config, j).entries)
    return float(np.einsum("ij,ji->", rho_g.entries, target).real)


def bob_suitability_matrix(source: CoherentSourceModel, config: ProtocolConfig = DEFAULT_PROTOCOL,
                           i: int = 0, j: int = 0, n_max: int | None = None) -> float:
    """Fock-space route to ``bob_suitability_wcp``.

    Traces the truncated source density against Bob's target restricted to
    the n >= 1 subspace.
    """
    return _threshold_suitability_matrix(source, config, i, j, 1, n_max)


def eve_suitability_matrix(source: CoherentSourceModel, config: ProtocolConfig = DEFAULT_PROTOCOL,
                           i: int = 0, j: int = 0, n_max: int | None = None) -> float:
    """Fock-space route to ``eve_suitability_pns`` (target gated on n >= 2)."""
    return _threshold_suitability_matrix(source, config, i, j, 2, n_max)


def suitability_tables(source: CoherentSourceModel, config: ProtocolConfig = DEFAULT_PROTOCOL,
                       eve_source: CoherentSourceModel | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(S_AB, S_AE_pns) as 2x2 arrays.

    ``eve_source`` lets Eve tap the pulse before channel loss; defaults to
    ``source``.
    """
    table = polarization_suitability_table(config).entries
    eve_source = source if eve_source is None else eve_source
    return source.p_nonvacuum * table, eve_source.p_multiphoton * table


def pns_leak_ratio(source: CoherentSourceModel, config: ProtocolConfig = DEFAULT_PROTOCOL) -> float:
    """Gamma = sum_ij S_AE_ij / sum_ij S_AB_ij.

    For the default protocol this is (1 - e^-mu - mu e^-mu) / (1 - e^-mu).
    """
    if source.mu == 0:
        raise UndefinedRatioError("Gamma is undefined for mu = 0 (Bob never detects)")
    s_ab, s_ae = suitability_tables(source, config)
    denom = s_ab.sum()
    if denom == 0:
        raise UndefinedRatioError("Bob's suitability sum is zero for this protocol")
    return float(s_ae.sum() / denom)


def gamma_small_alpha(mu: float) -> float:
    """First-order small-mu approximation Gamma ~ mu, as usually quoted.

    The exact ratio tends to mu/2 as mu -> 0, so this overstates the PNS
    leak by about a factor of two; use ``pns_leak_ratio`` for numbers.
    """
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    return float(mu)
