"""Suitability calculus for two-state polarization QKD links.

Quantifies how well Alice's source serves Bob's analyzer and how much an
eavesdropper can learn through photon-number splitting or through timing and
spectral side channels, with a seeded Monte Carlo cross-check.
"""
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateTargetError,
    DimensionError,
    DomainError,
    InvalidStateError,
    QKDSuitError,
    TruncationError,
    UndefinedRatioError,
)
from .qstate import (
    DensityMatrix,
    HilbertLabel,
    PureState,
    SuitabilityValue,
    density_from_states,
    fidelity_product,
    purity,
    suitability,
    tensor_product,
    validate,
)
from .polarization import (
    DEFAULT_PROTOCOL,
    ProtocolConfig,
    SuitabilityTable,
    alice_gun_density,
    bob_target_density,
    polarization_suitability_table,
    protocol_audit,
)
from .photon_number import (
    ChannelModel,
    CoherentSourceModel,
    FockDistribution,
    attenuate,
    bob_suitability_wcp,
    eve_suitability_pns,
    gamma_small_alpha,
    pns_leak_ratio,
    poisson_weights,
    truncation_order,
    weak_coherent_density,
)
from .extended import (
    FullPhotonState,
    LeakageReport,
    ModeWavefunction,
    ResolutionModel,
    breakdown_boundary,
    eve_suitability_sidechannel,
    hom_coincidence,
    interference_pattern,
    mode_overlap,
    resolution_limited_overlap,
    side_channel_leak_ratio,
)
from .eavesdrop import (
    EveStrategy,
    SimulationConfig,
    SimulationResult,
    empirical_gamma,
    eve_timing_guess,
    security_verdict,
    simulate_exchange,
)

__version__ = "0.1.0"
