"""Temporal/spectral modes and the side-channel leakage they open up.

Each encoded bit rides on a Gaussian wavepacket

    psi(t) = (2 pi sigma^2)^(-1/4) exp(-(t - t_c)^2 / (4 sigma^2))

whose intensity |psi|^2 has standard deviation ``sigma`` (the pulse width).
If the two bits' wavepackets do not overlap perfectly, an eavesdropper with a
non-demolition arrival-time detector learns the bit without touching the
polarization. With mode overlap omega, her suitability is
(1/2) delta_ij (1 - omega) and the share of Bob's bits she recovers is

    (1 - omega) / (1 - exp(-mu)),

which can exceed 1. Privacy amplification cannot recover from that.

Times are in picoseconds throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DomainError, UndefinedRatioError
from .photon_number import CoherentSourceModel, FockDistribution, poisson_weights
from .qstate import PureState

DEFAULT_THRESHOLD = 0.11
N_TARGETS = 2


@dataclass(frozen=True)
class ModeWavefunction:
    center: float
    width: float
    spectral_label: Optional[float] = None

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError(f"mode width must be > 0, got {self.width!r}")

    def amplitude(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        s2 = self.width ** 2
        return (2 * math.pi * s2) ** -0.25 * np.exp(-((t - self.center) ** 2) / (4 * s2))

    def intensity(self, t) -> np.ndarray:
        return self.amplitude(t) ** 2

    def smeared(self, delta_t: float) -> "ModeWavefunction":
        """Same mode with variance inflated by a uniform time bin of size ``delta_t``."""
        return ModeWavefunction(self.center, math.sqrt(self.width ** 2 + delta_t ** 2 / 12),
                                self.spectral_label)


@dataclass(frozen=True)
class ResolutionModel:
    delta_t: float = 0.0

    def __post_init__(self):
        if not self.delta_t >= 0:
            raise DomainError(f"delta_t must be >= 0, got {self.delta_t!r}")


@dataclass(frozen=True)
class FullPhotonState:
    number: FockDistribution
    mode: ModeWavefunction
    polarization: PureState
    bit: int

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise DomainError(f"bit must be 0 or 1, got {self.bit!r}")

    @classmethod
    def build(cls, mu: float, mode: ModeWavefunction, polarization: PureState, bit: int,
              n_max: int | None = None) -> "FullPhotonState":
        from .photon_number import truncation_order

        n_max = truncation_order(mu) if n_max is None else n_max
        return cls(poisson_weights(mu, n_max), mode, polarization, bit)


@dataclass(frozen=True)
class LeakageReport:
    mode_overlap: float
    s_ae_table: np.ndarray = field(repr=False)
    leak_ratio: float
    secure: bool
    breakdown: bool
    threshold: float = DEFAULT_THRESHOLD


def spectral_factor(a: ModeWavefunction, b: ModeWavefunction) -> float:
    return 1.0 if a.spectral_label == b.spectral_label else 0.0


def mode_overlap(a: ModeWavefunction, b: ModeWavefunction) -> float:
    """<Omega_a|Omega_b> for real Gaussian amplitudes, times the spectral factor."""
    sa2, sb2 = a.width ** 2, b.width ** 2
    s = sa2 + sb2
    prefactor = math.sqrt(2 * a.width * b.width / s)
    return prefactor * math.exp(-((a.center - b.center) ** 2) / (4 * s)) * spectral_factor(a, b)


def resolution_limited_overlap(a: ModeWavefunction, b: ModeWavefunction,
                               res: ResolutionModel) -> float:
    """Overlap as seen through a detector with time resolution ``res.delta_t``."""
    if res.delta_t == 0:
        return mode_overlap(a, b)
    return mode_overlap(a.smeared(res.delta_t), b.smeared(res.delta_t))


def interference_pattern(a: FullPhotonState, b: FullPhotonState, grid) -> np.ndarray:
    """I(t) = |psi_a(t) Pi_a + psi_b(t) Pi_b|^2 on the sample times ``grid``.

    The cross term carries the polarization inner product, so orthogonal
    polarizations (or distinct spectral labels) show no interference.
    """
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("grid must be a non-empty 1-D array of times")
    if t.size > 1 and not (np.all(np.diff(t) > 0) or np.all(np.diff(t) < 0)):
        raise DomainError("grid must be strictly monotone")
    pa, pb = a.mode.amplitude(t), b.mode.amplitude(t)
    pol = a.polarization.inner(b.polarization) * spectral_factor(a.mode, b.mode)
    return pa ** 2 + pb ** 2 + 2 * pa * pb * pol.real


def eve_suitability_sidechannel(state0: FullPhotonState, state1: FullPhotonState,
                                res: ResolutionModel, i: int, j: int) -> float:
    """S_AE_ij = (1/2) delta_ij (1 - omega) for the two encoded modes.

    The bracket {|Psi_i><Psi_j| + |Psi_j><Psi_i|} / N_T is read as the real
    symmetric overlap 2 Re<Psi_i|Psi_j> / 2 = omega, using only the temporal
    and spectral parts; the polarization is the key itself and Eve never
    analyzes it.
    """
    if i not in (0, 1) or j not in (0, 1):
        raise DomainError("bits must be 0 or 1")
    omega = resolution_limited_overlap(state0.mode, state1.mode, res)
    return sidechannel_suitability_from_overlap(omega, i, j)


def sidechannel_suitability_from_overlap(omega: float, i: int, j: int) -> float:
    if i != j:
        return 0.0
    return 0.5 * (1.0 - (2.0 * omega) / N_TARGETS)


def leak_ratio_from_overlap(omega: float, mu: float, half_numerator: bool = False) -> float:
    """(1 - omega) / (1 - e^-mu).

    ``half_numerator`` divides Eve's single diagonal entry rather than her sum
    over settings by Bob's summed suitability, i.e. halves the ratio; it is a
    diagnostic for comparing bookkeeping conventions only.
    """
    if mu <= 0:
        raise UndefinedRatioError("side-channel ratio undefined for mu = 0")
    numerator = 1.0 - omega
    if half_numerator:
        numerator *= 0.5
    return numerator / -math.expm1(-mu)


def side_channel_leak_ratio(source: CoherentSourceModel, state0: FullPhotonState,
                            state1: FullPhotonState, res: ResolutionModel,
                            threshold: float = DEFAULT_THRESHOLD,
                            half_numerator: bool = False) -> LeakageReport:
    if source.mu == 0:
        raise UndefinedRatioError("side-channel ratio undefined for mu = 0")
    omega = resolution_limited_overlap(state0.mode, state1.mode, res)
    table = np.array([[sidechannel_suitability_from_overlap(omega, i, j) for j in (0, 1)]
                      for i in (0, 1)])
    ratio = leak_ratio_from_overlap(omega, source.mu, half_numerator)
    breakdown = ratio >= 1.0
    return LeakageReport(
        mode_overlap=omega,
        s_ae_table=table,
        leak_ratio=ratio,
        secure=(not breakdown) and ratio < threshold,
        breakdown=breakdown,
        threshold=threshold,
    )


def hom_coincidence(a: FullPhotonState, b: FullPhotonState) -> float:
    """Two-photon coincidence probability at a 50:50 beam splitter.

    (1 - |<Psi_a|Psi_b>|^2) / 2: zero for identical photons, 1/2 for fully
    distinguishable ones.
    """
    overlap = mode_overlap(a.mode, b.mode) * a.polarization.inner(b.polarization)
    visibility = min(abs(overlap) ** 2, 1.0)
    return 0.5 * (1.0 - visibility)


def overlap_breakdown_threshold(mu: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Mode overlap omega* at which the side-channel ratio reaches exactly 1.

    Located by bisection on omega (the ratio falls as omega grows); the closed
    form is exp(-mu).
    """
    if mu <= 0:
        raise UndefinedRatioError("no breakdown threshold for mu = 0")
    lo, hi = 0.0, 1.0  # ratio(lo) >= 1 > ratio(hi) = 0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if leak_ratio_from_overlap(mid, mu) >= 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
    raise ConvergenceError(f"omega bisection did not reach {tol:g} in {max_iter} steps")


def breakdown_boundary(source: CoherentSourceModel, width: float, res: ResolutionModel,
                       tol: float = 1e-9, max_iter: int = 200) -> float:
    """Bit-to-bit timing offset (ps) at which the side-channel ratio hits 1.

    Equal-width modes on the same spectral label. Returns ``math.inf`` when the
    ratio cannot reach 1 at any separation, which happens only once
    1 - exp(-mu) rounds to 1.
    """
    if source.mu <= 0:
        raise UndefinedRatioError("no breakdown boundary for mu = 0")
    if not width > 0:
        raise DomainError(f"width must be > 0, got {width!r}")
    if -math.expm1(-source.mu) >= 1.0:
        return math.inf

    def ratio(dt):
        a = ModeWavefunction(0.0, width)
        b = ModeWavefunction(dt, width)
        return leak_ratio_from_overlap(resolution_limited_overlap(a, b, res), source.mu)

    lo, hi = 0.0, width
    steps = 0
    while ratio(hi) < 1.0:
        lo, hi = hi, 2 * hi
        steps += 1
        if steps > max_iter:
            raise ConvergenceError("could not bracket the breakdown separation")
    for _ in range(max_iter):
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if ratio(mid) >= 1.0:
            hi = mid
        else:
            lo = mid
    raise ConvergenceError(f"separation bisection did not reach {tol:g} ps in {max_iter} steps")
