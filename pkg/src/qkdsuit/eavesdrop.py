"""Seeded pulse-level Monte Carlo of the Alice -> Eve's cloud -> Bob link.

Per pulse: Alice's bit i and Bob's setting j are uniform, the source emits
n ~ Poisson(mu) photons, and loss thins them binomially on the way to Bob.
Bob clicks with probability table[i, j] whenever at least one photon
arrives. Eve's cloud lets Bob's photon through untouched. A PNS Eve measures
the surplus like Bob does, succeeding with probability table[i, j] when her
tap saw n >= 2. A timing Eve records every photon-bearing pulse's arrival
time (smeared by her resolution) and makes a maximum-likelihood bit guess.

Randomness is counter based: pulses are cut into fixed blocks of
``BLOCK_SIZE`` and block ``b`` draws from Philox keyed by (seed, b). Counts
are plain sums over blocks, so results do not depend on worker count or
block order.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from .errors import DomainError, UndefinedRatioError
from .extended import DEFAULT_THRESHOLD, ModeWavefunction, ResolutionModel
from .photon_number import ChannelModel, CoherentSourceModel
from .polarization import DEFAULT_PROTOCOL, ProtocolConfig, polarization_suitability_table

BLOCK_SIZE = 1 << 16
STRATEGIES = ("none", "pns", "timing_qnd", "combined")
ORDERS = ("eve_first", "loss_first")
POLICIES = ("max", "sum")


@dataclass(frozen=True)
class EveStrategy:
    kind: str = "none"
    resolution: ResolutionModel | None = None

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise DomainError(f"unknown strategy {self.kind!r}; expected one of {STRATEGIES}")
        if self.uses_timing and self.resolution is None:
            object.__setattr__(self, "resolution", ResolutionModel(0.0))
        if not self.uses_timing and self.resolution is not None:
            raise DomainError(f"strategy {self.kind!r} takes no resolution model")

    @property
    def uses_pns(self) -> bool:
        return self.kind in ("pns", "combined")

    @property
    def uses_timing(self) -> bool:
        return self.kind in ("timing_qnd", "combined")


@dataclass(frozen=True)
class SimulationConfig:
    source: CoherentSourceModel = CoherentSourceModel(0.1)
    channel: ChannelModel = ChannelModel()
    protocol: ProtocolConfig = DEFAULT_PROTOCOL
    modes: tuple = (ModeWavefunction(0.0, 1.0), ModeWavefunction(0.0, 1.0))
    eve: EveStrategy = EveStrategy()
    n_pulses: int = 1_000_000
    seed: int = 0
    order: str = "eve_first"  # where Eve taps relative to channel loss
    workers: int = 1

    def __post_init__(self):
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise DomainError(f"n_pulses must be a positive integer, got {self.n_pulses!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.order not in ORDERS:
            raise DomainError(f"order must be one of {ORDERS}, got {self.order!r}")
        if len(self.modes) != 2:
            raise DomainError("need exactly one mode per bit")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    @classmethod
    def with_channel_modes(cls, sigma_ps: float = 1.0, **kwargs) -> "SimulationConfig":
        """Config whose per-bit mode centers are the channel's timing bias."""
        channel = kwargs.get("channel", ChannelModel())
        modes = tuple(ModeWavefunction(c, sigma_ps) for c in channel.timing_bias)
        return cls(modes=modes, **kwargs)


@dataclass
class SimulationResult:
    pulses: int
    bob_detections: int
    sift_rate: float
    eve_pns_hits: int
    eve_timing_correct: int
    eve_timing_guesses: int
    eve_fraction: float
    per_config_counts: list
    seed: int
    strategy: str = "none"
    elapsed: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {
            "pulses": self.pulses,
            "bob_detections": self.bob_detections,
            "sift_rate": self.sift_rate,
            "eve_pns_hits": self.eve_pns_hits,
            "eve_timing_correct": self.eve_timing_correct,
            "eve_timing_guesses": self.eve_timing_guesses,
            "eve_fraction": self.eve_fraction,
            "per_config_counts": self.per_config_counts,
            "seed": self.seed,
            "strategy": self.strategy,
            "elapsed": self.elapsed,
        }


def smeared_logpdf(t, mode: ModeWavefunction, delta_t: float) -> np.ndarray:
    """Log density of the measured arrival time for one bit's mode.

    The intensity profile is Gaussian with sd ``mode.width``; a resolution of
    ``delta_t`` convolves it with a uniform kernel of that width.
    """
    t = np.asarray(t, dtype=float)
    w = mode.width
    if delta_t == 0:
        z = (t - mode.center) / w
        return -0.5 * z * z - math.log(w) - 0.5 * math.log(2 * math.pi)
    a = (t - mode.center - delta_t / 2) / w
    b = (t - mode.center + delta_t / 2) / w
    # Phi(b) - Phi(a) == Phi(-a) - Phi(-b); use the side away from the upper tail
    flip = a > 0
    hi = np.where(flip, -a, b)
    lo = np.where(flip, -b, a)
    log_hi = log_ndtr(hi)
    with np.errstate(divide="ignore"):
        return log_hi + np.log1p(-np.exp(log_ndtr(lo) - log_hi)) - math.log(delta_t)


def _ml_guess(t, modes, delta_t) -> np.ndarray:
    ll0 = smeared_logpdf(t, modes[0], delta_t)
    ll1 = smeared_logpdf(t, modes[1], delta_t)
    return (ll1 > ll0).astype(np.int8)


def eve_timing_guess(t_sample: float, modes, res: ResolutionModel) -> int:
    """Maximum-likelihood bit for one measured arrival time; ties go to 0."""
    return int(_ml_guess(np.array([t_sample]), modes, res.delta_t)[0])


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate_block(args) -> np.ndarray:
    """Counts for one block: [bob(2x2 flat, 4), pns, timing_correct, timing_guesses]."""
    (seed, block, size, mu, eta, table, use_pns, use_timing, modes, delta_t, eve_first) = args
    rng = _block_rng(seed, block)
    counts = np.zeros(7, dtype=np.int64)
    n_src = rng.poisson(mu, size)
    # vacuum pulses can never contribute; only draw for the rest
    n_src = n_src[n_src > 0]
    k = n_src.size
    if k == 0:
        return counts
    i = rng.integers(0, 2, k)
    j = rng.integers(0, 2, k)
    n_bob = rng.binomial(n_src, eta) if eta < 1.0 else n_src
    p = table[i, j]
    bob = (n_bob >= 1) & (rng.random(k) < p)
    counts[:4] = np.bincount(2 * i[bob] + j[bob], minlength=4)
    if use_pns:
        n_eve = n_src if eve_first else n_bob
        counts[4] = np.count_nonzero((n_eve >= 2) & (rng.random(k) < p))
    if use_timing:
        present = n_src >= 1 if eve_first else n_bob >= 1
        ii = i[present]
        centers = np.array([modes[0].center, modes[1].center])[ii]
        widths = np.array([modes[0].width, modes[1].width])[ii]
        t = centers + widths * rng.standard_normal(ii.size)
        if delta_t > 0:
            t = t + rng.uniform(-delta_t / 2, delta_t / 2, ii.size)
        guess = _ml_guess(t, modes, delta_t)
        counts[5] = np.count_nonzero(guess == ii)
        counts[6] = ii.size
    return counts


def _block_args(config: SimulationConfig):
    table = polarization_suitability_table(config.protocol).entries
    delta_t = config.eve.resolution.delta_t if config.eve.uses_timing else 0.0
    n_blocks = -(-config.n_pulses // BLOCK_SIZE)
    for b in range(n_blocks):
        size = min(BLOCK_SIZE, config.n_pulses - b * BLOCK_SIZE)
        yield (config.seed, b, size, config.source.mu, config.channel.eta, table,
               config.eve.uses_pns, config.eve.uses_timing, config.modes, delta_t,
               config.order == "eve_first")


def _eve_fraction(kind, bob, pns, correct, guesses) -> float:
    """Eve's haul relative to Bob's sifted bits.

    PNS: hits / detections. Timing: bits learned beyond coin-flipping,
    max(0, 2*correct - guesses), per detection. Combined: the larger.
    """
    if bob == 0:
        return 0.0
    pns_part = pns / bob
    timing_part = max(0, 2 * correct - guesses) / bob
    return {"none": 0.0, "pns": pns_part, "timing_qnd": timing_part,
            "combined": max(pns_part, timing_part)}[kind]


def simulate_exchange(config: SimulationConfig, workers: int | None = None) -> SimulationResult:
    workers = config.workers if workers is None else workers
    start = time.perf_counter()
    if workers == 1:
        totals = sum(_simulate_block(a) for a in _block_args(config))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            totals = sum(pool.map(_simulate_block, _block_args(config), chunksize=4))
    totals = np.asarray(totals, dtype=np.int64)
    per_config = totals[:4].reshape(2, 2)
    bob = int(per_config.sum())
    pns, correct, guesses = (int(x) for x in totals[4:])
    return SimulationResult(
        pulses=config.n_pulses,
        bob_detections=bob,
        sift_rate=bob / config.n_pulses,
        eve_pns_hits=pns,
        eve_timing_correct=correct,
        eve_timing_guesses=guesses,
        eve_fraction=_eve_fraction(config.eve.kind, bob, pns, correct, guesses),
        per_config_counts=per_config.tolist(),
        seed=config.seed,
        strategy=config.eve.kind,
        elapsed=time.perf_counter() - start,
    )


def empirical_gamma(result: SimulationResult) -> float:
    """Monte Carlo estimate of Gamma: PNS hits per Bob detection."""
    if result.strategy not in ("pns", "combined"):
        raise DomainError(f"strategy {result.strategy!r} does not run the PNS attack")
    if result.bob_detections == 0:
        raise UndefinedRatioError("no Bob detections")
    return result.eve_pns_hits / result.bob_detections


@dataclass(frozen=True)
class SecurityVerdict:
    verdict: str
    total_leakage: float
    pns_ratio: float
    side_channel_ratio: float
    s_ab_sum: float
    threshold: float
    policy: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def security_verdict(s_ab_sum: float, pns_ratio: float, side_channel_ratio: float,
                     threshold: float = DEFAULT_THRESHOLD, policy: str = "max") -> SecurityVerdict:
    """Combine leak paths into SECURE / MARGINAL / INSECURE.

    ``max`` takes the worst single channel; ``sum`` adds them.
    """
    if not s_ab_sum > 0:
        raise DomainError("Bob's suitability sum must be positive")
    if policy not in POLICIES:
        raise DomainError(f"policy must be one of {POLICIES}, got {policy!r}")
    total = max(pns_ratio, side_channel_ratio) if policy == "max" else pns_ratio + side_channel_ratio
    if total >= 1.0:
        verdict = "INSECURE"
    elif total >= threshold:
        verdict = "MARGINAL"
    else:
        verdict = "SECURE"
    return SecurityVerdict(verdict, total, pns_ratio, side_channel_ratio, s_ab_sum, threshold, policy)
