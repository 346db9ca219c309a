"""Flat ``key = value`` run configuration.

One setting per line, ``#`` starts a comment::

    source.mu = 0.1
    channel.bias1_ps = 20.0
    protocol.alice1 = 0.7071067811865476+0j, -0.7071067811865476+0j

Jones vectors are two comma-separated complex literals (H, V). Every key maps
onto one field of ``RunConfig``; ``emit`` writes all of them back so that
``parse(emit(cfg)) == cfg``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .eavesdrop import ORDERS, POLICIES, STRATEGIES, EveStrategy, SimulationConfig
from .errors import ConfigError, DomainError, InvalidStateError
from .extended import DEFAULT_THRESHOLD, ModeWavefunction, ResolutionModel
from .photon_number import MU_MAX, ChannelModel, CoherentSourceModel
from .polarization import POLARIZATION, ProtocolConfig
from .qstate import PureState

COMMANDS = ("analyze", "simulate", "sweep")
SWEEP_PARAMS = ("mu", "eta", "dt_separation", "delta_t", "sigma")
FORMATS = ("json", "csv", "text")

_S = 1 / math.sqrt(2)


def _key(name, kind, **kw):
    return field(metadata={"key": name, "kind": kind}, **kw)


@dataclass(frozen=True)
class RunConfig:
    command: str = _key("run.command", "str", default="analyze")
    mu: float = _key("source.mu", "float", default=0.1)
    eta: float = _key("channel.eta", "float", default=1.0)
    length_km: float = _key("channel.length_km", "float", default=0.0)
    bias0_ps: float = _key("channel.bias0_ps", "float", default=0.0)
    bias1_ps: float = _key("channel.bias1_ps", "float", default=0.0)
    sigma_ps: float = _key("mode.sigma_ps", "float", default=1.0)
    strategy: str = _key("eve.strategy", "str", default="pns")
    delta_t_ps: float = _key("eve.delta_t_ps", "float", default=0.0)
    order: str = _key("eve.order", "str", default="eve_first")
    pulses: int = _key("sim.pulses", "int", default=1_000_000)
    seed: int = _key("sim.seed", "int", default=42)
    workers: int = _key("sim.workers", "int", default=1)
    alice0: tuple = _key("protocol.alice0", "jones", default=(1 + 0j, 0j))
    alice1: tuple = _key("protocol.alice1", "jones", default=(_S + 0j, -_S + 0j))
    bob0: tuple = _key("protocol.bob0", "jones", default=(_S + 0j, _S + 0j))
    bob1: tuple = _key("protocol.bob1", "jones", default=(0j, 1 + 0j))
    threshold: float = _key("report.threshold", "float", default=DEFAULT_THRESHOLD)
    policy: str = _key("report.policy", "str", default="max")
    half_numerator: bool = _key("report.half_numerator", "bool", default=False)
    sweep_param: str | None = _key("sweep.param", "optstr", default=None)
    sweep_start: float | None = _key("sweep.start", "optfloat", default=None)
    sweep_stop: float | None = _key("sweep.stop", "optfloat", default=None)
    sweep_steps: int | None = _key("sweep.steps", "optint", default=None)
    output_path: str | None = _key("output.path", "optstr", default=None)
    output_format: str = _key("output.format", "str", default="text")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    # -- domain objects -------------------------------------------------

    def source(self) -> CoherentSourceModel:
        return CoherentSourceModel(self.mu)

    def channel(self) -> ChannelModel:
        return ChannelModel(self.eta, self.length_km, self.bias0_ps, self.bias1_ps)

    def modes(self) -> tuple[ModeWavefunction, ModeWavefunction]:
        return (ModeWavefunction(self.bias0_ps, self.sigma_ps),
                ModeWavefunction(self.bias1_ps, self.sigma_ps))

    def resolution(self) -> ResolutionModel:
        return ResolutionModel(self.delta_t_ps)

    def protocol(self) -> ProtocolConfig:
        def state(key, amps):
            try:
                return PureState.normalized(POLARIZATION, amps)
            except (DomainError, InvalidStateError) as exc:
                raise ConfigError(str(exc), key) from exc

        return ProtocolConfig(
            (state("protocol.alice0", self.alice0), state("protocol.alice1", self.alice1)),
            (state("protocol.bob0", self.bob0), state("protocol.bob1", self.bob1)),
        )

    def eve(self) -> EveStrategy:
        res = self.resolution() if self.strategy in ("timing_qnd", "combined") else None
        return EveStrategy(self.strategy, res)

    def simulation(self) -> SimulationConfig:
        return SimulationConfig(
            source=self.source(), channel=self.channel(), protocol=self.protocol(),
            modes=self.modes(), eve=self.eve(), n_pulses=self.pulses, seed=self.seed,
            order=self.order, workers=self.workers,
        )


KEYS = {f.metadata["key"]: f for f in fields(RunConfig)}


def _parse_value(kind: str, raw: str, key: str):
    raw = raw.strip()
    try:
        if kind.startswith("opt"):
            if raw.lower() in ("", "none"):
                return None
            kind = kind[3:]
        if kind == "str":
            return raw
        if kind == "float":
            value = float(raw)
            if math.isnan(value):
                raise ValueError("NaN is not allowed")
            return value
        if kind == "int":
            return int(raw, 0)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "jones":
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) != 2:
                raise ValueError("expected two comma-separated complex amplitudes (H, V)")
            return tuple(complex(p.replace(" ", "")) for p in parts)
    except ValueError as exc:
        raise ConfigError(str(exc), key) from exc
    raise AssertionError(kind)


def _emit_value(kind: str, value) -> str:
    if value is None:
        return "none"
    if kind.endswith("float"):
        return repr(float(value))
    if kind == "bool":
        return "true" if value else "false"
    if kind == "jones":
        return ", ".join(repr(complex(c)).strip("()") for c in value)
    return str(value)


def validate_config(cfg: RunConfig) -> RunConfig:
    """Raise ``ConfigError`` naming the first offending key."""

    def check(ok, key, msg):
        if not ok:
            raise ConfigError(msg, key)

    check(cfg.command in COMMANDS, "run.command", f"must be one of {COMMANDS}")
    check(math.isfinite(cfg.mu) and 0 <= cfg.mu <= MU_MAX, "source.mu", f"must lie in [0, {MU_MAX}]")
    check(0 <= cfg.eta <= 1, "channel.eta", "must lie in [0, 1]")
    check(cfg.length_km >= 0, "channel.length_km", "must be >= 0")
    check(math.isfinite(cfg.bias0_ps), "channel.bias0_ps", "must be finite")
    check(math.isfinite(cfg.bias1_ps), "channel.bias1_ps", "must be finite")
    check(cfg.sigma_ps > 0 and math.isfinite(cfg.sigma_ps), "mode.sigma_ps", "must be > 0")
    check(cfg.strategy in STRATEGIES, "eve.strategy", f"must be one of {STRATEGIES}")
    check(cfg.delta_t_ps >= 0 and math.isfinite(cfg.delta_t_ps), "eve.delta_t_ps", "must be >= 0")
    check(cfg.order in ORDERS, "eve.order", f"must be one of {ORDERS}")
    check(cfg.pulses >= 1, "sim.pulses", "must be >= 1")
    check(0 <= cfg.seed < 2 ** 64, "sim.seed", "must be an unsigned 64-bit integer")
    check(cfg.workers >= 1, "sim.workers", "must be >= 1")
    check(0 < cfg.threshold, "report.threshold", "must be > 0")
    check(cfg.policy in POLICIES, "report.policy", f"must be one of {POLICIES}")
    check(cfg.output_format in FORMATS, "output.format", f"must be one of {FORMATS}")
    cfg.protocol()
    if cfg.command == "sweep":
        check(cfg.sweep_param in SWEEP_PARAMS, "sweep.param", f"must be one of {SWEEP_PARAMS}")
        check(cfg.sweep_start is not None, "sweep.start", "required for sweep")
        check(cfg.sweep_stop is not None, "sweep.stop", "required for sweep")
        check(cfg.sweep_steps is not None and cfg.sweep_steps >= 2, "sweep.steps", "must be >= 2")
    return cfg


def apply_settings(cfg: RunConfig, items) -> RunConfig:
    """Apply ``(key, raw_value)`` pairs on top of ``cfg``."""
    changes = {}
    for key, raw in items:
        key = key.strip()
        if key not in KEYS:
            raise ConfigError("unknown key", key)
        f = KEYS[key]
        changes[f.name] = _parse_value(f.metadata["kind"], raw, key)
    return cfg.replace(**changes)


def parse(text: str, base: RunConfig | None = None) -> RunConfig:
    return validate_config(apply_settings(base or RunConfig(), _items(text)))


def parse_overrides(overrides, cfg: RunConfig) -> RunConfig:
    items = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        items.append(tuple(item.split("=", 1)))
    return apply_settings(cfg, items)


def emit(cfg: RunConfig) -> str:
    lines = []
    for key, f in KEYS.items():
        lines.append(f"{key} = {_emit_value(f.metadata['kind'], getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def load(path, overrides=()) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        cfg = apply_settings(cfg, _items(text))
    return validate_config(parse_overrides(overrides, cfg))


def _items(text):
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        yield tuple(line.split("=", 1))


def as_flat_dict(cfg: RunConfig) -> dict:
    """JSON-friendly echo of every key (Jones vectors as [re, im] pairs)."""
    out = {}
    for key, f in KEYS.items():
        value = getattr(cfg, f.name)
        if f.metadata["kind"] == "jones":
            value = [[c.real, c.imag] for c in value]
        out[key] = value
    return out
