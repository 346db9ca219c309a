"""Analyze / simulate / sweep drivers and their JSON, CSV and text renderings."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .config import RunConfig, as_flat_dict, validate_config
from .eavesdrop import SimulationResult, security_verdict, simulate_exchange
from .errors import UndefinedRatioError
from .extended import leak_ratio_from_overlap, resolution_limited_overlap, sidechannel_suitability_from_overlap
from .photon_number import attenuate, gamma_small_alpha
from .polarization import polarization_suitability_table, protocol_audit

SCHEMA_VERSION = 1

SWEEP_COLUMNS = (
    "param", "value", "mu", "eta", "dt_separation_ps", "delta_t_ps", "sigma_ps",
    "mu_bob", "s_ab_sum", "s_ae_pns_sum", "gamma", "mode_overlap",
    "side_channel_ratio", "total_leakage", "breakdown", "verdict",
)


@dataclass
class SuitabilityReport:
    s_ab_table: list
    s_ab_sum: float
    s_ae_pns_table: list
    gamma: float
    mode_overlap: float
    side_channel_ratio: float
    verdict: str
    inputs: dict
    s_ae_side_table: list = field(default_factory=list)
    total_leakage: float = 0.0
    threshold: float = 0.0
    policy: str = "max"
    breakdown: bool = False
    mu_bob: float = 0.0
    mu_eve: float = 0.0
    polarization_table: list = field(default_factory=list)
    gamma_small_alpha: float = 0.0
    audit: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def run_analyze(cfg: RunConfig) -> SuitabilityReport:
    """Closed-form security report; deterministic, no sampling.

    Both leak paths are always evaluated: Alice and Bob must assume Eve runs
    whichever attack hurts most, whatever ``eve.strategy`` says.
    """
    protocol = cfg.protocol()
    table = polarization_suitability_table(protocol).entries
    source = cfg.source()
    bob_src = attenuate(source, cfg.channel())
    eve_src = source if cfg.order == "eve_first" else bob_src
    mode0, mode1 = cfg.modes()
    omega = resolution_limited_overlap(mode0, mode1, cfg.resolution())
    side_table = [[sidechannel_suitability_from_overlap(omega, i, j) for j in (0, 1)] for i in (0, 1)]
    notes = []

    if source.mu == 0:
        # an ideal single-photon source: Bob's table is the bare polarization
        # table and nothing is ever left over for a PNS tap
        notes.append("single-photon regime (mu = 0): no photons are diverted to Eve; "
                     "S_AB taken from the lossless single-photon table")
        s_ab = table * cfg.eta
        s_ae = np.zeros((2, 2))
        denom = cfg.eta
    else:
        s_ab = bob_src.p_nonvacuum * table
        s_ae = eve_src.p_multiphoton * table
        denom = bob_src.p_nonvacuum

    s_ab_sum = float(s_ab.sum())
    if s_ab_sum <= 0 or denom <= 0:
        raise UndefinedRatioError("Bob's suitability sum is zero; leakage ratios are undefined")
    gamma = float(s_ae.sum() / s_ab_sum)
    if source.mu == 0:
        side_ratio = (1.0 - omega) * (0.5 if cfg.half_numerator else 1.0) / denom
    else:
        side_ratio = leak_ratio_from_overlap(omega, bob_src.mu, cfg.half_numerator)
    if cfg.half_numerator:
        notes.append("half_numerator diagnostic active: side-channel ratio halved")
    if cfg.order == "eve_first" and cfg.eta < 1:
        notes.append("Eve taps before channel loss (conservative ordering)")

    verdict = security_verdict(s_ab_sum, gamma, side_ratio, cfg.threshold, cfg.policy)
    return SuitabilityReport(
        s_ab_table=s_ab.tolist(),
        s_ab_sum=s_ab_sum,
        s_ae_pns_table=s_ae.tolist(),
        gamma=gamma,
        mode_overlap=omega,
        side_channel_ratio=side_ratio,
        verdict=verdict.verdict,
        inputs=as_flat_dict(cfg),
        s_ae_side_table=side_table,
        total_leakage=verdict.total_leakage,
        threshold=cfg.threshold,
        policy=cfg.policy,
        breakdown=side_ratio >= 1.0,
        mu_bob=bob_src.mu,
        mu_eve=eve_src.mu,
        polarization_table=table.tolist(),
        gamma_small_alpha=gamma_small_alpha(source.mu),
        audit=[str(f) for f in protocol_audit(protocol)],
        notes=notes,
    )


def timing_accuracy(separation: float, sigma: float, delta_t: float) -> float:
    """Expected ML accuracy for equal-width modes ``separation`` ps apart.

    With uniform time-bin jitter the midpoint threshold is still optimal, so
    accuracy is Phi((|d|/2 - u)/sigma) averaged over u ~ U(-dT/2, dT/2).
    """
    half = abs(separation) / 2
    if delta_t == 0:
        return float(norm.cdf(half / sigma))
    value, _ = integrate.quad(lambda u: norm.cdf((half - u) / sigma), -delta_t / 2, delta_t / 2,
                              epsabs=1e-13, epsrel=1e-12)
    return value / delta_t


def _z(empirical, expected, sd):
    return (empirical - expected) / sd if sd > 0 else (0.0 if empirical == expected else math.inf)


def run_simulate(cfg: RunConfig, workers: int | None = None):
    """Monte Carlo run plus analytic expectations and z-scores."""
    result = simulate_exchange(cfg.simulation(), workers=workers)
    report = run_analyze(cfg.replace(half_numerator=False))
    n = result.pulses
    expected_sift = report.s_ab_sum / 4 if cfg.mu > 0 else 0.0
    comparison = {
        "sift_rate": {
            "empirical": result.sift_rate,
            "analytic": expected_sift,
            "z": _z(result.sift_rate, expected_sift, math.sqrt(expected_sift * (1 - expected_sift) / n)),
        },
        "gamma": None,
        "timing_accuracy": None,
    }
    if result.strategy in ("pns", "combined") and result.bob_detections > 0:
        g = report.gamma
        emp = result.eve_pns_hits / result.bob_detections
        # hits are a thinned subset of detections only when Eve sits after the loss
        var = g * (1 - g) if g <= 1 else g
        comparison["gamma"] = {
            "empirical": emp,
            "analytic": g,
            "z": _z(emp, g, math.sqrt(var / result.bob_detections)),
            "relative_error": (emp - g) / g if g > 0 else None,
        }
    if result.strategy in ("timing_qnd", "combined") and result.eve_timing_guesses > 0:
        expected = timing_accuracy(cfg.bias1_ps - cfg.bias0_ps, cfg.sigma_ps, cfg.delta_t_ps)
        m = result.eve_timing_guesses
        emp = result.eve_timing_correct / m
        comparison["timing_accuracy"] = {
            "empirical": emp,
            "analytic": expected,
            "z": _z(emp, expected, math.sqrt(expected * (1 - expected) / m)),
        }
    return result, comparison


def sweep_values(cfg: RunConfig) -> np.ndarray:
    return np.linspace(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_steps)


def _apply_sweep(cfg: RunConfig, param: str, value: float) -> RunConfig:
    if param == "mu":
        return cfg.replace(mu=value)
    if param == "eta":
        return cfg.replace(eta=value)
    if param == "dt_separation":
        return cfg.replace(bias1_ps=cfg.bias0_ps + value)
    if param == "delta_t":
        return cfg.replace(delta_t_ps=value)
    if param == "sigma":
        return cfg.replace(sigma_ps=value)
    raise AssertionError(param)


def run_sweep(cfg: RunConfig) -> list[dict]:
    rows = []
    for value in sweep_values(cfg):
        point = validate_config(_apply_sweep(cfg, cfg.sweep_param, float(value)))
        rep = run_analyze(point)
        rows.append({
            "param": cfg.sweep_param,
            "value": float(value),
            "mu": point.mu,
            "eta": point.eta,
            "dt_separation_ps": point.bias1_ps - point.bias0_ps,
            "delta_t_ps": point.delta_t_ps,
            "sigma_ps": point.sigma_ps,
            "mu_bob": rep.mu_bob,
            "s_ab_sum": rep.s_ab_sum,
            "s_ae_pns_sum": float(np.sum(rep.s_ae_pns_table)),
            "gamma": rep.gamma,
            "mode_overlap": rep.mode_overlap,
            "side_channel_ratio": rep.side_channel_ratio,
            "total_leakage": rep.total_leakage,
            "breakdown": rep.breakdown,
            "verdict": rep.verdict,
        })
    return rows


# -- rendering ---------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _canonical(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True)


def digest(payload: dict) -> str:
    """SHA-256 over the canonical JSON with every ``elapsed`` field removed."""

    def strip(obj):
        if isinstance(obj, dict):
            return {k: strip(v) for k, v in obj.items() if k not in ("elapsed", "digest")}
        if isinstance(obj, list):
            return [strip(v) for v in obj]
        return obj

    return hashlib.sha256(_canonical(strip(payload)).encode()).hexdigest()


def envelope(command: str, cfg: RunConfig, **body) -> dict:
    payload = {"schema_version": SCHEMA_VERSION, "command": command, "config": as_flat_dict(cfg), **body}
    payload["digest"] = digest(payload)
    return payload


def to_json(payload: dict) -> str:
    return _canonical(payload) + "\n"


ANALYZE_SCALARS = ("s_ab_sum", "gamma", "mode_overlap", "side_channel_ratio", "total_leakage",
                   "threshold", "policy", "breakdown", "mu_bob", "mu_eve", "verdict")
SIMULATE_SCALARS = ("pulses", "bob_detections", "sift_rate", "eve_pns_hits", "eve_timing_correct",
                    "eve_timing_guesses", "eve_fraction", "seed", "strategy")


def _table_text(name, table):
    return [f"  {name}:", *(f"    [{', '.join(f'{x:.6g}' for x in row)}]" for row in table)]


def analyze_text(report: SuitabilityReport) -> str:
    lines = ["Suitability report", *_table_text("S_AB (Alice i x Bob j)", report.s_ab_table)]
    lines += _table_text("S_AE photon-number splitting", report.s_ae_pns_table)
    lines += _table_text("S_AE timing side channel", report.s_ae_side_table)
    lines += [
        f"  sum S_AB            {report.s_ab_sum:.10g}",
        f"  Gamma (PNS)         {report.gamma:.10g}   (small-mu quote: {report.gamma_small_alpha:.6g})",
        f"  mode overlap        {report.mode_overlap:.10g}",
        f"  side-channel ratio  {report.side_channel_ratio:.10g}" + ("  BREAKDOWN" if report.breakdown else ""),
        f"  total leakage       {report.total_leakage:.10g}   ({report.policy}, threshold {report.threshold:g})",
        f"  verdict             {report.verdict}",
    ]
    lines += [f"  audit: {a}" for a in report.audit]
    lines += [f"  note: {n}" for n in report.notes]
    return "\n".join(lines) + "\n"


def simulate_text(result: SimulationResult, comparison: dict) -> str:
    lines = ["Simulation result"]
    lines += [f"  {k:<20}{getattr(result, k)}" for k in SIMULATE_SCALARS]
    lines += [f"  elapsed             {result.elapsed:.3f} s", "  per-config detections:"]
    lines += [f"    {row}" for row in result.per_config_counts]
    for name, block in comparison.items():
        if block is None:
            continue
        lines.append(f"  {name}: empirical {block['empirical']:.8g}  analytic {block['analytic']:.8g}  "
                     f"z = {block['z']:+.3f}")
    return "\n".join(lines) + "\n"


def sweep_text(rows) -> str:
    cols = ("value", "gamma", "mode_overlap", "side_channel_ratio", "total_leakage", "verdict")
    lines = ["  ".join(f"{c:>18}" for c in cols)]
    for row in rows:
        lines.append("  ".join(f"{row[c]:>18.10g}" if isinstance(row[c], float) else f"{row[c]:>18}"
                               for c in cols))
    return "\n".join(lines) + "\n"


def render(command: str, cfg: RunConfig, fmt: str, outcome) -> str:
    if command == "analyze":
        report = outcome
        if fmt == "json":
            return to_json(envelope("analyze", cfg, report=report.to_dict()))
        if fmt == "csv":
            return to_csv([report.to_dict()], ANALYZE_SCALARS)
        return analyze_text(report)
    if command == "simulate":
        result, comparison = outcome
        if fmt == "json":
            return to_json(envelope("simulate", cfg, result=result.to_dict(), comparison=comparison))
        if fmt == "csv":
            return to_csv([result.to_dict()], SIMULATE_SCALARS)
        return simulate_text(result, comparison)
    rows = outcome
    if fmt == "json":
        return to_json(envelope("sweep", cfg, columns=list(SWEEP_COLUMNS), rows=rows))
    if fmt == "csv":
        return to_csv(rows, SWEEP_COLUMNS)
    return sweep_text(rows)
