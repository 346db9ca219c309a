"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL summary
lines (they are also printed in the terminal summary without ``-s``).
"""
import json
import math
import os
import time

import mpmath
import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from qkdsuit.cli import main
from qkdsuit.eavesdrop import EveStrategy, SimulationConfig, empirical_gamma, simulate_exchange
from qkdsuit.extended import (
    FullPhotonState,
    ModeWavefunction,
    ResolutionModel,
    hom_coincidence,
    leak_ratio_from_overlap,
    mode_overlap,
    overlap_breakdown_threshold,
)
from qkdsuit.photon_number import (
    CoherentSourceModel,
    bob_suitability_matrix,
    bob_suitability_wcp,
    eve_suitability_matrix,
    eve_suitability_pns,
    pns_leak_ratio,
)
from qkdsuit.polarization import ANTIDIAG, DIAG, H, V, polarization_suitability_table
from qkdsuit.qstate import fidelity_product, purity, random_density, validate

mpmath.mp.dps = 40


def mp_gamma(mu):
    mu = mpmath.mpf(mu)
    e = mpmath.exp(-mu)
    return float((1 - e - mu * e) / (1 - e))


def report(criterion, ok, detail):
    criterion["detail"] = detail
    print(f"\n[{'PASS' if ok else 'FAIL'}] {criterion['name']}: {detail}")
    assert ok, detail


def test_c01_polarization_table(criterion):
    polarization_suitability_table()  # warm caches
    runs = []
    for _ in range(50):
        t0 = time.perf_counter()
        table = polarization_suitability_table()
        runs.append(time.perf_counter() - t0)
    err = float(np.max(np.abs(table.entries - np.array([[0.5, 0.0], [0.0, 0.5]]))))
    runtime = float(np.median(runs))
    report(criterion, err <= 1e-12 and runtime < 1e-3,
           f"max|S_AB - diag(0.5)| = {err:.2e} (tol 1e-12), median runtime {runtime * 1e6:.1f} us (< 1 ms)")


def test_c02_gamma_closed_form(criterion):
    errs = {mu: abs(pns_leak_ratio(CoherentSourceModel(mu)) - mp_gamma(mu)) for mu in (0.1, 1.0)}
    detail = ", ".join(f"Gamma({mu}) = {mp_gamma(mu):.15f} err {e:.1e}" for mu, e in errs.items())
    report(criterion, max(errs.values()) < 1e-9, detail + " (tol 1e-9)")


def test_c03_small_alpha_limit(criterion):
    # the first-order expansion Gamma ~ mu is checked literally; the exact limit is mu / 2
    grid = np.linspace(0.0025, 0.05, 20)
    rel = [abs(pns_leak_ratio(CoherentSourceModel(m)) - m) / pns_leak_ratio(CoherentSourceModel(m))
           for m in grid]
    worst = max(rel)
    report(criterion, worst < 0.05,
           f"max |Gamma - mu| / Gamma over 20 points in (0, 0.05] = {worst:.4f} (tol 0.05)")


def test_c04_matrix_route(criterion):
    worst = 0.0
    for mu in (0.05, 0.1, 0.5, 1.0):
        src = CoherentSourceModel(mu)
        for i in (0, 1):
            for j in (0, 1):
                worst = max(worst,
                            abs(bob_suitability_matrix(src, i=i, j=j) - bob_suitability_wcp(src, i=i, j=j)),
                            abs(eve_suitability_matrix(src, i=i, j=j) - eve_suitability_pns(src, i=i, j=j)))
    report(criterion, worst < 1e-10, f"max |matrix - closed form| = {worst:.2e} (tol 1e-10)")


@pytest.mark.slow
def test_c05_monte_carlo_convergence(criterion):
    lines, ok = [], True
    for mu in (0.1, 1.0):
        p_sift = 0.25 * -math.expm1(-mu)
        gamma = mp_gamma(mu)
        sift_ok = gamma_ok = 0
        slowest = 0.0
        for seed in range(20):
            cfg = SimulationConfig(source=CoherentSourceModel(mu), eve=EveStrategy("pns"),
                                   n_pulses=10_000_000, seed=seed)
            t0 = time.perf_counter()
            res = simulate_exchange(cfg)
            slowest = max(slowest, time.perf_counter() - t0)
            z = (res.bob_detections - res.pulses * p_sift) / math.sqrt(res.pulses * p_sift * (1 - p_sift))
            sift_ok += abs(z) < 3
            gamma_ok += abs(empirical_gamma(res) / gamma - 1) < 0.02
        ok &= sift_ok >= 19 and gamma_ok == 20 and slowest < 60
        lines.append(f"mu={mu}: sift within 3 sigma {sift_ok}/20, Gamma within 2% {gamma_ok}/20, "
                     f"slowest run {slowest:.2f} s")
    report(criterion, ok, "; ".join(lines))


def quad_overlap(a, b):
    lo = min(a.center - 40 * a.width, b.center - 40 * b.width)
    hi = max(a.center + 40 * a.width, b.center + 40 * b.width)
    value, _ = integrate.quad(lambda t: float(a.amplitude(t) * b.amplitude(t)), lo, hi,
                              points=sorted({a.center, b.center}), epsabs=0, epsrel=1e-13, limit=500)
    return value


def test_c06_gaussian_overlap_vs_quadrature(criterion):
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(100):
        a = ModeWavefunction(rng.uniform(-5, 5), rng.uniform(0.2, 4))
        b = ModeWavefunction(rng.uniform(-5, 5), rng.uniform(0.2, 4))
        oracle = quad_overlap(a, b)
        worst = max(worst, abs(mode_overlap(a, b) - oracle) / oracle)
    report(criterion, worst < 1e-9, f"max relative error over 100 sets = {worst:.2e} (tol 1e-9)")


def test_c07_leak_ratio_limits(criterion):
    at_one = leak_ratio_from_overlap(1.0, 0.1)
    at_zero = leak_ratio_from_overlap(0.0, 0.1)
    expected = float(1 / (1 - mpmath.exp(-mpmath.mpf("0.1"))))
    star_err = max(abs(overlap_breakdown_threshold(mu) - math.exp(-mu)) for mu in (0.01, 0.1, 0.5, 1.0, 3.0))
    ok = at_one == 0.0 and abs(at_zero - expected) < 1e-6 and star_err < 1e-9
    report(criterion, ok, f"ratio(omega=1) = {at_one!r}, ratio(omega=0, mu=0.1) = {at_zero:.12f} "
                          f"(want {expected:.12f}), max |omega* - e^-mu| = {star_err:.1e}")


@pytest.mark.slow
def test_c08_eve_timing_accuracy(criterion):
    sigma = 1.0
    modes = (ModeWavefunction(0.0, sigma), ModeWavefunction(2 * sigma, sigma))
    cfg = SimulationConfig(source=CoherentSourceModel(1.0), eve=EveStrategy("timing_qnd", ResolutionModel(0.0)),
                           modes=modes, n_pulses=1_600_000, seed=8)
    res = simulate_exchange(cfg)
    p = norm.cdf(1.0)
    acc = res.eve_timing_correct / res.eve_timing_guesses
    sd = math.sqrt(p * (1 - p) / res.eve_timing_guesses)
    z = (acc - p) / sd
    report(criterion, res.eve_timing_guesses >= 1_000_000 and abs(z) < 3,
           f"accuracy {acc:.6f} vs Phi(1) = {p:.6f} over {res.eve_timing_guesses} guesses, z = {z:+.2f}")


def test_c09_hom(criterion):
    mode = ModeWavefunction(0.0, 1.0)
    a = FullPhotonState.build(0.1, mode, H, 0)
    same = hom_coincidence(a, a)
    ortho = hom_coincidence(a, FullPhotonState.build(0.1, mode, V, 1))
    ortho_diag = hom_coincidence(FullPhotonState.build(0.1, mode, DIAG, 0),
                                 FullPhotonState.build(0.1, mode, ANTIDIAG, 1))
    report(criterion, abs(same) <= 1e-12 and ortho == 0.5 and ortho_diag == 0.5,
           f"identical -> {same!r}, H/V -> {ortho!r}, D/A -> {ortho_diag!r}")


def _simulate_json(capsys):
    main(["simulate", "--set", "sim.pulses=300000", "--set", "sim.seed=1234", "--set", "eve.strategy=combined",
          "--set", "channel.bias1_ps=1.5", "--set", "eve.delta_t_ps=0.5", "--format", "json"])
    payload = json.loads(capsys.readouterr().out)
    payload["result"].pop("elapsed")
    payload.pop("digest")
    return json.dumps(payload, sort_keys=True).encode()


def test_c10_determinism(criterion, capsys):
    first, second = _simulate_json(capsys), _simulate_json(capsys)
    n = max(2, os.cpu_count() or 1) + 1
    cfg = SimulationConfig(source=CoherentSourceModel(0.5),
                           eve=EveStrategy("combined", ResolutionModel(0.5)),
                           modes=(ModeWavefunction(0.0, 1.0), ModeWavefunction(1.5, 1.0)),
                           n_pulses=500_000, seed=77)
    serial = simulate_exchange(cfg, workers=1)
    parallel = simulate_exchange(cfg, workers=n)
    ok = first == second and serial == parallel
    report(criterion, ok, f"JSON byte-identical: {first == second}; counts identical at workers 1 vs {n}: "
                          f"{serial == parallel}")


def test_c11_density_property_suite(criterion):
    rng = np.random.default_rng(11)
    failures = 0
    for _ in range(1000):
        d = int(rng.integers(2, 9))
        a, b = random_density(d, rng), random_density(d, rng)
        p = purity(a)
        failures += bool(validate(a))
        failures += not (1.0 / d - 1e-12 <= p <= 1.0 + 1e-12)
        failures += abs(fidelity_product(a, b) - fidelity_product(b, a)) > 1e-12
    report(criterion, failures == 0, f"{failures} failures over 1000 random matrices "
                                     f"(validate, 1/d <= purity <= 1, F(a,b) = F(b,a))")
