"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""

from __future__ import annotations

import time

import numpy as np
import pytest

import conftest
from nfsgates import gates
from nfsgates.gates import GateSpec, TriggerModel, full_spectrum, losses, purity
from nfsgates.hyperfine import NuclearSpecies, clebsch_gordan, enumerate_transitions
from nfsgates.rotation import EulerAngles, rotation_matrix, rotation_operator
from nfsgates.scattering import kernels, series
from nfsgates.scattering.series import series_spectrum
from nfsgates.scattering.slices import analytic_single_line, propagate
from nfsgates.scattering.spectrum import SwitchProtocol, TimeGrid, intensity
from oracles import brute_force_cg

GRID = TimeGrid(200.0, 4096)
XI = 10.0


def record(capsys, label: str, ok: bool, detail: str) -> None:
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


@pytest.fixture(scope="module")
def reports():
    out = {}
    for kind in ("identity", "negation", "true"):
        out[kind] = gates.search_switch_time(GateSpec(kind), purity_threshold=0.95)
    return out


def test_criterion_01_polarization_conservation(capsys):
    series._chain.cache_clear()
    kernels.linear_response.cache_clear()
    start = time.perf_counter()
    spec = series_spectrum("sigma", XI, 20, GRID)
    elapsed = time.perf_counter() - start
    total = intensity(spec)
    ratio = float(spec.component_intensity("pi").max() / total.max())
    record(capsys, " 1", ratio < 1e-10 and elapsed < 1.0,
           f"max pi/peak = {ratio:.1e} (< 1e-10), runtime {elapsed:.3f} s (< 1 s)")


def test_criterion_02_single_line_oracles(capsys):
    sp = NuclearSpecies(hyperfine_field=0.0)
    exact = analytic_single_line(XI, GRID).envelope
    chain = series_spectrum("sigma", XI, 20, GRID, species=sp).envelope
    layered = propagate("sigma", XI, 400, GRID, species=sp).envelope
    errs = [rel_l2(chain, exact), rel_l2(layered, exact), rel_l2(layered, chain)]
    record(capsys, " 2", max(errs) < 1e-4,
           "series/analytic {:.1e}, slices/analytic {:.1e}, slices/series {:.1e} (< 1e-4)".format(*errs))


def test_criterion_03_series_sufficiency(capsys):
    a = series_spectrum("sigma", XI, 14, GRID).envelope
    b = series_spectrum("sigma", XI, 20, GRID).envelope
    err = rel_l2(a, b)
    record(capsys, " 3", err < 1e-3, f"p_max 14 vs 20 relative L2 {err:.1e} (< 1e-3)")


def test_criterion_04_series_slices_with_switch(capsys, reports):
    t0 = reports["negation"].t0_average
    proto = SwitchProtocol(t0)
    worst = 0.0
    for pol in ("sigma", "pi"):
        a = intensity(series_spectrum(pol, XI, 20, GRID, proto, after_switch=True))
        b = intensity(propagate(pol, XI, 100, GRID, proto))
        pre = GRID.times <= t0
        worst = max(worst, rel_l2(b[pre], a[pre]))
    record(capsys, " 4", worst < 5e-3, f"intensity relative L2 on [0, t0={t0:.2f}] {worst:.1e} (< 5e-3)")


def test_criterion_05_negation_switching_times(capsys, reports):
    t = reports["negation"].t0_per_input
    ok = abs(t["sigma"] - 22.6) <= 1.0 and abs(t["pi"] - 22.1) <= 1.0
    record(capsys, " 5", ok, f"t0_sigma = {t['sigma']:.2f} ns (22.6 +- 1), t0_pi = {t['pi']:.2f} ns (22.1 +- 1)")


@pytest.mark.parametrize("kind", ["identity", "negation", "true", "false"])
def test_criterion_06_unary_gates(capsys, reports, kind):
    if kind in reports:
        rep = reports[kind]
    else:
        try:
            rep = gates.search_switch_time(GateSpec(kind), purity_threshold=0.93)
        except gates.SwitchTimeNotFound:
            # best achievable compromise, for the record
            g = GateSpec(kind)
            curves = [gates.TruncatedPurity(p, g.output(p), XI).scan(0.0, 0.05, 2001) for p in ("sigma", "pi")]
            best = np.minimum(*curves)
            k = int(np.argmax(best))
            t0 = 0.05 * k
            real = {p: purity(full_spectrum(p, XI, t0), t0, g.output(p)) for p in ("sigma", "pi")}
            record(capsys, f" 6 [{kind}]", False,
                   f"no t0 in [0, 100] ns reaches 0.93 for both inputs; best common t0 = {t0:.2f} ns "
                   f"gives realization sigma {real['sigma']:.3f}, pi {real['pi']:.3f}")
            return
    impurity = max(1 - v for v in rep.purity.values())
    realization = min(rep.probability_of_realization.values())
    record(capsys, f" 6 [{kind}]", impurity < 0.05 and realization >= 0.93,
           f"max impurity at per-input t0 {impurity:.3f} (< 0.05), "
           f"min averaged-t0 realization {realization:.3f} (>= 0.93)")


def test_criterion_07_jitter(capsys, reports):
    t0 = reports["negation"].t0_average
    value = gates.realization_with_jitter(GateSpec("negation"), t0, 1.0, n_draws=32, seed=0)
    record(capsys, " 7", 0.85 <= value <= 0.95, f"1 ns jitter realization (most affected input) {value:.3f} in [0.85, 0.95]")


def test_criterion_08_losses(capsys, reports):
    mean = float(np.mean(list(reports["negation"].losses.values())))
    record(capsys, " 8", 0.70 <= mean <= 0.95, f"mean losses at averaged t0 {mean:.3f} in [0.70, 0.95]")


def test_criterion_09_delay_line(capsys):
    plan = gates.delay_line_plan(GateSpec("negation"), 6.9)
    d, lost = plan.delay["pi"], plan.losses_after["pi"]
    ok = abs(d - 1.9) <= 0.5 and abs(lost - 0.38) <= 0.07
    record(capsys, " 9", ok, f"pi delay {d:.2f} ns (1.9 +- 0.5), pi losses {lost:.3f} (0.38 +- 0.07)")


def test_criterion_10_split_path(capsys):
    plan = gates.split_path_plan(GateSpec("negation"))
    worst = min(plan.purity.values())
    record(capsys, "10", worst >= 0.95, f"min per-path realization {worst:.3f} (>= 0.95)")


def test_criterion_11_cnot(capsys):
    rows = {(r.control, r.target): r for r in gates.cnot_truth_table(TriggerModel(), 1000, seed=0)}
    keep = min(rows[("pi", t)].probabilities[t] for t in ("sigma", "pi"))
    flip = min(rows[("sigma", t)].probabilities[gates.OTHER[t]] for t in ("sigma", "pi"))
    off = gates.cnot_truth_table(TriggerModel(detection_probability=0.0), 200, seed=0)
    identity = all(r.probabilities[r.target] == 1.0 for r in off)
    record(capsys, "11", keep >= 0.99 and flip >= 0.95 and identity,
           f"control=pi keeps {keep:.3f} (>= 0.99), control=sigma flips {flip:.3f} (>= 0.95), "
           f"no detection -> identity: {identity}")


def test_criterion_12_property_suites(capsys):
    rng = np.random.default_rng(12)
    worst_unitary = worst_compose = 0.0
    for _ in range(1000):
        a = EulerAngles(*rng.uniform(-np.pi, np.pi, 3))
        b = EulerAngles(*rng.uniform(-np.pi, np.pi, 3))
        d = rotation_operator(1.5, a)
        worst_unitary = max(worst_unitary, np.abs(d.conj().T @ d - np.eye(4)).max())
        r = rotation_matrix(a) @ rotation_matrix(b)
        c = EulerAngles(np.arctan2(r[1, 2], r[0, 2]), np.arccos(np.clip(r[2, 2], -1, 1)),
                        np.arctan2(r[2, 1], -r[2, 0]))
        lhs = rotation_operator(1.0, a) @ rotation_operator(1.0, b)
        worst_compose = max(worst_compose, np.abs(lhs - rotation_operator(1.0, c)).max())

    static = series_spectrum("pi", XI, 20, GRID).envelope
    null = series_spectrum("pi", XI, 20, GRID, SwitchProtocol(22.3, EulerAngles(0.7, 0.0, -1.1)),
                           after_switch=True).envelope
    null_err = float(np.abs(null - static).max() / np.abs(static).max())

    switched = full_spectrum("sigma", XI, 22.3)
    before = GRID.times < 22.3
    causal = bool(np.array_equal(switched.envelope[before], full_spectrum("sigma", XI, None).envelope[before]))
    tot = intensity(switched)
    complement = 0.0
    for t in np.linspace(0, 200, 37):
        before, after = gates._split_integral(GRID.times, tot, t)
        complement = max(complement, abs(losses(switched, t) + after / (before + after) - 1.0))

    oracle = brute_force_cg(0.5, 1)
    cg_err = max(abs(clebsch_gordan(0.5, m1, 1, m2, j, m) - v) for (m1, m2, j, m), v in oracle.items())
    weights = sorted((l.m_ground, l.m_excited, l.weight) for l in enumerate_transitions(NuclearSpecies()))
    pattern = sorted(round(4 * w[2]) for w in weights) == [1, 1, 2, 2, 3, 3]

    ok = (worst_unitary < 1e-12 and worst_compose < 1e-12 and null_err < 1e-10 and causal
          and complement < 1e-12 and cg_err < 1e-12 and pattern)
    record(capsys, "12", ok,
           f"unitarity {worst_unitary:.1e}, composition {worst_compose:.1e}, null switch {null_err:.1e}, "
           f"causal {causal}, losses complement {complement:.1e}, CG vs oracle {cg_err:.1e}, "
           f"3:2:1:1:2:3 {pattern}")
