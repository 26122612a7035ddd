"""Acceptance criteria 1-10, one pass/fail line each (see the terminal summary)."""

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq
from threadpoolctl import threadpool_limits

from imcflab import FlowConfig, MetricSpec, SphereGrid, build_round_sphere, make_metric, run_imcf
from imcflab.diagnostics import (
    ISO_EUCLIDEAN,
    evolution_consistency,
    geroch_report,
    isoperimetric_report,
    mean_curvature_floor_fit,
)
from imcflab.flow import run_mcf_smoothing
from imcflab.surface import perturbed_sphere
from imcflab.sweepout import hyperbolic_ball, hyperbolic_isoperimetric_profile, omega_c_reference, sweepout_report

TESTS = Path(__file__).parent


def test_criterion_01_euclidean_exact_solution(acceptance, grid32):
    cfg = FlowConfig(MetricSpec("euclidean"), build_round_sphere((0, 0, 0), 1.0, grid32), t_end=2.0, dt_max=2e-4)
    with threadpool_limits(limits=1):
        t0 = time.perf_counter()
        trace = run_imcf(cfg)
        elapsed = time.perf_counter() - t0
    final = trace.final
    r_err = float(np.max(np.abs(final.surface.radii - np.e)))
    a_err = abs(final.row.area / (4 * np.pi * np.e**2) - 1)
    ok = trace.status.completed and final.t == 2.0 and r_err <= 1e-4 and a_err <= 5e-3 and elapsed <= 30.0
    acceptance(1, ok, f"radius err {r_err:.2e} (<=1e-4), area rel err {a_err:.2e} (<=5e-3), {elapsed:.1f} s (<=30 s)")
    assert ok


def test_criterion_02_hyperbolic_exact_solution(acceptance, grid32):
    cfg = FlowConfig(MetricSpec("hyperbolic-polar"), build_round_sphere((0, 0, 0), 1.0, grid32), t_end=2.0, dt_max=1e-3)
    trace = run_imcf(cfg)
    err = max(
        float(np.max(np.abs(np.sinh(s.surface.radii) / (np.sinh(1.0) * np.exp(s.t / 2)) - 1))) for s in trace.samples
    )
    ok = trace.status.completed and trace.final.t == 2.0 and err <= 1e-4
    acceptance(2, ok, f"max rel err of sinh r(t) over {len(trace.samples)} samples {err:.2e} (<=1e-4)")
    assert ok


def test_criterion_03_schwarzschild_rigidity(acceptance, schwarzschild_trace):
    trace = schwarzschild_trace
    m_err = float(np.max(np.abs(trace.column("m_h") - 1.0)))
    ger = geroch_report(trace, "flat", tol=1e-5)
    ok = trace.status.completed and m_err <= 2e-3 and ger.monotone
    acceptance(3, ok, f"max |m_H - 1| {m_err:.2e} (<=2e-3), min mass increment {ger.min_increment:.2e} (>=-1e-5)")
    assert ok


def test_criterion_04_sub_euclidean_ratio(acceptance, schwarzschild_trace, euclidean_ball_trace):
    ratio = schwarzschild_trace.column("iso_ratio")
    gap = float(np.min(ISO_EUCLIDEAN - ratio))
    control = isoperimetric_report(euclidean_ball_trace, "flat")
    ok = gap > 1e-4 and abs(control.max_ratio_excess) <= 1e-6 and not control.all_strict
    acceptance(
        4,
        ok,
        f"schwarzschild min deficit {gap:.4e} (>1e-4); euclidean control excess "
        f"{control.max_ratio_excess:.1e} (|.|<=1e-6), strict={control.all_strict}",
    )
    assert ok


def test_criterion_05_sweepout_strictness(acceptance, grid32):
    cfg = FlowConfig(
        MetricSpec("schwarzschild", mass=1.0),
        build_round_sphere((0, 0, 0), 1.0, grid32),
        t_end=20.0,
        dt_max=2e-3,
        c_values=(2.0,),
        target_volume=1e3,
    )
    trace = run_imcf(cfg)
    rec = sweepout_report(trace, 2.0, "flat", target_volume=1e3)
    ref = 4 * np.pi / 3
    ok = rec.target_reached and abs(rec.reference - ref) < 1e-15 and rec.sup_ac <= ref - 1e-3 and rec.routes_agree
    acceptance(
        5,
        ok,
        f"sup A^2 {rec.sup_ac:.6g} <= {ref - 1e-3:.6f}, final volume {trace.final.row.volume:.4g}, "
        f"strict={rec.strict} iso_strict={rec.iso_strict}",
    )
    assert ok


def _alpha_by_maximization(c):
    r = brentq(lambda r: 2 * np.cosh(r) - c * np.sinh(r), 1e-6, 20.0, xtol=1e-15)
    vol, _ = quad(lambda s: 4 * np.pi * np.sinh(s) ** 2, 0, r, epsabs=1e-14, epsrel=1e-13)
    return 4 * np.pi * np.sinh(r) ** 2 - c * vol


def test_criterion_06_hyperbolic_references(acceptance):
    ref_err = max(abs(omega_c_reference("hyperbolic", c) - _alpha_by_maximization(c)) for c in (2.5, 3.0, 4.0, 8.0))
    r = np.array([0.5, 1.0, 2.0])
    ball = hyperbolic_ball(r)
    prof_err = float(np.max(np.abs(hyperbolic_isoperimetric_profile(ball.volume) - ball.area)))
    ok = ref_err <= 1e-9 and prof_err <= 1e-5
    acceptance(6, ok, f"alpha_c vs 1D maximization {ref_err:.1e} (<=1e-9), profile vs balls {prof_err:.1e} (<=1e-5)")
    assert ok


def test_criterion_07_evolution_consistency(acceptance, grid32):
    res = {}
    for dt in (2e-2, 1e-2, 5e-3):
        cfg = FlowConfig(
            MetricSpec("euclidean"), build_round_sphere((0, 0, 0), 1.0, grid32), t_end=0.2, record_every=dt, dt_max=dt / 5
        )
        r = evolution_consistency(run_imcf(cfg))
        res[dt] = max(r.metric_law, r.area_law)
    ratios = [res[2e-2] / res[1e-2], res[1e-2] / res[5e-3]]
    ok = res[1e-2] <= 1e-3 and all(abs(q / 2 - 1) <= 0.2 for q in ratios)
    acceptance(
        7,
        ok,
        "residuals " + ", ".join(f"{v:.2e}@{k:g}" for k, v in res.items()) + f" (<=1e-3 at 1e-2), halving ratios "
        + ", ".join(f"{q:.2f}" for q in ratios) + " (2 +- 20%)",
    )
    assert ok


def test_criterion_08_box_monitor_and_smoothing(acceptance, grid32):
    field = make_metric(MetricSpec("euclidean"))
    noisy = perturbed_sphere((0, 0, 0), 1.0, grid32, 20, 0.01, seed=1)
    smooth = run_mcf_smoothing(noisy, field, 1e-3, 400)
    trace = run_imcf(FlowConfig(MetricSpec("euclidean"), smooth, t_end=1.0))
    c_fit = mean_curvature_floor_fit(trace) if trace.samples else 0.0
    ok = trace.status.completed and trace.samples and trace.final.t == 1.0 and c_fit > 0
    acceptance(8, bool(ok), f"status {trace.status}, samples {len(trace.samples)}, c_fit {c_fit:.4g} (>0)")
    assert ok


def test_criterion_09_scaling_invariance(acceptance, schwarzschild_trace, grid32):
    lam = 3.0
    cfg = FlowConfig(
        MetricSpec("schwarzschild", mass=lam), build_round_sphere((0, 0, 0), 5.0 * lam, grid32), t_end=2.0, c_values=(2.0,)
    )
    scaled = run_imcf(cfg)
    base = schwarzschild_trace.samples
    same_times = len(scaled.samples) == len(base) and all(a.t == b.t for a, b in zip(scaled.samples, base))
    err = max(float(np.max(np.abs(a.surface.radii / lam - b.surface.radii))) for a, b in zip(scaled.samples, base))
    ok = scaled.status.completed and same_times and err <= 1e-8
    acceptance(9, ok, f"max |f_lambda / lambda - f| {err:.1e} over {len(base)} samples (<=1e-8)")
    assert ok


def test_criterion_10_property_suites(acceptance):
    t0 = time.perf_counter()
    res = subprocess.run(
        [sys.executable, "-m", "pytest", "-m", "property", "-q", "-p", "no:cacheprovider", str(TESTS)],
        capture_output=True,
        text=True,
        timeout=900,
    )
    elapsed = time.perf_counter() - t0
    tail = res.stdout.strip().splitlines()[-1] if res.stdout.strip() else ""
    ok = res.returncode == 0 and elapsed <= 600.0
    acceptance(10, ok, f"property suites: {tail} in {elapsed:.0f} s (<=600 s)")
    assert ok, res.stdout[-3000:]
