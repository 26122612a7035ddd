"""Command line entry point.

Subcommands: ``run``, ``reference``, ``check-config`` and ``validate``.
Exit codes: 0 when every enabled check passes, 1 when a check fails and
2 on configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .ambient import MetricSpec, make_metric
from .config import RunConfig, load_config
from .errors import ImcfLabError, InvalidConfig
from .flow import run_imcf, run_mcf, run_mcf_smoothing
from .io import emit_csv, write_surface
from .sphere import SphereGrid
from .surface import build_round_sphere, enclosed_volume, geometry, hawking_mass
from .sweepout import (
    hyperbolic_ball,
    hyperbolic_critical_radius,
    omega_c_reference,
    sweepout_report,
)

log = logging.getLogger("imcflab")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
THREADS_ENV = "IMCFLAB_THREADS"
ISO_TOL = 1e-6
HOLDER_TOL = 1e-8
MASS_IDENTITY_TOL = 1e-10


def _clean(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


# ---------------------------------------------------------------------------
# run


def evaluate_trace(cfg: RunConfig, trace):
    """All enabled checks for a finished trace.  Returns ``(checks, extras)``."""
    an = cfg.analysis
    checks = []
    extras = {"status": str(trace.status), "n_samples": len(trace.samples), "n_steps": trace.n_steps}
    done = trace.status.completed
    checks.append(dg.Check("flow_completed", 1.0 if done else 0.0, 1.0, done))
    if len(trace.samples) == 0:
        return checks, extras
    rows = trace.rows
    A = np.array([r.area for r in rows])
    ident = np.array([r.m_h_star - r.m_h - 4.0 * (r.area / (16.0 * np.pi)) ** 1.5 for r in rows])
    checks.append(
        dg.Check("mass_identity", float(np.max(np.abs(ident))), MASS_IDENTITY_TOL, np.max(np.abs(ident)) <= 1e-10)
    )
    gaps = [r.holder_gap / r.area for r in rows if np.isfinite(r.holder_gap)]
    if gaps:
        checks.append(dg.Check("holder_gap_min", float(min(gaps)), -HOLDER_TOL, min(gaps) >= -HOLDER_TOL))

    if an.geroch and len(rows) >= 2:
        g = dg.geroch_report(trace, an.regime, an.geroch_tol)
        checks.append(dg.Check("geroch_min_increment", g.min_increment, -g.tolerance, g.monotone))
    if an.isoperimetric:
        iso = dg.isoperimetric_report(trace, an.regime)
        tol = ISO_TOL if an.regime == "flat" else ISO_TOL * float(A.max())
        checks.append(dg.Check("isoperimetric_excess", iso.max_ratio_excess, tol, iso.max_ratio_excess <= tol))
        extras["isoperimetric_all_strict"] = bool(iso.all_strict)
        if len(rows) >= 2:
            extras["ratio_derivative_max"] = dg.ratio_derivative_check(trace, an.regime)
    if an.evolution:
        if len(rows) >= 3:
            res = dg.evolution_consistency(trace)
            for name in ("area_law", "metric_law"):
                v = getattr(res, name)
                checks.append(dg.Check(f"evolution_{name}", v, an.evolution_tol, v <= an.evolution_tol))
            extras["evolution_h_law"] = res.h_law
        else:
            checks.append(dg.Check("evolution_samples", float(len(rows)), 3.0, False))
    if an.floor_fit:
        c_fit = dg.mean_curvature_floor_fit(trace)
        checks.append(dg.Check("mean_curvature_floor_fit", c_fit, 0.0, c_fit > 0))

    sweeps = []
    for c in an.c_values:
        if not done:
            checks.append(dg.Check(f"sweepout_c{c:g}", float("nan"), omega_c_reference(an.regime, c), False))
            continue
        rec = sweepout_report(trace, c, an.regime, an.strict_margin, an.target_volume)
        sweeps.append(rec.as_dict())
        checks.append(dg.Check(f"sweepout_c{c:g}", rec.sup_ac, rec.reference + rec.margin, rec.passed))
    extras["sweepout"] = sweeps
    return checks, extras


def summarize(checks, extras):
    lines = [f"flow status: {extras.get('status')}"]
    for ch in checks:
        mark = "PASS" if ch.passed else "FAIL"
        lines.append(f"  [{mark}] {ch.name}: value={ch.value:.10g} threshold={ch.threshold:.6g}")
    for rec in extras.get("sweepout", []):
        lines.append(
            "  sweep-out c={c:g}: sup A^c={sup_ac:.10g} reference={reference:.10g} strict={strict} "
            "mountain_pass={mountain_pass_valid} routes_agree={routes_agree}".format(**rec)
        )
    if "isoperimetric_all_strict" in extras:
        lines.append(f"  isoperimetric strict at every sample: {extras['isoperimetric_all_strict']}")
    return "\n".join(lines)


def run_config(cfg: RunConfig, out_dir=None, quiet=False):
    """Execute a configured run and write its artifacts.  Returns the exit code."""
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid()
    field = make_metric(cfg.metric)
    surface = cfg.initial_surface(grid)
    field.check_domain(surface.points())
    if cfg.initial.smoothing_eps > 0:
        surface = run_mcf_smoothing(surface, field, cfg.initial.smoothing_eps, cfg.initial.smoothing_steps)

    every = cfg.output.checkpoint_every
    ckpt_dir = out / "checkpoints"
    counter = {"k": 0}

    def on_sample(smp):
        k = counter["k"]
        counter["k"] += 1
        if every and k % every == 0:
            ckpt_dir.mkdir(exist_ok=True)
            write_surface(smp.surface, ckpt_dir / f"surface_{k:05d}.txt")

    runner = run_imcf if cfg.flow_kind == "imcf" else run_mcf
    trace = runner(cfg.flow_config(surface), field, on_sample)
    checks, extras = evaluate_trace(cfg, trace)
    if trace.samples:
        emit_csv(trace, out / "trace.csv", cfg.analysis.c_values)
    report = {
        "checks": [ch.as_dict() for ch in checks],
        "status": extras.pop("status"),
        "sweepout": extras.pop("sweepout", []),
        "info": extras,
        "pass": all(ch.passed for ch in checks),
    }
    (out / "report.json").write_text(json.dumps(_clean(report), indent=2) + "\n")
    text = summarize(checks, {**extras, "status": report["status"], "sweepout": report["sweepout"]})
    (out / "summary.txt").write_text(text + "\n")
    if not quiet:
        print(text)
    return EXIT_OK if report["pass"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# reference and self-test


def reference_text(regime, c):
    value = omega_c_reference(regime, c)
    if regime == "flat":
        return f"{value:.7f}"
    r = hyperbolic_critical_radius(c)
    ball = hyperbolic_ball(r)
    return f"{value:.7f}, r* = {r:.7f}\nball area = {ball.area:.7f}, ball volume = {ball.volume:.7f}"


def self_test(n_points=100, seed=0):
    """Model-metric and model-surface battery.  Returns a list of checks."""
    rng = np.random.default_rng(seed)
    checks = []
    specs = {
        "euclidean": MetricSpec("euclidean"),
        "schwarzschild": MetricSpec("schwarzschild", mass=1.0),
        "hyperbolic-polar": MetricSpec("hyperbolic-polar"),
        "ads-schwarzschild": MetricSpec("ads-schwarzschild", mass=1.0),
    }
    for name, spec in specs.items():
        field = make_metric(spec)
        inner = max(field.inner_radius, 0.05)
        d = rng.normal(size=(n_points, 3))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        x = d * rng.uniform(inner + 0.1, inner + 8.0, size=(n_points, 1))
        val = field.evaluate(x)
        eig = np.linalg.eigvalsh(val.g).min()
        checks.append(dg.Check(f"{name}_positive_definite", float(eig), 0.0, eig > 0))
        err = float(np.abs(val.g_inv @ val.g - np.eye(3)).max())
        checks.append(dg.Check(f"{name}_inverse", err, 1e-10, err <= 1e-10))
        curv = field.curvature(x)
        expected = -6.0 if spec.regime == "hyperbolic" else 0.0
        err = float(np.abs(curv.scalar - expected).max())
        checks.append(dg.Check(f"{name}_scalar_curvature", err, 1e-6, err <= 1e-6))
        if name != "euclidean":
            fd = make_metric(spec, derivative_mode="finite-difference")
            ga, gb = val.christoffel[:20], fd.evaluate(x[:20]).christoffel
            rel = float(np.abs(ga - gb).max() / np.abs(ga).max())
            checks.append(dg.Check(f"{name}_christoffel_fd", rel, 1e-5, rel <= 1e-5))

    grid = SphereGrid(16, 32)
    eu = make_metric(specs["euclidean"])
    geom = geometry(build_round_sphere((0, 0, 0), 1.0, grid), eu)
    err = abs(geom.area - 4.0 * np.pi)
    checks.append(dg.Check("unit_sphere_area", err, 1e-10, err <= 1e-10))
    err = float(np.abs(geom.H - 2.0).max())
    checks.append(dg.Check("unit_sphere_mean_curvature", err, 1e-6, err <= 1e-6))
    hy = make_metric(specs["hyperbolic-polar"])
    s = build_round_sphere((0, 0, 0), 1.0, grid)
    ball = hyperbolic_ball(1.0)
    err = abs(enclosed_volume(s, hy) - ball.volume)
    checks.append(dg.Check("hyperbolic_ball_volume", err, 1e-6, err <= 1e-6))
    sw = make_metric(specs["schwarzschild"])
    err = abs(hawking_mass(geometry(build_round_sphere((0, 0, 0), 5.0, grid), sw)) - 1.0)
    checks.append(dg.Check("schwarzschild_hawking_mass", err, 2e-3, err <= 2e-3))
    return checks


# ---------------------------------------------------------------------------
# argument handling


def _grid_override(text):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 32x64, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="imcflab", description="Smooth IMCF/MCF laboratory for star-shaped surfaces.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--grid", type=_grid_override, help="override grid as <lat>x<lon>")
        sp.add_argument("--quiet", action="store_true")

    r = sub.add_parser("run", help="run a configured flow and its checks")
    common(r)
    r.add_argument("--out", help="output directory (overrides output.directory)")
    c = sub.add_parser("check-config", help="validate a configuration without running it")
    common(c)
    ref = sub.add_parser("reference", help="print the model min-max value of A^c")
    ref.add_argument("--regime", choices=("flat", "hyperbolic"), required=True)
    ref.add_argument("--c", type=float, required=True)
    v = sub.add_parser("validate", help="model-metric self-test battery")
    v.add_argument("--quiet", action="store_true")
    return p


def _set_threads():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return None
    try:
        n = int(n)
        if n < 1:
            raise ValueError
    except ValueError:
        raise InvalidConfig(f"{THREADS_ENV} must be a positive integer, got {n!r}", THREADS_ENV) from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None):
    args = build_parser().parse_args(argv)
    quiet = getattr(args, "quiet", False)
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        _set_threads()
        if args.command == "reference":
            print(reference_text(args.regime, args.c))
            return EXIT_OK
        if args.command == "validate":
            checks = self_test()
            if not quiet:
                for ch in checks:
                    print(f"[{'PASS' if ch.passed else 'FAIL'}] {ch.name}: {ch.value:.3g} (threshold {ch.threshold:g})")
            return EXIT_OK if all(ch.passed for ch in checks) else EXIT_FAIL
        cfg = load_config(args.config)
        if args.grid is not None:
            SphereGrid(*args.grid)
            cfg = cfg.with_grid(*args.grid)
        if args.command == "check-config":
            cfg.initial_surface()
            if not quiet:
                print(f"{args.config}: ok")
            return EXIT_OK
        return run_config(cfg, args.out, quiet)
    except InvalidConfig as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ImcfLabError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
