import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imcflab.ambient import MetricSpec, make_metric
from imcflab.errors import InvalidConfig, NonPositiveMeanCurvature
from imcflab.flow import (
    CURVATURE_VIOLATION,
    OK,
    STAR_VIOLATION,
    FlowConfig,
    FlowStatus,
    box_monitor,
    imcf_step,
    mcf_step,
    run_imcf,
    run_mcf,
    run_mcf_smoothing,
    stable_step,
)
from imcflab.diagnostics import mean_curvature_floor_fit
from imcflab.sphere import SphereGrid
from imcflab.surface import build_ellipsoid, build_round_sphere, eccentricity, geometry, perturbed_sphere, surface_from_function

EUC_SPEC = MetricSpec("euclidean")
EUC = make_metric(EUC_SPEC)
HYP = make_metric(MetricSpec("hyperbolic-polar"))


def _dimple(grid, depth=0.8, width=0.02):
    def f(t, p):
        return 1.0 - depth * np.exp(-((t - np.pi / 2) ** 2 + (p - np.pi) ** 2) / width)

    return surface_from_function((0, 0, 0), grid, f)


def test_euclidean_imcf_step(grid16):
    s = imcf_step(build_round_sphere((0, 0, 0), 1.0, grid16), EUC, 1e-4)
    np.testing.assert_allclose(s.radii, 1 + 5e-5, atol=1e-9)


def test_hyperbolic_imcf_step_second_order(grid16):
    s0 = build_round_sphere((0, 0, 0), 1.0, grid16)
    errs = []
    for dt in (1e-3, 5e-4, 2.5e-4):
        r = imcf_step(s0, HYP, dt).radii
        assert np.ptp(r) < 1e-12
        errs.append(abs(np.sinh(r.mean()) - np.sinh(1.0) * np.exp(dt / 2)))
    # one Euler step has local error O(dt^2)
    assert errs[0] < 1e-6
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_imcf_step_rejects_nonpositive_mean_curvature(grid32):
    s = _dimple(grid32)
    with pytest.raises(NonPositiveMeanCurvature):
        imcf_step(s, EUC, 1e-4)


def test_euclidean_mcf_step(grid16):
    s = mcf_step(build_round_sphere((0, 0, 0), 1.0, grid16), EUC, 1e-4)
    np.testing.assert_allclose(s.radii, 1 - 2e-4, atol=1e-12)


def test_mcf_shrinking_sphere_law(grid16):
    s = build_round_sphere((0, 0, 0), 1.0, grid16)
    out = run_mcf_smoothing(s, EUC, 0.1, 4000)
    np.testing.assert_allclose(out.radii, np.sqrt(1 - 0.4), atol=1e-5)
    out = run_mcf_smoothing(s, EUC, 0.01, 1000)
    np.testing.assert_allclose(out.radii, np.sqrt(1 - 0.04), atol=1e-6)


def test_smoothing_with_zero_time_is_identity(grid16):
    s = perturbed_sphere((0, 0, 0), 1.0, grid16, 4, 0.05, seed=2)
    assert run_mcf_smoothing(s, EUC, 0.0, 10) is s
    with pytest.raises(ValueError):
        run_mcf_smoothing(s, EUC, -1.0, 10)


@pytest.mark.parametrize(
    "spec",
    [MetricSpec("schwarzschild", mass=1.0), MetricSpec("hyperbolic-polar"), MetricSpec("ads-schwarzschild", mass=0.4)],
    ids=lambda s: s.kind,
)
def test_round_spheres_stay_round_under_mcf(grid16, spec):
    field = make_metric(spec)
    s = build_round_sphere((0, 0, 0), 3.0, grid16)
    for _ in range(100):
        s = mcf_step(s, field, 1e-3)
    assert np.ptp(s.radii) <= 1e-10


def _mode20_linear_factor(eps):
    # relative amplitude of a degree-l mode on the shrinking unit sphere decays like
    # exp(-(l(l+1) - 2) * int_0^eps ds / r(s)^2) with r(s)^2 = 1 - 4s
    return np.exp(-(20 * 21 - 2) * (-np.log(1 - 4 * eps) / 4))


def test_mcf_damps_high_modes_at_the_linearized_rate(grid32):
    for amp in (1e-5, 1e-2):
        s = perturbed_sphere((0, 0, 0), 1.0, grid32, 20, amp, seed=1)
        out = run_mcf_smoothing(s, EUC, 1e-3, 400)
        ratio = np.sqrt(grid32.degree_power(out.radii)[20] / grid32.degree_power(s.radii)[20])
        r_ratio = np.sqrt(1 - 4e-3)
        assert abs(ratio / r_ratio - _mode20_linear_factor(1e-3)) < 2e-3


@pytest.mark.xfail(strict=True, reason="linearized damping of a degree-20 mode over eps = 1e-3 is only exp(-0.418) ~ 0.66")
def test_mode20_noise_bnorm_reduced_fivefold(grid32):
    s = perturbed_sphere((0, 0, 0), 1.0, grid32, 20, 0.01, seed=1)
    out = run_mcf_smoothing(s, EUC, 1e-3, 400)
    assert geometry(s, EUC).bnorm_max / geometry(out, EUC).bnorm_max >= 5.0


@pytest.mark.parametrize("degree", [8, 14])
def test_smoothed_noisy_sphere_flows_in_box(grid32, degree):
    # 1% noise of degree <= 15 keeps H > 0 after smoothing; the mode's share of H
    # scales like (l(l+1) - 2) * amplitude
    s = run_mcf_smoothing(perturbed_sphere((0, 0, 0), 1.0, grid32, degree, 0.01, seed=1), EUC, 1e-3, 400)
    trace = run_imcf(FlowConfig(EUC_SPEC, s, t_end=1.0))
    assert trace.status.completed and trace.final.t == 1.0
    assert mean_curvature_floor_fit(trace) > 0


def test_smoothed_mode20_noise_has_nonpositive_mean_curvature(grid32):
    s = run_mcf_smoothing(perturbed_sphere((0, 0, 0), 1.0, grid32, 20, 0.01, seed=1), EUC, 1e-3, 400)
    g = geometry(s, EUC)
    lin = 2 - 418 * 0.01 * np.exp(-418e-3)
    assert g.h_min < 0 and abs(g.h_min - lin) < 0.05
    assert g.min_margin > 0.99 and g.bnorm_sqrt_area < 50
    assert run_imcf(FlowConfig(EUC_SPEC, s, t_end=1.0)).status.kind == "h_nonpositive"


def test_box_monitor(grid16, grid32):
    g = geometry(build_round_sphere((0, 0, 0), 1.0, grid16), EUC)
    assert abs(g.bnorm_sqrt_area - np.sqrt(8 * np.pi)) < 1e-12
    assert box_monitor(g, 0.5, 10.0) == OK
    assert box_monitor(g, 0.5, 5.0) == CURVATURE_VIOLATION
    gd = geometry(_dimple(grid32, depth=0.6, width=0.05), EUC)
    assert gd.min_margin < 0.5
    assert box_monitor(gd, 0.5, 1e6) == STAR_VIOLATION


def test_stable_step_law(grid16):
    g = geometry(build_round_sphere((0, 0, 0), 2.0, grid16), EUC)
    h = 2.0 / np.sqrt(grid16.lmax * (grid16.lmax + 1))
    assert abs(stable_step(g, "imcf", 0.5, 1.0) - 0.5 * 2 * h * h * 1.0) < 1e-12 * h * h
    assert abs(stable_step(g, "mcf", 0.5, 1.0) - 0.5 * 2 * h * h) < 1e-12 * h * h
    assert stable_step(g, "imcf", 0.5, 1e-5) == 0.5e-5


@pytest.mark.parametrize(
    "kwargs,field",
    [
        (dict(t_end=0.0), "flow.t_end"),
        (dict(iota_min=1.0), "flow.monitor.iota_min"),
        (dict(b_max=-1.0), "flow.monitor.b_max"),
        (dict(cfl_safety=1.5), "flow.stepper.cfl_safety"),
        (dict(dt_max=0.0), "flow.stepper.dt_max"),
        (dict(record_every=0.0), "flow.record_every"),
    ],
)
def test_flow_config_validation(grid16, kwargs, field):
    base = dict(metric=EUC_SPEC, initial=build_round_sphere((0, 0, 0), 1.0, grid16), t_end=1.0)
    base.update(kwargs)
    with pytest.raises(InvalidConfig) as info:
        FlowConfig(**base)
    assert info.value.field == field


def test_run_records_exact_sample_times(grid16):
    cfg = FlowConfig(EUC_SPEC, build_round_sphere((0, 0, 0), 1.0, grid16), t_end=0.35, record_every=0.1)
    trace = run_imcf(cfg)
    assert trace.status.completed and str(trace.status) == "completed"
    np.testing.assert_array_equal(trace.times, [0.0, 0.1, 0.2, 0.30000000000000004, 0.35])
    assert np.all(np.diff(trace.times) > 0)
    np.testing.assert_allclose(trace.final.surface.radii, np.exp(0.35 / 2), atol=5e-4)


def test_run_stops_on_box_violation(grid16):
    cfg = FlowConfig(EUC_SPEC, build_round_sphere((0, 0, 0), 1.0, grid16), t_end=1.0, b_max=5.0)
    trace = run_imcf(cfg)
    assert trace.status == FlowStatus("box_violation", 0.0, "curvature")
    assert len(trace.samples) == 1


def test_run_reports_nonpositive_mean_curvature(grid32):
    trace = run_imcf(FlowConfig(EUC_SPEC, _dimple(grid32), t_end=1.0))
    assert trace.status.kind == "h_nonpositive" and trace.status.t == 0.0
    assert "h_nonpositive" in str(trace.status)


def test_run_stops_at_target_volume(grid16):
    cfg = FlowConfig(EUC_SPEC, build_round_sphere((0, 0, 0), 1.0, grid16), t_end=5.0, record_every=0.1, target_volume=8.0)
    trace = run_imcf(cfg)
    v = trace.column("volume")
    assert v[-1] >= 8.0 and np.all(v[:-1] < 8.0)
    assert trace.status.completed


def test_mcf_run_shrinks_sphere(grid16):
    cfg = FlowConfig(EUC_SPEC, build_round_sphere((0, 0, 0), 1.0, grid16), t_end=0.1, record_every=0.05, dt_max=1e-4)
    trace = run_mcf(cfg)
    np.testing.assert_allclose(trace.final.surface.radii, np.sqrt(0.6), atol=2e-5)


def test_on_sample_callback(grid16):
    seen = []
    cfg = FlowConfig(EUC_SPEC, build_round_sphere((0, 0, 0), 1.0, grid16), t_end=0.2, record_every=0.1)
    trace = run_imcf(cfg, on_sample=seen.append)
    assert [s.t for s in seen] == list(trace.times)


@pytest.mark.property
def test_exponential_area_growth(schwarzschild_trace, euclidean_ball_trace):
    for trace in (schwarzschild_trace, euclidean_ball_trace):
        t = trace.times
        A = trace.column("area")
        keep = t <= 2.0
        assert np.max(np.abs(np.log(A[keep] / A[0]) - t[keep])) <= 5e-3


def test_schwarzschild_mass_is_constant(schwarzschild_trace):
    assert schwarzschild_trace.status.completed
    assert np.max(np.abs(schwarzschild_trace.column("m_h") - 1.0)) < 2e-3


def test_ellipsoid_roundness_in_schwarzschild():
    # soft diagnostic: eccentricity decreases along the flow of a nearly round ellipsoid
    grid = SphereGrid(16, 32)
    cfg = FlowConfig(
        MetricSpec("schwarzschild", mass=1.0), build_ellipsoid((0, 0, 0), (1, 1, 1.05), grid), t_end=1.0, record_every=0.1
    )
    trace = run_imcf(cfg)
    assert trace.status.completed
    ecc = np.array([eccentricity(s.surface) for s in trace.samples])
    assert np.all(np.diff(ecc) < 0)


@pytest.mark.property
@settings(max_examples=6, deadline=None)
@given(st.floats(0.3, 1.0), st.floats(1.05, 3.0))
def test_comparison_principle_for_concentric_spheres(r_in, ratio):
    grid = SphereGrid(8, 16)
    runs = [
        run_imcf(FlowConfig(EUC_SPEC, build_round_sphere((0, 0, 0), r, grid), t_end=1.0, record_every=0.1))
        for r in (r_in, r_in * ratio)
    ]
    inner = np.array([s.surface.radii.max() for s in runs[0].samples])
    outer = np.array([s.surface.radii.min() for s in runs[1].samples])
    assert np.all(outer > inner)


@pytest.mark.property
@settings(max_examples=4, deadline=None)
@given(st.integers(2, 4), st.floats(0.01, 0.05), st.integers(0, 100))
def test_step_convergence_is_first_order(degree, amp, seed):
    grid = SphereGrid(12, 24)
    s0 = perturbed_sphere((0, 0, 0), 1.0, grid, degree, amp, seed)
    finals = []
    for dt in (4e-3, 2e-3, 1e-3):
        cfg = FlowConfig(EUC_SPEC, s0, t_end=0.2, record_every=0.2, dt_max=2 * dt, cfl_safety=0.5)
        finals.append(run_imcf(cfg).final.surface.radii)
    d1 = np.max(np.abs(finals[0] - finals[1]))
    d2 = np.max(np.abs(finals[1] - finals[2]))
    assert d2 <= 0.6 * d1


@pytest.mark.property
@settings(max_examples=5, deadline=None)
@given(st.integers(2, 4), st.floats(0.01, 0.05), st.integers(0, 100), st.sampled_from(["euc", "sch", "hyp"]))
def test_area_grows_exponentially_on_perturbed_spheres(degree, amp, seed, which):
    spec = {"euc": EUC_SPEC, "sch": MetricSpec("schwarzschild", mass=1.0), "hyp": MetricSpec("hyperbolic-polar")}[which]
    # |B| sqrt(A) ~ sqrt(8 pi) cosh r on hyperbolic spheres, so stay well inside b_max there
    rho = 1.5 if which == "hyp" else 3.0
    s0 = perturbed_sphere((0, 0, 0), rho, SphereGrid(12, 24), degree, amp, seed)
    trace = run_imcf(FlowConfig(spec, s0, t_end=0.3, record_every=0.1))
    assert trace.status.completed
    A = trace.column("area")
    assert np.max(np.abs(np.log(A / A[0]) - trace.times)) <= 5e-3
