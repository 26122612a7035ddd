"""Explicit time stepping of inverse mean curvature flow and mean curvature flow.

Both flows move a radial graph ``f`` over the sphere grid.  A normal speed
``psi`` becomes a radial coordinate speed ``psi * radial_factor``, the unique
radial displacement with the prescribed normal component.  Steps are
forward Euler with an adaptive step size and the result is projected back
onto the retained spherical harmonics.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .ambient import MetricField, MetricSpec, make_metric
from .diagnostics import DiagnosticsRow, compute_row
from .errors import (
    DegenerateSurface,
    DomainError,
    InvalidConfig,
    NonPositiveMeanCurvature,
    NonStarShaped,
)
from .surface import RadialSurface, SurfaceGeometry, geometry

log = logging.getLogger(__name__)

MAX_HALVINGS = 20

OK = "ok"
STAR_VIOLATION = "star_violation"
CURVATURE_VIOLATION = "curvature_violation"


class FlowStatus(NamedTuple):
    """Termination status of a run.

    ``kind`` is one of ``completed``, ``box_violation``, ``h_nonpositive``
    or ``degenerate``; ``detail`` names the violated monitor edge.
    """

    kind: str
    t: Optional[float] = None
    detail: Optional[str] = None

    @property
    def completed(self):
        return self.kind == "completed"

    def __str__(self):
        if self.kind == "completed":
            return "completed"
        extra = f", {self.detail}" if self.detail else ""
        return f"{self.kind}(t={self.t:.6g}{extra})"


@dataclass(frozen=True)
class FlowConfig:
    metric: MetricSpec
    initial: RadialSurface
    t_end: float
    iota_min: float = 0.1
    b_max: float = 50.0
    cfl_safety: float = 0.5
    dt_max: float = 1e-3
    record_every: float = 0.1
    c_values: tuple = ()
    target_volume: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.metric, MetricSpec):
            raise InvalidConfig("metric must be a MetricSpec", "flow.metric")
        if not self.t_end > 0:
            raise InvalidConfig(f"t_end must be positive, got {self.t_end}", "flow.t_end")
        if not 0 < self.iota_min < 1:
            raise InvalidConfig(f"iota_min must lie in (0, 1), got {self.iota_min}", "flow.monitor.iota_min")
        if not self.b_max > 0:
            raise InvalidConfig(f"b_max must be positive, got {self.b_max}", "flow.monitor.b_max")
        if not 0 < self.cfl_safety <= 1:
            raise InvalidConfig(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}", "flow.stepper.cfl_safety")
        if not self.dt_max > 0:
            raise InvalidConfig(f"dt_max must be positive, got {self.dt_max}", "flow.stepper.dt_max")
        if not self.record_every > 0:
            raise InvalidConfig(f"record_every must be positive, got {self.record_every}", "flow.record_every")
        if self.target_volume is not None and not self.target_volume > 0:
            raise InvalidConfig(f"target volume must be positive, got {self.target_volume}", "analysis.target_volume")
        object.__setattr__(self, "c_values", tuple(float(c) for c in self.c_values))


class Sample(NamedTuple):
    t: float
    surface: RadialSurface
    row: DiagnosticsRow


@dataclass
class FlowTrace:
    kind: str  # "imcf" or "mcf"
    field: MetricField
    samples: list = field(default_factory=list)
    status: FlowStatus = FlowStatus("completed")
    n_steps: int = 0

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    @property
    def rows(self):
        return [s.row for s in self.samples]

    @property
    def final(self):
        return self.samples[-1]

    def column(self, name):
        return np.array([getattr(s.row, name) for s in self.samples])


# ---------------------------------------------------------------------------
# single steps


def _geom(s, field, geom):
    if geom is None:
        return geometry(s, field)
    if geom.surface is not s:
        raise ValueError("geometry does not belong to the given surface")
    return geom


def _advance(geom: SurfaceGeometry, speed):
    grid = geom.grid
    radii = geom.f + grid.project(speed * geom.radial_factor)
    if not np.all(np.isfinite(radii)):
        raise DegenerateSurface("non-finite radius after step")
    if np.any(radii <= 0):
        raise DegenerateSurface("radius collapsed to zero")
    return geom.surface.with_radii(radii)


def imcf_step(s: RadialSurface, field: MetricField, dt: float, geom: Optional[SurfaceGeometry] = None):
    """One Euler step of inverse mean curvature flow (normal speed ``1/H``)."""
    geom = _geom(s, field, geom)
    if geom.h_min <= 0:
        raise NonPositiveMeanCurvature(f"min H = {geom.h_min:.6g}")
    if geom.min_margin <= 0:
        raise NonStarShaped(f"star margin = {geom.min_margin:.6g}")
    return _advance(geom, dt / geom.H)


def mcf_step(s: RadialSurface, field: MetricField, deps: float, geom: Optional[SurfaceGeometry] = None):
    """One Euler step of mean curvature flow (normal speed ``-H``)."""
    geom = _geom(s, field, geom)
    if geom.min_margin <= 0:
        raise NonStarShaped(f"star margin = {geom.min_margin:.6g}")
    return _advance(geom, -deps * geom.H)


def box_monitor(geom: SurfaceGeometry, iota_min: float, b_max: float) -> str:
    """Classify a surface against ``{margin >= iota_min, |B| sqrt(A) <= b_max}``."""
    if geom.min_margin < iota_min:
        return STAR_VIOLATION
    if geom.bnorm_sqrt_area > b_max:
        return CURVATURE_VIOLATION
    return OK


def grid_length(geom: SurfaceGeometry) -> float:
    """Resolved length on the surface: mean radius over ``sqrt(L(L+1))``."""
    return float(np.sqrt(geom.area / (4.0 * np.pi)) * geom.grid.min_spacing)


def stable_step(geom: SurfaceGeometry, kind: str, cfl_safety: float, dt_max: float) -> float:
    """Adaptive step size for the explicit schemes.

    The linearized IMCF is a heat equation with diffusivity ``1/H^2``, MCF
    one with unit diffusivity; explicit Euler is stable for
    ``dt <= 2 h^2 / diffusivity`` with ``h`` the resolved length.
    """
    h2 = grid_length(geom) ** 2
    if kind == "imcf":
        limit = 2.0 * h2 * geom.h_min**2
    else:
        limit = 2.0 * h2
    return cfl_safety * min(dt_max, limit)


# ---------------------------------------------------------------------------
# runs


def _hard_check(kind, geom):
    if not (np.all(np.isfinite(geom.H)) and np.isfinite(geom.area)):
        raise DegenerateSurface("non-finite geometry")
    if kind == "imcf" and geom.h_min <= 0:
        raise NonPositiveMeanCurvature(f"min H = {geom.h_min:.6g}")
    if geom.min_margin <= 0:
        raise NonStarShaped(f"star margin = {geom.min_margin:.6g}")


def _run(kind, cfg: FlowConfig, field=None, on_sample: Optional[Callable] = None) -> FlowTrace:
    field = make_metric(cfg.metric) if field is None else field
    step = imcf_step if kind == "imcf" else mcf_step
    trace = FlowTrace(kind, field)

    def record(t, s, geom):
        row = compute_row(t, geom, cfg.c_values)
        smp = Sample(float(t), s, row)
        trace.samples.append(smp)
        if on_sample is not None:
            on_sample(smp)
        return row

    s = cfg.initial
    try:
        geom = geometry(s, field)
        _hard_check(kind, geom)
    except NonPositiveMeanCurvature:
        trace.status = FlowStatus("h_nonpositive", 0.0)
        return trace
    except (DegenerateSurface, NonStarShaped, DomainError) as exc:
        trace.status = FlowStatus("degenerate", 0.0, str(exc))
        return trace
    row = record(0.0, s, geom)

    t = 0.0
    k_next = 1
    eps = 1e-12 * max(cfg.t_end, 1.0)
    while True:
        box = box_monitor(geom, cfg.iota_min, cfg.b_max)
        if box != OK:
            trace.status = FlowStatus("box_violation", t, box.split("_")[0])
            break
        if cfg.target_volume is not None and row.volume >= cfg.target_volume:
            break
        if t >= cfg.t_end - eps:
            break
        t_rec = min(k_next * cfg.record_every, cfg.t_end)
        dt = min(stable_step(geom, kind, cfg.cfl_safety, cfg.dt_max), t_rec - t)
        failure = None
        for _ in range(MAX_HALVINGS + 1):
            try:
                s_new = step(s, field, dt, geom)
                geom_new = geometry(s_new, field)
                _hard_check(kind, geom_new)
            except (DegenerateSurface, DomainError, NonPositiveMeanCurvature, NonStarShaped) as exc:
                failure = exc
                dt *= 0.5
                continue
            failure = None
            break
        if failure is not None:
            kind_fail = "h_nonpositive" if isinstance(failure, NonPositiveMeanCurvature) else "degenerate"
            trace.status = FlowStatus(kind_fail, t, str(failure))
            log.info("run stopped at t=%.6g: %s", t, failure)
            break
        s, geom = s_new, geom_new
        trace.n_steps += 1
        if t_rec - (t + dt) <= eps:
            t = t_rec
            k_next += 1
            row = record(t, s, geom)
        else:
            t += dt
    return trace


def run_imcf(cfg: FlowConfig, field: Optional[MetricField] = None, on_sample=None) -> FlowTrace:
    """Integrate IMCF from ``cfg.initial`` and record diagnostics.

    Stops at ``t_end``, at the first recorded sample whose volume reaches
    ``target_volume``, or when the box monitor or a hard failure trips; the
    reason is stored in ``trace.status`` and never raised.
    """
    return _run("imcf", cfg, field, on_sample)


def run_mcf(cfg: FlowConfig, field: Optional[MetricField] = None, on_sample=None) -> FlowTrace:
    """Integrate MCF with the same stepping and monitoring as :func:`run_imcf`."""
    return _run("mcf", cfg, field, on_sample)


def run_mcf_smoothing(s: RadialSurface, field: MetricField, eps_total: float, n_steps: int) -> RadialSurface:
    """Apply ``n_steps`` equal MCF steps covering ``eps_total`` of flow time."""
    if eps_total < 0:
        raise ValueError(f"smoothing time must be non-negative, got {eps_total}")
    if eps_total == 0 or n_steps <= 0:
        return s
    deps = eps_total / n_steps
    for _ in range(int(n_steps)):
        s = mcf_step(s, field, deps)
    return s
