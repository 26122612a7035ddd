"""Run configuration: a YAML document validated into typed sections.

See the README for the schema.  Every validation failure raises
:class:`~imcflab.errors.InvalidConfig` naming the dotted field path and,
when the document came from a file, the line it appears on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .ambient import MetricSpec
from .errors import InvalidConfig
from .flow import FlowConfig
from .sphere import SphereGrid
from .surface import RadialSurface, build_ellipsoid, build_round_sphere, perturbed_sphere

SECTIONS = ("metric", "initial", "flow", "analysis", "output")


@dataclass(frozen=True)
class InitialSpec:
    center: tuple = (0.0, 0.0, 0.0)
    radius: Optional[float] = None
    axes: Optional[tuple] = None
    radii_file: Optional[str] = None
    n_lat: int = 32
    n_lon: int = 64
    noise_degree: Optional[int] = None
    noise_amplitude: float = 0.0
    noise_seed: int = 0
    smoothing_eps: float = 0.0
    smoothing_steps: int = 10


@dataclass(frozen=True)
class AnalysisSpec:
    regime: str = "flat"
    c_values: tuple = ()
    geroch: bool = True
    isoperimetric: bool = True
    evolution: bool = False
    floor_fit: bool = False
    target_volume: Optional[float] = None
    geroch_tol: Optional[float] = None
    evolution_tol: float = 1e-3
    strict_margin: Optional[float] = None


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    checkpoint_every: int = 0  # samples between surface checkpoints, 0 disables


@dataclass(frozen=True)
class RunConfig:
    metric: MetricSpec
    initial: InitialSpec
    flow_kind: str
    t_end: float
    record_every: float
    iota_min: float
    b_max: float
    cfl_safety: float
    dt_max: float
    analysis: AnalysisSpec
    output: OutputSpec
    source: Optional[str] = field(default=None, compare=False)

    def grid(self):
        return SphereGrid(self.initial.n_lat, self.initial.n_lon)

    def with_grid(self, n_lat, n_lon):
        init = InitialSpec(**{**self.initial.__dict__, "n_lat": n_lat, "n_lon": n_lon})
        return RunConfig(**{**self.__dict__, "initial": init})

    def initial_surface(self, grid=None) -> RadialSurface:
        grid = self.grid() if grid is None else grid
        init = self.initial
        if init.radii_file is not None:
            from .io import read_surface

            path = Path(init.radii_file)
            if self.source and not path.is_absolute():
                path = Path(self.source).parent / path
            return read_surface(path, grid)
        if init.axes is not None:
            return build_ellipsoid(init.center, init.axes, grid)
        if init.noise_degree:
            return perturbed_sphere(
                init.center, init.radius, grid, init.noise_degree, init.noise_amplitude, init.noise_seed
            )
        return build_round_sphere(init.center, init.radius, grid)

    def flow_config(self, surface) -> FlowConfig:
        return FlowConfig(
            metric=self.metric,
            initial=surface,
            t_end=self.t_end,
            iota_min=self.iota_min,
            b_max=self.b_max,
            cfl_safety=self.cfl_safety,
            dt_max=self.dt_max,
            record_every=self.record_every,
            c_values=self.analysis.c_values,
            target_volume=self.analysis.target_volume,
        )


# ---------------------------------------------------------------------------
# parsing


class _Doc:
    """Dict access that remembers dotted paths and source lines."""

    def __init__(self, data, path, lines):
        self.data = data if data is not None else {}
        self.path = path
        self.lines = lines
        if not isinstance(self.data, dict):
            self.fail("must be a mapping")

    def _where(self, key=None):
        p = f"{self.path}.{key}" if key and self.path else (key or self.path)
        return p

    def fail(self, msg, key=None):
        p = self._where(key)
        line = self.lines.get(p)
        if line is None and key is not None:
            line = self.lines.get(self.path)
        suffix = f" (line {line})" if line is not None else ""
        raise InvalidConfig(msg + suffix, p)

    def sub(self, key):
        return _Doc(self.data.get(key), self._where(key), self.lines)

    def has(self, key):
        return key in self.data

    def get(self, key, kind, default=None, check=None, msg=None):
        if key not in self.data or self.data[key] is None:
            return default
        v = self.data[key]
        try:
            if kind is bool:
                if not isinstance(v, bool):
                    raise TypeError
            elif kind is int:
                if isinstance(v, bool) or int(v) != v:
                    raise TypeError
                v = int(v)
            elif kind is float:
                if isinstance(v, bool):
                    raise TypeError
                v = float(v)
            elif kind == "vec3":
                v = tuple(float(x) for x in v)
                if len(v) != 3:
                    raise TypeError
            elif kind == "floats":
                v = tuple(float(x) for x in (v if isinstance(v, (list, tuple)) else [v]))
            elif kind is str:
                if not isinstance(v, str):
                    raise TypeError
        except (TypeError, ValueError):
            expected = {"vec3": "a list of three numbers", "floats": "a number or list of numbers"}.get(
                kind, getattr(kind, "__name__", str(kind))
            )
            self.fail(f"expected {expected}, got {v!r}", key)
        if check is not None and not check(v):
            self.fail(msg or f"invalid value {v!r}", key)
        return v

    def reject_unknown(self, allowed):
        for key in self.data:
            if key not in allowed:
                self.fail(f"unknown key {key!r}; allowed keys: {', '.join(allowed)}", key)


def _line_map(text):
    """Map dotted key paths to 1-based source lines."""
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[p] = k.start_mark.line + 1
                walk(v, p)

    if root is not None:
        walk(root, "")
    return lines


def _metric(doc: _Doc, allow_base=True) -> MetricSpec:
    doc.reject_unknown(("kind", "mass", "origin", "factor", "base", "decay"))
    kind = doc.get("kind", str)
    if kind is None:
        doc.fail("metric kind is required", "kind")
    kw = {"kind": kind}
    if doc.has("mass"):
        kw["mass"] = doc.get("mass", float)
    if doc.has("origin"):
        kw["origin"] = doc.get("origin", "vec3")
    if doc.has("factor"):
        kw["factor"] = doc.get("factor", float)
    if doc.has("base"):
        if not allow_base:
            doc.fail("nested conformal bases are not supported", "base")
        kw["base"] = _metric(doc.sub("base"), allow_base=False)
    if doc.has("decay"):
        decay = doc.data["decay"]
        if not isinstance(decay, dict):
            doc.fail("decay metadata must be a mapping", "decay")
        kw["decay"] = dict(decay)
    try:
        return MetricSpec(**kw)
    except InvalidConfig as exc:
        key = exc.field.split(".")[-1] if exc.field else None
        doc.fail(str(exc).split(": ", 1)[-1], key if key in doc.data else None)


def _positive(v):
    return v > 0


def parse_config(data, lines=None, source=None) -> RunConfig:
    lines = lines or {}
    root = _Doc(data, "", lines)
    root.reject_unknown(SECTIONS)
    if not root.has("metric"):
        raise InvalidConfig("the metric section is required", "metric")
    metric = _metric(root.sub("metric"))

    ini = root.sub("initial")
    ini.reject_unknown(("center", "radius", "axes", "radii_file", "grid", "noise", "smoothing"))
    grid = ini.sub("grid")
    grid.reject_unknown(("n_lat", "n_lon"))
    n_lat = grid.get("n_lat", int, 32, lambda v: v >= 8, "n_lat must be an integer >= 8")
    n_lon = grid.get("n_lon", int, 64, lambda v: v >= 16 and v % 2 == 0, "n_lon must be an even integer >= 16")
    noise = ini.sub("noise")
    noise.reject_unknown(("degree", "amplitude", "seed"))
    smooth = ini.sub("smoothing")
    smooth.reject_unknown(("eps", "steps"))
    shapes = [k for k in ("radius", "axes", "radii_file") if ini.has(k)]
    if len(shapes) != 1:
        ini.fail("exactly one of radius, axes or radii_file is required")
    init = InitialSpec(
        center=ini.get("center", "vec3", (0.0, 0.0, 0.0)),
        radius=ini.get("radius", float, None, _positive, "radius must be positive"),
        axes=ini.get("axes", "vec3", None, lambda v: min(v) > 0, "ellipsoid axes must be positive"),
        radii_file=ini.get("radii_file", str),
        n_lat=n_lat,
        n_lon=n_lon,
        noise_degree=noise.get(
            "degree", int, None, lambda v: 1 <= v <= n_lat - 1, f"noise degree must lie in [1, {n_lat - 1}]"
        ),
        noise_amplitude=noise.get("amplitude", float, 0.0, lambda v: 0 <= v < 1, "amplitude must lie in [0, 1)"),
        noise_seed=noise.get("seed", int, 0),
        smoothing_eps=smooth.get("eps", float, 0.0, lambda v: v >= 0, "smoothing eps must be non-negative"),
        smoothing_steps=smooth.get("steps", int, 10, _positive, "smoothing steps must be positive"),
    )
    if init.noise_degree and init.radius is None:
        noise.fail("noise needs a round initial radius")

    fl = root.sub("flow")
    fl.reject_unknown(("kind", "t_end", "record_every", "monitor", "stepper"))
    mon = fl.sub("monitor")
    mon.reject_unknown(("iota_min", "b_max"))
    st = fl.sub("stepper")
    st.reject_unknown(("cfl_safety", "dt_max"))
    if not fl.has("t_end"):
        fl.fail("t_end is required", "t_end")

    an = root.sub("analysis")
    an.reject_unknown(
        (
            "regime",
            "c",
            "geroch",
            "isoperimetric",
            "evolution",
            "floor_fit",
            "target_volume",
            "geroch_tol",
            "evolution_tol",
            "strict_margin",
        )
    )
    regime = an.get(
        "regime", str, metric.regime, lambda v: v in ("flat", "hyperbolic"), "regime must be flat or hyperbolic"
    )
    if regime != metric.regime:
        an.fail(
            f"regime {regime!r} is inconsistent with the {metric.kind} metric, which is {metric.regime}", "regime"
        )
    if regime == "hyperbolic":
        c_check, c_msg = (lambda v: all(c > 2 for c in v)), "hyperbolic regime requires every c > 2"
    else:
        c_check, c_msg = (lambda v: all(c > 0 for c in v)), "flat regime requires every c > 0"
    analysis = AnalysisSpec(
        regime=regime,
        c_values=an.get("c", "floats", (), c_check, c_msg),
        geroch=an.get("geroch", bool, True),
        isoperimetric=an.get("isoperimetric", bool, True),
        evolution=an.get("evolution", bool, False),
        floor_fit=an.get("floor_fit", bool, False),
        target_volume=an.get("target_volume", float, None, _positive, "target volume must be positive"),
        geroch_tol=an.get("geroch_tol", float, None, _positive, "tolerance must be positive"),
        evolution_tol=an.get("evolution_tol", float, 1e-3, _positive, "tolerance must be positive"),
        strict_margin=an.get("strict_margin", float, None, lambda v: v >= 0, "margin must be non-negative"),
    )

    out = root.sub("output")
    out.reject_unknown(("directory", "checkpoint_every"))
    output = OutputSpec(
        directory=out.get("directory", str, "out"),
        checkpoint_every=out.get("checkpoint_every", int, 0, lambda v: v >= 0, "must be non-negative"),
    )

    cfg = RunConfig(
        metric=metric,
        initial=init,
        flow_kind=fl.get("kind", str, "imcf", lambda v: v in ("imcf", "mcf"), "flow kind must be imcf or mcf"),
        t_end=fl.get("t_end", float, None, _positive, "t_end must be positive"),
        record_every=fl.get("record_every", float, 0.1, _positive, "record_every must be positive"),
        iota_min=mon.get("iota_min", float, 0.1, lambda v: 0 < v < 1, "iota_min must lie in (0, 1)"),
        b_max=mon.get("b_max", float, 50.0, _positive, "b_max must be positive"),
        cfl_safety=st.get("cfl_safety", float, 0.5, lambda v: 0 < v <= 1, "cfl_safety must lie in (0, 1]"),
        dt_max=st.get("dt_max", float, 1e-3, _positive, "dt_max must be positive"),
        analysis=analysis,
        output=output,
        source=source,
    )
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidConfig(f"cannot read {path}: {exc.strerror or exc}", "config") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise InvalidConfig(f"{path}: YAML syntax error{where}: {getattr(exc, 'problem', exc)}", "config") from exc
    return parse_config(data, _line_map(text), source=str(path))
