"""Model ambient metrics on a Cartesian chart of R^3.

Every model metric here is rotationally symmetric about a chart origin
``o`` and is stored in Cartesian components as

    g = a(r) * P + b(r) * (I - P),      P = x_hat x_hat^T,  r = |x - o|,

so geodesic-polar and areal-polar charts are realized without the
coordinate singularities of (r, theta, phi).  Polar components can be
recovered with :func:`polar_components`.  Christoffel symbols come from
analytic derivatives of ``a`` and ``b``; Ricci curvature from the two
sectional curvatures of the warped product.

User metrics of the ``conformal`` kind multiply a model metric by a
positive factor ``u(x)``; their derivatives are taken by central
differences unless the factor is a constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .errors import DomainError, InvalidConfig

KINDS = ("euclidean", "schwarzschild", "hyperbolic-polar", "ads-schwarzschild", "conformal")
FLAT_KINDS = ("euclidean", "schwarzschild")
HYPERBOLIC_KINDS = ("hyperbolic-polar", "ads-schwarzschild")

FD_RELATIVE_STEP = 1e-4


@dataclass(frozen=True)
class MetricSpec:
    """Declarative description of an ambient metric.

    ``factor`` and ``base`` only apply to the ``conformal`` kind: the
    metric is ``factor(x) * base``.  ``decay`` is free-form metadata about
    the asymptotics of a user factor; it is recorded, not enforced.
    """

    kind: str
    mass: float = 0.0
    origin: tuple = (0.0, 0.0, 0.0)
    factor: Union[float, Callable, None] = None
    base: Optional["MetricSpec"] = None
    decay: Optional[dict] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConfig(f"unknown metric kind {self.kind!r}; expected one of {KINDS}", "metric.kind")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        if len(self.origin) != 3:
            raise InvalidConfig("origin must have three components", "metric.origin")
        if self.kind == "schwarzschild" and not self.mass > 0:
            raise InvalidConfig(f"schwarzschild mass must be positive, got {self.mass}", "metric.mass")
        if self.kind == "ads-schwarzschild" and not self.mass >= 0:
            raise InvalidConfig(f"ads-schwarzschild mass must be non-negative, got {self.mass}", "metric.mass")
        if self.kind == "conformal":
            if self.factor is None:
                raise InvalidConfig("conformal metric needs a factor", "metric.factor")
            if not callable(self.factor) and not float(self.factor) > 0:
                raise InvalidConfig(f"conformal factor must be positive, got {self.factor}", "metric.factor")
            if self.base is not None and self.base.kind == "conformal":
                raise InvalidConfig("conformal base must be a model metric", "metric.base")

    @property
    def chart(self):
        kind = self.base_kind
        if kind == "hyperbolic-polar":
            return "geodesic-polar"
        if kind == "ads-schwarzschild":
            return "areal-polar"
        return "cartesian"

    @property
    def base_kind(self):
        if self.kind == "conformal":
            return self.base.kind if self.base is not None else "euclidean"
        return self.kind

    @property
    def regime(self):
        """``flat`` or ``hyperbolic``: which model the metric is asymptotic to."""
        if self.kind == "conformal" and self.decay and "regime" in self.decay:
            return self.decay["regime"]
        return "hyperbolic" if self.base_kind in HYPERBOLIC_KINDS else "flat"

    def scaled(self, lam):
        """Spec for ``lam**2`` times this metric in the same chart."""
        if self.kind == "conformal":
            if callable(self.factor):
                f = self.factor
                return MetricSpec("conformal", factor=lambda x: lam**2 * f(x), base=self.base, decay=self.decay)
            return MetricSpec("conformal", factor=lam**2 * float(self.factor), base=self.base, decay=self.decay)
        return MetricSpec("conformal", factor=float(lam) ** 2, base=self, decay={"regime": self.regime})


class MetricValue(NamedTuple):
    g: np.ndarray
    g_inv: np.ndarray
    christoffel: np.ndarray  # christoffel[..., k, i, j] = Gamma^k_ij


class CurvatureValue(NamedTuple):
    ricci: np.ndarray
    scalar: np.ndarray


# ---------------------------------------------------------------------------
# radial profiles


class _Profile:
    """Coefficients a(r), b(r) and sectional curvatures of a model metric."""

    r_min = 0.0  # metric defined for r > r_min (euclidean: everywhere)
    inner_radius = 0.0  # regions start here (horizon for black holes)
    inner_sqrt_singular = False

    def a(self, r):
        raise NotImplementedError

    def b(self, r):
        raise NotImplementedError

    def da(self, r):
        raise NotImplementedError

    def db(self, r):
        raise NotImplementedError

    def sectional(self, r):
        """Curvature of radial planes and of tangential planes."""
        raise NotImplementedError


class _Euclidean(_Profile):
    r_min = -1.0

    def a(self, r):
        return np.ones_like(r)

    b = a

    def da(self, r):
        return np.zeros_like(r)

    db = da

    def sectional(self, r):
        return np.zeros_like(r), np.zeros_like(r)


class _Schwarzschild(_Profile):
    """Isotropic Schwarzschild, ``(1 + m/2r)^4 delta``."""

    def __init__(self, m):
        self.m = m
        self.inner_radius = m / 2.0

    def a(self, r):
        return (1.0 + self.m / (2.0 * r)) ** 4

    b = a

    def da(self, r):
        psi = 1.0 + self.m / (2.0 * r)
        return -2.0 * self.m * psi**3 / r**2

    db = da

    def areal_radius(self, r):
        return r * (1.0 + self.m / (2.0 * r)) ** 2

    def sectional(self, r):
        R3 = self.areal_radius(r) ** 3
        return -self.m / R3, 2.0 * self.m / R3


class _Hyperbolic(_Profile):
    """``dr^2 + sinh(r)^2 g_S2`` in geodesic polar form."""

    _SMALL = 1e-2
    r_min = -1.0  # smooth through the origin in Cartesian form

    def a(self, r):
        return np.ones_like(r)

    def da(self, r):
        return np.zeros_like(r)

    def b(self, r):
        r = np.asarray(r, dtype=float)
        small = np.abs(r) < self._SMALL
        rs = np.where(small, 1.0, r)
        exact = (np.sinh(rs) / rs) ** 2
        r2 = r * r
        series = 1.0 + r2 / 3.0 + 2.0 * r2**2 / 45.0 + r2**3 / 315.0
        return np.where(small, series, exact)

    def db(self, r):
        r = np.asarray(r, dtype=float)
        small = np.abs(r) < self._SMALL
        rs = np.where(small, 1.0, r)
        exact = 2.0 * np.sinh(rs) * (rs * np.cosh(rs) - np.sinh(rs)) / rs**3
        series = 2.0 * r / 3.0 + 8.0 * r**3 / 45.0 + 6.0 * r**5 / 315.0
        return np.where(small, series, exact)

    def sectional(self, r):
        return -np.ones_like(r), -np.ones_like(r)


class _AdSSchwarzschild(_Profile):
    """``dr^2 / (1 + r^2 - 2m/r) + r^2 g_S2`` in areal polar form."""

    inner_sqrt_singular = True

    def __init__(self, m):
        self.m = m
        if m > 0:
            # horizon: r^3 + r - 2m = 0 (single real root)
            roots = np.roots([1.0, 0.0, 1.0, -2.0 * m])
            self.r_min = float(max(z.real for z in roots if abs(z.imag) < 1e-12))
        else:
            self.r_min = -1.0
            self.inner_sqrt_singular = False
        self.inner_radius = max(self.r_min, 0.0)

    def _F(self, r):
        return 1.0 + r * r - 2.0 * self.m / r if self.m > 0 else 1.0 + r * r

    def a(self, r):
        return 1.0 / self._F(r)

    def da(self, r):
        dF = 2.0 * r + 2.0 * self.m / r**2
        return -dF / self._F(r) ** 2

    def b(self, r):
        return np.ones_like(r)

    def db(self, r):
        return np.zeros_like(r)

    def sectional(self, r):
        q = self.m / r**3 if self.m > 0 else np.zeros_like(r)
        return -1.0 - q, -1.0 + 2.0 * q


def _profile_for(kind, mass):
    if kind == "euclidean":
        return _Euclidean()
    if kind == "schwarzschild":
        return _Schwarzschild(mass)
    if kind == "hyperbolic-polar":
        return _Hyperbolic()
    if kind == "ads-schwarzschild":
        return _AdSSchwarzschild(mass)
    raise InvalidConfig(f"no model profile for kind {kind!r}", "metric.kind")


# ---------------------------------------------------------------------------
# metric fields


@dataclass(frozen=True)
class MetricField:
    """An evaluable metric.

    Construct with :func:`make_metric`.  All methods accept points with
    shape ``(..., 3)`` and broadcast over the leading dimensions.
    """

    spec: MetricSpec
    derivative_mode: str = "closed-form"
    fd_step: float = FD_RELATIVE_STEP
    _profile: _Profile = field(default=None, repr=False, compare=False)
    _scale: float = field(default=1.0, repr=False, compare=False)

    @property
    def origin(self):
        spec = self.spec
        if spec.kind == "conformal" and spec.base is not None:
            spec = spec.base
        return np.asarray(spec.origin)

    @property
    def regime(self):
        return self.spec.regime

    @property
    def is_euclidean(self):
        return self.spec.base_kind == "euclidean" and self.spec.kind == "euclidean"

    @property
    def inner_radius(self):
        """Radius about the origin of an excised inner boundary (0 if none)."""
        return self._profile.inner_radius

    # -- domain -------------------------------------------------------------

    def check_domain(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 3:
            raise DomainError(f"chart points need 3 components, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DomainError("chart point is not finite")
        rmin = self._profile.r_min
        if rmin >= 0:
            r = np.linalg.norm(x - self.origin, axis=-1)
            if np.any(r <= rmin):
                raise DomainError(
                    f"point at distance {float(np.min(r)):.6g} from the chart origin; "
                    f"the {self.spec.kind} chart requires r > {rmin:.6g}"
                )
        return x

    # -- model pieces -------------------------------------------------------

    def _radial(self, x):
        d = x - self.origin
        r = np.linalg.norm(d, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        xh = d / safe[..., None]
        xh = np.where((r > 0)[..., None], xh, 0.0)
        return r, xh

    def _model_g(self, x):
        r, xh = self._radial(x)
        p = self._profile
        a, b = p.a(r), p.b(r)
        P = xh[..., :, None] * xh[..., None, :]
        eye = np.eye(3)
        g = b[..., None, None] * eye + (a - b)[..., None, None] * P
        g_inv = (1.0 / b)[..., None, None] * eye + (1.0 / a - 1.0 / b)[..., None, None] * P
        return g, g_inv, r, xh, a, b

    def _model_dg(self, r, xh, a, b):
        """``dg[..., k, i, j] = d_k g_ij`` for the model profile."""
        p = self._profile
        da, db = p.da(r), p.db(r)
        safe = np.where(r > 0, r, 1.0)
        q = np.where(r > 0, (a - b) / safe, 0.0)
        eye = np.eye(3)
        xk_dij = np.einsum("...k,ij->...kij", xh, eye)
        xxx = np.einsum("...k,...i,...j->...kij", xh, xh, xh)
        dik_xj = np.einsum("ik,...j->...kij", eye, xh)
        djk_xi = np.einsum("jk,...i->...kij", eye, xh)
        return (
            db[..., None, None, None] * xk_dij
            + (da - db)[..., None, None, None] * xxx
            + q[..., None, None, None] * (dik_xj + djk_xi - 2.0 * xxx)
        )

    def _factor(self, x):
        f = self.spec.factor
        if self.spec.kind != "conformal":
            return None
        if callable(f):
            return np.asarray(f(x), dtype=float)
        return np.full(x.shape[:-1], float(f))

    # -- public evaluation --------------------------------------------------

    def g(self, x):
        """Metric components only."""
        x = self.check_domain(x)
        g = self._model_g(x)[0]
        u = self._factor(x)
        if u is not None:
            g = u[..., None, None] * g
        return g

    def sqrt_det(self, x):
        """Riemannian volume density ``sqrt(det g)`` in chart coordinates."""
        x = self.check_domain(x)
        r, _ = self._radial(x)
        p = self._profile
        dens = np.sqrt(p.a(r)) * p.b(r)
        u = self._factor(x)
        if u is not None:
            dens = dens * u**1.5
        return dens

    def evaluate(self, x):
        x = self.check_domain(x)
        if self.derivative_mode == "finite-difference":
            g, g_inv = self._g_and_inv(x)
            return MetricValue(g, g_inv, self._fd_christoffel(x, g_inv))
        g, g_inv, r, xh, a, b = self._model_g(x)
        if self.is_euclidean:
            return MetricValue(g, g_inv, np.zeros(x.shape[:-1] + (3, 3, 3)))
        dg = self._model_dg(r, xh, a, b)
        gamma = _christoffel_from_dg(g_inv, dg)
        u = self._factor(x)
        if u is not None:  # constant factor: christoffels unchanged
            g = u[..., None, None] * g
            g_inv = g_inv / u[..., None, None]
        return MetricValue(g, g_inv, gamma)

    def local(self, x):
        """Pointwise metric operations at ``x`` without forming full tensors."""
        x = self.check_domain(x)
        if self.derivative_mode == "finite-difference":
            return _MatrixLocal(*self.evaluate(x))
        if self.is_euclidean:
            return _RadialLocal(None, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, flat=True)
        r, xh = self._radial(x)
        p = self._profile
        u = self._factor(x)
        scale = 1.0 if u is None else u
        a, b = p.a(r), p.b(r)
        safe = np.where(r > 0, r, 1.0)
        q = np.where(r > 0, (a - b) / safe, 0.0)
        return _RadialLocal(xh, a, b, p.da(r), p.db(r), q, scale)

    def curvature(self, x):
        x = self.check_domain(x)
        if self.derivative_mode == "finite-difference":
            return self._fd_curvature(x)
        r, xh = self._radial(x)
        p = self._profile
        k_rad, k_tan = p.sectional(r)
        lam_rad = 2.0 * k_rad
        lam_tan = k_rad + k_tan
        a, b = p.a(r), p.b(r)
        P = xh[..., :, None] * xh[..., None, :]
        ric = (lam_rad * a)[..., None, None] * P + (lam_tan * b)[..., None, None] * (np.eye(3) - P)
        scalar = lam_rad + 2.0 * lam_tan
        u = self._factor(x)
        if u is not None:  # constant factor: Ricci unchanged, scalar scales
            scalar = scalar / u
        return CurvatureValue(ric, np.asarray(scalar))

    # -- finite differences -------------------------------------------------

    def _g_and_inv(self, x):
        g = self.g(x)
        return g, np.linalg.inv(g)

    def _steps(self, x):
        r = np.linalg.norm(x - self.origin, axis=-1)
        return self.fd_step * np.maximum(r, 1.0)

    def _fd_dg(self, x):
        h = self._steps(x)
        dg = np.empty(x.shape[:-1] + (3, 3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1.0
            step = h[..., None] * e
            dg[..., k, :, :] = (self.g(x + step) - self.g(x - step)) / (2.0 * h[..., None, None])
        return dg

    def _fd_christoffel(self, x, g_inv):
        return _christoffel_from_dg(g_inv, self._fd_dg(x))

    def _christoffel_any(self, x):
        if self.derivative_mode == "finite-difference":
            g_inv = np.linalg.inv(self.g(x))
            return self._fd_christoffel(x, g_inv)
        return self.evaluate(x).christoffel

    def _fd_curvature(self, x):
        h = self._steps(x)
        gam = self._christoffel_any(x)
        dgam = np.empty(x.shape[:-1] + (3, 3, 3, 3))  # [..., m, k, i, j] = d_m Gamma^k_ij
        for m in range(3):
            e = np.zeros(3)
            e[m] = 1.0
            step = h[..., None] * e
            dgam[..., m, :, :, :] = (self._christoffel_any(x + step) - self._christoffel_any(x - step)) / (
                2.0 * h[..., None, None, None]
            )
        # R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik
        ric = (
            np.einsum("...kkij->...ij", dgam)
            - np.einsum("...jkik->...ij", dgam)
            + np.einsum("...kkl,...lij->...ij", gam, gam)
            - np.einsum("...kjl,...lik->...ij", gam, gam)
        )
        ric = 0.5 * (ric + np.swapaxes(ric, -1, -2))
        g_inv = np.linalg.inv(self.g(x))
        scalar = np.einsum("...ij,...ij->...", g_inv, ric)
        return CurvatureValue(ric, scalar)


def _dot3(u, v):
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2]


class _RadialLocal:
    """Closed-form metric operations for ``scale * (a P + b (I - P))``."""

    def __init__(self, xh, a, b, da, db, q, scale, flat=False):
        self.xh, self.a, self.b, self.da, self.db, self.q = xh, a, b, da, db, q
        self.scale = scale
        self.flat = flat

    def dot(self, u, v):
        if self.flat:
            return _dot3(u, v) * self.scale
        xu, xv, uv = _dot3(self.xh, u), _dot3(self.xh, v), _dot3(u, v)
        return self.scale * (self.b * uv + (self.a - self.b) * xu * xv)

    def lower(self, v):
        if self.flat:
            return self.scale * v
        xv = _dot3(self.xh, v)
        s = self.scale
        return (s * self.b)[..., None] * v + (s * (self.a - self.b) * xv)[..., None] * self.xh

    def raise_(self, w):
        if self.flat:
            return w / self.scale
        xw = _dot3(self.xh, w)
        s = self.scale
        return (1.0 / (s * self.b))[..., None] * w + ((1.0 / self.a - 1.0 / self.b) * xw / s)[..., None] * self.xh

    def _dg(self, u, v):
        """Vector ``k -> d_k g(u, v)`` (unscaled)."""
        xh = self.xh
        xu, xv, uv = _dot3(xh, u), _dot3(xh, v), _dot3(u, v)
        coef = self.db * uv + (self.da - self.db - 2.0 * self.q) * xu * xv
        return coef[..., None] * xh + self.q[..., None] * (u * xv[..., None] + v * xu[..., None])

    def _coef(self, xu, xv, uv):
        return self.db * uv + (self.da - self.db - 2.0 * self.q) * xu * xv

    def gamma_lower(self, w, u, v):
        """``g(w, Gamma(u, v))``."""
        if self.flat:
            return np.zeros(np.broadcast_shapes(w.shape, u.shape, v.shape)[:-1])
        xh = self.xh
        xu, xv, xw = _dot3(xh, u), _dot3(xh, v), _dot3(xh, w)
        uv, uw, vw = _dot3(u, v), _dot3(u, w), _dot3(v, w)
        val = self._coef(xw, xv, vw) * xu + self._coef(xw, xu, uw) * xv - self._coef(xu, xv, uv) * xw
        return 0.5 * self.scale * (val + 2.0 * self.q * uv * xw)

    def gamma(self, u, v):
        """Vector ``Gamma^k(u, v)``."""
        if self.flat:
            return np.zeros(np.broadcast_shapes(u.shape, v.shape))
        dot = _dot3
        # lowered components: Gamma_l(u, v) = 1/2 (u.d g(e_l, v) + v.d g(e_l, u) - d_l g(u, v))
        low = np.empty(np.broadcast_shapes(u.shape, v.shape))
        for l in range(3):
            e = np.zeros(3)
            e[l] = 1.0
            low[..., l] = 0.5 * (dot(u, self._dg(e, v)) + dot(v, self._dg(e, u)))
        low -= 0.5 * self._dg(u, v)
        return self.raise_(self.scale * low)


class _MatrixLocal:
    """Metric operations backed by explicit component arrays."""

    flat = False

    def __init__(self, g, g_inv, christoffel):
        self.g, self.g_inv, self.christoffel = g, g_inv, christoffel

    def dot(self, u, v):
        return np.einsum("...i,...ij,...j->...", u, self.g, v)

    def lower(self, v):
        return np.einsum("...ij,...j->...i", self.g, v)

    def raise_(self, w):
        return np.einsum("...ij,...j->...i", self.g_inv, w)

    def gamma(self, u, v):
        return np.einsum("...kij,...i,...j->...k", self.christoffel, u, v)

    def gamma_lower(self, w, u, v):
        return self.dot(w, self.gamma(u, v))


def _christoffel_from_dg(g_inv, dg):
    # Gamma^l_ij = 1/2 g^lm (d_i g_mj + d_j g_mi - d_m g_ij)
    t = np.swapaxes(dg, -3, -2)  # t[..., m, i, j] = d_i g_mj
    lower = 0.5 * (t + np.swapaxes(t, -1, -2) - dg)
    return np.einsum("...lm,...mij->...lij", g_inv, lower)


def make_metric(spec, derivative_mode=None, fd_step=FD_RELATIVE_STEP, probe=True):
    """Instantiate an evaluable metric from a :class:`MetricSpec`.

    Model kinds and constant conformal factors get closed-form derivatives;
    a callable conformal factor switches to central finite differences.
    Passing ``derivative_mode="finite-difference"`` forces differences for
    any kind, which is how the closed forms are cross-checked.
    """
    if not isinstance(spec, MetricSpec):
        raise InvalidConfig(f"expected a MetricSpec, got {type(spec).__name__}", "metric")
    base = spec.base if spec.kind == "conformal" and spec.base is not None else spec
    base_kind = "euclidean" if spec.kind == "conformal" and spec.base is None else base.kind
    profile = _profile_for(base_kind, base.mass)
    if derivative_mode is None:
        derivative_mode = "finite-difference" if callable(spec.factor) else "closed-form"
    if derivative_mode not in ("closed-form", "finite-difference"):
        raise InvalidConfig(f"unknown derivative mode {derivative_mode!r}", "metric.derivative_mode")
    if not fd_step > 0:
        raise InvalidConfig(f"finite-difference step must be positive, got {fd_step}", "metric.fd_step")
    fieldobj = MetricField(spec, derivative_mode, fd_step, profile)
    if probe and spec.kind == "conformal" and callable(spec.factor):
        _probe_factor(fieldobj)
    return fieldobj


def _probe_factor(fieldobj):
    rng = np.random.default_rng(0)
    pts = fieldobj.origin + rng.normal(size=(64, 3)) * np.array([[1.0], [10.0]]).repeat(32, axis=0)
    r = np.linalg.norm(pts - fieldobj.origin, axis=-1)
    pts = pts[r > max(fieldobj._profile.r_min, 0.0) + 1e-6]
    try:
        u = np.asarray(fieldobj.spec.factor(pts), dtype=float)
    except Exception as exc:  # noqa: BLE001 - user callback
        raise InvalidConfig(f"conformal factor could not be evaluated: {exc}", "metric.factor") from exc
    if u.shape != pts.shape[:-1]:
        raise InvalidConfig(
            f"conformal factor must map (..., 3) points to (...) values, got shape {u.shape}", "metric.factor"
        )
    if not np.all(np.isfinite(u)) or np.any(u <= 0):
        raise InvalidConfig("conformal factor must be finite and strictly positive", "metric.factor")


def metric_at(fieldobj, x):
    """Metric, inverse and Christoffel symbols at chart point(s) ``x``."""
    return fieldobj.evaluate(np.asarray(x, dtype=float))


def curvature_at(fieldobj, x):
    """Ricci tensor (chart components) and scalar curvature at ``x``."""
    return fieldobj.curvature(np.asarray(x, dtype=float))


def polar_components(fieldobj, x):
    """Metric components in (r, theta, phi) about the chart origin at ``x``."""
    x = np.asarray(x, dtype=float)
    d = x - fieldobj.origin
    r = np.linalg.norm(d)
    th = math.acos(d[2] / r)
    ph = math.atan2(d[1], d[0])
    st, ct, sp, cp = math.sin(th), math.cos(th), math.sin(ph), math.cos(ph)
    J = np.array(
        [
            [st * cp, r * ct * cp, -r * st * sp],
            [st * sp, r * ct * sp, r * st * cp],
            [ct, -r * st, 0.0],
        ]
    )
    return J.T @ fieldobj.g(x) @ J
