"""Star-shaped surfaces as radial graphs and their extrinsic geometry.

A surface is stored as ``X(omega) = p + f(omega) * omega`` over a
:class:`~imcflab.sphere.SphereGrid`, where ``omega`` is the coordinate
unit vector and ``p`` the center.  The normal is oriented away from ``p``
so that round spheres have positive mean curvature.
"""

from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field as dc_field
from typing import Optional

import numpy as np

from .ambient import MetricField
from .errors import DegenerateSurface, DomainError
from .sphere import SphereGrid

DEFAULT_RADIAL_NODES = 32


@dataclass(frozen=True, eq=False)
class RadialSurface:
    """Closed surface given by positive radii over a sphere grid."""

    center: np.ndarray
    radii: np.ndarray
    grid: SphereGrid

    def __post_init__(self):
        center = np.array(self.center, dtype=float).reshape(3)
        radii = np.array(self.radii, dtype=float)
        if radii.shape != self.grid.shape:
            raise ValueError(f"radii shape {radii.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(radii)) or np.any(radii <= 0):
            raise DomainError("radial surface needs finite, strictly positive radii")
        center.setflags(write=False)
        radii.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radii", radii)

    def points(self):
        return self.center + self.radii[..., None] * self.grid.omega

    def with_radii(self, radii):
        return RadialSurface(self.center, radii, self.grid)

    def scaled(self, lam, about=(0.0, 0.0, 0.0)):
        """Image under the chart dilation ``x -> about + lam (x - about)``."""
        about = np.asarray(about, dtype=float)
        return RadialSurface(about + lam * (self.center - about), lam * self.radii, self.grid)


def build_round_sphere(p, rho, grid, field: Optional[MetricField] = None):
    """Coordinate sphere of radius ``rho`` about ``p``.

    When ``field`` is given the sphere is checked against its chart domain.
    """
    if not rho > 0:
        raise DomainError(f"sphere radius must be positive, got {rho}")
    s = RadialSurface(p, np.full(grid.shape, float(rho)), grid)
    if field is not None:
        field.check_domain(s.points())
    return s


def surface_from_function(center, grid, func):
    """Radial surface with ``f = func(theta, phi)`` at the grid nodes."""
    T, P = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    return RadialSurface(center, func(T, P), grid)


def ellipsoid_radius(omega, axes):
    a, b, c = axes
    return 1.0 / np.sqrt((omega[..., 0] / a) ** 2 + (omega[..., 1] / b) ** 2 + (omega[..., 2] / c) ** 2)


def build_ellipsoid(center, axes, grid):
    """Coordinate ellipsoid with semi-axes ``axes`` centered at ``center``."""
    return RadialSurface(center, ellipsoid_radius(grid.omega, axes), grid)


def perturbed_sphere(center, rho, grid, degree, amplitude, seed=0):
    """Sphere with a random band of degree-``degree`` harmonics added.

    The perturbation is scaled so that ``max |f - rho| = amplitude * rho``.
    """
    if degree > grid.lmax:
        raise ValueError(f"degree {degree} exceeds grid resolution (lmax={grid.lmax})")
    rng = np.random.default_rng(seed)
    from .sphere import normalized_legendre

    P, _, _ = normalized_legendre(degree, min(degree, grid.mmax), grid.mu)
    mode = np.zeros(grid.shape)
    for m in range(min(degree, grid.mmax) + 1):
        c, s = rng.normal(size=2)
        ang = m * grid.phi
        mode += np.outer(P[:, degree, m], c * np.cos(ang) + (s * np.sin(ang) if m else 0.0))
    mode /= np.max(np.abs(mode))
    return RadialSurface(center, rho * (1.0 + amplitude * mode), grid)


@dataclass(frozen=True, eq=False)
class SurfaceGeometry:
    """Per-node extrinsic geometry of a radial surface plus aggregates.

    Tangent-indexed arrays use ``t`` for colatitude and ``p`` for
    longitude.  ``area_element`` is the induced area density relative to
    the round measure carried by ``grid.weights``.
    """

    surface: RadialSurface
    field: MetricField = dc_field(repr=False)
    f: np.ndarray
    points: np.ndarray
    X_t: np.ndarray
    X_p: np.ndarray
    X_tt: np.ndarray
    X_tp: np.ndarray
    X_pp: np.ndarray
    local: object = dc_field(repr=False)  # ambient metric operations at the nodes
    induced: tuple  # (g_tt, g_tp, g_pp)
    induced_det: np.ndarray
    normal: np.ndarray  # nu^i, ambient-unit
    normal_lower: np.ndarray  # nu_i
    second_form: tuple  # (h_tt, h_tp, h_pp)
    H: np.ndarray
    bnorm: np.ndarray
    omega_norm: np.ndarray  # |omega|_g, length of the coordinate radial vector
    margin: np.ndarray  # g(unit radial, nu)
    support: np.ndarray
    radial_factor: np.ndarray  # radial coordinate speed per unit normal speed
    area_element: np.ndarray
    area: float
    h_min: float
    h_max: float
    bnorm_max: float
    min_margin: float

    @property
    def grid(self):
        return self.surface.grid

    @property
    def bnorm_sqrt_area(self):
        return self.bnorm_max * np.sqrt(self.area)

    def integrate(self, values):
        """Surface integral of a nodal field against the induced area."""
        return float(np.sum(self.grid.weights * self.area_element * values))

    def induced_inverse(self):
        gtt, gtp, gpp = self.induced
        det = self.induced_det
        return gpp / det, -gtp / det, gtt / det


def _dot(u, v):
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2]


def _cross(u, v):
    return np.stack(
        [
            u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1],
            u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2],
            u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0],
        ],
        axis=-1,
    )


def geometry(s: RadialSurface, field: MetricField) -> SurfaceGeometry:
    """Compute induced metric, normal, second fundamental form and aggregates."""
    grid = s.grid
    f, ft, fp, ftt, ftp, fpp = grid.derivatives(s.radii)
    om, om_t, om_p = grid.omega, grid.omega_t, grid.omega_p
    F, Ft, Fp = f[..., None], ft[..., None], fp[..., None]
    X = s.center + F * om
    Xt = Ft * om + F * om_t
    Xp = Fp * om + F * om_p
    Xtt = ftt[..., None] * om + 2.0 * Ft * om_t - F * om
    Xtp = ftp[..., None] * om + Ft * om_p + Fp * om_t + F * grid.omega_tp
    Xpp = fpp[..., None] * om + 2.0 * Fp * om_p + F * grid.omega_pp

    loc = field.local(X)
    gtt, gtp, gpp = loc.dot(Xt, Xt), loc.dot(Xt, Xp), loc.dot(Xp, Xp)
    det = gtt * gpp - gtp * gtp
    if not np.all(det > 0):
        raise DegenerateSurface("induced metric is not positive definite at some node")

    N = _cross(Xt, Xp)
    radial_dot = _dot(om, N)
    N_up = loc.raise_(N)
    Nn = np.sqrt(_dot(N, N_up))
    nu_low = N / Nn[..., None]
    nu = N_up / Nn[..., None]

    def second(Xa, Xb, Xab):
        if loc.flat:
            return -_dot(nu_low, Xab)
        return -(_dot(nu_low, Xab) + loc.gamma_lower(nu, Xa, Xb))

    htt, htp, hpp = second(Xt, Xt, Xtt), second(Xt, Xp, Xtp), second(Xp, Xp, Xpp)
    itt, itp, ipp = gpp / det, -gtp / det, gtt / det
    H = itt * htt + 2.0 * itp * htp + ipp * hpp
    m11 = itt * htt + itp * htp
    m12 = itt * htp + itp * hpp
    m21 = itp * htt + ipp * htp
    m22 = itp * htp + ipp * hpp
    bnorm = np.sqrt(np.maximum(m11**2 + 2.0 * m12 * m21 + m22**2, 0.0))

    omega_norm = np.sqrt(loc.dot(om, om))
    margin = radial_dot / (Nn * omega_norm)
    support = margin * f * omega_norm
    with np.errstate(divide="ignore"):
        radial_factor = Nn / radial_dot
    area_element = np.sqrt(det) / grid.sin_theta
    area = float(np.sum(grid.weights * area_element))
    return SurfaceGeometry(
        surface=s,
        field=field,
        f=f,
        points=X,
        X_t=Xt,
        X_p=Xp,
        X_tt=Xtt,
        X_tp=Xtp,
        X_pp=Xpp,
        local=loc,
        induced=(gtt, gtp, gpp),
        induced_det=det,
        normal=nu,
        normal_lower=nu_low,
        second_form=(htt, htp, hpp),
        H=H,
        bnorm=bnorm,
        omega_norm=omega_norm,
        margin=margin,
        support=support,
        radial_factor=radial_factor,
        area_element=area_element,
        area=area,
        h_min=float(H.min()),
        h_max=float(H.max()),
        bnorm_max=float(bnorm.max()),
        min_margin=float(margin.min()),
    )


def area(geom: SurfaceGeometry) -> float:
    return geom.area


def _ray_start(center, omega, field):
    """Parameter where each ray from ``center`` enters the region's domain."""
    R = field.inner_radius
    if R <= 0:
        return np.zeros(omega.shape[:-1]), None
    d = center - field.origin
    wd = _dot(omega, d)
    disc = wd**2 - (d @ d - R * R)
    if d @ d < R * R:
        return -wd + np.sqrt(disc), None
    with np.errstate(invalid="ignore"):
        enter = np.where(disc > 0, -wd - np.sqrt(np.maximum(disc, 0.0)), np.inf)
    return np.zeros(omega.shape[:-1]), np.where(enter > 0, enter, np.inf)


def enclosed_volume(s: RadialSurface, field: MetricField, n_radial=DEFAULT_RADIAL_NODES) -> float:
    """Riemannian volume of ``{p + t omega : t0 <= t <= f(omega)}``.

    ``t0`` is zero unless the metric has an excised inner boundary (a
    black-hole horizon) around ``p``, in which case rays start on it.
    """
    grid = s.grid
    f = grid.project(s.radii)
    om = grid.omega
    t0, blocked = _ray_start(s.center, om, field)
    if blocked is not None and np.any(blocked < f):
        raise DomainError("enclosed region meets the excised inner boundary of the chart")
    if np.any(f <= t0):
        raise DomainError("surface lies inside the excised inner boundary of the chart")
    u, w = np.polynomial.legendre.leggauss(n_radial)
    u = 0.5 * (u + 1.0)
    w = 0.5 * w
    span = (f - t0)[..., None]
    if field._profile.inner_sqrt_singular and np.any(t0 > 0):
        # t = t0 + span * u^2 removes the 1/sqrt singularity at a horizon
        t = t0[..., None] + span * u**2
        jac = 2.0 * span * u
    else:
        t = t0[..., None] + span * u
        jac = span * np.ones_like(u)
    pts = s.center + t[..., None] * om[..., None, :]
    dens = field.sqrt_det(pts) * t**2 * jac
    per_ray = np.sum(dens * w, axis=-1)
    return grid.integrate(per_ray)


def hawking_mass(geom: SurfaceGeometry, regime="flat") -> float:
    """Hawking mass; the ``hyperbolic`` regime uses ``H^2 - 4``."""
    A = geom.area
    if regime == "flat":
        willmore = geom.integrate(geom.H**2)
    elif regime == "hyperbolic":
        willmore = geom.integrate(geom.H**2 - 4.0)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return float(np.sqrt(A) / (16.0 * np.pi) ** 1.5 * (16.0 * np.pi - willmore))


def eccentricity(s: RadialSurface) -> float:
    """Ratio of outer to inner chart radius about the center."""
    return float(s.radii.max() / s.radii.min())


def ln_sinh_eccentricity(s: RadialSurface) -> float:
    """``ln sinh(r_out) / ln sinh(r_in)`` for geodesic radii about the center.

    Only defined when the inner radius exceeds 1.
    """
    r_in, r_out = float(s.radii.min()), float(s.radii.max())
    if r_in <= 1.0:
        raise DomainError(f"(ln sinh)-eccentricity needs inner radius > 1, got {r_in:.6g}")
    return float(np.log(np.sinh(r_out)) / np.log(np.sinh(r_in)))


def star_margin(geom: SurfaceGeometry) -> float:
    """Minimum over nodes of ``g(unit radial from p, nu)``."""
    return geom.min_margin
