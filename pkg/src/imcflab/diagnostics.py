"""Per-sample diagnostics and trace-level checks.

Every check returns plain numbers plus a pass flag so that the CLI can
serialize them as ``{name, value, threshold, pass}`` records.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NonPositiveMeanCurvature
from .surface import SurfaceGeometry, enclosed_volume, geometry, hawking_mass

ISO_EUCLIDEAN = (36.0 * np.pi) ** (1.0 / 3.0)


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    area: float
    volume: float
    m_h: float
    m_h_star: float
    iso_ratio: float
    star_margin: float
    h_min: float
    h_max: float
    bnorm_max: float
    bnorm_sqrt_area: float
    holder_gap: float
    ac: tuple = ()  # ((c, A - c V), ...)

    def ac_value(self, c):
        for cc, v in self.ac:
            if cc == c:
                return v
        raise KeyError(f"A^c not recorded for c={c}")


def holder_chain_check(geom: SurfaceGeometry) -> float:
    """``(int H^2)^(1/3) (int 1/H)^(2/3) - A``, non-negative by Hoelder."""
    if geom.h_min <= 0:
        raise NonPositiveMeanCurvature(f"min H = {geom.h_min:.6g}; the Hoelder chain needs H > 0")
    w = geom.integrate(geom.H**2)
    inv = geom.integrate(1.0 / geom.H)
    return float(np.cbrt(w) * np.cbrt(inv) ** 2 - geom.area)


def compute_row(t, geom: SurfaceGeometry, c_values=(), volume=None) -> DiagnosticsRow:
    """Diagnostics of one surface.  ``volume`` is computed when not given."""
    if volume is None:
        volume = enclosed_volume(geom.surface, geom.field)
    A = geom.area
    m_h = hawking_mass(geom, "flat")
    m_star = hawking_mass(geom, "hyperbolic")
    gap = holder_chain_check(geom) if geom.h_min > 0 else float("nan")
    return DiagnosticsRow(
        t=float(t),
        area=A,
        volume=float(volume),
        m_h=m_h,
        m_h_star=m_star,
        iso_ratio=float(A / volume ** (2.0 / 3.0)) if volume > 0 else float("inf"),
        star_margin=geom.min_margin,
        h_min=geom.h_min,
        h_max=geom.h_max,
        bnorm_max=geom.bnorm_max,
        bnorm_sqrt_area=float(geom.bnorm_max * np.sqrt(A)),
        holder_gap=gap,
        ac=tuple((float(c), float(A - c * volume)) for c in c_values),
    )


class Check(NamedTuple):
    """One machine-readable check record."""

    name: str
    value: float
    threshold: float
    passed: bool

    def as_dict(self):
        return {"name": self.name, "value": self.value, "threshold": self.threshold, "pass": bool(self.passed)}


def _rows(trace):
    return [smp.row for smp in trace.samples]


def _mass_key(regime):
    if regime not in ("flat", "hyperbolic"):
        raise ValueError(f"unknown regime {regime!r}")
    return "m_h" if regime == "flat" else "m_h_star"


# ---------------------------------------------------------------------------
# monotonicity and inequalities


class GerochReport(NamedTuple):
    min_increment: float
    monotone: bool
    tolerance: float


def geroch_report(trace, regime="flat", tol=None) -> GerochReport:
    """Smallest consecutive change of the (regime) Hawking mass.

    The default tolerance is ``1e-5 sqrt(A_max)``.
    """
    rows = _rows(trace)
    if len(rows) < 2:
        raise ValueError("Geroch report needs at least two samples")
    key = _mass_key(regime)
    m = np.array([getattr(r, key) for r in rows])
    if tol is None:
        tol = 1e-5 * np.sqrt(max(r.area for r in rows))
    inc = float(np.min(np.diff(m)))
    return GerochReport(inc, inc >= -tol, float(tol))


class IsoperimetricReport(NamedTuple):
    max_ratio_excess: float
    all_strict: bool
    excess: np.ndarray


def isoperimetric_report(trace, regime="flat", profile=None, tol=1e-9) -> IsoperimetricReport:
    """Excess of each sample over the model isoperimetric bound.

    Flat: ``A / V^(2/3) - (36 pi)^(1/3)``.  Hyperbolic: ``A - I_hyp(V)``.
    Strictness means every excess is below ``-tol`` (scaled by the largest
    area in the hyperbolic regime), so roundoff on model spheres reads as
    equality.
    """
    rows = _rows(trace)
    if regime == "flat":
        ex = np.array([r.iso_ratio - ISO_EUCLIDEAN for r in rows])
    elif regime == "hyperbolic":
        if profile is None:
            from .sweepout import hyperbolic_isoperimetric_profile as profile
        ex = np.array([r.area - profile(r.volume) for r in rows])
    else:
        raise ValueError(f"unknown regime {regime!r}")
    mx = float(np.max(ex))
    if regime == "hyperbolic":
        tol = tol * max(r.area for r in rows)
    return IsoperimetricReport(mx, mx < -tol, ex)


def ratio_derivative_check(trace, regime="flat"):
    """Discrete form of ``(A^{3/2})' < k V'`` between consecutive samples.

    ``k`` is ``sqrt(36 pi)`` in the flat regime and
    ``(3/2) sqrt(16 pi + 4 A)`` (at the later sample) in the hyperbolic one.
    Returns the largest value of ``d(A^{3/2}) - k dV``.
    """
    rows = _rows(trace)
    A = np.array([r.area for r in rows])
    V = np.array([r.volume for r in rows])
    dA32 = np.diff(A**1.5)
    dV = np.diff(V)
    if regime == "flat":
        k = np.sqrt(36.0 * np.pi)
    else:
        k = 1.5 * np.sqrt(16.0 * np.pi + 4.0 * A[1:])
    return float(np.max(dA32 - k * dV))


def holder_report(trace):
    """Smallest Hoelder gap relative to area over the samples."""
    rows = _rows(trace)
    return float(min(r.holder_gap / r.area for r in rows))


def mean_curvature_floor_fit(trace) -> float:
    """Largest ``c`` with ``min H(s) >= c min(1, sqrt(s))`` over the samples.

    Samples at ``s = 0`` impose no constraint.  Any sample with
    ``min H <= 0`` forces ``c = 0``.
    """
    rows = _rows(trace)
    if abs(rows[0].t) > 1e-12:
        raise ValueError("floor fit needs a trace starting at s = 0")
    best = np.inf
    for r in rows:
        if r.h_min <= 0:
            return 0.0
        w = min(1.0, np.sqrt(r.t))
        if w > 0:
            best = min(best, r.h_min / w)
    return float(best) if np.isfinite(best) else float(rows[0].h_min)


# ---------------------------------------------------------------------------
# evolution equations


class EvolutionResiduals(NamedTuple):
    area_law: float
    metric_law: float
    h_law: float
    dt_sample: float


def _tangential(geom: SurfaceGeometry, V):
    """Tangential part ``W = W^a X_a`` of a chart velocity ``V``."""
    loc = geom.local
    vt, vp = loc.dot(V, geom.X_t), loc.dot(V, geom.X_p)
    itt, itp, ipp = geom.induced_inverse()
    wt = itt * vt + itp * vp
    wp = itp * vt + ipp * vp
    return wt, wp


def _cov_deriv(geom: SurfaceGeometry, W):
    """``D_a W = d_a W + Gamma(X_a, W)`` for a chart vector field on the surface."""
    grid = geom.grid
    dt = np.empty_like(W)
    dp = np.empty_like(W)
    for i in range(3):
        d = grid.derivatives(W[..., i])
        dt[..., i], dp[..., i] = d[1], d[2]
    loc = geom.local
    if not loc.flat:
        dt = dt + loc.gamma(geom.X_t, W)
        dp = dp + loc.gamma(geom.X_p, W)
    return dt, dp


def _laplacian(geom: SurfaceGeometry, u):
    """Laplace-Beltrami operator of the induced metric applied to ``u``."""
    grid = geom.grid
    _, ut, up, utt, utp, upp = grid.derivatives(u)
    loc = geom.local
    Xs = {"t": geom.X_t, "p": geom.X_p}
    second = {"tt": geom.X_tt, "tp": geom.X_tp, "pp": geom.X_pp}
    pairs = {"tt": ("t", "t"), "tp": ("t", "p"), "pp": ("p", "p")}
    itt, itp, ipp = geom.induced_inverse()
    grad = {}
    for ab, (a, b) in pairs.items():
        D = second[ab]
        if not loc.flat:
            D = D + loc.gamma(Xs[a], Xs[b])
        lt, lp = loc.dot(D, geom.X_t), loc.dot(D, geom.X_p)
        # tangential Christoffels of the induced metric
        ct = itt * lt + itp * lp
        cp = itp * lt + ipp * lp
        grad[ab] = ct * ut + cp * up
    hess_tt = utt - grad["tt"]
    hess_tp = utp - grad["tp"]
    hess_pp = upp - grad["pp"]
    return itt * hess_tt + 2.0 * itp * hess_tp + ipp * hess_pp


def _normal_speed(kind, geom):
    return 1.0 / geom.H if kind == "imcf" else -geom.H


def _ricci_normal(geom: SurfaceGeometry):
    if geom.local.flat:
        return np.zeros(geom.H.shape)
    ric = geom.field.curvature(geom.points).ricci
    nu = geom.normal
    return np.einsum("...i,...ij,...j->...", nu, ric, nu)


def evolution_consistency(trace) -> EvolutionResiduals:
    """Residuals of the evolution laws at interior samples.

    Time derivatives are centered differences between neighbouring
    samples (which must be equally spaced).  ``area_law`` checks
    ``dA/dt = A`` (IMCF) or ``dA/dt = -int H^2`` (MCF) relative to the
    area; ``metric_law`` checks ``d gamma_ab / dt = 2 psi h_ab + L_W gamma``
    relative to ``max |gamma|``; ``h_law`` checks the mean-curvature law
    ``dH/dt = -Lap psi - psi (|h|^2 + Ric(nu, nu)) + W(H)`` relative to
    ``max |H|``, where ``psi`` is the normal speed and ``W`` the tangential
    velocity of the radial parametrization.
    """
    samples = trace.samples
    if len(samples) < 3:
        raise ValueError("evolution consistency needs at least three samples")
    ts = np.array([s.t for s in samples])
    steps = np.diff(ts)
    if np.ptp(steps) > 1e-9 * steps.max():
        raise ValueError("evolution consistency needs equally spaced samples")
    h = float(steps.mean())
    field = trace.field
    geoms = [geometry(s.surface, field) for s in samples]
    res_a, res_g, res_h = 0.0, 0.0, 0.0
    for k in range(1, len(samples) - 1):
        prev, cur, nxt = geoms[k - 1], geoms[k], geoms[k + 1]
        psi = _normal_speed(trace.kind, cur)
        dA = (nxt.area - prev.area) / (2.0 * h)
        rhs_a = cur.area if trace.kind == "imcf" else -cur.integrate(cur.H**2)
        res_a = max(res_a, abs(dA - rhs_a) / cur.area)

        # chart velocity of the parametrization and its tangential part
        f_t = (nxt.f - prev.f) / (2.0 * h)
        V = f_t[..., None] * cur.grid.omega
        wt, wp = _tangential(cur, V)
        W = wt[..., None] * cur.X_t + wp[..., None] * cur.X_p
        DtW, DpW = _cov_deriv(cur, W)
        loc = cur.local
        lie = (
            2.0 * loc.dot(DtW, cur.X_t),
            loc.dot(DtW, cur.X_p) + loc.dot(cur.X_t, DpW),
            2.0 * loc.dot(DpW, cur.X_p),
        )
        scale = max(np.max(np.abs(g)) for g in cur.induced)
        for gp, gn, hh, lw in zip(prev.induced, nxt.induced, cur.second_form, lie):
            dg = (gn - gp) / (2.0 * h)
            res_g = max(res_g, float(np.max(np.abs(dg - 2.0 * psi * hh - lw))) / scale)

        dH = (nxt.H - prev.H) / (2.0 * h)
        _, Ht, Hp, _, _, _ = cur.grid.derivatives(cur.H)
        rhs_h = -_laplacian(cur, psi) - psi * (cur.bnorm**2 + _ricci_normal(cur)) + wt * Ht + wp * Hp
        res_h = max(res_h, float(np.max(np.abs(dH - rhs_h))) / float(np.max(np.abs(cur.H))))
    return EvolutionResiduals(float(res_a), float(res_g), float(res_h), h)
