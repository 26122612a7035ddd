"""Gauss-Legendre x uniform-longitude grid on the unit sphere.

Functions on the grid are handled spectrally: a real field is split into
Fourier modes in longitude, each mode is projected onto normalized
associated Legendre functions with Gauss quadrature, and derivatives are
taken analytically in that basis.  Latitude nodes are interior Gauss
nodes, so the poles never appear on the grid.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidConfig


def normalized_legendre(lmax, mmax, mu):
    """Associated Legendre functions normalized on [-1, 1].

    Returns ``(P, dP, d2P)`` with shape ``(len(mu), lmax + 1, mmax + 1)``,
    where ``P[k, l, m]`` satisfies ``int P_lm^2 dmu = 1`` and ``dP``/``d2P``
    are first and second derivatives with respect to the colatitude
    ``theta = arccos(mu)``.  Entries with ``l < m`` are zero.
    """
    mu = np.asarray(mu, dtype=float)
    sin = np.sqrt(1.0 - mu * mu)
    nk = mu.size
    P = np.zeros((nk, lmax + 1, mmax + 1))
    pmm = np.full(nk, np.sqrt(0.5))
    for m in range(mmax + 1):
        if m > 0:
            pmm = pmm * np.sqrt((2 * m + 1) / (2 * m)) * sin
        P[:, m, m] = pmm
        if m + 1 <= lmax:
            P[:, m + 1, m] = np.sqrt(2 * m + 3) * mu * pmm
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1) ** 2 - m * m) * (2 * l + 1) / ((2 * l - 3) * (l * l - m * m)))
            P[:, l, m] = a * mu * P[:, l - 1, m] - b * P[:, l - 2, m]

    ls = np.arange(lmax + 1)[:, None]
    ms = np.arange(mmax + 1)[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.sqrt(np.where(ls > ms, (2 * ls + 1) * (ls * ls - ms * ms) / (2 * ls - 1), 0.0))
    P_lm1 = np.zeros_like(P)
    P_lm1[:, 1:, :] = P[:, :-1, :]
    dP = (ls * mu[:, None, None] * P - c * P_lm1) / sin[:, None, None]
    cot = (mu / sin)[:, None, None]
    d2P = -cot * dP + (ms**2 / (sin**2)[:, None, None] - ls * (ls + 1)) * P
    mask = (ls >= ms)[None]
    return P * mask, dP * mask, d2P * mask


class SphereGrid:
    """Spectral grid with ``n_lat`` Gauss latitudes and ``n_lon`` longitudes.

    Nodes are ordered by increasing colatitude.  ``weights`` integrate
    against the round area form, so ``weights.sum() == 4*pi``.  The
    retained spectral space is triangular: degrees ``l <= n_lat - 1`` and
    orders ``m <= min(l, n_lon/2 - 1)``.
    """

    def __init__(self, n_lat=32, n_lon=64, filter_strength=0.0):
        if int(n_lat) != n_lat or n_lat < 8:
            raise InvalidConfig(f"n_lat must be an integer >= 8, got {n_lat}", "grid.n_lat")
        if int(n_lon) != n_lon or n_lon < 16 or n_lon % 2:
            raise InvalidConfig(f"n_lon must be an even integer >= 16, got {n_lon}", "grid.n_lon")
        self.n_lat = int(n_lat)
        self.n_lon = int(n_lon)
        self.filter_strength = float(filter_strength)

        x, w = np.polynomial.legendre.leggauss(self.n_lat)
        order = np.argsort(-x)
        self.mu = x[order]
        self.gauss_weights = w[order]
        self.theta = np.arccos(self.mu)
        self.phi = 2.0 * np.pi * np.arange(self.n_lon) / self.n_lon
        self.weights = np.outer(self.gauss_weights, np.full(self.n_lon, 2.0 * np.pi / self.n_lon))
        self.lmax = self.n_lat - 1
        self.mmax = min(self.lmax, self.n_lon // 2 - 1)

        T, Ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        st, ct, sp, cp = np.sin(T), np.cos(T), np.sin(Ph), np.cos(Ph)
        self.sin_theta = st
        # unit radial direction and its angular derivatives, shape (n_lat, n_lon, 3)
        self.omega = np.stack([st * cp, st * sp, ct], axis=-1)
        self.omega_t = np.stack([ct * cp, ct * sp, -st], axis=-1)
        self.omega_p = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1)
        self.omega_tp = np.stack([-ct * sp, ct * cp, np.zeros_like(st)], axis=-1)
        self.omega_pp = np.stack([-st * cp, -st * sp, np.zeros_like(st)], axis=-1)

        P, dP, d2P = normalized_legendre(self.lmax, self.mmax, self.mu)
        self._P = P
        sigma = self.spectral_filter()
        # per-order projection / differentiation operators, shape (m, k, k')
        Pw = P * self.gauss_weights[:, None, None]
        self._S0 = np.einsum("klm,l,jlm->mkj", P, sigma, Pw)
        self._S1 = np.einsum("klm,l,jlm->mkj", dP, sigma, Pw)
        self._S2 = np.einsum("klm,l,jlm->mkj", d2P, sigma, Pw)
        self._im = 1j * np.arange(self.mmax + 1)
        # all three operators stacked for one batched product, shape (m, 3k, k')
        self._S012 = np.concatenate([self._S0, self._S1, self._S2], axis=1)

    @property
    def shape(self):
        return (self.n_lat, self.n_lon)

    @property
    def size(self):
        return self.n_lat * self.n_lon

    @property
    def min_spacing(self):
        """Nominal angular resolution, ``1/sqrt(L(L+1))`` for top degree ``L``."""
        return 1.0 / np.sqrt(self.lmax * (self.lmax + 1))

    def spectral_filter(self):
        """Exponential filter factors per degree (all ones when disabled)."""
        ls = np.arange(self.lmax + 1)
        if self.filter_strength <= 0:
            return np.ones(self.lmax + 1)
        return np.exp(-self.filter_strength * (ls / self.lmax) ** 16)

    def __eq__(self, other):
        return (
            isinstance(other, SphereGrid)
            and (self.n_lat, self.n_lon, self.filter_strength)
            == (other.n_lat, other.n_lon, other.filter_strength)
        )

    def __hash__(self):
        return hash((self.n_lat, self.n_lon, self.filter_strength))

    def __repr__(self):
        return f"SphereGrid(n_lat={self.n_lat}, n_lon={self.n_lon})"

    def integrate(self, values):
        """Quadrature of a nodal field against the round area form."""
        return float(np.sum(self.weights * values))

    def _fourier(self, f):
        F = np.fft.rfft(np.asarray(f, dtype=float), axis=-1)
        return F[..., : self.mmax + 1]

    def _to_grid(self, G):
        # irfft zero-pads the truncated orders up to n_lon // 2 + 1
        return np.fft.irfft(G, n=self.n_lon, axis=-1)

    def project(self, f):
        """Band-limit a nodal field onto the retained spherical harmonics."""
        F = self._fourier(f)
        Fr = np.ascontiguousarray(F.T).view(float).reshape(self.mmax + 1, self.n_lat, 2)
        G = np.matmul(self._S0, Fr).view(complex)[..., 0]
        return self._to_grid(G.T)

    def derivatives(self, f):
        """Spectral angular derivatives of a nodal field.

        Returns ``(f, f_t, f_p, f_tt, f_tp, f_pp)`` where ``t`` is colatitude
        and ``p`` longitude; ``f`` itself is returned band-limited.
        """
        F = self._fourier(f)
        # real and imaginary parts share the real operators
        Fr = np.ascontiguousarray(F.T).view(float).reshape(self.mmax + 1, self.n_lat, 2)
        G = np.matmul(self._S012, Fr)  # (m, 3k, 2)
        G = G.view(complex)[..., 0].reshape(self.mmax + 1, 3, self.n_lat)
        G0, G1, G2 = G[:, 0].T, G[:, 1].T, G[:, 2].T
        im = self._im
        stack = np.stack([G0, G1, im * G0, G2, im * G1, im * im * G0])
        out = self._to_grid(stack)
        return tuple(out)

    def analyze(self, f):
        """Spherical-harmonic coefficients ``a[l, m]`` (complex, m >= 0)."""
        F = self._fourier(f)
        return np.einsum("k,klm,km->lm", self.gauss_weights, self._P, F)

    def degree_power(self, f):
        """Spectral power per degree ``l`` of a nodal field."""
        a = self.analyze(f)
        weight = np.full(self.mmax + 1, 2.0)
        weight[0] = 1.0
        return np.sum(np.abs(a) ** 2 * weight, axis=1)

    def evaluate(self, f, theta, phi):
        """Evaluate the band-limited interpolant of ``f`` at arbitrary angles."""
        a = self.analyze(f)
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        P, _, _ = normalized_legendre(self.lmax, self.mmax, np.cos(theta.ravel()))
        ms = np.arange(self.mmax + 1)
        scale = np.full(self.mmax + 1, 2.0)
        scale[0] = 1.0
        Gm = np.einsum("klm,lm->km", P, a)
        phase = np.exp(1j * np.outer(phi.ravel(), ms))
        val = np.real(np.sum(Gm * phase * scale, axis=1)) / self.n_lon
        return val.reshape(theta.shape)
