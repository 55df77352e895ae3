"""Radial cutoff, Morawetz vector field, explicit constants, identity checks.

The multiplier machinery lives around a C^3 radial cutoff chi with
chi = 0 on [0, R0], chi = 1 on [R1, inf), built by normalizing

    chi(r) = (1/I) * int_{R0}^{r} p(s)/s ds,

where p ramps 0 -> 1 with a quintic smoothstep on [R0, R0+eps], sits at 1
on the plateau, and ramps back down on [R1-eps, R1].  Then r chi'(r) =
p(r)/I, so the slope constant c_chi = sup_r r chi'(r) equals 1/I and stays
below 4 whenever eps <= eps0(R0, R1) (the plateau's log-length alone is
then >= 1/4).  Note that 1/log((R1-eps)/(R0+eps)) is only the plateau
*upper bound* for c_chi; the ramp integrals make the true value strictly
smaller.

From chi we build, in dimension d = 2 with distinguished coordinate x_2:

    Z(x)       = e_2 x_2 (1 - chi(r)) + x chi(r) = (x_1 chi(r), x_2),
    2 alpha    = 1 + (1 - q) chi + (r^2 - x_2^2) chi'/r,
    2 L.alpha  = chi' (3 c - q)/r + chi'' (4 - q - 3 c) + chi''' r (1 - c),

with c = x_2^2/r^2 and q = (4 - c_chi)/8.  Both alpha and its Laplacian
are affine in c, so angular extremes sit at c in {0, 1}; the scans below
still sweep a full polar grid and then refine.

The threshold constants: m_alpha(r) = sup over the ball B_r of the
*signed* Laplacian, R_* = the largest radius in (R0, R1] with
m_alpha(R_*) <= q/(128 R0^2), and

    k_threshold^2 = max( 4 M_alpha / (q chi(R_*)),  9 / (4 R0^2 chi(2 R0)) ),

with M_alpha = m_alpha at the outer radius.  The resolvent bound carries
the fully explicit prefactor

    2 q^2 R0^2 / 81 + 128 R0^2 (k^2 R^2 + sup|alpha|^2) + 4 R^2 + R1^2.

The identity checkers at the bottom verify, by centered finite
differences of the flux vector, the pointwise multiplier identity for
Zv = Z.grad v - i k beta v + alpha v, its Morawetz-Ludwig special case
(Z = x, beta = r, alpha constant), the sign of the radiating flux
combinations on circles, and the Poincare-Friedrichs inequality

    int_{B_2R} |v|^2 <= 8 int_{B_sqrt13 R \\ B_2R} |v|^2
                        + 4 R^2 int_{B_sqrt13 R} |d_2 v|^2 .
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial import chebyshev as ncheb
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from . import special
from .geometry import QUARTER_EXP

__all__ = [
    "CutoffProfile", "MultiplierConstants", "epsilon0", "build_cutoff",
    "c_chi", "q_param", "vector_field_Z", "z_jacobian",
    "alpha_and_laplacian", "alpha_gradient", "threshold_constants",
    "TestField", "plane_wave_field", "polynomial_field", "point_source_field",
    "ZField", "cutoff_z", "identity_z", "AlphaField", "cutoff_alpha",
    "constant_alpha", "morawetz_residual", "morawetz_ludwig_residual",
    "ml_divergence_and_p", "radiating_flux_check", "friedrichs_check",
]


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def _d_smoothstep(t):
    t = np.asarray(t)
    inside = (t > 0.0) & (t < 1.0)
    tt = np.where(inside, t, 0.5)
    return np.where(inside, 30.0 * tt ** 2 * (1.0 - tt) ** 2, 0.0)


def _d2_smoothstep(t):
    t = np.asarray(t)
    inside = (t > 0.0) & (t < 1.0)
    tt = np.where(inside, t, 0.5)
    return np.where(inside, 60.0 * tt * (1.0 - tt) * (1.0 - 2.0 * tt), 0.0)


def epsilon0(r0: float, r1: float) -> float:
    """Largest admissible ramp width: (R1 - R0 e^{1/4}) / (e^{1/4} + 1).

    Zero exactly on the feasibility boundary R1 = e^{1/4} R0 (no positive
    ramp width remains there, so build_cutoff still rejects the pair).
    """
    if not (r0 > 0 and r1 >= QUARTER_EXP * r0):
        raise ValueError(f"infeasible radii: need R1 > e^(1/4) R0, "
                         f"got R0={r0}, R1={r1}")
    return (r1 - r0 * QUARTER_EXP) / (QUARTER_EXP + 1.0)


@dataclasses.dataclass(frozen=True)
class CutoffProfile:
    """C^3 radial cutoff with exact plateau/ramp derivative formulas."""

    r0: float
    r1: float
    eps: float
    i_total: float
    _ramp_up: object = dataclasses.field(repr=False)
    _ramp_down: object = dataclasses.field(repr=False)
    _i_up: float = dataclasses.field(repr=False)
    _i_plateau: float = dataclasses.field(repr=False)

    @property
    def c_chi(self) -> float:
        return 1.0 / self.i_total

    def _p(self, r):
        return np.select(
            [r <= self.r0, r < self.r0 + self.eps, r <= self.r1 - self.eps,
             r < self.r1],
            [0.0, _smoothstep((r - self.r0) / self.eps), 1.0,
             _smoothstep((self.r1 - r) / self.eps)], 0.0)

    def _dp(self, r):
        return np.select(
            [r <= self.r0, r < self.r0 + self.eps, r <= self.r1 - self.eps,
             r < self.r1],
            [0.0, _d_smoothstep((r - self.r0) / self.eps) / self.eps, 0.0,
             -_d_smoothstep((self.r1 - r) / self.eps) / self.eps], 0.0)

    def _d2p(self, r):
        e2 = self.eps * self.eps
        return np.select(
            [r <= self.r0, r < self.r0 + self.eps, r <= self.r1 - self.eps,
             r < self.r1],
            [0.0, _d2_smoothstep((r - self.r0) / self.eps) / e2, 0.0,
             _d2_smoothstep((self.r1 - r) / self.eps) / e2], 0.0)

    def _onset(self, r):
        """chi on the lowest tenth of the up ramp, with *relative* accuracy.

        Near R0 the integral behaves like t^4 (t the scaled ramp offset) and
        falls below the Chebyshev cache's absolute error floor, while the
        R_* search genuinely needs these magnitudes.  A Gauss rule in the
        scaled variable has no cancellation, so it keeps full relative
        precision however tiny the value.
        """
        t = (r - self.r0) / self.eps
        u, w = np.polynomial.legendre.leggauss(24)
        u = 0.5 * (u + 1.0)
        uu = u[:, None] * t[None, :]
        vals = _smoothstep(uu) / (self.r0 + self.eps * uu)
        return self.eps * t * np.sum(w[:, None] * vals, axis=0) * 0.5

    def chi(self, r):
        r = np.asarray(r, dtype=np.float64)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        acc = np.select(
            [r <= self.r0, r < self.r0 + self.eps, r <= self.r1 - self.eps,
             r < self.r1],
            [0.0,
             self._ramp_up(np.clip(r, self.r0, self.r0 + self.eps)),
             self._i_up + np.log(np.maximum(r, self.r0 + self.eps)
                                 / (self.r0 + self.eps)),
             self._i_up + self._i_plateau
             + self._ramp_down(np.clip(r, self.r1 - self.eps, self.r1))],
            self.i_total)
        onset = (r > self.r0) & (r < self.r0 + 0.1 * self.eps)
        if onset.any():
            acc[onset] = self._onset(r[onset])
        out = np.clip(acc / self.i_total, 0.0, 1.0)
        out[r <= self.r0] = 0.0
        out[r >= self.r1] = 1.0
        return float(out[0]) if scalar else out

    def _ratio(self, num, r):
        r = np.asarray(r, dtype=np.float64)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        safe = np.where(r > 0.0, r, 1.0)
        out = num(r, safe) / self.i_total
        out[r <= self.r0] = 0.0
        out[r >= self.r1] = 0.0
        return float(out[0]) if scalar else out

    def dchi(self, r):
        return self._ratio(lambda r, s: self._p(r) / s, r)

    def d2chi(self, r):
        return self._ratio(
            lambda r, s: (self._dp(r) * r - self._p(r)) / s ** 2, r)

    def d3chi(self, r):
        return self._ratio(
            lambda r, s: (self._d2p(r) * r ** 2 - 2.0 * self._dp(r) * r
                          + 2.0 * self._p(r)) / s ** 3, r)


def _cumulative_interpolant(f: Callable, lo: float, hi: float):
    """Chebyshev cache of r -> int_lo^r f, each node by adaptive quadrature."""
    def antideriv(rs):
        rs = np.atleast_1d(rs)
        return np.array([
            quad(f, lo, float(r), epsabs=1e-15, epsrel=1e-13, limit=200)[0]
            for r in rs])

    return ncheb.Chebyshev.interpolate(antideriv, 48, domain=[lo, hi])


def build_cutoff(r0: float, r1: float, eps: float) -> CutoffProfile:
    e0 = epsilon0(r0, r1)
    if not (0.0 < eps <= e0 * (1.0 + 1e-12)):
        raise ValueError(f"ramp width must lie in (0, eps0], "
                         f"got eps={eps}, eps0={e0}")
    up = _cumulative_interpolant(
        lambda s: _smoothstep((s - r0) / eps) / s, r0, r0 + eps)
    down = _cumulative_interpolant(
        lambda s: _smoothstep((r1 - s) / eps) / s, r1 - eps, r1)
    i_up = quad(lambda s: _smoothstep((s - r0) / eps) / s, r0, r0 + eps,
                epsabs=1e-15, epsrel=1e-13)[0]
    i_plateau = math.log((r1 - eps) / (r0 + eps))
    i_down = quad(lambda s: _smoothstep((r1 - s) / eps) / s, r1 - eps, r1,
                  epsabs=1e-15, epsrel=1e-13)[0]
    return CutoffProfile(r0=r0, r1=r1, eps=eps,
                         i_total=i_up + i_plateau + i_down,
                         _ramp_up=up, _ramp_down=down,
                         _i_up=i_up, _i_plateau=i_plateau)


def c_chi(profile: CutoffProfile, scan: int = 4097) -> float:
    """sup_r r chi'(r) by dense scan with local refinement.

    Analytically the supremum is 1/I (the plateau value of p/I); the scan
    hits plateau points, so the refinement is confirmation rather than
    discovery.
    """
    rr = np.linspace(profile.r0, profile.r1, scan)
    vals = rr * profile.dchi(rr)
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo, hi = rr[max(i - 1, 0)], rr[min(i + 1, scan - 1)]
    res = minimize_scalar(lambda r: -float(r * profile.dchi(r)),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    return max(best, -res.fun)


def q_param(c: float) -> float:
    if not (0.0 <= c < 4.0):
        raise ValueError(f"slope constant must lie in [0, 4), got {c}")
    return (4.0 - c) / 8.0


# ---------------------------------------------------------------------------
# vector field, alpha, Laplacian


def _radius(x):
    x = np.asarray(x, dtype=np.float64)
    return x, np.linalg.norm(x, axis=-1)


def vector_field_Z(profile: CutoffProfile, x):
    """Z(x) = e_2 x_2 (1 - chi) + x chi = (x_1 chi(r), x_2)."""
    x, r = _radius(x)
    ch = profile.chi(r)
    return np.stack([x[..., 0] * ch, x[..., 1]], axis=-1)


def z_jacobian(profile: CutoffProfile, x):
    """J[i, j] = dZ_j / dx_i, analytic."""
    x, r = _radius(x)
    ch = profile.chi(r)
    dch = profile.dchi(r)
    safe = np.where(r > 0.0, r, 1.0)
    j = np.zeros(x.shape[:-1] + (2, 2))
    j[..., 0, 0] = ch + x[..., 0] ** 2 * dch / safe
    j[..., 1, 0] = x[..., 0] * x[..., 1] * dch / safe
    j[..., 0, 1] = 0.0
    j[..., 1, 1] = 1.0
    return j


def alpha_and_laplacian(profile: CutoffProfile, q: float, x):
    """(alpha, Laplacian alpha) with d = 2 and distinguished coordinate x_2."""
    x, r = _radius(x)
    safe = np.where(r > 0.0, r, 1.0)
    c = np.where(r > 0.0, (x[..., 1] / safe) ** 2, 0.0)
    ch, d1, d2, d3 = (profile.chi(r), profile.dchi(r), profile.d2chi(r),
                      profile.d3chi(r))
    alpha = 0.5 * (1.0 + (1.0 - q) * ch + safe * (1.0 - c) * d1)
    lap = 0.5 * (d1 * (3.0 * c - q) / safe + d2 * (4.0 - q - 3.0 * c)
                 + d3 * safe * (1.0 - c))
    return alpha, lap


def alpha_gradient(profile: CutoffProfile, q: float, x):
    """grad alpha, using alpha = [1 + (1-q) chi + x_1^2 chi'/r] / 2."""
    x, r = _radius(x)
    safe = np.where(r > 0.0, r, 1.0)
    d1, d2 = profile.dchi(r), profile.d2chi(r)
    g = d1 / safe
    gp = (d2 * safe - d1) / safe ** 2
    radial = 0.5 * ((1.0 - q) * d1 + x[..., 0] ** 2 * gp)
    grad = (radial / safe)[..., None] * x
    grad[..., 0] += x[..., 0] * g
    return grad


# ---------------------------------------------------------------------------
# threshold constants


@dataclasses.dataclass(frozen=True)
class MultiplierConstants:
    r0: float
    r1: float
    eps: float
    c_chi: float
    q: float
    m_alpha_max: float
    r_star: float
    chi_r_star: float
    k_threshold: float
    alpha_sup: float

    def resolvent_constant(self, k: float, radius: float) -> float:
        """Prefactor of the resolvent estimate at wavenumber k, ball radius R."""
        return (2.0 * self.q ** 2 * self.r0 ** 2 / 81.0
                + 128.0 * self.r0 ** 2 * (k ** 2 * radius ** 2
                                          + self.alpha_sup ** 2)
                + 4.0 * radius ** 2 + self.r1 ** 2)


def _laplacian_split(profile: CutoffProfile, q: float, rr):
    """2*Lap(alpha) = base(r) + c * slope(r), affine in c = x_2^2/r^2."""
    d1, d2, d3 = profile.dchi(rr), profile.d2chi(rr), profile.d3chi(rr)
    safe = np.where(rr > 0.0, rr, 1.0)
    base = -q * d1 / safe + (4.0 - q) * d2 + d3 * safe
    slope = 3.0 * d1 / safe - 3.0 * d2 - d3 * safe
    return base, slope


def threshold_constants(profile: CutoffProfile, q: float,
                        n_radii: int = 2048, n_angles: int = 512
                        ) -> MultiplierConstants:
    r0, r1 = profile.r0, profile.r1
    tau = q / (128.0 * r0 ** 2)
    rr = np.linspace(r0, r1, n_radii)
    base, slope = _laplacian_split(profile, q, rr)

    cc = np.sin(np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)) ** 2
    lap_grid = 0.5 * (base[None, :] + cc[:, None] * slope[None, :])
    h = lap_grid.max(axis=0)  # angular max at each radius (c in {0,1} on grid)

    def lap_at(r, c):
        b, s = _laplacian_split(profile, q, np.atleast_1d(r))
        return 0.5 * float(b[0] + c * s[0])

    m_alpha = max(float(h.max()), 0.0)
    i = int(np.argmax(h))
    lo, hi = rr[max(i - 1, 0)], rr[min(i + 1, n_radii - 1)]
    for c_end in (0.0, 1.0):
        res = minimize_scalar(lambda r: -lap_at(r, c_end), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        m_alpha = max(m_alpha, -res.fun)

    def angular_max(radii):
        b, s = _laplacian_split(profile, q, np.atleast_1d(radii))
        return 0.5 * np.maximum(b, b + s)  # affine in c: max at c in {0, 1}

    profile_max = np.maximum.accumulate(np.maximum(h, 0.0))
    ok = profile_max <= tau
    if not ok[0]:
        raise RuntimeError("no feasible R_*: the Laplacian bound fails "
                           "immediately above R0; decrease eps or widen R1/R0")
    if ok[-1]:
        r_star = r1
    else:
        # m_alpha typically crosses tau deep inside the ramp onset (the
        # third derivative scales like 1/eps^2 versus tau = q/(128 R0^2)),
        # so resolve the crossing on a logarithmic offset grid + bisection.
        j = int(np.flatnonzero(~ok)[0])  # first failing grid radius
        hi_off = rr[j] - r0
        tt = np.geomspace(max(1e-16 * profile.eps, 1e-300), hi_off, 4097)
        gg = np.maximum.accumulate(np.maximum(angular_max(r0 + tt), 0.0))
        bad = np.flatnonzero(gg > tau)
        if len(bad) == 0:
            r_star = float(rr[j - 1])
        else:
            b0 = int(bad[0])
            lo = tt[b0 - 1] if b0 > 0 else tt[0] * 1e-3
            hi = tt[b0]
            for _ in range(200):
                mid = math.sqrt(lo * hi)
                if float(angular_max(np.array([r0 + mid]))[0]) > tau:
                    hi = mid
                else:
                    lo = mid
                if hi / lo < 1.0 + 1e-14:
                    break
            r_star = r0 + lo
    if r_star <= r0 * (1.0 + 1e-15):
        raise RuntimeError("no feasible R_* in (R0, R1); decrease eps "
                           "or increase R1/R0")

    # sup of alpha over the plane: affine in c with max at c = 0
    a0 = 0.5 * (1.0 + (1.0 - q) * profile.chi(rr) + rr * profile.dchi(rr))
    alpha_sup = max(float(a0.max()), 0.5, 0.5 * (2.0 - q))
    i = int(np.argmax(a0))
    lo, hi = rr[max(i - 1, 0)], rr[min(i + 1, n_radii - 1)]
    res = minimize_scalar(
        lambda r: -0.5 * (1.0 + (1.0 - q) * float(profile.chi(r))
                          + r * float(profile.dchi(r))),
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    alpha_sup = max(alpha_sup, -res.fun)

    chi_star = float(profile.chi(r_star))
    chi_2r0 = 1.0 if 2.0 * r0 >= r1 else float(profile.chi(2.0 * r0))
    terms = [9.0 / (4.0 * r0 ** 2 * chi_2r0)]
    if m_alpha > 0.0:
        if chi_star <= 0.0:
            raise RuntimeError("no feasible R_*: chi vanishes at R_*")
        terms.append(4.0 * m_alpha / (q * chi_star))
    k_threshold = math.sqrt(max(terms))

    return MultiplierConstants(
        r0=r0, r1=r1, eps=profile.eps, c_chi=profile.c_chi, q=q,
        m_alpha_max=m_alpha, r_star=r_star, chi_r_star=chi_star,
        k_threshold=k_threshold, alpha_sup=alpha_sup)


# ---------------------------------------------------------------------------
# test fields and identity checkers


@dataclasses.dataclass(frozen=True)
class TestField:
    """Scalar field with analytic derivatives for pointwise identity checks."""
    k: float
    value: Callable
    grad: Callable
    laplacian: Callable


def plane_wave_field(k: float, direction) -> TestField:
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)

    def val(x):
        return np.exp(1j * k * (x @ d))

    return TestField(k=k, value=val,
                     grad=lambda x: 1j * k * d * val(x),
                     laplacian=lambda x: -k * k * val(x))


def polynomial_field(k: float, coeffs) -> TestField:
    """v = sum c[m, n] x^m y^n over a small triangular coefficient table."""
    c = np.asarray(coeffs, dtype=np.complex128)
    deg = c.shape[0]

    def val(x):
        return sum(c[m, n] * x[0] ** m * x[1] ** n
                   for m in range(deg) for n in range(deg - m))

    def grad(x):
        gx = sum(m * c[m, n] * x[0] ** (m - 1) * x[1] ** n
                 for m in range(1, deg) for n in range(deg - m))
        gy = sum(n * c[m, n] * x[0] ** m * x[1] ** (n - 1)
                 for m in range(deg) for n in range(1, deg - m))
        return np.array([gx, gy], dtype=np.complex128)

    def lap(x):
        out = sum(m * (m - 1) * c[m, n] * x[0] ** (m - 2) * x[1] ** n
                  for m in range(2, deg) for n in range(deg - m))
        out += sum(n * (n - 1) * c[m, n] * x[0] ** m * x[1] ** (n - 2)
                   for m in range(deg) for n in range(2, deg - m))
        return out

    return TestField(k=k, value=val, grad=grad, laplacian=lap)


def point_source_field(k: float, source) -> TestField:
    """Radiating fundamental solution (i/4) H_0^{(1)}(k |x - y|)."""
    y = np.asarray(source, dtype=np.float64)

    def val(x):
        return special.fundamental_solution(k, x, y)

    def grad(x):
        d = x - y
        r = float(np.hypot(d[0], d[1]))
        return (-0.25j * k * special.hankel1(1, k * r) / r) * d

    return TestField(k=k, value=val, grad=grad,
                     laplacian=lambda x: -k * k * val(x))


@dataclasses.dataclass(frozen=True)
class ZField:
    value: Callable   # x -> (2,)
    jacobian: Callable  # x -> (2,2) with [i, j] = dZ_j/dx_i


def cutoff_z(profile: CutoffProfile) -> ZField:
    return ZField(value=lambda x: vector_field_Z(profile, x),
                  jacobian=lambda x: z_jacobian(profile, x))


def identity_z() -> ZField:
    return ZField(value=lambda x: np.asarray(x, dtype=np.float64),
                  jacobian=lambda x: np.eye(2))


@dataclasses.dataclass(frozen=True)
class AlphaField:
    value: Callable
    grad: Callable
    laplacian: Callable


def cutoff_alpha(profile: CutoffProfile, q: float) -> AlphaField:
    return AlphaField(
        value=lambda x: alpha_and_laplacian(profile, q, x)[0],
        grad=lambda x: alpha_gradient(profile, q, x),
        laplacian=lambda x: alpha_and_laplacian(profile, q, x)[1])


def constant_alpha(a: float) -> AlphaField:
    return AlphaField(value=lambda x: a,
                      grad=lambda x: np.zeros(2),
                      laplacian=lambda x: 0.0)


def _multiplier(v: TestField, z: ZField, beta: float, a: AlphaField, x):
    return (z.value(x) @ v.grad(x) - 1j * v.k * beta * v.value(x)
            + a.value(x) * v.value(x))


def morawetz_residual(v: TestField, z: ZField, beta: float, a: AlphaField,
                      x, h: float) -> float:
    """|lhs - rhs| of the pointwise multiplier identity at x.

    The divergence of the flux vector is evaluated by centered differences
    with step h (residual is O(h^2)); every other term is analytic.  beta
    is constant, so the grad(beta) term drops.
    """
    x = np.asarray(x, dtype=np.float64)
    k = v.k

    def flux(y):
        val, gr = v.value(y), v.grad(y)
        mult = _multiplier(v, z, beta, a, y)
        return (2.0 * np.real(np.conj(mult) * gr)
                + (k * k * abs(val) ** 2 - np.vdot(gr, gr).real) * z.value(y)
                - a.grad(y) * abs(val) ** 2)

    div = 0.0
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        div += (flux(x + e)[i] - flux(x - e)[i]) / (2.0 * h)

    val, gr = v.value(x), v.grad(x)
    lv = v.laplacian(x) + k * k * val
    lhs = 2.0 * np.real(np.conj(_multiplier(v, z, beta, a, x)) * lv)
    jac = z.jacobian(x)
    grad_sq = np.vdot(gr, gr).real
    rhs = (div
           + (2.0 * a.value(x) - np.trace(jac))
           * (k * k * abs(val) ** 2 - grad_sq)
           - 2.0 * np.real(np.einsum("ij,i,j->", jac, gr, np.conj(gr)))
           + a.laplacian(x) * abs(val) ** 2)
    return abs(lhs - rhs)


def _ml_pieces(v: TestField, alpha: float, x):
    x = np.asarray(x, dtype=np.float64)
    r = float(np.hypot(x[0], x[1]))
    val, gr = v.value(x), v.grad(x)
    vr = (x @ gr) / r
    mult = r * vr - 1j * v.k * r * val + alpha * val
    return r, val, gr, vr, mult


def morawetz_ludwig_residual(v: TestField, alpha: float, x, h: float) -> float:
    """Pointwise residual of the Z = x, beta = r, constant-alpha identity."""
    x = np.asarray(x, dtype=np.float64)
    k = v.k

    def flux(y):
        _, val, gr, _, mult = _ml_pieces(v, alpha, y)
        return (2.0 * np.real(np.conj(mult) * gr)
                + (k * k * abs(val) ** 2 - np.vdot(gr, gr).real) * y)

    div = 0.0
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        div += (flux(x + e)[i] - flux(x - e)[i]) / (2.0 * h)

    _, val, gr, vr, mult = _ml_pieces(v, alpha, x)
    lv = v.laplacian(x) + k * k * val
    lhs = 2.0 * np.real(np.conj(mult) * lv)
    grad_sq = np.vdot(gr, gr).real
    rhs = (div
           + (2.0 * alpha - 1.0) * (k * k * abs(val) ** 2 - grad_sq)
           - (grad_sq - abs(vr) ** 2) - abs(vr - 1j * k * val) ** 2)
    return abs(lhs - rhs)


def ml_divergence_and_p(v: TestField, x, h: float) -> Tuple[float, float]:
    """(div Q by finite differences, P) for the rearranged identity.

    For a Helmholtz solution and 2 alpha = d - 1 = 1 the identity reads
    div Q(v) = P(v) with P(v) = (|grad v|^2 - |v_r|^2) + |v_r - i k v|^2,
    manifestly nonnegative.
    """
    alpha = 0.5
    x = np.asarray(x, dtype=np.float64)
    k = v.k

    def flux(y):
        _, val, gr, _, mult = _ml_pieces(v, alpha, y)
        return (2.0 * np.real(np.conj(mult) * gr)
                + (k * k * abs(val) ** 2 - np.vdot(gr, gr).real) * y)

    div = 0.0
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        div += (flux(x + e)[i] - flux(x - e)[i]) / (2.0 * h)
    _, val, gr, vr, _ = _ml_pieces(v, alpha, x)
    grad_sq = np.vdot(gr, gr).real
    p_term = (grad_sq - abs(vr) ** 2) + abs(vr - 1j * k * val) ** 2
    return float(div), float(p_term)


def radiating_flux_check(k: float, sources, amplitudes, radius: float,
                         alpha: float = 0.5, n: int = 2048
                         ) -> Tuple[float, float]:
    """(Re int u conj u_r, full flux combination) on the circle of given radius.

    u is a superposition of fundamental solutions with sources confined to
    the half-radius ball.  For any radiating u both returned quantities are
    <= 0 (up to quadrature error); alpha must satisfy 2 alpha >= d - 1 = 1.
    """
    sources = np.atleast_2d(np.asarray(sources, dtype=np.float64))
    amplitudes = np.asarray(amplitudes, dtype=np.complex128)
    if np.any(np.linalg.norm(sources, axis=1) >= 0.5 * radius):
        raise ValueError("sources must lie strictly inside the half-radius ball")
    if 2.0 * alpha < 1.0:
        raise ValueError("need 2 alpha >= d - 1")

    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    xhat = np.stack([np.cos(th), np.sin(th)], axis=1)
    x = radius * xhat

    u = np.zeros(n, dtype=np.complex128)
    gr = np.zeros((n, 2), dtype=np.complex128)
    for y, amp in zip(sources, amplitudes):
        d = x - y
        r = np.linalg.norm(d, axis=1)
        u += amp * 0.25j * special.hankel1(0, k * r)
        gr += (amp * (-0.25j) * k * special.hankel1(1, k * r) / r)[:, None] * d

    ur = np.einsum("ij,ij->i", gr, xhat)
    grad_sq = np.sum(np.abs(gr) ** 2, axis=1)
    tang_sq = grad_sq - np.abs(ur) ** 2
    ds = radius * (2.0 * math.pi / n)

    re_flux = float(np.sum(np.real(np.conj(u) * ur)) * ds)
    lhs = (radius * float(np.sum(np.abs(ur) ** 2 - tang_sq
                                 + k * k * np.abs(u) ** 2)) * ds
           - 2.0 * k * radius * float(np.sum(np.imag(np.conj(u) * ur))) * ds
           + 2.0 * alpha * re_flux)
    return re_flux, lhs


def friedrichs_check(values, xs, ys, radius: float) -> Tuple[float, float]:
    """Both sides of the ball inequality by grid quadrature.

    values[i, j] samples the field at (xs[i], ys[j]) on a uniform grid
    covering the ball of radius sqrt(13) * radius; the x_2 derivative is
    taken by centered differences.
    """
    values = np.asarray(values)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    dx = xs[1] - xs[0]
    dy = ys[1] - ys[0]
    if not (np.allclose(np.diff(xs), dx) and np.allclose(np.diff(ys), dy)):
        raise ValueError("grid must be uniform")
    big = math.sqrt(13.0) * radius
    if xs[0] > -big or xs[-1] < big or ys[0] > -big or ys[-1] < big:
        raise ValueError("grid must cover the sqrt(13) R ball")
    if 4.0 * radius / dx < 64.0:
        raise ValueError("grid too coarse: need at least 64 cells across "
                         "the 2R ball")

    r = np.hypot(xs[:, None], ys[None, :])
    dvd = np.gradient(values, dy, axis=1)
    cell = dx * dy
    inner = r <= 2.0 * radius
    annulus = (r > 2.0 * radius) & (r <= big)
    ball = r <= big
    lhs = float(np.sum(np.abs(values[inner]) ** 2) * cell)
    rhs = float(8.0 * np.sum(np.abs(values[annulus]) ** 2) * cell
                + 4.0 * radius ** 2 * np.sum(np.abs(dvd[ball]) ** 2) * cell)
    return lhs, rhs
