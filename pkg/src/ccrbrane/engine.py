"""Quasicoherent-state quantities at a point of the eigensurface.

All integrals share the same shape: a rational function of the shifted
symbol differences dA(b) = phi_A(alpha_A + b) - phi_A(alpha_A) and
dX(b) = phi_X3(alpha_A + b) - phi_X3(alpha_A), integrated against dmu.  They
are evaluated together on one node set.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erfcx, roots_legendre

from .branes import BraneModel, SurfacePoint, make_cylinder, resolve
from .fock import FockTruncation, fock_amplitudes, overlap
from .quadrature import IntegralResult, QuadratureSpec, integrate_mu, integrate_plane

FD_STEP = 1e-5
DEFAULT_QUAD = QuadratureSpec(scheme="polar", order=48, angular=192, tol=1e-8)


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpinDensityMatrix:
    rho: np.ndarray
    error_estimate: float = 0.0
    converged: bool = True

    def violations(self, herm_tol=1e-12, trace_tol=1e-10, psd_tol=1e-10) -> list[str]:
        r = self.rho
        out = []
        if np.max(np.abs(r - r.conj().T)) > herm_tol:
            out.append("not Hermitian")
        if abs(np.trace(r) - 1) > trace_tol:
            out.append("trace != 1")
        if np.min(np.linalg.eigvalsh(0.5 * (r + r.conj().T))) < -psd_tol:
            out.append("negative eigenvalue")
        return out

    def adjugate(self) -> np.ndarray:
        """Transposed cofactor matrix [[d, -b], [-c, a]]."""
        (a, b), (c, d) = self.rho
        return np.array([[d, -b], [-c, a]])


@dataclass(frozen=True)
class ConnectionSample:
    """Connection 1-form components at a point, one entry per chart coordinate."""

    coords: tuple
    names: tuple
    A_geo: np.ndarray
    A_def: np.ndarray
    A_topo: np.ndarray
    C: np.ndarray
    gauge_residual: float
    residual_after: float
    N2: float
    error_estimate: float = 0.0
    converged: bool = True
    star: bool = False

    @property
    def total(self) -> np.ndarray:
        return self.A_geo + self.A_def + self.A_topo

    @property
    def A_geo_plus(self) -> np.ndarray:
        return self.A_geo + self.A_def


# ---------------------------------------------------------------------------
# shifted symbols


def delta_phi(brane: BraneModel, pt: SurfacePoint, beta):
    """(dA, dX, d dA/ds, d dX/ds) at the nodes ``beta``.

    Coordinate partials have shape (2, len(beta)).
    """
    beta = np.asarray(beta, dtype=complex)
    a0 = pt.alpha_A
    z = a0 + beta
    dA = brane.phi_A(z) - brane.phi_A(a0)
    dX = brane.phi_X3(z) - brane.phi_X3(a0)
    da = pt.d_alpha
    gAz, gXz = brane.phi_A.partials(z), brane.phi_X3.partials(z)
    gA0, gX0 = brane.phi_A.partials(np.array([a0])), brane.phi_X3.partials(np.array([a0]))
    dsA = np.empty((2,) + beta.shape, dtype=complex)
    dsX = np.empty((2,) + beta.shape, dtype=float)
    for s in range(2):
        rx, ry = da[s].real, da[s].imag
        dsA[s] = (gAz[0] - gA0[0]) * rx + (gAz[1] - gA0[1]) * ry
        dsX[s] = np.real((gXz[0] - gX0[0]) * rx + (gXz[1] - gX0[1]) * ry)
    return dA, np.real(dX), dsA, dsX


def _run(brane, pt, quad, f) -> IntegralResult:
    return integrate_mu(f, quad, pt.secondary_zeros())


def _integrand_all(brane, pt, star=False):
    def f(b):
        dA, dX, dsA, dsX = delta_phi(brane, pt, b)
        den = np.abs(dA) ** 2 + dX**2
        d2 = den**2
        if star:
            r00, r01, r11 = dX**2 / d2, dX * np.conj(dA) / d2, np.abs(dA) ** 2 / d2
        else:
            r00, r01, r11 = np.abs(dA) ** 2 / d2, -np.conj(dA) * dX / d2, dX**2 / d2
        rows = [1 / den, r00, r01, r11, 2 * b / den]
        for s in range(2):
            rows.append(1j * (np.conj(dA) * dsA[s] + dX * dsX[s]) / d2)
        for s in range(2):
            rows.append(-1j * (dX * np.conj(dsA[s]) - dA * dsX[s]) / d2)
        return np.array(rows)

    return f


def _moments(brane, pt, quad, star=False):
    res = _run(brane, pt, quad, _integrand_all(brane, pt, star))
    v = np.asarray(res.value)
    N2 = v[0].real
    if not N2 > 0:
        raise ConvergenceError("normalization integral is not positive")
    # every reported quantity is a ratio to N^2, so judge convergence on the ratios
    c = np.asarray(res.coarse)
    fine_n, coarse_n = v[1:] / N2, c[1:] / c[0].real
    err = max(float(np.max(np.abs(fine_n - coarse_n) / np.maximum(1.0, np.abs(fine_n)))),
              abs(N2 - c[0].real) / N2)
    res = replace(res, error_estimate=err, converged=err <= quad.tol)
    return v, N2, res


def _norm_only(brane, pt, quad):
    def f(b):
        dA, dX, _, _ = delta_phi(brane, pt, b)
        return 1 / (np.abs(dA) ** 2 + dX**2)

    return _run(brane, pt, quad, f)


def _check(res: IntegralResult, strict: bool):
    if strict and not res.converged:
        raise ConvergenceError(f"quadrature not converged (error estimate {res.error_estimate:.3g})")


# ---------------------------------------------------------------------------
# public operations


def normalization_sq(brane, pt, quad=DEFAULT_QUAD, strict=False) -> float:
    res = _norm_only(brane, pt, quad)
    _check(res, strict)
    return float(np.real(res.value))


def normalization_result(brane, pt, quad=DEFAULT_QUAD) -> IntegralResult:
    return _norm_only(brane, pt, quad)


def density_matrix(brane, pt, quad=DEFAULT_QUAD, star=False, strict=False) -> SpinDensityMatrix:
    """Reduced spin state of Lambda (or Lambda_* with star=True)."""
    v, N2, res = _moments(brane, pt, quad, star)
    _check(res, strict)
    r00, r01, r11 = v[1] / N2, v[2] / N2, v[3] / N2
    rho = np.array([[r00.real, r01], [np.conj(r01), r11.real]], dtype=complex)
    return SpinDensityMatrix(rho, res.error_estimate, res.converged)


def renyi_entropy(rho) -> float:
    r = rho.rho if isinstance(rho, SpinDensityMatrix) else np.asarray(rho)
    return float(-np.log(np.real(np.trace(r @ r))))


def deformation_field(brane, pt, quad=DEFAULT_QUAD, strict=False) -> complex:
    v, N2, res = _moments(brane, pt, quad)
    _check(res, strict)
    return complex(v[4] / N2)


def coupling(brane, pt, quad=DEFAULT_QUAD, strict=False) -> np.ndarray:
    v, N2, res = _moments(brane, pt, quad)
    _check(res, strict)
    return np.array(v[7:9] / N2, dtype=complex)


def _dlnN(brane, pt, quad, h=FD_STEP):
    """Central differences of ln N along each chart coordinate, one Richardson step."""
    c = np.asarray(pt.coords, dtype=float)
    out = np.zeros(2)
    for s in range(2):
        vals = []
        for step in (h, h / 2):
            e = np.zeros(2)
            e[s] = step
            np_ = normalization_sq(brane, resolve(brane, c + e, pt.n), quad)
            nm_ = normalization_sq(brane, resolve(brane, c - e, pt.n), quad)
            vals.append(0.25 * (np.log(np_) - np.log(nm_)) / step)  # d ln N = d ln N^2 / 2
        out[s] = (4 * vals[1] - vals[0]) / 3
    return out


def connection(brane, pt, quad=DEFAULT_QUAD, star=False, strict=False) -> ConnectionSample:
    """Split Berry potential and coupling at pt.

    A_geo = Im(conj(alpha_A) d alpha_A), A_def = Im(conj(delta) d alpha_A),
    A_topo = int Acal dmu + i d ln N.  For Lambda_* the integrand Acal is
    replaced by -conj(Acal).
    """
    v, N2, res = _moments(brane, pt, quad, star)
    _check(res, strict)
    da = pt.d_alpha
    delta = v[4] / N2
    acal = v[5:7] / N2
    if star:
        acal = -np.conj(acal)
    gauge = _dlnN(brane, pt, quad)
    topo = acal + 1j * gauge
    A_geo = np.imag(np.conj(pt.alpha_A) * da)
    A_def = np.imag(np.conj(delta) * da)
    return ConnectionSample(
        coords=pt.coords, names=brane.chart.names,
        A_geo=np.asarray(A_geo, float), A_def=np.asarray(A_def, float),
        A_topo=np.real(topo).astype(float), C=np.array(v[7:9] / N2, dtype=complex),
        gauge_residual=float(np.max(np.abs(np.imag(acal)))),
        residual_after=float(np.max(np.abs(np.imag(topo)))),
        N2=float(N2), error_estimate=res.error_estimate, converged=res.converged, star=star)


# ---------------------------------------------------------------------------
# cylinder index


def kappa_cylinder(brane, quad=DEFAULT_QUAD) -> IntegralResult:
    """kappa = <up|rho|up> for the cylinder (independent of the point)."""
    if brane.name != "cylinder":
        raise ValueError("kappa is defined for the cylinder only")
    pt = resolve(brane, (0.0, 0.0), 0)
    v, N2, res = _moments(brane, pt, quad)
    kap = float(np.real(v[1] / N2))
    kc = np.real(np.asarray(res.coarse)[1] / np.asarray(res.coarse)[0])
    err = max(abs(kap - kc), res.error_estimate)
    return IntegralResult(kap, err, err <= quad.tol, res.excluded_mass, kc)


def _J0_bracket(a):
    """(1 - 2a^2) erfcx(a) + 2a/sqrt(pi), with an asymptotic branch for large a."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    big = a > 50
    s = a[~big]
    out[~big] = (1 - 2 * s**2) * erfcx(s) + 2 * s / np.sqrt(np.pi)
    t = a[big]
    out[big] = 2 / (t * np.sqrt(np.pi)) * (1 - 1 / t**2 + 9 / (4 * t**4) - 15 / (2 * t**6))
    return out


def _g_defect(a):
    """1 - sqrt(pi) a erfcx(a), by its asymptotic series for large a."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    big = a > 8
    s = a[~big]
    out[~big] = 1 - np.sqrt(np.pi) * s * erfcx(s)
    x = 1 / (2 * a[big] ** 2)
    term, acc = np.ones_like(x), np.zeros_like(x)
    for n in range(1, 40):
        term = -term * (2 * n - 1) * x
        acc -= term
    out[big] = acc
    return out


def _h_defect(a):
    """erfcx(a)/2 - a g(a)/sqrt(pi), with g from _g_defect; series for large a."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    big = a > 8
    s = a[~big]
    out[~big] = 0.5 * erfcx(s) - s * _g_defect(s) / np.sqrt(np.pi)
    t = a[big]
    x = 1 / (2 * t**2)
    dfact, acc, xp = 1.0, np.zeros_like(t), np.ones_like(t)
    for m in range(1, 40):
        dfact *= 2 * m - 1
        xp = xp * x
        acc += (-1) ** (m + 1) * 2 * m * dfact * xp
    out[big] = acc / (2 * t * np.sqrt(np.pi))
    return out


def kappa_cylinder_reduced(R: float, L: float, ell: float, eps: float = 1e-3,
                           nodes: int = 64, ymax: float = 9.0) -> tuple[float, float]:
    """Independent evaluation of (kappa, N^2) for the cylinder.

    The Re b integral is done in closed form (erfcx), leaving a 1-D integral
    in Im b split into panels between the zeros y_k = 2 pi l k, each panel
    half integrated by log-mapped Gauss-Legendre.  Strips |y - y_k| < eps
    around secondary zeros are excluded.
    """
    R_l = R * np.exp(1 / (8 * ell**2))
    xg, wg = roots_legendre(nodes)
    zeros = list(np.arange(0.0, ymax, 2 * np.pi * ell)) + [ymax]
    ys, ws = [], []
    for k in range(len(zeros) - 1):
        lo, hi = zeros[k], zeros[k + 1]
        mid = 0.5 * (lo + hi)
        lo_off = 0.0 if k == 0 else eps
        hi_off = eps if k + 1 < len(zeros) - 1 else 0.0
        # left half: distance from lo, right half: distance from hi
        for anchor, d0, d1, sign in ((lo, lo_off, mid - lo, 1), (hi, hi_off, hi - mid, -1)):
            if d1 <= d0:
                continue
            if d0 > 0:
                u0, u1 = np.log(d0), np.log(d1)
                u = 0.5 * (u1 - u0) * xg + 0.5 * (u1 + u0)
                d = np.exp(u)
                w = 0.5 * (u1 - u0) * wg * d
            else:
                d = 0.5 * d1 * (xg + 1)
                w = 0.5 * d1 * wg
            ys.append(anchor + sign * d)
            ws.append(w)
    y = np.concatenate(ys)
    w = np.concatenate(ws)
    c = R_l * np.abs(2 * np.sin(y / (2 * ell)))
    a = c / L
    I0 = np.pi * erfcx(a) / (c * L)
    J0 = (np.pi / 2) * _J0_bracket(a) / (c**3 * L)
    g = np.exp(-y**2)
    # sqrt(pi) - c^2 I0 and I0 - c^2 J0 cancel badly for large a; use the defect forms
    n2 = 2 / np.pi * np.sum(w * g * (y**2 * I0 + np.sqrt(np.pi) * _g_defect(a) / L**2))
    kn = 2 / np.pi * np.sum(w * g * c**2 * (y**2 * J0 + np.pi * _h_defect(a) / (c * L) / L**2))
    return float(kn / n2), float(n2)


# ---------------------------------------------------------------------------
# state amplitudes and Fock membership


def qcs_amplitude(brane, pt, beta, N: float | None = None, quad=DEFAULT_QUAD):
    """Integrand pieces of Lambda and Lambda_* at beta.

    Returns (spinor_Lambda, spinor_star, weight, limit) where the state is
    int weight * spinor (x) |alpha_A + b> d^2b/pi.  At b = 0 the weight is
    returned as 0 and ``limit`` is True.
    """
    if N is None:
        N = np.sqrt(normalization_sq(brane, pt, quad))
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))
    dA, dX, _, _ = delta_phi(brane, pt, beta)
    den = np.abs(dA) ** 2 + dX**2
    at0 = beta == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(at0, 0.0, beta * overlap(beta + pt.alpha_A, pt.alpha_A) / np.where(at0, 1, den) / N)
    sp = np.array([np.conj(dA), -dX])
    sp_star = np.array([dX, dA], dtype=complex)
    return sp, sp_star, w, bool(np.any(at0))


def reconstruct_state(brane, pt, trunc: FockTruncation, quad=None, star=False) -> np.ndarray:
    """Fock coefficients of Lambda: shape (2, cutoff), spin-major."""
    quad = quad or QuadratureSpec(scheme="polar", order=64, tol=1e-8)
    N = np.sqrt(normalization_sq(brane, pt))
    cut = trunc.cutoff

    def f(b):
        sp, sps, w, _ = qcs_amplitude(brane, pt, b, N)
        spin = sps if star else sp
        kets = fock_amplitudes(pt.alpha_A + b, cut)
        vals = (spin[:, None, :] * (w * np.ones_like(b))[None, None, :]) * kets[None, :, :]
        return vals.reshape(2 * cut, -1)

    res = integrate_plane(f, quad, pt.secondary_zeros())
    return np.asarray(res.value).reshape(2, cut)


def fock_membership_residual(psi, samples, h: float = 1e-4) -> float:
    """max |d/d gamma (e^{|g|^2/2} psi(g))| / max |e^{|g|^2/2} psi(g)| over samples.

    ``psi`` maps an array of gamma to amplitudes.  A vector of the Fock
    space has e^{|g|^2/2} psi anti-holomorphic, so the residual vanishes.
    """
    g = np.asarray(samples, dtype=complex)

    def F(z):
        return np.exp(0.5 * np.abs(z) ** 2) * psi(z)

    dx = (F(g + h) - F(g - h)) / (2 * h)
    dy = (F(g + 1j * h) - F(g - 1j * h)) / (2 * h)
    d = 0.5 * (dx - 1j * dy)
    scale = np.max(np.abs(F(g)))
    return float(np.max(np.abs(d)) / scale) if scale > 0 else float(np.max(np.abs(d)))


def lambda_amplitude(brane, pt, component: int = 0, star: bool = False, quad=DEFAULT_QUAD):
    """gamma -> spinor component of the coherent-representation amplitude."""
    N = np.sqrt(normalization_sq(brane, pt, quad))

    def psi(gamma):
        b = np.asarray(gamma, dtype=complex) - pt.alpha_A
        sp, sps, w, _ = qcs_amplitude(brane, pt, b, N)
        return (sps if star else sp)[component] * w

    return psi
