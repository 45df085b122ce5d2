"""Quadrature on the complex plane for the measures d^2b/pi and
dmu(b) = |b|^2 e^{-|b|^2} d^2b/pi.

Two node families are provided:

* ``polar``: Gauss-Laguerre in t = |b|^2 times a uniform angular rule.  The
  integrands met in practice are ratios of quadratic forms in (Re b, Im b),
  hence direction dependent at b = 0.  In polar form they are smooth in t
  and trigonometric in the angle, so this is the default.
* ``tensor-hermite``: Gauss-Hermite on each real axis.  Spectrally accurate
  for integrands that are smooth at the origin (matrix elements, smoothing).

Declared denominator zeros away from the origin are removed with a smooth
partition of unity: the global rule sees f * (1 - chi), and each zero gets a
local log-radial patch that integrates f * chi outside an exclusion disk.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_hermite, roots_laguerre, roots_legendre

SCHEMES = ("polar", "tensor-hermite")


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Node-family choice and refinement policy.

    ``order`` is the radial node count (polar) or nodes per axis (tensor).
    ``angular`` is the polar angular count, 4*order when omitted.  ``tol``
    bounds the scaled two-level difference for the ``converged`` flag.
    """

    scheme: str = "polar"
    order: int = 64
    exclusion_radius: float = 1e-3
    refine_factor: int = 2
    angular: int | None = None
    tol: float = 1e-8

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if int(self.order) < 8:
            raise ValueError("order must be >= 8")
        if self.exclusion_radius < 0:
            raise ValueError("exclusion_radius must be >= 0")
        if int(self.refine_factor) < 2:
            raise ValueError("refine_factor must be >= 2")
        if self.angular is not None and int(self.angular) < 8:
            raise ValueError("angular must be >= 8")

    def n_angular(self) -> int:
        m = int(self.angular) if self.angular is not None else 4 * int(self.order)
        return 4 * ((m + 3) // 4)  # multiple of 4 keeps both reflections exact

    def refined(self) -> "QuadratureSpec":
        k = int(self.refine_factor)
        return replace(self, order=int(self.order) * k, angular=self.n_angular() * k)

    def as_dict(self) -> dict:
        return {"scheme": self.scheme, "order": int(self.order),
                "angular": self.n_angular(), "exclusion_radius": float(self.exclusion_radius),
                "refine_factor": int(self.refine_factor), "tol": float(self.tol)}


@dataclass(frozen=True)
class IntegralResult:
    """Two-level quadrature result.

    ``error_estimate`` is |fine - coarse| / max(1, |fine|), maximized over
    components for vector integrands.  ``excluded_mass`` bounds the dmu mass
    removed by the exclusion disks.
    """

    value: complex | np.ndarray
    error_estimate: float
    converged: bool
    excluded_mass: float = 0.0
    coarse: complex | np.ndarray | None = None


# ---------------------------------------------------------------------------
# node tables


@lru_cache(maxsize=64)
def _polar_nodes(order: int, angular: int):
    t, w = roots_laguerre(order)
    th = 2 * np.pi * (np.arange(angular) + 0.5) / angular
    r = np.sqrt(t)
    beta = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
    with np.errstate(under="ignore", over="ignore"):
        w_mu = np.repeat(w * t / angular, angular)
        logw = np.where(w > 0, np.log(np.where(w > 0, w, 1.0)) + t, -np.inf)
        w_pl = np.repeat(np.exp(logw) / angular, angular)
    for arr in (beta, w_mu, w_pl):
        arr.setflags(write=False)
    return beta, w_mu, w_pl


@lru_cache(maxsize=64)
def _hermite_nodes(order: int):
    order += order % 2  # no node at the origin
    x, w = roots_hermite(order)
    X, Y = np.meshgrid(x, x, indexing="ij")
    beta = (X + 1j * Y).ravel()
    W = np.outer(w, w).ravel() / np.pi
    wx = np.where(w > 0, np.log(np.where(w > 0, w, 1.0)) + x**2, -np.inf)
    w_pl = np.exp(wx[:, None] + wx[None, :]).ravel() / np.pi
    w_mu = W * np.abs(beta) ** 2
    for arr in (beta, w_mu, w_pl):
        arr.setflags(write=False)
    return beta, w_mu, w_pl


@lru_cache(maxsize=64)
def _patch_nodes(order: int, angular: int, eps: float, rho: float):
    """Nodes z-relative offsets for an annulus eps < s < rho, with d^2b/pi weights."""
    xg, wg = roots_legendre(order)
    lo, hi = np.log(eps), np.log(rho)
    u = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
    wu = 0.5 * (hi - lo) * wg
    s = np.exp(u)
    phi = 2 * np.pi * (np.arange(angular) + 0.5) / angular
    off = (s[:, None] * np.exp(1j * phi)[None, :]).ravel()
    w = np.repeat(wu * s**2 * (2 * np.pi / angular) / np.pi, angular)
    off.setflags(write=False)
    w.setflags(write=False)
    return off, w


def _smooth_step(tau):
    tau = np.clip(tau, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(tau > 0, np.exp(-1.0 / np.where(tau > 0, tau, 1.0)), 0.0)
        b = np.where(tau < 1, np.exp(-1.0 / np.where(tau < 1, 1 - tau, 1.0)), 0.0)
    return a / (a + b)


def _bump(s):
    """1 on s <= 1/2, 0 on s >= 1, smooth in between."""
    return 1.0 - _smooth_step(2.0 * np.asarray(s) - 1.0)


def _patch_radii(zeros: Sequence[complex]) -> list[float]:
    zs = list(zeros)
    radii = []
    for i, z in enumerate(zs):
        d = [abs(z)] + [abs(z - w) for j, w in enumerate(zs) if j != i]
        radii.append(min(1.0, 0.45 * min(d)))
    return radii


# ---------------------------------------------------------------------------
# evaluation


def _eval(f, beta):
    vals = np.asarray(f(beta))
    if vals.shape[-1:] != beta.shape:
        vals = np.broadcast_to(vals, vals.shape[:-1] + beta.shape) if vals.ndim else np.full(beta.shape, vals)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        node = beta[idx[-1]]
        raise QuadratureError(f"non-finite integrand at node beta={node:.6g}")
    return vals


def _single_level(f, spec: QuadratureSpec, measure: str, zeros, radii):
    if spec.scheme == "polar":
        beta, w_mu, w_pl = _polar_nodes(int(spec.order), spec.n_angular())
    else:
        beta, w_mu, w_pl = _hermite_nodes(int(spec.order))
    w = w_mu if measure == "mu" else w_pl

    keep = w != 0
    g = np.ones(beta.shape)
    for z, rho in zip(zeros, radii):
        g = g - _bump(np.abs(beta - z) / rho)
    keep &= g > 0
    b = beta[keep]
    total = _eval(f, b) @ (w[keep] * g[keep])

    eps = float(spec.exclusion_radius)
    for z, rho in zip(zeros, radii):
        e = max(eps, 1e-14)
        if e >= rho:
            continue
        off, wl = _patch_nodes(int(spec.order), spec.n_angular(), e, rho)
        bl = z + off
        chi = _bump(np.abs(off) / rho)
        weight = wl * chi
        if measure == "mu":
            weight = weight * np.abs(bl) ** 2 * np.exp(-np.abs(bl) ** 2)
        total = total + _eval(f, bl) @ weight
    return total


def _integrate(f, spec, measure, zeros):
    zeros = [complex(z) for z in (zeros or ()) if z != 0]
    radii = _patch_radii(zeros)
    coarse = _single_level(f, spec, measure, zeros, radii)
    fine = _single_level(f, spec.refined(), measure, zeros, radii)
    scale = np.maximum(1.0, np.abs(fine))
    err = float(np.max(np.abs(fine - coarse) / scale)) if np.size(fine) else 0.0
    eps = float(spec.exclusion_radius)
    excluded = float(sum(eps**2 * abs(z) ** 2 * np.exp(-abs(z) ** 2) for z in zeros))
    if np.ndim(fine) == 0:
        fine, coarse = complex(fine), complex(coarse)
    return IntegralResult(fine, err, err <= spec.tol, excluded, coarse)


def integrate_mu(f: Callable, spec: QuadratureSpec, zeros: Sequence[complex] = ()) -> IntegralResult:
    """Integrate f against dmu.  f maps a 1-D array of nodes to an array
    whose last axis runs over the nodes (scalar or vector integrands)."""
    return _integrate(f, spec, "mu", zeros)


def integrate_plane(f: Callable, spec: QuadratureSpec, zeros: Sequence[complex] = ()) -> IntegralResult:
    """Integrate f against d^2b/pi; f must carry its own Gaussian decay."""
    return _integrate(f, spec, "plane", zeros)


def radial_shortcut(g: Callable, n: int = 2048) -> complex:
    """(1/2pi) int_0^{2pi} g(theta) dtheta, i.e. int f dmu when
    f(b) = g(arg b)/|b|^2 or when f is homogeneous of degree 0."""
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    return complex(np.mean(np.asarray(g(th), dtype=complex) * np.ones_like(th)))


# ---------------------------------------------------------------------------
# closed-form table of Gaussian integrals against dmu


def _q(b, L, R):
    return L**2 * b.real**2 + R**2 * b.imag**2


GAUSSIAN_TABLE = (
    ("1/q", lambda b, L, R: 1 / _q(b, L, R), lambda L, R: 1 / (L * R)),
    ("x^2/q^2", lambda b, L, R: b.real**2 / _q(b, L, R) ** 2, lambda L, R: 1 / (2 * L**3 * R)),
    ("y^2/q^2", lambda b, L, R: b.imag**2 / _q(b, L, R) ** 2, lambda L, R: 1 / (2 * L * R**3)),
    ("x^2y^2/q^3", lambda b, L, R: b.real**2 * b.imag**2 / _q(b, L, R) ** 3,
     lambda L, R: 1 / (8 * L**3 * R**3)),
    ("x^4/q^3", lambda b, L, R: b.real**4 / _q(b, L, R) ** 3, lambda L, R: 3 / (8 * L**5 * R)),
    ("y^4/q^3", lambda b, L, R: b.imag**4 / _q(b, L, R) ** 3, lambda L, R: 3 / (8 * L * R**5)),
    ("x^2y^2/q^2", lambda b, L, R: b.real**2 * b.imag**2 / _q(b, L, R) ** 2,
     lambda L, R: 1 / (2 * L * R * (L + R) ** 2)),
    ("odd", lambda b, L, R: b.real * b.imag**2 / _q(b, L, R) ** 2, lambda L, R: 0.0),
)
"""(label, integrand(b, L, R), exact value of int integrand dmu)."""
