"""Catalog of branes: plane, cylinder, Moebius strip, torus, Klein bottle.

Each brane is a pair of diagonal symbols (phi_A, phi_X3), a chart on its
eigensurface with a branch map (coords, n) -> alpha_A, and optionally an
explicit operator realization for the Fock-space oracle.

Branch conventions.  For the twisted branes the branch maps are chosen so
that the embedding point is the same function of the chart coordinates on
every branch:

* Moebius: alpha_A = (-1)^n u + i l (theta + 2 pi n)
* Klein:   alpha_A = l (t1 + 2 pi n1) + i l ((-1)^n1 t2 + 2 pi n2)

With these, (u, theta + 2 pi) on branch n and (-u, theta) on branch n+1
give the same alpha_A, which is the chart twist rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fock import FockTruncation, displacement_matrix
from .symbols import DiagonalSymbol

TWO_PI = 2 * np.pi
ZERO_RADIUS = 8.0  # dmu weight beyond |b| = 8 is below 1e-26


@dataclass(frozen=True)
class Chart:
    """Coordinate names, which coordinates are 2pi-periodic, and the twist.

    ``twist(coords, m)`` returns the representative of coords + 2 pi m
    (m an integer pair) in the fundamental domain of the identification.
    """

    names: tuple
    periodic: tuple
    twist: Callable
    rule: str = ""

    def reduce(self, coords):
        """Bring periodic coordinates into [-pi, pi) via the twist; returns (reduced, m)."""
        c = np.asarray(coords, dtype=float)
        m = np.array([int(np.floor((c[i] + np.pi) / TWO_PI)) if self.periodic[i] else 0
                      for i in range(2)])
        return self.twist(c - TWO_PI * m, m), m


def _no_twist(c, m):
    return np.asarray(c, dtype=float)


@dataclass(frozen=True)
class BraneModel:
    name: str
    params: dict
    phi_A: DiagonalSymbol
    phi_X3: DiagonalSymbol
    chart: Chart
    branch_map: Callable = field(repr=False)      # (coords, n) -> alpha_A
    alpha_partials: Callable = field(repr=False)  # (coords, n) -> (d alpha/ds1, d alpha/ds2)
    declared_x: Callable = field(repr=False)      # coords -> closed-form embedding
    zeros: Callable = field(repr=False)           # (alpha_A, radius) -> secondary zeros in b
    operators: Callable | None = field(default=None, repr=False)
    scale: float = 1.0

    def normalize_n(self, n) -> tuple:
        if np.ndim(n) == 0:
            return (0, int(n))
        n = tuple(int(k) for k in n)
        if len(n) != 2:
            raise ValueError("winding must be an int or a pair of ints")
        return n


@dataclass(frozen=True)
class SurfacePoint:
    brane: BraneModel = field(repr=False)
    coords: tuple
    n: tuple
    alpha_A: complex
    x: np.ndarray

    @property
    def d_alpha(self) -> np.ndarray:
        return np.asarray(self.brane.alpha_partials(np.asarray(self.coords), self.n), dtype=complex)

    def secondary_zeros(self, radius: float = ZERO_RADIUS) -> list:
        return list(self.brane.zeros(self.alpha_A, radius))


def embed(brane: BraneModel, alpha_A) -> np.ndarray:
    a = brane.phi_A(alpha_A)
    return np.array([np.real(a), np.imag(a), np.real(brane.phi_X3(alpha_A))], dtype=float)


def resolve(brane: BraneModel, coords, n=0) -> SurfacePoint:
    coords = tuple(float(c) for c in coords)
    n = brane.normalize_n(n)
    alpha = complex(brane.branch_map(np.asarray(coords), n))
    return SurfacePoint(brane, coords, n, alpha, embed(brane, alpha))


def tangent_frame(pt: SurfacePoint, h: float = 1e-5):
    """Numerical tangents d x/d s_i and the unit normal at pt."""
    c = np.asarray(pt.coords)
    tans = []
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        xp = resolve(pt.brane, c + e, pt.n).x
        xm = resolve(pt.brane, c - e, pt.n).x
        tans.append((xp - xm) / (2 * h))
    nrm = np.cross(tans[0], tans[1])
    norm = np.linalg.norm(nrm)
    return tans[0], tans[1], (nrm / norm if norm > 0 else nrm)


def _check_positive(**kw):
    for k, v in kw.items():
        if not (float(v) > 0):
            raise ValueError(f"parameter {k} must be > 0 (got {v})")


def _lattice(gen, radius):
    """Collect nonzero points gen(m, k) with |b| <= radius over a small index box."""
    out = []
    for m in range(-8, 9):
        for k in range(-8, 9):
            b = gen(m, k)
            if b is not None and 0 < abs(b) <= radius:
                out.append(complex(b))
    return sorted(set(out), key=lambda z: (abs(z), z.real, z.imag))


# ---------------------------------------------------------------------------
# plane


def make_plane(L: float) -> BraneModel:
    _check_positive(L=L)
    L = float(L)
    phi_A = DiagonalSymbol(lambda b: L * b, "plane A = L a",
                           lambda b: (np.full(np.shape(b), L, complex), np.full(np.shape(b), 1j * L)))
    phi_X = DiagonalSymbol(lambda b: np.zeros(np.shape(b)), "plane X3 = 0",
                           lambda b: (np.zeros(np.shape(b)), np.zeros(np.shape(b))), real=True)

    def ops(tr: FockTruncation):
        return L * tr.a, np.zeros_like(tr.a)

    return BraneModel(
        "plane", {"L": L}, phi_A, phi_X,
        Chart(("x1", "x2"), (False, False), _no_twist, "none"),
        branch_map=lambda c, n: (c[0] + 1j * c[1]) / L,
        alpha_partials=lambda c, n: (1 / L, 1j / L),
        declared_x=lambda c: np.array([c[0], c[1], 0.0]),
        zeros=lambda a, rad: [],
        operators=ops, scale=L)


# ---------------------------------------------------------------------------
# cylinder


def make_cylinder(R: float, L: float, ell: float) -> BraneModel:
    _check_positive(R=R, L=L, ell=ell)
    R, L, ell = float(R), float(L), float(ell)
    R_l = R * np.exp(1 / (8 * ell**2))

    def pa(b):
        return R_l * np.exp(1j * np.imag(b) / ell)

    phi_A = DiagonalSymbol(pa, "cylinder A = R D(-1/2l)",
                           lambda b: (np.zeros(np.shape(b), complex), 1j / ell * pa(b)))
    phi_X = DiagonalSymbol(lambda b: L * np.real(b), "cylinder X3 = L(a+a^+)/2",
                           lambda b: (np.full(np.shape(b), L), np.zeros(np.shape(b))), real=True)

    def ops(tr: FockTruncation):
        return R * displacement_matrix(-1 / (2 * ell), tr), L * (tr.a + tr.a_dag) / 2

    def declared(c):
        u, th = c
        return np.array([R_l * np.cos(th), R_l * np.sin(th), L * u])

    return BraneModel(
        "cylinder", {"R": R, "L": L, "ell": ell, "R_ell": R_l}, phi_A, phi_X,
        Chart(("u", "theta"), (False, True), _no_twist, "(u, theta+2pi) ~ (u, theta)"),
        branch_map=lambda c, n: c[0] + 1j * ell * (c[1] + TWO_PI * n[1]),
        alpha_partials=lambda c, n: (1.0 + 0j, 1j * ell),
        declared_x=declared,
        zeros=lambda a, rad: _lattice(lambda m, k: 1j * TWO_PI * ell * k if m == 0 else None, rad),
        operators=ops, scale=max(R, L))


# ---------------------------------------------------------------------------
# Moebius strip


def _expm_lower(c: complex, tr: FockTruncation) -> np.ndarray:
    """exp(c a) by its terminating series (a is nilpotent on the truncation)."""
    out = np.eye(tr.cutoff, dtype=complex)
    term = np.eye(tr.cutoff, dtype=complex)
    for k in range(1, tr.cutoff):
        term = term @ (c * tr.a) / k
        if not np.any(term):
            break
        out += term
    return out


def _anti_exp(c: float, tr: FockTruncation) -> np.ndarray:
    """e^{c a} e^{-c a^+}: anti-normal string with symbol e^{2 i c Im b}."""
    ea = _expm_lower(c, tr)
    ead = _expm_lower(-c, tr).conj().T  # exp(-c a^+) for real c
    return ea @ ead


def _mobius(R, L, ell, name, params):
    def pa(b):
        x, y = np.real(b), np.imag(b)
        return (R + L * x * np.cos(y / (2 * ell))) * np.exp(1j * y / ell)

    def pa_grad(b):
        x, y = np.real(b), np.imag(b)
        c, s, e = np.cos(y / (2 * ell)), np.sin(y / (2 * ell)), np.exp(1j * y / ell)
        return L * c * e, (-(L * x / (2 * ell)) * s + 1j / ell * (R + L * x * c)) * e

    def px(b):
        return L * np.real(b) * np.sin(np.imag(b) / (2 * ell))

    def px_grad(b):
        x, y = np.real(b), np.imag(b)
        return L * np.sin(y / (2 * ell)), L * x / (2 * ell) * np.cos(y / (2 * ell))

    def ops(tr: FockTruncation):
        a, ad = tr.a, tr.a_dag
        e1, e3, e1m = _anti_exp(1 / (4 * ell), tr), _anti_exp(3 / (4 * ell), tr), _anti_exp(-1 / (4 * ell), tr)
        A = R * _anti_exp(1 / (2 * ell), tr) + (L / 4) * (a @ e3 + a @ e1 + e3 @ ad + e1 @ ad)
        X3 = (L / 4j) * (a @ e1 - a @ e1m + e1 @ ad - e1m @ ad)
        return A, X3

    def declared(c):
        u, th = c
        rad = R + L * u * np.cos(th / 2)
        return np.array([rad * np.cos(th), rad * np.sin(th), L * u * np.sin(th / 2)])

    def twist(c, m):
        return np.array([c[0] * (-1) ** int(m[1]), c[1]])

    def zeros(alpha, rad):
        xr = alpha.real
        return _lattice(lambda m, k: ((-1) ** m - 1) * xr + 1j * TWO_PI * ell * m if k == 0 else None, rad)

    return BraneModel(
        name, params,
        DiagonalSymbol(pa, "Moebius phi_A (defined in the coherent representation)", pa_grad),
        DiagonalSymbol(px, "Moebius phi_X3 (defined in the coherent representation)", px_grad, real=True),
        Chart(("u", "theta"), (False, True), twist, "(u, theta+2pi) ~ (-u, theta)"),
        branch_map=lambda c, n: (-1) ** n[1] * c[0] + 1j * ell * (c[1] + TWO_PI * n[1]),
        alpha_partials=lambda c, n: ((-1.0) ** n[1] + 0j, 1j * ell),
        declared_x=declared, zeros=zeros, operators=ops, scale=max(R, L))


def make_mobius(R: float, Lring: float, ell: float) -> BraneModel:
    """Moebius strip in the scaling regime L = Lring / ell."""
    _check_positive(R=R, Lring=Lring, ell=ell)
    R, Lring, ell = float(R), float(Lring), float(ell)
    return _mobius(R, Lring / ell, ell, "mobius", {"R": R, "Lring": Lring, "ell": ell, "L": Lring / ell})


def make_mobius_unscaled(R: float, L: float, ell: float) -> BraneModel:
    """Moebius strip with a free width L (for oracle comparisons only)."""
    _check_positive(R=R, L=L, ell=ell)
    R, L, ell = float(R), float(L), float(ell)
    return _mobius(R, L, ell, "mobius-unscaled", {"R": R, "L": L, "ell": ell})


# ---------------------------------------------------------------------------
# torus


def make_torus(R: float, r: float, ell: float) -> BraneModel:
    _check_positive(R=R, r=r, ell=ell)
    R, r, ell = float(R), float(r), float(ell)
    R_l, r_l, rp_l = R * np.exp(1 / (8 * ell**2)), r * np.exp(1 / (8 * ell**2)), r * np.exp(1 / (4 * ell**2))

    def pa(b):
        return (R_l + rp_l * np.cos(np.imag(b) / ell)) * np.exp(1j * np.real(b) / ell)

    def pa_grad(b):
        y = np.imag(b)
        return 1j / ell * pa(b), -(rp_l / ell) * np.sin(y / ell) * np.exp(1j * np.real(b) / ell)

    def px(b):
        return r_l * np.sin(np.imag(b) / ell)

    def px_grad(b):
        return np.zeros(np.shape(b)), (r_l / ell) * np.cos(np.imag(b) / ell)

    def ops(tr: FockTruncation):
        D = lambda z: displacement_matrix(z, tr)
        A = R * D(1j / (2 * ell)) + (r / 2) * (D((-1 + 1j) / (2 * ell)) + D((1 + 1j) / (2 * ell)))
        X3 = (r / 2j) * (D(-1 / (2 * ell)) - D(1 / (2 * ell)))
        return A, X3

    def declared(c):
        t1, t2 = c
        rad = R_l + rp_l * np.cos(t2)
        return np.array([rad * np.cos(t1), rad * np.sin(t1), r_l * np.sin(t2)])

    return BraneModel(
        "torus", {"R": R, "r": r, "ell": ell, "R_ell": R_l, "r_ell": r_l, "rp_ell": rp_l},
        DiagonalSymbol(pa, "torus A by the displacement rule", pa_grad),
        DiagonalSymbol(px, "torus X3 by the displacement rule", px_grad, real=True),
        Chart(("theta1", "theta2"), (True, True), _no_twist, "both angles 2pi-periodic"),
        branch_map=lambda c, n: ell * (c[0] + TWO_PI * n[0]) + 1j * ell * (c[1] + TWO_PI * n[1]),
        alpha_partials=lambda c, n: (ell + 0j, 1j * ell),
        declared_x=declared,
        zeros=lambda a, rad: _lattice(lambda m, k: TWO_PI * ell * (m + 1j * k), rad),
        operators=ops, scale=R + r)


# ---------------------------------------------------------------------------
# Klein bottle


def make_klein(R: float, r: float, ell: float) -> BraneModel:
    _check_positive(R=R, r=r, ell=ell)
    R, r, ell = float(R), float(r), float(ell)

    def parts(b):
        x, y = np.real(b), np.imag(b)
        c, s = np.cos(x / (2 * ell)), np.sin(x / (2 * ell))
        return x, y, c, s, np.sin(y / ell), np.sin(2 * y / ell)

    def pa(b):
        x, y, c, s, s1, s2 = parts(b)
        return (R + r * c * s1 - r * s * s2) * np.exp(1j * x / ell)

    def pa_grad(b):
        x, y, c, s, s1, s2 = parts(b)
        rho = R + r * c * s1 - r * s * s2
        drx = (r / (2 * ell)) * (-s * s1 - c * s2)
        dry = (r / ell) * (c * np.cos(y / ell) - 2 * s * np.cos(2 * y / ell))
        e = np.exp(1j * x / ell)
        return (drx + 1j * rho / ell) * e, dry * e

    def px(b):
        x, y, c, s, s1, s2 = parts(b)
        return r * s * s1 - r * c * s2

    def px_grad(b):
        x, y, c, s, s1, s2 = parts(b)
        return ((r / (2 * ell)) * (c * s1 + s * s2),
                (r / ell) * (s * np.cos(y / ell) - 2 * c * np.cos(2 * y / ell)))

    def declared(cc):
        t1, t2 = cc
        rad = R + r * np.cos(t1 / 2) * np.sin(t2) - r * np.sin(t1 / 2) * np.sin(2 * t2)
        return np.array([rad * np.cos(t1), rad * np.sin(t1),
                         r * np.sin(t1 / 2) * np.sin(t2) - r * np.cos(t1 / 2) * np.sin(2 * t2)])

    def twist(c, m):
        return np.array([c[0], c[1] * (-1) ** int(m[0])])

    def zeros(alpha, rad):
        Y = alpha.imag
        return _lattice(lambda m, k: TWO_PI * ell * m + 1j * ((-1) ** m * (Y + TWO_PI * ell * k) - Y), rad)

    return BraneModel(
        "klein", {"R": R, "r": r, "ell": ell},
        DiagonalSymbol(pa, "Klein phi_A (defined in the coherent representation)", pa_grad),
        DiagonalSymbol(px, "Klein phi_X3 (defined in the coherent representation)", px_grad, real=True),
        Chart(("theta1", "theta2"), (True, True), twist, "(t1+2pi, t2) ~ (t1, -t2)"),
        branch_map=lambda c, n: ell * (c[0] + TWO_PI * n[0]) + 1j * ell * ((-1) ** n[0] * c[1] + TWO_PI * n[1]),
        alpha_partials=lambda c, n: (ell + 0j, 1j * ell * (-1) ** n[0]),
        declared_x=declared, zeros=zeros, operators=None, scale=R + r)


CATALOG = {
    "plane": (make_plane, ("L",)),
    "cylinder": (make_cylinder, ("R", "L", "ell")),
    "mobius": (make_mobius, ("R", "Lring", "ell")),
    "mobius-unscaled": (make_mobius_unscaled, ("R", "L", "ell")),
    "torus": (make_torus, ("R", "r", "ell")),
    "klein": (make_klein, ("R", "r", "ell")),
}


def make_brane(name: str, **params) -> BraneModel:
    try:
        factory, keys = CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown brane {name!r}; choose from {sorted(CATALOG)}") from None
    missing = [k for k in keys if k not in params]
    if missing:
        raise ValueError(f"brane {name!r} needs parameters {missing}")
    return factory(**{k: params[k] for k in keys})
