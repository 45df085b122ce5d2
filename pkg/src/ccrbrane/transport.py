"""Adiabatic transport along paths on the eigensurface.

Paths are lifts: coordinates are never reduced modulo 2 pi, so the number
of turns is read off the data.  Phases are reported as arguments of the
transport factor exp(-i oint A), wrapped to (-pi, pi].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .branes import BraneModel, resolve
from .engine import DEFAULT_QUAD, ConnectionSample, connection

CLOSURE_TOL = 1e-9


class PathError(ValueError):
    pass


class TransportError(RuntimeError):
    pass


def wrap(phase: float) -> float:
    """Map a phase to (-pi, pi]."""
    w = float(np.mod(phase + np.pi, 2 * np.pi) - np.pi)
    return np.pi if w == -np.pi else w


@dataclass(frozen=True)
class PathSpec:
    brane: BraneModel = field(repr=False)
    coords: np.ndarray = field(repr=False)
    n: tuple = (0, 0)
    closed: bool = False
    turns: tuple = (0, 0)

    @property
    def p(self) -> int:
        """Turns of the single periodic coordinate (or of the first one)."""
        per = self.brane.chart.periodic
        if per[1] and not per[0]:
            return int(self.turns[1])
        return int(self.turns[0])

    def __len__(self):
        return len(self.coords)


def make_path(brane: BraneModel, coords, n=0, require_closed: bool = False) -> PathSpec:
    c = np.asarray(coords, dtype=float)
    if c.ndim != 2 or c.shape[1] != 2 or len(c) < 2:
        raise PathError("a path needs at least two (s1, s2) samples")
    if not np.all(np.isfinite(c)):
        raise PathError("path contains non-finite coordinates")
    chart = brane.chart
    r0, m0 = chart.reduce(c[0])
    r1, m1 = chart.reduce(c[-1])
    closed = bool(np.max(np.abs(r1 - r0)) <= CLOSURE_TOL)
    turns = tuple(int(k) for k in (m1 - m0)) if closed else (0, 0)
    if require_closed and not closed:
        raise PathError(f"path is not closed under the identification {chart.rule!r}")
    return PathSpec(brane, c, brane.normalize_n(n), closed, turns)


def loop(brane: BraneModel, start, p: int = 1, points: int = 201, wiggle: float = 0.0, n=0) -> PathSpec:
    """Closed p-turn loop in the periodic angle, starting at ``start``.

    For a twisted chart the transverse coordinate follows the twist
    continuously, e.g. u(s) = u0 cos(pi p s) on the Moebius strip, so the
    loop is closed in R^3.  ``wiggle`` deforms the shape without changing
    the homotopy class.
    """
    s = np.linspace(0.0, 1.0, points)
    s0, s1 = float(start[0]), float(start[1])
    per = brane.chart.periodic
    if per == (False, True):
        theta = s1 + 2 * np.pi * p * s
        if brane.name.startswith("mobius"):
            other = s0 * np.cos(np.pi * p * s)
        else:
            other = np.full_like(s, s0)
        other = other + wiggle * np.sin(2 * np.pi * s)
        c = np.column_stack([other, theta])
    elif per == (True, True):
        t1 = s0 + 2 * np.pi * p * s
        t2 = np.full_like(s, s1) + wiggle * np.sin(2 * np.pi * s)
        if brane.name == "klein" and p % 2:
            t2 = s1 * np.cos(np.pi * p * s) + wiggle * np.sin(2 * np.pi * s)
        c = np.column_stack([t1, t2])
    else:
        raise PathError("brane has no periodic coordinate; use square_path")
    return make_path(brane, c, n, require_closed=True)


def square_path(brane: BraneModel, corner, side: float, per_side: int = 50) -> PathSpec:
    """Counter-clockwise square in chart coordinates."""
    x0, y0 = float(corner[0]), float(corner[1])
    t = np.linspace(0, 1, per_side, endpoint=False)
    segs = [np.column_stack([x0 + side * t, np.full_like(t, y0)]),
            np.column_stack([np.full_like(t, x0 + side), y0 + side * t]),
            np.column_stack([x0 + side * (1 - t), np.full_like(t, y0 + side)]),
            np.column_stack([np.full_like(t, x0), y0 + side * (1 - t)])]
    c = np.vstack(segs + [[[x0, y0]]])
    return make_path(brane, c, require_closed=True)


def resample(path: PathSpec, points: int) -> PathSpec:
    """Linear re-interpolation in the sample-index parameter."""
    old = np.linspace(0, 1, len(path.coords))
    new = np.linspace(0, 1, int(points))
    c = np.column_stack([np.interp(new, old, path.coords[:, i]) for i in range(2)])
    return PathSpec(path.brane, c, path.n, path.closed, path.turns)


# ---------------------------------------------------------------------------
# winding bookkeeping


@dataclass(frozen=True)
class WindingLabel:
    n: tuple
    coords: tuple
    tau_sign: int
    u_parity: int


def apply_winding(brane: BraneModel, n, coords, p) -> WindingLabel:
    """Relabel the state at coords shifted by p turns.

    (coords + 2 pi p) on branch n is the same state as the returned
    (coords', n').  ``tau_sign`` is the sign picked up by the O(1/l) part of
    the Moebius spin state when evaluated at (u, theta + 2 pi p) with u held
    fixed; ``u_parity`` is (-1)^p for the transverse coordinate.
    """
    n = brane.normalize_n(n)
    pp = (0, int(p)) if np.ndim(p) == 0 else tuple(int(k) for k in p)
    if np.ndim(p) == 0 and brane.chart.periodic == (True, True):
        pp = (int(p), 0)
    c = np.asarray(coords, dtype=float)
    name = brane.name
    if name.startswith("mobius"):
        sign = (-1) ** pp[1]
        return WindingLabel((n[0], n[1] + pp[1]), (sign * c[0], c[1]), sign, sign)
    if name == "klein":
        sign = (-1) ** pp[0]
        n2 = n[1] + (-1) ** n[0] * pp[1]
        return WindingLabel((n[0] + pp[0], n2), (c[0], sign * c[1]), 1, sign)
    return WindingLabel((n[0] + pp[0], n[1] + pp[1]), (c[0], c[1]), 1, 1)


# ---------------------------------------------------------------------------
# holonomies


@dataclass(frozen=True)
class HolonomyResult:
    geometric_phase: float
    topological_phase: float
    integrals: dict
    turns: tuple
    U: np.ndarray | None = None
    amplitudes: tuple | None = None
    survival_probability: float | None = None
    unitarity_defect: float | None = None
    diagnostics: dict = field(default_factory=dict)


def sample_connection(path: PathSpec, quad=DEFAULT_QUAD, star=False) -> list[ConnectionSample]:
    b = path.brane
    return [connection(b, resolve(b, c, path.n), quad, star=star) for c in path.coords]


def _line_integral(values: np.ndarray, coords: np.ndarray) -> tuple[float, float]:
    """Composite trapezoid of sum_s A_s dx^s, plus one Richardson step.

    Returns (value, |richardson - trapezoid|)."""
    dx = np.diff(coords, axis=0)
    mids = 0.5 * (values[1:] + values[:-1])
    t1 = float(np.sum(mids * dx))
    if (len(coords) - 1) % 2:
        return t1, float("nan")
    c2, v2 = coords[::2], values[::2]
    t2 = float(np.sum(0.5 * (v2[1:] + v2[:-1]) * np.diff(c2, axis=0)))
    rich = (4 * t1 - t2) / 3
    return rich, abs(rich - t1)


def abelian_holonomy(brane: BraneModel, path: PathSpec, quad=DEFAULT_QUAD, samples=None) -> HolonomyResult:
    if not path.closed:
        raise PathError("abelian holonomy needs a closed path")
    samples = samples or sample_connection(path, quad)
    c = path.coords
    parts = {}
    errs = {}
    for key, attr in (("geo", "A_geo"), ("def", "A_def"), ("topo", "A_topo")):
        vals = np.array([getattr(s, attr) for s in samples])
        parts[key], errs[key] = _line_integral(vals, c)
    geo_plus = parts["geo"] + parts["def"]
    return HolonomyResult(
        geometric_phase=wrap(-geo_plus), topological_phase=wrap(-parts["topo"]),
        integrals=parts, turns=path.turns,
        diagnostics={"richardson_correction": errs,
                     "gauge_residual_max": max(s.residual_after for s in samples),
                     "quadrature_converged": all(s.converged for s in samples)})


def _rk4(gen: np.ndarray, h: float) -> np.ndarray:
    """Integrate dW/dl = -i G(l) W over generator samples at even/odd/even grid points."""
    W = np.eye(2, dtype=complex)
    for k in range(0, len(gen) - 2, 2):
        g0, g1, g2 = gen[k], gen[k + 1], gen[k + 2]
        k1 = -1j * g0 @ W
        k2 = -1j * g1 @ (W + h * k1)
        k3 = -1j * g1 @ (W + h * k2)
        k4 = -1j * g2 @ (W + 2 * h * k3)
        W = W + (2 * h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return W


def nonabelian_transport(brane: BraneModel, path: PathSpec, quad=DEFAULT_QUAD, steps: int = 200,
                         samples=None, refine: int = 8, velocity: str = "spline") -> HolonomyResult:
    """Path-ordered exponential of the 2x2 connection over (Lambda, Lambda_*).

    The generator is A_geo+ * 1 + [[A_topo, conj C], [C, -A_topo]].  The
    scalar part commutes with everything and is integrated separately
    (Simpson); the traceless part is integrated with RK4 both directly and in
    the interaction frame of sigma_3 A_topo, and the two are compared.

    The connection is sampled at 2*steps + 1 path points.  With ``refine`` > 1
    the samples are interpolated by cubic splines and RK4 runs on a grid
    ``refine`` times finer, which costs no extra quadrature.  ``velocity`` is
    "spline" (smooth paths) or "chord" (polygons: constant velocity per step).
    """
    if steps < 100:
        raise ValueError("steps must be >= 100")
    if velocity not in ("spline", "chord"):
        raise ValueError("velocity must be spline or chord")
    refine = max(1, int(refine))
    npts = 2 * int(steps) + 1
    if len(path.coords) != npts:
        path = resample(path, npts)
    c = path.coords
    samples = samples or sample_connection(path, quad)
    lam = np.linspace(0.0, 1.0, npts)
    comps = {
        "geo": np.array([s.A_geo_plus for s in samples]),
        "topo": np.array([s.A_topo for s in samples]),
        "C": np.array([s.C for s in samples]),
    }
    if velocity == "chord":
        refine = 1
        h0 = lam[1]
        vel = np.empty_like(c)
        for k in range(0, npts - 2, 2):
            vel[k:k + 3] = (c[k + 2] - c[k]) / (2 * h0)
        fine = lam
    else:
        fine = np.linspace(0.0, 1.0, (npts - 1) * refine + 1)
        vel = CubicSpline(lam, c, axis=0)(fine, 1)
        if refine > 1:
            comps = {k: CubicSpline(lam, v, axis=0)(fine) for k, v in comps.items()}
    h = fine[1] - fine[0]
    geo = np.einsum("ij,ij->i", comps["geo"], vel)
    topo = np.einsum("ij,ij->i", comps["topo"], vel)
    cc = np.einsum("ij,ij->i", comps["C"], vel)

    def simpson_total(g):
        return float(np.sum((g[0:-2:2] + 4 * g[1:-1:2] + g[2::2]) * h / 3))

    phi_geo = simpson_total(geo)
    phi_topo = simpson_total(topo)

    gen = np.zeros((len(fine), 2, 2), dtype=complex)
    gen[:, 0, 0], gen[:, 1, 1] = topo, -topo
    gen[:, 1, 0], gen[:, 0, 1] = cc, np.conj(cc)
    W = _rk4(gen, h)

    a = cumulative_simpson(topo, dx=h, initial=0.0)
    ct = np.exp(-2j * a) * cc
    gtil = np.zeros_like(gen)
    gtil[:, 1, 0], gtil[:, 0, 1] = ct, np.conj(ct)
    Wt = _rk4(gtil, h)
    W_int = np.diag([np.exp(-1j * a[-1]), np.exp(1j * a[-1])]) @ Wt

    scal = np.exp(-1j * phi_geo)
    U = scal * W
    U_int = scal * W_int
    defect = float(np.max(np.abs(U.conj().T @ U - np.eye(2))))
    if defect > 1e-6:
        raise TransportError(f"transport matrix non-unitary by {defect:.2e}; increase steps "
                             f"(now {steps}) or refine (now {refine})")
    psi0 = np.array([1, 1]) / np.sqrt(2)
    surv = float(abs(np.vdot(psi0, U @ psi0)) ** 2)
    return HolonomyResult(
        geometric_phase=wrap(-phi_geo), topological_phase=wrap(-phi_topo),
        integrals={"geo_plus": phi_geo, "topo": phi_topo}, turns=path.turns,
        U=U, amplitudes=(complex(U[0, 0]), complex(U[1, 0])), survival_probability=surv,
        unitarity_defect=defect,
        diagnostics={"U_intermediate": U_int,
                     "direct_vs_intermediate": float(np.max(np.abs(U - U_int))),
                     "gauge_residual_max": max(s.residual_after for s in samples),
                     "rk4_grid": len(fine)})


def survival_probability(kappa: float, p: int) -> float:
    return float(np.cos(2 * np.pi * kappa * p) ** 2)
