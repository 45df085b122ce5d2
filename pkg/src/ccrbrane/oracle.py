"""Brute-force Fock-space oracle.

The Dirac operator D_x = sigma_i (x) (X^i - x^i) is assembled as a dense
2*cutoff matrix in spin-major order (up block first):

    D_x = [[X3 - x3, A^+ - conj(a)], [A - a, -(X3 - x3)]],   a = x1 + i x2.

Near-kernel vectors are compared with the quadrature engine and with the
uncertainty identities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import eigsh
from scipy.special import roots_hermite

from .branes import BraneModel, SurfacePoint, tangent_frame
from .fock import FockTruncation, coherent_vector
from .symbols import DiagonalSymbol

DENSE_LIMIT = 256
TAIL_THRESHOLD = 1e-6
KERNEL_TOL = 1e-6
TIE_TOL = 1e-10

PAULI = (np.array([[0, 1], [1, 0]], complex),
         np.array([[0, -1j], [1j, 0]], complex),
         np.array([[1, 0], [0, -1]], complex))


def _unnormalized_amplitudes(beta: np.ndarray, cutoff: int) -> np.ndarray:
    """b^n / sqrt(n!) by recursion, shape (cutoff, len(beta))."""
    out = np.empty((cutoff, beta.size), dtype=complex)
    out[0] = 1.0
    for n in range(1, cutoff):
        out[n] = out[n - 1] * beta / np.sqrt(n)
    return out


def operator_from_phi(sym: DiagonalSymbol, trunc: FockTruncation, order: int | None = None) -> np.ndarray:
    """X_mn = int phi(b) <m|b><b|n> d^2b/pi by tensor Gauss-Hermite.

    The Gaussian of <m|b><b|n> is the Hermite weight, so the rule is exact
    for polynomial symbols of total degree below 2*order - 2*cutoff.
    """
    cut = trunc.cutoff
    order = int(order or cut + 40)
    x, w = roots_hermite(order)
    X, Y = np.meshgrid(x, x, indexing="ij")
    beta = (X + 1j * Y).ravel()
    W = np.outer(w, w).ravel() / np.pi
    keep = W > 1e-300
    beta, W = beta[keep], W[keep]
    phi = np.asarray(sym(beta), dtype=complex) * np.ones(beta.shape)
    u = _unnormalized_amplitudes(beta, cut)
    return (u * (W * phi)) @ u.conj().T


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiracMatrix:
    x: np.ndarray
    A: np.ndarray = field(repr=False)
    X3: np.ndarray = field(repr=False)
    matrix: np.ndarray = field(repr=False)
    source: str = "operators"

    @property
    def cutoff(self) -> int:
        return self.A.shape[0]

    @property
    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(X1, X2, X3) with A = X1 + i X2."""
        Ad = self.A.conj().T
        return (self.A + Ad) / 2, (self.A - Ad) / 2j, self.X3


def assemble(A, X3, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    a = x[0] + 1j * x[1]
    I = np.eye(A.shape[0])
    d3 = X3 - x[2] * I
    return np.block([[d3, A.conj().T - np.conj(a) * I], [A - a * I, -d3]])


def brane_operators(brane: BraneModel, trunc: FockTruncation, source: str = "auto"):
    """(A, X3, source) for the brane; ``source`` is operators, phi or auto."""
    if source not in ("auto", "operators", "phi"):
        raise ValueError("source must be auto, operators or phi")
    if source != "phi" and brane.operators is not None:
        A, X3 = brane.operators(trunc)
        return np.asarray(A, complex), np.asarray(X3, complex), "operators"
    if source == "operators":
        raise ValueError(f"{brane.name} has no explicit operator realization")
    A = operator_from_phi(brane.phi_A, trunc)
    X3 = operator_from_phi(brane.phi_X3, trunc)
    X3 = 0.5 * (X3 + X3.conj().T)
    return A, X3, "phi"


def build_dirac(brane: BraneModel, x, trunc: FockTruncation, source: str = "auto", ops=None) -> DiracMatrix:
    if ops is None:
        A, X3, src = brane_operators(brane, trunc, source)
    else:
        (A, X3), src = ops, "given"
    x = np.asarray(x, dtype=float)
    return DiracMatrix(x, A, X3, assemble(A, X3, x), src)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelCandidate:
    sigma_min: float
    vector: np.ndarray = field(repr=False)
    tail_mass: float
    sigma_next: float
    rayleigh: float

    @property
    def conclusive(self) -> bool:
        return self.sigma_min <= KERNEL_TOL and self.tail_mass < TAIL_THRESHOLD

    @property
    def spinor_blocks(self) -> np.ndarray:
        return self.vector.reshape(2, -1)

    def reduced_density(self) -> np.ndarray:
        psi = self.spinor_blocks
        return psi @ psi.conj().T

    def as_dict(self) -> dict:
        return {"sigma_min": self.sigma_min, "sigma_next": self.sigma_next,
                "tail_mass": self.tail_mass, "conclusive": self.conclusive}


def tail_mass(psi: np.ndarray, fraction: float = 0.1) -> float:
    blocks = np.asarray(psi).reshape(2, -1)
    c = blocks.shape[1]
    k = max(1, int(np.ceil(fraction * c)))
    return float(np.sum(np.abs(blocks[:, c - k:]) ** 2))


def _phase_fix(v: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > 1e-12)
    if idx.size:
        z = v[idx[0]]
        v = v * (abs(z) / z)
    return v


def kernel_state(dm: DiracMatrix) -> KernelCandidate:
    M = dm.matrix
    n = M.shape[0]
    if n <= 2 * DENSE_LIMIT:
        ev, vecs = np.linalg.eigh(M)
    else:
        try:
            ev, vecs = eigsh(M, k=6, sigma=0.0, which="LM")
        except Exception as exc:  # ArpackNoConvergence and friends
            raise RuntimeError(f"shift-invert solver failed: {exc}") from exc
    order = np.argsort(np.abs(ev))
    sig = np.abs(ev[order])
    s0 = float(sig[0])
    near = order[sig <= s0 + TIE_TOL]
    if near.size == 1:
        v = vecs[:, near[0]]
    else:
        # vector of the degenerate subspace closest to up (x) |0>
        sub = vecs[:, near]
        v = sub @ sub[0].conj()
        nv = np.linalg.norm(v)
        v = v / nv if nv > 1e-14 else sub[:, 0]
    v = _phase_fix(v / np.linalg.norm(v))
    nxt = sig[near.size] if near.size < sig.size else float("nan")
    ray = float(np.real(np.vdot(v, M @ v)))
    return KernelCandidate(s0, v, tail_mass(v), float(nxt), ray)


def sigma_min(dm: DiracMatrix) -> float:
    return float(np.min(np.abs(np.linalg.eigvalsh(dm.matrix))))


# ---------------------------------------------------------------------------
# Props 1-2


def _lift(op: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(2), op)


def _expect(psi, op) -> complex:
    return np.vdot(psi, op @ psi)


def theta_matrix(dm: DiracMatrix) -> dict:
    """Theta^{ij} = -i [X^i, X^j] for i < j."""
    X = dm.coordinates()
    return {(i, j): -1j * (X[i] @ X[j] - X[j] @ X[i]) for i in range(3) for j in range(i + 1, 3)}


def _spin_theta(dm: DiracMatrix) -> np.ndarray:
    """(1/2) eps_ij^k sigma_k (x) Theta^{ij}."""
    th = theta_matrix(dm)
    out = np.zeros((2 * dm.cutoff,) * 2, dtype=complex)
    for (i, j), T in th.items():
        k = 3 - i - j
        sign = 1 if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1
        out += sign * np.kron(PAULI[k], T)  # eps_ij + eps_ji halves combine
    return out


def uncertainty_residual(dm: DiracMatrix, psi: np.ndarray) -> float:
    """|DeltaX^2 - <D^2_<X>> - (1/2) eps <sigma (x) Theta>| for a normalized psi."""
    psi = np.asarray(psi, complex)
    psi = psi / np.linalg.norm(psi)
    X = [_lift(m) for m in dm.coordinates()]
    mean = np.array([_expect(psi, m).real for m in X])
    dx2 = sum(_expect(psi, m @ m).real for m in X) - float(mean @ mean)
    Dm = assemble(dm.A, dm.X3, mean)
    d2 = float(np.linalg.norm(Dm @ psi) ** 2)
    st = _expect(psi, _spin_theta(dm)).real
    return abs(dx2 - d2 - st)


@dataclass(frozen=True)
class PropsReport:
    mean_position_error: float
    normal_angle: float | None
    spin_polarization: float
    uncertainty: float
    spin_theta: float
    min_uncertainty_gap: float
    identity_residual: float
    tail_mass: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_props(dm: DiracMatrix, psi, point: SurfacePoint | None = None) -> PropsReport:
    """Position, normal and minimal-uncertainty checks for a kernel vector.

    ``min_uncertainty_gap`` is DeltaX^2 - (1/2) eps <sigma (x) Theta>, which
    vanishes when the uncertainty bound is saturated.
    """
    psi = np.asarray(psi, complex)
    psi = psi / np.linalg.norm(psi)
    X = [_lift(m) for m in dm.coordinates()]
    mean = np.array([_expect(psi, m).real for m in X])
    dx2 = sum(_expect(psi, m @ m).real for m in X) - float(mean @ mean)
    st = float(_expect(psi, _spin_theta(dm)).real)
    I = np.eye(dm.cutoff)
    spin = np.array([_expect(psi, np.kron(s, I)).real for s in PAULI])
    angle = None
    if point is not None and np.linalg.norm(spin) > 0:
        nrm = tangent_frame(point)[2]
        c = abs(float(spin @ nrm)) / np.linalg.norm(spin)
        angle = float(np.arccos(min(1.0, c)))
    return PropsReport(float(np.linalg.norm(mean - dm.x)), angle, float(np.linalg.norm(spin)),
                       float(dx2), st, float(dx2 - st), uncertainty_residual(dm, psi), tail_mass(psi))


def plane_reference(L: float, alpha: complex, cutoff: int) -> np.ndarray:
    """(1, 0) (x) |alpha/L>, truncated and renormalized."""
    v = coherent_vector(complex(alpha) / L, cutoff).amplitudes
    out = np.concatenate([v, np.zeros_like(v)])
    return out / np.linalg.norm(out)


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)
