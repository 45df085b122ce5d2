"""Diagonal coherent-state symbols: X = int phi_X(b) |b><b| d^2b/pi.

Symbols are produced by ordering rules (anti-normal form, then a -> b,
a^+ -> conj(b)) or by the displacement rule; the Gaussian smoothing
<a|X|a> = int phi_X(b) e^{-|a-b|^2} d^2b/pi is the consistency test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fock import ANTI_NORMAL, NORMAL, FockTruncation, OrderedPolynomial, coherent_vector, reorder
from .quadrature import QuadratureSpec, integrate_plane


@dataclass(frozen=True)
class DiagonalSymbol:
    """A symbol b -> phi(b), vectorized over numpy arrays.

    ``grad`` optionally returns (d phi/d Re b, d phi/d Im b).
    """

    eval: Callable
    description: str = "user-supplied"
    grad: Callable | None = None
    real: bool = False

    def __call__(self, beta):
        v = self.eval(np.asarray(beta, dtype=complex))
        return np.real(v) if self.real else v

    def partials(self, beta, h: float = 1e-5):
        """(d/dRe, d/dIm); central differences with one Richardson step
        when no analytic gradient is attached."""
        beta = np.asarray(beta, dtype=complex)
        if self.grad is not None:
            gx, gy = self.grad(beta)
            return (np.real(gx), np.real(gy)) if self.real else (gx, gy)

        def cd(step, direction):
            return (self(beta + step * direction) - self(beta - step * direction)) / (2 * step)

        out = []
        for d in (1.0, 1j):
            d1, d2 = cd(h, d), cd(h / 2, d)
            out.append((4 * d2 - d1) / 3)
        return tuple(out)


def symbol_of(poly: OrderedPolynomial) -> DiagonalSymbol:
    anti = reorder(poly, ANTI_NORMAL)
    terms = [(p, q, complex(c)) for p, q, c in anti.terms]

    def ev(b):
        b = np.asarray(b, dtype=complex)
        out = np.zeros(b.shape, dtype=complex)
        for p, q, c in terms:
            out = out + c * b**q * np.conj(b) ** p
        return out

    return DiagonalSymbol(ev, "polynomial rule")


def symbol_of_displacement(beta: complex) -> DiagonalSymbol:
    """Symbol of D(beta) = exp(beta a^+ - conj(beta) a)."""
    beta = complex(beta)
    pref = np.exp(0.5 * abs(beta) ** 2)

    def ev(a):
        a = np.asarray(a, dtype=complex)
        return pref * np.exp(beta * np.conj(a) - np.conj(beta) * a)

    def grad(a):
        v = ev(a)
        # d/dx of (beta conj(a) - conj(beta) a) = beta - conj(beta); d/dy: -i beta - i conj(beta)
        return v * (beta - np.conj(beta)), v * (-1j * beta - 1j * np.conj(beta))

    return DiagonalSymbol(ev, "displacement rule", grad)


def smoothing_check(sym: DiagonalSymbol, op_matrix: np.ndarray, alpha: complex,
                    quad: QuadratureSpec | None = None):
    """Return (residual, IntegralResult) comparing the Gaussian smoothing of
    ``sym`` at ``alpha`` with <alpha|X|alpha> in the truncated space."""
    quad = quad or QuadratureSpec(scheme="tensor-hermite", order=80, tol=1e-9)
    alpha = complex(alpha)
    res = integrate_plane(lambda b: sym(b) * np.exp(-np.abs(alpha - b) ** 2), quad)
    v = coherent_vector(alpha, op_matrix.shape[0]).amplitudes
    fock = np.vdot(v, op_matrix @ v)
    return float(abs(res.value - fock)), res


# ---------------------------------------------------------------------------
# table of standard operators and their symbols


def _mono(p, q):
    return OrderedPolynomial.monomial(p, q, 1, NORMAL)


PHIX_TABLE = (
    ("1", _mono(0, 0), lambda a: np.ones_like(a)),
    ("a", _mono(0, 1), lambda a: a),
    ("a+", _mono(1, 0), lambda a: np.conj(a)),
    ("a^2", _mono(0, 2), lambda a: a**2),
    ("a+a", _mono(1, 1), lambda a: np.abs(a) ** 2 - 1),
    ("(a+)^2", _mono(2, 0), lambda a: np.conj(a) ** 2),
    ("a^3", _mono(0, 3), lambda a: a**3),
    ("a+a^2", _mono(1, 2), lambda a: (np.abs(a) ** 2 - 2) * a),
    ("(a+)^2a", _mono(2, 1), lambda a: (np.abs(a) ** 2 - 2) * np.conj(a)),
    ("(a+)^3", _mono(3, 0), lambda a: np.conj(a) ** 3),
)
"""(label, normal-ordered operator, closed-form symbol).  The displacement
row is handled by ``symbol_of_displacement`` and ``displacement_table_form``."""


def displacement_table_form(beta: complex) -> Callable:
    beta = complex(beta)
    return lambda a: np.exp(0.5 * abs(beta) ** 2) * np.exp(beta * np.conj(a) - np.conj(beta) * a)


def normal_matrix(poly: OrderedPolynomial, trunc: FockTruncation) -> np.ndarray:
    return reorder(poly, NORMAL).matrix(trunc)
