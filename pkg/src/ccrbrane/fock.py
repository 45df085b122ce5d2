"""Truncated single-mode Fock space: ladder operators, coherent vectors,
displacement operators and normal/anti-normal reordering of monomials."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial
from typing import Iterable

import numpy as np
from scipy.linalg import expm

NORMAL = "normal"
ANTI_NORMAL = "anti-normal"
_ORDERINGS = (NORMAL, ANTI_NORMAL)


@dataclass(frozen=True)
class FockTruncation:
    """Ladder operators on span{|0>, ..., |cutoff-1>}."""

    cutoff: int
    a: np.ndarray = field(repr=False)
    a_dag: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, cutoff: int) -> "FockTruncation":
        if int(cutoff) < 1:
            raise ValueError("cutoff must be a positive integer")
        cutoff = int(cutoff)
        a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)
        a.setflags(write=False)
        ad = a.conj().T.copy()
        ad.setflags(write=False)
        return cls(cutoff, a, ad)

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.cutoff, dtype=complex)

    @property
    def number(self) -> np.ndarray:
        return np.diag(np.arange(self.cutoff, dtype=float)).astype(complex)


@dataclass(frozen=True)
class CoherentVector:
    alpha: complex
    amplitudes: np.ndarray = field(repr=False)

    @property
    def tail_mass(self) -> float:
        """Probability missing from the truncated expansion."""
        return max(0.0, 1.0 - float(np.vdot(self.amplitudes, self.amplitudes).real))


def fock_amplitudes(beta, cutoff: int) -> np.ndarray:
    """Normalized amplitudes e^{-|b|^2/2} b^n / sqrt(n!) for an array of b.

    Built by the stable recursion c_{n} = c_{n-1} * b / sqrt(n), so large n
    never overflows.  Returns shape (cutoff,) + shape(beta).
    """
    beta = np.asarray(beta, dtype=complex)
    out = np.empty((cutoff,) + beta.shape, dtype=complex)
    out[0] = np.exp(-0.5 * np.abs(beta) ** 2)
    for n in range(1, cutoff):
        out[n] = out[n - 1] * beta / np.sqrt(n)
    return out


def coherent_vector(alpha: complex, cutoff: int) -> CoherentVector:
    if int(cutoff) < 1:
        raise ValueError("cutoff must be >= 1")
    amps = fock_amplitudes(complex(alpha), int(cutoff))
    amps.setflags(write=False)
    return CoherentVector(complex(alpha), amps)


def overlap(beta: complex, gamma: complex) -> complex:
    """<beta|gamma> for normalized coherent states."""
    beta, gamma = np.asarray(beta, dtype=complex), np.asarray(gamma, dtype=complex)
    return np.exp(-0.5 * np.abs(beta - gamma) ** 2 + 1j * np.imag(np.conj(beta) * gamma))


def displacement_matrix(alpha: complex, trunc: FockTruncation) -> np.ndarray:
    """expm(alpha a^+ - conj(alpha) a) on the truncated space."""
    alpha = complex(alpha)
    return expm(alpha * trunc.a_dag - np.conj(alpha) * trunc.a)


def displacement_safe_block(alpha: complex, cutoff: int) -> int:
    """Size of the leading block where the truncated D(alpha) is trustworthy.

    The edge error spreads down by about |alpha| sqrt(cutoff) levels per unit
    of accuracy lost; the margin keeps the block below ~1e-10 in practice.
    """
    r = abs(alpha)
    return max(0, cutoff - int(np.ceil(4 * r**2 + 3 * r * np.sqrt(cutoff) + 10)))


# ---------------------------------------------------------------------------
# ordered monomials


def _merge(terms: Iterable[tuple[int, int, object]]) -> tuple[tuple[int, int, object], ...]:
    acc: dict[tuple[int, int], object] = {}
    for p, q, c in terms:
        if p < 0 or q < 0:
            raise ValueError("powers must be non-negative")
        key = (int(p), int(q))
        acc[key] = acc[key] + c if key in acc else c
    return tuple((p, q, c) for (p, q), c in sorted(acc.items()) if c != 0)


@dataclass(frozen=True)
class OrderedPolynomial:
    """Sum of c * (a^+)^p a^q (normal) or c * a^q (a^+)^p (anti-normal).

    Terms are stored as (p, q, c) with p the power of a^+ and q the power of
    a.  Coefficient arithmetic is whatever the coefficient type provides, so
    ints and Fractions reorder exactly.
    """

    terms: tuple
    ordering: str = NORMAL

    def __post_init__(self):
        if self.ordering not in _ORDERINGS:
            raise ValueError(f"unknown ordering {self.ordering!r}")
        object.__setattr__(self, "terms", _merge(self.terms))

    @classmethod
    def monomial(cls, p: int, q: int, coeff=1, ordering: str = NORMAL):
        return cls(((p, q, coeff),), ordering)

    @classmethod
    def identity(cls, ordering: str = NORMAL):
        return cls(((0, 0, 1),), ordering)

    def __add__(self, other: "OrderedPolynomial") -> "OrderedPolynomial":
        if other.ordering != self.ordering:
            other = reorder(other, self.ordering)
        return OrderedPolynomial(self.terms + other.terms, self.ordering)

    def scale(self, c) -> "OrderedPolynomial":
        return OrderedPolynomial(tuple((p, q, c * k) for p, q, k in self.terms), self.ordering)

    def matrix(self, trunc: FockTruncation) -> np.ndarray:
        """Matrix of the operator as the literal product in its ordering.

        Rows/columns near the cutoff carry truncation error whenever a^+ acts
        before a, i.e. for anti-normal words.
        """
        a, ad = trunc.a, trunc.a_dag
        out = np.zeros((trunc.cutoff, trunc.cutoff), dtype=complex)
        for p, q, c in self.terms:
            ap = np.linalg.matrix_power(ad, p)
            aq = np.linalg.matrix_power(a, q)
            out += complex(c) * (ap @ aq if self.ordering == NORMAL else aq @ ap)
        return out


def reorder(poly: OrderedPolynomial, target: str) -> OrderedPolynomial:
    """Rewrite poly in the target ordering using [a, a^+] = 1.

    a^q a^+^p = sum_k k! C(p,k) C(q,k) a^+^{p-k} a^{q-k}, and the inverse
    relation carries an extra (-1)^k.
    """
    if target not in _ORDERINGS:
        raise ValueError(f"unknown ordering {target!r}")
    if poly.ordering == target:
        return poly
    sign = -1 if poly.ordering == NORMAL else 1
    out = []
    for p, q, c in poly.terms:
        for k in range(min(p, q) + 1):
            w = factorial(k) * comb(p, k) * comb(q, k) * sign**k
            out.append((p - k, q - k, c * w))
    return OrderedPolynomial(tuple(out), target)
