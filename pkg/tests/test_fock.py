import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccrbrane.fock import (ANTI_NORMAL, NORMAL, FockTruncation, OrderedPolynomial, coherent_vector,
                           displacement_matrix, displacement_safe_block, fock_amplitudes, overlap, reorder)

complexes = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


def test_ladder_commutator_away_from_edge():
    tr = FockTruncation.build(20)
    comm = tr.a @ tr.a_dag - tr.a_dag @ tr.a
    assert np.allclose(comm[:-1, :-1], np.eye(19))
    assert np.allclose(tr.number, tr.a_dag @ tr.a)


def test_truncation_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        FockTruncation.build(0)


@given(complexes)
@settings(max_examples=30, deadline=None)
def test_coherent_vector_is_eigenvector(alpha):
    tr = FockTruncation.build(60)
    v = coherent_vector(alpha, 60)
    assert v.tail_mass < 1e-12
    r = tr.a @ v.amplitudes - alpha * v.amplitudes
    assert np.max(np.abs(r[:-1])) < 1e-10


@given(complexes, complexes)
@settings(max_examples=30, deadline=None)
def test_overlap_matches_vectors(b, g):
    vb, vg = coherent_vector(b, 60).amplitudes, coherent_vector(g, 60).amplitudes
    assert abs(np.vdot(vb, vg) - overlap(b, g)) < 1e-10


def test_large_index_recursion_is_finite():
    amps = fock_amplitudes(np.array([30.0 + 10j]), 2000)
    assert np.all(np.isfinite(amps))


def test_displacement_against_bch_and_action():
    tr = FockTruncation.build(80)
    beta = 0.4 - 0.3j
    D = displacement_matrix(beta, tr)
    k = displacement_safe_block(beta, 80)
    # D|0> = |beta>
    assert np.allclose(D[:k, 0], coherent_vector(beta, 80).amplitudes[:k], atol=1e-10)
    # columns of the safe block stay orthonormal
    U = D[:, :k]
    assert np.max(np.abs(U.conj().T @ U - np.eye(k))) < 1e-8
    # BCH: D = e^{-|b|^2/2} e^{b a+} e^{-conj(b) a}
    from scipy.linalg import expm
    bch = np.exp(-abs(beta) ** 2 / 2) * expm(beta * tr.a_dag) @ expm(-np.conj(beta) * tr.a)
    assert np.max(np.abs((bch - D)[:k, :k])) < 1e-8


@pytest.mark.parametrize("p,q", [(0, 0), (1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (3, 2), (2, 3)])
def test_reorder_matches_matrix_products(p, q):
    tr = FockTruncation.build(40)
    anti = OrderedPolynomial.monomial(p, q, 1.5 - 0.5j, ANTI_NORMAL)
    norm = reorder(anti, NORMAL)
    k = 40 - max(p, q) - 2
    assert np.max(np.abs(anti.matrix(tr) - norm.matrix(tr))[:k, :k]) < 1e-9
    back = reorder(norm, ANTI_NORMAL)
    assert back.ordering == ANTI_NORMAL
    assert np.max(np.abs(back.matrix(tr) - anti.matrix(tr))) < 1e-9


def test_reorder_aa_dag():
    # a a+ = a+ a + 1
    anti = OrderedPolynomial.monomial(1, 1, 1, ANTI_NORMAL)
    norm = reorder(anti, NORMAL)
    assert dict(((p, q), c) for p, q, c in norm.terms) == {(1, 1): 1, (0, 0): 1}


def test_polynomial_algebra():
    x = OrderedPolynomial.monomial(1, 0) + OrderedPolynomial.monomial(1, 0)
    assert x.terms == ((1, 0, 2),)
    with pytest.raises(ValueError):
        OrderedPolynomial.monomial(0, 0, 1, "weyl")
