import numpy as np
import pytest

from ccrbrane.fock import FockTruncation, displacement_matrix
from ccrbrane.symbols import (PHIX_TABLE, DiagonalSymbol, displacement_table_form, normal_matrix,
                              smoothing_check, symbol_of, symbol_of_displacement)

POINTS = [0.0, 1.0, -1.3 + 0.7j, 1.4j, 1.2 - 1.5j, 2.0 * np.exp(0.4j)]


@pytest.mark.parametrize("row", PHIX_TABLE, ids=[r[0] for r in PHIX_TABLE])
def test_ordering_rule_matches_closed_form(row):
    _, poly, closed = row
    z = np.array(POINTS, complex)
    assert np.max(np.abs(symbol_of(poly)(z) - closed(z))) < 1e-12


@pytest.mark.parametrize("row", PHIX_TABLE, ids=[r[0] for r in PHIX_TABLE])
def test_smoothing_reproduces_fock_expectation(row):
    _, poly, _ = row
    tr = FockTruncation.build(64)
    op = normal_matrix(poly, tr)
    sym = symbol_of(poly)
    for a in POINTS:
        assert smoothing_check(sym, op, a)[0] <= 1e-6


@pytest.mark.parametrize("beta", [0.3 + 0.2j, -0.5j, 0.8])
def test_displacement_row(beta):
    sym = symbol_of_displacement(beta)
    z = np.array(POINTS, complex)
    assert np.max(np.abs(sym(z) - displacement_table_form(beta)(z))) < 1e-12
    op = displacement_matrix(beta, FockTruncation.build(64))
    for a in POINTS:
        assert smoothing_check(sym, op, a)[0] <= 1e-6


def test_table_row_count():
    # ten ordered monomials plus the displacement row
    assert len(PHIX_TABLE) + 1 == 11


def test_partials_analytic_vs_fd():
    sym = symbol_of_displacement(0.3 - 0.4j)
    fd = DiagonalSymbol(sym.eval)
    b = np.array([0.2 + 0.1j, -1.0 + 0.5j])
    for ga, gf in zip(sym.partials(b), fd.partials(b)):
        assert np.max(np.abs(ga - gf)) < 1e-8


def test_real_symbol_drops_imaginary_part():
    s = DiagonalSymbol(lambda b: b, real=True)
    assert np.isrealobj(s(np.array([1 + 2j])))
