"""Large-ell regression targets beyond the acceptance lines: the corrected
torus forms and the chart-path reading of the Moebius loop formula."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
import closed_forms as cf  # noqa: E402

from ccrbrane.branes import make_brane, resolve  # noqa: E402
from ccrbrane.engine import connection, deformation_field, density_matrix  # noqa: E402
from ccrbrane.transport import _line_integral, make_path, sample_connection  # noqa: E402

TORUS_PTS = [(0.3, 0.7), (1.0, 2.0), (2.0, -1.0)]


@pytest.mark.parametrize("ell", [50.0, 100.0])
def test_torus_rederived_deformation_potential(ell, fast_quad):
    b = make_brane("torus", R=2, r=1, ell=ell)
    for t1, t2 in TORUS_PTS:
        cs = connection(b, resolve(b, (t1, t2)), fast_quad)
        assert np.max(np.abs(cs.A_def - cf.torus_a_def_rederived(t2, 2, 1))) < 10 / ell**2


@pytest.mark.parametrize("ell", [50.0, 100.0])
def test_torus_coupling_second_component_carries_i(ell, fast_quad):
    b = make_brane("torus", R=2, r=1, ell=ell)
    for t1, t2 in TORUS_PTS:
        cs = connection(b, resolve(b, (t1, t2)), fast_quad)
        printed = cf.torus(t1, t2, 2, 1)[3]
        assert abs(cs.C[0] - printed[0]) < 10 / ell**2
        assert abs(cs.C[1] - 1j * printed[1]) < 10 / ell**2


def test_torus_deformation_field_is_imaginary(fast_quad):
    b = make_brane("torus", R=2, r=1, ell=100)
    for t1 in (0.0, 1.3):
        for t2 in np.linspace(-3, 3, 7):
            assert abs(deformation_field(b, resolve(b, (t1, t2)), fast_quad).real) < 1e-12
        for t2 in (0.0, np.pi):
            assert abs(deformation_field(b, resolve(b, (t1, t2)), fast_quad)) < 1e-12


@pytest.mark.parametrize("p", [1, 3])
def test_mobius_loop_formula_holds_on_chart_paths(p, fast_quad):
    # u held fixed while theta advances by 2 pi p: closed in the chart only for even p
    ell = 100.0
    b = make_brane("mobius", R=1, Lring=1, ell=ell)
    c = np.column_stack([np.full(201, 1.0), np.pi / 2 + 2 * np.pi * p * np.linspace(0, 1, 201)])
    path = make_path(b, c)
    assert not path.closed
    vals = np.array([s.A_topo for s in sample_connection(path, fast_quad)])
    value, _ = _line_integral(vals, c)
    assert abs(value - cf.mobius_loop_topo(p, 1.0, np.pi / 2, ell)) < 10 / ell**2


def test_mobius_entropy_profile(fast_quad):
    b = make_brane("mobius", R=1, Lring=1, ell=40)
    from ccrbrane.engine import renyi_entropy
    for th in np.linspace(0, np.pi, 5):
        s = renyi_entropy(density_matrix(b, resolve(b, (0.0, th)), fast_quad))
        assert abs(s - cf.mobius_entropy(th)) < 10 / 40**2
