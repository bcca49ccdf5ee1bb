import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from a2loop import rsos
from a2loop.relations import verify_fusion_hierarchy
from a2loop.scalars import ParameterError


def test_lattice_needs_pprime_five():
    with pytest.raises(ParameterError):
        rsos.lattice(4)
    assert len(rsos.lattice(5)) == 6
    assert len(rsos.lattice(6)) == 10


def test_params_need_multiple_of_three():
    with pytest.raises(ParameterError):
        rsos.RSOSParams(1, 5, 4)
    with pytest.raises(ParameterError):
        rsos.RSOSParams(2, 4, 3)
    assert rsos.RSOSParams(2, 5, 6).N == 6


@pytest.mark.parametrize("pprime", [5, 6, 7])
def test_hecke_relations(pprime):
    res = rsos.hecke_residuals(pprime, 5)
    assert max(res.values()) < 1e-11, res


def test_cyclic_paths_close():
    space = rsos.cyclic_paths(5, 3)
    assert space.dim > 0
    for p in space.paths:
        for a, b in zip(p, p[1:] + p[:1]):
            assert rsos.step_of(a, b) is not None


def test_row_at_zero_is_translation():
    params = rsos.RSOSParams(2, 5, 3)
    space = rsos.cyclic_paths(5, 3)
    T0 = rsos.rsos_row((1, 0), 0.0, space, params.lam)
    assert np.allclose(T0, rsos.translation(space), atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_rows_commute(a, b, c, d):
    params = rsos.RSOSParams(2, 5, 3)
    u, v = complex(a, b), complex(c, d)
    T = rsos.rsos_transfer(u, 3, params)
    Tb = rsos.rsos_transfer(v, 3, params, label=(0, 1))
    assert np.allclose(T @ Tb, Tb @ T, atol=1e-10 * (1 + np.abs(T).max() * np.abs(Tb).max()))


@pytest.mark.parametrize("p,pprime", [(1, 5), (2, 5)])
def test_closure(p, pprime):
    params = rsos.RSOSParams(p, pprime, 3)
    points = rsos.sample_points(np.random.default_rng(3), 3)
    consts, checks = rsos.verify_rsos_closure(points, params)
    bad = [c for c in checks if not c.passed]
    assert not bad, [(c.id, c.residual) for c in bad]
    ids = {c.id for c in checks}
    assert {"rsos.B-cube", "rsos.Btilde-cube", "rsos.closure-m", "rsos.closure-n"} <= ids
    assert consts.J.shape == consts.K.shape == (rsos.cyclic_paths(pprime, 3).dim,) * 2


def test_loop_hecke():
    checks = rsos.verify_loop_hecke(N=4)
    assert all(c.passed for c in checks), [(c.id, c.residual) for c in checks]


def test_fusion_hierarchy_on_paths():
    params = rsos.RSOSParams(2, 5, 3)
    ctx = rsos.rsos_context(0.3 + 0.2j, params)
    checks = verify_fusion_hierarchy(ctx, max_level=3)
    assert all(c.passed for c in checks)


def test_spectra_rows_name_the_model():
    params = rsos.RSOSParams(2, 5, 3)
    rows = rsos.spectra_rows(params, [0.3 + 0.1j])
    space = rsos.cyclic_paths(5, 3)
    assert len(rows) == 2 * space.dim
    assert rows[0][0] == "rsos(p=2,p'=5,N=3)"
    assert {r[1] for r in rows} == {"T10", "T01"}
