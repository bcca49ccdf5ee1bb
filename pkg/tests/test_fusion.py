import cmath
import math

import pytest
from hypothesis import given, settings, strategies as st

from a2loop import faceops, fusion
from a2loop.hierarchy import HierarchyContext
from a2loop.linkstate import residual, sectors
from a2loop.relations import residual as mat_residual
from a2loop.scalars import ModelParams, SingularityError, qnum

from conftest import LAM, model

Q = cmath.exp(1j * LAM)
BETA = 2 * math.cos(LAM)


def test_strand_closures():
    assert fusion.bubble_value(Q, BETA) == pytest.approx(qnum(2, LAM))
    assert fusion.wavy_loop_value(Q, BETA) == pytest.approx(qnum(3, LAM))


def test_first_projectors():
    assert residual(fusion.projector(1, 0, LAM).body, fusion.identity(1)) == 0
    E = fusion.then(fusion.merge(), fusion.split(Q), 1, BETA)
    expected = fusion.identity(2) - E * (1 / qnum(2, LAM).real)
    assert residual(fusion.projector(2, 0, LAM).body, expected) < 1e-15
    cc = fusion.then(fusion.cap(), fusion.cup(Q), 0, BETA)
    expected = fusion.identity(2) - cc * (1 / qnum(3, LAM).real)
    assert residual(fusion.projector(1, 1, LAM).body, expected) < 1e-15


@pytest.mark.parametrize("label", fusion.LABELS)
def test_projector_identities(label):
    checks = fusion.verify_projector_identities(*label, LAM)
    assert checks
    bad = [(c.id, c.sector, c.residual) for c in checks if not c.passed]
    assert not bad


def test_column_reversed_group_is_mirror_image():
    P20 = fusion.projector(2, 0, LAM).body
    assert residual(fusion.projector(0, 2, LAM).body, fusion.mirror(P20, 2)) == 0


@settings(max_examples=10, deadline=None)
@given(lam=st.floats(0.3, 1.2))
def test_projectors_idempotent_for_generic_lambda(lam):
    for m, n in ((2, 0), (1, 1), (2, 1)):
        P = fusion.projector(m, n, lam).body
        assert residual(fusion.then(P, P, m + n, 2 * math.cos(lam)), P) < 1e-10


def test_projector_singular_at_root():
    with pytest.raises(SingularityError):
        fusion.projector(2, 0, math.pi / 2)


def test_scope_cap():
    with pytest.raises(ValueError):
        fusion.projector(2, 2, LAM)
    with pytest.raises(ValueError):
        fusion.projector(0, 0, LAM)


def test_push_through_relations():
    checks = fusion.verify_push_through(0.27 + 0.13j, LAM)
    assert {c.id for c in checks} >= {"fusion.push-merge", "fusion.push-cap-mixed", "fusion.push-cap-crossed",
                                      "fusion.push-projector"}
    assert all(c.passed for c in checks), [(c.id, c.sector, c.residual) for c in checks if not c.passed]


def test_fused_face_of_unit_label_is_the_face():
    P = model(1)
    u = 0.3 + 0.2j
    for lab in faceops.LABELS:
        fc = fusion.fused_face(*lab, u, P)
        ref = faceops.face(lab, u, P).as_sum()
        # slot order of the fused face is W, N, E, S for a single level
        assert residual(fc, ref) < 1e-14


@pytest.mark.parametrize("label", [(2, 0), (1, 1), (0, 2), (2, 1)])
def test_fused_face_weights_are_three_term_laurent(label):
    pts = [0.1 + 0.2j, 0.7 - 0.1j, 1.3 + 0.3j, -0.4 + 0.1j, 2.0 - 0.2j]
    assert fusion.laurent_fit(*label, model(1), pts)["residual"] < 1e-12


@pytest.mark.parametrize("N", [1, 2])
def test_direct_rows_match_hierarchy(N):
    P = model(N)
    for sec in sectors(N):
        for m, n in fusion.LABELS:
            u = 0.41 - 0.23j
            direct = fusion.direct_fused_transfer(m, n, u, sec, P)
            assert direct.label == (m, n)
            assert mat_residual(direct.entries, HierarchyContext(sec, P, u).T(m, n, 0)) < 1e-9


def test_direct_rows_size_cap():
    sec = sectors(4)[0]
    with pytest.raises(fusion.SizeError):
        fusion.direct_fused_transfer(2, 0, 0.3, sec, ModelParams(LAM, 4))


def test_direct_rows_built_in_trivial_gauge():
    # elementary rows do not depend on t, so neither does the hierarchy;
    # direct rows are built at t = 1 and must agree with it for any t
    sec = sectors(2)[1]
    u = 0.3 + 0.1j
    a = fusion.direct_fused_transfer(1, 1, u, sec, model(2, t=2.0)).entries
    b = HierarchyContext(sec, model(2, t=2.0), u).T(1, 1, 0)
    assert mat_residual(a, b) < 1e-9
