import cmath
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from a2loop import faceops
from a2loop.faceops import CORNER_ES, CORNER_WN, EMPTY
from a2loop.linkstate import DiagramSum, residual
from a2loop.scalars import ModelParams, s

from conftest import LAM, model

spectral = st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False)


def test_seven_tiles_per_label():
    for lab in faceops.LABELS:
        assert len(set(faceops.tiles(lab))) == 7


def test_face_at_zero_is_identity():
    fc = faceops.face((1, 0), 0.0, ModelParams(LAM, 1)).as_sum()
    # two dilute strands, W to N and E to S
    ident = DiagramSum(4, {EMPTY: 1.0, faceops.LOOPS_ID: 1.0, CORNER_WN: 1.0, CORNER_ES: 1.0})
    assert residual(fc, ident) < 1e-15


def test_empty_tile_weight():
    P = ModelParams(LAM, 1)
    u = 0.4 + 0.2j
    assert faceops.face((1, 0), u, P).coefficient(EMPTY) == pytest.approx(s(1, -u, LAM))
    assert abs(faceops.face((1, 0), LAM, P).coefficient(EMPTY)) < 1e-15


def test_gauge_tiles_only_carry_t():
    u = 0.3 - 0.1j
    a = faceops.face((1, 0), u, ModelParams(LAM, 1, t=2.0))
    b = faceops.face((1, 0), u, ModelParams(LAM, 1))
    for tile in faceops.tiles((1, 0)):
        ratio = a.coefficient(tile) / b.coefficient(tile)
        expected = 2.0 if tile == CORNER_WN else 0.5 if tile == CORNER_ES else 1.0
        assert ratio == pytest.approx(expected)


@settings(max_examples=30, deadline=None)
@given(u=spectral, v=spectral)
def test_yang_baxter(u, v):
    res = faceops.check_ybe(u, v, ModelParams(LAM, 1))
    assert max(res.values()) < 1e-11


def test_yang_baxter_degenerate_points():
    P = ModelParams(LAM, 1)
    assert max(faceops.check_ybe(0.0, 0.4, P).values()) < 1e-12
    assert max(faceops.check_ybe(0.4 + 0.1j, 0.4 + 0.1j, P).values()) < 1e-12


@settings(max_examples=30, deadline=None)
@given(u=spectral, lam=st.floats(0.2, 2.9))
def test_inversion_scalars(u, lam):
    res = faceops.check_inversion(u, ModelParams(lam, 1))
    assert res.residual_direct < 1e-11 and res.residual_crossed < 1e-11
    assert res.scalar_direct == pytest.approx(s(1, u, lam) * s(1, -u, lam), abs=1e-9)
    assert res.scalar_crossed == pytest.approx(s(0, u, lam) * s(3, -u, lam), abs=1e-9)


def test_inversion_at_zero():
    assert faceops.check_inversion(0.0, ModelParams(LAM, 1)).scalar_direct == pytest.approx(1)


def test_face_rank():
    P = ModelParams(LAM, 1)
    assert faceops.check_face_rank_at_lambda(P) <= 3
    assert faceops.face_rank(0.37 + 0.2j, P) == 4
    assert faceops.face_rank(0.0, P) == 4


@pytest.mark.parametrize("label", faceops.LABELS)
@pytest.mark.parametrize("sign", [1, -1])
def test_braid_limit_converges(label, sign):
    assert faceops.braid_limit_residual(label, sign, ModelParams(LAM, 1), height=40.0) < 1e-12


def test_braid_faces_have_five_tiles_with_conjugate_phases():
    P = ModelParams(LAM, 1)
    plus = faceops.braid_face((1, 0), 1, P).as_sum().pruned()
    minus = faceops.braid_face((1, 0), -1, P).as_sum().pruned()
    assert len(plus.terms) == 5
    phases = sorted(round(cmath.phase(c), 12) for c in plus.terms.values())
    assert sorted(round(-cmath.phase(c), 12) for c in minus.terms.values()) == phases


def test_face_json_roundtrip():
    data = json.loads(faceops.face((0, 1), 0.2, model(1)).to_json())
    assert len(data["tiles"]) == 7
    weights = np.array([complex(*w["value"]) for w in data["tiles"]])
    assert np.all(np.isfinite(weights))
