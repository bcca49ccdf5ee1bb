import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from a2loop import faceops
from a2loop.linkstate import (DiagramSum, LinkState, Sector, SectorError, act_on_state, compose, enumerate_states,
                              full_basis, identity_patch, patch, residual, sectors)
from a2loop.scalars import ModelParams

BETA = 2 * math.cos(0.83)


@pytest.mark.parametrize("N,d,v,count", [(3, 3, 0, 1), (3, 0, 3, 1), (4, 0, 0, 6), (2, 0, 0, 2), (4, 2, 0, 4)])
def test_state_counts(N, d, v, count):
    assert len(enumerate_states(Sector(N, d, v))) == count


@pytest.mark.parametrize("N", range(1, 9))
def test_counts_match_binomial_formula(N):
    for sec in sectors(N):
        a = (N - sec.d - sec.v) // 2
        assert len(enumerate_states(sec)) == math.comb(N, sec.v) * math.comb(N - sec.v, a)


@pytest.mark.parametrize("bad", [(3, 1, 1), (2, 3, 0), (0, 0, 0)])
def test_invalid_sectors(bad):
    with pytest.raises(SectorError):
        Sector(*bad)


def test_full_basis_sizes():
    assert len(full_basis(1)) == 2
    assert len(full_basis(2)) == 6
    with pytest.raises(SectorError):
        full_basis(0)


def test_states_never_enclose_defects():
    for sec in sectors(6):
        for st_ in enumerate_states(sec):
            for i, j in st_.pairs:
                inside = st_.roles[i + 1:j] if i < j else st_.roles[i + 1:] + st_.roles[:j]
                outside = st_.roles[j + 1:] + st_.roles[:i] if i < j else st_.roles[j + 1:i]
                assert "|" not in inside or "|" not in outside


def _face_sum(rng):
    u = complex(rng.uniform(-1, 1), rng.uniform(-0.3, 0.3))
    return faceops.face((1, 0), u, ModelParams(0.83, 1)).as_sum()


def test_identity_composes_trivially(rng):
    X = _face_sum(rng)
    assert residual(compose(identity_patch(2), X, 2, BETA), X) < 1e-15
    assert residual(compose(X, identity_patch(2), 2, BETA), X) < 1e-15


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_compose_associative(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (_face_sum(rng) for _ in range(3))
    left = compose(compose(A, B, 2, BETA), C, 2, BETA)
    right = compose(A, compose(B, C, 2, BETA), 2, BETA)
    assert residual(left, right) < 1e-12


def test_closed_loop_gives_beta():
    cup = DiagramSum(2, {patch("11", (0, 1)): 1.0})
    loop = compose(DiagramSum(2, {patch("11", (0, 1)): 1.0}), cup, 2, BETA)
    assert loop.coefficient(patch("")) == pytest.approx(BETA)


def test_arc_meeting_vacancy_vanishes():
    arc = DiagramSum(2, {patch("11", (0, 1)): 1.0})
    empty = DiagramSum(2, {patch("00"): 1.0})
    assert compose(arc, empty, 2, BETA).pruned().terms == {}


def test_canonical_form_ignores_insertion_order():
    terms = [(patch("1100", (0, 1)), 0.5), (patch("0000"), 1.5j), (patch("1111", (0, 3), (1, 2)), -2.0)]
    one = DiagramSum(4)
    for k, c in terms:
        one.add(k, c)
    shuffled = terms[:]
    random.Random(3).shuffle(shuffled)
    two = DiagramSum(4)
    for k, c in shuffled:
        two.add(k, c)
    assert one.canonical() == two.canonical()
    assert DiagramSum(4, one.canonical()).canonical() == one.canonical()


def test_identity_row_acts_trivially():
    for sec in sectors(4):
        for st_ in enumerate_states(sec):
            ident = next(iter(k for k in identity_patch(4).terms
                              if tuple(k.occupied[:4]) == st_.occupied))
            res = act_on_state(ident, st_)
            assert res.target == st_.roles
            assert (res.omega_power, res.n_beta, res.n_alpha) == (0, 0, 0)


def test_row_action_preserves_vacancies():
    from a2loop.transfer import elementary_network

    net = elementary_network(((1, 0),) * 3)
    for dgm in net.diagrams:
        for sec in sectors(3):
            for st_ in enumerate_states(sec):
                res = act_on_state(dgm, st_)
                if res is not None:
                    assert LinkState(res.target).sector.v == sec.v


def test_state_sector_roundtrip():
    for sec in sectors(5):
        assert all(s.sector == sec for s in enumerate_states(sec))
    assert list(itertools.chain.from_iterable(enumerate_states(s) for s in sectors(3))) == [b for _, b in full_basis(3)]
