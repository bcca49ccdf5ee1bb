import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from a2loop.hierarchy import (HierarchyContext, ResampleError, apply_identification, fused_T, fused_T_alt,
                              periodic_shift)
from a2loop.linkstate import Sector, sectors
from a2loop.relations import run_sampled, residual
from a2loop.scalars import RootOfUnity, f
from a2loop.transfer import build_elementary

from conftest import model

U = 0.31 - 0.22j


def test_base_cases():
    P = model(3)
    sec = Sector(3, 1, 0)
    ctx = HierarchyContext(sec, P, U)
    for k in (-2, 0, 3):
        assert np.allclose(fused_T(0, 0, k, ctx), ctx.fk(-1, k) * np.eye(sec.dim))
    assert np.allclose(fused_T(1, 0, 0, ctx), build_elementary((1, 0), U, sec, P).entries)
    assert np.allclose(fused_T(0, 1, 2, ctx), build_elementary((0, 1), U + 2 * P.lam, sec, P).entries)
    assert not fused_T(2, -1, 0, ctx).any()
    assert not fused_T(-1, 3, 1, ctx).any()


@pytest.mark.parametrize("N", [1, 2, 3])
def test_two_recursions_agree(N):
    P = model(N)
    for sec in sectors(N):
        ctx = HierarchyContext(sec, P, U)
        for m in range(6):
            for n in range(6 - m):
                a, b = fused_T(m, n, 0, ctx), fused_T_alt(m, n, 0, ctx)
                assert residual(a, b) < 1e-9, (sec, m, n)


def test_fused_rows_commute_with_elementary_rows():
    P = model(3)
    v = -0.4 + 0.15j
    for sec in sectors(3):
        ctx = HierarchyContext(sec, P, U)
        rows = [build_elementary(lab, v, sec, P).entries for lab in ((1, 0), (0, 1))]
        for m, n in ((2, 0), (1, 1), (0, 3), (2, 2)):
            T = ctx.T(m, n, 1)
            for R in rows:
                assert residual(T @ R, R @ T) < 1e-10


@given(m=st.integers(-6, 6), n=st.integers(-6, 6), k=st.integers(-3, 3), sigma=st.sampled_from([1, -1]))
def test_identification_lands_in_domain(m, n, k, sigma):
    (mm, nn, _), factor = apply_identification(m, n, k, sigma)
    assert mm >= -1 and nn >= -1
    assert factor in (1, -1)


def test_identification_fixed_points_and_examples():
    assert apply_identification(2, 1, 0, -1) == ((2, 1, 0), 1)
    (m, n, k), c = apply_identification(3, -2, 0, -1)
    assert (m, n, k) == (2, 0, 0) and c == 1
    (m, n, k), c = apply_identification(3, -2, 0, 1)
    assert c == -1


@settings(max_examples=20, deadline=None)
@given(m=st.integers(0, 3), n=st.integers(0, 3), k=st.integers(-2, 2))
def test_reflected_labels_evaluate_consistently(m, n, k):
    ctx = HierarchyContext(Sector(2, 0, 0), model(2), U)
    (mm, nn, kk), c = apply_identification(m, -n - 2, k, ctx.sigma)
    assert residual(ctx.T(m, -n - 2, k), c * ctx.T(mm, nn, kk)) < 1e-12


def test_periodic_shift():
    root = RootOfUnity(1, 4)
    for N in (1, 2, 3):
        nu = root.nu(N)
        assert periodic_shift(2, 1, 4, root, N) == ((2, 1, 0), nu)
        assert periodic_shift(2, 1, 8, root, N) == ((2, 1, 0), 1)
        u = 0.2 + 0.1j
        assert f(root.pprime + 1, u, root.lam, N) == pytest.approx(nu * f(1, u, root.lam, N))


def test_resample_signal_near_pole():
    P = model(2)
    ctx = HierarchyContext(Sector(2, 0, 0), P, 0.0)
    with pytest.raises(ResampleError):
        ctx.T(2, 0, 0)


def test_driver_resamples(rng):
    P = model(2)
    seen = []

    def fn(ctx):
        ctx.T(2, 0, 0)
        seen.append(ctx.u)
        return []

    run_sampled(fn, Sector(2, 0, 0), P, rng, 2, points=[0.0, 0.3 + 0.1j])
    assert len(seen) == 2 and 0.0 not in seen


def test_supplied_rows_are_used():
    P = model(2)
    sec = Sector(2, 0, 0)
    calls = []

    def rows(label, u):
        calls.append((label, u))
        return build_elementary(label, u, sec, P).entries * 2

    ctx = HierarchyContext(sec, P, U, rows=rows)
    assert np.allclose(ctx.T(1, 0, 0), 2 * build_elementary((1, 0), U, sec, P).entries)
    assert calls
