import cmath
import math

import pytest
from hypothesis import given, strategies as st

from a2loop.scalars import (ModelParams, ParameterError, RootOfUnity, SingularityError, braid_eigenvalue,
                            chebyshev_u, closure_eigenvalues, f, fused_braid_eigenvalue, qbinom, qnum, s)

lams = st.floats(0.1, 3.0)
small = st.floats(-2.0, 2.0)


def test_s_special_values():
    assert s(0, 0, 0.7) == 0
    assert s(1, 0, 0.7) == pytest.approx(1)


@given(k=st.integers(-4, 6), x=small, y=small, lam=lams)
def test_s_flips_sign_after_pi(k, x, y, lam):
    u = complex(x, y)
    assert abs(s(k, u + math.pi, lam) + s(k, u, lam)) < 1e-9 * (1 + abs(s(k, u, lam)))


def test_s_rejects_degenerate_lambda():
    with pytest.raises(ParameterError):
        s(1, 0.2, 0.0)


def test_f_vanishes_at_lambda():
    assert abs(f(-1, 0.9, 0.9, 3)) < 1e-14


@given(k=st.integers(-3, 5), x=small, y=st.floats(-0.5, 0.5))
def test_f_periodic_at_root_of_unity(k, x, y):
    root = RootOfUnity(2, 5)
    u = complex(x, y)
    for N in (1, 2, 3):
        lhs = f(root.pprime + k, u, root.lam, N)
        rhs = root.nu(N) * f(k, u, root.lam, N)
        assert abs(lhs - rhs) < 1e-9 * (1 + abs(rhs))


def test_f_homogeneous_reduction():
    u = 0.3 + 0.1j
    assert f(2, u, 0.8, 3, xi=[0, 0, 0]) == pytest.approx(f(2, u, 0.8, 3))


def test_qnumbers():
    lam = 0.83
    assert qnum(1, lam) == pytest.approx(1)
    assert qnum(2, lam) == pytest.approx(2 * math.cos(lam))
    assert qbinom(4, 0, lam) == pytest.approx(1)
    assert qbinom(4, 2, lam) == pytest.approx(qnum(4, lam) * qnum(3, lam) / qnum(2, lam))


def test_qbinom_names_singular_q_number():
    lam = math.pi / 3
    with pytest.raises(SingularityError, match="3"):
        qbinom(4, 3, lam)


def test_chebyshev_small_orders():
    y1, y2 = 0.7 + 0.2j, 1.3 - 0.4j
    assert chebyshev_u(-1, y1, y2) == 0
    assert chebyshev_u(0, y1, y2) == pytest.approx(1)
    assert chebyshev_u(1, y1, y2) == pytest.approx(y1 + y2 + 1 / (y1 * y2))


@given(m=st.integers(0, 6), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_chebyshev_stable_near_coincidence(m, a, b):
    y1 = cmath.exp(1j * a)
    near = chebyshev_u(m, y1, y1 * (1 + 1e-10))
    exact = chebyshev_u(m, y1, y1, eps=1.0)
    assert abs(near - exact) < 1e-5 * (1 + abs(exact))
    y2 = cmath.exp(1j * b)
    if min(abs(y1 - y2), abs(y1 - 1 / (y1 * y2)), abs(y2 - 1 / (y1 * y2))) > 1e-3:
        assert chebyshev_u(m, y1, y2) == pytest.approx(chebyshev_u(m, y1, y2, eps=10.0), rel=1e-6, abs=1e-6)


def test_braid_eigenvalue_single_vacancy():
    lam, w = 0.83, cmath.exp(0.37j)
    phi = (math.pi - lam) / 3
    alpha = w + 1 / w
    # one vacant node: theta = (phi, -2 phi, phi)
    value = braid_eigenvalue((1, 0), +1, 0, 1, 0, lam, w)
    assert value == pytest.approx(alpha * cmath.exp(1j * phi) + cmath.exp(-2j * phi))


def test_braid_eigenvalue_is_character_at_trivial_twist():
    lam = 0.6
    for d, v, a in ((3, 0, 0), (1, 1, 1), (0, 2, 1)):
        y = braid_eigenvalue((1, 0), -1, d, v, a, lam, 1.0)
        assert y == pytest.approx(fused_braid_eigenvalue(1, 0, -1, d, v, a, lam, 1.0))


def test_fused_braid_small_labels():
    args = (+1, 1, 0, 1, 0.83, cmath.exp(0.2j))
    assert fused_braid_eigenvalue(0, 0, *args) == pytest.approx(1)
    u1 = fused_braid_eigenvalue(1, 0, *args)
    ub1 = fused_braid_eigenvalue(0, 1, *args)
    assert fused_braid_eigenvalue(1, 1, *args) == pytest.approx(u1 * ub1 - 1)


def test_closure_phases():
    root = RootOfUnity(1, 4)
    for d, v, a in ((0, 2, 1), (2, 0, 1), (1, 1, 0)):
        vals = closure_eigenvalues(d, v, a, root, 1.3)
        if v % 2 == 0:
            assert vals.phases[1] == pytest.approx(1)
        sigma = -1 if (d + v + 2 * a) % 2 else 1
        assert vals.J == pytest.approx(sigma ** (root.pprime - root.p) * sum(vals.phases))


@pytest.mark.parametrize("p,pp", [(2, 4), (3, 3), (0, 3)])
def test_root_of_unity_validation(p, pp):
    with pytest.raises(ParameterError):
        RootOfUnity(p, pp)


def test_model_params_defaults():
    P = ModelParams(0.83, 3, omega=2.0)
    assert P.alpha == pytest.approx(2.5)
    assert P.sigma == -1
    assert P.with_(omega=1.0).alpha == pytest.approx(2.0)
    with pytest.raises(ParameterError):
        ModelParams(0.83, 0)
