"""Functional identities of the transfer matrices as numerical checks.

Each ``verify_*`` function evaluates a family of identities at the sample
point carried by a :class:`HierarchyContext` (or at several of them) and
returns :class:`IdentityCheck` records.  Records of the same identity taken at
different points are folded together by :func:`merge_checks`, keeping the
worst residual.

Identity ids are descriptive; ``role`` marks what a failure would mean:

* ``model``: the identity is a property of the lattice model itself, so a
  failure points at the face operators or the standard-module action;
* ``implementation``: the identity follows algebraically from the recursion
  used to define the fused matrices, so a failure points at the recursion
  code;
* ``consequence``: everything else (rearrangements, closed forms).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import faceops
from .hierarchy import HierarchyContext, ResampleError, numeric_braid_limit
from .linkstate import DiagramSum, Sector, enumerate_states, patch, sectors
from .scalars import (ModelParams, RootOfUnity, braid_eigenvalue, closure_eigenvalues,
                      fused_braid_eigenvalue, random_spectral, s)
from .transfer import build_braid, build_elementary, build_full_space

TOL = 1e-9
TOL_CLOSURE = 1e-8
MAX_RESAMPLE = 20


def residual(lhs, rhs) -> float:
    """Relative distance ||L - R|| / (||L|| + ||R|| + 1); inf if not finite."""
    left = np.asarray(lhs, dtype=complex)
    right = np.asarray(rhs, dtype=complex)
    diff = np.linalg.norm(left - right)
    if not np.isfinite(diff):
        return math.inf
    return float(diff / (np.linalg.norm(left) + np.linalg.norm(right) + 1.0))


def _point(u) -> list[float]:
    u = complex(u)
    return [round(u.real, 15), round(u.imag, 15)]


@dataclass
class IdentityCheck:
    id: str
    sector: str
    residual: float
    tol: float
    points: list = field(default_factory=list)
    role: str = "consequence"
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        detail = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in self.detail.items()}
        return {
            "id": self.id,
            "sector": self.sector,
            "role": self.role,
            "points": [_point(p) for p in self.points],
            "residual": float(self.residual),
            "tol": self.tol,
            "verdict": self.verdict,
            "detail": detail,
        }


def merge_checks(checks: Iterable[IdentityCheck]) -> list[IdentityCheck]:
    """Fold records of the same (id, sector), keeping the worst residual."""
    groups: dict[tuple[str, str], IdentityCheck] = {}
    for c in checks:
        key = (c.id, c.sector)
        g = groups.get(key)
        if g is None:
            groups[key] = IdentityCheck(c.id, c.sector, c.residual, c.tol, list(c.points), c.role, dict(c.detail))
            continue
        g.residual = max(g.residual, c.residual)
        g.tol = min(g.tol, c.tol)
        g.points.extend(p for p in c.points if p not in g.points)
        for k, v in c.detail.items():
            if isinstance(v, (int, float, np.floating)) and isinstance(g.detail.get(k), (int, float, np.floating)):
                g.detail[k] = max(g.detail[k], v)
            else:
                g.detail.setdefault(k, v)
    return sorted(groups.values(), key=lambda c: (c.id, c.sector))


def _check(id_, ctx, lhs, rhs, tol, role="consequence", **detail) -> IdentityCheck:
    return IdentityCheck(id_, ctx.sector.label(), residual(lhs, rhs), tol, [ctx.u], role, detail)


def _check_terms(id_, ctx, lhs, terms, tol, role="consequence", **detail) -> IdentityCheck:
    """Like ``_check`` for a right side given as a list of summands.

    The error is measured against the summand sizes, since the plain relative
    residual loses its meaning when the left side vanishes identically and the
    summands cancel.  The plain value is kept under ``plain_residual``.
    """
    rhs = sum(terms)
    diff = np.linalg.norm(np.asarray(lhs, dtype=complex) - rhs)
    size = np.linalg.norm(lhs) + sum(np.linalg.norm(t) for t in terms) + 1.0
    r = float(diff / size) if np.isfinite(diff) else math.inf
    return IdentityCheck(id_, ctx.sector.label(), r, tol, [ctx.u], role,
                         dict(detail, plain_residual=residual(lhs, rhs)))


def proof_point_count(N: int, factors: int = 4) -> int:
    """Points certifying a Laurent-polynomial identity with up to ``factors`` row factors."""
    return 2 * N * factors + 1


# ---------------------------------------------------------------------------
# fusion hierarchy


def verify_fusion_hierarchy(ctx: HierarchyContext, max_level: int = 5, tol: float = TOL) -> list[IdentityCheck]:
    T, f, sg = ctx.T, ctx.fk, ctx.sigma
    out = []
    for m in range(0, max_level):
        out.append(_check("fusion.m-step", ctx, T(m, 0, 0) @ T(1, 0, m),
                          f(m, 0) * T(m - 1, 1, 0) + f(m - 1, 0) * T(m + 1, 0, 0), tol, "model", m=m))
    for n in range(0, max_level):
        out.append(_check("fusion.n-step", ctx, T(0, 1, 0) @ T(0, n, 1),
                          sg * f(-1, 0) * T(1, n - 1, 1) + f(0, 0) * T(0, n + 1, 0), tol, "model", n=n))
    for m in range(0, max_level + 1):
        for n in range(0, max_level + 1 - m):
            out.append(_check("fusion.mixed", ctx, T(m, 0, 0) @ T(0, n, m),
                              f(m - 1, 0) * T(m, n, 0) + sg * T(m - 1, 0, 0) @ T(0, n - 1, m + 1), tol, "model"))
    for m in range(-3, max_level + 1):
        for n in range(-3, max_level + 1):
            if m + n > max_level:
                continue
            s_ = m + n
            out.append(_check_terms("fusion.column-expansion", ctx, f(s_ - 2, 0) * T(m, n, 0),
                                    [T(m, n - 1, 0) @ T(0, 1, s_ - 1), -sg * T(m, n - 2, 0) @ T(1, 0, s_ - 1),
                                     f(s_ - 1, 0) * T(m, n - 3, 0)], tol, "model"))
            if m < 0 or n < 0:
                out.append(_check_terms("fusion.row-expansion-extended", ctx, f(0, 0) * T(m, n, 0),
                                        [T(1, 0, 0) @ T(m - 1, n, 1), -T(0, 1, 0) @ T(m - 2, n, 2),
                                         sg * f(-1, 0) * T(m - 3, n, 3)], tol, "implementation"))
    for m in range(0, max_level + 1):
        for n in range(0, max_level + 1 - m):
            out.append(_check("fusion.recursions-agree", ctx, T(m, n, 0), ctx.T_alt(m, n, 0), tol, "model"))
    return out


# ---------------------------------------------------------------------------
# T-system


def verify_tsystem(ctx: HierarchyContext, max_level: int = 5, k_range: int = 4,
                   tol: float = TOL) -> list[IdentityCheck]:
    T, f, sg = ctx.T, ctx.fk, ctx.sigma
    out = []
    for m in range(-3, max_level):
        out.append(_check("tsystem.rect-m", ctx, T(m, 0, 0) @ T(m, 0, 1),
                          f(m, 0) * T(0, m, 0) + T(m + 1, 0, 0) @ T(m - 1, 0, 1), tol, "implementation"))
        out.append(_check("tsystem.rect-n", ctx, T(0, m, 0) @ T(0, m, 1),
                          sg ** (m % 2) * f(-1, 0) * T(m, 0, 1) + T(0, m + 1, 0) @ T(0, m - 1, 1),
                          tol, "implementation"))
    for m in range(-k_range, k_range + 1):
        for k in range(-k_range, k_range + 1):
            out.append(_check("tsystem.general-m", ctx, T(m, 0, 0) @ T(m - k, 0, k + 1),
                              f(m, 0) * T(k, m - k, 0) + T(m + 1, 0, 0) @ T(m - 1 - k, 0, k + 1),
                              tol, "implementation"))
            n = m
            out.append(_check("tsystem.general-n", ctx, T(0, n, 0) @ T(0, n + k, 1),
                              sg ** (n % 2) * f(-1, 0) * T(n, k, 1) + T(0, n + 1 + k, 0) @ T(0, n - 1, 1),
                              tol, "implementation"))
    return out


# ---------------------------------------------------------------------------
# per-eigenvector evaluation


class EigenbasisError(ArithmeticError):
    pass


class _View:
    """Values of commuting matrices either as matrices or per common eigenvector."""

    def __init__(self, ctx: HierarchyContext, eigen: bool, seed: int = 0):
        self.ctx = ctx
        self.eigen = eigen
        self.offdiag = 0.0
        dim = ctx.dim
        if eigen:
            rng = np.random.default_rng(seed)
            c = rng.normal(size=3) + 1j * rng.normal(size=3)
            M = c[0] * ctx.T(1, 0, 0) + c[1] * ctx.T(0, 1, 0) + c[2] * ctx.T(1, 0, 1)
            _, V = np.linalg.eig(M)
            if np.linalg.cond(V) > 1e8:
                raise EigenbasisError("generic combination is not safely diagonalisable")
            self.V, self.Vi = V, np.linalg.inv(V)
            self.one = np.ones(dim, dtype=complex)
        else:
            self.one = np.eye(dim, dtype=complex)

    def of(self, A: np.ndarray):
        if not self.eigen:
            return A
        B = self.Vi @ A @ self.V
        d = np.diag(B).copy()
        scale = np.linalg.norm(A) + 1e-300
        self.offdiag = max(self.offdiag, float(np.linalg.norm(B - np.diag(d)) / scale))
        return d

    def T(self, m, n, k=0):
        return self.of(self.ctx.T(m, n, k))

    def f(self, j, k=0):
        return self.ctx.fk(j, k)

    def mul(self, *xs):
        out = xs[0]
        for x in xs[1:]:
            out = out * x if (self.eigen or np.isscalar(x) or np.isscalar(out)) else out @ x
        return out

    def inv(self, x):
        if self.eigen:
            if np.min(np.abs(x)) < 1e-12 * (np.max(np.abs(x)) + 1e-300):
                raise ResampleError("vanishing eigenvalue in a denominator")
            return 1.0 / x
        if np.linalg.cond(x) > 1e12:
            raise ResampleError("singular matrix in a denominator")
        return np.linalg.inv(x)

    def div(self, a, b):
        return self.mul(a, self.inv(b))


def _with_view(ctx: HierarchyContext, body: Callable[[_View], list[IdentityCheck]], seed: int = 0) -> list[IdentityCheck]:
    """Run ``body`` per eigenvector; fall back to matrix arithmetic if the basis is unreliable."""
    try:
        view = _View(ctx, True, seed)
        out = body(view)
        if view.offdiag < 1e-8:
            for c in out:
                c.detail["mode"] = "eigenvalues"
            return out
    except EigenbasisError:
        pass
    view = _View(ctx, False)
    out = body(view)
    for c in out:
        c.detail["mode"] = "matrices"
    return out


def _t(v: _View, m: int, k: int):
    return v.div(v.mul(v.T(m + 1, 0, k), v.T(m - 1, 0, k + 1)), v.f(m, k) * v.T(0, m, k))


def _tt(v: _View, n: int, k: int):
    sg = v.ctx.sigma ** (n % 2)
    return v.div(sg * v.mul(v.T(0, n + 1, k), v.T(0, n - 1, k + 1)), v.f(-1, k) * v.T(n, 0, k + 1))


def verify_ysystem(ctx: HierarchyContext, max_level: int = 5, tol: float = TOL) -> list[IdentityCheck]:
    sg = ctx.sigma

    def body(v: _View):
        one = v.one
        out = []
        for m in range(1, max(2, max_level - 1)):
            lhs = v.mul(v.T(m, 0, 0), v.T(m, 0, 1))
            out.append(_check("ysystem.t-form-m", ctx, lhs,
                              v.f(m, 0) * v.mul(v.T(0, m, 0), one + _t(v, m, 0)), tol))
            lhs = v.mul(v.T(0, m, 0), v.T(0, m, 1))
            out.append(_check("ysystem.t-form-n", ctx, lhs,
                              sg ** (m % 2) * v.f(-1, 0) * v.mul(v.T(m, 0, 1), one + _tt(v, m, 0)), tol))
            left = v.mul(_t(v, m, 0), _t(v, m, 1), one + v.inv(_tt(v, m, 0)))
            right = v.mul(one + _t(v, m + 1, 0), one + _t(v, m - 1, 1))
            out.append(_check("ysystem.m", ctx, left, right, tol))
            left = v.mul(_tt(v, m, 0), _tt(v, m, 1), one + v.inv(_t(v, m, 1)))
            right = v.mul(one + _tt(v, m + 1, 0), one + _tt(v, m - 1, 1))
            out.append(_check("ysystem.n", ctx, left, right, tol))
        return out

    return _with_view(ctx, body)


# ---------------------------------------------------------------------------
# closure at roots of unity


@dataclass
class ClosureData:
    J: np.ndarray
    K: np.ndarray
    J_value: complex
    K_value: complex
    J_spread: float
    K_spread: float
    phases: tuple[complex, complex, complex]

    def to_json(self) -> dict:
        c = lambda z: [complex(z).real, complex(z).imag]
        return {"J": c(self.J_value), "K": c(self.K_value), "J_spread": self.J_spread,
                "K_spread": self.K_spread, "phases": [c(z) for z in self.phases]}


def extract_closure(ctx: HierarchyContext, root: RootOfUnity) -> tuple[np.ndarray, np.ndarray]:
    """The u-independent matrices J and K read off from the closure relations."""
    T, sg, pp = ctx.T, ctx.sigma, root.pprime
    f_m1 = ctx.fk(-1, 0)
    if abs(f_m1) < 1e-6:
        raise ResampleError("f_{-1} vanishes at the sample point")
    J = (T(pp, 0, 0) - T(pp - 2, 1, 1) + sg * T(pp - 3, 0, 2)) / f_m1
    K = (T(0, pp, 0) - sg * T(1, pp - 2, 0) + T(0, pp - 3, 1)) / f_m1
    return J, K


def closure_braid_combination(sector: Sector, root: RootOfUnity, omega: complex) -> tuple[complex, complex]:
    """kappa*J and kappa~*K from fused braid eigenvalues in the +i infinity limit."""
    pp = root.pprime
    b = lambda m, n: fused_braid_eigenvalue(m, n, +1, sector.d, sector.v, sector.a, root.lam, omega)
    return b(pp, 0) + b(pp - 3, 0) - b(pp - 2, 1), b(0, pp) + b(0, pp - 3) - b(1, pp - 2)


def verify_closure(ctxs: Sequence[HierarchyContext], root: RootOfUnity,
                   tol: float = TOL_CLOSURE) -> tuple[ClosureData, list[IdentityCheck]]:
    ctx0 = ctxs[0]
    sec, params = ctx0.sector, ctx0.params
    pairs = [extract_closure(c, root) for c in ctxs]
    J0, K0 = pairs[0]
    dim = sec.dim
    jv = complex(np.trace(J0) / dim)
    kv = complex(np.trace(K0) / dim)
    spread_j = max(residual(J, J0) for J, _ in pairs)
    spread_k = max(residual(K, K0) for _, K in pairs)
    cs = closure_eigenvalues(sec.d, sec.v, sec.a, root, params.omega)
    kj, kk = closure_braid_combination(sec, root, params.omega)
    sg = params.sigma
    label = sec.label()
    pts = [c.u for c in ctxs]
    mk = lambda id_, r, role="model", **d: IdentityCheck(id_, label, r, tol, list(pts), role, d)
    eye = np.eye(dim)
    out = [
        mk("closure.J-constant", spread_j),
        mk("closure.K-constant", spread_k),
        mk("closure.J-scalar", residual(J0, jv * eye)),
        mk("closure.K-scalar", residual(K0, kv * eye)),
        mk("closure.J-spectrum", residual(jv, cs.J), J=[jv.real, jv.imag]),
        mk("closure.K-spectrum", residual(kv, cs.K), K=[kv.real, kv.imag]),
        mk("closure.J-braid", residual(cs.kappa * jv, kj)),
        mk("closure.K-braid", residual(cs.kappa_tilde * kv, kk)),
        mk("closure.J-phases", residual(sg ** ((root.pprime - root.p) % 2) * sum(cs.phases), jv), "consequence"),
        mk("closure.K-phases", residual(sg ** (root.pprime % 2) * sum(1 / z for z in cs.phases), kv),
           "consequence"),
    ]
    data = ClosureData(J0, K0, jv, kv, spread_j, spread_k, cs.phases)
    return data, out


def verify_extended_closure(ctx: HierarchyContext, root: RootOfUnity, J: np.ndarray, K: np.ndarray,
                            jk_range: int = 2, tol: float = TOL_CLOSURE) -> list[IdentityCheck]:
    T, f, sg, pp = ctx.T, ctx.fk, ctx.sigma, root.pprime
    sgn = lambda e: sg ** (e % 2)
    out = []
    for k in range(-1, pp):
        out.append(_check("closure.extended-m", ctx, T(pp, k, 0),
                          T(pp - 2, k + 1, 1) - sgn(k + 1) * T(pp - k - 3, 0, k + 2) + J @ T(0, k, 0), tol, "model"))
        out.append(_check("closure.extended-n", ctx, T(k, pp, 0),
                          sg * T(k + 1, pp - 2, 0) - sgn(k) * T(0, pp - k - 3, k + 1) + K @ T(k, 0, 0), tol, "model"))
    for j in range(-1, jk_range + 1):
        for k in range(-1, jk_range + 1):
            out.append(_check("closure.beyond-m", ctx, T(pp + j, k, 0),
                              T(pp - j - 2, j + k + 1, j + 1) - sgn(k + 1) * T(pp - j - k - 3, j, j + k + 2)
                              + J @ T(j, k, 0), tol, "model"))
            out.append(_check("closure.beyond-n", ctx, T(k, pp + j, 0),
                              sgn(j + 1) * T(j + k + 1, pp - j - 2, 0) - sgn(j + k) * T(j, pp - j - k - 3, k + 1)
                              + K @ T(k, j, 0), tol, "model"))
    rhs = (T(pp - 2, pp - 2, 2) - sgn(pp) * T(0, 0, pp) + sg * J @ T(1, pp - 2, 0) + K @ T(pp - 2, 1, 1)
           + f(-1, 0) * J @ K)
    out.append(_check("closure.corner", ctx, T(pp, pp, 0), rhs, tol, "model"))
    return out


def verify_yclosure(ctx: HierarchyContext, root: RootOfUnity, J: np.ndarray, K: np.ndarray,
                    tol: float = TOL_CLOSURE) -> list[IdentityCheck]:
    """Closure of the Y-system, as cleared products and per-eigenvector factorised forms.

    The factorised forms for the tilde quantities carry the sign sigma on each
    factor and the prefactors sigma^p e^{i Lambda_2}; these follow from the
    cubic forms and the phase decomposition of J and K, which are checked as
    well.  Residuals of the alternative sign layout are kept in ``detail``
    under ``alt_residual``.
    """
    sec, params = ctx.sector, ctx.params
    sg, pp, p = ctx.sigma, root.pprime, root.p
    sgn = lambda e: sg ** (e % 2)
    L1, L2, L3 = closure_eigenvalues(sec.d, sec.v, sec.a, root, params.omega).phases

    T, f = ctx.T, ctx.fk
    out = []
    lhs = ((T(pp - 1, 0, 0) @ T(0, pp - 1, 0) - sg * T(pp - 2, 0, 1) @ T(0, pp - 2, 0))
           @ (T(pp - 1, 0, 1) @ T(0, pp - 1, 0) - sg * T(pp - 2, 0, 1) @ T(0, pp - 2, 1)))
    A, B = T(0, pp - 1, 0), T(pp - 2, 0, 1)
    rhs = f(pp - 1, 0) * (A @ A @ A + sgn(pp - p) * J @ A @ A @ B + sgn(pp - p) * K @ A @ B @ B
                          + sgn(p) * B @ B @ B)
    out.append(_check("yclosure.product-m", ctx, lhs, rhs, tol, "model"))
    lhs = ((T(pp - 1, 0, 1) @ T(0, pp - 1, 1) - sg * T(pp - 2, 0, 2) @ T(0, pp - 2, 1))
           @ (T(pp - 1, 0, 1) @ T(0, pp - 1, 0) - sg * T(pp - 2, 0, 1) @ T(0, pp - 2, 1)))
    C, D = T(pp - 1, 0, 1), T(0, pp - 2, 1)
    rhs = sgn(pp - 1) * f(-1, 0) * (C @ C @ C + sgn(pp + 1) * K @ C @ C @ D + sgn(pp) * J @ C @ D @ D
                                   + sgn(p + 1) * D @ D @ D)
    out.append(_check("yclosure.product-n", ctx, lhs, rhs, tol, "model"))

    def body(v: _View):
        one = v.one
        Jv, Kv = v.of(J), v.of(K)
        x = lambda k: v.div(v.T(pp - 2, 0, k + 1), v.T(0, pp - 1, k))
        xt = lambda k: -v.div(v.T(0, pp - 2, k), v.T(pp - 1, 0, k))
        y = lambda k: sg * v.mul(x(k), xt(k))
        z = lambda k: sg * v.mul(x(k), xt(k + 1))
        res = []

        res.append(_check("yclosure.t-ratio", ctx,
                          v.div(v.mul(v.T(pp - 1, 0, 0), v.T(pp - 1, 0, 1)), f(pp - 1, 0) * v.T(0, pp - 1, 0)),
                          one + _t(v, pp - 1, 0), tol))
        X = x(0)
        num = one + sgn(pp - p) * v.mul(Jv, X) + sgn(pp - p) * v.mul(Kv, X, X) + sgn(p) * v.mul(X, X, X)
        den = v.mul(one - sg * v.div(v.mul(v.T(pp - 2, 0, 1), v.T(0, pp - 2, 0)),
                                     v.mul(v.T(pp - 1, 0, 0), v.T(0, pp - 1, 0))),
                    one - sg * v.div(v.mul(v.T(pp - 2, 0, 1), v.T(0, pp - 2, 1)),
                                     v.mul(v.T(pp - 1, 0, 1), v.T(0, pp - 1, 0))))
        res.append(_check("yclosure.cubic-m", ctx, v.mul(one + _t(v, pp - 1, 0), den), num, tol))
        Xt = v.div(v.T(0, pp - 2, 1), v.T(pp - 1, 0, 1))
        num = one + sgn(pp + 1) * v.mul(Kv, Xt) + sgn(pp) * v.mul(Jv, Xt, Xt) + sgn(p + 1) * v.mul(Xt, Xt, Xt)
        den = v.mul(one - sg * v.div(v.mul(v.T(pp - 2, 0, 2), v.T(0, pp - 2, 1)),
                                     v.mul(v.T(pp - 1, 0, 1), v.T(0, pp - 1, 1))),
                    one - sg * v.div(v.mul(v.T(pp - 2, 0, 1), v.T(0, pp - 2, 1)),
                                     v.mul(v.T(pp - 1, 0, 1), v.T(0, pp - 1, 0))))
        res.append(_check("yclosure.cubic-n", ctx, v.mul(one + _tt(v, pp - 1, 0), den), num, tol))

        def P(xk):
            return v.mul(one + L1 * xk, one + L2 * xk, one + L3 * xk)

        def Pt(xk, c):
            return v.mul(one + c / L1 * xk, one + c / L2 * xk, one + c / L3 * xk)

        def Dx(xk):
            return v.mul(one + L1 * xk, one + L2 * v.inv(xk), one + L3 * xk)

        def Dt(xk, c):
            return v.mul(one + c / L1 * xk, one + c / L2 * v.inv(xk), one + c / L3 * xk)

        t0 = _t(v, pp - 1, 0)
        res.append(_check("yclosure.factor-m", ctx, v.mul(one + t0, one + y(0), one + z(0)), P(x(0)), tol))
        lhs = v.mul(one + _tt(v, pp - 1, 0), one + y(1), one + z(0))
        c = _check("yclosure.factor-n", ctx, lhs, Pt(xt(1), -sg), tol)
        c.detail["alt_residual"] = residual(lhs, Pt(xt(1), 1.0))
        res.append(c)

        t1 = _t(v, pp - 2, 1)
        tt0, tt1 = _tt(v, pp - 2, 0), _tt(v, pp - 2, 1)
        pre = sgn(p) * L2
        lhs = v.mul(x(0), x(1), Dt(xt(1), -sg))
        rhs = pre * v.mul(one + t1, one + y(1), one + z(0))
        c = _check("yclosure.x", ctx, lhs, rhs, tol)
        c.detail["alt_residual"] = residual(v.mul(x(0), x(1), Dt(xt(1), 1.0)),
                                            -sgn(pp) * v.mul(one + t1, one + y(1), one + z(0)))
        res.append(c)
        lhs = v.mul(xt(0), xt(1), Dx(x(0)))
        c = _check("yclosure.xt", ctx, lhs, pre * v.mul(one + tt0, one + y(0), one + z(0)), tol)
        c.detail["alt_residual"] = residual(lhs, sgn(pp - 1) * v.mul(one + tt0, one + y(0), one + z(0)))
        res.append(c)
        lhs = v.mul(y(0), y(1), Dx(x(0)), Dt(xt(1), -sg))
        rhs = v.mul(one + t1, one + tt0, one + y(0), one + y(1), one + z(0), one + z(0))
        c = _check("yclosure.y", ctx, lhs, rhs, tol)
        c.detail["alt_residual"] = residual(v.mul(y(0), y(1), Dx(x(0)), Dt(xt(1), 1.0)), -sg * rhs)
        res.append(c)
        lhs = v.mul(z(0), z(1), Dx(x(1)), Dt(xt(1), -sg))
        rhs = v.mul(one + t1, one + tt1, one + y(1), one + y(1), one + z(0), one + z(1))
        c = _check("yclosure.z", ctx, lhs, rhs, tol)
        c.detail["alt_residual"] = residual(v.mul(z(0), z(1), Dx(x(1)), Dt(xt(1), 1.0)), -sg * rhs)
        res.append(c)
        return res

    return out + _with_view(ctx, body)


# ---------------------------------------------------------------------------
# braid limits


def fused_braid_matrices(sector: Sector, params: ModelParams, sign: int, max_level: int) -> dict:
    """Braid-limit fused matrices built from the braid rows by the braid recursions."""
    dim = sector.dim
    R10, _ = build_braid((1, 0), sign, sector, params)
    R01, _ = build_braid((0, 1), sign, sector, params)
    B: dict[tuple[int, int], np.ndarray] = {(0, 0): np.eye(dim, dtype=complex),
                                            (1, 0): R10.entries, (0, 1): R01.entries}
    zero = np.zeros((dim, dim), dtype=complex)
    get = lambda m, n: zero if m < 0 or n < 0 else B[(m, n)]
    for level in range(2, max_level + 1):
        B[(level, 0)] = get(level - 1, 0) @ R10.entries - get(level - 2, 1)
        for n in range(1, level):
            m = level - n
            B[(m, n)] = get(m, 0) @ get(0, n) - get(m - 1, 0) @ get(0, n - 1)
        B[(0, level)] = R01.entries @ get(0, level - 1) - get(1, level - 2)
        # the mixed entries at this level need (0, n) first
        for n in range(1, level):
            m = level - n
            B[(m, n)] = get(m, 0) @ get(0, n) - get(m - 1, 0) @ get(0, n - 1)
    return B


def verify_braid_hierarchy(sector: Sector, params: ModelParams, max_level: int = 4,
                           numeric_level: int = 3, tol: float = 1e-10) -> list[IdentityCheck]:
    label = sector.label()
    d, v, a, lam, w = sector.d, sector.v, sector.a, params.lam, params.omega
    out = []
    mk = lambda id_, r, tol_=tol, role="model", **kw: IdentityCheck(id_, label, r, tol_, [], role, kw)
    eye = np.eye(sector.dim)
    for sign in (1, -1):
        for lab in ((1, 0), (0, 1)):
            mat, scalar = build_braid(lab, sign, sector, params, tol=math.inf)
            pred = braid_eigenvalue(lab, sign, d, v, a, lam, w)
            out.append(mk("braid.row-scalar", residual(mat.entries, pred * eye), label=str(lab), sign=sign))
        U = lambda m, n: fused_braid_eigenvalue(m, n, sign, d, v, a, lam, w)
        for m in range(0, max_level):
            out.append(mk("braid.m-step", residual(U(m, 0) * U(1, 0), U(m - 1, 1) + U(m + 1, 0)), role="consequence"))
            out.append(mk("braid.n-step", residual(U(0, 1) * U(0, m), U(1, m - 1) + U(0, m + 1)), role="consequence"))
        for m in range(0, max_level + 1):
            for n in range(0, max_level + 1 - m):
                out.append(mk("braid.mixed", residual(U(m, 0) * U(0, n), U(m, n) + U(m - 1, 0) * U(0, n - 1)),
                              role="consequence"))
        B = fused_braid_matrices(sector, params, sign, max_level)
        for (m, n), mat in B.items():
            out.append(mk("braid.character", residual(mat, U(m, n) * eye), m=m, n=n))
        for m in range(0, numeric_level + 1):
            for n in range(0, numeric_level + 1 - m):
                lim = numeric_braid_limit(m, n, sign, sector, params, height=16.0)
                out.append(mk("braid.fused-limit", residual(lim, U(m, n) * eye), 1e-8))
    return out


# ---------------------------------------------------------------------------
# commuting family and periodicity


def verify_commuting(sector: Sector, params: ModelParams, u: complex, v: complex,
                     tol: float = 1e-10) -> list[IdentityCheck]:
    """All pairings of the two elementary rows commute; both rows flip sign by (-1)^N under u -> u + pi."""
    rows_u = {lab: build_elementary(lab, u, sector, params).entries for lab in faceops.LABELS}
    rows_v = {lab: build_elementary(lab, v, sector, params).entries for lab in faceops.LABELS}
    out = []
    for a, b in (((1, 0), (1, 0)), ((1, 0), (0, 1)), ((0, 1), (0, 1))):
        x, y = rows_u[a], rows_v[b]
        out.append(IdentityCheck(f"transfer.commute-{a[0]}{a[1]}-{b[0]}{b[1]}", sector.label(),
                                 residual(x @ y, y @ x), tol, [u, v], "model"))
    sign = (-1) ** sector.N
    for lab in faceops.LABELS:
        shifted = build_elementary(lab, u + math.pi, sector, params).entries
        out.append(IdentityCheck(f"transfer.antiperiodic-{lab[0]}{lab[1]}", sector.label(),
                                 residual(shifted, sign * rows_u[lab]), min(tol, 1e-11), [u], "model"))
    return out


# ---------------------------------------------------------------------------
# vacancy conservation and gauge


def verify_vacancy_conservation(N: int, params: ModelParams, u: complex, tol: float = 1e-12) -> list[IdentityCheck]:
    out = []
    for lab in faceops.LABELS:
        mat, basis = build_full_space(lab, u, N, params)
        vs = np.array([sec.v for sec, _ in basis])
        mask = vs[:, None] != vs[None, :]
        off = float(np.linalg.norm(mat[mask]))
        out.append(IdentityCheck("vacancy.block-diagonal", f"N{N}", off, tol, [u], "model",
                                 {"label": str(lab), "block_norm": float(np.linalg.norm(mat[~mask]))}))
    return out


def spectrum_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Optimal matching distance between two eigenvalue multisets."""
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if len(r) else 0.0


def verify_gauge(sector: Sector, params: ModelParams, u: complex, tol: float = TOL) -> list[IdentityCheck]:
    out = []
    ref = build_elementary((1, 0), u, sector, params.with_(t=1.0)).entries
    ev_ref = np.linalg.eigvals(ref)
    scale = float(np.max(np.abs(ev_ref))) + 1.0
    for t in (2.0, cmath.exp(-1j * u)):
        mat = build_elementary((1, 0), u, sector, params.with_(t=t)).entries
        dist = spectrum_distance(ev_ref, np.linalg.eigvals(mat))
        out.append(IdentityCheck("gauge.spectrum", sector.label(), dist / scale, tol, [u], "model",
                                 {"t": [complex(t).real, complex(t).imag], "matrix_residual": residual(mat, ref)}))
    return out


# ---------------------------------------------------------------------------
# local relations and bases


def _identity_face_sum() -> DiagramSum:
    out = DiagramSum(4)
    for a in (0, 1):
        for b in (0, 1):
            pairs = [pr for pr, occ in (((0, 1), a), ((2, 3), b)) if occ]
            out.add(patch(f"{a}{a}{b}{b}", *pairs), 1.0)
    return out


def verify_local(rng: np.random.Generator, count: int = 50, tol: float = 1e-11) -> list[IdentityCheck]:
    """Yang-Baxter, inversion, rank and limit checks at random (u, v, lambda)."""
    out = []
    for _ in range(count):
        lam = float(rng.uniform(0.15, math.pi - 0.15))
        params = ModelParams(lam, 1)
        u, v = random_spectral(rng), random_spectral(rng)
        tag = f"lam={lam:.6f}"
        ybe = faceops.check_ybe(u, v, params)
        out.append(IdentityCheck("local.ybe", "patch", max(ybe.values()), tol, [u, v], "model",
                                 {k: float(r) for k, r in ybe.items()}))
        inv = faceops.check_inversion(u, params)
        want1 = s(1, u, lam) * s(1, -u, lam)
        want2 = s(0, u, lam) * s(3, -u, lam)
        out.append(IdentityCheck("local.inversion-direct", "patch",
                                 max(inv.residual_direct, residual(inv.scalar_direct, want1)), tol, [u], "model",
                                 {"lam": lam}))
        out.append(IdentityCheck("local.inversion-crossed", "patch",
                                 max(inv.residual_crossed, residual(inv.scalar_crossed, want2)), tol, [u], "model",
                                 {"lam": lam}))
        zero_face = faceops.face((1, 0), 0.0, params).as_sum()
        out.append(IdentityCheck("local.identity-face", "patch",
                                 faceops.residual(zero_face, _identity_face_sum()), tol, [0j], "model", {"lam": lam}))
        rank = faceops.check_face_rank_at_lambda(params)
        generic = faceops.face_rank(u, params)
        out.append(IdentityCheck("local.face-rank", "patch", 0.0 if (rank <= 3 and generic == 4) else 1.0, 0.5,
                                 [params.lam], "model", {"rank_at_lambda": rank, "rank_generic": generic, "where": tag}))
        worst = max(faceops.braid_limit_residual(lab, sg, params) for lab in faceops.LABELS for sg in (1, -1))
        out.append(IdentityCheck("local.braid-limit", "patch", worst, 1e-12, [], "model", {"lam": lam}))
    return out


def expected_dimension(N: int, d: int, v: int) -> int:
    a = (N - d - v) // 2
    return math.comb(N, v) * math.comb(N - v, a)


def verify_basis_counts(max_N: int = 8) -> list[IdentityCheck]:
    out = []
    for N in range(1, max_N + 1):
        for sec in sectors(N):
            got = len(enumerate_states(sec))
            want = expected_dimension(N, sec.d, sec.v)
            out.append(IdentityCheck("basis.count", sec.label(), float(abs(got - want)), 0.0, [], "model",
                                     {"dim": got, "expected": want}))
    return out


# ---------------------------------------------------------------------------
# sampling driver


def sample_u(rng: np.random.Generator) -> complex:
    return random_spectral(rng)


def run_sampled(fn: Callable[[HierarchyContext], list[IdentityCheck]], sector: Sector, params: ModelParams,
                rng: np.random.Generator, count: int, root: RootOfUnity | None = None,
                points: Sequence[complex] | None = None) -> list[IdentityCheck]:
    """Evaluate ``fn`` at ``count`` points, resampling any point that hits a pole."""
    out = []
    for i in range(count):
        for attempt in range(MAX_RESAMPLE):
            # a supplied point is tried once; a pole there falls back to random points
            u = points[i] if (attempt == 0 and points is not None and i < len(points)) else sample_u(rng)
            try:
                out.extend(fn(HierarchyContext(sector, params, u, root=root)))
                break
            except ResampleError:
                continue
        else:
            raise ResampleError(f"no usable sample point after {MAX_RESAMPLE} attempts")
    return out


def run_closure(sector: Sector, params: ModelParams, root: RootOfUnity, rng: np.random.Generator,
                count: int = 3, extended: bool = True, yclosure: bool = True,
                tol: float = TOL_CLOSURE) -> tuple[ClosureData, list[IdentityCheck]]:
    ctxs = []
    while len(ctxs) < max(count, 2):
        for _ in range(MAX_RESAMPLE):
            ctx = HierarchyContext(sector, params, sample_u(rng), root=root)
            try:
                extract_closure(ctx, root)
                ctxs.append(ctx)
                break
            except ResampleError:
                continue
        else:
            raise ResampleError("no usable sample point for the closure relations")
    data, out = verify_closure(ctxs, root, tol)
    for ctx in ctxs:
        if extended:
            out.extend(verify_extended_closure(ctx, root, data.J, data.K, tol=tol))
        if yclosure:
            out.extend(verify_yclosure(ctx, root, data.J, data.K, tol=tol))
    return data, out
