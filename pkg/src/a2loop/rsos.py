"""The A2 RSOS model: heights on a truncated sl(3) weight lattice.

Heights are points kappa1*w1 + kappa2*w2 with kappa1 + kappa2 <= p' - 3, in
the basis of fundamental weights with Gram matrix [[2/3, 1/3], [1/3, 2/3]].
Neighbouring heights differ by one of the three steps

    h1 = w1,   h2 = w2 - w1,   h3 = -w2.

A face with corners

    a  b
    d  c

has weight sin(lam - u)/sin(lam) delta(b, d) + sin(u)/sin(lam) U(a, b, c, d),
where U = sin(lam (a_mn + 1)) / sin(lam a_mn) when d = a + h_m, c = d + h_n
with m != n, and a_mn = (a + rho).(h_m - h_n).

The (1,0) row is the periodic product of these faces with the upper path on
the top corners.  The (0,1) face is the same weight at lam - u read with its
corners turned a quarter turn, so its vertical edges run against the steps.
A row then maps a cyclic path to a cyclic path; such paths use each step
equally often, so the row length must be a multiple of 3.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .hierarchy import HierarchyContext, ResampleError
from .relations import IdentityCheck, residual
from .scalars import ModelParams, ParameterError, RootOfUnity, SingularityError, random_spectral
from .transfer import MAX_STATES, SizeError

GRAM = np.array([[2.0, 1.0], [1.0, 2.0]]) / 3.0
STEPS = {1: (1, 0), 2: (-1, 1), 3: (0, -1)}
RHO = (1, 1)


class WeightPoint(NamedTuple):
    kappa1: int
    kappa2: int

    def __add__(self, step) -> "WeightPoint":  # type: ignore[override]
        return WeightPoint(self.kappa1 + step[0], self.kappa2 + step[1])


class AdmissibilityError(ValueError):
    """Corner heights are not neighbours on the oriented graph."""


def lattice(pprime: int) -> list[WeightPoint]:
    if pprime < 5:
        raise ParameterError(f"RSOS heights need p' >= 5, got {pprime}")
    top = pprime - 3
    return [WeightPoint(k1, k2) for k1 in range(top + 1) for k2 in range(top + 1 - k1)]


def inner(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.asarray(x, float) @ GRAM @ np.asarray(y, float))


def a_mu_nu(a: Sequence[int], mu: int, nu: int) -> float:
    """(a + rho).(h_mu - h_nu)."""
    shifted = (a[0] + RHO[0], a[1] + RHO[1])
    diff = tuple(STEPS[mu][i] - STEPS[nu][i] for i in range(2))
    return round(inner(shifted, diff), 12)


def step_of(a: Sequence[int], b: Sequence[int]) -> int | None:
    d = (b[0] - a[0], b[1] - a[1])
    for k, h in STEPS.items():
        if d == h:
            return k
    return None


def _S(a, mu: int, nu: int, lam: float) -> float:
    x = a_mu_nu(a, mu, nu)
    den = math.sin(lam * x)
    if abs(den) < 1e-12:
        raise SingularityError(f"sin(lam a_mu_nu) vanishes at a={tuple(a)}")
    return math.sin(lam * (x + 1)) / den


def _steps(a, b, c, d) -> tuple[int, int]:
    """(mu, nu) with d = a + h_mu, c = d + h_nu; raises if not admissible."""
    mu, nu = step_of(a, d), step_of(d, c)
    if mu is None or nu is None or step_of(a, b) is None or step_of(b, c) is None:
        raise AdmissibilityError(f"corners {a}, {b}, {c}, {d} are not neighbours")
    return mu, nu


def hecke_weight(a, b, c, d, lam: float) -> float:
    mu, nu = _steps(a, b, c, d)
    return 0.0 if mu == nu else _S(a, mu, nu, lam)


def boltzmann_W(a, b, c, d, u: complex, lam: float) -> complex:
    """Face weight, by the three cases (straight, turning with b = d, crossing)."""
    mu, nu = _steps(a, b, c, d)
    if mu == nu:
        return cmath.sin(lam - u) / math.sin(lam)
    x = a_mu_nu(a, mu, nu)
    if tuple(b) == tuple(d):
        return cmath.sin(lam * x + u) / math.sin(lam * x)
    return cmath.sin(u) * math.sin(lam * (x + 1)) / (math.sin(lam) * math.sin(lam * x))


def boltzmann_W_compact(a, b, c, d, u: complex, lam: float) -> complex:
    """Face weight as identity plus Hecke generator."""
    delta = 1.0 if tuple(b) == tuple(d) else 0.0
    return (cmath.sin(lam - u) * delta + cmath.sin(u) * hecke_weight(a, b, c, d, lam)) / math.sin(lam)


def crossed_W(a, b, c, d, u: complex, lam: float) -> complex:
    """(0,1) face: the face weight at lam - u with corners turned a quarter turn."""
    return boltzmann_W(d, a, b, c, lam - u, lam)


# ---------------------------------------------------------------------------
# words and Hecke generators


def words(pprime: int, length: int) -> list[tuple[WeightPoint, ...]]:
    """Open paths a_0 ... a_length; ordered by start point, then step sequence."""
    pts = set(lattice(pprime))
    out = []
    for a0 in lattice(pprime):
        for seq in itertools.product((1, 2, 3), repeat=length):
            path = [a0]
            for k in seq:
                nxt = path[-1] + STEPS[k]
                if nxt not in pts:
                    break
                path.append(nxt)
            else:
                out.append(tuple(path))
    return out


def hecke_U(j: int, space: Sequence[tuple], lam: float) -> np.ndarray:
    """U_j on words: changes letter j given letters j-1 and j+1."""
    length = len(space[0]) - 1
    if not 1 <= j <= length - 1:
        raise ValueError(f"position {j} is not interior to words of length {length}")
    index = {w: k for k, w in enumerate(space)}
    mat = np.zeros((len(space), len(space)))
    for col, w in enumerate(space):
        a, b, c = w[j - 1], w[j], w[j + 1]
        for mu in STEPS:
            d = a + STEPS[mu]
            new = w[:j] + (d,) + w[j + 1:]
            if new not in index:
                continue
            if step_of(d, c) is None:
                continue
            mat[index[new], col] += hecke_weight(a, b, c, d, lam)
    return mat


def hecke_residuals(pprime: int, length: int, p: int = 1) -> dict[str, float]:
    """Worst residuals of the Hecke relations on words of the given length."""
    lam = RootOfUnity(p, pprime).lam
    space = words(pprime, length)
    U = {j: hecke_U(j, space, lam) for j in range(1, length)}
    out = {"square": 0.0, "braid": 0.0, "far-commute": 0.0, "quartic": 0.0}
    for j, Uj in U.items():
        out["square"] = max(out["square"], residual(Uj @ Uj, 2 * math.cos(lam) * Uj))
        if j + 1 in U:
            V = U[j + 1]
            out["braid"] = max(out["braid"], residual(Uj @ V @ Uj - Uj, V @ Uj @ V - V))
        for k in U:
            if abs(j - k) > 1:
                out["far-commute"] = max(out["far-commute"], residual(Uj @ U[k], U[k] @ Uj))
        if j - 1 in U and j + 1 in U:
            L, R = U[j - 1], U[j + 1]
            prod = (L - R @ Uj @ L + Uj) @ (Uj @ R @ Uj - Uj)
            out["quartic"] = max(out["quartic"], residual(prod, 0 * prod))
    return out


# ---------------------------------------------------------------------------
# periodic rows


@dataclass(frozen=True)
class RSOSParams:
    p: int
    pprime: int
    N: int

    def __post_init__(self) -> None:
        if self.pprime < 5:
            raise ParameterError("RSOS models need p' >= 5")
        if self.N % 3:
            raise ParameterError("cyclic paths exist only when N is a multiple of 3")
        RootOfUnity(self.p, self.pprime)

    @property
    def root(self) -> RootOfUnity:
        return RootOfUnity(self.p, self.pprime)

    @property
    def lam(self) -> float:
        return self.root.lam

    @property
    def model(self) -> ModelParams:
        return ModelParams(self.lam, self.N)


@dataclass(frozen=True)
class PathSpace:
    """Cyclic admissible paths of length N, a stand-in for a sector."""

    pprime: int
    N: int
    paths: tuple[tuple[WeightPoint, ...], ...] = field(compare=False, repr=False)

    @property
    def dim(self) -> int:
        return len(self.paths)

    def label(self) -> str:
        return f"rsos(p'={self.pprime},N={self.N})"


def cyclic_paths(pprime: int, N: int) -> PathSpace:
    paths = tuple(w[:-1] for w in words(pprime, N) if w[-1] == w[0])
    if len(paths) > MAX_STATES:
        raise SizeError("too many cyclic paths")
    return PathSpace(pprime, N, paths)


def _row(face, space: PathSpace, u: complex, lam: float) -> np.ndarray:
    N = space.N
    mat = np.zeros((space.dim, space.dim), dtype=complex)
    for i, top in enumerate(space.paths):
        for j, bot in enumerate(space.paths):
            w = 1.0 + 0j
            for k in range(N):
                try:
                    w *= face(top[k], top[(k + 1) % N], bot[(k + 1) % N], bot[k], u, lam)
                except AdmissibilityError:
                    w = 0
                    break
            mat[i, j] = w
    return mat


def rsos_row(label, u: complex, space: PathSpace, lam: float) -> np.ndarray:
    label = tuple(label)
    if label == (1, 0):
        return _row(boltzmann_W, space, u, lam)
    if label == (0, 1):
        return _row(crossed_W, space, u, lam)
    raise ValueError(f"elementary label must be (1,0) or (0,1), got {label!r}")


def rsos_transfer(u: complex, N: int, params: RSOSParams, label=(1, 0)) -> np.ndarray:
    if N != params.N:
        raise ValueError("N and params.N disagree")
    return rsos_row(label, u, cyclic_paths(params.pprime, N), params.lam)


def spectra_rows(params: RSOSParams, points: Sequence[complex]) -> list[list]:
    """Spectra CSV rows for both elementary rows; the sector column names (p, p', N)."""
    space = cyclic_paths(params.pprime, params.N)
    tag = f"rsos(p={params.p},p'={params.pprime},N={params.N})"
    rows = []
    for u in points:
        for lab in ((1, 0), (0, 1)):
            ev = np.linalg.eigvals(rsos_row(lab, u, space, params.lam))
            for e in ev[np.lexsort((ev.imag, ev.real))]:
                rows.append([tag, f"T{lab[0]}{lab[1]}", 0, f"{complex(u)!r}", f"{e.real:.12g}", f"{e.imag:.12g}"])
    return rows


def translation(space: PathSpace) -> np.ndarray:
    """Shift of a cyclic path by one site, (a_0, ..., a_{N-1}) -> (a_{N-1}, a_0, ...).

    This is the (1,0) row at u = 0.
    """
    index = {p: k for k, p in enumerate(space.paths)}
    mat = np.zeros((space.dim, space.dim))
    for k, p in enumerate(space.paths):
        mat[index[p[-1:] + p[:-1]], k] = 1.0
    return mat


def rsos_context(u: complex, params: RSOSParams, space: PathSpace | None = None) -> HierarchyContext:
    space = space or cyclic_paths(params.pprime, params.N)
    return HierarchyContext(space, params.model, u, root=params.root,
                            rows=lambda label, x: rsos_row(label, x, space, params.lam))


# ---------------------------------------------------------------------------
# truncation and closure


@dataclass
class RSOSClosureConstants:
    A: np.ndarray
    Atilde: np.ndarray
    B: np.ndarray
    Btilde: np.ndarray
    J: np.ndarray
    K: np.ndarray


def verify_rsos_closure(points: Sequence[complex], params: RSOSParams,
                        tol: float = 1e-9) -> tuple[RSOSClosureConstants, list[IdentityCheck]]:
    """Truncation, the u-dependence of the boundary matrices and the closure they imply."""
    space = cyclic_paths(params.pprime, params.N)
    pp, p = params.pprime, params.p
    sg = params.model.sigma
    sgn = lambda e: sg ** (e % 2)
    label = space.label()
    checks: list[IdentityCheck] = []
    per_point = []

    def mk(id_, r, u, tol_=tol, role="model", **detail):
        checks.append(IdentityCheck(id_, label, r, tol_, [u], role, detail))

    for u in points:
        ctx = rsos_context(u, params, space)
        T, f = ctx.T, ctx.fk
        if min(abs(f(j, 0)) for j in (-3, -2, -1)) < 1e-6:
            raise ResampleError("sample point too close to a zero of f")
        scale = np.linalg.norm(T(1, 0, 0)) + 1.0
        mk("rsos.truncation-m", float(np.linalg.norm(T(pp - 2, 0, 0))) / scale, u, 1e-10)
        mk("rsos.truncation-n", float(np.linalg.norm(T(0, pp - 2, 0))) / scale, u, 1e-10)
        line = max(float(np.linalg.norm(T(m, pp - 2 - m, 0))) for m in range(pp - 1)) / scale
        mk("rsos.truncation-line", line, u, 1e-10)
        mk("rsos.boundary-relation", residual(f(-2, 0) * T(pp, 0, 0), -f(-1, 0) * T(pp - 2, 1, 0)), u)
        A = T(pp, 0, 0) / f(-1, 0)
        At = T(0, pp, 0) / f(-1, 0)
        mk("rsos.A-partner", residual(T(pp - 2, 1, 0), -f(-2, 0) * A), u)
        mk("rsos.Atilde-partner", residual(T(1, pp - 2, 0), -sg * f(-1, 0) * At), u)
        mk("rsos.square-n", residual(T(0, pp - 3, 0) @ T(0, pp - 3, 1), sgn(pp - 3) * f(-1, 0) * T(pp - 3, 0, 1)), u)
        mk("rsos.square-m", residual(T(pp - 3, 0, 0) @ T(pp - 3, 0, 1), f(pp - 3, 0) * T(0, pp - 3, 0)), u)
        fff = f(-3, 0) * f(-2, 0) * f(-1, 0)
        eye = np.eye(space.dim)
        mk("rsos.cube-m", residual(T(pp - 3, 0, 0) @ T(pp - 3, 0, 1) @ T(pp - 3, 0, 2), sgn(pp - 3) * fff * eye), u)
        mk("rsos.cube-n", residual(T(0, pp - 3, -1) @ T(0, pp - 3, 0) @ T(0, pp - 3, 1), sgn(pp - p) * fff * eye), u)
        B = sgn(pp - 1) * T(pp - 3, 0, 0) / f(-3, 0)
        Bt = sgn(pp - p) * T(0, pp - 3, 0) / f(-2, 0)
        per_point.append((ctx, A, At, B, Bt))

    _, A0, At0, B0, Bt0 = per_point[0]
    u0 = points[0]
    for ctx, A, At, B, Bt in per_point[1:]:
        for name, X, X0 in (("A", A, A0), ("Atilde", At, At0), ("B", B, B0), ("Btilde", Bt, Bt0)):
            mk(f"rsos.{name}-constant", residual(X, X0), ctx.u)
    eye = np.eye(space.dim)
    mk("rsos.B-cube", residual(B0 @ B0 @ B0, eye), u0)
    mk("rsos.Btilde-cube", residual(Bt0 @ Bt0 @ Bt0, eye), u0)
    J = 2 * A0 + sgn(pp) * B0
    K = 2 * At0 + sgn(pp - p) * Bt0
    for ctx, *_ in per_point:
        T, f = ctx.T, ctx.fk
        mk("rsos.closure-m", residual(T(pp, 0, 0), T(pp - 2, 1, 1) - sg * T(pp - 3, 0, 2) + f(-1, 0) * J),
           ctx.u, 1e-8)
        mk("rsos.closure-n", residual(T(0, pp, 0), sg * T(1, pp - 2, 0) - T(0, pp - 3, 1) + f(-1, 0) * K),
           ctx.u, 1e-8)
    return RSOSClosureConstants(A0, At0, B0, Bt0, J, K), checks


def verify_loop_hecke(N: int = 4, lam: float = 0.83, omega: complex = 1.0) -> list[IdentityCheck]:
    """The loop face at t = e^{-iu} in Hecke form, and its generator on standard modules."""
    from . import faceops
    from .linkstate import DiagramSum, PatchDiagram, row_matrix, sectors

    u = 0.37 + 0.21j
    gauge = ModelParams(lam, 1, t=cmath.exp(-1j * u))
    ident = faceops.EMPTY, faceops.LOOPS_ID, faceops.CORNER_WN, faceops.CORNER_ES
    gen = {faceops.CORNER_WN: cmath.exp(-1j * lam), faceops.CORNER_ES: cmath.exp(1j * lam),
           faceops.VERTICAL: 1.0, faceops.HORIZONTAL: 1.0, faceops.LOOPS_TL: 1.0}
    want = DiagramSum(4)
    for t in ident:
        want.add(t, cmath.sin(lam - u) / math.sin(lam))
    for t, c in gen.items():
        want.add(t, cmath.sin(u) / math.sin(lam) * c)
    face = faceops.face((1, 0), u, gauge).as_sum()
    out = [IdentityCheck("rsos.loop-face-hecke-form", "patch", faceops.residual(face, want), 1e-12, [u], "model")]

    def embedded(j: int) -> list[tuple]:
        # face slots (W, N, E, S) -> row slots (j, N+j, N+j+1, j+1)
        perm = (j, N + j, N + j + 1, j + 1)
        others = [i for i in range(N) if i not in (j, j + 1)]
        terms = []
        for t, c in gen.items():
            for occ in itertools.product((False, True), repeat=len(others)):
                occupied = [False] * (2 * N)
                pairs = []
                for i, o in zip(others, occ):
                    occupied[i] = occupied[N + i] = o
                    if o:
                        pairs.append((i, N + i))
                full_occ = list(occupied)
                for k, o in enumerate(t.occupied):
                    full_occ[perm[k]] = o
                full_pairs = pairs + [(perm[a], perm[b]) for a, b in t.pairs]
                terms.append((PatchDiagram(tuple(full_occ), tuple(full_pairs)), c))
        return terms

    mp = ModelParams(lam, N, omega=omega)
    worst = {"square": 0.0, "braid": 0.0, "far-commute": 0.0, "quartic": 0.0}
    for sec in sectors(N):
        U = {}
        for j in range(N - 1):
            U[j] = sum(c * row_matrix(d, sec, mp.beta, mp.alpha, mp.omega) for d, c in embedded(j))
        for j, Uj in U.items():
            worst["square"] = max(worst["square"], residual(Uj @ Uj, mp.beta * Uj))
            if j + 1 in U:
                V = U[j + 1]
                worst["braid"] = max(worst["braid"], residual(Uj @ V @ Uj - Uj, V @ Uj @ V - V))
            for k in U:
                if abs(j - k) > 1:
                    worst["far-commute"] = max(worst["far-commute"], residual(Uj @ U[k], U[k] @ Uj))
            if j - 1 in U and j + 1 in U:
                L, R = U[j - 1], U[j + 1]
                prod = (L - R @ Uj @ L + Uj) @ (Uj @ R @ Uj - Uj)
                worst["quartic"] = max(worst["quartic"], residual(prod, 0 * prod))
    out.append(IdentityCheck("rsos.loop-hecke", f"N{N}", max(worst.values()), 1e-11, [], "model", worst))
    return out


def sample_points(rng: np.random.Generator, count: int) -> list[complex]:
    return [random_spectral(rng) for _ in range(count)]
