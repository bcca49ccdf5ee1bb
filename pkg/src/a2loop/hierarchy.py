"""Fused transfer matrices T^{m,n}_k from the elementary rows.

T^{m,n}_k stands for T^{m,n}(u + k lam).  The defining recursion is

    f_0 T_0^{m,n} = T_0^{1,0} T_1^{m-1,n} - T_0^{0,1} T_2^{m-2,n} + sigma f_{-1} T_3^{m-3,n}

with T_k^{0,0} = f_{k-1} I, T^{m,-1} = T^{-1,n} = 0, and labels outside
m, n >= -1 brought back by the two reflections

    T_k^{m,n} = -T_{k+m+1}^{-m-2, m+n+1},     T_k^{m,n} = -sigma^{n+1} T_k^{m+n+1, -n-2}.

An independent recursion in n is provided for cross-checks.  The elementary
rows default to the loop model on a standard module; any other commuting pair
of rows (the RSOS model, say) can be supplied through ``rows``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linkstate import Sector
from .scalars import ModelParams, RootOfUnity, f
from .transfer import GetOrCompute, TransferMatrix, build_elementary


class ResampleError(ArithmeticError):
    """The sample point sits too close to a zero of a normalising factor."""


F_MARGIN = 1e-6


def apply_identification(m: int, n: int, k: int, sigma: int) -> tuple[tuple[int, int, int], int]:
    """Map a label into the domain m, n >= -1; returns (label, prefactor)."""
    factor = 1
    for _ in range(64):
        if m < -1:
            m, n, k = -m - 2, m + n + 1, k + m + 1
            factor = -factor
        elif n < -1:
            factor *= -(sigma ** ((n + 1) % 2))
            m, n = m + n + 1, -n - 2
        else:
            return (m, n, k), factor
    raise RuntimeError("label reduction did not terminate")


def periodic_shift(m: int, n: int, k: int, root: RootOfUnity, N: int) -> tuple[tuple[int, int, int], int]:
    """Reduce the shift modulo p' using T_{k+p'} = sigma^{p'-p} T_k."""
    q, r = divmod(k, root.pprime)
    return (m, n, r), root.nu(N) ** (q % 2)


@dataclass
class HierarchyContext:
    sector: Sector
    params: ModelParams
    u: complex
    xi: Sequence[complex] | None = None
    root: RootOfUnity | None = None
    rows: Callable[[tuple[int, int], complex], np.ndarray] | None = None
    _base: GetOrCompute = field(default_factory=GetOrCompute, repr=False)
    _fused: GetOrCompute = field(default_factory=GetOrCompute, repr=False)
    _alt: GetOrCompute = field(default_factory=GetOrCompute, repr=False)

    def __post_init__(self) -> None:
        if self.params.N != self.sector.N:
            raise ValueError("params.N and sector.N disagree")
        if self.root is not None and abs(self.root.lam - self.params.lam) > 1e-12:
            raise ValueError("root of unity does not match lambda")

    @property
    def sigma(self) -> int:
        return self.params.sigma

    @property
    def dim(self) -> int:
        return self.sector.dim

    def f(self, k: int) -> complex:
        return f(k, self.u + 0j, self.params.lam, self.params.N, self.xi)

    def fk(self, j: int, k: int) -> complex:
        """f_j evaluated at u + k lam."""
        return f(j, self.u + k * self.params.lam, self.params.lam, self.params.N, self.xi)

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def zeros(self) -> np.ndarray:
        return np.zeros((self.dim, self.dim), dtype=complex)

    def elementary(self, label: tuple[int, int], k: int) -> np.ndarray:
        label = tuple(label)
        factor = 1
        if self.root is not None:
            (_, _, k), factor = periodic_shift(0, 0, k, self.root, self.params.N)

        def build():
            arg = self.u + k * self.params.lam
            if self.rows is not None:
                return self.rows(label, arg)
            return build_elementary(label, arg, self.sector, self.params, self.xi).entries

        return factor * self._base.get((label, k), build)

    def _divide(self, j: int, k: int) -> complex:
        val = self.fk(j, k)
        scale = max(1.0, abs(self.fk(1, k)), abs(self.fk(0, k)))
        if abs(val) < F_MARGIN * scale:
            raise ResampleError(f"f_{j}(u+{k} lam) = {val:.3e} is too small")
        return val

    def _canonical(self, m, n, k):
        (m, n, k), factor = apply_identification(m, n, k, self.sigma)
        if self.root is not None:
            (m, n, k), extra = periodic_shift(m, n, k, self.root, self.params.N)
            factor *= extra
        return (m, n, k), factor

    def T(self, m: int, n: int, k: int = 0) -> np.ndarray:
        """Fused matrix from the recursion in m."""
        (m, n, k), factor = self._canonical(m, n, k)
        if m == -1 or n == -1:
            return self.zeros()
        return factor * self._fused.get((m, n, k), lambda: self._build(m, n, k))

    def _base_case(self, m, n, k):
        if (m, n) == (0, 0):
            return self.fk(-1, k) * self.identity()
        if (m, n) == (1, 0):
            return self.elementary((1, 0), k)
        if (m, n) == (0, 1):
            return self.elementary((0, 1), k)
        return None

    def _build(self, m, n, k):
        base = self._base_case(m, n, k)
        if base is not None:
            return base
        T = self.T
        num = (T(1, 0, k) @ T(m - 1, n, k + 1) - T(0, 1, k) @ T(m - 2, n, k + 2)
               + self.sigma * self.fk(-1, k) * T(m - 3, n, k + 3))
        return num / self._divide(0, k)

    def T_alt(self, m: int, n: int, k: int = 0) -> np.ndarray:
        """Fused matrix from the recursion in n."""
        (m, n, k), factor = self._canonical(m, n, k)
        if m == -1 or n == -1:
            return self.zeros()
        return factor * self._alt.get((m, n, k), lambda: self._build_alt(m, n, k))

    def _build_alt(self, m, n, k):
        base = self._base_case(m, n, k)
        if base is not None:
            return base
        T = self.T_alt
        s = m + n
        num = (T(m, n - 1, k) @ T(0, 1, k + s - 1) - self.sigma * T(m, n - 2, k) @ T(1, 0, k + s - 1)
               + self.fk(s - 1, k) * T(m, n - 3, k))
        return num / self._divide(s - 2, k)

    def transfer(self, m: int, n: int, k: int = 0) -> TransferMatrix:
        return TransferMatrix((m, n), k, self.sector, self.params, self.T(m, n, k), self.u + k * self.params.lam)


def fused_T(m: int, n: int, k: int, ctx: HierarchyContext) -> np.ndarray:
    return ctx.T(m, n, k)


def fused_T_alt(m: int, n: int, k: int, ctx: HierarchyContext) -> np.ndarray:
    return ctx.T_alt(m, n, k)


def braid_normalisation(m: int, n: int, sign: int, u: complex, lam: float, N: int) -> complex:
    """Factor whose product with T^{m,n}(u) tends to the fused braid matrix."""
    from .scalars import s
    phi = (math.pi - lam) / 3.0
    e = 1 if sign > 0 else -1
    return (np.exp(1j * e * (m + 2 * n) * phi) / s(m + n - 1, u, lam)) ** N


def numeric_braid_limit(m: int, n: int, sign: int, sector: Sector, params: ModelParams,
                        height: float = 12.0, re: float = 0.37) -> np.ndarray:
    """Normalised fused matrix at u = re + sign*i*height."""
    u = complex(re, height if sign > 0 else -height)
    ctx = HierarchyContext(sector, params, u)
    return braid_normalisation(m, n, sign, u, params.lam, params.N) * ctx.T(m, n, 0)
