"""Scalar building blocks: trigonometric face weights, q-numbers, sl(3)
characters, and the closed-form braid and closure eigenvalues."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_TWO_PI = 2.0 * math.pi


class ParameterError(ValueError):
    """Raised for degenerate or inconsistent model parameters."""


class SingularityError(ZeroDivisionError):
    """Raised when a q-number or Vandermonde denominator vanishes."""


@dataclass(frozen=True)
class ModelParams:
    """Crossing parameter, twist and gauge for the loop model.

    ``alpha`` defaults to ``omega + 1/omega`` which is the natural weight of
    non-contractible loops when no defects are present.
    """

    lam: float
    N: int
    omega: complex = 1.0
    alpha: complex | None = None
    t: complex = 1.0

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ParameterError("system size N must be positive")
        if abs(math.sin(self.lam)) < 1e-14:
            raise ParameterError("lambda must not be a multiple of pi")
        if self.omega == 0:
            raise ParameterError("twist omega must be nonzero")
        if self.t == 0:
            raise ParameterError("gauge t must be nonzero")
        if self.alpha is None:
            object.__setattr__(self, "alpha", self.omega + 1.0 / self.omega)

    @property
    def q(self) -> complex:
        return cmath.exp(1j * self.lam)

    @property
    def beta(self) -> float:
        return 2.0 * math.cos(self.lam)

    @property
    def sigma(self) -> int:
        return -1 if self.N % 2 else 1

    def with_(self, **changes) -> "ModelParams":
        data = dict(lam=self.lam, N=self.N, omega=self.omega, alpha=self.alpha, t=self.t)
        if "omega" in changes and "alpha" not in changes:
            data["alpha"] = None
        data.update(changes)
        return ModelParams(**data)

    def key(self) -> tuple:
        return (round(self.lam, 15), self.N, complex(self.omega), complex(self.alpha), complex(self.t))


@dataclass(frozen=True)
class RootOfUnity:
    p: int
    pprime: int
    lam: float = field(init=False)

    def __post_init__(self) -> None:
        if not (1 <= self.p < self.pprime):
            raise ParameterError("need 1 <= p < p'")
        if math.gcd(self.p, self.pprime) != 1:
            raise ParameterError(f"p={self.p} and p'={self.pprime} are not coprime")
        object.__setattr__(self, "lam", math.pi * (self.pprime - self.p) / self.pprime)

    def nu(self, N: int) -> int:
        return -1 if ((self.pprime - self.p) * N) % 2 else 1

    def params(self, N: int, omega: complex = 1.0, alpha: complex | None = None, t: complex = 1.0) -> ModelParams:
        return ModelParams(lam=self.lam, N=N, omega=omega, alpha=alpha, t=t)


def s(k: int, u: complex, lam: float) -> complex:
    """Face weight sin(k lam + u) / sin(lam)."""
    den = math.sin(lam)
    if abs(den) < 1e-14:
        raise ParameterError("lambda must not be a multiple of pi")
    return cmath.sin(k * lam + u) / den


def f(k: int, u: complex, lam: float, N: int, xi: Sequence[complex] | None = None) -> complex:
    """Product of s_k over the N columns; homogeneous when ``xi`` is None."""
    if xi is None:
        return s(k, u, lam) ** N
    if len(xi) != N:
        raise ParameterError("need one inhomogeneity per column")
    out = 1.0 + 0j
    for x in xi:
        out *= s(k, u + x, lam)
    return out


def qnum(k: int, lam: float) -> complex:
    """[k] = (q^k - q^-k)/(q - q^-1) at q = e^{i lam}."""
    return math.sin(k * lam) / math.sin(lam)


def _checked_qnum(j: int, lam: float) -> float:
    val = qnum(j, lam)
    if abs(val) < 1e-12:
        raise SingularityError(f"q-number [{j}] vanishes at lambda={lam!r}")
    return val


def qfact(m: int, lam: float) -> float:
    out = 1.0
    for j in range(1, m + 1):
        out *= qnum(j, lam)
    return out


def qbinom(m: int, k: int, lam: float) -> float:
    """Gaussian binomial; raises SingularityError on a vanishing denominator."""
    if k < 0 or k > m:
        return 0.0
    num = 1.0
    den = 1.0
    for j in range(1, k + 1):
        num *= qnum(m - k + j, lam)
        den *= _checked_qnum(j, lam)
    return num / den


def chebyshev_u(m: int, y1: complex, y2: complex, eps: float = 1e-8) -> complex:
    """sl(3) character of the (m,0) representation with eigenvalues y1, y2, 1/(y1 y2).

    Evaluated as the complete homogeneous symmetric polynomial h_m, which is
    the Vandermonde ratio with its removable singularities filled in.  The
    ratio form is used when the arguments are well separated, the stable
    form otherwise.
    """
    if m < 0:
        return 0.0 + 0j
    if y1 == 0 or y2 == 0:
        raise SingularityError("arguments must be nonzero")
    y3 = 1.0 / (y1 * y2)
    vdm = (y1 - y2) * (y1 - y3) * (y2 - y3)
    scale = max(abs(y1), abs(y2), abs(y3), 1.0)
    if min(abs(y1 - y2), abs(y1 - y3), abs(y2 - y3)) > eps * scale:
        num = y1 ** (m + 2) * (y2 - y3) + y2 ** (m + 2) * (y3 - y1) + y3 ** (m + 2) * (y1 - y2)
        return num / vdm
    # h_m(y1,y2,y3) = sum_{i+j+k=m} y1^i y2^j y3^k
    total = 0j
    for i in range(m + 1):
        for j in range(m + 1 - i):
            total += y1 ** i * y2 ** j * y3 ** (m - i - j)
    return total


@dataclass(frozen=True)
class BraidSpectrum:
    theta1: float
    theta2: float
    theta3: float

    @classmethod
    def of(cls, d: int, v: int, a: int, lam: float) -> "BraidSpectrum":
        phi = (math.pi - lam) / 3.0
        return cls(phi * (-a - 2 * d + v), phi * (2 * a + d - 2 * v), phi * (-a + d + v))


def _sign(sign: int | str) -> int:
    if sign in (1, "+", "+1"):
        return 1
    if sign in (-1, "-", "-1"):
        return -1
    raise ParameterError(f"sign must be + or -, got {sign!r}")


def braid_eigenvalue(label: tuple[int, int], sign, d: int, v: int, a: int, lam: float, omega: complex) -> complex:
    """Eigenvalue of the single-row braid transfer matrix on sector (d, v, a)."""
    e = _sign(sign)
    th = BraidSpectrum.of(d, v, a, lam)
    w = complex(omega)
    if tuple(label) == (1, 0):
        return (w * cmath.exp(1j * e * th.theta1) + cmath.exp(1j * e * th.theta2)
                + cmath.exp(1j * e * th.theta3) / w)
    if tuple(label) == (0, 1):
        return (w * cmath.exp(-1j * e * th.theta3) + cmath.exp(-1j * e * th.theta2)
                + cmath.exp(-1j * e * th.theta1) / w)
    raise ParameterError(f"unknown label {label!r}")


def braid_arguments(sign, d: int, v: int, a: int, lam: float, omega: complex) -> tuple[complex, complex]:
    """The pair (y1, y2) feeding the (m,0) characters."""
    e = _sign(sign)
    th = BraidSpectrum.of(d, v, a, lam)
    return complex(omega) * cmath.exp(1j * e * th.theta1), cmath.exp(1j * e * th.theta2)


def fused_braid_eigenvalue(m: int, n: int, sign, d: int, v: int, a: int, lam: float, omega: complex) -> complex:
    """Braid limit of the fused (m,n) eigenvalue.

    The rectangular values are characters; mixed labels follow from
    T^{m,n} = T^{m,0} T^{0,n} - T^{m-1,0} T^{0,n-1}.
    """
    if m < 0 or n < 0:
        return 0j
    y1, y2 = braid_arguments(sign, d, v, a, lam, omega)
    z1, z2 = 1.0 / y1, 1.0 / y2

    def rect_m(k):
        return chebyshev_u(k, y1, y2)

    def rect_n(k):
        return chebyshev_u(k, z1, z2)

    return rect_m(m) * rect_n(n) - rect_m(m - 1) * rect_n(n - 1)


@dataclass(frozen=True)
class ClosureSpectrum:
    kappa: complex
    kappa_tilde: complex
    J: complex
    K: complex
    phases: tuple[complex, complex, complex]


def closure_eigenvalues(d: int, v: int, a: int, root: RootOfUnity, omega: complex) -> ClosureSpectrum:
    """Scalars by which the closure tangles J and K act on a sector."""
    N = d + v + 2 * a
    p, pp = root.p, root.pprime
    w = complex(omega)
    kappa = cmath.exp(1j * math.pi * N * (3 * pp - 2 * p) / 3.0)
    kappa_t = cmath.exp(1j * math.pi * N * (3 * pp - p) / 3.0)
    e = lambda x: cmath.exp(1j * math.pi * p * x / 3.0)
    kJ = w ** pp * e(-a - 2 * d + v) + e(2 * a + d - 2 * v) + w ** (-pp) * e(-a + d + v)
    kK = w ** pp * e(a - d - v) + e(-2 * a - d + 2 * v) + w ** (-pp) * e(a + 2 * d - v)
    sgn = lambda x: -1 if (x % 2) else 1
    phases = (w ** pp * sgn(p * (N - v - a)), complex(sgn(p * v)), w ** (-pp) * sgn(p * a))
    return ClosureSpectrum(kappa, kappa_t, kJ / kappa, kK / kappa_t, phases)


def random_spectral(rng: np.random.Generator, scale: float = 1.0) -> complex:
    """A generic complex spectral parameter away from the real axis."""
    return complex(rng.uniform(-scale, scale), rng.uniform(-0.5 * scale, 0.5 * scale))
