"""Direct fusion: projectors on strand bundles, fused faces and fused rows.

Operators on strands are :class:`DiagramSum` objects whose slots list the
bottom (input) strands left to right, then the top (output) strands left to
right.  A plain strand is the dilute identity, vacant plus occupied.  The
building blocks are

* ``merge``: two strands into one, the sum of the three arcs joining its
  three legs (this is the triangle obtained by splitting a face at u = lam);
* ``split``: one strand into two, the same three arcs weighted q, 1/q and 1,
  so that ``merge`` after ``split`` is [2] times a plain strand;
* ``cap`` / ``cup``: a (1,0) strand and a (0,1) strand closing off; the cup
  is wavy (arc weighted q, vacancy weighted q^-2), so a closed wavy loop is
  q beta + q^-2 = [3].

P^{m,0} follows the Wenzl-Jones recursion, P^{0,n} is P^{n,0} reflected left
to right (in this strand realisation that is what the half turn amounts to), and P^{m,n} sums over k nested cup-caps between the two groups.

A fused row of type (m, n) stacks m (1,0) faces at u, u + lam, ... and then n
(0,1) faces at u + m lam, ... in every column, with one projector on the
horizontal bundle at the seam, divided by f_0 f_1 ... f_{m+n-2}.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import faceops
from .hierarchy import ResampleError
from .linkstate import (DiagramSum, PatchDiagram, Piece, Sector, compile_network, compose, identity_patch, patch, residual,
                        sum_as_piece)
from .scalars import ModelParams, SingularityError, f, qbinom, qnum, s
from .transfer import GetOrCompute, SizeError, TransferMatrix, persisted

MAX_LEVEL = 3
MAX_N = 3

_NETWORKS = GetOrCompute()


# ---------------------------------------------------------------------------
# strand operators


def _op(n_in: int, n_out: int) -> DiagramSum:
    return DiagramSum(n_in + n_out)


def identity(n: int) -> DiagramSum:
    return identity_patch(n)


def tensor(a: DiagramSum, a_in: int, b: DiagramSum, b_in: int) -> DiagramSum:
    """a to the left of b."""
    a_out, b_out = a.size - a_in, b.size - b_in
    n_in = a_in + b_in
    pos_a = list(range(a_in)) + [n_in + k for k in range(a_out)]
    pos_b = [a_in + k for k in range(b_in)] + [n_in + a_out + k for k in range(b_out)]
    out = DiagramSum(a.size + b.size)
    for da, ca in a.terms.items():
        for db, cb in b.terms.items():
            occ = [False] * out.size
            for k, o in enumerate(da.occupied):
                occ[pos_a[k]] = o
            for k, o in enumerate(db.occupied):
                occ[pos_b[k]] = o
            pairs = [(pos_a[i], pos_a[j]) for i, j in da.pairs] + [(pos_b[i], pos_b[j]) for i, j in db.pairs]
            out.add(PatchDiagram(tuple(occ), tuple(pairs)), ca * cb)
    return out


def then(first: DiagramSum, second: DiagramSum, n_mid: int, beta: float) -> DiagramSum:
    """Apply ``first`` and then ``second``."""
    return compose(second, first, n_mid, beta)


def rotate_half(op: DiagramSum, n_in: int) -> DiagramSum:
    """Turn an operator half a turn: bottom slot k becomes top slot n_out-1-k."""
    n_out = op.size - n_in
    perm = [n_out + (n_in - 1 - k) for k in range(n_in)] + [n_out - 1 - k for k in range(n_out)]
    # new layout has n_out inputs then n_in outputs
    return op.relabel(perm)


def mirror(op: DiagramSum, n: int) -> DiagramSum:
    """Left-right reflection of an n-to-n operator."""
    return op.relabel([n - 1 - k for k in range(n)] + [2 * n - 1 - k for k in range(n)])


def merge() -> DiagramSum:
    """Two strands into one: slots (b0, b1, t0)."""
    out = _op(2, 1)
    for pr in ((0, 1), (0, 2), (1, 2)):
        bits = "".join("1" if k in pr else "0" for k in range(3))
        out.add(patch(bits, pr), 1.0)
    return out


def split(q: complex) -> DiagramSum:
    """One strand into two: slots (b0, t0, t1)."""
    out = _op(1, 2)
    for pr, c in (((0, 1), q), ((0, 2), 1 / q), ((1, 2), 1.0)):
        bits = "".join("1" if k in pr else "0" for k in range(3))
        out.add(patch(bits, pr), c)
    return out


def wavy(q: complex) -> DiagramSum:
    out = _op(1, 1)
    out.add(patch("11", (0, 1)), q)
    out.add(patch("00"), q ** -2)
    return out


def cap() -> DiagramSum:
    """A (1,0) strand and a (0,1) strand ending: slots (b0, b1)."""
    out = _op(2, 0)
    out.add(patch("11", (0, 1)), 1.0)
    out.add(patch("00"), 1.0)
    return out


def cup(q: complex) -> DiagramSum:
    """A wavy (1,0), (0,1) pair starting: slots (t0, t1)."""
    out = _op(0, 2)
    out.add(patch("11", (0, 1)), q)
    out.add(patch("00"), q ** -2)
    return out


def bubble_value(q: complex, beta: float) -> complex:
    """merge after split on one strand, as a multiple of the plain strand."""
    op = then(split(q), merge(), 2, beta)
    return faceops._scalar_fit(op, identity(1))[0]


def wavy_loop_value(q: complex, beta: float) -> complex:
    op = then(cup(q), cap(), 2, beta)
    return op.coefficient(patch(""))


@dataclass(frozen=True)
class Projector:
    label: tuple[int, int]
    body: DiagramSum
    marker: str

    @property
    def strands(self) -> int:
        return sum(self.label)


def _q(lam: float) -> complex:
    return cmath.exp(1j * lam)


def _ratio(num: float, den: float) -> float:
    if abs(den) < 1e-12:
        raise SingularityError("q-number denominator vanishes")
    return num / den


@lru_cache(maxsize=None)
def _projector_body(m: int, n: int, lam: float) -> DiagramSum:
    q, beta = _q(lam), 2 * math.cos(lam)
    if m + n == 1:
        return identity(1)
    if n == 0:
        prev = tensor(_projector_body(m - 1, 0, lam), m - 1, identity(1), 1)
        E = then(merge(), split(q), 1, beta)
        mid = tensor(identity(m - 2), m - 2, E, 2)
        c = _ratio(qnum(m - 1, lam).real, qnum(m, lam).real)
        return prev - then(then(prev, mid, m, beta), prev, m, beta) * c
    if m == 0:
        return mirror(_projector_body(n, 0, lam), n)
    outer = tensor(_projector_body(m, 0, lam), m, _projector_body(0, n, lam), n)
    total = outer * 1.0
    for k in range(1, min(m, n) + 1):
        nest = tensor(tensor(identity(m - k), m - k, nested_cupcap(k, q, beta), 2 * k), m + k,
                      identity(n - k), n - k)
        c = (-1) ** k * _ratio(qbinom(m, k, lam) * qbinom(n, k, lam), qbinom(m + n + 1, k, lam))
        total = total + then(then(outer, nest, m + n, beta), outer, m + n, beta) * c
    return total


def nested_cupcap(k: int, q: complex, beta: float) -> DiagramSum:
    """k nested caps followed by k nested cups on 2k strands."""
    caps, cups = cap(), cup(q)
    for j in range(1, k):
        caps = then(tensor(tensor(identity(1), 1, caps, 2 * j), 1 + 2 * j, identity(1), 1), cap(), 2, beta)
        cups = then(cup(q), tensor(tensor(identity(1), 1, cups, 0), 1, identity(1), 1), 2, beta)
    return then(caps, cups, 0, beta)


def projector(m: int, n: int, lam: float) -> Projector:
    if (m, n) == (0, 0) or m < 0 or n < 0:
        raise ValueError("projector label must be non-negative and nonzero")
    if m + n > MAX_LEVEL:
        raise ValueError(f"direct fusion is limited to m + n <= {MAX_LEVEL}")
    return Projector((m, n), _projector_body(m, n, round(lam, 15)).pruned(), "bottom-left" if m else "bottom-right")


# ---------------------------------------------------------------------------
# fused faces and rows


def column_levels(m: int, n: int) -> list[tuple[tuple[int, int], int]]:
    """(label, shift) of each face in a fused column, bottom first."""
    return [((1, 0), r) for r in range(m)] + [((0, 1), m + r) for r in range(n)]


def normalisation(m: int, n: int, u: complex, lam: float, N: int = 1) -> complex:
    """Product f_0 f_1 ... f_{m+n-2} at u; the fused face or row is divided by it."""
    out = 1.0 + 0j
    for k in range(m + n - 1):
        out *= f(k, u, lam, N)
    return out


def _column_pieces(m: int, n: int, col: int, left: str, right: str, bottom: str, top: str) -> list[Piece]:
    L = m + n
    vert = [bottom] + [f"v{col}_{r}" for r in range(1, L)] + [top]
    return [faceops.face_piece(lab, (f"{left}{r}", vert[r + 1], f"{right}{r}", vert[r]), name=f"c{col}l{r}")
            for r, (lab, _) in enumerate(column_levels(m, n))]


def _column_weights(m: int, n: int, u: complex, lam: float) -> list[np.ndarray]:
    # always the t = 1 gauge: the triangles change the number of occupied
    # horizontal edges, so gauge factors would not cancel around the row
    return [faceops.face_weights(lab, u + k * lam, lam) for lab, k in column_levels(m, n)]


def fused_face(m: int, n: int, u: complex, params: ModelParams) -> DiagramSum:
    """Fused face with the projector on its west side.

    Slots: W edges bottom to top, then N, then E edges bottom to top, then S.
    """
    _check_level(m, n)
    L = m + n
    lam = params.lam
    norm = normalisation(m, n, u, lam)
    if abs(norm) < 1e-10:
        raise ResampleError("fused face normalisation vanishes")
    P = projector(m, n, lam).body
    pp, pw = sum_as_piece([f"w{r}" for r in range(L)] + [f"x{r}" for r in range(L)], P, name="P")
    pieces = _column_pieces(m, n, 0, "x", "e", "S", "N")
    weights = _column_weights(m, n, u, lam)
    ext = [f"w{r}" for r in range(L)] + ["N"] + [f"e{r}" for r in range(L)] + ["S"]
    from .linkstate import contract
    out = contract([(pp, pw)] + list(zip(pieces, weights)), ext, params.beta)
    return out * (1 / norm)


def _check_level(m: int, n: int) -> None:
    if m < 0 or n < 0 or (m, n) == (0, 0):
        raise ValueError("fusion label must be non-negative and nonzero")
    if m + n > MAX_LEVEL:
        raise ValueError(f"direct fusion is limited to m + n <= {MAX_LEVEL}")


def fused_row_network(m: int, n: int, N: int, lam: float):
    """Compiled periodic row of fused columns with one projector at the seam."""
    L = m + n

    def build():
        pieces: list[Piece] = []
        for j in range(N):
            pieces += _column_pieces(m, n, j, f"h{j}_", f"h{j + 1}_", f"b{j}", f"t{j}")
        seam = {f"h{N}_{r}": ((N - 1) * L + r, 2) for r in range(L)}
        P = projector(m, n, lam).body
        pp, pw = sum_as_piece([f"h{N}_{r}" for r in range(L)] + [f"h0_{r}" for r in range(L)], P, name="P")
        pieces.append(pp)
        external = [f"t{j}" for j in range(N)] + [f"b{j}" for j in range(N)]
        return compile_network(pieces, external, seam), pw

    key = ("fused", m, n, N, round(lam, 15))
    return _NETWORKS.get(key, persisted(key, build))


def direct_fused_transfer(m: int, n: int, u: complex, sector: Sector, params: ModelParams) -> TransferMatrix:
    """T^{m,n}(u) contracted directly from faces and a projector."""
    from .transfer import network_matrices

    _check_level(m, n)
    N = sector.N
    if N > MAX_N:
        raise SizeError(f"direct fusion is limited to N <= {MAX_N}")
    lam = params.lam
    norm = normalisation(m, n, u, lam, N)
    if abs(norm) < 1e-10:
        raise ResampleError("fused row normalisation vanishes")
    net, pw = fused_row_network(m, n, N, lam)
    col = _column_weights(m, n, u, lam)
    weights = col * N + [pw]
    coeffs = net.coefficients(weights, params.beta, params.alpha)
    mats = network_matrices(("fused", m, n, N, round(lam, 15)), net, sector, params)
    return TransferMatrix((m, n), 0, sector, params, np.tensordot(coeffs, mats, axes=1) / norm, u)


# ---------------------------------------------------------------------------
# identities


def partial_trace(op: DiagramSum, n: int, q: complex, beta: float) -> DiagramSum:
    """Close the rightmost strand of an n-to-n operator around to the right."""
    rest = identity(n - 1)
    opened = tensor(rest, n - 1, cup(q), 0)
    body = tensor(op, n, identity(1), 1)
    closed = tensor(rest, n - 1, cap(), 2)
    return then(then(opened, body, n + 1, beta), closed, n + 1, beta)


def _on_strands(op: DiagramSum, op_in: int, left: int, right: int) -> DiagramSum:
    return tensor(tensor(identity(left), left, op, op_in), left + op_in, identity(right), right)


def _dsum_check(id_: str, label: str, lhs: DiagramSum, rhs: DiagramSum, tol: float, **detail):
    from .relations import IdentityCheck

    return IdentityCheck(id_, label, float(residual(lhs, rhs)), tol, [], "model", detail)


def verify_projector_identities(m: int, n: int, lam: float, tol: float = 1e-10) -> list:
    """Algebraic properties of P^{m,n} evaluated as diagram sums."""
    _check_level(m, n)
    q, beta = _q(lam), 2 * math.cos(lam)
    L = m + n
    P = projector(m, n, lam).body
    label = f"P{m},{n}"
    out = [_dsum_check("fusion.projector-idempotent", label, then(P, P, L, beta), P, tol)]
    # triangles and caps on neighbouring strands annihilate
    for k in range(L - 1):
        pair = (k < m) == (k + 1 < m)
        if pair:
            top = then(P, _on_strands(merge(), 2, k, L - k - 2), L, beta)
            # the (0,1) group is mirrored, which swaps the split's q and 1/q
            qq = q if k < m else 1 / q
            bottom = then(_on_strands(split(qq), 1, k, L - k - 2), P, L, beta)
            out.append(_dsum_check("fusion.projector-merge-kills", label, top, DiagramSum(top.size), tol))
            out.append(_dsum_check("fusion.projector-split-kills", label, bottom, DiagramSum(bottom.size), tol))
        elif k == m - 1:
            top = then(P, _on_strands(cap(), 2, k, L - k - 2), L, beta)
            bottom = then(_on_strands(cup(q), 0, k, L - k - 2), P, L, beta)
            out.append(_dsum_check("fusion.projector-cap-kills", label, top, DiagramSum(top.size), tol))
            out.append(_dsum_check("fusion.projector-cup-kills", label, bottom, DiagramSum(bottom.size), tol))
    if n == 0:
        for j in range(1, m):
            small = tensor(projector(j, 0, lam).body, j, identity(m - j), m - j)
            out.append(_dsum_check("fusion.projector-absorb", f"{label}/P{j},0", then(small, P, m, beta), P, tol))
            out.append(_dsum_check("fusion.projector-absorb", f"{label}/P{j},0", then(P, small, m, beta), P, tol))
        if m > 1:
            c = qnum(m + 2, lam).real / qnum(m, lam).real
            prev = projector(m - 1, 0, lam).body
            out.append(_dsum_check("fusion.projector-partial-trace", label, partial_trace(P, m, q, beta), prev * c, tol))
    if (m, n) == (2, 0):
        E = then(merge(), split(q), 1, beta)
        out.append(_dsum_check("fusion.projector-recursion-first", label, P,
                               identity(2) - E * (1 / qnum(2, lam).real), tol))
    if (m, n) == (1, 1):
        E = then(cap(), cup(q), 0, beta)
        out.append(_dsum_check("fusion.projector-mixed-first", label, P,
                               identity(2) - E * (1 / qnum(3, lam).real), tol))
    return out


def verify_strand_closures(lam: float, tol: float = 1e-12) -> list:
    """Bubble and wavy loop values, the gates for trusting any projector."""
    from .relations import IdentityCheck

    q, beta = _q(lam), 2 * math.cos(lam)
    return [
        IdentityCheck("fusion.bubble", "strand", abs(bubble_value(q, beta) - qnum(2, lam)), tol, [], "model"),
        IdentityCheck("fusion.wavy-loop", "strand", abs(wavy_loop_value(q, beta) - qnum(3, lam)), tol, [], "model"),
    ]


def _fp(label, x, ports, lam):
    return faceops.face_piece(label, ports), faceops.face_weights(label, x, lam)


def verify_push_through(u: complex, lam: float, tol: float = 1e-10) -> list:
    """Local slide relations of merges, caps and projectors through face columns."""
    from .linkstate import contract

    beta = 2 * math.cos(lam)
    out = []

    def piece(body, ports):
        return sum_as_piece(ports, body)

    # merge on the east of a (1,0),(1,0) column
    ext = ["L0", "L1", "B", "T", "Y"]
    col = [_fp((1, 0), u, ("L0", "v", "R0", "B"), lam), _fp((1, 0), u + lam, ("L1", "T", "R1", "v"), lam)]
    lhs = contract(col + [piece(merge(), ("R0", "R1", "Y"))], ext, beta)
    rhs = contract([piece(merge(), ("L0", "L1", "a")), _fp((0, 1), u, ("a", "T", "Y", "B"), lam)], ext, beta)
    out.append(_dsum_check("fusion.push-merge", "local", lhs, rhs * s(1, u, lam), tol, u=[u.real, u.imag]))
    # caps on the east of mixed columns
    ext = ["L0", "L1", "B", "T"]
    through = contract([piece(cap(), ("L0", "L1")), piece(identity(1), ("B", "T"))], ext, beta)
    for name, (lo, xo), (hi, xi), scalar in (
        ("fusion.push-cap-mixed", ((1, 0), u), ((0, 1), u + lam), s(1, u, lam) * s(1, -u, lam)),
        ("fusion.push-cap-crossed", ((0, 1), lam - u), ((1, 0), 3 * lam - u), s(0, u, lam) * s(3, -u, lam)),
    ):
        col = [_fp(lo, xo, ("L0", "v", "R0", "B"), lam), _fp(hi, xi, ("L1", "T", "R1", "v"), lam)]
        lhs = contract(col + [piece(cap(), ("R0", "R1"))], ext, beta)
        out.append(_dsum_check(name, "local", lhs, through * scalar, tol))
    # a projector on the west absorbs one on the east of the fused column
    for m, n in LABELS:
        L = m + n
        P = projector(m, n, lam).body
        col = [_fp(lab, u + k * lam, (f"x{r}", f"v{r + 1}" if r < L - 1 else "N", f"e{r}", f"v{r}" if r else "S"), lam)
               for r, (lab, k) in enumerate(column_levels(m, n))]
        ext = [f"w{r}" for r in range(L)] + ["N"] + [f"y{r}" for r in range(L)] + ["S"]
        west = piece(P, [f"w{r}" for r in range(L)] + [f"x{r}" for r in range(L)])
        east = [f"e{r}" for r in range(L)] + [f"y{r}" for r in range(L)]
        lhs = contract([west] + col + [piece(P, east)], ext, beta)
        rhs = contract([west] + col + [piece(identity(L), east)], ext, beta)
        out.append(_dsum_check("fusion.push-projector", f"P{m},{n}", lhs, rhs, tol))
    return out


def laurent_fit(m: int, n: int, params: ModelParams, points: Sequence[complex]) -> dict:
    """Fit every fused face weight to a e^{iu} + b + c e^{-iu}; returns the worst misfit."""
    if len(points) < 4:
        raise ValueError("need at least four points to test a three-term fit")
    faces = [fused_face(m, n, u, params) for u in points]
    keys = sorted({d for fc in faces for d in fc.terms}, key=lambda d: d.to_json().__repr__())
    basis = np.array([[cmath.exp(1j * u), 1.0, cmath.exp(-1j * u)] for u in points])
    values = np.array([[fc.coefficient(d) for d in keys] for fc in faces])
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    misfit = np.linalg.norm(basis @ coef - values) / (np.linalg.norm(values) + 1.0)
    return {"terms": len(keys), "residual": float(misfit)}


def verify_direct_fusion(sector: Sector, params: ModelParams, points: Sequence[complex],
                         tol: float = 1e-9) -> list:
    """Direct fused rows against the hierarchy, one record per label."""
    from .hierarchy import HierarchyContext
    from .relations import IdentityCheck, residual as mat_residual

    out = []
    for m, n in LABELS:
        if sector.N > MAX_N:
            break
        worst, used = 0.0, []
        for u in points:
            direct = direct_fused_transfer(m, n, u, sector, params).entries
            ref = HierarchyContext(sector, params, u).T(m, n, 0)
            worst = max(worst, mat_residual(direct, ref))
            used.append(u)
        out.append(IdentityCheck("fusion.direct-vs-hierarchy", sector.label(), worst, tol, used, "model",
                                 {"label": [m, n]}))
    return out


LABELS = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]
