"""Elementary face operators and their local relations.

A tile has four edges listed clockwise as (W, N, E, S).  Each edge is either
vacant or carries a loop segment, and the segments pair up the occupied edges
without crossing.  The (1,0) face is

    s1(-u) [empty + (W-N, E-S)] + t [W-N] + 1/t [E-S]
        + s0(u) [N-S] + s0(u) [W-E] + s0(u) [(W-S, N-E)]

and the (0,1) face is the (1,0) face at lam - u turned a quarter turn
counter-clockwise.  Seen from the south-west corner, the (1,0) face maps the
edges (W, S) to (N, E) and conserves the number of occupied edges.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linkstate import (DiagramSum, PatchDiagram, Piece, contract, patch,
                        residual)
from .scalars import ModelParams, ParameterError, s

W, N_, E, S = 0, 1, 2, 3

# canonical (1,0) tiles and their weight-group tags
EMPTY = patch("0000")
LOOPS_ID = patch("1111", (0, 1), (2, 3))
CORNER_WN = patch("1100", (0, 1))
CORNER_ES = patch("0011", (2, 3))
VERTICAL = patch("0101", (1, 3))
HORIZONTAL = patch("1010", (0, 2))
LOOPS_TL = patch("1111", (0, 3), (1, 2))

BASE_TILES: tuple[PatchDiagram, ...] = (EMPTY, LOOPS_ID, CORNER_WN, CORNER_ES, VERTICAL, HORIZONTAL, LOOPS_TL)
BASE_TAGS: tuple[str, ...] = ("s1(-u)", "s1(-u)", "t", "1/t", "s0(u)", "s0(u)", "s0(u)")

# quarter turns: slot k of the unturned tile goes to slot ROT[k]
ROT_CCW = (3, 0, 1, 2)
ROT_CW = (1, 2, 3, 0)

LABELS = ((1, 0), (0, 1))


def rotate(tile: PatchDiagram, turns: int) -> PatchDiagram:
    """Turn a tile counter-clockwise by ``turns`` quarter turns."""
    out = tile
    for _ in range(turns % 4):
        out = out.relabel(ROT_CCW)
    return out


def tiles(label: tuple[int, int]) -> tuple[PatchDiagram, ...]:
    label = tuple(label)
    if label == (1, 0):
        return BASE_TILES
    if label == (0, 1):
        return tuple(rotate(t, 1) for t in BASE_TILES)
    raise ParameterError(f"unknown face label {label!r}")


def base_weights(u: complex, lam: float, t: complex = 1.0) -> np.ndarray:
    a = s(1, -u, lam)
    b = s(0, u, lam)
    return np.array([a, a, t, 1.0 / t, b, b, b], dtype=complex)


def face_weights(label: tuple[int, int], u: complex, lam: float, t: complex = 1.0) -> np.ndarray:
    """Weights aligned with ``tiles(label)``."""
    label = tuple(label)
    if label == (1, 0):
        return base_weights(u, lam, t)
    if label == (0, 1):
        return base_weights(lam - u, lam, t)
    raise ParameterError(f"unknown face label {label!r}")


def braid_weights(label: tuple[int, int], sign: int, lam: float) -> np.ndarray:
    """Weights of the u -> sign*i*inf limit, aligned with ``tiles(label)``."""
    phi = (math.pi - lam) / 3.0
    e = 1 if sign > 0 else -1
    if tuple(label) == (1, 0):
        a, b = cmath.exp(-2j * e * phi), cmath.exp(1j * e * phi)
    elif tuple(label) == (0, 1):
        a, b = cmath.exp(2j * e * phi), cmath.exp(-1j * e * phi)
    else:
        raise ParameterError(f"unknown face label {label!r}")
    return np.array([a, a, 0.0, 0.0, b, b, b], dtype=complex)


def braid_normalisation(label: tuple[int, int], sign: int, u: complex, lam: float) -> complex:
    """Scalar multiplying a face at u so that it tends to the braid face."""
    phi = (math.pi - lam) / 3.0
    e = 1 if sign > 0 else -1
    k = 1 if tuple(label) == (1, 0) else 2
    return cmath.exp(1j * e * k * phi) / s(0, u, lam)


@dataclass(frozen=True)
class FaceOperator:
    label: str
    tiles: tuple[PatchDiagram, ...]
    weights: tuple[complex, ...]
    tags: tuple[str, ...]

    def as_sum(self) -> DiagramSum:
        out = DiagramSum(4)
        for t, w in zip(self.tiles, self.weights):
            out.add(t, w)
        return out.pruned(0.0)

    def coefficient(self, tile: PatchDiagram) -> complex:
        return sum(w for t, w in zip(self.tiles, self.weights) if t == tile)

    def to_json(self) -> str:
        rows = []
        for t, w, tag in zip(self.tiles, self.weights, self.tags):
            row = t.to_json()
            row.update(weight=tag, value=[complex(w).real, complex(w).imag])
            rows.append(row)
        return json.dumps({"label": self.label, "edge_order": "W,N,E,S", "tiles": rows}, indent=2)


def face(label: tuple[int, int], u: complex, params: ModelParams) -> FaceOperator:
    lab = tuple(label)
    tags = BASE_TAGS if lab == (1, 0) else tuple(x.replace("u", "(lam-u)") if "s" in x else x for x in BASE_TAGS)
    return FaceOperator(str(lab), tiles(lab), tuple(face_weights(lab, u, params.lam, params.t)), tags)


def braid_face(label: tuple[int, int], sign: int, params: ModelParams) -> FaceOperator:
    lab = tuple(label)
    w = braid_weights(lab, sign, params.lam)
    keep = [k for k in range(7) if w[k] != 0]
    e = (1 if sign > 0 else -1) * (1 if lab == (1, 0) else -1)
    group = {0: -2 * e, 1: -2 * e, 4: e, 5: e, 6: e}
    tags = tuple(f"exp({group[k]:+d}i*phi), phi=(pi-lam)/3" for k in keep)
    return FaceOperator(f"braid{lab}{'+' if sign > 0 else '-'}", tuple(tiles(lab)[k] for k in keep),
                        tuple(w[k] for k in keep), tags)


def braid_limit_residual(label: tuple[int, int], sign: int, params: ModelParams, height: float = 40.0) -> float:
    """Distance between the normalised face at u = sign*i*height and the braid face."""
    u = 1j * height * (1 if sign > 0 else -1) + 0.3
    w = braid_normalisation(label, sign, u, params.lam) * face_weights(label, u, params.lam, params.t)
    return float(np.max(np.abs(w - braid_weights(label, sign, params.lam))))


# ---------------------------------------------------------------------------
# local relations


def face_piece(label: tuple[int, int], ports: Sequence[str], name: str = "") -> Piece:
    """A face whose own (W, N, E, S) edges are named by ``ports``."""
    return Piece(tuple(ports), tiles(label), name)


def _glue(items, external, lam):
    return contract([(face_piece(lab, ports), face_weights(lab, u, lam)) for lab, u, ports in items],
                    external, 2 * math.cos(lam))


def _faces_on_strands(lam, specs, n_strands):
    """Stack faces acting on pairs of adjacent strands, bottom first.

    Strand positions carry running names; a face on strands (j, j+1) takes
    (W, S) from the current names of j and j+1 and emits (N, E).
    """
    cur = [f"b{k}" for k in range(n_strands)]
    items = []
    for level, (lab, u, j) in enumerate(specs):
        n_left, n_right = f"l{level}", f"r{level}"
        items.append((lab, u, (cur[j], n_left, n_right, cur[j + 1])))
        cur[j], cur[j + 1] = n_left, n_right
    return items, cur


def _strand_product(specs, n_strands, lam):
    items, cur = _faces_on_strands(lam, specs, n_strands)
    ext = [f"b{k}" for k in range(n_strands)] + cur
    renamed = []
    top = [f"t{k}" for k in range(n_strands)]
    mapping = dict(zip(cur, top))
    for lab, u, ports in items:
        renamed.append((lab, u, tuple(mapping.get(p, p) for p in ports)))
    # strands untouched by any face run straight through
    ext = [f"b{k}" for k in range(n_strands)] + top
    pieces = []
    for k in range(n_strands):
        if mapping.get(f"b{k}") == f"t{k}":
            pieces.append(("id", f"b{k}", f"t{k}"))
    if pieces:
        raise ParameterError("every strand must be touched by a face")
    return _glue(renamed, ext, lam)


# intertwiner between a top row and a bottom row: (label, shift in units of lam)
# for an argument x_bottom - x_top + shift*lam
_INTERTWINERS = {
    ((1, 0), (1, 0)): ((1, 0), 0),
    ((1, 0), (0, 1)): ((0, 1), 0),
    ((0, 1), (1, 0)): ((0, 1), -1),
    ((0, 1), (0, 1)): ((1, 0), 0),
}

_HEX = ["L1", "L2", "T", "R1", "R2", "B"]


def _row_exchange(top, x_top, bottom, x_bottom, lam, intertwiner_left: bool) -> DiagramSum:
    """Two stacked faces with the intertwiner glued on their left or right."""
    x_label, shift = _INTERTWINERS[(tuple(top), tuple(bottom))]
    w = x_bottom - x_top + shift * lam
    if intertwiner_left:
        X = (x_label, w, ("L1", "a", "b", "L2"))
        A = (top, x_top, ("a", "T", "R1", "m"))
        B = (bottom, x_bottom, ("b", "m", "R2", "B"))
    else:
        X = (x_label, w, ("a", "R1", "R2", "b"))
        A = (bottom, x_bottom, ("L1", "T", "a", "m"))
        B = (top, x_top, ("L2", "m", "b", "B"))
    return _glue([X, A, B], _HEX, lam)


def check_ybe(u: complex, v: complex, params: ModelParams) -> dict[str, float]:
    """Residuals of the Yang-Baxter equations.

    ``strands``: R1(u) R2(u+v) R1(v) = R2(v) R1(u+v) R2(u) for (1,0) faces
    acting on three strands.  ``rows a|b``: a row of type a stacked on a row of
    type b can be exchanged through an intertwiner face (arguments u, v for the
    two rows).  The (1,0)|(0,1) version is the one that is not a rotation of
    the pure equation.
    """
    lam = params.lam
    lhs = _strand_product([((1, 0), v, 0), ((1, 0), u + v, 1), ((1, 0), u, 0)], 3, lam)
    rhs = _strand_product([((1, 0), u, 1), ((1, 0), u + v, 0), ((1, 0), v, 1)], 3, lam)
    out = {"strands": residual(lhs, rhs)}
    for top, bottom in _INTERTWINERS:
        left = _row_exchange(top, u, bottom, v, lam, True)
        right = _row_exchange(top, u, bottom, v, lam, False)
        out[f"rows {top}|{bottom}"] = residual(left, right)
    return out


def _scalar_fit(diagram: DiagramSum, ref: DiagramSum) -> tuple[complex, float]:
    keys = sorted(set(diagram.terms) | set(ref.terms))
    a = np.array([ref.coefficient(k) for k in keys], dtype=complex)
    b = np.array([diagram.coefficient(k) for k in keys], dtype=complex)
    c = complex(np.vdot(a, b) / np.vdot(a, a))
    return c, float(np.linalg.norm(b - c * a) / (np.linalg.norm(b) + np.linalg.norm(c * a) + 1.0))


@dataclass(frozen=True)
class InversionResult:
    scalar_direct: complex
    scalar_crossed: complex
    residual_direct: float
    residual_crossed: float


def check_inversion(u: complex, params: ModelParams) -> InversionResult:
    """Two faces glued along two edges collapse to a multiple of the identity.

    Direct channel: faces at u and -u.  Crossed channel: the faces turned a
    quarter turn, at u and 3 lam - u.  The fitted scalars are returned with the
    distance of each composite from the identity line.
    """
    lam = params.lam
    ref = DiagramSum(4)
    for occ in ((0, 0), (0, 1), (1, 0), (1, 1)):
        bits = f"{occ[0]}{occ[1]}{occ[0]}{occ[1]}"
        pairs = [(k, k + 2) for k in range(2) if occ[k]]
        ref.add(patch(bits, *pairs), 1.0)
    ext = ["L1", "L2", "R1", "R2"]

    def composite(w1, w2, turns):
        d1 = ["L1", "p", "q", "L2"]
        d2 = ["p", "R1", "R2", "q"]
        A = ((1, 0), w1, tuple(d1[(k + turns) % 4] for k in range(4)))
        B = ((1, 0), w2, tuple(d2[(k + turns) % 4] for k in range(4)))
        return _glue([A, B], ext, lam)

    c1, r1 = _scalar_fit(composite(u, -u, 0), ref)
    c2, r2 = _scalar_fit(composite(u, 3 * lam - u, 1), ref)
    return InversionResult(c1, c2, r1, r2)


def face_occupancy_matrix(weights: np.ndarray, label=(1, 0)) -> np.ndarray:
    """Linear map from (W, S) occupancies to (N, E) occupancies."""
    mat = np.zeros((4, 4), dtype=complex)
    for tile, w in zip(tiles(label), weights):
        occ = tile.occupied
        i = 2 * occ[W] + occ[S]
        o = 2 * occ[N_] + occ[E]
        mat[o, i] += w
    return mat


def face_rank(u: complex, params: ModelParams, tol: float = 1e-9) -> int:
    return int(np.linalg.matrix_rank(face_occupancy_matrix(face_weights((1, 0), u, params.lam, params.t)), tol=tol))


def check_face_rank_at_lambda(params: ModelParams) -> int:
    return face_rank(params.lam, params)
