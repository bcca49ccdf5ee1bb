"""Single-row transfer matrices on standard modules.

A periodic row is compiled once per (column labels, N): every consistent
choice of tiles is glued into a row diagram together with its count of
closed loops.  Each distinct row diagram is then turned into a matrix on a
sector, and the transfer matrix at a given spectral parameter is a weighted
sum of those matrices.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import pickle
import tempfile
import threading
from pathlib import Path
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from . import faceops
from .linkstate import (CompiledNetwork, Piece, Sector, compile_network, enumerate_states, full_basis,
                        act_on_state, row_matrix)
from .scalars import ModelParams, braid_eigenvalue

MAX_STATES = 20000


class SizeError(ValueError):
    pass


class TranscriptionError(RuntimeError):
    """A structural prediction about the face operators failed."""


@dataclass
class TransferMatrix:
    label: Hashable
    shift: int
    sector: Sector
    params: ModelParams
    entries: np.ndarray
    u: complex | None = None

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        ev = np.linalg.eigvals(self.entries)
        return ev[np.lexsort((ev.imag.round(12), ev.real.round(12)))]


class GetOrCompute:
    """Thread-safe memo table: one computation per key."""

    def __init__(self) -> None:
        self._data: dict = {}
        self._locks: dict = {}
        self._guard = threading.Lock()

    def get(self, key, compute: Callable[[], object]):
        with self._guard:
            if key in self._data:
                return self._data[key]
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            with self._guard:
                if key in self._data:
                    return self._data[key]
            value = compute()
            with self._guard:
                self._data[key] = value
                self._locks.pop(key, None)
            return value

    def clear(self) -> None:
        with self._guard:
            self._data.clear()

    def __len__(self) -> int:
        return len(self._data)


NETWORKS = GetOrCompute()
ROW_MATRICES = GetOrCompute()
MATRICES = GetOrCompute()

_CACHE_DIR: Path | None = None


def set_cache_dir(path: str | os.PathLike | None) -> None:
    """Persist compiled row networks under ``path`` (None turns it off)."""
    global _CACHE_DIR
    _CACHE_DIR = Path(path) if path else None
    if _CACHE_DIR is not None:
        _CACHE_DIR.mkdir(parents=True, exist_ok=True)


def persisted(key: Hashable, build: Callable[[], object]) -> Callable[[], object]:
    """Wrap ``build`` so its result is read from and written to the cache directory."""

    def load_or_build():
        if _CACHE_DIR is None:
            return build()
        path = _CACHE_DIR / f"net-{hashlib.sha256(repr(key).encode()).hexdigest()[:24]}.pkl"
        try:
            with open(path, "rb") as fh:
                return pickle.load(fh)
        except (OSError, pickle.UnpicklingError, EOFError):
            pass
        value = build()
        fd, tmp = tempfile.mkstemp(dir=_CACHE_DIR, suffix=".tmp")
        with os.fdopen(fd, "wb") as fh:
            pickle.dump(value, fh)
        os.replace(tmp, path)
        return value

    return load_or_build


def _check_size(sector: Sector) -> None:
    if sector.dim > MAX_STATES:
        raise SizeError(f"sector {sector} has {sector.dim} states, above the cap {MAX_STATES}")


def elementary_row_pieces(labels: Sequence[tuple[int, int]]) -> tuple[list[Piece], list[str], dict]:
    """Faces of a periodic row; column j has edges h_j (W), t_j (N), h_{j+1} (E), b_j (S)."""
    N = len(labels)
    pieces = [faceops.face_piece(lab, (f"h{j}", f"t{j}", f"h{(j + 1) % N}", f"b{j}"), name=f"face{j}")
              for j, lab in enumerate(labels)]
    external = [f"t{j}" for j in range(N)] + [f"b{j}" for j in range(N)]
    seam = {"h0": (N - 1, 2)}
    return pieces, external, seam


def elementary_network(labels: tuple[tuple[int, int], ...]) -> CompiledNetwork:
    labels = tuple(tuple(x) for x in labels)

    def build():
        pieces, external, seam = elementary_row_pieces(labels)
        return compile_network(pieces, external, seam)

    return NETWORKS.get(("row", labels), persisted(("row", labels), build))


def network_matrices(key: Hashable, net: CompiledNetwork, sector: Sector, params: ModelParams) -> np.ndarray:
    """Stack of matrices, one per distinct row diagram of ``net``."""
    _check_size(sector)

    def build():
        dim = sector.dim
        out = np.zeros((len(net.diagrams), dim, dim), dtype=complex)
        for k, dgm in enumerate(net.diagrams):
            out[k] = row_matrix(dgm, sector, params.beta, params.alpha, params.omega)
        return out

    return ROW_MATRICES.get((key, sector, params.key()), build)


def apply_network(key: Hashable, net: CompiledNetwork, weights: Sequence[np.ndarray], sector: Sector,
                  params: ModelParams) -> np.ndarray:
    coeffs = net.coefficients(weights, params.beta, params.alpha)
    mats = network_matrices(key, net, sector, params)
    return np.tensordot(coeffs, mats, axes=1)


def _label_key(label) -> tuple[int, int]:
    lab = tuple(label)
    if lab not in faceops.LABELS:
        raise ValueError(f"elementary label must be (1,0) or (0,1), got {label!r}")
    return lab


def build_elementary(label, u: complex, sector: Sector, params: ModelParams,
                     xi: Sequence[complex] | None = None, shift: int = 0) -> TransferMatrix:
    """Row of N faces at u (+ xi_j in column j), acting on ``sector``."""
    lab = _label_key(label)
    N = sector.N
    if params.N != N:
        raise ValueError("params.N and sector.N disagree")
    if xi is not None and len(xi) != N:
        raise ValueError("need one inhomogeneity per column")
    labels = (lab,) * N
    net = elementary_network(labels)
    offs = [0.0] * N if xi is None else list(xi)
    weights = [faceops.face_weights(lab, u + offs[j], params.lam, params.t) for j in range(N)]
    mat = apply_network(("row", labels), net, weights, sector, params)
    return TransferMatrix(lab, shift, sector, params, mat, u)


def elementary_matrix(label, u: complex, sector: Sector, params: ModelParams) -> np.ndarray:
    """Memoised matrix of the homogeneous row."""
    lab = _label_key(label)
    key = (lab, complex(u), sector, params.key())
    return MATRICES.get(key, lambda: build_elementary(lab, u, sector, params).entries)


def braid_matrix(label, sign: int, sector: Sector, params: ModelParams) -> np.ndarray:
    lab = _label_key(label)
    labels = (lab,) * sector.N
    net = elementary_network(labels)
    w = faceops.braid_weights(lab, sign, params.lam)
    return apply_network(("row", labels), net, [w] * sector.N, sector, params)


def build_braid(label, sign: int, sector: Sector, params: ModelParams,
                tol: float = 1e-10) -> tuple[TransferMatrix, complex]:
    """Braid row; must be a multiple of the identity on every sector."""
    mat = braid_matrix(label, sign, sector, params)
    dim = mat.shape[0]
    scalar = complex(np.trace(mat) / dim)
    off = np.linalg.norm(mat - scalar * np.eye(dim)) / (abs(scalar) * np.sqrt(dim) + 1.0)
    if off > tol:
        raise TranscriptionError(f"braid row is not scalar on {sector}: deviation {off:.3e}")
    return TransferMatrix(("braid", _label_key(label), sign), 0, sector, params, mat), scalar


def braid_prediction(label, sign: int, sector: Sector, params: ModelParams) -> complex:
    return braid_eigenvalue(label, sign, sector.d, sector.v, sector.a, params.lam, params.omega)


def build_full_space(label, u: complex, N: int, params: ModelParams) -> tuple[np.ndarray, list]:
    """Row acting on the direct sum of all sectors of size N.

    Output states are located in whichever sector they land; defect loss
    gives zero as in the standard modules.
    """
    lab = _label_key(label)
    basis = full_basis(N)
    if len(basis) > MAX_STATES:
        raise SizeError("full space too large")
    index = {(st.roles): k for k, (_, st) in enumerate(basis)}
    labels = (lab,) * N
    net = elementary_network(labels)
    weights = [faceops.face_weights(lab, u, params.lam, params.t)] * N
    coeffs = net.coefficients(weights, params.beta, params.alpha)
    mat = np.zeros((len(basis), len(basis)), dtype=complex)
    for col, (_, st) in enumerate(basis):
        for dgm, c in zip(net.diagrams, coeffs):
            if c == 0:
                continue
            res = act_on_state(dgm, st)
            if res is None:
                continue
            mat[index[res.target], col] += (c * complex(params.omega) ** res.omega_power
                                           * complex(params.beta) ** res.n_beta
                                           * complex(params.alpha) ** res.n_alpha)
    return mat, basis


def spectra_rows(records: Sequence[tuple[Sector, str, int, complex, np.ndarray]]) -> list[list]:
    rows = []
    for sec, label, shift, u, ev in records:
        ev = np.asarray(ev)
        order = np.lexsort((ev.imag, ev.real))
        for e in ev[order]:
            rows.append([sec.label(), label, shift, f"{complex(u)!r}", f"{e.real:.12g}", f"{e.imag:.12g}"])
    return rows


def spectra_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sector", "label", "shift", "u", "eig_re", "eig_im"])
    w.writerows(spectra_rows(records))
    return buf.getvalue()


def matrix_json(tm: TransferMatrix) -> str:
    if tm.sector.N > 3:
        raise SizeError("matrix dumps are limited to N <= 3")
    states = [s.roles for s in enumerate_states(tm.sector)]
    return json.dumps({
        "label": str(tm.label),
        "shift": tm.shift,
        "sector": tm.sector.label(),
        "states": states,
        "re": tm.entries.real.round(14).tolist(),
        "im": tm.entries.imag.round(14).tolist(),
    })
