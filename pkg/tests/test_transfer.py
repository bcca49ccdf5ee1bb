import cmath
import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from a2loop import transfer
from a2loop.hierarchy import numeric_braid_limit
from a2loop.linkstate import Sector, sectors
from a2loop.scalars import braid_eigenvalue
from a2loop.transfer import (SizeError, braid_prediction, build_braid, build_elementary, build_full_space,
                             elementary_matrix)

from conftest import OMEGA, model

spectral = st.complex_numbers(max_magnitude=1.2, allow_nan=False, allow_infinity=False)


def test_shape_matches_sector_dimension():
    P = model(3)
    for sec in sectors(3):
        tm = build_elementary((1, 0), 0.3, sec, P)
        assert tm.entries.shape == (sec.dim, sec.dim)
        assert tm.label == (1, 0)


@settings(max_examples=10, deadline=None)
@given(u=spectral, v=spectral)
def test_rows_commute(u, v):
    P = model(3)
    for sec in sectors(3):
        a = build_elementary((1, 0), u, sec, P).entries
        b = build_elementary((0, 1), v, sec, P).entries
        c = build_elementary((1, 0), v, sec, P).entries
        scale = np.linalg.norm(a) * np.linalg.norm(b) + 1
        assert np.linalg.norm(a @ b - b @ a) < 1e-10 * scale
        assert np.linalg.norm(a @ c - c @ a) < 1e-10 * (np.linalg.norm(a) * np.linalg.norm(c) + 1)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_pi_antiperiodicity(N):
    P = model(N)
    u = 0.21 - 0.17j
    for sec in sectors(N):
        for lab in ((1, 0), (0, 1)):
            a = build_elementary(lab, u + math.pi, sec, P).entries
            b = build_elementary(lab, u, sec, P).entries
            assert np.allclose(a, (-1) ** N * b, atol=1e-11)


def test_single_vacancy_braid_limit():
    P = model(1)
    sec = Sector(1, 0, 1)
    lim = numeric_braid_limit(1, 0, 1, sec, P, height=20.0)
    phi = (math.pi - P.lam) / 3
    assert lim[0, 0] == pytest.approx(P.alpha * cmath.exp(1j * phi) + cmath.exp(-2j * phi), abs=1e-10)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_braid_rows_are_scalar(N):
    P = model(N)
    for sec in sectors(N):
        for lab in ((1, 0), (0, 1)):
            for sign in (1, -1):
                tm, scalar = build_braid(lab, sign, sec, P)
                assert np.allclose(tm.entries, scalar * np.eye(sec.dim), atol=1e-10)
                assert scalar == pytest.approx(braid_prediction(lab, sign, sec, P), abs=1e-10)
                assert scalar == pytest.approx(braid_eigenvalue(lab, sign, sec.d, sec.v, sec.a, P.lam, OMEGA))


@pytest.mark.parametrize("N", [1, 2, 3])
def test_full_space_is_block_diagonal_in_vacancies(N):
    mat, basis = build_full_space((1, 0), 0.4 + 0.3j, N, model(N))
    vs = np.array([sec.v for sec, _ in basis])
    assert np.linalg.norm(mat[vs[:, None] != vs[None, :]]) < 1e-12
    assert np.linalg.norm(mat) > 0.1


def test_size_cap(monkeypatch):
    monkeypatch.setattr(transfer, "MAX_STATES", 3)
    with pytest.raises(SizeError):
        build_elementary((1, 0), 0.1, Sector(4, 0, 0), model(4))


@pytest.mark.parametrize("N", [1, 2, 3])
def test_entries_are_laurent_polynomials_of_width_2N(N):
    P = model(N)
    sec = sectors(N)[0]
    pts = [0.37 * k + 0.11j * (k % 3) for k in range(4 * N + 2)]
    powers = np.arange(-N - 1, N + 2)
    basis = np.array([[cmath.exp(1j * p * u) for p in powers] for u in pts])
    vals = np.array([build_elementary((1, 0), u, sec, P).entries.ravel() for u in pts])
    coef, *_ = np.linalg.lstsq(basis, vals, rcond=None)
    assert np.abs(coef[[0, -1]]).max() < 1e-10
    assert np.linalg.norm(basis @ coef - vals) < 1e-9 * np.linalg.norm(vals)


def test_memoised_matrix_equals_fresh_build():
    P = model(2)
    sec = Sector(2, 0, 0)
    first = elementary_matrix((1, 0), 0.3, sec, P)
    transfer.MATRICES.clear()
    transfer.ROW_MATRICES.clear()
    assert np.allclose(elementary_matrix((1, 0), 0.3, sec, P), first, atol=1e-12)


def test_disk_cache_roundtrip(tmp_path):
    transfer.set_cache_dir(tmp_path)
    try:
        labels = ((0, 1), (1, 0), (0, 1))
        transfer.NETWORKS.clear()
        a = transfer.elementary_network(labels)
        assert list(tmp_path.glob("net-*.pkl"))
        transfer.NETWORKS.clear()
        b = transfer.elementary_network(labels)
        assert a.diagrams == b.diagrams
    finally:
        transfer.set_cache_dir(None)
        transfer.NETWORKS.clear()


def test_spectra_csv_sorted():
    P = model(2)
    sec = Sector(2, 0, 0)
    ev = build_elementary((1, 0), 0.2, sec, P).eigenvalues()
    text = transfer.spectra_csv([(sec, "T10", 0, 0.2, ev[::-1])])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["sector", "label", "shift", "u", "eig_re", "eig_im"]
    keys = [(float(r[4]), float(r[5])) for r in rows[1:]]
    assert keys == sorted(keys)


def test_matrix_json_dump():
    tm = build_elementary((0, 1), 0.2, Sector(2, 1, 1), model(2))
    data = json.loads(transfer.matrix_json(tm))
    assert data["shift"] == 0
    with pytest.raises(SizeError):
        transfer.matrix_json(build_elementary((1, 0), 0.2, Sector(4, 4, 0), model(4)))
