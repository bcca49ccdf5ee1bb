import json
import math

import numpy as np
import pytest

from a2loop import fusion, relations as R
from a2loop.hierarchy import HierarchyContext
from a2loop.linkstate import Sector, sectors
from a2loop.scalars import RootOfUnity

from conftest import OMEGA, model


def _failures(checks):
    return [(c.id, c.sector, c.residual, c.tol) for c in checks if not c.passed]


def test_residual_is_relative_and_flags_non_finite():
    a = np.eye(2)
    assert R.residual(a, a) == 0
    n = math.sqrt(2)
    assert R.residual(a, 2 * a) == pytest.approx(n / (n + 2 * n + 1))
    assert R.residual(np.full((2, 2), np.inf), a) == math.inf


def test_merge_keeps_worst_residual():
    checks = [R.IdentityCheck("x", "s", 1e-12, 1e-9, [0.1]), R.IdentityCheck("x", "s", 1e-10, 1e-8, [0.2]),
              R.IdentityCheck("y", "s", 0.0, 1e-9)]
    merged = R.merge_checks(checks)
    assert [c.id for c in merged] == ["x", "y"]
    assert merged[0].residual == 1e-10 and merged[0].tol == 1e-9 and len(merged[0].points) == 2


def test_check_json_shape():
    c = R.IdentityCheck("fusion.m-step", "N2d0v0", 3e-13, 1e-9, [0.1 + 0.2j], "model", {"m": 2})
    data = c.to_json()
    assert data["verdict"] == "pass"
    assert data["points"] == [[0.1, 0.2]]
    json.dumps(data)
    assert not R.IdentityCheck("a", "b", float("nan"), 1.0).passed


def test_proof_point_count():
    assert R.proof_point_count(3) == 25


@pytest.mark.parametrize("fn", [R.verify_fusion_hierarchy, R.verify_tsystem, R.verify_ysystem])
def test_hierarchy_families_pass(fn, rng):
    P = model(2)
    for sec in sectors(2):
        checks = R.run_sampled(lambda ctx: fn(ctx, 4), sec, P, rng, 2)
        assert checks and not _failures(checks)


def test_corrupted_rows_caught_by_direct_fusion():
    # a shifted (0,1) row still commutes with the (1,0) row, and the T-system
    # needs nothing more; only an independent construction catches it
    P = model(2)
    sec = Sector(2, 0, 0)
    u = 0.3 + 0.1j

    def rows(label, x):
        return HierarchyContext(sec, P, x).elementary(label, 0) + (0.01 if label == (0, 1) else 0.0)

    bad = HierarchyContext(sec, P, u, rows=rows)
    assert not _failures(R.verify_tsystem(bad, 3))
    direct = fusion.direct_fused_transfer(1, 1, u, sec, P).entries
    assert R.residual(direct, HierarchyContext(sec, P, u).T(1, 1, 0)) < 1e-9
    assert R.residual(direct, bad.T(1, 1, 0)) > 1e-4


@pytest.mark.parametrize("p,pp", [(1, 3), (2, 5)])
def test_closure_families(p, pp, rng):
    root = RootOfUnity(p, pp)
    P = root.params(2, omega=OMEGA)
    for sec in sectors(2):
        data, checks = R.run_closure(sec, P, root, rng, count=2)
        assert not _failures(checks)
        assert data.J_spread < 1e-8 and data.K_spread < 1e-8


def test_yclosure_keeps_printed_residuals(rng):
    root = RootOfUnity(1, 4)
    sec = Sector(2, 1, 1)
    _, checks = R.run_closure(sec, root.params(2, omega=OMEGA), root, rng, count=2, extended=False)
    y = [c for c in checks if c.id.startswith("yclosure.")]
    assert y and not _failures(y)
    assert any("alt_residual" in c.detail for c in y)


def test_braid_hierarchy(params2):
    for sec in sectors(2):
        assert not _failures(R.verify_braid_hierarchy(sec, params2, max_level=3, numeric_level=2))


def test_vacancy_and_gauge():
    assert not _failures(R.verify_vacancy_conservation(3, model(3), 0.2 + 0.3j))
    for sec in sectors(3):
        assert not _failures(R.verify_gauge(sec, model(3), 0.2 - 0.1j))


def test_commuting_family():
    for sec in sectors(2):
        checks = R.verify_commuting(sec, model(2), 0.3, -0.2 + 0.4j)
        assert len(checks) == 5 and not _failures(checks)


def test_local_relations(rng):
    checks = R.verify_local(rng, count=5)
    assert {c.id for c in checks} >= {"local.ybe", "local.inversion-direct", "local.inversion-crossed"}
    assert not _failures(checks)


def test_basis_counts():
    checks = R.verify_basis_counts(6)
    assert checks and not _failures(checks)
    assert R.expected_dimension(4, 0, 0) == 6


def test_spectrum_distance_is_permutation_invariant():
    a = np.array([1 + 1j, 2, -3j])
    assert R.spectrum_distance(a, a[::-1]) == 0
    assert R.spectrum_distance(a, a + 0.1) == pytest.approx(0.1)
