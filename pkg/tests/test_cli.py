import cmath
import json

import pytest

from a2loop import cli
from a2loop.linkstate import Sector


@pytest.mark.parametrize("text,want", [
    (1, 1), ("0.5-0.2j", 0.5 - 0.2j), ("0.5-0.2i", 0.5 - 0.2j), ([0.5, -0.2], 0.5 - 0.2j),
    ("exp(0.37i)", cmath.exp(0.37j)),
])
def test_parse_complex(text, want):
    assert abs(cli.parse_complex(text) - want) < 1e-15


def test_parse_complex_rejects_garbage():
    with pytest.raises(cli.ConfigError):
        cli.parse_complex("one")


def test_parse_sector():
    assert cli.parse_sector("1,0", 3) == Sector(3, 1, 0)
    assert cli.parse_sector("N3d1v0", 3) == Sector(3, 1, 0)
    with pytest.raises(cli.ConfigError):
        cli.parse_sector("N4d1v0", 3)
    with pytest.raises(cli.ConfigError):
        cli.parse_sector("1;0", 3)


@pytest.mark.parametrize("argv", [
    ["verify", "--suite", "nonsense", "--lambda", "0.8"],
    ["verify", "--suite", "local"],
    ["verify", "--suite", "local", "--lambda", "0.8", "--p", "1", "--pprime", "3"],
    ["verify", "--suite", "closure", "--lambda", "0.8"],
    ["verify", "--suite", "local", "--lambda", "0.8", "--N", "0"],
    ["verify", "--suite", "local", "--lambda", "0.8", "--omega", "bogus"],
])
def test_config_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2
    assert "error:" in capsys.readouterr().err


def test_sectors_table(capsys):
    assert cli.main(["sectors", "--N", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "N,d,v,a,dim"
    dims = {tuple(r.split(",")[1:3]): int(r.split(",")[4]) for r in lines[1:]}
    assert dims[("0", "0")] > 0
    assert sum(dims.values()) > 0


def test_verify_is_reproducible(tmp_path, capsys):
    args = ["verify", "--suite", "local", "--suite", "hierarchy", "--lambda", "0.83", "--N", "2",
            "--seed", "5", "--samples", "2"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(args + ["-o", str(a)]) == 0
    assert cli.main(args + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.json.meta.json").exists()
    report = json.loads(a.read_text())
    assert report["format"] == cli.REPORT_FORMAT
    assert report["summary"]["failed"] == 0
    assert report["config"]["lambda"] == 0.83
    assert all(c["verdict"] == "pass" for c in report["checks"])
    assert "checks passed" in capsys.readouterr().out


def test_empty_sector_filter_means_all():
    cfg = cli.RunConfig.from_mapping({"suite": ["local"], "lam": 0.8, "N": 2, "sectors": []})
    assert len(cfg.selected_sectors()) == len(cli.RunConfig.from_mapping(
        {"suite": ["local"], "lam": 0.8, "N": 2}).selected_sectors())


def test_config_file_overridden_by_flags(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"suite": ["local"], "p": 1, "pprime": 3, "N": 3, "seed": 1}))
    ns = cli.build_parser().parse_args(["verify", "--config", str(path), "--lambda", "0.7", "--N", "2"])
    cfg = cli.load_config(ns)
    assert cfg.N == 2 and cfg.lam == 0.7 and cfg.p is None and cfg.seed == 1


def test_closure_report_has_constants(tmp_path):
    out = tmp_path / "r.json"
    code = cli.main(["verify", "--suite", "closure", "--p", "1", "--pprime", "3", "--N", "2",
                     "--samples", "2", "-o", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["closure"]
    for entry in report["closure"].values():
        assert {"J", "K", "J_spectrum", "K_spectrum"} <= set(entry)


def test_dump_spectra_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["dump_spectra", "--lambda", "0.83", "--N", "2", "--samples", "1", "--csv", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# " + cli.SPECTRA_FORMAT
    assert lines[1] == "sector,label,shift,u,eig_re,eig_im"
    labels = {r.split(",")[1] for r in lines[2:]}
    assert {"T10", "T01", "B+10", "B-01"} <= labels
