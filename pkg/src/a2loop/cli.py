"""Command-line driver: ``verify``, ``sectors`` and ``dump_spectra``.

A run is described by a :class:`RunConfig`.  It can come from a JSON file
whose keys mirror the long flags (``--pprime`` -> ``"pprime"``); flags given on
the command line override the file.

``verify`` writes a JSON report whose bytes depend only on the config and the
seed.  Wall-clock data (start time, elapsed seconds, library versions) goes to
a sibling ``<report>.meta.json`` so reports can be compared with ``cmp``.

Exit codes: 0 all checks passed, 1 some check failed, 2 bad configuration,
3 the run could not complete (for instance no pole-free sample point).
"""

from __future__ import annotations

import argparse
import cmath
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fusion, relations, rsos
from .hierarchy import ResampleError
from .linkstate import Sector, basis_csv, sectors as all_sectors
from .relations import IdentityCheck
from .scalars import ModelParams, ParameterError, RootOfUnity, SingularityError, random_spectral
from .transfer import SizeError, build_braid, build_elementary, spectra_rows

log = logging.getLogger("a2loop")

REPORT_FORMAT = "a2loop-report/1"
SPECTRA_FORMAT = "a2loop-spectra/1"

SUITES = ("basis", "local", "transfer", "hierarchy", "tsystem", "ysystem", "closure", "yclosure",
          "braid", "vacancy", "gauge", "fusion-direct", "rsos")
# suites that need a root of unity; "all" skips them when only lambda is given
ROOT_SUITES = ("closure", "yclosure")
CACHE_ENV = "A2LOOP_CACHE_DIR"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid run configuration; the message says what to change."""


def parse_complex(value) -> complex:
    """Accept 1, "0.5-0.2j", [re, im] or "exp(0.37i)"."""
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        text = value.strip().replace(" ", "")
        if text.startswith("exp(") and text.endswith("i)"):
            return cmath.exp(1j * float(text[4:-2]))
        try:
            return complex(text.replace("i", "j"))
        except ValueError:
            pass
    raise ConfigError(f"cannot read {value!r} as a complex number; use e.g. 0.5-0.2j, [0.5, -0.2] or exp(0.37i)")


def _complex_json(z: complex) -> list[float]:
    z = complex(z)
    return [round(z.real, 15), round(z.imag, 15)]


def parse_sector(text: str, N: int) -> Sector:
    """``"d,v"`` or a full label like ``"N3d1v0"``."""
    t = text.strip()
    try:
        if t.startswith("N"):
            n_part, rest = t[1:].split("d")
            d, v = rest.split("v")
            if int(n_part) != N:
                raise ConfigError(f"sector {text!r} is for N={n_part}, the run has N={N}")
            return Sector(N, int(d), int(v))
        d, v = (int(x) for x in t.split(","))
        return Sector(N, d, v)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad sector {text!r}: expected 'd,v' or 'N<N>d<d>v<v>' ({exc})") from exc


@dataclass
class RunConfig:
    suite: list[str] = field(default_factory=lambda: ["all"])
    N: int = 2
    p: int | None = None
    pprime: int | None = None
    lam: float | None = None
    omega: complex = 1.0
    t: complex = 1.0
    sectors: list[str] = field(default_factory=list)
    tol: float | None = None
    samples: int = 3
    proof_grade: bool = False
    seed: int = 0
    output: str | None = None
    spectra: str | None = None
    workers: int = 1
    max_level: int = 5

    def __post_init__(self) -> None:
        if isinstance(self.suite, str):
            self.suite = [self.suite]
        self.omega = parse_complex(self.omega)
        self.t = parse_complex(self.t)
        self.validate()

    def validate(self) -> None:
        unknown = [s for s in self.suite if s != "all" and s not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suite(s) {unknown}; choose from all, {', '.join(SUITES)}")
        has_root = self.p is not None or self.pprime is not None
        if has_root == (self.lam is not None):
            raise ConfigError("give exactly one of (--p and --pprime) or --lambda")
        if has_root and (self.p is None or self.pprime is None):
            raise ConfigError("--p and --pprime must be given together")
        if has_root:
            try:
                RootOfUnity(self.p, self.pprime)
            except ParameterError as exc:
                raise ConfigError(str(exc)) from exc
        elif abs(math.sin(self.lam)) < 1e-12:
            raise ConfigError("--lambda must not be a multiple of pi")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("--tol must be positive")
        if self.N < 1:
            raise ConfigError("--N must be at least 1")
        if self.samples < 1:
            raise ConfigError("--samples must be at least 1")
        if self.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if self.omega == 0 or self.t == 0:
            raise ConfigError("--omega and --t must be nonzero")
        for s in self.sectors:
            parse_sector(s, self.N)
        if not has_root and any(s in ROOT_SUITES for s in self.suite):
            raise ConfigError("the closure suites need a root of unity: give --p and --pprime")
        if "rsos" in self.suite and (self.pprime is None or self.pprime < 5):
            raise ConfigError("the rsos suite needs --p and --pprime with pprime >= 5")

    @property
    def root(self) -> RootOfUnity | None:
        return RootOfUnity(self.p, self.pprime) if self.p is not None else None

    @property
    def lam_value(self) -> float:
        return self.root.lam if self.root else float(self.lam)

    def params(self, N: int | None = None) -> ModelParams:
        return ModelParams(self.lam_value, N or self.N, omega=self.omega, t=self.t)

    def selected_sectors(self) -> list[Sector]:
        if not self.sectors:
            return all_sectors(self.N)
        return [parse_sector(s, self.N) for s in self.sectors]

    def suites(self) -> list[str]:
        if "all" in self.suite:
            return [s for s in SUITES if self._available(s)]
        return list(dict.fromkeys(self.suite))

    def skipped(self) -> list[dict]:
        if "all" not in self.suite:
            return []
        return [{"suite": s, "reason": self._why_unavailable(s)} for s in SUITES if not self._available(s)]

    def _available(self, suite: str) -> bool:
        return self._why_unavailable(suite) is None

    def _why_unavailable(self, suite: str) -> str | None:
        if suite in ROOT_SUITES and self.root is None:
            return "needs a root of unity (p, pprime)"
        if suite == "rsos" and (self.pprime is None or self.pprime < 5):
            return "needs pprime >= 5"
        if suite == "fusion-direct" and self.N > fusion.MAX_N:
            return f"direct fusion is limited to N <= {fusion.MAX_N}"
        return None

    def to_json(self) -> dict:
        out = asdict(self)
        out["omega"] = _complex_json(self.omega)
        out["t"] = _complex_json(self.t)
        out["lambda"] = out.pop("lam")
        out.pop("output")
        out.pop("spectra")
        out.pop("workers")
        return out

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config key(s) {unknown}")
        return cls(**data)


# ---------------------------------------------------------------------------
# suites


def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng([seed, *tags])


def _sample_count(cfg: RunConfig, factors: int = 4) -> int:
    return relations.proof_point_count(cfg.N, factors) if cfg.proof_grade else cfg.samples


def _tasks(cfg: RunConfig) -> list[tuple[str, str | None]]:
    """Independent units of work: (suite, sector label or None)."""
    per_sector = {"transfer", "hierarchy", "tsystem", "ysystem", "closure", "yclosure", "braid", "gauge",
                  "fusion-direct"}
    global_part = {"basis", "local", "vacancy", "fusion-direct", "rsos"}
    out = []
    for suite in cfg.suites():
        if suite in per_sector:
            out.extend((suite, sec.label()) for sec in cfg.selected_sectors())
        if suite in global_part:
            out.append((suite, None))
    return out


def _run_task(cfg: RunConfig, index: int, suite: str, sector_label: str | None) -> tuple[list[dict], dict]:
    rng = _rng(cfg.seed, SUITES.index(suite), index)
    sector = parse_sector(sector_label, cfg.N) if sector_label else None
    extra: dict = {}
    checks = SUITE_RUNNERS[suite](cfg, sector, rng, extra)
    checks = relations.merge_checks(checks)
    if cfg.tol is not None:
        for c in checks:
            c.tol = cfg.tol
    return [dict(suite=suite, **c.to_json()) for c in checks], extra


def _suite_basis(cfg, sector, rng, extra):
    return relations.verify_basis_counts(max(8, cfg.N))


def _suite_local(cfg, sector, rng, extra):
    return relations.verify_local(rng, count=50 if cfg.proof_grade else max(10, 10 * cfg.samples))


def _suite_transfer(cfg, sector, rng, extra):
    out = []
    params = cfg.params()
    for _ in range(max(cfg.samples, 10) if cfg.proof_grade else cfg.samples):
        out += relations.verify_commuting(sector, params, random_spectral(rng), random_spectral(rng))
    return out


def _sampled(fn, factors=4):
    def run(cfg, sector, rng, extra):
        return relations.run_sampled(fn(cfg), sector, cfg.params(), rng, _sample_count(cfg, factors), root=cfg.root)
    return run


def _closure(with_y: bool):
    def run(cfg, sector, rng, extra):
        data, checks = relations.run_closure(sector, cfg.params(), cfg.root, rng, count=max(cfg.samples, 2),
                                             extended=not with_y, yclosure=with_y)
        if not with_y:
            extra[sector.label()] = {
                "J": data.to_json()["J"], "K": data.to_json()["K"],
                "J_spectrum": _spectrum_json(np.linalg.eigvals(data.J)),
                "K_spectrum": _spectrum_json(np.linalg.eigvals(data.K)),
            }
        else:
            checks = [c for c in checks if not c.id.startswith("closure.")]
        return checks
    return run


def _spectrum_json(ev: np.ndarray) -> list[list[float]]:
    ev = np.asarray(ev)
    ev = ev[np.lexsort((ev.imag.round(10), ev.real.round(10)))]
    return [[round(float(z.real), 10) + 0.0, round(float(z.imag), 10) + 0.0] for z in ev]


def _suite_braid(cfg, sector, rng, extra):
    return relations.verify_braid_hierarchy(sector, cfg.params(), max_level=4)


def _suite_vacancy(cfg, sector, rng, extra):
    out = []
    for N in range(1, min(cfg.N, 4) + 1):
        out += relations.verify_vacancy_conservation(N, cfg.params(N), random_spectral(rng))
    return out


def _suite_gauge(cfg, sector, rng, extra):
    out = []
    for _ in range(cfg.samples):
        out += relations.verify_gauge(sector, cfg.params(), random_spectral(rng))
    return out


def _suite_fusion(cfg, sector, rng, extra):
    lam = cfg.lam_value
    if sector is not None:
        points = [random_spectral(rng) for _ in range(max(cfg.samples, 5))]
        return fusion.verify_direct_fusion(sector, cfg.params(), points)
    out = fusion.verify_strand_closures(lam)
    for m, n in fusion.LABELS:
        out += fusion.verify_projector_identities(m, n, lam)
    out += fusion.verify_push_through(random_spectral(rng), lam)
    for m, n in fusion.LABELS:
        pts = [random_spectral(rng) for _ in range(6)]
        fit = fusion.laurent_fit(m, n, cfg.params(1), pts)
        out.append(IdentityCheck("fusion.face-laurent", f"P{m},{n}", fit["residual"], 1e-10, pts, "model",
                                 {"terms": fit["terms"]}))
    return out


def _suite_rsos(cfg, sector, rng, extra):
    out = []
    for pp in sorted({5, 6, 7, cfg.pprime}):
        res = rsos.hecke_residuals(pp, 5)
        out.append(IdentityCheck("rsos.hecke", f"rsos(p'={pp})", max(res.values()), 1e-11, [], "model", res))
    out += rsos.verify_loop_hecke(N=4, lam=cfg.lam_value, omega=cfg.omega)
    params = rsos.RSOSParams(cfg.p, cfg.pprime, 3)
    points = rsos.sample_points(rng, max(cfg.samples, 2))
    _, checks = rsos.verify_rsos_closure(points, params)
    out += checks
    space = rsos.cyclic_paths(cfg.pprime, 3)
    for u in points[:1]:
        ctx = rsos.rsos_context(u, params, space)
        for c in relations.verify_fusion_hierarchy(ctx, max_level=3):
            c.sector = space.label()
            out.append(c)
    return out


SUITE_RUNNERS = {
    "basis": _suite_basis,
    "local": _suite_local,
    "transfer": _suite_transfer,
    "hierarchy": _sampled(lambda cfg: lambda ctx: relations.verify_fusion_hierarchy(ctx, cfg.max_level)),
    "tsystem": _sampled(lambda cfg: lambda ctx: relations.verify_tsystem(ctx, cfg.max_level)),
    "ysystem": _sampled(lambda cfg: lambda ctx: relations.verify_ysystem(ctx, cfg.max_level)),
    "closure": _closure(False),
    "yclosure": _closure(True),
    "braid": _suite_braid,
    "vacancy": _suite_vacancy,
    "gauge": _suite_gauge,
    "fusion-direct": _suite_fusion,
    "rsos": _suite_rsos,
}


# ---------------------------------------------------------------------------
# runs


def run(cfg: RunConfig) -> tuple[dict, dict]:
    """Execute the configured suites; returns (report, metadata)."""
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    tasks = _tasks(cfg)
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_run_task, cfg, i, s, sec) for i, (s, sec) in enumerate(tasks)]
            results = [f.result() for f in futures]
    else:
        results = [_run_task(cfg, i, s, sec) for i, (s, sec) in enumerate(tasks)]
    checks = [c for chunk, _ in results for c in chunk]
    closure = {}
    for (suite, _), (_, extra) in zip(tasks, results):
        if suite == "closure":
            closure.update(extra)
    by_suite: dict[str, dict] = {}
    for c in checks:
        entry = by_suite.setdefault(c["suite"], {"checks": 0, "failed": 0})
        entry["checks"] += 1
        entry["failed"] += c["verdict"] != "pass"
    failed = sum(c["verdict"] != "pass" for c in checks)
    report = {
        "format": REPORT_FORMAT,
        "config": cfg.to_json(),
        "summary": {"checks": len(checks), "passed": len(checks) - failed, "failed": failed, "by_suite": by_suite},
        "skipped": cfg.skipped(),
        "checks": checks,
    }
    if closure:
        report["closure"] = closure
    meta = {
        "started": started.isoformat(timespec="seconds"),
        "elapsed_s": round(time.perf_counter() - t0, 3),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "workers": cfg.workers,
    }
    return report, meta


def report_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2, sort_keys=False) + "\n").encode()


def spectra_records(cfg: RunConfig, rng: np.random.Generator) -> list[list]:
    """Rows of the spectra CSV for the elementary rows and both braid limits."""
    params = cfg.params()
    points = [random_spectral(rng) for _ in range(cfg.samples)]
    records = []
    for sec in cfg.selected_sectors():
        for u in points:
            for lab in ((1, 0), (0, 1)):
                tm = build_elementary(lab, u, sec, params)
                records.append((sec, f"T{lab[0]}{lab[1]}", 0, u, np.linalg.eigvals(tm.entries)))
        for sign, tag in ((1, "+"), (-1, "-")):
            for lab in ((1, 0), (0, 1)):
                tm, _ = build_braid(lab, sign, sec, params)
                records.append((sec, f"B{tag}{lab[0]}{lab[1]}", 0, complex("nan"), np.linalg.eigvals(tm.entries)))
    rows = spectra_rows(records)
    if cfg.pprime is not None and cfg.pprime >= 5:
        # path spaces exist only for N divisible by 3
        N = cfg.N if cfg.N % 3 == 0 else 3
        rows += rsos.spectra_rows(rsos.RSOSParams(cfg.p, cfg.pprime, N), points)
    return rows


def spectra_text(rows: Sequence[list]) -> str:
    import csv
    import io

    buf = io.StringIO()
    buf.write(f"# {SPECTRA_FORMAT}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sector", "label", "shift", "u", "eig_re", "eig_im"])
    w.writerows(rows)
    return buf.getvalue()


def sectors_table(N: int) -> str:
    lines = ["N,d,v,a,dim"]
    for sec in all_sectors(N):
        lines.append(f"{N},{sec.d},{sec.v},{sec.a},{sec.dim}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument handling


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with the same keys as the long flags")
    p.add_argument("--suite", action="append", help="suite to run (repeatable): all, " + ", ".join(SUITES))
    p.add_argument("--N", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--pprime", type=int)
    p.add_argument("--lambda", dest="lam", type=float, help="raw crossing parameter instead of p, pprime")
    p.add_argument("--omega", help="twist, e.g. 1, 0.9+0.4j or exp(0.37i)")
    p.add_argument("--t", help="gauge parameter")
    p.add_argument("--sectors", nargs="*", help="sectors as d,v (default all)")
    p.add_argument("--tol", type=float, help="override every check tolerance")
    p.add_argument("--samples", type=int, help="random spectral points per sector")
    p.add_argument("--proof-grade", dest="proof_grade", action="store_const", const=True,
                   help="use 8N+1 points, enough to certify the Laurent-polynomial identities")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o", help="report path (default: stdout summary only)")
    p.add_argument("--spectra", help="also write the spectra CSV to this path")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--max-level", dest="max_level", type=int)


def load_config(ns: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if getattr(ns, "config", None):
        try:
            data = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {ns.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
    # a root given by flags replaces a raw lambda from the file, and the other way round
    if ns.lam is not None:
        data.pop("p", None)
        data.pop("pprime", None)
    if ns.p is not None or ns.pprime is not None:
        data.pop("lam", None)
    for key in ("suite", "N", "p", "pprime", "lam", "omega", "t", "sectors", "tol", "samples", "proof_grade",
                "seed", "output", "workers", "max_level", "spectra"):
        value = getattr(ns, key, None)
        if value is not None:
            data[key] = value
    return RunConfig.from_mapping(data)


def _configure_cache() -> None:
    path = os.environ.get(CACHE_ENV)
    if path:
        from . import transfer

        transfer.set_cache_dir(path)


def cmd_verify(ns) -> int:
    cfg = load_config(ns)
    _configure_cache()
    report, meta = run(cfg)
    data = report_bytes(report)
    if cfg.output:
        out = Path(cfg.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(data)
        out.with_name(out.name + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    if cfg.spectra:
        Path(cfg.spectra).write_text(spectra_text(spectra_records(cfg, _rng(cfg.seed, 99))))
    s = report["summary"]
    for suite, entry in s["by_suite"].items():
        print(f"{suite:14s} {entry['checks'] - entry['failed']:5d}/{entry['checks']:<5d} "
              f"{'ok' if not entry['failed'] else 'FAIL'}")
    for c in report["checks"]:
        if c["verdict"] != "pass":
            print(f"FAIL {c['suite']} {c['id']} {c['sector']} residual={c['residual']:.3g} tol={c['tol']:.1g}")
    for sk in report["skipped"]:
        print(f"skipped {sk['suite']}: {sk['reason']}")
    print(f"{s['passed']}/{s['checks']} checks passed")
    return EXIT_OK if s["failed"] == 0 else EXIT_FAIL


def cmd_sectors(ns) -> int:
    if ns.N is None or ns.N < 1:
        raise ConfigError("--N must be a positive integer")
    if ns.states:
        sys.stdout.write(basis_csv(all_sectors(ns.N)))
    else:
        sys.stdout.write(sectors_table(ns.N))
    return EXIT_OK


def cmd_dump_spectra(ns) -> int:
    cfg = load_config(ns)
    _configure_cache()
    text = spectra_text(spectra_records(cfg, _rng(cfg.seed, 99)))
    if ns.csv:
        Path(ns.csv).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="a2loop", description="Transfer matrices of the dilute A2 loop model "
                                     "and numerical certification of their functional relations.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run identity suites and write a JSON report")
    _add_run_flags(v)
    v.set_defaults(func=cmd_verify)
    s = sub.add_parser("sectors", help="list sectors and their dimensions")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--states", action="store_true", help="list every link state instead")
    s.set_defaults(func=cmd_sectors)
    for name in ("dump_spectra", "dump-spectra"):
        d = sub.add_parser(name, help="eigenvalues of the elementary and braid rows as CSV")
        _add_run_flags(d)
        d.add_argument("--csv", help="output path (default stdout)")
        d.set_defaults(func=cmd_dump_spectra)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(message)s")
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResampleError, SingularityError, SizeError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
