"""Repeated-run benchmark harness and best-known design catalog."""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import io
import json
import logging
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from optdesign._jit import BACKEND
from optdesign.criteria import EFFICIENCY_CONVENTION, Criterion, CriterionScore, efficiency, score
from optdesign.exchange import RNG_NAME, ExchangeSettings, cexch_element, exch_row
from optdesign.model import ModelSpec, as_design
from optdesign.swarm import PsoSettings, pso_search

log = logging.getLogger(__name__)

P95 = 0.95
P100 = 0.9999
CATALOG_RTOL = 1e-9

STANDARD_GRID = (
    [(1, n) for n in range(3, 10)]
    + [(2, n) for n in range(6, 13)]
    + [(3, n) for n in range(10, 17)]
)

RECORD_FIELDS = ["k", "n", "criterion", "algorithm", "seed", "final_score", "efficiency",
                 "passes", "evals", "wall_time_s"]
SUMMARY_FIELDS = ["k", "n", "criterion", "algorithm", "n_run", "p95", "p100", "best_found",
                  "mean_wall_time_s"]


class CatalogError(ValueError):
    pass


class Algorithm(str, enum.Enum):
    CEXCH = "cexch_element"
    REXCH = "exch_row"
    PSO = "pso"

    @classmethod
    def parse(cls, value) -> "Algorithm":
        if isinstance(value, cls):
            return value
        aliases = {"cexch": cls.CEXCH, "rexch": cls.REXCH, "row": cls.REXCH}
        value = str(value).strip().lower()
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown algorithm {value!r}") from None


@dataclass(frozen=True)
class Scenario:
    k: int
    n: int
    criterion: Criterion

    def __post_init__(self):
        object.__setattr__(self, "criterion", Criterion.parse(self.criterion))

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.k, self.n)

    @property
    def standard(self) -> bool:
        return (self.k, self.n) in STANDARD_GRID

    @property
    def key(self) -> tuple:
        return (self.k, self.n, self.criterion.value)


def standard_scenarios(criterion="D") -> list[Scenario]:
    """The 21 standard second-order scenarios for one criterion, (k, n) ascending."""
    return [Scenario(k, n, criterion) for k, n in STANDARD_GRID]


def derive_seed(master_seed: int, scenario: Scenario, algorithm, run_index: int) -> int:
    """Stable 63-bit run seed from (master seed, scenario, algorithm, run index)."""
    algorithm = Algorithm.parse(algorithm)
    token = f"{int(master_seed)}|{scenario.k}|{scenario.n}|{scenario.criterion.value}|" \
            f"{algorithm.value}|{int(run_index)}"
    digest = hashlib.blake2b(token.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


# -- catalog ----------------------------------------------------------------

@dataclass
class CatalogEntry:
    scenario: Scenario
    best_score: float
    best_design: np.ndarray
    provenance: str = ""

    def verify(self) -> None:
        s = score(self.best_design, self.scenario.spec, self.scenario.criterion)
        if not s.valid:
            raise CatalogError(f"catalog entry {self.scenario.key}: design is singular")
        if abs(s.value - self.best_score) > CATALOG_RTOL * abs(self.best_score):
            raise CatalogError(
                f"catalog entry {self.scenario.key}: stored score {self.best_score!r} "
                f"but design rescored to {s.value!r}")

    def to_json(self) -> dict:
        return {"k": self.scenario.k, "n": self.scenario.n,
                "criterion": self.scenario.criterion.value, "score": float(self.best_score),
                "design": [[float(v) for v in row] for row in self.best_design],
                "provenance": self.provenance}


class Catalog(dict):
    """Best-known entries keyed by ``(k, n, criterion)``."""

    def entry(self, scenario: Scenario) -> CatalogEntry | None:
        return self.get(scenario.key)

    def verify(self) -> None:
        for e in self.values():
            e.verify()

    def dumps(self) -> str:
        entries = [self[key].to_json() for key in sorted(self)]
        return json.dumps(entries, indent=1) + "\n"


def parse_catalog(text: str, verify: bool = True) -> Catalog:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise CatalogError("catalog must be a JSON array")
    cat = Catalog()
    for idx, item in enumerate(raw):
        try:
            sc = Scenario(int(item["k"]), int(item["n"]), item["criterion"])
            design = as_design(item["design"], sc.spec)
            entry = CatalogEntry(sc, float(item["score"]), design, str(item.get("provenance", "")))
        except (KeyError, TypeError, ValueError) as exc:
            raise CatalogError(f"catalog entry {idx}: {exc}") from exc
        if sc.key in cat:
            raise CatalogError(f"catalog entry {idx}: duplicate scenario {sc.key}")
        if verify:
            entry.verify()
        cat[sc.key] = entry
    return cat


def load_catalog(path=None, verify: bool = True) -> Catalog:
    """Load a catalog file (the shipped one when ``path`` is None), re-verifying entries."""
    if path is None:
        text = resources.files("optdesign").joinpath("data/catalog.json").read_text()
    else:
        path = Path(path)
        if not path.exists():
            return Catalog()
        text = path.read_text()
    return parse_catalog(text, verify=verify)


def save_catalog(catalog: Catalog, path) -> None:
    Path(path).write_text(catalog.dumps())


# -- records ----------------------------------------------------------------

@dataclass
class RunRecord:
    scenario: Scenario
    algorithm: Algorithm
    run_index: int
    seed: int
    final_score: float
    valid: bool
    efficiency: float | None
    passes: int
    evals: int
    wall_time: float
    design: np.ndarray = field(default=None, repr=False)

    def row(self, timing: bool = True) -> list[str]:
        eff = "" if self.efficiency is None else repr(float(self.efficiency))
        wall = repr(float(self.wall_time)) if timing else "0.0"
        value = repr(float(self.final_score)) if self.valid else "inf"
        return [str(self.scenario.k), str(self.scenario.n), self.scenario.criterion.value,
                self.algorithm.value, str(self.seed), value, eff, str(self.passes),
                str(self.evals), wall]


@dataclass
class BenchmarkSummary:
    scenario: Scenario
    algorithm: Algorithm
    n_run: int
    p95_hat: float | None
    p100_hat: float | None
    best_found: float
    mean_wall_time: float
    median_wall_time: float = 0.0
    improvements: int = 0

    def row(self, timing: bool = True) -> list[str]:
        def fmt(v):
            return "" if v is None else repr(float(v))
        wall = repr(float(self.mean_wall_time)) if timing else "0.0"
        return [str(self.scenario.k), str(self.scenario.n), self.scenario.criterion.value,
                self.algorithm.value, str(self.n_run), fmt(self.p95_hat), fmt(self.p100_hat),
                repr(float(self.best_found)), wall]


def success_rates(efficiencies) -> tuple[float, float]:
    """(p95_hat, p100_hat): fractions of runs at >= 0.95 and >= 0.9999 efficiency."""
    eff = np.asarray(list(efficiencies), dtype=float)
    if eff.size == 0:
        raise ValueError("no runs to summarize")
    return float(np.mean(eff >= P95)), float(np.mean(eff >= P100))


def summarize(records) -> list[BenchmarkSummary]:
    """Aggregate records per (scenario, algorithm), in first-appearance order."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.scenario, r.algorithm), []).append(r)
    out = []
    for (sc, alg), rs in groups.items():
        if any(r.efficiency is None for r in rs):
            p95 = p100 = None
        else:
            p95, p100 = success_rates(r.efficiency for r in rs)
        valid = [r.final_score for r in rs if r.valid]
        walls = [r.wall_time for r in rs]
        out.append(BenchmarkSummary(
            scenario=sc, algorithm=alg, n_run=len(rs), p95_hat=p95, p100_hat=p100,
            best_found=min(valid) if valid else math.inf,
            mean_wall_time=statistics.fmean(walls), median_wall_time=statistics.median(walls),
            improvements=sum(1 for r in rs if r.efficiency is not None
                             and r.efficiency > 1.0 + CATALOG_RTOL),
        ))
    return out


def write_records(records, path, timing: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow(r.row(timing))


def write_summary(summaries, path, timing: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for s in summaries:
            w.writerow(s.row(timing))


def read_records(path) -> list[RunRecord]:
    """Parse a records CSV back into (design-less) records."""
    out = []
    counters: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            sc = Scenario(int(row["k"]), int(row["n"]), row["criterion"])
            alg = Algorithm.parse(row["algorithm"])
            idx = counters.get((sc, alg), 0)
            counters[(sc, alg)] = idx + 1
            value = float(row["final_score"])
            out.append(RunRecord(
                scenario=sc, algorithm=alg, run_index=idx, seed=int(row["seed"]),
                final_score=value, valid=math.isfinite(value),
                efficiency=float(row["efficiency"]) if row["efficiency"] else None,
                passes=int(row["passes"]), evals=int(row["evals"]),
                wall_time=float(row["wall_time_s"]),
            ))
    return out


# -- harness ----------------------------------------------------------------

@dataclass(frozen=True)
class BenchConfig:
    exchange: ExchangeSettings = field(default_factory=ExchangeSettings)
    pso: PsoSettings = field(default_factory=PsoSettings)

    def as_dict(self) -> dict:
        return {
            "exchange": dataclasses.asdict(self.exchange),
            "pso": dataclasses.asdict(self.pso),
            "rng": RNG_NAME,
            "efficiency_convention": EFFICIENCY_CONVENTION,
            "thresholds": {"p95": P95, "p100": P100},
        }

    def settings_hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _execute(task, config: BenchConfig):
    sc, alg, idx, seed = task
    spec = sc.spec
    t0 = time.perf_counter()
    if alg is Algorithm.CEXCH:
        res = cexch_element(spec, sc.criterion, config.exchange, seed)
    elif alg is Algorithm.REXCH:
        res = exch_row(spec, sc.criterion, config.exchange, seed)
    else:
        res = pso_search(spec, sc.criterion, config.pso, seed)
    wall = time.perf_counter() - t0
    return res, wall


def run_benchmark(scenarios, algorithms, n_run: int, master_seed: int, catalog=None,
                  config: BenchConfig = BenchConfig(), threads: int | None = None,
                  n_run_overrides: dict | None = None):
    """Run ``n_run`` independent searches per (scenario, algorithm).

    ``n_run_overrides`` maps an algorithm to its own run count (e.g. fewer PSO
    runs). Returns ``(records, summaries)``; both depend only on the inputs,
    never on ``threads`` or completion order.
    """
    if n_run < 1:
        raise ValueError("n_run must be >= 1")
    algorithms = [Algorithm.parse(a) for a in algorithms]
    overrides = {Algorithm.parse(a): int(v) for a, v in (n_run_overrides or {}).items()}
    if any(v < 1 for v in overrides.values()):
        raise ValueError("n_run must be >= 1")
    quiet = catalog is None
    catalog = catalog if catalog is not None else Catalog()
    tasks = []
    for sc in scenarios:
        if not sc.standard:
            log.warning("scenario k=%d n=%d is not one of the 21 standard scenarios", sc.k, sc.n)
        for alg in algorithms:
            for idx in range(overrides.get(alg, n_run)):
                tasks.append((sc, alg, idx, derive_seed(master_seed, sc, alg, idx)))
    missing = {sc.key for sc in scenarios if catalog.entry(sc) is None}
    for key in sorted(missing) if not quiet else ():
        log.warning("no catalog entry for %s; efficiency unavailable", key)

    if threads is None or threads <= 1:
        outcomes = [_execute(t, config) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda t: _execute(t, config), tasks, chunksize=8))

    records = []
    for (sc, alg, idx, seed), (res, wall) in zip(tasks, outcomes):
        entry = catalog.entry(sc)
        eff = None
        if entry is not None:
            eff = efficiency(res.score, CriterionScore(entry.best_score, True), sc.criterion,
                             sc.spec) if res.score.valid else 0.0
            if eff > 1.0 + CATALOG_RTOL:
                log.info("catalog improvement: %s %s run %d efficiency %.12f",
                         sc.key, alg.value, idx, eff)
        records.append(RunRecord(
            scenario=sc, algorithm=alg, run_index=idx, seed=seed,
            final_score=res.score.value, valid=res.score.valid, efficiency=eff,
            passes=res.passes, evals=res.evals, wall_time=wall, design=res.design,
        ))
    return records, summarize(records)


def update_catalog(records, catalog: Catalog, provenance: str = ""):
    """Replace entries beaten by more than 1e-9 relative; add missing scenarios.

    Returns ``(new_catalog, events)``; the input catalog is not modified. Each
    improving design is re-scored first and rejected with
    :class:`CatalogError` if it does not reproduce its recorded score.
    """
    best: dict = {}
    for r in records:
        if not r.valid or r.design is None:
            continue
        cur = best.get(r.scenario.key)
        if cur is None or r.final_score < cur.final_score:
            best[r.scenario.key] = r
    new = Catalog(catalog)
    events = []
    for key, r in best.items():
        old = new.get(key)
        if old is not None and not r.final_score < old.best_score * (1.0 - CATALOG_RTOL):
            continue
        s = score(r.design, r.scenario.spec, r.scenario.criterion)
        if not s.valid or abs(s.value - r.final_score) > CATALOG_RTOL * abs(r.final_score):
            raise CatalogError(f"record for {key} (seed {r.seed}) failed re-verification: "
                               f"recorded {r.final_score!r}, rescored {s.value!r}")
        note = f"{r.algorithm.value} seed={r.seed}"
        if provenance:
            note = f"{provenance}; {note}"
        if old is not None and old.provenance:
            note = f"{old.provenance} | {note}"
        new[key] = CatalogEntry(r.scenario, float(s.value), np.array(r.design), note)
        events.append({"scenario": key, "old": None if old is None else old.best_score,
                       "new": float(s.value), "algorithm": r.algorithm.value, "seed": r.seed})
        log.info("catalog %s: %s -> %r", key, "new" if old is None else repr(old.best_score),
                 s.value)
    return new, events


def metadata(config: BenchConfig, **extra) -> dict:
    import platform

    import scipy

    meta = {"settings_hash": config.settings_hash(), "settings": config.as_dict(),
            "backend": BACKEND, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}
    if BACKEND == "numba":
        import numba
        meta["numba"] = numba.__version__
    meta.update(extra)
    return meta


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def records_text(records, timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow(r.row(timing))
    return buf.getvalue()
