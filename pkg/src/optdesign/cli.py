"""Command-line interface: ``optdesign generate|eval|benchmark|catalog``.

Exit codes: 0 success, 1 runtime or data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from optdesign import bench
from optdesign.bench import Algorithm, BenchConfig, Scenario
from optdesign.criteria import EFFICIENCY_CONVENTION, Criterion, CriterionScore, efficiency, score
from optdesign.exchange import ExchangeSettings
from optdesign.localsolve import SolveSettings
from optdesign.model import DesignError, ModelSpec, read_design, write_design
from optdesign.swarm import PsoSettings

log = logging.getLogger("optdesign")


class DataError(Exception):
    """Input data problem; reported with exit code 1."""


def _add_settings(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("search settings")
    g.add_argument("--improvement-tol", type=float, default=ExchangeSettings.improvement_tol)
    g.add_argument("--max-passes", type=int, default=ExchangeSettings.max_passes)
    g.add_argument("--x-tol", type=float, default=SolveSettings.x_tol)
    g.add_argument("--max-evals", type=int, default=None)
    g.add_argument("--scalar-method", choices=["pattern", "brent"], default="pattern",
                   help="coordinate proposal engine")
    g.add_argument("--swarm-size", type=int, default=PsoSettings.swarm_size)
    g.add_argument("--pso-iterations", type=int, default=PsoSettings.iterations)


def _config(args) -> BenchConfig:
    solver = SolveSettings(x_tol=args.x_tol, max_evals=args.max_evals,
                           scalar_method=args.scalar_method)
    exch = ExchangeSettings(improvement_tol=args.improvement_tol, max_passes=args.max_passes,
                            solver=solver)
    pso = PsoSettings(swarm_size=args.swarm_size, iterations=args.pso_iterations)
    return BenchConfig(exchange=exch, pso=pso)


def _algorithms(text: str) -> list[Algorithm]:
    try:
        return [Algorithm.parse(a) for a in text.split(",") if a.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _criteria(text: str) -> list[Criterion]:
    try:
        return [Criterion.parse(c) for c in text.split(",") if c.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optdesign", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="multistart search for one scenario")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--criterion", choices=["D", "I"], required=True)
    g.add_argument("--algorithm", choices=["cexch", "rexch", "pso"], default="cexch")
    g.add_argument("--restarts", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="design CSV path; a .json sidecar is written next to it")
    g.add_argument("--threads", type=int, default=1)
    _add_settings(g)

    e = sub.add_parser("eval", help="score a design file")
    e.add_argument("--design", required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--criterion", choices=["D", "I"], required=True)
    e.add_argument("--catalog", default=None, help="catalog JSON (efficiency is reported when given)")

    b = sub.add_parser("benchmark", help="repeated-run benchmark")
    b.add_argument("--scenarios", default="standard", help="'standard' or a CSV with k,n[,criterion]")
    b.add_argument("--criteria", type=_criteria, default=_criteria("D,I"))
    b.add_argument("--algorithms", type=_algorithms, default=_algorithms("cexch,rexch,pso"))
    b.add_argument("--nrun", type=int, default=500)
    b.add_argument("--nrun-pso", type=int, default=None, help="PSO run count (default: --nrun)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--catalog", default=None, help="catalog JSON (default: shipped catalog)")
    b.add_argument("--out-dir", required=True)
    b.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    b.add_argument("--no-timing", action="store_true",
                   help="write 0.0 for wall times so repeated runs are byte-identical")
    _add_settings(b)

    c = sub.add_parser("catalog", help="verify or update a best-known catalog")
    csub = c.add_subparsers(dest="action", required=True)
    cv = csub.add_parser("verify")
    cv.add_argument("--catalog", default=None)
    cu = csub.add_parser("update")
    cu.add_argument("--catalog", required=True, help="catalog JSON to update (created if missing)")
    cu.add_argument("--scenarios", default="standard")
    cu.add_argument("--criteria", type=_criteria, default=_criteria("D,I"))
    cu.add_argument("--algorithms", type=_algorithms, default=_algorithms("cexch,rexch,pso"))
    cu.add_argument("--nrun", type=int, default=100)
    cu.add_argument("--nrun-pso", type=int, default=None)
    cu.add_argument("--seed", type=int, default=0)
    cu.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    _add_settings(cu)
    return parser


def _scenarios(source: str, criteria) -> list[Scenario]:
    if source == "standard":
        return [sc for c in criteria for sc in bench.standard_scenarios(c)]
    path = Path(source)
    if not path.exists():
        raise DataError(f"scenario file not found: {source}")
    out = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                k, n = int(row["k"]), int(row["n"])
                crits = [Criterion.parse(row["criterion"])] if row.get("criterion") else criteria
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{source}: line {lineno}: {exc}") from None
            out.extend(Scenario(k, n, c) for c in crits)
    return out


def _load_catalog(path):
    try:
        return bench.load_catalog(path)
    except bench.CatalogError as exc:
        raise DataError(str(exc)) from None


def cmd_generate(args) -> int:
    if args.k < 1 or args.n < 1 or args.restarts < 1:
        raise argparse.ArgumentTypeError("--k, --n and --restarts must be >= 1")
    config = _config(args)
    sc = Scenario(args.k, args.n, args.criterion)
    alg = Algorithm.parse(args.algorithm)
    records, _ = bench.run_benchmark([sc], [alg], args.restarts, args.seed, None, config,
                                     threads=args.threads)
    valid = [r for r in records if r.valid]
    if not valid:
        log.error("all %d restarts ended with a singular design (n=%d, p=%d)",
                  args.restarts, sc.n, sc.spec.p)
        return 1
    best = min(valid, key=lambda r: (r.final_score, r.run_index))
    out = Path(args.out)
    write_design(out, best.design)
    s = score(best.design, sc.spec, sc.criterion)
    sidecar = bench.metadata(
        config, command="generate", k=sc.k, n=sc.n, criterion=sc.criterion.value,
        algorithm=alg.value, restarts=args.restarts, master_seed=args.seed,
        best_restart=best.run_index, best_seed=best.seed, score=s.value, log_det_m=s.log_det_m,
        valid_restarts=len(valid),
    )
    out.with_suffix(".json").write_text(json.dumps(sidecar, indent=1, sort_keys=True) + "\n")
    print(json.dumps({"score": s.value, "design": str(out)}))
    return 0


def cmd_eval(args) -> int:
    try:
        design = read_design(args.design, k=args.k)
    except DesignError as exc:
        raise DataError(f"{args.design}: {exc}") from None
    spec = ModelSpec(args.k, design.shape[0])
    crit = Criterion.parse(args.criterion)
    s = score(design, spec, crit)
    out = {"score": s.value if s.valid else None, "valid": s.valid,
           "log_det_m": s.log_det_m if s.valid else None, "criterion": crit.value,
           "k": spec.k, "n": spec.n, "p": spec.p}
    if args.catalog:
        entry = _load_catalog(args.catalog).entry(Scenario(spec.k, spec.n, crit))
        if entry is None:
            out["efficiency"] = None
            log.warning("catalog has no entry for k=%d n=%d %s", spec.k, spec.n, crit.value)
        elif s.valid:
            out["efficiency"] = efficiency(s, CriterionScore(entry.best_score, True), crit, spec)
            out["efficiency_convention"] = EFFICIENCY_CONVENTION
        else:
            out["efficiency"] = 0.0
    print(json.dumps(out))
    return 0


def cmd_benchmark(args) -> int:
    if args.nrun < 1 or (args.nrun_pso is not None and args.nrun_pso < 1):
        raise argparse.ArgumentTypeError("--nrun must be >= 1")
    config = _config(args)
    scenarios = _scenarios(args.scenarios, args.criteria)
    catalog = _load_catalog(args.catalog)
    overrides = {Algorithm.PSO: args.nrun_pso} if args.nrun_pso else None
    records, summaries = bench.run_benchmark(scenarios, args.algorithms, args.nrun, args.seed,
                                             catalog, config, threads=args.threads,
                                             n_run_overrides=overrides)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timing = not args.no_timing
    bench.write_records(records, out / "records.csv", timing)
    bench.write_summary(summaries, out / "summary.csv", timing)
    missing = sorted({sc.key for sc in scenarios if catalog.entry(sc) is None})
    meta = bench.metadata(
        config, command="benchmark", master_seed=args.seed, nrun=args.nrun,
        nrun_pso=args.nrun_pso or args.nrun, algorithms=[a.value for a in args.algorithms],
        scenarios=[list(sc.key) for sc in scenarios], catalog=args.catalog or "shipped",
        missing_catalog_entries=[list(m) for m in missing], timing=timing,
        records_sha256=bench.file_sha256(out / "records.csv"),
        summary_sha256=bench.file_sha256(out / "summary.csv"),
        catalog_improvements=sum(s.improvements for s in summaries),
    )
    (out / "metadata.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    for m in missing:
        log.warning("efficiency unavailable for %s (no catalog entry)", m)
    return 0


def _default_catalog_path() -> str:
    from importlib import resources
    return str(resources.files("optdesign").joinpath("data/catalog.json"))


def cmd_catalog(args) -> int:
    if args.action == "verify":
        path = args.catalog or _default_catalog_path()
        if not Path(path).exists():
            raise DataError(f"catalog not found: {path}")
        cat = _load_catalog(path)
        print(json.dumps({"catalog": path, "entries": len(cat), "verified": True}))
        return 0
    config = _config(args)
    path = Path(args.catalog)
    cat = _load_catalog(path) if path.exists() else bench.Catalog()
    scenarios = _scenarios(args.scenarios, args.criteria)
    overrides = {Algorithm.PSO: args.nrun_pso} if args.nrun_pso else None
    records, _ = bench.run_benchmark(scenarios, args.algorithms, args.nrun, args.seed, cat,
                                     config, threads=args.threads, n_run_overrides=overrides)
    prov = f"optdesign multistart seed={args.seed} nrun={args.nrun} settings={config.settings_hash()}"
    new, events = bench.update_catalog(records, cat, prov)
    if events or not path.exists():
        bench.save_catalog(new, path)
    print(json.dumps({"catalog": str(path), "entries": len(new), "updated": len(events)}))
    return 0


COMMANDS = {"generate": cmd_generate, "eval": cmd_eval, "benchmark": cmd_benchmark,
            "catalog": cmd_catalog}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except (DataError, DesignError, bench.CatalogError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        parser.error(str(exc))

if __name__ == "__main__":
    sys.exit(main())
