"""Exit criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the pytest terminal summary)
before asserting. The benchmark-based criteria share one cached harness run
and take tens of minutes on a single core.
"""

import csv
import json

import numpy as np
import pytest
from numba import njit

from optdesign import bench
from optdesign.cli import main
from optdesign.criteria import d_score, i_score
from optdesign.exchange import ExchangeSettings, cexch_element, exch_row
from optdesign.model import ModelSpec, moments_matrix
from optdesign.swarm import pso_search

from conftest import STANDARD, random_design

pytestmark = pytest.mark.acceptance

MASTER_SEED = 2024
N_RUN = 500
N_RUN_PSO = 140


@njit(cache=True)
def _grid_max_det(step_count):
    # det(M) = det(F)^2 for a saturated 3-run quadratic design, F Vandermonde
    h = 2.0 / step_count
    best = -1.0
    arg = (0, 0, 0)
    for ia in range(step_count + 1):
        a = -1.0 + ia * h
        for ib in range(ia, step_count + 1):
            b = -1.0 + ib * h
            for ic in range(ib, step_count + 1):
                c = -1.0 + ic * h
                v = (b - a) * (c - a) * (c - b)
                v *= v
                if v > best:
                    best = v
                    arg = (ia, ib, ic)
    return best, arg


def test_1_grid_oracle_k1_n3(acceptance_report):
    best_det, (ia, ib, ic) = _grid_max_det(2000)
    x = np.array([ia, ib, ic]) * 0.001 - 1.0
    oracle = 1.0 / best_det
    spec = ModelSpec(1, 3)
    found = {
        "cexch": min(cexch_element(spec, "D", rng_seed=s).score.value for s in range(100)),
        "rexch": min(exch_row(spec, "D", rng_seed=s).score.value for s in range(100)),
        "pso": min(pso_search(spec, "D", rng_seed=s).score.value for s in range(100)),
    }
    ok = (abs(oracle - 0.25) <= 1e-12 and np.allclose(x, [-1, 0, 1], atol=1e-12)
          and all(abs(v - 0.25) <= 1e-6 * 0.25 for v in found.values()))
    detail = f"grid optimum {oracle:.12g} at {x.tolist()}; best-of-100 " + ", ".join(
        f"{k}={v:.10g}" for k, v in found.items())
    assert acceptance_report(1, ok, detail)


def test_2_analytic_i_score(acceptance_report):
    value = i_score(np.array([[-1.0], [0.0], [1.0]]), ModelSpec(1, 3)).value
    ok = abs(value - 2.4) <= 1e-10 * 2.4
    assert acceptance_report(2, ok, f"I({{-1,0,1}}) = {value!r}")


def test_3_moments_monte_carlo(acceptance_report):
    rng = np.random.default_rng(31)
    worst = 0.0
    for k in (1, 2, 3):
        spec = ModelSpec(k, 1)
        x = rng.uniform(-1, 1, size=(1_000_000, k))
        # monomial columns in model order via the exponent table
        F = np.prod(x[:, None, :] ** spec.exponents[None, :, :], axis=2)
        mc = F.T @ F / x.shape[0]
        worst = max(worst, float(np.max(np.abs(mc - moments_matrix(spec)))))
    ok = worst <= 5e-3
    assert acceptance_report(3, ok, f"max |W - W_mc| = {worst:.2e} (tol 5e-3)")


def _transforms(design, rng):
    k = design.shape[1]
    yield design[rng.permutation(design.shape[0])]
    signs = rng.choice([-1.0, 1.0], size=k)
    signs[rng.integers(k)] = -1.0
    yield design * signs
    if k > 1:
        yield design[:, np.roll(np.arange(k), 1)]


def test_4_invariance(acceptance_report):
    rng = np.random.default_rng(44)
    worst = 0.0
    checked = 0
    for k, n in STANDARD:
        spec = ModelSpec(k, n)
        got = 0
        while got < 50:
            X = random_design(spec, rng)
            base = (d_score(X, spec), i_score(X, spec))
            if not (base[0].valid and base[1].valid):
                continue
            got += 1
            for Y in _transforms(X, rng):
                for ref, new in zip(base, (d_score(Y, spec), i_score(Y, spec))):
                    worst = max(worst, abs(new.value - ref.value) / abs(ref.value))
                    checked += 1
    ok = worst <= 1e-10
    assert acceptance_report(4, ok, f"{checked} comparisons, max rel diff {worst:.2e}")


def test_5_exchange_monotone_terminates(acceptance_report):
    settings = ExchangeSettings()
    problems = []
    for run in range(1000):
        k, n = STANDARD[run % 21]
        crit = "D" if (run // 21) % 2 == 0 else "I"
        algo = cexch_element if (run // 42) % 2 == 0 else exch_row
        spec = ModelSpec(k, n)
        res = algo(spec, crit, settings, rng_seed=90_000 + run)
        start = res.start_score
        # singular starts carry a penalty, not a comparable score
        seq = np.concatenate([[start.value], res.trace]) if start.valid else res.trace
        if not np.all(np.diff(seq) <= 0.0):
            problems.append((run, "trace not monotone"))
        if start.valid and not res.score.value <= start.value:
            problems.append((run, "final worse than start"))
        if res.capped or res.passes >= settings.max_passes:
            problems.append((run, f"no certified final sweep after {res.passes} passes"))
    ok = not problems
    detail = "1000 runs monotone, certified" if ok else f"{len(problems)} violations, first {problems[:3]}"
    assert acceptance_report(5, ok, detail)


# -- harness-based criteria -----------------------------------------------------

def _bench(out, threads, algorithms, nrun, scenarios="standard"):
    argv = ["benchmark", "--scenarios", str(scenarios), "--algorithms", algorithms,
            "--nrun", str(nrun), "--seed", str(MASTER_SEED), "--out-dir", str(out),
            "--threads", str(threads), "--no-timing"]
    assert main(argv) == 0
    return out


def _summary(path):
    rows = list(csv.DictReader(open(path / "summary.csv")))
    table = {}
    for r in rows:
        key = (int(r["k"]), int(r["n"]), r["criterion"])
        p95 = float(r["p95"]) if r["p95"] else np.nan
        p100 = float(r["p100"]) if r["p100"] else np.nan
        table[key, r["algorithm"]] = (p95, p100)
    return table


@pytest.fixture(scope="module")
def harness(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    exch = _bench(root / "exchange_t1", 1, "cexch,rexch", N_RUN)
    scen = root / "pso_scenarios.csv"
    scen.write_text("k,n,criterion\n" + "".join(f"{k},{n},D\n" for k, n in STANDARD if k <= 2))
    pso = _bench(root / "pso", 1, "pso", N_RUN_PSO, scen)
    return {"root": root, "exchange": exch, "pso": pso}


def test_6_greediness_equivalence(harness, acceptance_report):
    table = _summary(harness["exchange"])
    worst, fails, missing = 0.0, [], []
    for k, n in STANDARD:
        for crit in "DI":
            a = table[(k, n, crit), "cexch_element"]
            b = table[(k, n, crit), "exch_row"]
            if np.isnan(a + b).any():
                missing.append((k, n, crit))
                continue
            for label, x, y in (("p95", a[0], b[0]), ("p100", a[1], b[1])):
                d = abs(x - y)
                worst = max(worst, d)
                if d > 0.05:
                    fails.append(f"{k},{n},{crit} {label} {x:.3f} vs {y:.3f}")
    ok = not fails and not missing
    detail = f"n_run={N_RUN}, max |diff| = {worst:.3f} (tol 0.05)"
    if fails:
        detail += f"; {len(fails)} over tolerance: " + "; ".join(fails)
    if missing:
        detail += f"; no catalog efficiencies for {missing}"
    assert acceptance_report(6, ok, detail)


def test_7_pso_ordering(harness, acceptance_report):
    exch = _summary(harness["exchange"])
    pso = _summary(harness["pso"])
    fails, cells = [], []
    for k, n in STANDARD:
        if k > 2:
            continue
        a = pso[(k, n, "D"), "pso"][1]
        c = exch[(k, n, "D"), "cexch_element"][1]
        cells.append(f"{k},{n}: {a:.3f}/{c:.3f}")
        if not a >= c:
            fails.append(f"{k},{n}")
    ok = not fails
    detail = "p100 pso/cexch " + " ".join(cells)
    if fails:
        detail += f"; ordering violated at {fails}"
    assert acceptance_report(7, ok, detail)


def test_8_determinism_across_threads(harness, acceptance_report):
    again = _bench(harness["root"] / "exchange_t2", 2, "cexch,rexch", N_RUN)
    same = {name: (harness["exchange"] / name).read_bytes() == (again / name).read_bytes()
            for name in ("records.csv", "summary.csv")}
    ok = all(same.values())
    assert acceptance_report(8, ok, f"threads 1 vs 2 byte-identical: {same}")


def test_9_catalog_integrity(harness, acceptance_report, capsys):
    code = main(["catalog", "verify"])
    verified = json.loads(capsys.readouterr().out) if code == 0 else {}
    bad = []
    for path in (harness["exchange"], harness["pso"]):
        for r in csv.DictReader(open(path / "summary.csv")):
            if r["p95"] and r["p100"] and float(r["p100"]) > float(r["p95"]):
                bad.append((r["k"], r["n"], r["criterion"], r["algorithm"]))
    complete = all(bench.load_catalog().entry(sc) is not None
                   for c in "DI" for sc in bench.standard_scenarios(c))
    ok = code == 0 and not bad and complete
    detail = (f"verify exit {code}, {verified.get('entries', 0)} entries, all 42 present: "
              f"{complete}; p100 > p95 rows: {bad or 'none'}")
    assert acceptance_report(9, ok, detail)
