"""Element-wise coordinate exchange and row-wise exchange.

Both start from an i.i.d. Uniform(-1, 1) design and sweep it in fixed
row-major order, replacing a coordinate (or a whole row) with the inner
solver's proposal whenever the criterion drops by more than
``improvement_tol`` relative. A run ends after a sweep with no accepted
exchange, or at ``max_passes``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from optdesign import kernels
from optdesign.criteria import Criterion, CriterionScore, moments_cholesky, score
from optdesign.localsolve import SolveSettings
from optdesign.model import ModelSpec, as_design

log = logging.getLogger(__name__)

RNG_NAME = f"numpy.random.PCG64 (numpy {np.__version__})"


@dataclass(frozen=True)
class ExchangeSettings:
    improvement_tol: float = 1e-10
    max_passes: int = 5000
    solver: SolveSettings = field(default_factory=SolveSettings)

    def __post_init__(self):
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")
        if self.improvement_tol < 0:
            raise ValueError("improvement_tol must be >= 0")


@dataclass
class SearchResult:
    design: np.ndarray
    score: CriterionScore
    passes: int
    evals: int
    seed: int | None
    start_score: CriterionScore
    trace: np.ndarray
    capped: bool = False


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_start(spec: ModelSpec, rng_seed: int) -> np.ndarray:
    """N x K design of i.i.d. Uniform(-1, 1) entries, deterministic in the seed."""
    return make_rng(rng_seed).uniform(-1.0, 1.0, size=(spec.n, spec.k))


def _run(spec, criterion, settings, rng_seed, start, rowwise):
    criterion = Criterion.parse(criterion)
    if start is None:
        x = random_start(spec, rng_seed)
    else:
        x = as_design(start, spec)
    start_score = score(x, spec, criterion)
    trace = np.empty(settings.max_passes)
    m = spec.k if rowwise else 1
    passes, evals, capped = kernels.exchange_run(
        x, criterion.code, np.ascontiguousarray(moments_cholesky(spec)), rowwise,
        settings.improvement_tol, settings.max_passes,
        settings.solver.x_tol, settings.solver.f_tol, settings.solver.budget(m), trace,
        settings.solver.scalar_method == "brent",
    )
    if capped:
        log.warning("exchange hit max_passes=%d (k=%d n=%d seed=%s)",
                    settings.max_passes, spec.k, spec.n, rng_seed)
    return SearchResult(
        design=x,
        score=score(x, spec, criterion),
        passes=int(passes),
        evals=int(evals),
        seed=rng_seed,
        start_score=start_score,
        trace=trace[:passes].copy(),
        capped=bool(capped),
    )


def cexch_element(spec: ModelSpec, criterion, settings: ExchangeSettings = ExchangeSettings(),
                  rng_seed: int | None = 0, start=None) -> SearchResult:
    """Element-wise coordinate exchange: one scalar proposal per design entry.

    ``start`` overrides the random starting design (the seed is then only
    recorded).
    """
    return _run(spec, criterion, settings, rng_seed, start, rowwise=False)


def exch_row(spec: ModelSpec, criterion, settings: ExchangeSettings = ExchangeSettings(),
             rng_seed: int | None = 0, start=None) -> SearchResult:
    """Row-wise exchange: one K-variate box proposal per design point."""
    return _run(spec, criterion, settings, rng_seed, start, rowwise=True)
