"""Global-best particle swarm search over whole designs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from optdesign import kernels
from optdesign.criteria import Criterion, moments_cholesky, score
from optdesign.exchange import SearchResult, make_rng
from optdesign.model import ModelSpec


@dataclass(frozen=True)
class PsoSettings:
    swarm_size: int = 30
    iterations: int = 2000
    inertia_start: float = 0.9
    inertia_end: float = 0.4
    cognitive: float = 1.49618
    social: float = 1.49618
    vmax_fraction: float = 0.5

    def __post_init__(self):
        if self.swarm_size < 2 or self.iterations < 1:
            raise ValueError("swarm_size must be >= 2 and iterations >= 1")
        if min(self.inertia_start, self.inertia_end, self.cognitive, self.social) < 0:
            raise ValueError("PSO coefficients must be non-negative")
        if not 0 < self.vmax_fraction <= 1:
            raise ValueError("vmax_fraction must lie in (0, 1]")


def pso_search(spec: ModelSpec, criterion, settings: PsoSettings = PsoSettings(),
               rng_seed: int = 0) -> SearchResult:
    """Run one gbest PSO search; deterministic in ``rng_seed``.

    Positions start i.i.d. Uniform(-1, 1) with zero velocity. Components that
    leave the cube are clamped onto it and their velocity zeroed.
    ``trace[0]`` is the best initial score, ``trace[t]`` gbest after iteration t.
    """
    criterion = Criterion.parse(criterion)
    trace = np.empty(settings.iterations + 1)
    gbest, _, evals = kernels.pso_run(
        make_rng(rng_seed), spec.n, spec.k, criterion.code,
        np.ascontiguousarray(moments_cholesky(spec)),
        settings.swarm_size, settings.iterations, settings.inertia_start, settings.inertia_end,
        settings.cognitive, settings.social, 2.0 * settings.vmax_fraction, trace,
    )
    design = np.asarray(gbest).reshape(spec.n, spec.k).copy()
    start = score(design, spec, criterion).__class__(trace[0], trace[0] < kernels.PENALTY)
    return SearchResult(
        design=design,
        score=score(design, spec, criterion),
        passes=settings.iterations,
        evals=int(evals),
        seed=rng_seed,
        start_score=start,
        trace=trace,
    )
