"""Bounded derivative-free local minimizers used as exchange proposals.

Both start at the incumbent and never return a worse point. The default
engine in every dimension is a projected Hooke-Jeeves pattern search whose
first poll reaches a quarter of the box width, so coordinate and row
proposals share one search rule; a golden-section/parabolic (Brent) scalar
search is available as ``scalar_method="brent"``. The kernels in
:mod:`optdesign.kernels` call the compiled versions directly; the functions
here accept arbitrary Python callables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from optdesign import kernels


SCALAR_METHODS = ("pattern", "brent")


def _py(fn):
    return getattr(fn, "py_func", fn)


@dataclass(frozen=True)
class BoxBounds:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise ValueError("lower and upper bounds differ in length")
        if any(not a < b for a, b in zip(lo, hi)):
            raise ValueError("every lower bound must be below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, m: int) -> "BoxBounds":
        return cls((-1.0,) * m, (1.0,) * m)

    @property
    def dim(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class SolveSettings:
    """Inner-solver tolerances; ``max_evals=None`` means 200 per variable.

    ``scalar_method`` picks the one-dimensional engine: ``"pattern"`` (the
    box engine restricted to one axis) or ``"brent"``.
    """

    x_tol: float = 1e-6
    f_tol: float = 0.0
    max_evals: int | None = None
    scalar_method: str = "pattern"

    def __post_init__(self):
        if self.scalar_method not in SCALAR_METHODS:
            raise ValueError(f"scalar_method must be one of {SCALAR_METHODS}")
        if not self.x_tol > 0 or self.f_tol < 0:
            raise ValueError("x_tol must be > 0 and f_tol >= 0")
        if self.max_evals is not None and self.max_evals < 3:
            raise ValueError("max_evals must be at least 3")

    def budget(self, m: int) -> int:
        return self.max_evals if self.max_evals is not None else 200 * m


def _finite_start(value) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"objective is not finite at the starting point ({value!r})")
    return value


def minimize_scalar(objective, bounds=(-1.0, 1.0), settings: SolveSettings = SolveSettings(),
                    x0: float = 0.0):
    """Minimize ``objective(x)`` over ``bounds`` starting from ``x0``.

    Returns ``(x_best, f_best)`` with ``f_best <= objective(x0)``.
    """
    a, b = (float(v) for v in bounds)
    if not a <= x0 <= b:
        raise ValueError(f"x0={x0} outside bounds [{a}, {b}]")
    _finite_start(objective(x0))
    if settings.scalar_method == "brent":
        x, fx, _, _ = _py(kernels.brent_min)(lambda t, _: float(objective(t)), (), a, b,
                                             float(x0), settings.x_tol, settings.f_tol,
                                             settings.budget(1))
        return x, fx
    x, fx, _, _ = _py(kernels.hooke_jeeves)(lambda v, _: float(objective(float(v[0]))), (),
                                            np.array([a]), np.array([b]), np.array([float(x0)]),
                                            settings.x_tol, settings.f_tol, settings.budget(1))
    return float(min(max(x[0], a), b)), fx


def minimize_box(objective, bounds: BoxBounds, settings: SolveSettings = SolveSettings(),
                 x0=None):
    """Minimize ``objective(x)`` over a box starting from ``x0``.

    One-dimensional boxes use the scalar engine. Returns ``(x_best, f_best)``.
    """
    lo = np.array(bounds.lower)
    hi = np.array(bounds.upper)
    x0 = np.array(x0 if x0 is not None else 0.5 * (lo + hi), dtype=np.float64)
    if x0.shape != lo.shape:
        raise ValueError(f"x0 has shape {x0.shape}, bounds have {bounds.dim} dimensions")
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise ValueError("x0 outside bounds")
    if bounds.dim == 1:
        x, fx = minimize_scalar(lambda t: objective(np.array([t])), (lo[0], hi[0]),
                                settings, float(x0[0]))
        return np.array([x]), fx
    _finite_start(objective(x0.copy()))
    x, fx, _, _ = _py(kernels.hooke_jeeves)(lambda v, _: float(objective(v.copy())), (), lo, hi,
                                            x0, settings.x_tol, settings.f_tol,
                                            settings.budget(bounds.dim))
    return np.clip(x, lo, hi), fx
