"""D- and I-criterion scoring, prediction variance, and efficiencies."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from optdesign import kernels
from optdesign.model import ModelSpec, as_design, expand_point, model_matrix, moments_matrix

EFFICIENCY_CONVENTION = "D: (score_best/score)^(1/p); I: score_best/score"


class Criterion(str, enum.Enum):
    D = "D"
    I = "I"  # noqa: E741

    @property
    def code(self) -> int:
        return kernels.D_CODE if self is Criterion.D else kernels.I_CODE

    @classmethod
    def parse(cls, value) -> "Criterion":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown criterion {value!r}; expected 'D' or 'I'") from None


class SingularDesignError(ValueError):
    """The design's information matrix is numerically singular."""


@dataclass(frozen=True)
class CriterionScore:
    """Criterion value (lower is better). Invalid scores compare worse than any valid one."""

    value: float
    valid: bool
    log_det_m: float = float("nan")

    @classmethod
    def invalid(cls) -> "CriterionScore":
        return cls(math.inf, False)

    @property
    def objective(self) -> float:
        """Value used by the optimizers; invalid designs get the penalty."""
        return self.value if self.valid else kernels.PENALTY

    def __lt__(self, other: "CriterionScore") -> bool:
        if self.valid != other.valid:
            return self.valid
        return self.valid and self.value < other.value


def _factor(design, spec: ModelSpec):
    """Triangular factor R of F = QR, so that M = R'R without forming F'F.

    Working on F keeps rounding proportional to cond(F) rather than cond(M).
    The rank test mirrors the kernels' Cholesky pivot test: R_ii^2 below
    ``PIVOT_RTOL * max diag(M)`` marks the design singular.
    """
    F = model_matrix(design, spec)
    r = scipy.linalg.qr(F, mode="r", check_finite=False)[0][: spec.p]
    d2 = np.diag(r) ** 2
    scale = float(np.max(np.sum(F * F, axis=0)))
    if not scale > 0 or np.any(d2 < kernels.PIVOT_RTOL * scale):
        return r, math.nan, False
    return r, float(np.sum(np.log(d2))), True


def d_score(design, spec: ModelSpec) -> CriterionScore:
    """D-score det((F'F)^-1) = exp(-log det F'F), with log det from a QR factor of F."""
    if spec.n < spec.p:
        as_design(design, spec)
        return CriterionScore.invalid()
    _, logdet, ok = _factor(design, spec)
    if not ok:
        return CriterionScore.invalid()
    return CriterionScore(math.exp(-logdet), True, logdet)


def i_score(design, spec: ModelSpec, w: np.ndarray | None = None) -> CriterionScore:
    """I-score N * tr(M^-1 W) = N * ||R^-T C||_F^2 with W = CC' and M = R'R."""
    c = moments_cholesky(spec) if w is None else np.linalg.cholesky(w)
    if spec.n < spec.p:
        as_design(design, spec)
        return CriterionScore.invalid()
    r, logdet, ok = _factor(design, spec)
    if not ok:
        return CriterionScore.invalid()
    z = scipy.linalg.solve_triangular(r, c, trans="T", check_finite=False)
    return CriterionScore(spec.n * float(np.sum(z * z)), True, logdet)


def score(design, spec: ModelSpec, criterion) -> CriterionScore:
    criterion = Criterion.parse(criterion)
    if criterion is Criterion.D:
        return d_score(design, spec)
    return i_score(design, spec)


def spv(x, design, spec: ModelSpec) -> float:
    """Scaled prediction variance N f'(x) M^-1 f(x) at point ``x``.

    Raises :class:`SingularDesignError` when the design cannot be scored.
    """
    if spec.n < spec.p:
        raise SingularDesignError(f"n={spec.n} < p={spec.p}")
    r, _, ok = _factor(design, spec)
    if not ok:
        raise SingularDesignError("information matrix is numerically singular")
    fx = expand_point(x, spec)
    y = scipy.linalg.solve_triangular(r, fx, trans="T", check_finite=False)
    return spec.n * float(y @ y)


def efficiency(score: CriterionScore, best: CriterionScore, criterion, spec: ModelSpec) -> float:
    """Efficiency of ``score`` relative to ``best``; 1.0 means equal.

    Not clamped: a value above 1 means the candidate beats the reference.
    """
    if not (score.valid and best.valid):
        raise ValueError("efficiency needs two valid scores")
    criterion = Criterion.parse(criterion)
    ratio = best.value / score.value
    if criterion is Criterion.D:
        return ratio ** (1.0 / spec.p)
    return ratio


@lru_cache(maxsize=None)
def _moments_chol(k: int) -> np.ndarray:
    c = np.linalg.cholesky(moments_matrix(ModelSpec(k, 1)))
    c.setflags(write=False)
    return c


def moments_cholesky(spec: ModelSpec) -> np.ndarray:
    """Lower Cholesky factor of the moments matrix, as consumed by the kernels."""
    return _moments_chol(spec.k)
