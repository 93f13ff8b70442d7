"""Second-order response-surface model on the hypercube [-1, 1]^K.

Term order is fixed everywhere (matrices, files, catalogs): intercept, the K
linear terms, the K(K-1)/2 two-factor interactions in lexicographic order,
then the K pure quadratics.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from optdesign import kernels


class DesignError(ValueError):
    """A design (or design file) violates the shape or bounds contract."""


def n_params(k: int) -> int:
    return (k + 2) * (k + 1) // 2


@lru_cache(maxsize=None)
def _exponents(k: int) -> np.ndarray:
    rows = [np.zeros(k, dtype=np.int64)]
    for j in range(k):
        e = np.zeros(k, dtype=np.int64)
        e[j] = 1
        rows.append(e)
    for a in range(k):
        for b in range(a + 1, k):
            e = np.zeros(k, dtype=np.int64)
            e[a] = e[b] = 1
            rows.append(e)
    for j in range(k):
        e = np.zeros(k, dtype=np.int64)
        e[j] = 2
        rows.append(e)
    out = np.array(rows, dtype=np.int64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModelSpec:
    """Factor count ``k`` and run count ``n`` of a second-order scenario."""

    k: int
    n: int
    p: int = field(init=False)

    def __post_init__(self):
        if int(self.k) < 1 or int(self.n) < 1:
            raise ValueError(f"k and n must be >= 1, got k={self.k}, n={self.n}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", n_params(self.k))

    @property
    def exponents(self) -> np.ndarray:
        """(p, k) exponent vectors, one monomial per model term, in term order."""
        return _exponents(self.k)

    def term_names(self) -> list[str]:
        names = []
        for e in self.exponents:
            parts = []
            for j, power in enumerate(e):
                if power == 1:
                    parts.append(f"x{j + 1}")
                elif power == 2:
                    parts.append(f"x{j + 1}^2")
            names.append("*".join(parts) or "1")
        return names


def as_design(points, spec: ModelSpec | None = None) -> np.ndarray:
    """Validate ``points`` as an N x K design inside the hypercube.

    Returns a float64 C-contiguous copy. Raises :class:`DesignError` on shape
    mismatch with ``spec`` or on any entry outside [-1, 1].
    """
    x = np.array(points, dtype=np.float64, copy=True)
    if x.ndim == 1 and spec is not None and spec.k == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2:
        raise DesignError(f"design must be 2-D, got shape {x.shape}")
    if spec is not None and x.shape != (spec.n, spec.k):
        raise DesignError(f"design shape {x.shape} does not match (n={spec.n}, k={spec.k})")
    if not np.all(np.isfinite(x)):
        raise DesignError("design contains non-finite entries")
    bad = np.argwhere(np.abs(x) > 1.0)
    if bad.size:
        i, j = bad[0]
        raise DesignError(f"entry {x[i, j]!r} at row {i + 1}, column {j + 1} is outside [-1, 1]")
    return np.ascontiguousarray(x)


def expand_point(x, spec: ModelSpec) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != spec.k:
        raise DesignError(f"point has {x.shape[0]} factors, model expects {spec.k}")
    out = np.empty(spec.p)
    kernels.expand_row(x, spec.k, out)
    return out


def model_matrix(design, spec: ModelSpec) -> np.ndarray:
    """N x p model matrix F, one expanded design point per row."""
    x = as_design(design, spec)
    f = np.empty((spec.n, spec.p))
    for i in range(spec.n):
        kernels.expand_row(x[i], spec.k, f[i])
    return f


def information_matrix(design, spec: ModelSpec) -> np.ndarray:
    """Information matrix M = F'F (p x p, symmetric by construction)."""
    x = as_design(design, spec)
    m = np.empty((spec.p, spec.p))
    work = np.empty(spec.p)
    kernels.info_matrix(x, spec.k, m, work)
    return m


@lru_cache(maxsize=None)
def _moments(k: int) -> np.ndarray:
    e = _exponents(k)
    s = e[:, None, :] + e[None, :, :]
    w = np.where(s % 2 == 0, 1.0 / (s + 1.0), 0.0).prod(axis=2)
    w.setflags(write=False)
    return w


def moments_matrix(spec: ModelSpec) -> np.ndarray:
    """Volume-normalized moments matrix W of f(x)f'(x) over [-1, 1]^K.

    Entry (u, v) is the product over factors of 1/(s+1) for even summed
    exponent s, and zero if any summed exponent is odd. Read-only.
    """
    return _moments(spec.k)


# -- design CSV -------------------------------------------------------------

def read_design(path, k: int | None = None) -> np.ndarray:
    """Parse a design CSV (optional ``x1,...,xK`` header).

    Errors name the offending design row, its file line, and the column.
    """
    text = Path(path).read_text()
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and all(c.strip().lower() == f"x{j + 1}" for j, c in enumerate(row)):
            width = len(row)
            continue
        values = []
        where = f"row {len(rows) + 1} (line {lineno})"
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise DesignError(f"{where}, column {col}: not a number: {cell.strip()!r}") from None
            if not np.isfinite(v) or abs(v) > 1.0:
                raise DesignError(f"{where}, column {col}: value {v!r} outside [-1, 1]")
            values.append(v)
        if width is None:
            width = len(values)
        if len(values) != width:
            raise DesignError(f"{where}: expected {width} columns, got {len(values)}")
        if k is not None and len(values) != k:
            raise DesignError(f"{where}: expected k={k} columns, got {len(values)}")
        rows.append(values)
    if not rows:
        raise DesignError(f"{path}: no design rows")
    return np.array(rows, dtype=np.float64)


def write_design(path, design) -> None:
    x = np.asarray(design, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(x.shape[1])])
        for row in x:
            w.writerow([repr(float(v)) for v in row])
