"""Static fuel-cell terminal model.

The cell is represented by its polarization curve: terminal voltage as a
strictly decreasing function of drawn current, with open-circuit, activation
(log), ohmic (linear) and concentration (exponential) contributions.  This
module provides the curve, its slope, a numerical left-inverse
(current from voltage), a uniform-grid interpolation cache of that inverse
for hot loops, least-squares fitting of the five curve constants from
measured samples, and CSV ingestion of such samples.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PolarizationParams",
    "CurveSample",
    "CurveRangeError",
    "SolverConvergenceError",
    "FitRankError",
    "vfc",
    "vfc_slope",
    "d1",
    "InverseTable",
    "fit_polarization",
    "read_polarization_csv",
]

# Default current bracket for the inverse, in amperes.  The curve is defined
# for i > 0; 200 A is far beyond the operating range of the modeled stack.
DEFAULT_BRACKET = (1e-3, 200.0)


class CurveRangeError(ValueError):
    """Voltage outside the invertible range of the polarization curve."""


class SolverConvergenceError(RuntimeError):
    """Iteration budget exhausted before reaching the requested tolerance."""


class FitRankError(ValueError):
    """Regressor matrix of the polarization fit is numerically singular."""


@dataclass(frozen=True)
class PolarizationParams:
    """The five constants of the polarization curve.

    c1 [V] open-circuit voltage, c2 [V] activation-loss coefficient,
    c3 [ohm] ohmic slope, c4 [1/A] concentration exponent,
    c5 [V] concentration magnitude.
    """

    c1: float
    c2: float
    c3: float
    c4: float
    c5: float

    def __post_init__(self):
        for name in ("c1", "c2", "c3", "c4", "c5"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        # strict monotonicity needs at least one strictly decreasing term
        if not (self.c2 > 0.0 or self.c3 > 0.0 or self.c4 * self.c5 > 0.0):
            raise ValueError("curve is flat: need c2 > 0, c3 > 0, or c4*c5 > 0")


@dataclass(frozen=True)
class CurveSample:
    """One measured (current, voltage) point. i_fc [A] > 0, v_fc [V] > 0."""

    i_fc: float
    v_fc: float

    def __post_init__(self):
        if not self.i_fc > 0.0:
            raise ValueError(f"i_fc must be positive, got {self.i_fc}")
        if not self.v_fc > 0.0:
            raise ValueError(f"v_fc must be positive, got {self.v_fc}")


def vfc(i: float, p: PolarizationParams) -> float:
    """Terminal voltage [V] at current i [A]; i must be positive."""
    if not i > 0.0:
        raise ValueError(f"current must be positive, got {i}")
    return p.c1 - p.c2 * math.log(i) - p.c3 * i - p.c5 * math.exp(p.c4 * i)


def vfc_slope(i: float, p: PolarizationParams) -> float:
    """Slope dV/di [V/A] at current i [A]; non-positive for all i > 0."""
    if not i > 0.0:
        raise ValueError(f"current must be positive, got {i}")
    return -p.c2 / i - p.c3 - p.c5 * p.c4 * math.exp(p.c4 * i)


def d1(
    v: float,
    p: PolarizationParams,
    *,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> float:
    """Current [A] at which the curve takes the value v [V].

    Bisection on the bracket; the curve is strictly decreasing so the root is
    unique.  Terminates when |vfc(i) - v| <= tol [V].  Raises CurveRangeError
    if v lies outside the open interval (vfc(i_max), vfc(i_min)) and
    SolverConvergenceError if the budget runs out.
    """
    i_lo, i_hi = bracket
    v_hi, v_lo = vfc(i_lo, p), vfc(i_hi, p)  # decreasing: low current, high voltage
    if not (v_lo < v < v_hi):
        raise CurveRangeError(
            f"voltage {v} outside invertible range ({v_lo:.4f}, {v_hi:.4f}) V"
        )
    for _ in range(max_iter):
        mid = 0.5 * (i_lo + i_hi)
        f = vfc(mid, p) - v
        if abs(f) <= tol:
            return mid
        if f > 0.0:  # voltage too high -> current too low
            i_lo = mid
        else:
            i_hi = mid
    raise SolverConvergenceError(
        f"inverse of polarization curve at {v} V did not reach {tol} V in {max_iter} iterations"
    )


class InverseTable:
    """Uniform-grid linear interpolant of the curve inverse d1.

    Nodes are computed with the exact bisection inverse; lookups are O(1).
    With the default 4096 intervals over the full invertible span the
    interpolation error stays below 1e-5 A, well inside the 1e-4 A budget
    the simulator requires of a cached inverse.
    """

    def __init__(
        self,
        p: PolarizationParams,
        *,
        n: int = 4096,
        bracket: tuple[float, float] = DEFAULT_BRACKET,
        margin: float = 1e-9,
    ):
        self.params = p
        self.v_lo = vfc(bracket[1], p) + margin
        self.v_hi = vfc(bracket[0], p) - margin
        self.n = n
        self._hv = (self.v_hi - self.v_lo) / n
        self.values = np.array(
            [d1(self.v_lo + j * self._hv, p, bracket=bracket) for j in range(n + 1)]
        )
        self.inv_hv = 1.0 / self._hv

    def __call__(self, v: float) -> float:
        j = (v - self.v_lo) * self.inv_hv
        if not 0.0 <= j < self.n:  # also rejects NaN
            raise CurveRangeError(
                f"voltage {v} outside table range ({self.v_lo:.4f}, {self.v_hi:.4f}) V"
            )
        ji = int(j)
        fr = j - ji
        lo = self.values[ji]
        return lo + fr * (self.values[ji + 1] - lo)


def _solve_linear(i: np.ndarray, v: np.ndarray, c4: float) -> tuple[np.ndarray, float]:
    """Least-squares solve for (c1, c2, c3, c5) at fixed c4.

    Negative coefficients are clamped to zero and the system re-solved with
    the offending regressors removed.  At c4 == 0 the exponential regressor
    is constant and merges into c1, so c5 is pinned to zero up front; the
    same happens when c4 is so small that the column is numerically
    dependent on the others.  A rank-deficient base matrix (degenerate
    data) raises FitRankError.
    """
    cols = [np.ones_like(i), -np.log(i), -i]
    active = [0, 1, 2]
    if c4 > 0.0:
        cols.append(-np.exp(c4 * i))
        active.append(3)
    coef = np.zeros(4)
    while True:
        a = np.column_stack([cols[k] for k in range(len(active))])
        sol, _, rank, _ = np.linalg.lstsq(a, v, rcond=None)
        if rank < a.shape[1]:
            if 3 in active:  # exponential column indistinguishable from the rest
                drop = active.index(3)
                cols.pop(drop)
                active.pop(drop)
                continue
            raise FitRankError(
                f"regressor matrix rank {rank} < {a.shape[1]} at c4={c4}"
            )
        if np.all(sol >= 0.0):
            break
        keep = [k for k, s in enumerate(sol) if s >= 0.0]
        if not keep:
            sol = np.zeros(0)
            active = []
            break
        cols = [cols[k] for k in keep]
        active = [active[k] for k in keep]
    coef[active] = sol
    resid = v - (coef[0] - coef[1] * np.log(i) - coef[2] * i - coef[3] * np.exp(c4 * i))
    return coef, float(resid @ resid)


def _golden_min(f, lo: float, hi: float, iters: int = 60) -> float:
    """Golden-section minimizer of a scalar function on [lo, hi]."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - g * (b - a)
    x2 = a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def fit_polarization(
    data: list[CurveSample],
    *,
    c4_max: float = 0.05,
    c4_points: int = 501,
) -> PolarizationParams:
    """Fit the five curve constants to measured samples.

    Separable least squares: the model is linear in (c1, c2, c3, c5) once c4
    is fixed, so c4 is scanned on a uniform grid over [0, c4_max] and the
    best grid point refined by golden section.  Needs at least 5 samples
    with positive, distinct currents.
    """
    if len(data) < 5:
        raise ValueError(f"need at least 5 samples, got {len(data)}")
    i = np.array([s.i_fc for s in data])
    v = np.array([s.v_fc for s in data])
    if len(set(i.tolist())) != len(data):
        raise ValueError("sample currents must be distinct")

    def sse(c4: float) -> float:
        return _solve_linear(i, v, c4)[1]

    grid = np.linspace(0.0, c4_max, c4_points)
    errs = [sse(c4) for c4 in grid]
    best = int(np.argmin(errs))
    step = grid[1] - grid[0]
    lo = max(0.0, grid[best] - step)
    hi = min(c4_max, grid[best] + step)
    c4 = _golden_min(sse, lo, hi)
    coef, refined_sse = _solve_linear(i, v, c4)
    if errs[best] < refined_sse:  # refinement must never lose to the scan
        c4 = float(grid[best])
        coef, _ = _solve_linear(i, v, c4)
    if coef[3] == 0.0:
        c4 = 0.0  # exponential term absent: its rate is unidentifiable
    return PolarizationParams(coef[0], coef[1], coef[2], c4, coef[3])


CSV_HEADER = ("i_fc_A", "v_fc_V")


def read_polarization_csv(path) -> list[CurveSample]:
    """Read (current, voltage) samples from a two-column CSV file.

    Expects the exact header ``i_fc_A,v_fc_V``, comma separator, decimal
    point, UTF-8.
    """
    samples = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(
                f"expected header {','.join(CSV_HEADER)!r}, got {header!r}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"line {row_no}: expected 2 columns, got {len(row)}")
            try:
                samples.append(CurveSample(float(row[0]), float(row[1])))
            except ValueError as exc:
                raise ValueError(f"line {row_no}: {exc}") from exc
    return samples
