"""Assignable equilibria of the closed power stage.

For a desired output voltage x3_star, an equilibrium must balance cell power
against load and parasitic losses:

    p(x1, x3, theta) = d1(x1)*x1 - theta2*x3^2 - theta1*d1(x1)^2 = 0

with x2 = d1(x1).  The steady control follows from the output equation,
u_star = theta2*x3_star/x2_star, and is cross-checked against the
least-squares projection of the drift onto the input direction.  The
equilibria depend only on the curve constants and the loss parameters, never
on the converter storage elements.

The adaptive controller cannot root-find online (its parameter estimates may
transiently admit no root), so it uses a grid argmin of |p| over the
operating range instead; `EquilibriumGrid` precomputes the grid quantities
for per-step refresh.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .pemfc import PolarizationParams, SolverConvergenceError, d1

__all__ = [
    "Equilibrium",
    "InfeasibleSetpointError",
    "p_residual",
    "solve_equilibrium",
    "estimate_equilibrium",
    "EquilibriumGrid",
    "default_grid",
    "X1_RANGE",
]

# Operating range for the cell-voltage root search [V].
X1_RANGE = (21.0, 48.0)
SCAN_STEP = 0.25
GRID_STEP = 0.01


class InfeasibleSetpointError(RuntimeError):
    """No equilibrium exists in the operating range for the requested voltage."""


class Equilibrium(NamedTuple):
    """Steady state, steady control, and the matching integrator value."""

    x1_star: float
    x2_star: float
    x3_star: float
    u_star: float
    xc_star: float


def p_residual(
    x1: float,
    x3: float,
    theta: Sequence[float],
    pol: PolarizationParams,
    inverse=None,
) -> float:
    """Power balance [W] at cell voltage x1, output voltage x3."""
    th1, th2 = theta
    ifc = inverse(x1) if inverse is not None else d1(x1, pol)
    return ifc * x1 - th2 * x3 * x3 - th1 * ifc * ifc


def _projection_u(x1: float, x2: float, x3: float, theta: Sequence[float]) -> float:
    """Least-squares steady control: -(g^T g)^-1 g^T f at the equilibrium."""
    th1, th2 = theta
    f = np.array([0.0, x1 - th1 * x2, -th2 * x3])  # first drift entry: d1(x1) - x2 = 0
    g = np.array([0.0, -x3, x2])
    return float(-(g @ f) / (g @ g))


def solve_equilibrium(
    x3_star: float,
    theta: Sequence[float],
    pol: PolarizationParams,
    k_i: float,
    *,
    x1_range: tuple[float, float] = X1_RANGE,
    scan_step: float = SCAN_STEP,
    p_tol: float = 1e-6,
    max_iter: int = 200,
) -> Equilibrium:
    """Equilibrium for a desired output voltage with known parameters.

    Scans the operating range from the top for a sign change of the power
    balance (the topmost root is the low-current branch), then bisects to
    |p| <= p_tol [W].  Raises InfeasibleSetpointError when no sign change
    exists, e.g. when the setpoint demands more power than the cell curve
    can deliver.
    """
    if not x3_star > 0.0:
        raise ValueError(f"setpoint must be positive, got {x3_star}")
    lo, hi = x1_range

    def pres(x1: float) -> float:
        return p_residual(x1, x3_star, theta, pol)

    # descend from the largest cell voltage; first bracket = low-current branch
    n = max(1, math.ceil((hi - lo) / scan_step))
    xs = [hi - k * (hi - lo) / n for k in range(n + 1)]
    a = xs[0]
    fa = pres(a)
    bracket = None
    for b in xs[1:]:
        fb = pres(b)
        if fa == 0.0 or fa * fb < 0.0:
            bracket = (b, a, fb, fa)
            break
        a, fa = b, fb
    if bracket is None:
        if fa == 0.0:
            bracket = (a, a, fa, fa)
        else:
            raise InfeasibleSetpointError(
                f"no equilibrium for x3_star = {x3_star} V in cell-voltage range {x1_range}"
            )
    b_lo, b_hi, f_lo, f_hi = bracket
    x1s = None
    for _ in range(max_iter):
        mid = 0.5 * (b_lo + b_hi)
        fm = pres(mid)
        if abs(fm) <= p_tol:
            x1s = mid
            break
        if (fm > 0.0) == (f_lo > 0.0):
            b_lo, f_lo = mid, fm
        else:
            b_hi, f_hi = mid, fm
    if x1s is None:
        raise SolverConvergenceError(
            f"power-balance root at {x3_star} V did not reach {p_tol} W in {max_iter} iterations"
        )
    x2s = d1(x1s, pol)
    if x2s < 0.0:
        raise InfeasibleSetpointError(f"equilibrium current {x2s} A is negative")
    u_star = _projection_u(x1s, x2s, x3_star, theta)
    u_ratio = theta[1] * x3_star / x2s
    if abs(u_star - u_ratio) > 1e-6:
        raise SolverConvergenceError(
            f"steady-control cross-check failed: projection {u_star} vs ratio {u_ratio}"
        )
    return Equilibrium(x1s, x2s, x3_star, u_star, -u_star / k_i)


def default_grid(
    lo: float = X1_RANGE[0], hi: float = X1_RANGE[1], step: float = GRID_STEP
) -> np.ndarray:
    """Ascending cell-voltage grid for the online equilibrium estimate."""
    n = round((hi - lo) / step)
    return np.linspace(lo, hi, n + 1)


def estimate_equilibrium(
    theta_hat: Sequence[float],
    x3_star: float,
    pol: PolarizationParams,
    grid: np.ndarray,
) -> tuple[float, float]:
    """Online equilibrium estimate from (possibly wrong) parameter estimates.

    Returns the grid point minimizing |p(x1, x3_star, theta_hat)| and the
    matching current d1(x1).  Always succeeds on a nonempty grid; ties break
    toward the larger cell voltage (lower current).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    th1, th2 = theta_hat
    cur = np.array([d1(x1, pol) for x1 in grid])
    p_abs = np.abs(cur * grid - th2 * x3_star * x3_star - th1 * cur * cur)
    rev = p_abs[::-1]
    idx = p_abs.size - 1 - int(np.argmin(rev))
    return float(grid[idx]), float(cur[idx])


class EquilibriumGrid:
    """Precomputed grid quantities for the per-step online estimate.

    Holds the exact inverse at every grid point so a refresh reduces to an
    argmin over |power - th1*i^2 - th2*x3_star^2|.
    """

    def __init__(self, pol: PolarizationParams, grid: np.ndarray | None = None):
        self.x1 = np.asarray(grid if grid is not None else default_grid(), dtype=float)
        if self.x1.size == 0:
            raise ValueError("grid must be nonempty")
        self.current = np.array([d1(x1, pol) for x1 in self.x1])
        self.power = self.x1 * self.current
        self.current_sq = self.current**2

    def argmin_abs_p(self, theta_hat: Sequence[float], x3_star: float) -> tuple[float, float]:
        th1, th2 = theta_hat
        p_abs = np.abs(self.power - th1 * self.current_sq - th2 * x3_star * x3_star)
        rev = p_abs[::-1]
        idx = p_abs.size - 1 - int(np.argmin(rev))
        return float(self.x1[idx]), float(self.current[idx])
