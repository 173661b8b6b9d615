"""Risk-certificate evaluation and optimal aggregation over a discrete prior.

The two-sided certificate for an aggregation distribution rho is

    | integral(R d rho) - integral(r_n d rho) |
        <= (M / delta)**(1/q) * (D(rho, pi) + 1)**(1/p)

with conjugate exponents 1/p + 1/q = 1 and D the power-family f-divergence.
The distribution minimizing the observable side has density proportional to
[rbar - r_n]_+ ** (1/(p-1)) against the prior, where rbar is the smallest
level at which the prior integral of [rbar - r_n]_+ ** q spends the whole
moment budget M/delta; the minimized objective equals rbar itself.

An infinite divergence is propagated, not raised: the certificate is then
vacuous but valid, and sweep outputs stay rectangular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .divergence import PhiP, f_divergence
from .moments import MomentBound
from .param_space import DiscreteDistribution, expectation

CONJUGACY_TOL = 1e-12
MOMENT_Q_TOL = 1e-9
RBAR_RESIDUAL_TOL = 1e-10
RBAR_MAX_ITER = 200
COMPLEXITY_CAP = 64.0
COMPLEXITY_RESOLUTION = 1e-3


class SolverError(RuntimeError):
    """Root solve failed to reach its residual tolerance."""


@dataclass(frozen=True)
class BoundConfig:
    """Exponent pair, confidence level and certified moment bound.

    ``q`` defaults to the conjugate p/(p-1); an explicitly supplied q must
    agree with it, and must match the exponent stored in the moment bound.
    """

    p: float
    delta: float
    moment: MomentBound
    q: float | None = None

    def __post_init__(self) -> None:
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        q = self.p / (self.p - 1.0) if self.q is None else self.q
        object.__setattr__(self, "q", float(q))
        if abs(1.0 / self.p + 1.0 / self.q - 1.0) > CONJUGACY_TOL:
            raise ValueError("p and q must be conjugate: 1/p + 1/q = 1")
        if abs(self.moment.q - self.q) > MOMENT_Q_TOL:
            raise ValueError(
                f"moment bound was certified at q={self.moment.q}, config uses q={self.q}"
            )

    @classmethod
    def from_q(cls, q: float, delta: float, moment: MomentBound) -> "BoundConfig":
        if not q > 1:
            raise ValueError("q must exceed 1")
        return cls(p=q / (q - 1.0), delta=delta, moment=moment)

    @property
    def budget(self) -> float:
        """The spent moment budget M / delta."""
        return self.moment.value / self.delta


@dataclass(frozen=True)
class BoundReport:
    """Evaluated certificate pieces for one aggregation distribution."""

    rn_integral: float
    margin: float
    upper: float
    lower: float
    divergence_plus_one: float
    rbar: float | None = None
    oracle_empirical: float | None = None
    oracle_population: float | None = None

    def to_record(self) -> dict:
        """Flat key/value form for line-oriented output."""
        return {
            "rn_integral": self.rn_integral,
            "margin": self.margin,
            "upper": self.upper,
            "lower": self.lower,
            "divergence_plus_one": self.divergence_plus_one,
            "rbar": self.rbar,
            "oracle_empirical": self.oracle_empirical,
            "oracle_population": self.oracle_population,
        }


@dataclass(frozen=True)
class ComplexityEstimate:
    """Certified sublevel-mass exponent over a gamma interval.

    ``d`` is the smallest exponent (at resolution 1e-3) such that the prior
    mass of every {values <= min + gamma} sublevel on the grid is at least
    gamma**d; any larger exponent is then certified as well since the grid
    lies in (0, 1). Degenerate inputs whose sublevel mass is already 1
    everywhere certify every exponent and report the cap. ``satisfied`` is
    False when no exponent up to the cap works.
    """

    d: float
    gamma_interval: tuple[float, float]
    satisfied: bool


def pac_margin(cfg: BoundConfig, div_plus_one: float) -> float:
    """(M / delta)**(1/q) * (D + 1)**(1/p); infinity propagates."""
    if math.isinf(div_plus_one):
        return math.inf
    if div_plus_one < 1.0 - CONJUGACY_TOL:
        raise ValueError("divergence-plus-one must be at least 1")
    return cfg.budget ** (1.0 / cfg.q) * max(div_plus_one, 1.0) ** (1.0 / cfg.p)


def evaluate_bound(rho: DiscreteDistribution, pi: DiscreteDistribution,
                   rn: np.ndarray, cfg: BoundConfig) -> BoundReport:
    """Two-sided certificate for a fixed aggregation distribution."""
    rn = np.asarray(rn, dtype=float)
    if len(rho) != len(pi) or rn.shape[0] != len(pi):
        raise ValueError("rho, pi and the risk vector must share one atom set")
    div_plus_one = f_divergence(rho, pi, PhiP(cfg.p)) + 1.0
    margin = pac_margin(cfg, div_plus_one)
    rn_integral = expectation(rho, rn)
    return BoundReport(
        rn_integral=rn_integral,
        margin=margin,
        upper=rn_integral + margin,
        lower=rn_integral - margin,
        divergence_plus_one=div_plus_one,
    )


def solve_rbar(rn: np.ndarray, pi: DiscreteDistribution, q: float,
               moment_value: float, delta: float) -> float:
    """Smallest level u with sum_j pi_j [u - rn_j]_+ ** q = M / delta.

    The spend function is continuous and strictly increasing above the
    prior-supported minimum of rn, and the root is bracketed analytically:
    at min + budget**(1/q) the spend is at most the budget, and at
    min + (budget / w*)**(1/q) (w* the prior mass on the minimizing atoms)
    it is at least the budget. Bisection is used because the spend is only
    piecewise smooth at atom values.
    """
    rn = np.asarray(rn, dtype=float)
    if rn.shape[0] != len(pi):
        raise ValueError("risk vector and prior sizes differ")
    if moment_value <= 0:
        raise ValueError("moment bound must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not q > 1:
        raise ValueError("q must exceed 1")
    support = pi.weights > 0
    if not np.any(np.isfinite(rn[support])):
        raise ValueError("all prior mass sits on atoms with non-finite risk")
    target = moment_value / delta

    weights = pi.weights[support]
    risks = rn[support]
    floor = float(risks.min())
    floor_mass = float(weights[risks == floor].sum())

    def spend(u: float) -> float:
        return float(weights @ np.maximum(u - risks, 0.0) ** q)

    lo = floor + target ** (1.0 / q)
    hi = floor + (target / floor_mass) ** (1.0 / q)
    for _ in range(RBAR_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if spend(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, abs(hi)):
            break
    root = 0.5 * (lo + hi)
    if abs(spend(root) - target) > RBAR_RESIDUAL_TOL * target:
        raise SolverError(
            f"level solve did not reach residual tolerance: residual "
            f"{abs(spend(root) - target):.3e} vs target {target:.3e}"
        )
    return root


def rho_hat(rn: np.ndarray, pi: DiscreteDistribution, p: float,
            rbar: float) -> DiscreteDistribution:
    """Optimal weights, proportional to pi_j * [rbar - rn_j]_+ ** (1/(p-1)).

    Atoms at or above the level get exactly zero mass, so the support is
    contained in {rn < rbar}.
    """
    rn = np.asarray(rn, dtype=float)
    if rn.shape[0] != len(pi):
        raise ValueError("risk vector and prior sizes differ")
    raw = pi.weights * np.maximum(rbar - rn, 0.0) ** (1.0 / (p - 1.0))
    total = raw.sum()
    if not total > 0:
        raise ValueError("degenerate level: no prior mass below rbar")
    return DiscreteDistribution(raw / total)


def minimized_objective_identity(rn: np.ndarray, pi: DiscreteDistribution,
                                 cfg: BoundConfig) -> tuple[float, DiscreteDistribution, float]:
    """Solve for the level, build the optimal weights, and evaluate them.

    Returns ``(rbar, rho, objective)`` where the objective is the upper
    certificate at rho; it coincides with rbar up to solver precision.
    """
    rbar = solve_rbar(rn, pi, cfg.q, cfg.moment.value, cfg.delta)
    rho = rho_hat(rn, pi, cfg.p, rbar)
    objective = evaluate_bound(rho, pi, rn, cfg).upper
    return rbar, rho, objective


def catoni_pi_gamma(rn: np.ndarray, pi: DiscreteDistribution,
                    gamma: float) -> DiscreteDistribution:
    """Prior restricted to the gamma-sublevel of rn, renormalized."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    rn = np.asarray(rn, dtype=float)
    if rn.shape[0] != len(pi):
        raise ValueError("risk vector and prior sizes differ")
    keep = rn <= rn.min() + gamma
    raw = pi.weights * keep
    total = raw.sum()
    if not total > 0:
        raise ValueError("sublevel set carries no prior mass")
    return DiscreteDistribution(raw / total)


def optimal_gamma(d: float, p: float, moment_value: float, delta: float) -> float:
    """Width minimizing the sublevel-restriction bound.

    gamma = (d (1 - 1/p) M / delta) ** (1 / (1 + d (1 - 1/p))).
    """
    if d <= 0 or p <= 1 or moment_value <= 0 or not 0 < delta < 1:
        raise ValueError("need d > 0, p > 1, M > 0 and delta in (0, 1)")
    exponent_weight = d * (1.0 - 1.0 / p)
    return (exponent_weight * moment_value / delta) ** (1.0 / (1.0 + exponent_weight))


def erm_index(rn: np.ndarray) -> int:
    """Index of the smallest empirical risk; ties go to the smallest index."""
    rn = np.asarray(rn, dtype=float)
    if rn.size == 0:
        raise ValueError("empty risk vector")
    return int(np.argmin(rn))


def verify_complexity(values: np.ndarray, pi: DiscreteDistribution,
                      gamma_grid: np.ndarray,
                      cap: float = COMPLEXITY_CAP,
                      resolution: float = COMPLEXITY_RESOLUTION) -> ComplexityEstimate:
    """Certify a sublevel-mass exponent d on a gamma grid inside (0, 1).

    For each grid point the prior mass of {values <= min + gamma} must be at
    least gamma**d. The certified d is the feasibility threshold rounded up
    to ``resolution`` (validity is monotone in d on (0, 1) grids); when the
    threshold exceeds ``cap`` the estimate is meaningless for a discrete
    prior and the check reports unsatisfied.
    """
    grid = np.sort(np.asarray(gamma_grid, dtype=float).ravel())
    if grid.size == 0:
        raise ValueError("gamma grid must be nonempty")
    if np.any(grid <= 0.0) or np.any(grid >= 1.0):
        raise ValueError("gamma grid must lie strictly inside (0, 1)")
    values = np.asarray(values, dtype=float)
    if values.shape[0] != len(pi):
        raise ValueError("value vector and prior sizes differ")
    interval = (float(grid[0]), float(grid[-1]))
    floor = values.min()
    masses = np.array([float(pi.weights[values <= floor + g].sum()) for g in grid])
    if np.any(masses <= 0.0):
        return ComplexityEstimate(cap, interval, False)
    binding = masses < 1.0
    if not np.any(binding):
        # Full mass at every grid point: every exponent works.
        return ComplexityEstimate(cap, interval, True)
    threshold = float(np.max(np.log(masses[binding]) / np.log(grid[binding])))
    d = max(resolution, math.ceil(threshold / resolution) * resolution)
    while d <= cap and not np.all(masses >= grid**d):
        d += resolution
    if d > cap:
        return ComplexityEstimate(cap, interval, False)
    return ComplexityEstimate(d, interval, True)


def oracle_bound_empirical(rn_min: float, moment_value: float, delta: float,
                           q: float, d: float) -> float:
    """min r_n + 2 * (M / delta) ** (1 / (q + d))."""
    if moment_value <= 0 or not 0 < delta < 1 or q <= 1 or d < 0:
        raise ValueError("invalid oracle-bound inputs")
    return rn_min + 2.0 * (moment_value / delta) ** (1.0 / (q + d))


def oracle_bound_population(r_min: float, moment_value: float, delta: float,
                            q: float, d: float) -> float:
    """min R + 2**(q/(q+d)) * (M / delta) ** (1 / (q + d))."""
    if moment_value <= 0 or not 0 < delta < 1 or q <= 1 or d < 0:
        raise ValueError("invalid oracle-bound inputs")
    return r_min + 2.0 ** (q / (q + d)) * (moment_value / delta) ** (1.0 / (q + d))
