"""Csiszar f-divergences between discrete distributions on a shared atom set.

Supported generators: the power family f(x) = x**p - 1 for p > 1, KL
(f = x log x, natural log), and chi-square (f = x**2 - 1, identical to the
power family at p = 2). Non-absolute-continuity returns ``inf`` rather than
raising: a bound evaluated at an infinite divergence is vacuously true and
downstream code propagates the infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .param_space import DiscreteDistribution


@dataclass(frozen=True)
class PhiP:
    """Power generator f(x) = x**p - 1, requires p > 1."""

    p: float

    def __post_init__(self) -> None:
        if not self.p > 1:
            raise ValueError("PhiP requires p > 1")


@dataclass(frozen=True)
class KL:
    """Kullback-Leibler generator f(x) = x log x."""


@dataclass(frozen=True)
class ChiSquare:
    """Chi-square generator f(x) = x**2 - 1."""


DivergenceKind = PhiP | KL | ChiSquare


def f_divergence(rho: DiscreteDistribution, pi: DiscreteDistribution,
                 kind: DivergenceKind) -> float:
    """D_f(rho, pi) = sum_j pi_j f(rho_j / pi_j), or +inf without domination.

    Atoms where both weights vanish contribute nothing; for KL the 0 log 0
    convention is 0.
    """
    if len(rho) != len(pi):
        raise ValueError("distributions live on different atom sets")
    r = rho.weights
    w = pi.weights
    null = w == 0.0
    if np.any(r[null] > 0.0):
        return math.inf
    r = r[~null]
    w = w[~null]
    if isinstance(kind, KL):
        pos = r > 0.0
        return float(np.sum(r[pos] * np.log(r[pos] / w[pos])))
    p = 2.0 if isinstance(kind, ChiSquare) else kind.p
    return float(np.sum(w * ((r / w) ** p - 1.0)))


def divergence_plus_one_uniform(rho: DiscreteDistribution, size: int, p: float) -> float:
    """Closed form K**(p-1) * sum_j rho_j**p for a uniform reference measure.

    Equals ``f_divergence(rho, uniform, PhiP(p)) + 1`` and serves as its
    independent check.
    """
    if p <= 1:
        raise ValueError("requires p > 1")
    if len(rho) != size:
        raise ValueError("distribution size does not match the uniform reference")
    return float(size ** (p - 1.0) * np.sum(rho.weights**p))
