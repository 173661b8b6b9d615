"""Losses, datasets, loss tables and empirical/true risk for linear predictors.

The only built-in predictor family is linear, f_theta(x) = <theta, x>; the
loss-table routine is the single extension point for anything else. Row
order of a dataset is significant (dependence structure lives in the order).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .param_space import AtomSet


@dataclass(frozen=True)
class SquaredLoss:
    """(y - prediction)**2."""


@dataclass(frozen=True)
class AbsoluteLoss:
    """|y - prediction|."""


@dataclass(frozen=True)
class ZeroOneLoss:
    """Sign-classification error.

    Predicted label is +1 when the linear score is >= threshold, else -1;
    the true label is the sign of y (sign(0) = +1). Loss is 1 on mismatch.
    """

    threshold: float = 0.0


LossKind = SquaredLoss | AbsoluteLoss | ZeroOneLoss


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered observations (x_i, y_i), x stored as an (n, k) array."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise ValueError("x and y row counts differ")
        if x.shape[0] == 0:
            raise ValueError("dataset must be nonempty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        self.x.setflags(write=False)
        self.y.setflags(write=False)

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True, eq=False)
class LossTable:
    """Per-observation, per-atom losses: losses[i, j] = loss_i(theta_j)."""

    losses: np.ndarray

    def __post_init__(self) -> None:
        losses = np.atleast_2d(np.asarray(self.losses, dtype=float))
        if losses.size == 0:
            raise ValueError("loss table must be nonempty")
        if not np.all(np.isfinite(losses)):
            raise ValueError("loss entries must be finite")
        if np.any(losses < 0):
            raise ValueError("loss entries must be nonnegative")
        object.__setattr__(self, "losses", losses)
        self.losses.setflags(write=False)

    @property
    def n(self) -> int:
        return self.losses.shape[0]

    @property
    def num_atoms(self) -> int:
        return self.losses.shape[1]


def compute_loss_table(data: Dataset, atoms: AtomSet, loss: LossKind) -> LossTable:
    """Evaluate the loss of every atom's linear predictor on every observation."""
    if data.dim != atoms.dim:
        raise ValueError(f"atom dimension {atoms.dim} does not match x dimension {data.dim}")
    preds = data.x @ atoms.coords.T
    y = data.y[:, None]
    if isinstance(loss, SquaredLoss):
        table = (y - preds) ** 2
    elif isinstance(loss, AbsoluteLoss):
        table = np.abs(y - preds)
    elif isinstance(loss, ZeroOneLoss):
        predicted_pos = preds >= loss.threshold
        actual_pos = y >= 0.0
        table = (predicted_pos != actual_pos).astype(float)
    else:
        raise TypeError(f"unknown loss kind: {type(loss).__name__}")
    return LossTable(table)


def empirical_risk(table: LossTable) -> np.ndarray:
    """Column means of the loss table: average loss of each atom."""
    return table.losses.mean(axis=0)


@dataclass(frozen=True, eq=False)
class TrueRisk:
    """Expected risk per atom; ``stderr`` is None when the value is exact."""

    values: np.ndarray
    stderr: np.ndarray | None = None

    @property
    def exact(self) -> bool:
        return self.stderr is None


def true_risk(gen, atoms: AtomSet, loss: LossKind,
              mc_draws: int | None = None, seed: int | None = None) -> TrueRisk:
    """Expected per-observation risk of each atom under a generator.

    Uses the generator's closed form when one exists for the requested loss;
    otherwise falls back to Monte Carlo with ``mc_draws`` fresh stationary
    draws (seeded independently of any training data) and reports the
    standard error of each estimate.
    """
    from . import datagen

    try:
        values = datagen.true_risk_closed_form(gen, atoms, loss)
        return TrueRisk(values)
    except datagen.NoClosedFormError:
        if mc_draws is None:
            raise ValueError(
                "no closed-form risk for this generator/loss; pass mc_draws to enable "
                "the Monte Carlo fallback"
            ) from None
    values, stderr = datagen.true_risk_mc(gen, atoms, loss, mc_draws, seed)
    return TrueRisk(values, stderr)


def save_dataset(data: Dataset, path: str | Path) -> None:
    """Write one observation per line as ``y,x1,...,xk`` (row order preserved)."""
    rows = np.column_stack([data.y, data.x])
    np.savetxt(path, rows, delimiter=",", fmt="%.17g")


def load_dataset(path: str | Path) -> Dataset:
    """Read the delimited format written by :func:`save_dataset`."""
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    if rows.shape[1] < 2:
        raise ValueError("each line needs a y value followed by at least one x coordinate")
    return Dataset(x=rows[:, 1:], y=rows[:, 0])
