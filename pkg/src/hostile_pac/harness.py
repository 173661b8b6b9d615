"""Config-driven orchestration: one-shot bounds, coverage experiments, sweeps.

A single YAML file with four sections (``experiment``, ``generator``,
``prior``, ``regime``) describes a full experiment; the CLI in
:mod:`hostile_pac.cli` maps subcommands onto the ``run_*`` functions here.
Replications are seeded through spawned seed sequences keyed by replication
index, so results are identical at any worker count and any scheduling.

All regime constants entering a bound are analytic (closed forms from the
generator spec and prior); nothing is estimated from the data that the bound
is then applied to. Every output record repeats the constants and the
assumed mixing envelope (c1, c2) under which it was produced.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import partial
from pathlib import Path

import numpy as np
import yaml

from . import datagen
from .aggregation import (BoundConfig, BoundReport, SolverError, catoni_pi_gamma,
                          erm_index, evaluate_bound, optimal_gamma,
                          oracle_bound_empirical, oracle_bound_population,
                          rho_hat, solve_rbar, verify_complexity)
from .datagen import (AR1, BoundedClassification, GaussianNoise, GeneratorSpec,
                      IidLinearRegression, IsotropicGaussianX, MixingBoundSpec,
                      NoClosedFormError, StudentTNoise, UniformBoxX)
from .moments import (MixingUnbounded, MomentBound, geometric_alpha_sum,
                      kappa_quadratic, moment_iid_variance, moment_mixing_bounded,
                      moment_mixing_unbounded, moment_subgaussian, optimal_q_finite)
from .param_space import (AtomSet, DiscreteDistribution, ExplicitPrior,
                          IidSamplePrior, PriorSpec, UniformGridPrior, build_prior,
                          expectation, prior_moment_tau)
from .risk import (AbsoluteLoss, LossKind, SquaredLoss, ZeroOneLoss,
                   compute_loss_table, empirical_risk)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration (CLI exit code 1)."""


class AssumptionError(RuntimeError):
    """A required prior-mass assumption failed to certify (CLI exit code 3)."""


@dataclass(frozen=True)
class RegimeConfig:
    """Which moment route to use and the constants it needs.

    ``s2`` is a number, or ``"kappa"`` for the fourth-moment majorant, or
    ``"exact"`` for the exact integrated loss variance (i.i.d. squared-loss
    regression only). ``optimize_q`` switches the sub-Gaussian route to the
    finite-class optimized exponent, overriding ``p``.
    """

    kind: str
    s2: float | str = "kappa"
    sigma2: float | None = None
    q: float | None = None
    optimize_q: bool = False
    r: float = 3.0
    s: float = 3.0
    davydov_factor: float = 8.0
    alpha_sum: float | str = "envelope"
    moment_integral: float | str = "analytic"


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorSpec
    prior: PriorSpec
    loss: LossKind
    p: float
    delta: float
    regime: RegimeConfig
    n: int
    replications: int
    seed: int
    gamma_grid: tuple[float, ...]
    probes: int = 100
    workers: int = 1
    require_complexity: bool = False

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.probes < 0:
            raise ConfigError("probes must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if not self.p > 1:
            raise ConfigError("p must exceed 1")
        _validate_cross_fields(self)


def _validate_cross_fields(cfg: ExperimentConfig) -> None:
    kind = cfg.regime.kind
    if kind not in ("variance", "subgaussian", "mixing_bounded", "mixing_unbounded"):
        raise ConfigError(f"unknown regime kind {kind!r}")
    is_ar1 = isinstance(cfg.generator, AR1)
    if kind in ("mixing_bounded", "mixing_unbounded"):
        if not is_ar1:
            raise ConfigError("mixing regimes require the AR(1) generator")
        if abs(cfg.p - 2.0) > 1e-12:
            raise ConfigError("mixing regimes certify q = 2, so p must be 2")
    if kind == "mixing_bounded" and not isinstance(cfg.loss, ZeroOneLoss):
        raise ConfigError("mixing_bounded requires losses in [0, 1]: use the zero-one loss")
    if kind in ("variance", "subgaussian") and is_ar1:
        raise ConfigError(f"the {kind} regime requires independent rows, not AR(1)")
    if kind == "variance" and cfg.p < 2:
        raise ConfigError("the variance regime needs q <= 2, i.e. p >= 2")
    if kind == "variance" and cfg.regime.s2 in ("kappa", "exact"):
        if not (isinstance(cfg.generator, IidLinearRegression)
                and isinstance(cfg.loss, SquaredLoss)):
            raise ConfigError(
                "analytic s2 modes apply to i.i.d. squared-loss regression; "
                "supply a numeric s2 otherwise"
            )
    if kind == "subgaussian" and cfg.regime.sigma2 is None:
        raise ConfigError("the subgaussian regime needs an explicit sigma2")
    if isinstance(cfg.generator, AR1) and cfg.n < 2:
        raise ConfigError("AR(1) needs n >= 2")
    for g in cfg.gamma_grid:
        if not 0 < g < 1:
            raise ConfigError("gamma grid values must lie strictly inside (0, 1)")
    if not cfg.gamma_grid:
        raise ConfigError("gamma grid must be nonempty")


# ---------------------------------------------------------------------------
# Config file parsing
# ---------------------------------------------------------------------------

def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing key {key!r} in section {where!r}")
    return section[key]


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in section {where!r}: {sorted(unknown)}")


def _parse_noise(raw: dict) -> datagen.NoiseLaw:
    kind = _require(raw, "kind", "generator.noise")
    if kind == "gaussian":
        _check_keys(raw, {"kind", "variance"}, "generator.noise")
        return GaussianNoise(variance=float(raw.get("variance", 1.0)))
    if kind == "student_t":
        _check_keys(raw, {"kind", "dof", "scale"}, "generator.noise")
        return StudentTNoise(dof=float(_require(raw, "dof", "generator.noise")),
                             scale=float(raw.get("scale", 1.0)))
    raise ConfigError(f"unknown noise kind {kind!r}")


def _parse_x_law(raw: dict) -> datagen.XLaw:
    kind = _require(raw, "kind", "generator.x_law")
    if kind == "gaussian":
        _check_keys(raw, {"kind", "scale"}, "generator.x_law")
        return IsotropicGaussianX(scale=float(raw.get("scale", 1.0)))
    if kind == "uniform":
        _check_keys(raw, {"kind", "halfwidth"}, "generator.x_law")
        return UniformBoxX(halfwidth=float(raw.get("halfwidth", 1.0)))
    raise ConfigError(f"unknown x law kind {kind!r}")


def _parse_generator(raw: dict) -> GeneratorSpec:
    kind = _require(raw, "kind", "generator")
    if kind == "iid_regression":
        _check_keys(raw, {"kind", "theta_star", "x_law", "noise"}, "generator")
        return IidLinearRegression(
            theta_star=tuple(_require(raw, "theta_star", "generator")),
            x_law=_parse_x_law(_require(raw, "x_law", "generator")),
            noise=_parse_noise(_require(raw, "noise", "generator")),
        )
    if kind == "ar1":
        _check_keys(raw, {"kind", "a", "noise", "mixing"}, "generator")
        mixing = None
        if "mixing" in raw and raw["mixing"] is not None:
            m = raw["mixing"]
            _check_keys(m, {"c1", "c2"}, "generator.mixing")
            mixing = MixingBoundSpec(c1=float(_require(m, "c1", "generator.mixing")),
                                     c2=float(_require(m, "c2", "generator.mixing")))
        return AR1(a=float(_require(raw, "a", "generator")),
                   noise=_parse_noise(_require(raw, "noise", "generator")),
                   mixing=mixing)
    if kind == "classification":
        _check_keys(raw, {"kind", "theta_star", "x_law", "flip_prob"}, "generator")
        return BoundedClassification(
            theta_star=tuple(_require(raw, "theta_star", "generator")),
            x_law=_parse_x_law(_require(raw, "x_law", "generator")),
            flip_prob=float(raw.get("flip_prob", 0.0)),
        )
    raise ConfigError(f"unknown generator kind {kind!r}")


def _parse_prior(raw: dict) -> PriorSpec:
    kind = _require(raw, "kind", "prior")
    if kind == "uniform_grid":
        _check_keys(raw, {"kind", "bounds", "points_per_axis"}, "prior")
        bounds = tuple((float(lo), float(hi)) for lo, hi in _require(raw, "bounds", "prior"))
        ppa = _require(raw, "points_per_axis", "prior")
        return UniformGridPrior(bounds=bounds,
                                points_per_axis=ppa if isinstance(ppa, int) else tuple(ppa))
    if kind == "iid_sample":
        _check_keys(raw, {"kind", "count", "dim", "law", "scale", "bounds", "seed"}, "prior")
        bounds = raw.get("bounds")
        if bounds is not None:
            bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        return IidSamplePrior(count=int(_require(raw, "count", "prior")),
                              dim=int(_require(raw, "dim", "prior")),
                              law=raw.get("law", "gaussian"),
                              scale=float(raw.get("scale", 1.0)),
                              bounds=bounds,
                              seed=raw.get("seed"))
    if kind == "explicit":
        _check_keys(raw, {"kind", "atoms", "weights"}, "prior")
        return ExplicitPrior(atoms=np.asarray(_require(raw, "atoms", "prior"), dtype=float),
                             weights=np.asarray(_require(raw, "weights", "prior"), dtype=float))
    raise ConfigError(f"unknown prior kind {kind!r}")


def _parse_loss(raw: dict) -> LossKind:
    kind = _require(raw, "kind", "loss") if isinstance(raw, dict) else raw
    if kind == "squared":
        return SquaredLoss()
    if kind == "absolute":
        return AbsoluteLoss()
    if kind == "zero_one":
        threshold = raw.get("threshold", 0.0) if isinstance(raw, dict) else 0.0
        return ZeroOneLoss(threshold=float(threshold))
    raise ConfigError(f"unknown loss kind {kind!r}")


def _parse_regime(raw: dict) -> RegimeConfig:
    allowed = {"kind", "s2", "sigma2", "q", "optimize_q", "r", "s",
               "davydov_factor", "alpha_sum", "moment_integral"}
    _check_keys(raw, allowed, "regime")
    kind = _require(raw, "kind", "regime")
    return RegimeConfig(
        kind=kind,
        s2=raw.get("s2", "kappa"),
        sigma2=None if raw.get("sigma2") is None else float(raw["sigma2"]),
        q=None if raw.get("q") is None else float(raw["q"]),
        optimize_q=bool(raw.get("optimize_q", False)),
        r=float(raw.get("r", 3.0)),
        s=float(raw.get("s", 3.0)),
        davydov_factor=float(raw.get("davydov_factor", 8.0)),
        alpha_sum=raw.get("alpha_sum", "envelope"),
        moment_integral=raw.get("moment_integral", "analytic"),
    )


def _parse_gamma_grid(raw) -> tuple[float, ...]:
    if isinstance(raw, dict):
        _check_keys(raw, {"lo", "hi", "points"}, "experiment.gamma_grid")
        lo = float(_require(raw, "lo", "experiment.gamma_grid"))
        hi = float(_require(raw, "hi", "experiment.gamma_grid"))
        points = int(raw.get("points", 10))
        if points < 1 or not lo < hi:
            raise ConfigError("gamma grid needs lo < hi and at least one point")
        return tuple(np.linspace(lo, hi, points).tolist())
    return tuple(float(g) for g in raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build and validate an :class:`ExperimentConfig` from parsed YAML."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(raw, {"experiment", "generator", "prior", "regime"}, "<root>")
    exp = _require(raw, "experiment", "<root>")
    allowed = {"seed", "n", "replications", "p", "delta", "loss", "probes",
               "workers", "gamma_grid", "require_complexity"}
    _check_keys(exp, allowed, "experiment")
    try:
        return ExperimentConfig(
            generator=_parse_generator(_require(raw, "generator", "<root>")),
            prior=_parse_prior(_require(raw, "prior", "<root>")),
            loss=_parse_loss(_require(exp, "loss", "experiment")),
            p=float(exp.get("p", 2.0)),
            delta=float(_require(exp, "delta", "experiment")),
            regime=_parse_regime(_require(raw, "regime", "<root>")),
            n=int(_require(exp, "n", "experiment")),
            replications=int(exp.get("replications", 100)),
            seed=int(exp.get("seed", 0)),
            gamma_grid=_parse_gamma_grid(exp.get("gamma_grid", {"lo": 0.05, "hi": 0.9, "points": 10})),
            probes=int(exp.get("probes", 100)),
            workers=int(exp.get("workers", 1)),
            require_complexity=bool(exp.get("require_complexity", False)),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` strings onto a parsed config mapping."""
    out = json.loads(json.dumps(raw))  # deep copy of plain data
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, _, value = item.partition("=")
        node = out
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot descend into {dotted!r}")
        node[parts[-1]] = yaml.safe_load(value)
    return out


def load_config(path: str | Path, overrides: list[str] | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from exc
    if overrides:
        raw = apply_overrides(raw, overrides)
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# Moment-bound resolution
# ---------------------------------------------------------------------------

def resolve_moment(config: ExperimentConfig, atoms: AtomSet,
                   pi: DiscreteDistribution) -> tuple[BoundConfig, dict]:
    """Turn the regime section into a certified moment bound plus a record
    of the analytic constants it used."""
    regime = config.regime
    spec = config.generator
    n = config.n
    constants: dict = {"regime": regime.kind, "c1": None, "c2": None}
    if regime.kind in ("mixing_bounded", "mixing_unbounded"):
        envelope = datagen.mixing_spec_for(spec)
        constants["c1"] = envelope.c1
        constants["c2"] = envelope.c2

    if regime.kind == "variance":
        if regime.s2 == "kappa":
            mom = datagen.analytic_moments(spec)
            tau = prior_moment_tau(atoms, pi, 4.0)
            s2 = kappa_quadratic(mom.ey4, tau, mom.ex4)
            constants.update(s2=s2, s2_mode="kappa", tau=tau, ey4=mom.ey4, ex4=mom.ex4)
        elif regime.s2 == "exact":
            variances = datagen.squared_loss_variances(spec, atoms)
            s2 = float(pi.weights @ variances)
            constants.update(s2=s2, s2_mode="exact")
        else:
            s2 = float(regime.s2)
            constants.update(s2=s2, s2_mode="given")
        q = config.p / (config.p - 1.0)
        bound = moment_iid_variance(s2, n, q)
        return BoundConfig(p=config.p, delta=config.delta, moment=bound), constants

    if regime.kind == "subgaussian":
        sigma2 = float(regime.sigma2)
        if regime.optimize_q:
            opt = optimal_q_finite(len(atoms), config.delta)
            q = opt.q
            constants["q_clamped"] = opt.clamped
        elif regime.q is not None:
            q = regime.q
        else:
            q = config.p / (config.p - 1.0)
        constants.update(sigma2=sigma2, q=q)
        bound = moment_subgaussian(sigma2, n, q)
        return BoundConfig.from_q(q, config.delta, bound), constants

    if regime.kind == "mixing_bounded":
        if regime.alpha_sum == "envelope":
            alpha_sum = geometric_alpha_sum(constants["c1"], constants["c2"], 1.0)
        else:
            alpha_sum = float(regime.alpha_sum)
        constants["alpha_sum"] = alpha_sum
        bound = moment_mixing_bounded(alpha_sum, n)
        return BoundConfig(p=2.0, delta=config.delta, moment=bound), constants

    # mixing_unbounded
    if regime.alpha_sum == "envelope":
        alpha_frac_sum = geometric_alpha_sum(constants["c1"], constants["c2"], regime.r)
    else:
        alpha_frac_sum = float(regime.alpha_sum)
    if regime.moment_integral == "analytic":
        if abs(regime.s - 3.0) > 1e-12 or not isinstance(config.loss, SquaredLoss):
            raise ConfigError(
                "the analytic moment integral is implemented for the squared loss "
                "at s = 3; supply moment_integral explicitly otherwise"
            )
        third = datagen.squared_loss_third_moments(spec, atoms)
        moment_integral = float(pi.weights @ third ** (2.0 / 3.0))
    else:
        moment_integral = float(regime.moment_integral)
    constants.update(r=regime.r, s=regime.s, alpha_frac_sum=alpha_frac_sum,
                     moment_integral=moment_integral,
                     davydov_factor=regime.davydov_factor)
    unbounded = MixingUnbounded(r=regime.r, s=regime.s,
                                moment_integral=moment_integral,
                                alpha_frac_sum=alpha_frac_sum,
                                davydov_factor=regime.davydov_factor)
    bound = moment_mixing_unbounded(unbounded, n)
    return BoundConfig(p=2.0, delta=config.delta, moment=bound), constants


# ---------------------------------------------------------------------------
# Single-dataset bound evaluation
# ---------------------------------------------------------------------------

def _data_seed(config: ExperimentConfig, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([config.seed, 0, index])


def _probe_seed(config_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([config_seed, 1, index])


def _base_record(config: ExperimentConfig, cfg: BoundConfig, constants: dict) -> dict:
    rec = {"n": config.n, "p": cfg.p, "q": cfg.q, "delta": cfg.delta,
           "moment_bound": cfg.moment.value, "seed": config.seed}
    rec.update(constants)
    return rec


@dataclass
class BoundRunResult:
    reports: dict[str, BoundReport]
    records: list[dict]
    summary: dict


def run_bound(config: ExperimentConfig) -> BoundRunResult:
    """Generate one dataset and certify the four canonical distributions.

    Reports cover the optimal aggregation weights, the sublevel restriction
    of the prior at its optimized width (when the prior-mass exponent
    certifies), the empirical-risk minimizer point mass, and the prior
    itself. The optimal weights always achieve the smallest upper
    certificate of the four.
    """
    atoms, pi = build_prior(config.prior, config.seed)
    data = datagen.generate(config.generator, config.n, _data_seed(config, 0))
    rn = empirical_risk(compute_loss_table(data, atoms, config.loss))
    cfg, constants = resolve_moment(config, atoms, pi)

    rbar = solve_rbar(rn, pi, cfg.q, cfg.moment.value, cfg.delta)
    rho = rho_hat(rn, pi, cfg.p, rbar)
    erm = erm_index(rn)
    complexity = verify_complexity(rn, pi, np.asarray(config.gamma_grid))
    if config.require_complexity and not complexity.satisfied:
        raise AssumptionError(
            "prior-mass exponent failed to certify on the configured gamma grid"
        )

    reports: dict[str, BoundReport] = {}
    oracle = None
    if complexity.satisfied:
        oracle = oracle_bound_empirical(float(rn[erm]), cfg.moment.value, cfg.delta,
                                        cfg.q, complexity.d)
    base = evaluate_bound(rho, pi, rn, cfg)
    reports["rho_hat"] = dataclasses.replace(base, rbar=rbar, oracle_empirical=oracle)
    reports["prior"] = evaluate_bound(pi, pi, rn, cfg)
    reports["erm"] = evaluate_bound(DiscreteDistribution.dirac(len(pi), erm), pi, rn, cfg)
    gamma_star = None
    if complexity.satisfied:
        gamma_star = optimal_gamma(complexity.d, cfg.p, cfg.moment.value, cfg.delta)
        reports["pi_gamma"] = evaluate_bound(catoni_pi_gamma(rn, pi, gamma_star), pi, rn, cfg)

    records = []
    for name, report in reports.items():
        rec = {"type": "bound", "rho": name}
        rec.update(report.to_record())
        rec.update(_base_record(config, cfg, constants))
        records.append(rec)
    summary = {
        "type": "summary", "command": "bound",
        "erm_index": erm, "rbar": rbar,
        "complexity_d": complexity.d, "complexity_satisfied": complexity.satisfied,
        "gamma_star": gamma_star,
        "timestamp": _timestamp(),
    }
    summary.update(_base_record(config, cfg, constants))
    return BoundRunResult(reports=reports, records=records, summary=summary)


def run_aggregate(config: ExperimentConfig) -> tuple[list[dict], dict]:
    """Optimal aggregation weights for one dataset, one record per atom."""
    atoms, pi = build_prior(config.prior, config.seed)
    data = datagen.generate(config.generator, config.n, _data_seed(config, 0))
    rn = empirical_risk(compute_loss_table(data, atoms, config.loss))
    cfg, constants = resolve_moment(config, atoms, pi)
    rbar = solve_rbar(rn, pi, cfg.q, cfg.moment.value, cfg.delta)
    rho = rho_hat(rn, pi, cfg.p, rbar)
    records = []
    for j in range(len(atoms)):
        records.append({
            "type": "atom", "index": j,
            "coords": [float(c) for c in atoms.atom(j)],
            "prior_weight": float(pi.weights[j]),
            "rho_hat_weight": float(rho.weights[j]),
            "rn": float(rn[j]),
        })
    summary = {"type": "summary", "command": "aggregate",
               "rbar": rbar, "erm_index": erm_index(rn),
               "rn_integral_rho_hat": expectation(rho, rn),
               "timestamp": _timestamp()}
    summary.update(_base_record(config, cfg, constants))
    return records, summary


# ---------------------------------------------------------------------------
# Coverage experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _CoverageTask:
    """Everything a replication worker needs, picklable and immutable."""

    generator: GeneratorSpec
    loss: LossKind
    atoms: AtomSet
    pi: DiscreteDistribution
    true_values: np.ndarray
    p: float
    q: float
    delta: float
    moment_value: float
    n: int
    seed: int
    probes: int
    gamma_grid: tuple[float, ...]


def _power_divergence_plus_one_rows(rows: np.ndarray, pi_weights: np.ndarray,
                                    p: float) -> np.ndarray:
    """D + 1 for each distribution row against pi, +inf without domination."""
    support = pi_weights > 0
    out = np.empty(rows.shape[0])
    off_support = rows[:, ~support].sum(axis=1) > 0
    vals = np.sum(rows[:, support] ** p * pi_weights[support] ** (1.0 - p), axis=1)
    out[:] = vals
    out[off_support] = np.inf
    return out


def _replication_record(task: _CoverageTask, index: int) -> dict:
    data = datagen.generate(task.generator, task.n,
                            np.random.SeedSequence([task.seed, 0, index]))
    rn = empirical_risk(compute_loss_table(data, task.atoms, task.loss))
    budget = task.moment_value / task.delta
    margin_prior = budget ** (1.0 / task.q)

    rbar = solve_rbar(rn, task.pi, task.q, task.moment_value, task.delta)
    rho = rho_hat(rn, task.pi, task.p, rbar)
    true_values = task.true_values
    rho_true = expectation(rho, true_values)
    rho_emp = expectation(rho, rn)
    div_rho = _power_divergence_plus_one_rows(rho.weights[None, :], task.pi.weights, task.p)[0]
    margin_rho = margin_prior * div_rho ** (1.0 / task.p)
    dev_rho = abs(rho_true - rho_emp)
    hit_rho = dev_rho <= margin_rho

    hit_probes = True
    max_probe_violation = 0.0
    if task.probes > 0:
        probe_rng = np.random.default_rng(_probe_seed(task.seed, index))
        rows = probe_rng.dirichlet(np.ones(len(task.pi)), size=task.probes)
        div_rows = _power_divergence_plus_one_rows(rows, task.pi.weights, task.p)
        margins = margin_prior * div_rows ** (1.0 / task.p)
        devs = np.abs(rows @ (true_values - rn))
        hit_probes = bool(np.all(devs <= margins))
        with np.errstate(invalid="ignore"):
            max_probe_violation = float(np.max(np.where(np.isinf(margins), 0.0, devs - margins)))

    erm = erm_index(rn)
    margin_erm = margin_prior * float(
        _power_divergence_plus_one_rows(
            np.eye(len(task.pi))[erm][None, :], task.pi.weights, task.p)[0]
    ) ** (1.0 / task.p)
    hit_erm = true_values[erm] <= rn[erm] + margin_erm

    complexity = verify_complexity(rn, task.pi, np.asarray(task.gamma_grid))
    proof_point = (rbar - float(rn.min())) / 2.0
    certified = bool(
        complexity.satisfied
        and complexity.gamma_interval[0] <= proof_point <= complexity.gamma_interval[1]
    )
    hit_oracle_level = rho_true <= rbar
    oracle_dim_bound = None
    hit_oracle = hit_oracle_level
    if certified:
        oracle_dim_bound = oracle_bound_empirical(float(rn.min()), task.moment_value,
                                                  task.delta, task.q, complexity.d)
        hit_oracle = hit_oracle_level and rho_true <= oracle_dim_bound

    return {
        "type": "replication",
        "index": index,
        "rn_min": float(rn.min()),
        "erm_index": erm,
        "rbar": rbar,
        "rho_hat_rn_integral": rho_emp,
        "rho_hat_true_integral": rho_true,
        "divergence_plus_one": float(div_rho),
        "margin_rho_hat": float(margin_rho),
        "margin_prior": float(margin_prior),
        "margin_erm": float(margin_erm),
        "slack_rho_hat": float(margin_rho - dev_rho),
        "hit_rho_hat": bool(hit_rho),
        "hit_probes": hit_probes,
        "hit_two_sided": bool(hit_rho and hit_probes),
        "max_probe_violation": max_probe_violation,
        "hit_erm": bool(hit_erm),
        "true_risk_erm": float(true_values[erm]),
        "complexity_d": complexity.d,
        "complexity_certified": certified,
        "oracle_dim_bound": oracle_dim_bound,
        "hit_oracle_level": bool(hit_oracle_level),
        "hit_oracle": bool(hit_oracle),
    }


@dataclass
class CoverageReport:
    """Aggregated replication outcomes for one configuration."""

    replications: int
    coverage_two_sided: float
    coverage_oracle: float
    coverage_erm: float
    mean_slack: float
    records: list[dict]
    summary: dict


def run_coverage(config: ExperimentConfig) -> CoverageReport:
    """Monte Carlo coverage of the certificates on a synthetic generator.

    Per replication the two-sided certificate is tested jointly for the
    optimal weights and all random probe distributions (the guarantee is
    uniform over distributions, so one replication is a hit only when every
    tested distribution is inside its margin). True risks come from the
    generator's closed form, so hit/miss decisions carry no oracle noise.
    """
    if config.replications < 50:
        raise ConfigError("coverage runs need at least 50 replications")
    atoms, pi = build_prior(config.prior, config.seed)
    try:
        true_values = datagen.true_risk_closed_form(config.generator, atoms, config.loss)
    except NoClosedFormError as exc:
        raise ConfigError(f"coverage requires a closed-form true risk: {exc}") from exc
    cfg, constants = resolve_moment(config, atoms, pi)
    task = _CoverageTask(
        generator=config.generator, loss=config.loss, atoms=atoms, pi=pi,
        true_values=true_values, p=cfg.p, q=cfg.q, delta=cfg.delta,
        moment_value=cfg.moment.value, n=config.n, seed=config.seed,
        probes=config.probes, gamma_grid=config.gamma_grid,
    )
    indices = range(config.replications)
    if config.workers > 1:
        chunk = max(1, config.replications // (config.workers * 4))
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(partial(_replication_record, task), indices,
                                    chunksize=chunk))
    else:
        records = [_replication_record(task, i) for i in indices]

    base = _base_record(config, cfg, constants)
    for rec in records:
        rec.update(base)

    hits = np.array([r["hit_two_sided"] for r in records])
    oracle_hits = np.array([r["hit_oracle"] for r in records])
    erm_hits = np.array([r["hit_erm"] for r in records])
    slack = np.array([r["slack_rho_hat"] for r in records])
    finite_slack = slack[np.isfinite(slack)]

    # Population-side quantities are deterministic for the configuration.
    pop_complexity = verify_complexity(true_values, pi, np.asarray(config.gamma_grid))
    rbar_pop = solve_rbar(true_values, pi, cfg.q,
                          cfg.moment.value * 2.0 ** cfg.q, cfg.delta)
    oracle_pop = None
    if pop_complexity.satisfied:
        oracle_pop = oracle_bound_population(float(true_values.min()), cfg.moment.value,
                                             cfg.delta, cfg.q, pop_complexity.d)

    summary = {
        "type": "summary", "command": "coverage",
        "replications": config.replications,
        "coverage_two_sided": float(hits.mean()),
        "coverage_oracle": float(oracle_hits.mean()),
        "coverage_erm": float(erm_hits.mean()),
        "mean_slack": float(finite_slack.mean()) if finite_slack.size else math.inf,
        "certified_fraction": float(np.mean([r["complexity_certified"] for r in records])),
        "population_complexity_d": pop_complexity.d,
        "population_complexity_satisfied": pop_complexity.satisfied,
        "rbar_population": rbar_pop,
        "oracle_population_bound": oracle_pop,
        "probes": config.probes,
        "timestamp": _timestamp(),
    }
    summary.update(base)
    return CoverageReport(
        replications=config.replications,
        coverage_two_sided=float(hits.mean()),
        coverage_oracle=float(oracle_hits.mean()),
        coverage_erm=float(erm_hits.mean()),
        mean_slack=float(finite_slack.mean()) if finite_slack.size else math.inf,
        records=records,
        summary=summary,
    )


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_AXES = ("n", "delta", "p")


def run_sweep(config: ExperimentConfig, axis: str, values: list) -> list[dict]:
    """Coverage summaries along one axis; one row per value."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    rows = []
    for value in values:
        if axis == "n":
            if int(value) != value or value < 1:
                raise ConfigError("n values must be positive integers")
            cfg_v = dataclasses.replace(config, n=int(value))
        elif axis == "delta":
            if not 0 < value < 1:
                raise ConfigError("delta values must lie in (0, 1)")
            cfg_v = dataclasses.replace(config, delta=float(value))
        else:
            if value <= 1:
                raise ConfigError("p values must exceed 1")
            cfg_v = dataclasses.replace(config, p=float(value))
        report = run_coverage(cfg_v)
        margins_prior = [r["margin_prior"] for r in report.records]
        margins_rho = [r["margin_rho_hat"] for r in report.records]
        rows.append({
            "axis": axis,
            "value": value,
            "n": cfg_v.n,
            "delta": cfg_v.delta,
            "p": cfg_v.p,
            "coverage_two_sided": report.coverage_two_sided,
            "coverage_oracle": report.coverage_oracle,
            "median_margin": float(np.median(margins_prior)),
            "median_margin_rho_hat": float(np.median(margins_rho)),
            "mean_slack": report.mean_slack,
            "moment_bound": report.summary["moment_bound"],
        })
    return rows


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.log(np.asarray(xs, dtype=float))
    ys = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(xs, ys, 1)[0])


def write_sweep_csv(rows: list[dict], path: str | Path) -> None:
    """CSV with a header row, one sweep row per line."""
    if not rows:
        raise ValueError("no rows to write")
    fields = list(rows[0].keys())
    lines = [",".join(fields)]
    for row in rows:
        lines.append(",".join(_csv_cell(row[f]) for f in fields))
    Path(path).write_text("\n".join(lines) + "\n")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# Record output
# ---------------------------------------------------------------------------

def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def dump_record(record: dict) -> str:
    """Canonical one-line JSON; infinities use the Python JSON dialect."""
    return json.dumps(record, sort_keys=True)


def write_records(records: list[dict], path: str | Path) -> None:
    Path(path).write_text("".join(dump_record(r) + "\n" for r in records))
