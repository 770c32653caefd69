"""Experiment harness: config handling, sweep runners, CSV emission.

Config files are flat ``key = value`` text with ``#`` comments; keys
mirror the usual symbols (alpha, delta, lambda, zeta, K, s_bh, N, Q,
beta, V, gamma, P, sigma2, radius, trials, seed) plus comma-separated
grids (tau_grid, q_grid, lambda_grid).  CLI flags override file values;
defaults are the standard evaluation settings.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .catalog import CatalogConfig, VrConfig, build_popularity
from .coverage import hit_probability, make_constants
from .economics import EXCLUDED, EconomicConfig
from .equilibrium import (
    EquilibriumOutcome,
    GameInstance,
    nups_solve,
    participation_thresholds,
    ups_solve,
    verify_equilibrium,
    waterfill_solve,
)
from .ppp_sim import SimConfig, simulate_hit_probability

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "make_instance",
    "run_verify_coverage",
    "run_sweep_gamma",
    "run_sweep_storage",
    "run_per_vr",
    "run_solve",
    "format_rows",
    "COVERAGE_HEADER",
    "SWEEP_GAMMA_HEADER",
    "SWEEP_STORAGE_HEADER",
    "PER_VR_HEADER",
    "OUTCOME_HEADER",
]


class ConfigError(ValueError):
    """Invalid configuration file or option value."""


_DEFAULT_TAU_GRID = tuple(round(0.1 * i, 1) for i in range(1, 11))


@dataclass(frozen=True)
class ExperimentConfig:
    """One scenario's full parameter set."""

    alpha: float = 4.0
    delta: float = 0.01
    sbs_intensity: float = 10.0  # lambda
    mu_intensity: float = 50.0  # zeta
    requests_per_mu: float = 10.0  # K
    s_bh: float = 1.0
    s_ld: float | None = None  # defaults to s_bh
    n_files: int = 500  # N
    storage: int = 500  # Q
    beta: float = 0.8
    n_vrs: int = 15  # V
    gamma: float = 0.5
    tx_power: float = 2.0  # P
    noise_power: float = 1e-10  # sigma^2
    window_radius: float = 5.0  # km
    trials: int = 2000
    seed: int = 1
    tau_grid: tuple = _DEFAULT_TAU_GRID
    q_grid: tuple = (10, 50, 100, 500)
    lambda_grid: tuple = (10.0, 20.0, 30.0)

    @property
    def local_surcharge(self) -> float:
        return self.s_bh if self.s_ld is None else self.s_ld


_KEY_MAP = {
    "alpha": ("alpha", float),
    "delta": ("delta", float),
    "lambda": ("sbs_intensity", float),
    "zeta": ("mu_intensity", float),
    "K": ("requests_per_mu", float),
    "s_bh": ("s_bh", float),
    "s_ld": ("s_ld", float),
    "N": ("n_files", int),
    "Q": ("storage", int),
    "beta": ("beta", float),
    "V": ("n_vrs", int),
    "gamma": ("gamma", float),
    "P": ("tx_power", float),
    "sigma2": ("noise_power", float),
    "radius": ("window_radius", float),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "tau_grid": ("tau_grid", "float_list"),
    "q_grid": ("q_grid", "int_list"),
    "lambda_grid": ("lambda_grid", "float_list"),
}


def _convert(raw: str, kind) -> object:
    if kind == "float_list":
        return tuple(float(x) for x in raw.split(","))
    if kind == "int_list":
        return tuple(int(x) for x in raw.split(","))
    return kind(raw)


def load_config(path: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse a flat key = value config file on top of the defaults."""
    cfg = base or ExperimentConfig()
    updates = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.split("#", 1)[0].strip()
                if not stripped:
                    continue
                if "=" not in stripped:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, raw = (part.strip() for part in stripped.split("=", 1))
                if key not in _KEY_MAP:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                field_name, kind = _KEY_MAP[key]
                try:
                    updates[field_name] = _convert(raw, kind)
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return replace(cfg, **updates)


def _fmt(value) -> str:
    if value is EXCLUDED:
        return "EXCLUDED"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def format_rows(header: list[str], rows: list[tuple]) -> str:
    """Render rows to CSV text with stable numeric formatting."""
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def make_instance(
    cfg: ExperimentConfig,
    gamma: float | None = None,
    storage: float | None = None,
) -> GameInstance:
    """Build a consistent game instance from an experiment config."""
    q_req = cfg.storage if storage is None else storage
    q_eff = min(q_req, cfg.n_files)  # Q > N behaves exactly like Q = N
    if q_eff < 1:
        raise ConfigError(f"storage must be >= 1, got {q_req}")
    f_groups = cfg.n_files / q_eff
    storage_int = int(q_eff) if float(q_eff).is_integer() else None
    catalog = CatalogConfig(
        n_files=cfg.n_files,
        storage=storage_int if storage_int is not None else 1,
        file_exponent=cfg.beta,
    )
    vrs = VrConfig(n_vrs=cfg.n_vrs, vr_exponent=gamma if gamma is not None else cfg.gamma)
    pops = build_popularity(catalog, vrs)
    if storage_int is None:
        # non-integer group count: analytics only, no exact grouping
        pops = replace(pops, p=None, f_groups=f_groups)
    econ = EconomicConfig(
        backhaul_cost=cfg.s_bh,
        local_surcharge=cfg.local_surcharge,
        requests_per_mu=cfg.requests_per_mu,
        mu_intensity=cfg.mu_intensity,
        sbs_intensity=cfg.sbs_intensity,
    )
    constants = make_constants(cfg.delta, cfg.alpha, f_groups)
    return GameInstance(pops=pops, econ=econ, constants=constants, n_files=cfg.n_files)


COVERAGE_HEADER = [
    "tau",
    "F",
    "lambda",
    "trials",
    "p_hat",
    "half_width",
    "p_analytic",
    "abs_error",
]


def run_verify_coverage(
    cfg: ExperimentConfig, jobs: int = 1
) -> tuple[list[tuple], bool]:
    """Simulate the (tau, Q, lambda) grid and compare against the closed form.

    Returns the CSV rows and whether every point met the tolerance
    max(0.02, 3 * half-width).
    """
    points = []
    for q in cfg.q_grid:
        if cfg.n_files % q != 0:
            raise ConfigError(f"Q={q} does not divide N={cfg.n_files}")
        f_groups = cfg.n_files // q
        for lam in cfg.lambda_grid:
            for tau in cfg.tau_grid:
                points.append((tau, f_groups, lam))

    def simulate(args):
        index, (tau, f_groups, lam) = args
        sim_cfg = SimConfig(
            sbs_intensity=lam,
            mu_intensity=cfg.mu_intensity,
            tx_power=cfg.tx_power,
            noise_power=cfg.noise_power,
            alpha=cfg.alpha,
            delta=cfg.delta,
            window_radius=cfg.window_radius,
            trials=cfg.trials,
            seed=cfg.seed + index,
        )
        return simulate_hit_probability(sim_cfg, tau, f_groups)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            estimates = list(pool.map(simulate, enumerate(points)))
    else:
        estimates = [simulate(item) for item in enumerate(points)]

    rows = []
    all_ok = True
    for (tau, f_groups, lam), est in zip(points, estimates):
        constants = make_constants(cfg.delta, cfg.alpha, f_groups)
        analytic = hit_probability(tau, constants)
        err = abs(est.p_hat - analytic)
        if err > max(0.02, 3.0 * est.half_width_95):
            all_ok = False
        rows.append(
            (tau, f_groups, lam, est.trials, est.p_hat, est.half_width_95, analytic, err)
        )
    return rows, all_ok


SWEEP_GAMMA_HEADER = [
    "gamma",
    "q_min",
    "qp_min",
    "u_nups",
    "u_ups",
    "s_nsp_nups",
    "s_nsp_ups",
    "s_glb_nups",
    "s_glb_ups",
]


def _check_outcome(outcome: EquilibriumOutcome) -> None:
    posted = outcome.prices.n_posted()
    positive = sum(1 for f in outcome.fractions.fractions if f > 0)
    if not outcome.n_participants == posted == positive:
        raise AssertionError(
            f"inconsistent outcome: participants={outcome.n_participants}, "
            f"posted prices={posted}, positive fractions={positive}"
        )


def run_sweep_gamma(
    cfg: ExperimentConfig,
    gammas: list[float],
    verify: bool = False,
) -> list[tuple]:
    """Sweep the retailer preference exponent at fixed storage."""
    rows = []
    for gamma in gammas:
        instance = make_instance(cfg, gamma=gamma)
        thresholds = participation_thresholds(
            instance.pops, instance.constants, cfg.n_files
        )
        nups = nups_solve(instance, cfg.storage)
        ups = ups_solve(instance, cfg.storage)
        _check_outcome(nups)
        _check_outcome(ups)
        if verify:
            verify_equilibrium(nups, instance)
            verify_equilibrium(ups, instance)
        rows.append(
            (
                gamma,
                float(thresholds.u_values[-1]),
                float(thresholds.u_bar_values[-1]),
                nups.n_participants,
                ups.n_participants,
                nups.report.nsp_total,
                ups.report.nsp_total,
                nups.report.global_total,
                ups.report.global_total,
            )
        )
    return rows


SWEEP_STORAGE_HEADER = [
    "storage",
    "u_nups",
    "u_ups",
    "s_nsp_nups",
    "s_nsp_ups",
    "s_glb_nups",
    "s_glb_ups",
]


def run_sweep_storage(
    cfg: ExperimentConfig,
    storages: list[float],
    verify: bool = False,
) -> list[tuple]:
    """Sweep the per-SBS storage size at fixed preference exponent."""
    rows = []
    for storage in storages:
        instance = make_instance(cfg, storage=storage)
        nups = nups_solve(instance, storage)
        ups = ups_solve(instance, storage)
        _check_outcome(nups)
        _check_outcome(ups)
        if verify:
            verify_equilibrium(nups, instance)
            verify_equilibrium(ups, instance)
        rows.append(
            (
                storage,
                nups.n_participants,
                ups.n_participants,
                nups.report.nsp_total,
                ups.report.nsp_total,
                nups.report.global_total,
                ups.report.global_total,
            )
        )
    return rows


PER_VR_HEADER = [
    "vr",
    "nups_price",
    "ups_price",
    "nups_fraction",
    "ups_fraction",
]


def run_per_vr(cfg: ExperimentConfig, verify: bool = False) -> list[tuple]:
    """Per-retailer prices and fractions under both pricing schemes."""
    instance = make_instance(cfg)
    nups = nups_solve(instance, cfg.storage)
    ups = ups_solve(instance, cfg.storage)
    _check_outcome(nups)
    _check_outcome(ups)
    if verify:
        verify_equilibrium(nups, instance)
        verify_equilibrium(ups, instance)
    rows = []
    for v in range(cfg.n_vrs):
        rows.append(
            (
                v + 1,
                nups.prices.prices[v],
                ups.prices.prices[v],
                nups.fractions.fractions[v],
                ups.fractions.fractions[v],
            )
        )
    return rows


OUTCOME_HEADER = [
    "vr",
    "price",
    "fraction",
    "surcharge",
    "rent",
    "profit",
]


def run_solve(
    cfg: ExperimentConfig, scheme: str, verify: bool = True
) -> tuple[list[tuple], list[str]]:
    """Solve one instance; returns per-retailer rows plus summary lines."""
    instance = make_instance(cfg)
    scheme = scheme.upper()
    if scheme == "NUPS":
        outcome = nups_solve(instance, cfg.storage)
    elif scheme == "UPS":
        outcome = ups_solve(instance, cfg.storage)
    elif scheme == "WATERFILL":
        outcome = waterfill_solve(instance)
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    if verify:
        verify_equilibrium(outcome, instance)
    rows = []
    rep = outcome.report
    for v in range(cfg.n_vrs):
        rows.append(
            (
                v + 1,
                outcome.prices.prices[v],
                outcome.fractions.fractions[v],
                rep.vr_surcharge[v],
                rep.vr_rent[v],
                rep.vr_profits[v],
            )
        )
    summary = [
        "scheme,participants,s_rt,s_bh,s_nsp,s_glb",
        ",".join(
            [
                outcome.scheme,
                str(outcome.n_participants),
                _fmt(rep.nsp_leasing),
                _fmt(rep.nsp_backhaul_saving),
                _fmt(rep.nsp_total),
                _fmt(rep.global_total),
            ]
        ),
    ]
    return rows, summary


def sweep_values(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid with float-robust endpoint handling."""
    if step <= 0:
        raise ConfigError(f"step must be positive, got {step}")
    if stop < start:
        raise ConfigError(f"empty sweep range [{start}, {stop}]")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]
