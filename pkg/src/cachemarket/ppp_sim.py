"""Monte-Carlo oracle for the closed-form hit probability.

Small cells are drawn from a homogeneous Poisson point process on a
finite disc with the typical user at the origin.  Each cell is
independently marked as carrying the requested retailer/file-group
combination with probability tau/F; the user connects to the nearest
marked cell and the download succeeds when its SINR clears the
threshold, with interference from every other cell (marked or not).

Each trial consumes its own child of a numpy SeedSequence, so results
are bit-identical regardless of how trials are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SimConfig", "SimulationEstimate", "sample_hppp", "simulate_hit_probability"]

# Expected SBS count the window must hold for truncation error to stay
# negligible against the grid tolerance.
_MIN_EXPECTED_COUNT = 100.0


@dataclass(frozen=True)
class SimConfig:
    """Physical and sampling parameters for the coverage simulator."""

    sbs_intensity: float  # lambda, cells per km^2
    mu_intensity: float  # zeta, users per km^2 (profit scaling only)
    tx_power: float  # P, watts
    noise_power: float  # sigma^2, watts
    alpha: float
    delta: float
    window_radius: float  # km
    trials: int
    seed: int

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        expected = self.sbs_intensity * math.pi * self.window_radius**2
        if expected < _MIN_EXPECTED_COUNT:
            raise ValueError(
                f"window too small: expected SBS count {expected:.1f} < "
                f"{_MIN_EXPECTED_COUNT:.0f}; enlarge window_radius"
            )


@dataclass(frozen=True)
class SimulationEstimate:
    """Empirical hit probability with a 95% confidence half-width."""

    p_hat: float
    trials: int
    half_width_95: float


def sample_hppp(intensity: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Draw one HPPP realization on a disc centered at the origin.

    Returns an (n, 2) array; n is Poisson(intensity * pi * radius^2) and
    positions are i.i.d. uniform on the disc.
    """
    if intensity <= 0 or radius <= 0:
        raise ValueError("intensity and radius must be positive")
    n = rng.poisson(intensity * math.pi * radius**2)
    r = radius * np.sqrt(rng.random(n))
    angle = rng.random(n) * (2.0 * math.pi)
    return np.column_stack((r * np.cos(angle), r * np.sin(angle)))


def _run_trial(
    cfg: SimConfig, mark_prob: float, rng: np.random.Generator
) -> bool:
    points = sample_hppp(cfg.sbs_intensity, cfg.window_radius, rng)
    n = points.shape[0]
    if n == 0:
        return False
    marked = rng.random(n) < mark_prob
    fades = rng.exponential(1.0, n)
    if not marked.any():
        return False  # no cell carries the content: counts as a miss
    dist = np.hypot(points[:, 0], points[:, 1])
    rx_power = cfg.tx_power * fades * dist**-cfg.alpha
    marked_idx = np.flatnonzero(marked)
    serving = marked_idx[np.argmin(dist[marked_idx])]
    interference = rx_power.sum() - rx_power[serving]
    sinr = rx_power[serving] / (interference + cfg.noise_power)
    return bool(sinr >= cfg.delta)


def simulate_hit_probability(
    cfg: SimConfig, tau_v: float, f_groups: int
) -> SimulationEstimate:
    """Estimate the hit probability for rental fraction tau_v and F groups."""
    if not 0.0 <= tau_v <= 1.0:
        raise ValueError(f"tau_v must lie in [0, 1], got {tau_v}")
    if f_groups < 1 or int(f_groups) != f_groups:
        raise ValueError(f"f_groups must be a positive integer, got {f_groups}")
    mark_prob = tau_v / f_groups
    hits = 0
    if tau_v > 0.0:
        children = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
        for child in children:
            if _run_trial(cfg, mark_prob, np.random.default_rng(child)):
                hits += 1
    p_hat = hits / cfg.trials
    half_width = 1.96 * math.sqrt(p_hat * (1.0 - p_hat) / cfg.trials)
    return SimulationEstimate(p_hat=p_hat, trials=cfg.trials, half_width_95=half_width)
