"""Discretisation schemes on a uniform grid.

Three variants step the same recursion:

* ``with_substitute``: large jumps are applied exactly as a compound Poisson
  sum, the compensator is subtracted from the drift, and the small-jump
  martingale is replaced by a Gaussian with the matching per-step variance;
* ``without_substitute``: identical, with the Gaussian term dropped;
* ``euler_peano``: a named alias of ``with_substitute`` meant to be run at
  reference parameters (finest grid, smallest cutoff), so experiment
  configurations can refer to the frozen-coefficient reference by name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import SdeModel, small_jump_std, step_compensator
from .noise import NoiseRealization, aggregate_to_coarser_grid

VARIANTS = ("with_substitute", "without_substitute", "euler_peano")


class SchemeError(ValueError):
    pass


def grid_index(t, n: int, horizon: float):
    """rho(t) = floor(t n / T), robust to float noise at grid points."""
    r = np.asarray(t, dtype=float) * n / horizon
    ri = np.floor(r)
    ri = np.where(r - ri > 1.0 - 1e-9, ri + 1.0, ri)
    return np.clip(ri, 0, n).astype(int)


def grid_time(t, n: int, horizon: float):
    """eta(t): the last grid time at or before t."""
    return grid_index(t, n, horizon) * (horizon / n)


@dataclass(frozen=True)
class SchemeConfig:
    n: int
    eps: float
    horizon: float = 1.0
    variant: str = "with_substitute"

    def __post_init__(self):
        if self.n < 1:
            raise SchemeError("n must be a positive integer")
        if self.eps < 0:
            raise SchemeError("eps must be nonnegative")
        if self.horizon <= 0:
            raise SchemeError("horizon must be positive")
        if self.variant not in VARIANTS:
            raise SchemeError(f"variant must be one of {VARIANTS}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n

    def eta(self, t):
        return grid_time(t, self.n, self.horizon)

    def rho(self, t):
        return grid_index(t, self.n, self.horizon)

    @property
    def uses_substitute(self) -> bool:
        return self.variant in ("with_substitute", "euler_peano")


@dataclass
class Path:
    grid_values: np.ndarray
    config: SchemeConfig
    jump_log: Optional[list] = None
    diverged: bool = False

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.config.horizon, self.config.n + 1)


def _validate_eps_zero(model: SdeModel, config: SchemeConfig) -> None:
    if config.eps == 0.0 and not model.kernel.has_finite_activity():
        raise SchemeError("eps = 0 is only defined for finite-activity kernels")


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------

def step_core(model: SdeModel, config: SchemeConfig, i: int, x_prev: float,
              d_w: float, xi: float, jump_term: float,
              use_substitute: bool) -> float:
    """One update of the recursion from precomputed per-step noise.

    The drift enters as a(t_{i-1}, x) dt minus the large-jump compensator
    integrated once over the step; the substitute term is the per-step
    small-jump standard deviation times the supplied standard normal.
    """
    t0 = (i - 1) * config.dt
    t1 = i * config.dt
    drift = float(model.drift(t0, x_prev)) * config.dt
    if not model.compensator_vanishes and config.eps > 0:
        drift -= step_compensator(model, config.eps, x_prev, t0, t1)
    out = x_prev + drift + float(model.diffusion(t0, x_prev)) * d_w + jump_term
    if use_substitute and config.eps > 0:
        std = float(small_jump_std(model, config.eps, np.asarray([x_prev]), t0, t1)[0])
        out += std * xi
    return out


def _jump_term(model: SdeModel, x_prev: float, times: np.ndarray,
               sizes: np.ndarray) -> float:
    if times.size == 0:
        return 0.0
    return float(np.sum([model.jump_coeff(t, x_prev, z)
                         for t, z in zip(times, sizes)]))


def step_with_substitute(model: SdeModel, config: SchemeConfig, i: int,
                         x_prev: float, noise: NoiseRealization) -> float:
    times, sizes = _jumps_in_step(noise, config, i)
    return step_core(model, config, i, x_prev,
                     float(noise.brownian_increments[i - 1]),
                     float(noise.substitute_gaussians[i - 1]),
                     _jump_term(model, x_prev, times, sizes),
                     use_substitute=True)


def step_without_substitute(model: SdeModel, config: SchemeConfig, i: int,
                            x_prev: float, noise: NoiseRealization) -> float:
    times, sizes = _jumps_in_step(noise, config, i)
    return step_core(model, config, i, x_prev,
                     float(noise.brownian_increments[i - 1]), 0.0,
                     _jump_term(model, x_prev, times, sizes),
                     use_substitute=False)


def step_euler_peano(model: SdeModel, config: SchemeConfig, i: int,
                     x_prev: float, noise: NoiseRealization) -> float:
    """Reference alias: identical arithmetic to the substituted step."""
    return step_with_substitute(model, config, i, x_prev, noise)


_STEPPERS = {
    "with_substitute": step_with_substitute,
    "without_substitute": step_without_substitute,
    "euler_peano": step_euler_peano,
}


def _jumps_in_step(noise: NoiseRealization, config: SchemeConfig, i: int):
    t0 = (i - 1) * config.dt
    t1 = i * config.dt if i < config.n else config.horizon
    lo = np.searchsorted(noise.jump_times, t0, side="right")
    hi = np.searchsorted(noise.jump_times, t1, side="right")
    return noise.jump_times[lo:hi], noise.jump_sizes[lo:hi]


# ---------------------------------------------------------------------------
# whole paths
# ---------------------------------------------------------------------------

def simulate_path(model: SdeModel, config: SchemeConfig,
                  noise: NoiseRealization, keep_jump_log: bool = False) -> Path:
    """Iterate the selected step over the grid, starting from the model x0.

    Noise generated on a finer grid is aggregated first (multiplicative jump
    structure required, since only then do block sums reproduce the frozen
    step contributions)."""
    _validate_eps_zero(model, config)
    if noise.grid_n != config.n:
        if noise.grid_n % config.n:
            raise SchemeError(
                f"noise grid {noise.grid_n} incompatible with n={config.n}")
        if model.jump_structure is None:
            raise SchemeError("aggregation requires a multiplicative jump coefficient")
        noise = aggregate_to_coarser_grid(noise, noise.grid_n // config.n)
    stepper = _STEPPERS[config.variant]
    values = np.empty(config.n + 1)
    values[0] = model.x0
    log = [] if keep_jump_log else None
    x = model.x0
    for i in range(1, config.n + 1):
        x = stepper(model, config, i, x, noise)
        values[i] = x
        if keep_jump_log:
            times, sizes = _jumps_in_step(noise, config, i)
            log.append((i, times.copy(), sizes.copy()))
        if not math.isfinite(x):
            return Path(values, config, log, diverged=True)
    return Path(values, config, log)


def simulate_coupled_pair(model: SdeModel, config_coarse: SchemeConfig,
                          config_ref: SchemeConfig,
                          shared_noise: NoiseRealization):
    """Reference path on the fine grid plus the coarse path driven by the
    aggregated version of the same noise realization."""
    if model.jump_structure is None:
        raise SchemeError("coupled simulation requires a multiplicative jump coefficient")
    if config_ref.n % config_coarse.n:
        raise SchemeError("reference step count must be a multiple of the coarse one")
    if config_ref.eps != config_coarse.eps:
        raise SchemeError("coupled configs must share the jump cutoff")
    ref = simulate_path(model, config_ref, shared_noise)
    coarse = simulate_path(model, config_coarse, shared_noise)
    return coarse, ref


def sup_distance_on_shared_grid(coarse: Path, ref: Path) -> float:
    """Sup over the coarse grid of |coarse - reference| at shared times."""
    m = ref.config.n // coarse.config.n
    return float(np.max(np.abs(coarse.grid_values - ref.grid_values[::m])))
