"""Reproducible noise generation for jump-SDE paths.

Each path draws from counter-based (Philox) streams keyed by
(master_seed, path_index, substream_tag), so adding paths, reordering work,
or splitting across processes never perturbs existing draws. The jump times
of the driving inhomogeneous Poisson process can be sampled either by the
unit-rate time-change construction or by thinning against a dominating
homogeneous rate; both produce the same law.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import measure
from .measure import CompensatorKernel

SUBSTREAM_TAGS = {
    "brownian": 0,
    "substitute": 1,
    "jump_times": 2,
    "jump_sizes": 3,
    "thinning": 4,
}
THINNING_CHECK_GRID = 1024


class NoiseError(ValueError):
    pass


@dataclass(frozen=True)
class SeedStream:
    """Address of one independent random stream.

    Distinct (path_index, substream_tag) pairs map to distinct Philox keys,
    hence statistically independent, order-independent streams.
    """

    master_seed: int
    path_index: int = 0
    substream_tag: Optional[str] = None
    lane: int = 0  # 0 = per-path noise; harness block lanes use >= 1

    def stream(self, tag: str) -> "SeedStream":
        if tag not in SUBSTREAM_TAGS:
            raise NoiseError(f"unknown substream tag {tag!r}")
        return replace(self, substream_tag=tag)

    def generator(self) -> np.random.Generator:
        if self.substream_tag is None:
            raise NoiseError("select a substream tag before drawing")
        tag_id = SUBSTREAM_TAGS[self.substream_tag]
        key = np.array(
            [np.uint64(self.master_seed & (2 ** 64 - 1)),
             np.uint64((self.lane << 56) | (self.path_index << 4) | tag_id)],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class NoiseRealization:
    """Everything one path consumes: Brownian increments, the standard
    normals feeding the small-jump substitute, and the large-jump times and
    sizes (all |size| > eps). Regenerating with the same seed and path index
    reproduces the fields bit-exactly."""

    brownian_increments: np.ndarray
    substitute_gaussians: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    eps: float
    seed: int
    path_index: int
    grid_n: int
    horizon: float
    substitute_weights: Optional[np.ndarray] = None  # per-step time-factor mass

    def __post_init__(self):
        if self.jump_times.size and np.any(np.diff(self.jump_times) <= 0):
            raise NoiseError("jump times must be strictly increasing")
        if self.jump_sizes.size and np.any(np.abs(self.jump_sizes) <= self.eps):
            raise NoiseError("jump sizes must exceed eps in magnitude")


# ---------------------------------------------------------------------------
# jump-time samplers
# ---------------------------------------------------------------------------

def _rng_of(stream_or_rng, tag: str) -> np.random.Generator:
    if isinstance(stream_or_rng, SeedStream):
        return stream_or_rng.stream(tag).generator()
    return stream_or_rng


def sample_jump_times_timechange(kernel: CompensatorKernel, eps: float,
                                 horizon: float, stream) -> np.ndarray:
    """Jump times on (0, horizon] via the time-change of a unit-rate process.

    Draws a Poisson number of unit-rate arrivals on [0, Lambda(0, horizon)]
    (as uniform order statistics) and maps them through the inverse of the
    cumulative intensity.
    """
    rng = _rng_of(stream, "jump_times")
    total = measure.cumulative_intensity(kernel, eps, 0.0, horizon)
    if total == 0.0:
        return np.empty(0)
    count = rng.poisson(total)
    if count == 0:
        return np.empty(0)
    areas = np.sort(rng.random(count)) * total
    times = measure.inverse_cumulative_intensity(kernel, eps, 0.0, horizon, areas)
    # exact ties are measure-zero; nudging keeps the strict-ordering invariant
    for i in range(1, times.size):
        if times[i] <= times[i - 1]:
            times[i] = np.nextafter(times[i - 1], np.inf)
    return times


def sample_jump_times_thinning(kernel: CompensatorKernel, eps: float,
                               horizon: float, lambda_star: float,
                               stream) -> np.ndarray:
    """Jump times by acceptance-rejection below a dominating constant rate.

    The bound lambda_star must dominate the tail intensity on [0, horizon];
    it is validated on a fixed grid before any draw.
    """
    if lambda_star <= 0:
        raise NoiseError("lambda_star must be positive")

    if kernel.factorised and kernel.closed_forms is not None:
        tail = kernel.closed_forms.tail_mass(eps)
        factor = kernel.time_factor or measure.ConstantFactor(1.0)
        intensity = lambda ts: tail * np.asarray(factor(ts), dtype=float)
    else:
        intensity = lambda ts: np.array(
            [measure.tail_intensity(kernel, t, eps) for t in np.atleast_1d(ts)])

    check_ts = np.linspace(horizon / THINNING_CHECK_GRID, horizon, THINNING_CHECK_GRID)
    rates = intensity(check_ts)
    if np.any(rates > lambda_star * (1.0 + 1e-12)):
        worst = check_ts[int(np.argmax(rates))]
        raise NoiseError(
            f"lambda_star={lambda_star} violated: intensity {rates.max():.6g} at t={worst:.6g}"
        )
    rng = _rng_of(stream, "thinning")
    count = rng.poisson(lambda_star * horizon)
    if count == 0:
        return np.empty(0)
    proposals = np.sort(rng.random(count)) * horizon
    accept_u = rng.random(count)
    times = proposals[accept_u * lambda_star < intensity(proposals)]
    return times


def sample_jump_sizes(kernel: CompensatorKernel, eps: float,
                      jump_times: np.ndarray, stream,
                      uniforms: Optional[np.ndarray] = None) -> np.ndarray:
    """Conditional jump sizes at the given times by quantile inversion.

    With a multiplicative time factor the conditional law is time-homogeneous
    and a single vectorised quantile call serves every jump; otherwise the
    quantile is re-evaluated at each jump time.
    """
    jump_times = np.asarray(jump_times, dtype=float)
    if jump_times.size == 0:
        return np.empty(0)
    if uniforms is None:
        rng = _rng_of(stream, "jump_sizes")
        uniforms = 1.0 - rng.random(jump_times.size)  # in (0, 1]
    uniforms = np.asarray(uniforms, dtype=float)
    if kernel.factorised:
        return np.asarray(
            measure.jump_size_quantile(kernel, jump_times[0], eps, uniforms), dtype=float)
    return np.array([
        float(measure.jump_size_quantile(kernel, t, eps, u))
        for t, u in zip(jump_times, uniforms)
    ])


# ---------------------------------------------------------------------------
# full realizations
# ---------------------------------------------------------------------------

def generate_noise(kernel: CompensatorKernel, config, stream: SeedStream,
                   sampler: str = "timechange",
                   lambda_star: Optional[float] = None) -> NoiseRealization:
    """All randomness one path needs for the given scheme configuration."""
    n, eps, horizon = config.n, config.eps, config.horizon
    rng_w = stream.stream("brownian").generator()
    rng_xi = stream.stream("substitute").generator()
    dt = horizon / n
    brownian = rng_w.standard_normal(n) * np.sqrt(dt)
    xi = rng_xi.standard_normal(n)
    if eps > 0:
        if sampler == "timechange":
            times = sample_jump_times_timechange(kernel, eps, horizon, stream)
        elif sampler == "thinning":
            if lambda_star is None:
                raise NoiseError("thinning requires lambda_star")
            times = sample_jump_times_thinning(kernel, eps, horizon, lambda_star, stream)
        else:
            raise NoiseError(f"unknown sampler {sampler!r}")
        sizes = sample_jump_sizes(kernel, eps, times, stream)
    else:
        if not kernel.has_finite_activity():
            raise NoiseError("eps = 0 requires a finite-activity kernel")
        tiny = 1e-300
        times = sample_jump_times_timechange(kernel, tiny, horizon, stream)
        sizes = sample_jump_sizes(kernel, tiny, times, stream)
    weights = None
    if kernel.factorised and kernel.time_factor is not None:
        edges = np.linspace(0.0, horizon, n + 1)
        weights = np.diff(kernel.time_factor.primitive(edges))
    return NoiseRealization(
        brownian_increments=brownian,
        substitute_gaussians=xi,
        jump_times=times,
        jump_sizes=sizes,
        eps=eps,
        seed=stream.master_seed,
        path_index=stream.path_index,
        grid_n=n,
        horizon=horizon,
        substitute_weights=weights,
    )


def aggregate_to_coarser_grid(noise: NoiseRealization, m: int) -> NoiseRealization:
    """Aggregate fine noise onto a grid coarser by the (power-of-two) factor m.

    Brownian increments are block-summed. Substitute normals are combined as
    variance-weighted sums and renormalised, so that multiplying the coarse
    normal by the coarse block standard deviation reproduces the sum of the
    fine substitute contributions at frozen state. Jump data are
    grid-independent and pass through unchanged.
    """
    if m < 1 or noise.grid_n % m:
        raise NoiseError(f"aggregation factor {m} must divide grid_n={noise.grid_n}")
    if m == 1:
        return noise
    n_coarse = noise.grid_n // m
    brownian = noise.brownian_increments.reshape(n_coarse, m).sum(axis=1)
    if noise.substitute_weights is None:
        xi = noise.substitute_gaussians.reshape(n_coarse, m).sum(axis=1) / np.sqrt(m)
        weights = None
    else:
        w = noise.substitute_weights.reshape(n_coarse, m)
        sw = np.sqrt(w)
        num = (sw * noise.substitute_gaussians.reshape(n_coarse, m)).sum(axis=1)
        weights = w.sum(axis=1)
        with np.errstate(invalid="ignore"):
            xi = np.where(weights > 0, num / np.sqrt(np.maximum(weights, 1e-300)), 0.0)
    return replace(noise, brownian_increments=brownian, substitute_gaussians=xi,
                   grid_n=n_coarse, substitute_weights=weights)
