"""Angular dynamics of rigid fibres under time-modulated truncated stable noise.

The orientation angle follows a drift set by the shear, an Ito correction of
the trigonometric diffusion polynomial, and a multiplicative jump term driven
by the kernel kappa(t)|z|^(-1-alpha) with kappa(t) = (min(t, T*))^(q-1). The
time modulation produces superdiffusive variance growth up to T* and a linear
regime afterwards; the renormalised angle PDFs start heavy-tailed and fold
towards a Gaussian as jumps accumulate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from . import measure
from .harness import LANE_FIBER, _block_rng, _blocks, _compound_sums, _run_blocks
from .measure import fiber_kernel
from .model import Multiplicative, RateHypotheses, SdeModel

HIST_BINS = 401
HIST_RANGE = (-10.0, 10.0)


class FiberError(ValueError):
    pass


@dataclass(frozen=True)
class FiberParams:
    """Shear, diffusion polynomial, and jump-kernel parameters.

    The diffusion polynomial b(theta)^2 = g0 + g1 sin 2t + g2 sin 4t
    + g3 cos 2t + g4 cos 4t must be nonnegative; this is checked on a dense
    angle grid at construction.
    """

    sigma: float = 0.0
    gammas: tuple = (1.0, 0.0, 0.0, 0.0, 0.0)
    alpha: float = 1.5
    z_minus: float = 8.0
    z_plus: float = 8.0
    t_star: float = 0.2
    q: float = 1.5
    theta0: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise FiberError("shear must be nonnegative")
        if len(self.gammas) != 5:
            raise FiberError("five diffusion coefficients are required")
        if self.z_minus < 0 or self.z_plus < 0 or self.z_minus + self.z_plus == 0:
            raise FiberError("jump truncations must be nonnegative, not both zero")
        theta = np.linspace(-math.pi, math.pi, 10_000)
        if np.min(self._b_squared(theta)) < 0:
            raise FiberError("diffusion polynomial is negative somewhere on the circle")

    def _b_squared(self, theta):
        g0, g1, g2, g3, g4 = self.gammas
        theta = np.asarray(theta, dtype=float)
        return (g0 + g1 * np.sin(2 * theta) + g2 * np.sin(4 * theta)
                + g3 * np.cos(2 * theta) + g4 * np.cos(4 * theta))

    def b(self, theta):
        return np.sqrt(self._b_squared(theta))

    def b_squared_dd(self, theta):
        """Second derivative of the diffusion polynomial, analytic."""
        g0, g1, g2, g3, g4 = self.gammas
        theta = np.asarray(theta, dtype=float)
        return (-4.0 * g1 * np.sin(2 * theta) - 16.0 * g2 * np.sin(4 * theta)
                - 4.0 * g3 * np.cos(2 * theta) - 16.0 * g4 * np.cos(4 * theta))

    def shear_drift(self, theta):
        return 0.5 * self.sigma * (np.cos(2 * np.asarray(theta, dtype=float)) - 1.0)


def build_fiber_model(params: FiberParams) -> SdeModel:
    """Angle SDE with the Ito-corrected drift a + (b^2)''/4 and jump
    coefficient b(theta) z against the capped-power fiber kernel."""
    kernel = fiber_kernel(params.alpha, params.z_minus, params.z_plus,
                          params.t_star, params.q)

    def drift(t, theta):
        return params.shear_drift(theta) + 0.25 * params.b_squared_dd(theta)

    return SdeModel(
        drift=drift,
        diffusion=lambda t, x: np.zeros_like(np.asarray(x, dtype=float)),
        jump_coeff=lambda t, x, z: params.b(x) * z,
        kernel=kernel,
        x0=params.theta0,
        jump_structure=Multiplicative(lambda t, x: params.b(x), lambda z: z, True),
        rate_meta=RateHypotheses(gamma=1.0, zeta=1.0, p=2, sublinear=True,
                                 c_lip_bound=lambda t, z: np.abs(z)),
        ar_coupling_density=True,
        name="fiber",
    )


def noise_variance_curve(params: FiberParams, t_grid: Sequence[float]) -> np.ndarray:
    """Var of the driving jump process at the given times, by quadrature.

    The time modulation is integrated numerically on purpose: the piecewise
    kappa makes hand-derived closed forms for this variance easy to get
    wrong (both the prefactor of the superdiffusive part and the slope of
    the linear regime), so the quadrature value is the reference here.
    """
    kernel = fiber_kernel(params.alpha, params.z_minus, params.z_plus,
                          params.t_star, params.q)
    full_ball = max(params.z_minus, params.z_plus)
    z2 = measure.truncated_moment(kernel, params.t_star, full_ball, 2.0, "inside") \
        / kernel.kappa(params.t_star)
    kappa = kernel.time_factor
    out = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        if t == 0.0:
            out[i] = 0.0
            continue
        val, err = integrate.quad(lambda s: float(kappa(s)), 0.0, float(t),
                                  points=[min(params.t_star, t)], epsabs=1e-12)
        out[i] = val * z2
    return out


@dataclass
class FiberSnapshot:
    t: float
    variance: float
    variance_half_width: float
    excess_kurtosis: float
    skewness: float
    bin_centers: np.ndarray
    density: np.ndarray


@dataclass
class FiberPdfReport:
    snapshots: list
    mc_paths: int
    runtime_seconds: float

    def to_dict(self) -> dict:
        return {"mc_paths": self.mc_paths,
                "snapshots": [{"t": s.t, "variance": s.variance,
                               "variance_half_width": s.variance_half_width,
                               "excess_kurtosis": s.excess_kurtosis,
                               "skewness": s.skewness} for s in self.snapshots]}


def _fiber_block_worker(args) -> dict:
    (params_tuple, n, eps, horizon, snapshot_idx, master_seed, block,
     block_paths, gaussian_control, track_l) = args
    params = FiberParams(*params_tuple)
    model = build_fiber_model(params)
    kernel = model.kernel
    dt = horizon / n
    edges = np.linspace(0.0, horizon, n + 1)
    factor = kernel.time_factor
    phi = np.diff(factor.primitive(edges))
    eps_eff = max(params.z_minus, params.z_plus) if gaussian_control else eps
    lam = measure.cumulative_intensity_grid(kernel, eps_eff, edges) \
        if not gaussian_control else np.zeros(n)
    t_ref = params.t_star
    f2_mass = measure.truncated_moment(kernel, t_ref, eps_eff, 2.0, "inside") \
        / kernel.kappa(t_ref)
    signed_tail = measure.tail_signed_moment(kernel, t_ref, eps_eff, 1.0) \
        / kernel.kappa(t_ref)
    family = kernel.closed_forms
    quantile = lambda u: family.quantile(eps_eff, u)

    rng_xi = _block_rng(master_seed, LANE_FIBER, block, "substitute")
    rng_cnt = _block_rng(master_seed, LANE_FIBER, block, "jump_times")
    rng_sz = _block_rng(master_seed, LANE_FIBER, block, "jump_sizes")

    B = block_paths
    x = np.full(B, params.theta0)
    l_path = np.zeros(B) if track_l else None
    snap_set = {idx: None for idx in snapshot_idx}
    moments = {}
    sqrt_f2 = math.sqrt(f2_mass)
    for i in range(1, n + 1):
        if lam[i - 1] > 0:
            cnt = rng_cnt.poisson(lam[i - 1], size=B)
            jraw = _compound_sums(cnt.reshape(-1, 1), rng_sz, quantile).ravel()
        else:
            jraw = np.zeros(B)
        b_theta = params.b(x)
        incr = np.asarray(model.drift(0.0, x), dtype=float) * dt \
            + b_theta * jraw - b_theta * signed_tail * phi[i - 1] \
            + np.abs(b_theta) * sqrt_f2 * math.sqrt(phi[i - 1]) * rng_xi.standard_normal(B)
        x = x + incr
        if track_l:
            l_path = l_path + jraw - signed_tail * phi[i - 1] \
                + sqrt_f2 * math.sqrt(phi[i - 1]) * rng_xi.standard_normal(B)
        if i in snap_set:
            delta = x - params.theta0
            moments[i] = _moment_pack(delta)
            if track_l:
                moments[i]["l_moments"] = _moment_pack(l_path)
    return moments


def _moment_pack(values: np.ndarray) -> dict:
    return {"m1": float(values.sum()), "m2": float((values ** 2).sum()),
            "m3": float((values ** 3).sum()), "m4": float((values ** 4).sum()),
            "n": int(values.size),
            "hist": np.histogram(_standardise(values), bins=HIST_BINS,
                                 range=HIST_RANGE, density=True)[0]}


def _standardise(values: np.ndarray) -> np.ndarray:
    sd = values.std()
    if sd == 0:
        raise FiberError("zero variance at a snapshot: nothing to renormalise")
    return (values - 0.0) / sd


def run_fiber_pdf(params: FiberParams, n: int = 256, eps: Optional[float] = None,
                  horizon: float = 1.0, mc_paths: int = 100_000,
                  snapshot_times: Sequence[float] = (0.125, 0.25, 0.5, 1.0),
                  master_seed: int = 0, threads: int = 1,
                  gaussian_control: bool = False) -> FiberPdfReport:
    """Simulate the cumulative angle and return renormalised histograms plus
    variance/kurtosis per snapshot.

    With gaussian_control=True no jump is sampled and the full jump variance
    flows through the Gaussian substitute, giving an exactly Gaussian-driven
    control run (useful to pin the kurtosis baseline near zero).
    """
    t_begin = time.perf_counter()
    if eps is None:
        eps = 1.0 / n
    snapshot_idx = []
    for t in snapshot_times:
        idx = round(t / horizon * n)
        if abs(idx * horizon / n - t) > 1e-9 * horizon:
            raise FiberError(f"snapshot time {t} is not a grid point for n={n}")
        snapshot_idx.append(int(idx))
    params_tuple = (params.sigma, tuple(params.gammas), params.alpha,
                    params.z_minus, params.z_plus, params.t_star, params.q,
                    params.theta0)
    blocks = _blocks(mc_paths, 50_000)
    args = [(params_tuple, n, eps, horizon, tuple(snapshot_idx), master_seed,
             b, size, gaussian_control, False) for b, size in blocks]
    results = _run_blocks(_fiber_block_worker, args, threads)
    snaps = []
    centers = 0.5 * (np.linspace(*HIST_RANGE, HIST_BINS + 1)[:-1]
                     + np.linspace(*HIST_RANGE, HIST_BINS + 1)[1:])
    for t, idx in zip(snapshot_times, snapshot_idx):
        m = _combine_moments([r[idx] for r in results])
        snaps.append(FiberSnapshot(
            t=t, variance=m["var"], variance_half_width=m["var_hw"],
            excess_kurtosis=m["ex_kurt"], skewness=m["skew"],
            bin_centers=centers, density=m["hist"]))
    return FiberPdfReport(snaps, mc_paths, time.perf_counter() - t_begin)


def _combine_moments(packs: list) -> dict:
    n = sum(p["n"] for p in packs)
    m1 = sum(p["m1"] for p in packs) / n
    m2 = sum(p["m2"] for p in packs) / n
    m3 = sum(p["m3"] for p in packs) / n
    m4 = sum(p["m4"] for p in packs) / n
    var = m2 - m1 ** 2
    mu3 = m3 - 3 * m1 * m2 + 2 * m1 ** 3
    mu4 = m4 - 4 * m1 * m3 + 6 * m1 ** 2 * m2 - 3 * m1 ** 4
    # CLT half-width of the variance estimate via the delta method
    var_hw = 1.96 * math.sqrt(max(mu4 - var ** 2, 0.0) / n)
    hist = np.sum([p["hist"] * p["n"] for p in packs], axis=0) / n
    return {"var": var, "var_hw": var_hw,
            "ex_kurt": mu4 / var ** 2 - 3.0 if var > 0 else float("nan"),
            "skew": mu3 / var ** 1.5 if var > 0 else float("nan"),
            "hist": hist}


def empirical_l_variance(params: FiberParams, t_grid: Sequence[float],
                         n: int = 256, mc_paths: int = 100_000,
                         master_seed: int = 0, threads: int = 1):
    """Empirical variance of the simulated driving process at grid times,
    for comparison against the quadrature curve."""
    eps = 1.0 / n
    horizon = max(t_grid)
    snapshot_idx = [int(round(t / horizon * n)) for t in t_grid]
    params_tuple = (params.sigma, tuple(params.gammas), params.alpha,
                    params.z_minus, params.z_plus, params.t_star, params.q,
                    params.theta0)
    blocks = _blocks(mc_paths, 50_000)
    args = [(params_tuple, n, eps, horizon, tuple(snapshot_idx), master_seed,
             b, size, False, True) for b, size in blocks]
    results = _run_blocks(_fiber_block_worker, args, threads)
    out = []
    for idx in snapshot_idx:
        packs = [r[idx]["l_moments"] for r in results]
        m = _combine_moments(packs)
        out.append((m["var"], m["var_hw"]))
    return out
