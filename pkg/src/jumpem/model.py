"""SDE models: coefficients, regularity metadata, and per-step integrals.

A model is the triple of coefficients (drift a, diffusion b, jump coefficient
c) together with its compensator kernel, initial condition, and rate
hypotheses. The two integrals every scheme step needs are computed here:

* the large-jump compensator  int_{t0}^{t1} int_{|z|>eps} c(s,x,z) nu_s(dz) ds,
* the small-jump variance     int_{t0}^{t1} int_{|z|<eps} c^2(s,x,z) nu_s(dz) ds.

Both are closed-form for multiplicative coefficients with power-law kernels,
use the Taylor/Simpson hybrid for the arctan family, and fall back to nested
quadrature otherwise.
"""

from __future__ import annotations

import ast
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import measure
from .measure import (CompensatorKernel, ConstantFactor, truncated_stable,
                      time_modulated_stable)

NEGATIVE_VARIANCE_TOL = -1e-14
ARCTAN_TAU = 0.5
ARCTAN_SIMPSON_PANELS = 100


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# metadata types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateHypotheses:
    """Regularity exponents steering the predicted strong rate.

    gamma: time-Hoelder exponent of the drift/diffusion pair, in (0, 1].
    zeta:  integrability exponent of the jump moment map, in (0, 1].
    p:     target even strong norm.
    sublinear: |c(t,x,z)| <= C|z|(1+|x|) holds on the small-jump ball.
    c_lip_bound: the map (t, z) -> Lbar_c(t, z) bounding both the spatial
        Lipschitz constant of c and |c(t, 0, z)|.
    """

    gamma: float = 1.0
    zeta: float = 1.0
    p: int = 2
    sublinear: bool = False
    c_lip_bound: Optional[Callable] = None

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0 or not 0.0 < self.zeta <= 1.0:
            raise ModelError("gamma and zeta must lie in (0, 1]")
        if self.p < 2 or self.p % 2:
            raise ModelError("p must be an even integer >= 2")


def predicted_strong_rate(meta: RateHypotheses, p: Optional[int] = None) -> float:
    """Exponent r with strong error O(n^-r) for the frozen-coefficient pivot."""
    p = meta.p if p is None else p
    return min(meta.gamma, 2.0 * meta.zeta / (p * (1.0 + meta.zeta)))


@dataclass(frozen=True)
class WeakErrorSpec:
    """Terminal statistic, matching source term, and exact reference value."""

    phi: Callable
    source_g: Callable
    u_exact: Callable


@dataclass(frozen=True)
class Multiplicative:
    """Jump coefficient of the separable form c(t, x, z) = cbar(t, x) f(z)."""

    cbar: Callable
    f: Callable
    f_is_identity: bool = False


@dataclass
class SdeModel:
    drift: Callable
    diffusion: Callable
    jump_coeff: Callable
    kernel: CompensatorKernel
    x0: float = 0.0
    jump_structure: Optional[Multiplicative] = None
    rate_meta: RateHypotheses = field(default_factory=RateHypotheses)
    weak_spec: Optional[WeakErrorSpec] = None
    small_jump_strategy: str = "auto"   # auto | multiplicative | arctan_hybrid | general
    c_time_independent: bool = True
    ar_coupling_density: bool = False
    name: str = "custom"

    def __post_init__(self):
        if self.small_jump_strategy == "auto":
            self.small_jump_strategy = (
                "multiplicative" if self.jump_structure is not None else "general"
            )
        self.compensator_vanishes = self._probe_odd_symmetry()

    def _probe_odd_symmetry(self, n_probe: int = 16) -> bool:
        """True when z -> c(t,x,z) density(t,z) is odd, so the large-jump
        compensator vanishes identically."""
        z_low, z_high = self.kernel.support
        if abs(-z_low - z_high) > 1e-15 * max(1.0, z_high):
            return False
        rng = np.random.default_rng(7)
        zs = rng.uniform(1e-3 * z_high, z_high, n_probe)
        ts = rng.uniform(0.0, 1.0, n_probe)
        xs = rng.standard_normal(n_probe) * 3.0
        for t, x, z in zip(ts, xs, zs):
            dens_p = float(self.kernel.density(max(t, 1e-6), np.asarray(z)))
            dens_m = float(self.kernel.density(max(t, 1e-6), np.asarray(-z)))
            cp = float(self.jump_coeff(t, x, z))
            cm = float(self.jump_coeff(t, x, -z))
            if abs(cp * dens_p + cm * dens_m) > 1e-10 * (1.0 + abs(cp * dens_p)):
                return False
        return True

    def check_multiplicative(self, n_probe: int = 1000, tol: float = 1e-12,
                             seed: int = 11) -> None:
        """Probe-check the declared separable structure on random triples."""
        if self.jump_structure is None:
            return
        rng = np.random.default_rng(seed)
        z_low, z_high = self.kernel.support
        ts = rng.uniform(0.0, 1.0, n_probe)
        xs = rng.standard_normal(n_probe) * 5.0
        zs = rng.uniform(z_low, z_high, n_probe)
        lhs = np.array([self.jump_coeff(t, x, z) for t, x, z in zip(ts, xs, zs)])
        rhs = (np.array([self.jump_structure.cbar(t, x) for t, x in zip(ts, xs)])
               * np.asarray(self.jump_structure.f(zs), dtype=float))
        scale = np.maximum(1.0, np.abs(lhs))
        if np.max(np.abs(lhs - rhs) / scale) > tol:
            raise ModelError("declared multiplicative structure fails probe check")

    def check_sublinear(self, n_probe: int = 1000, seed: int = 13) -> None:
        if not self.rate_meta.sublinear:
            return
        rng = np.random.default_rng(seed)
        z_low, z_high = self.kernel.support
        bound = max(abs(z_low), abs(z_high))
        ts = rng.uniform(0.0, 1.0, n_probe)
        xs = rng.standard_normal(n_probe) * 5.0
        zs = rng.uniform(-min(bound, 1.0), min(bound, 1.0), n_probe)
        c_const = 4.0  # generous probe constant; presets satisfy C_T = 1
        for t, x, z in zip(ts, xs, zs):
            if abs(self.jump_coeff(t, x, z)) > c_const * abs(z) * (1.0 + abs(x)) + 1e-12:
                raise ModelError("sublinearity flag fails probe check")


# ---------------------------------------------------------------------------
# per-step integrals
# ---------------------------------------------------------------------------

def corrected_drift(model: SdeModel, eps: float, eta_t: float, t: float, x) -> float:
    """Drift with the large-jump compensation removed:
    a(eta_t, x) - int_{|z|>eps} c(t, x, z) nu_{eta_t}(dz)."""
    if eps <= 0:
        raise ModelError("eps must be positive")
    base = float(model.drift(eta_t, np.asarray(x, dtype=float)))
    if model.compensator_vanishes:
        return base
    return base - compensator_density(model, eps, t, x, nu_time=eta_t)


def compensator_density(model: SdeModel, eps: float, t: float, x,
                        nu_time: Optional[float] = None) -> float:
    """Pointwise large-jump compensator int_{|z|>eps} c(t,x,z) nu_s(dz)."""
    s = t if nu_time is None else nu_time
    if model.compensator_vanishes:
        return 0.0
    mult = model.jump_structure
    if mult is not None and mult.f_is_identity:
        return (float(mult.cbar(t, np.asarray(x, dtype=float)))
                * measure.tail_signed_moment(model.kernel, s, eps, p=1.0))
    z_low, z_high = model.kernel.support
    f = lambda z: float(model.jump_coeff(t, x, z)) * float(model.kernel.density(s, np.asarray(z)))
    return measure._quad_segments(f, [(z_low, -eps), (eps, z_high)])


def step_compensator(model: SdeModel, eps: float, x, t0: float, t1: float) -> float:
    """Large-jump compensator integrated over one step,
    int_{t0}^{t1} int_{|z|>eps} c(s, x, z) nu_s(dz) ds with the state frozen."""
    if model.compensator_vanishes or t1 <= t0:
        return 0.0
    kernel = model.kernel
    mult = model.jump_structure
    if (mult is not None and mult.f_is_identity and model.c_time_independent
            and kernel.factorised):
        factor = kernel.time_factor or ConstantFactor(1.0)
        per_kappa = _per_kappa_signed_tail(kernel, eps)
        return float(mult.cbar(t0, np.asarray(x, dtype=float))) * per_kappa * factor.integral(t0, t1)
    return measure._simpson_refine(
        lambda s: compensator_density(model, eps, s, x), t0, t1, tol=1e-11
    )


def _per_kappa_signed_tail(kernel, eps: float) -> float:
    if kernel.closed_forms is not None:
        return kernel.closed_forms.outside_signed_moment(eps, 1.0)
    t_ref = 1.0
    return measure.tail_signed_moment(kernel, t_ref, eps, 1.0) / kernel.kappa(t_ref)


def _per_kappa_inside_square(kernel, eps: float) -> float:
    if kernel.closed_forms is not None:
        return kernel.closed_forms.inside_abs_moment(eps, 2.0)
    t_ref = 1.0
    return measure.truncated_moment(kernel, t_ref, eps, 2.0, "inside") / kernel.kappa(t_ref)


def small_jump_variance(model: SdeModel, eps: float, x, t0: float, t1: float) -> float:
    """Variance of the substituted small-jump integral over [t0, t1] at frozen
    state x: int_{t0}^{t1} int_{|z|<eps} c^2(s, x, z) nu_s(dz) ds."""
    if not 0.0 <= t0 <= t1:
        raise ModelError("need 0 <= t0 <= t1")
    var = _small_jump_variance_vec(model, eps, np.asarray([x], dtype=float), t0, t1)[0]
    if var < 0.0:
        if var < NEGATIVE_VARIANCE_TOL:
            warnings.warn(f"clamping negative small-jump variance {var:.3e}")
        var = 0.0
    return float(var)


def _small_jump_variance_vec(model: SdeModel, eps: float, x: np.ndarray,
                             t0: float, t1: float) -> np.ndarray:
    kernel = model.kernel
    strategy = model.small_jump_strategy
    if strategy == "multiplicative":
        mult = model.jump_structure
        if mult.f_is_identity:
            per_kappa = _per_kappa_inside_square(kernel, eps)
        else:
            t_ref = max(t1, 1e-9)
            z_low, z_high = kernel.support
            g = lambda z: float(mult.f(z)) ** 2 * float(kernel.density(t_ref, np.asarray(z))) / kernel.kappa(t_ref)
            per_kappa = measure._quad_segments(g, [(max(z_low, -eps), 0.0), (0.0, min(z_high, eps))])
        factor = kernel.time_factor or ConstantFactor(1.0)
        time_part = factor.integral(t0, t1)
        if model.c_time_independent:
            cbar = np.asarray(mult.cbar(t0, x), dtype=float)
            return cbar ** 2 * per_kappa * time_part
        out = np.empty(x.shape)
        for i, xi in np.ndenumerate(x):
            val, _ = integrate.quad(
                lambda s: float(mult.cbar(s, xi)) ** 2 * float((kernel.time_factor or ConstantFactor(1.0))(s)),
                t0, t1, epsabs=1e-12)
            out[i] = val * per_kappa
        return out
    if strategy == "arctan_hybrid":
        # c(t, x, z) = arctan(x z) against the 1/|z| density: per unit time the
        # variance is 2 * int_0^{eps|x|} arctan(u)^2 / u du
        return 2.0 * (t1 - t0) * arctan_sq_integral(eps * np.abs(x))
    # general: nested quadrature, split at z = 0
    z_low, z_high = kernel.support
    out = np.empty(np.asarray(x, dtype=float).shape)
    for i, xi in np.ndenumerate(np.asarray(x, dtype=float)):
        def inner(s):
            g = lambda z: float(model.jump_coeff(s, xi, z)) ** 2 * float(kernel.density(s, np.asarray(z)))
            return measure._quad_segments(
                g, [(max(z_low, -eps), 0.0), (0.0, min(z_high, eps))], abs_tol=1e-12)
        val, _ = integrate.quad(inner, t0, t1, epsabs=1e-11, limit=100)
        out[i] = val
    return out


def small_jump_std(model: SdeModel, eps: float, x: np.ndarray,
                   t0: float, t1: float) -> np.ndarray:
    var = _small_jump_variance_vec(model, eps, np.asarray(x, dtype=float), t0, t1)
    return np.sqrt(np.maximum(var, 0.0))


# -- the arctan hybrid -------------------------------------------------------

def _arctan_sq_series_coeffs(order: int = 11) -> np.ndarray:
    # coefficients c_m of arctan(z)^2 = sum_m c_m z^(2m+2), from the degree-11
    # Taylor polynomial of arctan
    n_terms = (order + 1) // 2
    coeffs = np.zeros(2 * n_terms - 1)
    for i in range(n_terms):
        for j in range(n_terms):
            coeffs[i + j] += ((-1.0) ** (i + j)) / ((2 * i + 1) * (2 * j + 1))
    return coeffs


_ATAN_SQ_COEFFS = _arctan_sq_series_coeffs()
# integral of arctan(z)^2/z from 0 to w, termwise: sum c_m w^(2m+2)/(2m+2)
_ATAN_INT_COEFFS = _ATAN_SQ_COEFFS / (2.0 * np.arange(_ATAN_SQ_COEFFS.size) + 2.0)
_ATAN_INT_AT_TAU = float(
    np.polyval(_ATAN_INT_COEFFS[::-1], ARCTAN_TAU ** 2) * ARCTAN_TAU ** 2
)


def _arctan_int_series(w: np.ndarray) -> np.ndarray:
    w2 = w * w
    return np.polyval(_ATAN_INT_COEFFS[::-1], w2) * w2


def arctan_sq_integral(w) -> np.ndarray:
    """H(w) = int_0^w arctan(u)^2 / u du, vectorised.

    Below the switch point tau = 1/2 the order-11 Taylor series of arctan is
    integrated termwise (worst-case truncation error about (1/2)^13/13, i.e.
    1e-5 relative); beyond tau the series value at tau is completed with a
    composite 1/3-Simpson rule on [tau, w] using 100 panels.
    """
    w = np.asarray(w, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    out = np.empty(w.shape)
    small = w < ARCTAN_TAU
    out[small] = _arctan_int_series(w[small])
    big = ~small
    if np.any(big):
        wb = w[big]
        m = ARCTAN_SIMPSON_PANELS
        # per-entry grids on [tau, w]; integrand arctan(u)^2/u is smooth there
        frac = np.arange(m + 1) / m
        grid = ARCTAN_TAU + np.outer(wb - ARCTAN_TAU, frac)
        vals = np.arctan(grid) ** 2 / grid
        weights = np.ones(m + 1)
        weights[1:-1:2] = 4.0
        weights[2:-1:2] = 2.0
        h = (wb - ARCTAN_TAU) / m
        out[big] = _ATAN_INT_AT_TAU + h / 3.0 * (vals @ weights)
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def psi_p_evaluate(model: SdeModel, t: float, p: int) -> float:
    """Jump-moment diagnostic
    (int Lbar^2 nu_t)^(p/2) + int Lbar^p nu_t built from the Lipschitz bound."""
    lbar = model.rate_meta.c_lip_bound
    if lbar is None:
        raise ModelError("rate_meta.c_lip_bound is required for the diagnostic")
    kernel = model.kernel
    z_low, z_high = kernel.support

    def moment(q):
        f = lambda z: float(lbar(t, z)) ** q * float(kernel.density(t, np.asarray(z)))
        return measure._quad_segments(f, [(z_low, 0.0), (0.0, z_high)], abs_tol=1e-12)

    m2 = moment(2)
    mp = moment(p)
    return m2 ** (p / 2.0) + mp


def delta_diagnostic(model: SdeModel, eps: float, n: int,
                     paths: np.ndarray, p: Optional[int] = None,
                     horizon: float = 1.0) -> float:
    """Monte Carlo estimate of the substitution-quality functional: the
    root-sum-square over steps of E[(step moment ratio)^(1/p)].

    `paths` has shape (n, m): paths[k] holds m sampled states at the left
    endpoint of step k+1.
    """
    p = model.rate_meta.p if p is None else p
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    if paths.shape[0] != n:
        raise ModelError("paths must supply one state row per step")
    mult = model.jump_structure
    total = 0.0
    dt = horizon / n
    for k in range(n):
        x = paths[k]
        if mult is not None and model.c_time_independent:
            if mult.f_is_identity:
                num = measure.truncated_moment(model.kernel, dt * k, eps, p + 2.0, "inside")
                den = measure.truncated_moment(model.kernel, dt * k, eps, 2.0, "inside")
            else:
                num, den = _f_moment_pair(model, eps, p)
            if den <= 0.0:
                warnings.warn(f"zero small-jump mass at step {k + 1}; step excluded")
                continue
            ratios = np.abs(np.asarray(mult.cbar(dt * k, x), dtype=float)) ** p * (num / den)
        else:
            t0, t1 = k * dt, (k + 1) * dt
            num = np.array([_general_step_moment(model, eps, xi, t0, t1, p + 2.0) for xi in x])
            den = np.array([_general_step_moment(model, eps, xi, t0, t1, 2.0) for xi in x])
            if np.any(den <= 0.0):
                warnings.warn(f"zero small-jump mass at step {k + 1}; step excluded")
                continue
            ratios = num / den
        total += float(np.mean(ratios ** (1.0 / p))) ** 2
    return math.sqrt(total)


def _f_moment_pair(model, eps, p):
    kernel = model.kernel
    z_low, z_high = kernel.support
    mult = model.jump_structure
    segs = [(max(z_low, -eps), 0.0), (0.0, min(z_high, eps))]
    num = measure._quad_segments(
        lambda z: abs(float(mult.f(z))) ** (p + 2) * float(kernel.density(0.0, np.asarray(z))), segs)
    den = measure._quad_segments(
        lambda z: float(mult.f(z)) ** 2 * float(kernel.density(0.0, np.asarray(z))), segs)
    return num, den


def _general_step_moment(model, eps, x, t0, t1, q):
    kernel = model.kernel
    z_low, z_high = kernel.support

    def inner(s):
        g = lambda z: abs(float(model.jump_coeff(s, x, z))) ** q * float(kernel.density(s, np.asarray(z)))
        return measure._quad_segments(g, [(max(z_low, -eps), 0.0), (0.0, min(z_high, eps))], abs_tol=1e-12)

    val, _ = integrate.quad(inner, t0, t1, epsabs=1e-12, limit=60)
    return val


# ---------------------------------------------------------------------------
# coefficient expression grammar
# ---------------------------------------------------------------------------

_ALLOWED_FUNCS = {
    "sin": np.sin, "cos": np.cos, "arctan": np.arctan, "atan": np.arctan,
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs,
}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
    ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub,
    ast.UAdd,
)


def compile_coefficient(expr: str, variables: tuple) -> Callable:
    """Compile a small arithmetic expression over the given variables into a
    vectorised callable. Only +-*/**, the listed functions, numbers, and the
    named variables are admitted."""
    tree = ast.parse(expr, mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ModelError(f"disallowed syntax in coefficient: {ast.dump(node)[:40]}")
        if isinstance(node, ast.Name) and node.id not in _ALLOWED_FUNCS and node.id not in variables:
            raise ModelError(f"unknown name {node.id!r} in coefficient expression")
        if isinstance(node, ast.Call) and (
                not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_FUNCS):
            raise ModelError("only the whitelisted functions may be called")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ModelError("only numeric literals are allowed")
    code = compile(tree, "<coefficient>", "eval")

    def fn(*args):
        scope = dict(zip(variables, args))
        scope.update(_ALLOWED_FUNCS)
        return eval(code, {"__builtins__": {}}, scope)

    fn.expression = expr
    return fn


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _abs_z(t, z):
    return np.abs(z)


def preset_strong_p_sweep(p: int = 2) -> SdeModel:
    """dX = cos(X) dt + int sin(X-) z Ntilde(ds,dz), symmetric 1-truncated
    1/2-stable noise. All rate hypotheses hold with gamma = zeta = 1."""
    kernel = truncated_stable(alpha=0.5, b=1.0)
    return SdeModel(
        drift=lambda t, x: np.cos(x),
        diffusion=lambda t, x: np.zeros_like(np.asarray(x, dtype=float)),
        jump_coeff=lambda t, x, z: np.sin(x) * z,
        kernel=kernel,
        x0=0.0,
        jump_structure=Multiplicative(lambda t, x: np.sin(x), lambda z: z, True),
        rate_meta=RateHypotheses(gamma=1.0, zeta=1.0, p=p, sublinear=True,
                                 c_lip_bound=_abs_z),
        ar_coupling_density=True,
        name="strong_p_sweep",
    )


def preset_low_integrability(rho: float = -0.75, p: int = 2) -> SdeModel:
    """dX = sin(X) dt + int cos(X-) z Ntilde, 10-truncated 1/2-stable noise
    modulated by t**rho; rho < 0 degrades the time integrability."""
    kernel = time_modulated_stable(alpha=0.5, b=10.0, rho=rho)
    zeta = min(1.0, -1.0 / rho - 1.0 - 1e-9) if rho < -0.5 else 1.0
    return SdeModel(
        drift=lambda t, x: np.sin(x),
        diffusion=lambda t, x: np.zeros_like(np.asarray(x, dtype=float)),
        jump_coeff=lambda t, x, z: np.cos(x) * z,
        kernel=kernel,
        x0=1.0,
        jump_structure=Multiplicative(lambda t, x: np.cos(x), lambda z: z, True),
        rate_meta=RateHypotheses(gamma=1.0, zeta=zeta, p=p, sublinear=True,
                                 c_lip_bound=_abs_z),
        ar_coupling_density=True,
        name="low_integrability",
    )


def preset_weak_multiplicative(alpha: float = 1.5, horizon: float = 1.0,
                               x_start: float = 10.0) -> SdeModel:
    """dX = -2X dt + int sin(X-) z Ntilde, 10-truncated alpha-stable noise,
    equipped with the quadratic terminal statistic and its exact solution."""
    kernel = truncated_stable(alpha=alpha, b=10.0)
    m2 = 2.0 * 10.0 ** (2.0 - alpha) / (2.0 - alpha)
    T = horizon

    def u_exact(t, x):
        return (1.0 - 0.5 * np.exp(T - t)) * np.asarray(x, dtype=float) ** 2

    def phi(x):
        return 0.5 * np.asarray(x, dtype=float) ** 2

    def source_g(t, x):
        # G = du/dt + a du/dx + jump remainder; u is quadratic so the jump
        # remainder is exactly (1 - exp(T-t)/2) sin(x)^2 m2
        x = np.asarray(x, dtype=float)
        k = 1.0 - 0.5 * np.exp(T - t)
        return 0.5 * np.exp(T - t) * x ** 2 - 4.0 * k * x ** 2 + k * np.sin(x) ** 2 * m2

    return SdeModel(
        drift=lambda t, x: -2.0 * np.asarray(x, dtype=float),
        diffusion=lambda t, x: np.zeros_like(np.asarray(x, dtype=float)),
        jump_coeff=lambda t, x, z: np.sin(x) * z,
        kernel=kernel,
        x0=x_start,
        jump_structure=Multiplicative(lambda t, x: np.sin(x), lambda z: z, True),
        rate_meta=RateHypotheses(gamma=1.0, zeta=1.0, p=4, sublinear=True,
                                 c_lip_bound=_abs_z),
        weak_spec=WeakErrorSpec(phi, source_g, u_exact),
        ar_coupling_density=True,
        name="weak_multiplicative",
    )


def preset_weak_arctan(horizon: float = 1.0, x_start: float = 10.0) -> SdeModel:
    """dX = -2X dt + int arctan(X- z) Ntilde against the 1-truncated 0-stable
    density 1/|z|: a jump coefficient with no underlying process increment."""
    kernel = truncated_stable(alpha=0.0, b=1.0)

    def u_exact(t, x):
        return np.sin(np.asarray(x, dtype=float))

    def phi(x):
        return np.sin(np.asarray(x, dtype=float))

    def source_g(t, x):
        x = np.asarray(x, dtype=float)
        return -2.0 * x * np.cos(x) + 2.0 * np.sin(x) * (
            np.log(2.0) - np.log(np.sqrt(x ** 2 + 1.0) + 1.0))

    model = SdeModel(
        drift=lambda t, x: -2.0 * np.asarray(x, dtype=float),
        diffusion=lambda t, x: np.zeros_like(np.asarray(x, dtype=float)),
        jump_coeff=lambda t, x, z: np.arctan(np.asarray(x, dtype=float) * z),
        kernel=kernel,
        x0=x_start,
        rate_meta=RateHypotheses(gamma=1.0, zeta=1.0, p=4, sublinear=True,
                                 c_lip_bound=_abs_z),
        weak_spec=WeakErrorSpec(phi, source_g, u_exact),
        small_jump_strategy="arctan_hybrid",
        ar_coupling_density=True,
        name="weak_arctan",
    )
    return model


def preset_subordinator_lower_bound(alpha: float = 0.5, p: int = 2) -> SdeModel:
    """dX = X- dL with L a 1-truncated alpha-stable subordinator (alpha < 1).
    In compensated form: drift a(x) = m1 x, jump coefficient c = x z on (0, 1]."""
    if not 0.0 < alpha < 1.0:
        raise ModelError("subordinator preset needs alpha in (0, 1)")
    kernel = truncated_stable(alpha=alpha, b=1.0, z_minus=0.0, z_plus=1.0)
    m1 = 1.0 / (1.0 - alpha)  # int_0^1 z nu(dz)
    return SdeModel(
        drift=lambda t, x: m1 * np.asarray(x, dtype=float),
        diffusion=lambda t, x: np.zeros_like(np.asarray(x, dtype=float)),
        jump_coeff=lambda t, x, z: np.asarray(x, dtype=float) * z,
        kernel=kernel,
        x0=1.0,
        jump_structure=Multiplicative(lambda t, x: np.asarray(x, dtype=float),
                                      lambda z: z, True),
        rate_meta=RateHypotheses(gamma=1.0, zeta=1.0, p=p, sublinear=True,
                                 c_lip_bound=_abs_z),
        ar_coupling_density=True,
        name="subordinator_lower_bound",
    )


def preset_fiber(**params) -> SdeModel:
    from .appfiber import FiberParams, build_fiber_model
    return build_fiber_model(FiberParams(**params))


MODEL_PRESETS = {
    "strong_p_sweep": preset_strong_p_sweep,
    "low_integrability": preset_low_integrability,
    "weak_multiplicative": preset_weak_multiplicative,
    "weak_arctan": preset_weak_arctan,
    "subordinator_lower_bound": preset_subordinator_lower_bound,
    "fiber": preset_fiber,
}


def build_preset(name: str, **params) -> SdeModel:
    if name not in MODEL_PRESETS:
        raise ModelError(f"unknown preset {name!r}; known: {sorted(MODEL_PRESETS)}")
    return MODEL_PRESETS[name](**params)


def model_from_expressions(drift: str, diffusion: str, jump: str,
                           kernel: CompensatorKernel, x0: float = 0.0,
                           **meta) -> SdeModel:
    """Build a model from coefficient expressions in t, x (and z for the jump)."""
    a = compile_coefficient(drift, ("t", "x"))
    b = compile_coefficient(diffusion, ("t", "x"))
    c = compile_coefficient(jump, ("t", "x", "z"))
    return SdeModel(
        drift=lambda t, x: np.broadcast_to(np.asarray(a(t, x), dtype=float),
                                           np.asarray(x, dtype=float).shape).copy()
        if np.ndim(x) else float(a(t, x)),
        diffusion=lambda t, x: np.broadcast_to(np.asarray(b(t, x), dtype=float),
                                               np.asarray(x, dtype=float).shape).copy()
        if np.ndim(x) else float(b(t, x)),
        jump_coeff=lambda t, x, z: c(t, x, z),
        kernel=kernel, x0=x0, small_jump_strategy="general", **meta)
