"""Time-inhomogeneous jump compensator kernels and the integrals built on them.

A kernel represents a family of Levy-type measures nu_t(dz) with Lebesgue
density on a truncated support. Everything downstream (jump-time samplers,
the discretisation schemes, the Monte Carlo harness) consumes the kernel only
through the operations defined here: tail intensities, cumulative intensities
in time, truncated absolute moments, and conditional jump-size quantiles.

Closed forms are attached for the truncated power-law family (density
kappa(t)|z|^(-1-alpha) on a possibly asymmetric truncated support); every
other kernel falls back to adaptive quadrature split at the non-smooth points
z = 0 and z = +-eps, and to monotone bisection for quantiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate

QUAD_ABS_TOL = 1e-10
BISECT_X_TOL = 1e-12
TIME_BISECT_TOL = 1e-12


class MeasureError(ValueError):
    """An ill-posed kernel integral (bad arguments, empty mass, ...)."""


class DivergentIntegralError(MeasureError):
    """A moment integral that genuinely diverges on the requested region."""


class QuadratureError(MeasureError):
    """Adaptive quadrature failed to reach the requested tolerance."""


# ---------------------------------------------------------------------------
# time factors phi(t) for multiplicatively time-dependent kernels
# ---------------------------------------------------------------------------

class TimeFactor:
    """Multiplicative time modulation with an analytic antiderivative."""

    def __call__(self, t):
        raise NotImplementedError

    def primitive(self, t):
        """Antiderivative P(t) = integral of phi over [0, t], vectorised."""
        raise NotImplementedError

    def integral(self, t0: float, t1: float) -> float:
        return float(self.primitive(t1) - self.primitive(t0))

    def inverse_primitive(self, area):
        """Smallest t with P(t) = area; None means bisection is required."""
        return None


class ConstantFactor(TimeFactor):
    def __init__(self, value: float = 1.0):
        if value < 0:
            raise MeasureError("time factor must be nonnegative")
        self.value = float(value)

    def __call__(self, t):
        return self.value * np.ones_like(np.asarray(t, dtype=float))

    def primitive(self, t):
        return self.value * np.asarray(t, dtype=float)

    def inverse_primitive(self, area):
        return np.asarray(area, dtype=float) / self.value


class PowerFactor(TimeFactor):
    """phi(t) = t**rho. Integrable at 0 only for rho > -1."""

    def __init__(self, rho: float):
        self.rho = float(rho)

    def __call__(self, t):
        return np.asarray(t, dtype=float) ** self.rho

    def primitive(self, t):
        t = np.asarray(t, dtype=float)
        if self.rho <= -1.0 and np.any(t == 0.0):
            # the primitive is only defined up to a constant away from 0
            if np.all(t == 0.0):
                return np.zeros_like(t)
            raise MeasureError(
                f"time factor t**{self.rho} is not integrable at t = 0"
            )
        if self.rho == -1.0:
            return np.log(t)
        return t ** (self.rho + 1.0) / (self.rho + 1.0)

    def integral(self, t0, t1):
        if self.rho <= -1.0 and t0 == 0.0 and t1 > 0.0:
            raise MeasureError(
                f"time factor t**{self.rho} is not integrable at t = 0"
            )
        if t0 == t1:
            return 0.0
        return float(self.primitive(t1) - self.primitive(t0))

    def inverse_primitive(self, area):
        if self.rho <= -1.0:
            return None
        a = np.asarray(area, dtype=float)
        return ((self.rho + 1.0) * a) ** (1.0 / (self.rho + 1.0))


class CappedPowerFactor(TimeFactor):
    """phi(t) = (min(t, t_star))**(q-1): power growth, then a plateau."""

    def __init__(self, q: float, t_star: float):
        if t_star <= 0:
            raise MeasureError("t_star must be positive")
        if q <= 1:
            raise MeasureError("q must exceed 1")
        self.q = float(q)
        self.t_star = float(t_star)

    def __call__(self, t):
        return np.minimum(np.asarray(t, dtype=float), self.t_star) ** (self.q - 1.0)

    def primitive(self, t):
        t = np.asarray(t, dtype=float)
        q, ts = self.q, self.t_star
        below = np.minimum(t, ts) ** q / q
        above = np.maximum(t - ts, 0.0) * ts ** (q - 1.0)
        return below + above

    def inverse_primitive(self, area):
        a = np.asarray(area, dtype=float)
        q, ts = self.q, self.t_star
        knee = ts ** q / q
        below = (q * np.minimum(a, knee)) ** (1.0 / q)
        above = np.maximum(a - knee, 0.0) / ts ** (q - 1.0)
        return below + above


# ---------------------------------------------------------------------------
# closed forms for the truncated power-law family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedStableFamily:
    """Closed-form integrals of |z|^(-1-alpha) on [-z_minus, z_plus], per unit
    of the time factor.

    alpha = 0 is admitted (density 1/|z|) and handled through log branches.
    """

    alpha: float
    z_minus: float
    z_plus: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 2.0:
            raise MeasureError("alpha must lie in [0, 2)")
        if self.z_minus < 0 or self.z_plus < 0 or self.z_minus + self.z_plus == 0:
            raise MeasureError("truncation bounds must be nonnegative, not both zero")

    # one-sided mass of z^(-1-alpha) over [lo, hi], 0 < lo
    def _side_mass(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        if self.alpha == 0.0:
            return math.log(hi / lo)
        return (lo ** -self.alpha - hi ** -self.alpha) / self.alpha

    # one-sided integral of z^(p-1-alpha) over [lo, hi], 0 <= lo
    def _side_moment(self, lo: float, hi: float, p: float) -> float:
        if hi <= lo:
            return 0.0
        e = p - self.alpha
        if lo == 0.0:
            if e <= 0.0:
                raise DivergentIntegralError(
                    f"moment of order {p} diverges at 0 for alpha={self.alpha}"
                )
            return hi ** e / e
        if e == 0.0:
            return math.log(hi / lo)
        return (hi ** e - lo ** e) / e

    def tail_mass(self, eps: float) -> float:
        return self._side_mass(eps, self.z_minus) + self._side_mass(eps, self.z_plus)

    def inside_abs_moment(self, eps: float, p: float) -> float:
        lo_m = min(eps, self.z_minus)
        lo_p = min(eps, self.z_plus)
        return self._side_moment(0.0, lo_m, p) + self._side_moment(0.0, lo_p, p)

    def outside_abs_moment(self, eps: float, p: float) -> float:
        return (self._side_moment(min(eps, self.z_minus), self.z_minus, p)
                + self._side_moment(min(eps, self.z_plus), self.z_plus, p))

    def outside_signed_moment(self, eps: float, p: float) -> float:
        """Integral of sign(z)|z|^p over {|z| > eps}; nonzero when asymmetric."""
        return (self._side_moment(min(eps, self.z_plus), self.z_plus, p)
                - self._side_moment(min(eps, self.z_minus), self.z_minus, p))

    def cdf(self, eps: float, x) -> np.ndarray:
        """Conditional CDF of a jump size given |Z| > eps."""
        total = self.tail_mass(eps)
        if total <= 0.0:
            raise MeasureError("no mass beyond eps: conditional law undefined")
        x = np.asarray(x, dtype=float)
        m_minus = self._side_mass(eps, self.z_minus)
        out = np.empty(x.shape, dtype=float)
        neg = x < -eps
        mid = (x >= -eps) & (x < eps)
        pos = x >= eps
        return self._cdf_fill(out, x, neg, mid, pos, m_minus, total, eps)

    def _cdf_fill(self, out, x, neg, mid, pos, m_minus, total, eps):
        # negative branch: mass of [-z_minus, x]
        xn = -x[neg]
        vals = np.zeros_like(xn)
        inside = xn <= self.z_minus
        if inside.any():
            if self.alpha == 0.0:
                vals[inside] = np.log(self.z_minus / xn[inside])
            else:
                vals[inside] = (xn[inside] ** -self.alpha
                                - self.z_minus ** -self.alpha) / self.alpha
        out[neg] = vals / total
        out[mid] = m_minus / total
        # positive branch: m_minus + mass of [eps, x]
        xp = np.minimum(x[pos], self.z_plus)
        if self.alpha == 0.0:
            band = np.log(np.maximum(xp, eps) / eps)
        else:
            band = (eps ** -self.alpha - np.maximum(xp, eps) ** -self.alpha) / self.alpha
        out[pos] = (m_minus + band) / total
        return np.clip(out, 0.0, 1.0)

    def quantile(self, eps: float, y) -> np.ndarray:
        """Generalised inverse of the conditional CDF, y in (0, 1]."""
        total = self.tail_mass(eps)
        if total <= 0.0:
            raise MeasureError("no mass beyond eps: conditional law undefined")
        y = np.asarray(y, dtype=float)
        if np.any((y <= 0.0) | (y > 1.0)):
            raise MeasureError("quantile level must lie in (0, 1]")
        m_minus = self._side_mass(eps, self.z_minus)
        target = y * total
        out = np.empty(y.shape, dtype=float)
        neg = target <= m_minus
        pos = ~neg
        if self.alpha == 0.0:
            if neg.any():
                out[neg] = -self.z_minus * np.exp(-target[neg])
            out[pos] = eps * np.exp(target[pos] - m_minus)
        else:
            a = self.alpha
            if neg.any():
                out[neg] = -(target[neg] * a + self.z_minus ** -a) ** (-1.0 / a)
            out[pos] = (eps ** -a - a * (target[pos] - m_minus)) ** (-1.0 / a)
        return out

    def truncated(self, bound: float) -> "TruncatedStableFamily":
        return TruncatedStableFamily(
            self.alpha, min(self.z_minus, bound), min(self.z_plus, bound)
        )


# ---------------------------------------------------------------------------
# the kernel itself
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompensatorKernel:
    """The measure family nu_t(dz) = phi(t) * base(z) dz (or a general density).

    Fields mirror what the samplers and schemes need: the density, truncation
    bounds, an optional multiplicative time factor (which makes the
    conditional jump-size law time-homogeneous), the Blumenthal-Getoor index
    of the dominating measure, and optional closed forms.
    """

    base_density: Optional[Callable] = None
    support: tuple = (-1.0, 1.0)
    time_factor: Optional[TimeFactor] = None
    density_tz: Optional[Callable] = None
    bg_index: float = 0.0
    closed_forms: Optional[TruncatedStableFamily] = None

    def __post_init__(self):
        z_low, z_high = self.support
        if z_low > 0 or z_high < 0:
            raise MeasureError("support must contain 0 between its bounds")
        if self.base_density is None and self.density_tz is None:
            raise MeasureError("a density is required")
        if not 0.0 <= self.bg_index <= 2.0:
            raise MeasureError("Blumenthal-Getoor index must lie in [0, 2]")

    # -- evaluation ---------------------------------------------------------

    def density(self, t, z):
        z = np.asarray(z, dtype=float)
        if self.density_tz is not None:
            vals = np.asarray(self.density_tz(t, z), dtype=float)
        else:
            phi = 1.0 if self.time_factor is None else float(self.time_factor(t))
            vals = phi * np.asarray(self.base_density(z), dtype=float)
        z_low, z_high = self.support
        return np.where((z >= z_low) & (z <= z_high), vals, 0.0)

    @property
    def factorised(self) -> bool:
        return self.density_tz is None

    def kappa(self, t) -> float:
        if not self.factorised:
            raise MeasureError("kernel does not factorise in time")
        return 1.0 if self.time_factor is None else float(self.time_factor(t))

    def truncate_support(self, bound: float) -> "CompensatorKernel":
        """Same family with |z| additionally truncated at `bound`."""
        z_low, z_high = self.support
        new_support = (max(z_low, -bound), min(z_high, bound))
        cf = self.closed_forms.truncated(bound) if self.closed_forms else None
        return replace(self, support=new_support, closed_forms=cf)

    def has_finite_activity(self, t: float = 0.0) -> bool:
        try:
            total = tail_intensity(self, t, 1e-12)
        except (DivergentIntegralError, QuadratureError):
            return False
        probe = tail_intensity(self, t, 1e-10)
        # a genuinely finite measure barely grows as the cutoff shrinks
        return np.isfinite(total) and total <= 2.0 * probe + 1.0


# -- factory functions for the presets the experiments use ------------------

def truncated_stable(alpha: float, b: float, kappa: Optional[TimeFactor] = None,
                     z_minus: Optional[float] = None,
                     z_plus: Optional[float] = None) -> CompensatorKernel:
    """Truncated power-law kernel kappa(t)|z|^(-1-alpha) 1_{-z_minus<=z<=z_plus}.

    `b` is the symmetric truncation; pass z_minus/z_plus to override either
    side (a zero side gives a one-sided, subordinator-type kernel).
    """
    zm = b if z_minus is None else z_minus
    zp = b if z_plus is None else z_plus
    family = TruncatedStableFamily(alpha, zm, zp)

    def base(z):
        z = np.asarray(z, dtype=float)
        az = np.abs(z)
        with np.errstate(divide="ignore"):
            vals = np.where(az > 0.0, az ** (-1.0 - alpha), np.inf)
        return np.where((z >= -zm) & (z <= zp), vals, 0.0)

    return CompensatorKernel(
        base_density=base,
        support=(-zm, zp),
        time_factor=kappa,
        bg_index=alpha,
        closed_forms=family,
    )


def time_modulated_stable(alpha: float, b: float, rho: float) -> CompensatorKernel:
    return truncated_stable(alpha, b, kappa=PowerFactor(rho))


def fiber_kernel(alpha: float, z_minus: float, z_plus: float,
                 t_star: float, q: float) -> CompensatorKernel:
    return truncated_stable(alpha, b=max(z_minus, z_plus),
                            kappa=CappedPowerFactor(q, t_star),
                            z_minus=z_minus, z_plus=z_plus)


KERNEL_PRESETS = {
    "truncated_stable": truncated_stable,
    "time_modulated_stable": time_modulated_stable,
    "fiber_kernel": fiber_kernel,
}


# ---------------------------------------------------------------------------
# quadrature fallbacks
# ---------------------------------------------------------------------------

def _quad_segments(f, segments, abs_tol=QUAD_ABS_TOL):
    total = 0.0
    for lo, hi in segments:
        if hi <= lo:
            continue
        val, err = integrate.quad(f, lo, hi, epsabs=abs_tol, epsrel=1e-11, limit=200)
        if not np.isfinite(val):
            raise DivergentIntegralError("quadrature produced a non-finite value")
        if err > max(abs_tol, 1e-8 * abs(val)) * 100:
            raise QuadratureError(
                f"quadrature error estimate {err:.2e} too large on [{lo}, {hi}]"
            )
        total += val
    return total


def _z_segments(kernel: CompensatorKernel, eps: float, region: str):
    z_low, z_high = kernel.support
    if region == "outside":
        return [(z_low, min(-eps, 0.0)), (max(eps, 0.0), z_high)]
    if region == "inside":
        return [(max(z_low, -eps), 0.0), (0.0, min(z_high, eps))]
    raise MeasureError(f"unknown region {region!r}")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def tail_intensity(kernel: CompensatorKernel, t: float, eps: float) -> float:
    """lambda_eps(t): total jump intensity beyond the cutoff at time t."""
    if eps <= 0:
        raise MeasureError("eps must be positive")
    if kernel.closed_forms is not None:
        return kernel.kappa(t) * kernel.closed_forms.tail_mass(eps)
    f = lambda z: float(kernel.density(t, np.asarray(z)))
    return _quad_segments(f, _z_segments(kernel, eps, "outside"))


def cumulative_intensity(kernel: CompensatorKernel, eps: float,
                         t0: float, t1: float) -> float:
    """Integral of the tail intensity over [t0, t1]."""
    if not 0.0 <= t0 <= t1:
        raise MeasureError("need 0 <= t0 <= t1")
    if t0 == t1:
        return 0.0
    if kernel.factorised:
        tail = (kernel.closed_forms.tail_mass(eps)
                if kernel.closed_forms is not None
                else tail_intensity(kernel, t0, eps) / kernel.kappa(t0))
        factor = kernel.time_factor or ConstantFactor(1.0)
        return tail * factor.integral(t0, t1)
    return _simpson_refine(lambda s: tail_intensity(kernel, s, eps), t0, t1)


def cumulative_intensity_grid(kernel: CompensatorKernel, eps: float,
                              t_edges: np.ndarray) -> np.ndarray:
    """Per-interval cumulative intensities for consecutive grid edges."""
    t_edges = np.asarray(t_edges, dtype=float)
    if kernel.factorised and kernel.closed_forms is not None:
        factor = kernel.time_factor or ConstantFactor(1.0)
        prim = factor.primitive(t_edges)
        return kernel.closed_forms.tail_mass(eps) * np.diff(prim)
    return np.array([cumulative_intensity(kernel, eps, a, b)
                     for a, b in zip(t_edges[:-1], t_edges[1:])])


def inverse_cumulative_intensity(kernel: CompensatorKernel, eps: float,
                                 t0: float, horizon: float, area) -> np.ndarray:
    """Times s with cumulative intensity Lambda(t0, s) = area (vectorised)."""
    area = np.asarray(area, dtype=float)
    if kernel.factorised:
        tail = (kernel.closed_forms.tail_mass(eps)
                if kernel.closed_forms is not None
                else tail_intensity(kernel, max(t0, 1e-12), eps)
                / kernel.kappa(max(t0, 1e-12)))
        if tail <= 0.0:
            raise MeasureError("kernel with zero tail intensity is not invertible")
        factor = kernel.time_factor or ConstantFactor(1.0)
        target = factor.primitive(t0) + area / tail
        inv = factor.inverse_primitive(target)
        if inv is not None:
            return np.minimum(np.asarray(inv, dtype=float), horizon)
    out = np.empty(area.shape, dtype=float)
    for i, a in np.ndenumerate(area):
        out[i] = _bisect_time(
            lambda s: cumulative_intensity(kernel, eps, t0, s) - a, t0, horizon
        )
    return out


def jump_size_cdf(kernel: CompensatorKernel, t: float, eps: float, x) -> np.ndarray:
    """Conditional CDF of a jump size at time t given magnitude above eps."""
    total = tail_intensity(kernel, t, eps)
    if total <= 0.0:
        raise MeasureError("no mass beyond eps: conditional law undefined")
    if kernel.closed_forms is not None:
        return kernel.closed_forms.cdf(eps, x)
    x = np.asarray(x, dtype=float)
    z_low, z_high = kernel.support
    f = lambda z: float(kernel.density(t, np.asarray(z)))
    out = np.empty(x.shape, dtype=float)
    for i, xi in np.ndenumerate(x):
        segs = [(z_low, min(-eps, min(xi, 0.0)))]
        if xi >= eps:
            segs.append((eps, min(xi, z_high)))
        out[i] = _quad_segments(f, segs) / total
    return np.clip(out, 0.0, 1.0)


def jump_size_quantile(kernel: CompensatorKernel, t: float, eps: float, y) -> np.ndarray:
    """Q_eps(y) = inf{x : y <= G_eps(x)} for the conditional jump-size law."""
    y_arr = np.asarray(y, dtype=float)
    if np.any((y_arr <= 0.0) | (y_arr > 1.0)):
        raise MeasureError("quantile level must lie in (0, 1]")
    if kernel.closed_forms is not None:
        if kernel.closed_forms.tail_mass(eps) <= 0.0:
            raise MeasureError("eps at or beyond the truncation bound")
        return kernel.closed_forms.quantile(eps, y_arr)
    total = tail_intensity(kernel, t, eps)
    if total <= 0.0:
        raise MeasureError("eps at or beyond the truncation bound")
    z_low, z_high = kernel.support
    out = np.empty(y_arr.shape, dtype=float)
    for i, yi in np.ndenumerate(y_arr):
        g = lambda x: float(jump_size_cdf(kernel, t, eps, x)) - yi
        if g(z_high) < 0:
            out[i] = z_high
            continue
        lo, hi = z_low, z_high
        while hi - lo > BISECT_X_TOL:
            mid = 0.5 * (lo + hi)
            if g(mid) >= 0.0:
                hi = mid
            else:
                lo = mid
        out[i] = hi
    return out


def truncated_moment(kernel: CompensatorKernel, t: float, eps: float,
                     p: float, region: str = "inside") -> float:
    """Integral of |z|^p nu_t(dz) inside or outside the ball of radius eps."""
    if p < 0:
        raise MeasureError("moment order must be nonnegative")
    if eps < 0:
        raise MeasureError("eps must be nonnegative")
    if kernel.closed_forms is not None:
        fam = kernel.closed_forms
        mass = (fam.inside_abs_moment(eps, p) if region == "inside"
                else fam.outside_abs_moment(eps, p))
        return kernel.kappa(t) * mass
    f = lambda z: abs(z) ** p * float(kernel.density(t, np.asarray(z)))
    return _quad_segments(f, _z_segments(kernel, eps, region))


def tail_signed_moment(kernel: CompensatorKernel, t: float, eps: float,
                       p: float = 1.0) -> float:
    """Integral of sign(z)|z|^p nu_t(dz) over {|z| > eps} (the compensator
    building block; zero for symmetric kernels)."""
    if kernel.closed_forms is not None:
        return kernel.kappa(t) * kernel.closed_forms.outside_signed_moment(eps, p)
    f = lambda z: math.copysign(abs(z) ** p, z) * float(kernel.density(t, np.asarray(z)))
    return _quad_segments(f, _z_segments(kernel, eps, "outside"))


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _simpson_refine(f, a, b, tol=QUAD_ABS_TOL, max_level=22):
    """Composite Simpson with doubling refinement until the estimate settles."""
    n = 8
    prev = None
    for _ in range(max_level):
        xs = np.linspace(a, b, n + 1)
        ys = np.array([f(x) for x in xs])
        h = (b - a) / n
        val = h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum())
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        n *= 2
    raise QuadratureError("Simpson refinement did not converge")


def _bisect_time(g, lo, hi, tol=TIME_BISECT_TOL):
    flo, fhi = g(lo), g(hi)
    if flo > 0 or fhi < 0:
        return hi if fhi < 0 else lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi
