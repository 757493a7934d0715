"""Decay-rate models: constant, expression-based and the phenomenological model.

A model is evaluated pointwise with :func:`eval_rates` or on a whole time
array with :func:`sample_rates`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import expr
from .quadrature import QuadratureError, sine_transform

POLE_TOL = 1e-12


class PoleError(ArithmeticError):
    def __init__(self, t, pole):
        super().__init__(
            f"c(t) vanishes at t={t:.12g}; f(t) has a pole at t={pole:.12g}")
        self.t = t
        self.pole = pole


@dataclass(frozen=True)
class RateSample:
    t: float
    gamma1: float
    gamma2: float
    gamma3: float
    omega: float = 0.0


@dataclass(frozen=True)
class RateSeries:
    """Rates sampled on an array of times."""
    t: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    omega: np.ndarray

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k):
        return RateSample(float(self.t[k]), float(self.gamma1[k]), float(self.gamma2[k]),
                          float(self.gamma3[k]), float(self.omega[k]))

    def max_abs(self):
        return float(max(np.max(np.abs(a)) for a in
                         (self.gamma1, self.gamma2, self.gamma3, self.omega)))


@dataclass(frozen=True)
class Constant:
    gamma1: float
    gamma2: float
    gamma3: float
    omega: float = 0.0


@dataclass(frozen=True)
class Expressions:
    gamma1: expr.RateExpr
    gamma2: expr.RateExpr
    gamma3: expr.RateExpr
    omega: expr.RateExpr = field(default_factory=lambda: expr.Num(0.0))

    @classmethod
    def from_text(cls, gamma1, gamma2, gamma3, omega="0"):
        return cls(expr.parse(gamma1), expr.parse(gamma2), expr.parse(gamma3), expr.parse(omega))

    def texts(self):
        return tuple(expr.to_text(e) for e in (self.gamma1, self.gamma2, self.gamma3, self.omega))


@dataclass(frozen=True)
class PhenomParams:
    """Parameters of the phenomenological model.

    ``coth_scale`` selects coth(w / (coth_scale * kT)); the default 1 is the
    form with coth(w/kT). ``divide_by_omega`` uses J(w)/w in the dephasing
    integrand instead of J(w).
    """
    R: float
    N: float
    s: float
    nu: float = 1.0
    omega_c: float = 1.0
    kT: float = 0.0
    omega0: float = 0.0
    coth_scale: float = 1.0
    divide_by_omega: bool = False

    def __post_init__(self):
        if not self.R >= 0.0:
            raise ValueError("R must be non-negative")
        if not self.N >= 0.0:
            raise ValueError("N must be non-negative")
        for name in ("s", "nu", "omega_c", "coth_scale"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if not self.kT >= 0.0:
            raise ValueError("kT must be non-negative")


@dataclass(frozen=True)
class Phenomenological:
    params: PhenomParams


RateModel = Union[Constant, Expressions, Phenomenological]


def thermal_occupation(omega0: float, kT: float) -> float:
    """Mean excitation number N = 1 / (exp(omega0/kT) - 1)."""
    if kT == 0.0:
        return 0.0
    return 1.0 / math.expm1(omega0 / kT)


def f_of_t(R: float, t):
    """f(t) = -2 Re(c'(t)/c(t)) for the damped-oscillator amplitude c(t).

    With z = 1 - 2R, c(t) = exp(-t/2) B(t) where
    B = cosh(sqrt(z) t/2) + sinh(sqrt(z) t/2)/sqrt(z) (continued to cos/sin
    for z < 0), and the ratio simplifies to f = R t S / B with
    S = sinh(y)/y, y = sqrt(z) t/2. Accepts scalars or arrays.
    """
    t_arr = np.asarray(t, dtype=float)
    z = 1.0 - 2.0 * R
    y = 0.5 * math.sqrt(abs(z)) * t_arr
    with np.errstate(all="ignore"):
        if z > 0.0:
            # divide numerator and denominator by cosh(y) to avoid overflow
            th = np.where(y > 0, np.tanh(y) / np.where(y > 0, y, 1.0), 1.0)
            f = R * t_arr * th / (1.0 + 0.5 * t_arr * th)
        elif z == 0.0:
            f = R * t_arr / (1.0 + 0.5 * t_arr)
        else:
            sc = np.where(y > 0, np.sin(y) / np.where(y > 0, y, 1.0), 1.0)
            bracket = np.cos(y) + 0.5 * t_arr * sc
            bad = np.abs(bracket) < POLE_TOL
            if np.any(bad):
                tb = float(np.atleast_1d(t_arr)[np.atleast_1d(bad)][0])
                raise PoleError(tb, nearest_pole(R, tb))
            f = R * t_arr * sc / bracket
    if np.ndim(t) == 0:
        return float(f)
    return f


def pole_times(R: float, t_max: float):
    """Zeros of c(t) in [0, t_max]; empty unless R > 1/2."""
    if R <= 0.5:
        return np.array([])
    ap = math.sqrt(2.0 * R - 1.0)
    first = 2.0 * (math.pi - math.atan(ap)) / ap
    period = 2.0 * math.pi / ap
    if first > t_max:
        return np.array([])
    return first + period * np.arange(int((t_max - first) // period) + 1)


def nearest_pole(R: float, t: float) -> float:
    if R <= 0.5:
        return math.inf
    ap = math.sqrt(2.0 * R - 1.0)
    first = 2.0 * (math.pi - math.atan(ap)) / ap
    period = 2.0 * math.pi / ap
    k = max(0, round((t - first) / period))
    return first + period * k


def _omega_max(p: PhenomParams):
    return p.omega_c * max(50.0, 10.0 * p.s)


def _spectral_weight(p: PhenomParams):
    """t-independent factor of the dephasing integrand, 2 J(w) coth(...)."""
    def g(w):
        x = w / p.omega_c
        val = 2.0 * p.nu * np.exp(p.s * np.log(x) - x)
        if p.divide_by_omega:
            val = val / w
        if p.kT > 0.0:
            val = val / np.tanh(w / (p.coth_scale * p.kT))
        return val
    return g


def dephasing_gamma3(p: PhenomParams, t, epsabs=None):
    """gamma_3(t) = 2 int_0^inf J(w) coth(w/kT) sin(w t) dw, J = nu w^s/w_c^s e^{-w/w_c}.

    The integral is truncated at w_c * max(50, 10 s); the exponential cut-off
    puts the neglected tail far below the default absolute tolerance of
    1e-12 nu w_c. Accepts scalar or array ``t``.
    """
    if epsabs is None:
        epsabs = 1e-12 * p.nu * p.omega_c
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    vals = sine_transform(_spectral_weight(p), t_arr, _omega_max(p), epsabs)
    if np.ndim(t) == 0:
        return float(vals[0])
    return vals


def eval_rates(m: RateModel, t: float) -> RateSample:
    if t < 0:
        raise ValueError("rates are defined for t >= 0")
    s = sample_rates(m, np.array([t], dtype=float))
    return s[0]


def sample_rates(m: RateModel, times) -> RateSeries:
    times = np.asarray(times, dtype=float)
    if isinstance(m, Constant):
        ones = np.ones_like(times)
        return RateSeries(times, m.gamma1 * ones, m.gamma2 * ones, m.gamma3 * ones,
                          m.omega * ones)
    if isinstance(m, Expressions):
        return RateSeries(times, *(expr.evaluate(e, times) for e in
                                   (m.gamma1, m.gamma2, m.gamma3, m.omega)))
    if isinstance(m, Phenomenological):
        p = m.params
        f = f_of_t(p.R, times)
        g3 = dephasing_gamma3(p, times)
        return RateSeries(times, 2.0 * p.N * f, 2.0 * (p.N + 1.0) * f, g3,
                          np.full_like(times, p.omega0))
    raise TypeError(f"unknown rate model {type(m).__name__}")


__all__ = [
    "Constant", "Expressions", "Phenomenological", "PhenomParams", "RateModel",
    "RateSample", "RateSeries", "PoleError", "QuadratureError", "eval_rates",
    "sample_rates", "f_of_t", "dephasing_gamma3", "thermal_occupation",
    "pole_times", "nearest_pole",
]
