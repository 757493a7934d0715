"""Non-Markovianity indicators evaluated along trajectories.

Every series carries an information quantity ``values`` whose growth signals
backflow, its central-difference derivative ``d_dt`` and the detection mask
``d_dt > eps_sign``. For entropy production the quantity is the relative
entropy to the stationary state, so sigma(t) = -d_dt.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import qubit
from .conditions import Commutative, DynamicsClass, General, Unital, kappa_of
from .evolution import (KernelSeries, Trajectory, apply_map_series, integrate_kernels,
                        stationary_state)
from .qubit import DivergenceError, QubitState
from .rates import RateModel

EPS_SIGN = 1e-9
DEFAULT_ALPHA0 = 0.45

INDICATOR_IDS = ("entropy_production", "purity_rate", "trace_distance_xy", "trace_distance_z",
                 "bloch_volume", "map_eig_offdiag", "map_eig_z", "l1", "rec")


class NotApplicableError(ValueError):
    """The indicator has no meaning (or no analytic condition) for this dynamics class."""


class DegenerateProbeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class IndicatorSeries:
    indicator: str
    t: np.ndarray
    values: np.ndarray
    d_dt: np.ndarray
    detected: np.ndarray
    probe: Optional[str] = None
    reference: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.t)


def derivative(values, spacing=1.0):
    """Central differences inside, second-order one-sided at the ends."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or len(values) < 3:
        raise ValueError("derivative needs a series of at least 3 points")
    return np.gradient(values, spacing, edge_order=2)


def derivative_sign(values, eps_sign: float = EPS_SIGN, spacing=1.0):
    """True where the numerical derivative exceeds ``eps_sign``."""
    if not eps_sign > 0.0:
        raise ValueError("eps_sign must be positive")
    return derivative(values, spacing) > eps_sign


def _series(name, t, values, eps_sign, probe=None, reference=None):
    d = derivative(values, t)
    return IndicatorSeries(name, np.asarray(t), np.asarray(values, dtype=float), d,
                           d > eps_sign, probe, reference)


# Probe states ------------------------------------------------------------

def coherence_probe(cls: DynamicsClass, alpha0: complex = DEFAULT_ALPHA0) -> QubitState:
    """Stationary populations plus a coherence; the general class uses p1 = 1/2.

    ``alpha0`` is shrunk to 95% of the positivity cap when the stationary
    populations are too lopsided to admit it.
    """
    k = kappa_of(cls)
    p1 = 0.5 if k is None else stationary_state(k, getattr(cls, "relabeled", False)).p1
    cap = 0.95 * np.sqrt(p1 * (1.0 - p1))
    a = complex(alpha0)
    if abs(a) > cap:
        a = a * cap / abs(a)
    return QubitState(p1, a)


def diagonal_probe(cls: DynamicsClass, p1: Optional[float] = None) -> QubitState:
    """Incoherent probe with p1 = 1/(kappa+1), swapped for relabeled rates.

    In the unital class that choice is the fixed point I/2, which carries no
    signal, so the ground state p1 = 0 is used instead.
    """
    if p1 is not None:
        return QubitState(p1, 0j)
    k = kappa_of(cls)
    if k is None or isinstance(cls, Unital) or k == 1.0:
        return QubitState(0.0, 0j)
    st = stationary_state(k, getattr(cls, "relabeled", False))
    return QubitState(1.0 - st.p1, 0j)


def _as_class(c: Union[DynamicsClass, float]) -> DynamicsClass:
    if isinstance(c, (General, Commutative, Unital)):
        return c
    k = float(c)
    return Unital() if k == 1.0 else Commutative(k)


def _kernels(source, grid):
    if isinstance(source, Trajectory):
        if source.kernels is None:
            raise ValueError("trajectory carries no kernels")
        return source.kernels
    if isinstance(source, KernelSeries):
        return source
    if grid is None:
        raise ValueError("a grid is required when passing a rate model")
    return integrate_kernels(source, grid)


# State-based indicators -------------------------------------------------

def entropy_production_series(traj: Trajectory, cls: Union[DynamicsClass, float],
                              eps_sign: float = EPS_SIGN) -> IndicatorSeries:
    """Relative entropy to the stationary state; detection where it grows (sigma < 0)."""
    cls = _as_class(cls)
    k = kappa_of(cls)
    if k is None:
        raise NotApplicableError("entropy production needs a stationary state (commutative dynamics)")
    st = stationary_state(k, getattr(cls, "relabeled", False))
    q1 = st.p1
    if q1 <= 0.0 or q1 >= 1.0:
        raise DivergenceError("stationary state is pure; relative entropy diverges")
    cross = -((1.0 - traj.p1) * np.log(1.0 - q1) + traj.p1 * np.log(q1))
    rel = np.maximum(cross - qubit.entropy_array(traj.p1, traj.alpha), 0.0)
    return _series("entropy_production", traj.t, rel, eps_sign, _probe_name(traj))


def purity_rate_series(traj: Trajectory, cls: Union[DynamicsClass, float] = Unital(),
                       eps_sign: float = EPS_SIGN) -> IndicatorSeries:
    """Purity and its growth; ``reference`` holds the closed-form rate for unital maps."""
    cls = _as_class(cls)
    if not isinstance(cls, Unital):
        raise NotApplicableError("purity is a valid indicator only for unital dynamics")
    P = qubit.purity_array(traj.p1, traj.alpha)
    ref = None
    if traj.kernels is not None:
        ks = traj.kernels
        g = 0.5 * (traj.rates.gamma1 + traj.rates.gamma2)
        g3 = traj.rates.gamma3
        p0, a0 = traj.p1[0], abs(traj.alpha[0])
        ref = (-4.0 * g * np.exp(-2.0 * ks.Gamma) * (p0 - 0.5) ** 2
               - 2.0 * (g + 2.0 * g3) * a0 ** 2 * np.exp(-ks.Gamma - 2.0 * ks.GammaTilde))
    return _series("purity_rate", traj.t, P, eps_sign, _probe_name(traj), ref)


def l1_series(traj: Trajectory, eps_sign: float = EPS_SIGN) -> IndicatorSeries:
    if traj.alpha[0] == 0:
        warnings.warn("probe state has no coherence; the l1 series is identically zero",
                      DegenerateProbeWarning, stacklevel=2)
    return _series("l1", traj.t, 2.0 * np.abs(traj.alpha), eps_sign, _probe_name(traj))


def rec_series(traj: Trajectory, eps_sign: float = EPS_SIGN) -> IndicatorSeries:
    return _series("rec", traj.t, qubit.rec_array(traj.p1, traj.alpha), eps_sign,
                   _probe_name(traj))


def _probe_name(traj):
    return f"p1={traj.p1[0]:.6g},alpha={complex(traj.alpha[0]):.6g}"


# Map-based indicators ----------------------------------------------------

_PAIR_Z = (QubitState(0.0, 0j), QubitState(1.0, 0j))
_PAIR_XY = (QubitState(0.5, 0.5 + 0j), QubitState(0.5, -0.5 + 0j))
_PAIR_Y = (QubitState(0.5, -0.5j), QubitState(0.5, 0.5j))


def _images(ks, pair):
    return [apply_map_series(ks, s, check=False) for s in pair]


def _distance(images):
    (pa, aa), (pb, ab) = images
    return np.hypot(pa - pb, np.abs(aa - ab))


def trace_distance_series(source: Union[RateModel, KernelSeries, Trajectory], grid=None,
                          eps_sign: float = EPS_SIGN):
    """Trace distance of the pairs {|0>,|1>} and {|+>,|->}; returns ``(xy, z)``."""
    ks = _kernels(source, grid)
    d_z = _distance(_images(ks, _PAIR_Z))
    d_xy = _distance(_images(ks, _PAIR_XY))
    xy = _series("trace_distance_xy", ks.t, d_xy, eps_sign, "|+>,|->",
                 np.exp(-0.5 * ks.Gamma - ks.GammaTilde))
    z = _series("trace_distance_z", ks.t, d_z, eps_sign, "|0>,|1>", np.exp(-ks.Gamma))
    return xy, z


def damping_matrix(ks: KernelSeries) -> np.ndarray:
    """Linear part M of the Bloch-vector map r -> M r + c, built from probe images."""
    cols = []
    for pair in (_PAIR_XY, _PAIR_Y, _PAIR_Z):
        (pa, aa), (pb, ab) = _images(ks, pair)
        ra = np.stack([2.0 * aa.real, -2.0 * aa.imag, 1.0 - 2.0 * pa], axis=-1)
        rb = np.stack([2.0 * ab.real, -2.0 * ab.imag, 1.0 - 2.0 * pb], axis=-1)
        sa = np.array([2.0 * pair[0].alpha.real, -2.0 * pair[0].alpha.imag, 1.0 - 2.0 * pair[0].p1])
        sb = np.array([2.0 * pair[1].alpha.real, -2.0 * pair[1].alpha.imag, 1.0 - 2.0 * pair[1].p1])
        span = float(np.linalg.norm(sa - sb))
        cols.append((ra - rb) / span)
    # each pair differs along +x, +y and +z respectively
    return np.stack(cols, axis=-1)


def bloch_volume_series(source: Union[RateModel, KernelSeries, Trajectory], grid=None,
                        eps_sign: float = EPS_SIGN) -> IndicatorSeries:
    """Volume of the image of the Bloch ball, relative to the ball itself."""
    ks = _kernels(source, grid)
    V = np.abs(np.linalg.det(damping_matrix(ks)))
    return _series("bloch_volume", ks.t, V, eps_sign, None,
                   np.exp(-2.0 * ks.Gamma - 2.0 * ks.GammaTilde))


def map_spectrum_series(source: Union[RateModel, KernelSeries, Trajectory], grid=None,
                        cls: Optional[DynamicsClass] = None, eps_sign: float = EPS_SIGN):
    """Moduli of the damping-matrix eigenvalues; returns ``(offdiag, z)``.

    For unital maps these coincide with the singular values.
    """
    if cls is not None and kappa_of(_as_class(cls)) is None:
        raise NotApplicableError("the eigenvalue criterion holds only for commutative maps")
    ks = _kernels(source, grid)
    M = damping_matrix(ks)
    # M is block diagonal: a scaled rotation in the xy plane and the z entry.
    lam_xy = np.sqrt(np.abs(np.linalg.det(M[..., :2, :2])))
    lam_z = np.abs(M[..., 2, 2])
    off = _series("map_eig_offdiag", ks.t, lam_xy, eps_sign, None,
                  np.exp(-0.5 * ks.Gamma - ks.GammaTilde))
    z = _series("map_eig_z", ks.t, lam_z, eps_sign, None, np.exp(-ks.Gamma))
    return off, z


__all__ = [
    "IndicatorSeries", "NotApplicableError", "DegenerateProbeWarning", "INDICATOR_IDS",
    "EPS_SIGN", "derivative", "derivative_sign", "coherence_probe", "diagonal_probe",
    "entropy_production_series", "purity_rate_series", "trace_distance_series",
    "bloch_volume_series", "map_spectrum_series", "damping_matrix", "l1_series",
    "rec_series",
]
