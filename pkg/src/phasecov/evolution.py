"""The analytic phase-covariant map, its Choi matrix and an ODE oracle.

For rates gamma_1..3 and frequency omega the map is fixed by four kernels

    Gamma      = 1/2 int (gamma1 + gamma2)
    GammaTilde = int gamma3
    G          = 1/2 int exp(Gamma) gamma2
    Omega      = int 2 omega

and acts as p1 -> exp(-Gamma) (G + p1), alpha -> alpha exp(i Omega - Gamma/2 - GammaTilde).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .qubit import InvalidStateError, QubitState
from .rates import (Phenomenological, RateModel, RateSample, RateSeries, nearest_pole,
                    pole_times, sample_rates)

CP_TOL = 1e-9
MAP_TOL = 1e-9
ODE_TOL = 1e-6


class StepSizeError(ValueError):
    """The grid is too coarse for the magnitude of the rates."""


class NonPhysicalMapError(InvalidStateError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class IntegrationAbort(InvalidStateError):
    def __init__(self, message, t):
        super().__init__(f"{message} at t={t:.12g}")
        self.t = t


@dataclass(frozen=True)
class Kernels:
    t: float
    Gamma: float
    GammaTilde: float
    G: float
    Omega: float

    @classmethod
    def identity(cls, t=0.0):
        return cls(t, 0.0, 0.0, 0.0, 0.0)

    def offdiag_factor(self) -> complex:
        return complex(np.exp(1j * self.Omega - 0.5 * self.Gamma - self.GammaTilde))


@dataclass(frozen=True)
class KernelSeries:
    t: np.ndarray
    Gamma: np.ndarray
    GammaTilde: np.ndarray
    G: np.ndarray
    Omega: np.ndarray

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k) -> Kernels:
        return Kernels(float(self.t[k]), float(self.Gamma[k]), float(self.GammaTilde[k]),
                       float(self.G[k]), float(self.Omega[k]))

    def offdiag_factor(self):
        return np.exp(1j * self.Omega - 0.5 * self.Gamma - self.GammaTilde)


@dataclass(frozen=True)
class Trajectory:
    """States on a uniform grid together with the rates (and kernels) behind them."""
    t: np.ndarray
    p1: np.ndarray
    alpha: np.ndarray
    rates: RateSeries
    kernels: Optional[KernelSeries] = None

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k):
        k_k = self.kernels[k] if self.kernels is not None else None
        return (float(self.t[k]), QubitState.clamped(self.p1[k], self.alpha[k], MAP_TOL),
                self.rates[k], k_k)

    @property
    def initial(self) -> QubitState:
        return QubitState.clamped(self.p1[0], self.alpha[0], MAP_TOL)


# Grids -------------------------------------------------------------------

def make_grid(t_max: float, steps: int) -> np.ndarray:
    if not t_max > 0.0:
        raise ValueError("t_max must be positive")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    return np.linspace(0.0, t_max, steps + 1)


def grid_step(grid) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("grid needs at least two points")
    if grid[0] != 0.0:
        raise ValueError("grid must start at t=0")
    h = (grid[-1] - grid[0]) / (len(grid) - 1)
    if not h > 0.0 or np.max(np.abs(np.diff(grid) - h)) > 1e-9 * max(1.0, grid[-1]):
        raise ValueError("grid must be uniform and strictly increasing")
    return h


def half_grid(grid) -> np.ndarray:
    """Grid refined by the step midpoints, as used by the fourth-order schemes."""
    grid = np.asarray(grid, dtype=float)
    return np.linspace(grid[0], grid[-1], 2 * len(grid) - 1)


def sample_half_grid(m: RateModel, grid) -> RateSeries:
    return sample_rates(m, half_grid(grid))


def _every_other(r: RateSeries) -> RateSeries:
    return RateSeries(r.t[::2], r.gamma1[::2], r.gamma2[::2], r.gamma3[::2], r.omega[::2])


def _check_step(h, fine: RateSeries, m):
    biggest = fine.max_abs()
    if biggest == 0.0 or h <= 0.1 / biggest:
        return
    k = int(np.argmax(np.max(np.abs(np.vstack(
        [fine.gamma1, fine.gamma2, fine.gamma3, fine.omega])), axis=0)))
    t_bad = float(fine.t[k])
    msg = (f"step h={h:.3g} too large for rates of magnitude {biggest:.3g} "
           f"(near t={t_bad:.6g}); need h <= {0.1 / biggest:.3g}")
    if isinstance(m, Phenomenological) and m.params.R > 0.5:
        poles = pole_times(m.params.R, float(fine.t[-1]))
        first = poles[0] if len(poles) else nearest_pole(m.params.R, t_bad)
        msg += f"; c(t) has a pole at t={first:.12g}"
    raise StepSizeError(msg)


# Kernels -----------------------------------------------------------------

def integrate_kernels(m: RateModel, grid, *, fine: Optional[RateSeries] = None) -> KernelSeries:
    """Kernels on ``grid`` by fourth-order quadrature of the rates.

    Gamma, GammaTilde and Omega use Simpson's rule per step. G is advanced
    jointly with Gamma as the pair (Gamma, G)' = (a, exp(Gamma) gamma2 / 2)
    with classical RK4, which avoids a nested quadrature.
    ``fine`` may carry rates already sampled on :func:`half_grid`.
    """
    grid = np.asarray(grid, dtype=float)
    h = grid_step(grid)
    if fine is None:
        fine = sample_half_grid(m, grid)
    _check_step(h, fine, m)
    return kernels_from_rates(grid, fine)


def kernels_from_rates(grid, fine: RateSeries) -> KernelSeries:
    grid = np.asarray(grid, dtype=float)
    h = grid_step(grid)

    def simpson(f):
        steps = h / 6.0 * (f[:-2:2] + 4.0 * f[1::2] + f[2::2])
        return np.concatenate([[0.0], np.cumsum(steps)])

    a = 0.5 * (fine.gamma1 + fine.gamma2)       # Gamma'
    Gamma = simpson(a)
    GammaTilde = simpson(fine.gamma3)
    Omega = simpson(2.0 * fine.omega)

    g2 = 0.5 * fine.gamma2
    a0, am = a[:-2:2], a[1::2]
    b0, bm, b1 = g2[:-2:2], g2[1::2], g2[2::2]
    Gk = Gamma[:-1]
    k1 = np.exp(Gk) * b0
    k2 = np.exp(Gk + 0.5 * h * a0) * bm
    k3 = np.exp(Gk + 0.5 * h * am) * bm
    k4 = np.exp(Gk + h * am) * b1
    G = np.concatenate([[0.0], np.cumsum(h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))])
    return KernelSeries(grid.copy(), Gamma, GammaTilde, G, Omega)


def commutative_G(Gamma, gamma2_share):
    """Closed form of G when gamma2 = share * (gamma1 + gamma2) at all times."""
    return gamma2_share * np.expm1(Gamma)


# The map -----------------------------------------------------------------

def apply_map(k: Kernels, rho0: QubitState, tol: float = MAP_TOL) -> QubitState:
    p1, alpha = apply_map_series(
        KernelSeries(*(np.array([v]) for v in (k.t, k.Gamma, k.GammaTilde, k.G, k.Omega))),
        rho0, tol)
    return QubitState.clamped(p1[0], alpha[0], tol)


def apply_map_series(ks: KernelSeries, rho0: QubitState, tol: float = MAP_TOL,
                     check: bool = True):
    """Vectorized map action; returns the arrays ``(p1, alpha)``.

    With ``check=False`` the formal image is returned unvalidated, which is
    how indicator formulas are evaluated for maps that are not CP.
    """
    e = np.exp(-ks.Gamma)
    p1 = e * (ks.G + rho0.p1)
    alpha = rho0.alpha * ks.offdiag_factor()
    if not check:
        return p1, alpha
    excess = np.maximum(np.maximum(-p1, p1 - 1.0), np.abs(alpha) ** 2 - p1 * (1.0 - p1))
    if np.any(~np.isfinite(p1)) or np.any(excess > tol):
        bad = int(np.argmax(np.where(np.isfinite(excess), excess, np.inf)))
        raise NonPhysicalMapError(
            f"map output violates state positivity by {excess[bad]:.3g} at t={ks.t[bad]:.12g}; "
            "the map is not completely positive there", float(ks.t[bad]))
    p1 = np.clip(p1, 0.0, 1.0)
    cap = np.sqrt(p1 * (1.0 - p1))
    mag = np.abs(alpha)
    over = mag > cap
    alpha = np.where(over, alpha * cap / np.where(over, mag, 1.0), alpha)
    return p1, alpha


def evolve(m: RateModel, rho0: QubitState, grid, *, fine: Optional[RateSeries] = None,
           kernels: Optional[KernelSeries] = None, check: bool = True) -> Trajectory:
    """Trajectory of ``rho0`` under the analytic map."""
    grid = np.asarray(grid, dtype=float)
    if fine is None:
        fine = sample_half_grid(m, grid)
    if kernels is None:
        kernels = integrate_kernels(m, grid, fine=fine)
    p1, alpha = apply_map_series(kernels, rho0, check=check)
    return Trajectory(grid.copy(), p1, alpha, _every_other(fine), kernels)


# Choi matrix -------------------------------------------------------------

def _choi_entries(Gamma, GammaTilde, G, Omega):
    e = np.exp(-Gamma)
    lam = np.exp(1j * Omega - 0.5 * Gamma - GammaTilde)
    shape = np.shape(Gamma) + (4, 4)
    C = np.zeros(shape, dtype=complex)
    # Phi(E_00), Phi(E_11): trace-one inputs with p1 = 0 and p1 = 1.
    # Phi(E_01), Phi(E_10): traceless, only the coherence survives.
    C[..., 0, 0] = 1.0 - e * G
    C[..., 1, 1] = e * G
    C[..., 2, 2] = 1.0 - e * (G + 1.0)
    C[..., 3, 3] = e * (G + 1.0)
    C[..., 0, 3] = lam
    C[..., 3, 0] = np.conj(lam)
    return C


def choi_matrix(k: Kernels) -> np.ndarray:
    """Choi matrix sum_ij E_ij (x) Phi(E_ij) in the basis |i>|a>."""
    return _choi_entries(k.Gamma, k.GammaTilde, k.G, k.Omega)


def choi_min_eigs(ks: KernelSeries) -> np.ndarray:
    C = _choi_entries(ks.Gamma, ks.GammaTilde, ks.G, ks.Omega)
    return np.linalg.eigvalsh(C)[:, 0]


def cp_check(k: Kernels, tol: float = CP_TOL):
    """Return ``(is_cp, min_eigenvalue)``."""
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    lo = float(np.linalg.eigvalsh(choi_matrix(k))[0])
    return lo >= -tol, lo


# ODE oracle --------------------------------------------------------------

_SP = np.array([[0.0, 1.0], [0.0, 0.0]])   # sigma_+
_SM = _SP.T                                 # sigma_-
_SZ = np.diag([1.0, -1.0])
_I2 = np.eye(2)


def _sandwich(A, B):
    # row-major vec(A X B) = (A kron B^T) vec(X)
    return np.kron(A, B.T)


def _dissipator(L):
    LdL = L.conj().T @ L
    return _sandwich(L, L.conj().T) - 0.5 * (_sandwich(LdL, _I2) + _sandwich(_I2, LdL))


_L1 = _dissipator(_SP)            # sigma_+ rho sigma_- - {sigma_- sigma_+, rho}/2
_L2 = _dissipator(_SM)            # sigma_- rho sigma_+ - {sigma_+ sigma_-, rho}/2
_L3 = _sandwich(_SZ, _SZ) - np.eye(4)
_COMM_Z = _sandwich(_SZ, _I2) - _sandwich(_I2, _SZ)


def generator(sample: RateSample, strict_phase: bool = False) -> np.ndarray:
    """4x4 generator acting on row-major vec(rho).

    By default the Hamiltonian part is +i omega [sigma_z, rho], whose phase
    matches Omega = int 2 omega used by the analytic map. ``strict_phase``
    switches to -i (omega/2) [sigma_z, rho].
    """
    if strict_phase:
        ham = -0.5j * sample.omega * _COMM_Z
    else:
        ham = 1j * sample.omega * _COMM_Z
    return (ham + 0.5 * sample.gamma1 * _L1 + 0.5 * sample.gamma2 * _L2
            + 0.5 * sample.gamma3 * _L3)


def ode_evolve(m: RateModel, rho0: QubitState, grid, *, strict_phase: bool = False,
               fine: Optional[RateSeries] = None, tol: float = ODE_TOL) -> Trajectory:
    """Fixed-step RK4 integration of the master equation in matrix form."""
    grid = np.asarray(grid, dtype=float)
    h = grid_step(grid)
    if fine is None:
        fine = sample_half_grid(m, grid)
    _check_step(h, fine, m)
    n = len(grid)
    gens = np.array([generator(fine[j], strict_phase) for j in range(len(fine))])
    rho = np.empty((n, 4), dtype=complex)
    rho[0] = rho0.matrix().reshape(4)
    v = rho[0]
    for k in range(n - 1):
        A0, Am, A1 = gens[2 * k], gens[2 * k + 1], gens[2 * k + 2]
        k1 = A0 @ v
        k2 = Am @ (v + 0.5 * h * k1)
        k3 = Am @ (v + 0.5 * h * k2)
        k4 = A1 @ (v + h * k3)
        v = v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho[k + 1] = v
        _check_ode_state(v, grid[k + 1], tol)
    p1 = rho[:, 3].real
    alpha = rho[:, 1]
    return Trajectory(grid.copy(), p1, alpha, _every_other(fine), None)


def _check_ode_state(v, t, tol):
    if not np.all(np.isfinite(v)):
        raise IntegrationAbort("non-finite density matrix", t)
    p0, a, ac, p1 = v
    if abs(p0 + p1 - 1.0) > tol:
        raise IntegrationAbort(f"trace drifted to {(p0 + p1).real:.9g}", t)
    if abs(a - np.conj(ac)) > tol:
        raise IntegrationAbort("density matrix lost hermiticity", t)
    p1 = p1.real
    if p1 < -tol or p1 > 1.0 + tol or abs(a) ** 2 - p1 * (1.0 - p1) > tol:
        raise IntegrationAbort("density matrix lost positivity", t)


# Stationary state --------------------------------------------------------

def stationary_state(kappa: float, relabeled: bool = False) -> QubitState:
    """Fixed point of a commutative map with gamma2 = kappa gamma1.

    With ``relabeled`` the roles are swapped (gamma1 = kappa gamma2), which
    exchanges the two populations.
    """
    if not 0.0 <= kappa <= 1.0 or math.isnan(kappa):
        raise ValueError(f"kappa={kappa!r} outside [0, 1]")
    p1 = kappa / (kappa + 1.0)
    if relabeled:
        p1 = 1.0 - p1
    return QubitState(p1, 0j)


__all__ = [
    "Kernels", "KernelSeries", "Trajectory", "StepSizeError", "NonPhysicalMapError",
    "IntegrationAbort", "make_grid", "grid_step", "half_grid", "sample_half_grid",
    "integrate_kernels", "kernels_from_rates", "commutative_G", "apply_map",
    "apply_map_series", "evolve", "choi_matrix", "choi_min_eigs", "cp_check", "generator",
    "ode_evolve", "stationary_state", "CP_TOL",
]
