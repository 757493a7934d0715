"""Single-qubit states and the information quantities built on them.

States use the layout

    rho = [[1 - p1, alpha],
           [conj(alpha), p1]]

and the Bloch convention rho = (I + r . sigma) / 2, so that
rz = 1 - 2 p1, rx = 2 Re(alpha), ry = -2 Im(alpha).

All entropies are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

STATE_TOL = 1e-12


class InvalidStateError(ValueError):
    pass


class DivergenceError(ValueError):
    """Relative entropy against a rank-deficient reference is infinite."""


@dataclass(frozen=True)
class QubitState:
    p1: float
    alpha: complex = 0j

    def __post_init__(self):
        p1, alpha = _checked(float(self.p1), complex(self.alpha), STATE_TOL)
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def clamped(cls, p1, alpha=0j, tol=STATE_TOL):
        """Build a state, absorbing invariant violations up to ``tol``."""
        p1, alpha = _checked(float(p1), complex(alpha), tol)
        return cls(p1, alpha)

    def matrix(self):
        a = self.alpha
        return np.array([[1.0 - self.p1, a], [a.conjugate(), self.p1]], dtype=complex)

    @classmethod
    def from_matrix(cls, rho, tol=STATE_TOL):
        rho = np.asarray(rho, dtype=complex)
        if abs(np.trace(rho) - 1.0) > tol or abs(rho[0, 1] - np.conj(rho[1, 0])) > tol:
            raise InvalidStateError("matrix is not a unit-trace Hermitian operator")
        return cls.clamped(rho[1, 1].real, rho[0, 1], tol)

    @classmethod
    def maximally_mixed(cls):
        return cls(0.5, 0j)

    @classmethod
    def plus(cls):
        return cls(0.5, 0.5 + 0j)


def _checked(p1, alpha, tol):
    if not (math.isfinite(p1) and math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise InvalidStateError(f"non-finite state entries p1={p1!r}, alpha={alpha!r}")
    if p1 < -tol or p1 > 1.0 + tol:
        raise InvalidStateError(f"population p1={p1!r} outside [0, 1]")
    p1 = min(max(p1, 0.0), 1.0)
    cap = p1 * (1.0 - p1)
    excess = abs(alpha) ** 2 - cap
    if excess > tol:
        raise InvalidStateError(
            f"|alpha|^2={abs(alpha) ** 2!r} exceeds p1(1-p1)={cap!r}; matrix not positive")
    if excess > 0.0:
        alpha = alpha * (math.sqrt(cap) / abs(alpha)) if cap > 0.0 else 0j
    return p1, alpha


@dataclass(frozen=True)
class BlochVector:
    rx: float
    ry: float
    rz: float

    def __post_init__(self):
        if self.norm() > 1.0 + STATE_TOL:
            raise InvalidStateError(f"Bloch vector norm {self.norm()!r} exceeds 1")

    def norm(self):
        return math.sqrt(self.rx ** 2 + self.ry ** 2 + self.rz ** 2)

    def as_array(self):
        return np.array([self.rx, self.ry, self.rz])


def bloch_from_state(s: QubitState) -> BlochVector:
    return BlochVector(2.0 * s.alpha.real, -2.0 * s.alpha.imag, 1.0 - 2.0 * s.p1)


def state_from_bloch(r: BlochVector) -> QubitState:
    return QubitState.clamped((1.0 - r.rz) / 2.0, complex(r.rx, -r.ry) / 2.0)


# Array kernels. Every scalar operation below is a thin wrapper over these so
# that trajectories can be processed without per-sample Python overhead.

def _xlogx(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0.0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def bloch_radius(p1, alpha):
    """Length x of the Bloch vector; eigenvalues of rho are (1 +- x)/2."""
    p1 = np.asarray(p1, dtype=float)
    x = np.sqrt(4.0 * np.abs(alpha) ** 2 + (2.0 * p1 - 1.0) ** 2)
    return np.minimum(x, 1.0)


def entropy_array(p1, alpha):
    x = bloch_radius(p1, alpha)
    return -(_xlogx((1.0 + x) / 2.0) + _xlogx((1.0 - x) / 2.0))


def binary_entropy_array(p1):
    p1 = np.clip(np.asarray(p1, dtype=float), 0.0, 1.0)
    return -(_xlogx(p1) + _xlogx(1.0 - p1))


def purity_array(p1, alpha):
    p1 = np.asarray(p1, dtype=float)
    return (1.0 - p1) ** 2 + p1 ** 2 + 2.0 * np.abs(alpha) ** 2


def rec_array(p1, alpha):
    return np.maximum(binary_entropy_array(p1) - entropy_array(p1, alpha), 0.0)


def von_neumann_entropy(s: QubitState) -> float:
    return float(entropy_array(s.p1, s.alpha))


def binary_entropy(p: float) -> float:
    return float(binary_entropy_array(p))


def purity(s: QubitState) -> float:
    return (1.0 - s.p1) ** 2 + s.p1 ** 2 + 2.0 * abs(s.alpha) ** 2


def trace_distance(a: QubitState, b: QubitState) -> float:
    # Half the Euclidean distance of Bloch vectors: sqrt(dp1^2 + |dalpha|^2).
    return math.hypot(a.p1 - b.p1, abs(a.alpha - b.alpha))


def l1_coherence(s: QubitState) -> float:
    return 2.0 * abs(s.alpha)


def rel_entropy_coherence(s: QubitState) -> float:
    return float(rec_array(s.p1, s.alpha))


def rel_entropy_to(s: QubitState, ref: QubitState) -> float:
    """Quantum relative entropy S(s | ref) = -tr[s log ref] - S(s)."""
    lam, vecs = np.linalg.eigh(ref.matrix())
    if lam[0] <= STATE_TOL:
        raise DivergenceError("reference state is rank deficient; relative entropy diverges")
    log_ref = (vecs * np.log(lam)) @ vecs.conj().T
    cross = -np.trace(s.matrix() @ log_ref).real
    return max(cross - von_neumann_entropy(s), 0.0)
