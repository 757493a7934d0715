"""Analytic detection conditions, dynamics classes and inverse inference.

Every condition in the table below is a sign test on one of three linear
forms of the rates,

    A = gamma1 + gamma2 + 4 gamma3
    B = gamma1 + gamma2
    C = gamma1 + gamma2 + 2 gamma3

For the commutative class (gamma1 = gamma, gamma2 = kappa gamma) A and C
equal (1+kappa) gamma + 4 gamma3 and (1+kappa) gamma + 2 gamma3, and B has
the sign of gamma; in the unital class they are twice gamma + 2 gamma3,
gamma and gamma + gamma3. Writing all of them in this common scaling keeps
the booleans identical across classes for the same sample.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from .rates import RateModel, RateSample, eval_rates, sample_rates

EPS_PRED = 1e-12
CLASS_TOL = 1e-9
BISECT_TOL = 1e-10

FORMS = {
    "A": (1.0, 1.0, 4.0),
    "B": (1.0, 1.0, 0.0),
    "C": (1.0, 1.0, 2.0),
}

PREDICATE_IDS = ("entropy1", "entropy2", "purity1", "purity2", "trace1", "trace2",
                 "bloch", "eigen1", "eigen2", "singular1", "singular2", "l1")


@dataclass(frozen=True)
class General:
    name = "General"


@dataclass(frozen=True)
class Commutative:
    kappa: float
    relabeled: bool = False
    name = "Commutative"

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa={self.kappa!r} outside [0, 1]")


@dataclass(frozen=True)
class Unital:
    name = "Unital"
    kappa = 1.0
    relabeled = False


DynamicsClass = Union[General, Commutative, Unital]


def kappa_of(c: DynamicsClass) -> Optional[float]:
    """kappa for commutative-like classes, None for the general class."""
    if isinstance(c, Unital):
        return 1.0
    if isinstance(c, Commutative):
        return c.kappa
    return None


def describe(c: DynamicsClass) -> str:
    if isinstance(c, Unital):
        return "Unital (kappa=1.000000)"
    if isinstance(c, Commutative):
        if c.relabeled:
            return f"Commutative (kappa = gamma1/gamma2 = {c.kappa:.6g}, relabeled)"
        return f"Commutative (kappa = gamma2/gamma1 = {c.kappa:.6g})"
    return "General"


# Which form each indicator tests, per class. None means not applicable.
_COMMON = {"trace1": "A", "trace2": "B", "bloch": "C", "l1": "A"}
_COMMUTATIVE = dict(_COMMON, entropy1="A", entropy2="B", eigen1="A", eigen2="B")
_UNITAL = dict(_COMMUTATIVE, purity1="A", purity2="B", singular1="A", singular2="B")


def predicate_forms(c: DynamicsClass) -> Dict[str, Optional[str]]:
    if isinstance(c, Unital):
        table = _UNITAL
    elif isinstance(c, Commutative):
        table = _COMMUTATIVE
    else:
        table = _COMMON
    return {pid: table.get(pid) for pid in PREDICATE_IDS}


def applicable(c: DynamicsClass) -> List[str]:
    return [pid for pid, f in predicate_forms(c).items() if f is not None]


def form_value(form: str, g1, g2, g3):
    a, b, c = FORMS[form]
    return a * np.asarray(g1) + b * np.asarray(g2) + c * np.asarray(g3)


def predicate_lhs(g1, g2, g3, c: DynamicsClass) -> Dict[str, Optional[np.ndarray]]:
    """Left-hand side of every condition (detection iff LHS < 0)."""
    cache = {}
    out = {}
    for pid, form in predicate_forms(c).items():
        if form is None:
            out[pid] = None
            continue
        if form not in cache:
            cache[form] = form_value(form, g1, g2, g3)
        out[pid] = cache[form]
    return out


def predicates(r: RateSample, c: DynamicsClass, eps_pred: float = EPS_PRED):
    """Per-indicator tri-state: True, False, or None when not applicable."""
    vals = (r.gamma1, r.gamma2, r.gamma3)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("rate sample is not finite")
    return {pid: None if lhs is None else bool(lhs < -eps_pred)
            for pid, lhs in predicate_lhs(*vals, c).items()}


def predicate_series(g1, g2, g3, c: DynamicsClass, eps_pred: float = EPS_PRED):
    return {pid: None if lhs is None else lhs < -eps_pred
            for pid, lhs in predicate_lhs(g1, g2, g3, c).items()}


# Classification ---------------------------------------------------------

@dataclass(frozen=True)
class ClassFit:
    cls: DynamicsClass
    kappa: Optional[float]
    residual: float


def fit_class(g1, g2, tol: float = CLASS_TOL) -> ClassFit:
    """Least-squares fit of gamma2 = kappa gamma1 (or the relabeled form)."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    n1, n2 = float(np.max(np.abs(g1))), float(np.max(np.abs(g2)))
    if n1 == 0.0 and n2 == 0.0:
        return ClassFit(Unital(), 1.0, 0.0)
    if n1 >= n2:
        k = float(g1 @ g2 / (g1 @ g1))
        res = float(np.max(np.abs(g2 - k * g1)))
        ok = res <= tol * n1
        relabeled = False
    else:
        # ratio gamma2/gamma1 exceeds one: fit gamma1 = kappa gamma2 instead
        k = float(g1 @ g2 / (g2 @ g2))
        res = float(np.max(np.abs(g1 - k * g2)))
        ok = res <= tol * n2
        relabeled = True
    if not ok or k < -tol:
        return ClassFit(General(), None, res)
    k = min(max(k, 0.0), 1.0)
    if abs(k - 1.0) <= tol:
        return ClassFit(Unital(), k, res)
    return ClassFit(Commutative(k, relabeled), k, res)


def classify_dynamics(m: RateModel, grid) -> DynamicsClass:
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2:
        raise ValueError("classification needs a non-trivial grid")
    r = sample_rates(m, grid)
    return fit_class(r.gamma1, r.gamma2).cls


# Detection report -------------------------------------------------------

Interval = Tuple[float, float]


@dataclass(frozen=True)
class DetectionReport:
    cls: DynamicsClass
    t_start: float
    t_end: float
    intervals: Dict[str, Optional[List[Interval]]] = field(default_factory=dict)

    def is_applicable(self, pid: str) -> bool:
        return self.intervals.get(pid) is not None

    def any_detection(self) -> bool:
        return any(v for v in self.intervals.values() if v)


def true_runs(mask):
    """Index pairs (i, j) of maximal runs of True in ``mask``."""
    m = np.concatenate([[False], np.asarray(mask, dtype=bool), [False]])
    d = np.diff(m.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


def _bisect(fn, lo, hi, tol):
    """Root of fn in [lo, hi] with fn(lo) and fn(hi) of opposite sign."""
    f_lo = fn(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def detection_report(m: RateModel, grid, cls: Optional[DynamicsClass] = None,
                     eps_pred: float = EPS_PRED, tol: float = BISECT_TOL) -> DetectionReport:
    """Intervals where each applicable condition holds, boundaries refined by bisection."""
    grid = np.asarray(grid, dtype=float)
    r = sample_rates(m, grid)
    if cls is None:
        cls = fit_class(r.gamma1, r.gamma2).cls
    forms = predicate_forms(cls)
    by_form = {}
    for form in set(f for f in forms.values() if f is not None):
        lhs = form_value(form, r.gamma1, r.gamma2, r.gamma3)
        by_form[form] = _form_intervals(m, form, grid, lhs < -eps_pred, tol)
    intervals = {pid: None if f is None else list(by_form[f]) for pid, f in forms.items()}
    return DetectionReport(cls, float(grid[0]), float(grid[-1]), intervals)


def _form_intervals(m, form, grid, mask, tol):
    def fn(t):
        s = eval_rates(m, t)
        return float(form_value(form, s.gamma1, s.gamma2, s.gamma3))

    out = []
    for i, j in true_runs(mask):
        a = float(grid[0]) if i == 0 else _bisect(fn, grid[i - 1], grid[i], tol)
        b = float(grid[-1]) if j == len(grid) - 1 else _bisect(fn, grid[j], grid[j + 1], tol)
        out.append((float(a), float(b)))
    return out


# Inverse inference -------------------------------------------------------

class InconsistentObservationError(ValueError):
    pass


_FORM_TEXT = {"A": "gamma1 + gamma2 + 4*gamma3", "B": "gamma1 + gamma2",
              "C": "gamma1 + gamma2 + 2*gamma3"}


@dataclass(frozen=True)
class LinearConstraint:
    """``coeffs . (gamma1, gamma2, gamma3) < 0`` if strict, else ``>= 0``."""
    coeffs: Tuple[float, float, float]
    strict: bool
    text: str

    def holds(self, g1, g2, g3) -> bool:
        v = self.coeffs[0] * g1 + self.coeffs[1] * g2 + self.coeffs[2] * g3
        return v < 0.0 if self.strict else v >= 0.0

    def __str__(self):
        return self.text


def _constraint(form, detected):
    op = "< 0" if detected else ">= 0"
    return LinearConstraint(FORMS[form], bool(detected), f"{_FORM_TEXT[form]} {op}")


# Named implications checked when the observation vector is infeasible.
_IMPLICATIONS = (
    (lambda o: o.get("C") is True and o.get("A") is False and o.get("B") is False,
     "Bloch-volume detection implies trace-distance detection (trace-1 or trace-2)"),
    (lambda o: o.get("A") is True and o.get("B") is True and o.get("C") is False,
     "trace-1 and trace-2 detection together imply Bloch-volume detection"),
)


def infer_rate_constraints(observed: Dict[str, bool], cls: DynamicsClass) -> List[LinearConstraint]:
    """Rate inequalities implied by observed detections (True) and non-detections (False)."""
    forms = predicate_forms(cls)
    by_form: Dict[str, bool] = {}
    source: Dict[str, str] = {}
    for pid, seen in observed.items():
        if pid not in forms:
            raise KeyError(f"unknown indicator {pid!r}")
        form = forms[pid]
        if form is None:
            raise ValueError(f"indicator {pid!r} is not applicable to {cls.name} dynamics")
        seen = bool(seen)
        if form in by_form and by_form[form] != seen:
            raise InconsistentObservationError(
                f"{pid} and {source[form]} test the same condition ({_FORM_TEXT[form]} < 0) "
                "but were observed differently")
        by_form[form] = seen
        source.setdefault(form, pid)
    cons = [_constraint(f, by_form[f]) for f in ("B", "C", "A") if f in by_form]
    if cons and not _feasible(cons):
        for check, text in _IMPLICATIONS:
            if check(by_form):
                raise InconsistentObservationError(f"observations violate: {text}")
        raise InconsistentObservationError("observed detections admit no rates")
    return cons


def _feasible(cons: List[LinearConstraint]) -> bool:
    # Homogeneous system: a strict "< 0" can be scaled to "<= -1".
    A_ub, b_ub = [], []
    for c in cons:
        if c.strict:
            A_ub.append(list(c.coeffs))
            b_ub.append(-1.0)
        else:
            A_ub.append([-x for x in c.coeffs])
            b_ub.append(0.0)
    res = linprog(np.zeros(3), A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * 3,
                  method="highs")
    return res.status == 0


# Region sweep -------------------------------------------------------------

@dataclass(frozen=True)
class RegionSweep:
    gamma_prime: np.ndarray
    gamma3: np.ndarray
    columns: Dict[str, np.ndarray]


def _split_prime(gp, c):
    """Split gamma' = gamma1 + gamma2 according to the class."""
    k = kappa_of(c)
    if k is None:
        return 0.5 * gp, 0.5 * gp
    if getattr(c, "relabeled", False):
        return k * gp / (1.0 + k), gp / (1.0 + k)
    return gp / (1.0 + k), k * gp / (1.0 + k)


def region_columns(gp, g3, eps_pred: float = EPS_PRED, kappa: float = 0.5):
    gp = np.asarray(gp, dtype=float)
    g3 = np.asarray(g3, dtype=float)
    cols = {}
    g1, g2 = _split_prime(gp, General())
    gen = predicate_series(g1, g2, g3, General(), eps_pred)
    for pid in ("trace1", "trace2", "bloch", "l1"):
        cols[f"cond_{pid}"] = gen[pid]
    extra = (("comm", Commutative(kappa), ("entropy1", "entropy2", "eigen1", "eigen2")),
             ("unital", Unital(), ("purity1", "purity2", "singular1", "singular2")))
    for prefix, c, pids in extra:
        g1, g2 = _split_prime(gp, c)
        vals = predicate_series(g1, g2, g3, c, eps_pred)
        for pid in pids:
            cols[f"{prefix}_{pid}"] = vals[pid]
    return cols


def region_sweep(gp_range, g3_range, resolution: int, *, threads: int = 1,
                 eps_pred: float = EPS_PRED, kappa: float = 0.5) -> RegionSweep:
    """Condition membership on a resolution x resolution grid of (gamma', gamma3)."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    for lo, hi in (gp_range, g3_range):
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError("ranges must be finite with lo < hi")
    gps = np.linspace(gp_range[0], gp_range[1], resolution)
    g3s = np.linspace(g3_range[0], g3_range[1], resolution)

    def row(gp):
        return region_columns(np.full_like(g3s, gp), g3s, eps_pred, kappa)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(row, gps))
    cols = {name: np.concatenate([r[name] for r in rows]) for name in rows[0]}
    return RegionSweep(np.repeat(gps, resolution), np.tile(g3s, resolution), cols)


__all__ = [
    "General", "Commutative", "Unital", "DynamicsClass", "ClassFit", "DetectionReport",
    "LinearConstraint", "InconsistentObservationError", "RegionSweep", "PREDICATE_IDS",
    "EPS_PRED", "kappa_of", "describe", "predicate_forms", "applicable", "predicate_lhs",
    "predicates", "predicate_series", "fit_class", "classify_dynamics", "detection_report",
    "infer_rate_constraints", "region_columns", "region_sweep",
]
