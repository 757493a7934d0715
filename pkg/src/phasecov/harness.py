"""Cross-checks between the analytic predicates and the numerical indicators.

``indicator_suite`` evaluates, for one rate model, the indicator series that
test each applicable condition (with the probe state that condition needs);
``run_checks`` performs the four consistency checks of the ``verify`` command.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Dict, List, Optional

import numpy as np

from . import conditions as cond
from . import evolution as ev
from . import indicators as ind
from .qubit import QubitState
from .rates import RateModel

ODE_MATCH_TOL = 1e-6
G_MATCH_TOL = 1e-8


@dataclass(frozen=True)
class Probes:
    coherence: QubitState
    diagonal: QubitState

    @classmethod
    def for_class(cls, c, alpha0=ind.DEFAULT_ALPHA0, diagonal_p1=None):
        return cls(ind.coherence_probe(c, alpha0), ind.diagonal_probe(c, diagonal_p1))


@dataclass(frozen=True)
class Suite:
    """Everything computed for one model on one grid."""
    cls: cond.DynamicsClass
    grid: np.ndarray
    fine: object
    kernels: ev.KernelSeries
    probes: Probes
    coherent: ev.Trajectory
    diagonal: ev.Trajectory
    series: Dict[str, ind.IndicatorSeries]
    by_predicate: Dict[str, ind.IndicatorSeries]


def indicator_suite(m: RateModel, grid, cls: Optional[cond.DynamicsClass] = None,
                    probes: Optional[Probes] = None, eps_sign: float = ind.EPS_SIGN,
                    kernels: Optional[ev.KernelSeries] = None, fine=None) -> Suite:
    """All applicable indicator series, keyed by indicator and by predicate."""
    grid = np.asarray(grid, dtype=float)
    if fine is None:
        fine = ev.sample_half_grid(m, grid)
    if cls is None:
        cls = cond.fit_class(fine.gamma1[::2], fine.gamma2[::2]).cls
    if probes is None:
        probes = Probes.for_class(cls)
    if kernels is None:
        kernels = ev.integrate_kernels(m, grid, fine=fine)
    coh = ev.evolve(m, probes.coherence, grid, fine=fine, kernels=kernels, check=False)
    dia = ev.evolve(m, probes.diagonal, grid, fine=fine, kernels=kernels, check=False)

    xy, z = ind.trace_distance_series(kernels, eps_sign=eps_sign)
    series = {"trace_distance_xy": xy, "trace_distance_z": z,
              "bloch_volume": ind.bloch_volume_series(kernels, eps_sign=eps_sign)}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ind.DegenerateProbeWarning)
        series["l1"] = ind.l1_series(coh, eps_sign)
    series["rec"] = ind.rec_series(coh, eps_sign)
    by_pred = {"trace1": xy, "trace2": z, "bloch": series["bloch_volume"], "l1": series["l1"]}

    k = cond.kappa_of(cls)
    if k is not None:
        off, lz = ind.map_spectrum_series(kernels, cls=cls, eps_sign=eps_sign)
        series["map_eig_offdiag"], series["map_eig_z"] = off, lz
        by_pred.update(eigen1=off, eigen2=lz)
        if 0.0 < k:
            e1 = ind.entropy_production_series(coh, cls, eps_sign)
            e2 = ind.entropy_production_series(dia, cls, eps_sign)
            series["entropy_production"] = e1
            series["entropy_production_diagonal"] = replace(e2, indicator="entropy_production")
            by_pred.update(entropy1=e1, entropy2=e2)
    if isinstance(cls, cond.Unital):
        p1 = ind.purity_rate_series(coh, cls, eps_sign)
        p2 = ind.purity_rate_series(dia, cls, eps_sign)
        series["purity_rate"] = p1
        series["purity_rate_diagonal"] = replace(p2, indicator="purity_rate")
        by_pred.update(purity1=p1, purity2=p2, singular1=by_pred["eigen1"],
                       singular2=by_pred["eigen2"])
    return Suite(cls, grid, fine, kernels, probes, coh, dia, series, by_pred)


def boundary_mask(pred):
    """True at grid points whose predicate differs from a neighbour."""
    pred = np.asarray(pred, dtype=bool)
    near = np.zeros_like(pred)
    flip = pred[1:] != pred[:-1]
    near[1:] |= flip
    near[:-1] |= flip
    return near


@dataclass(frozen=True)
class Agreement:
    predicate: str
    indicator: str
    compared: int
    mismatches: int
    first_mismatch: Optional[float]


def compare_predicates(suite: Suite, eps_pred: float = cond.EPS_PRED) -> List[Agreement]:
    r = suite.fine
    preds = cond.predicate_series(r.gamma1[::2], r.gamma2[::2], r.gamma3[::2], suite.cls,
                                  eps_pred)
    out = []
    for pid, s in suite.by_predicate.items():
        p = preds[pid]
        if p is None:
            continue
        keep = ~boundary_mask(p)
        bad = keep & (p != s.detected)
        first = float(suite.grid[np.argmax(bad)]) if bad.any() else None
        out.append(Agreement(pid, s.indicator, int(keep.sum()), int(bad.sum()), first))
    return out


# verify -----------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    deviation: float
    skipped: bool = False
    detail: str = ""
    physical: bool = False  # a failure here is a physicality failure


def run_checks(m: RateModel, grid, cls: Optional[cond.DynamicsClass] = None,
               probes: Optional[Probes] = None, eps_sign: float = ind.EPS_SIGN,
               eps_pred: float = cond.EPS_PRED, cp_tol: float = ev.CP_TOL,
               g_scale: float = 1.0, strict_phase: bool = False) -> List[CheckResult]:
    """The four verify checks. ``g_scale`` corrupts G on purpose (negative control)."""
    grid = np.asarray(grid, dtype=float)
    fine = ev.sample_half_grid(m, grid)
    if cls is None:
        cls = cond.fit_class(fine.gamma1[::2], fine.gamma2[::2]).cls
    if probes is None:
        probes = Probes.for_class(cls)
    ks = ev.integrate_kernels(m, grid, fine=fine)
    if g_scale != 1.0:
        ks = replace(ks, G=ks.G * g_scale)
    results = []

    # (1) analytic map against the ODE oracle
    worst = 0.0
    for rho0 in (probes.coherence, probes.diagonal):
        a_p1, a_al = ev.apply_map_series(ks, rho0, check=False)
        o = ev.ode_evolve(m, rho0, grid, fine=fine, strict_phase=strict_phase, tol=np.inf)
        worst = max(worst, float(np.max(np.hypot(a_p1 - o.p1, np.abs(a_al - o.alpha)))))
    results.append(CheckResult("map_vs_ode", worst <= ODE_MATCH_TOL, worst,
                               detail=f"max trace distance {worst:.3e} (tol {ODE_MATCH_TOL:g})"))

    # (2) analytic predicates against numerical detections
    suite = indicator_suite(m, grid, cls, probes, eps_sign, kernels=ks, fine=fine)
    agreements = compare_predicates(suite, eps_pred)
    n_bad = sum(a.mismatches for a in agreements)
    worst_pred = [a for a in agreements if a.mismatches]
    detail = ", ".join(f"{a.predicate}/{a.indicator}: {a.mismatches} mismatches from t={a.first_mismatch:.6g}"
                       for a in worst_pred) or f"{len(agreements)} predicates agree"
    results.append(CheckResult("predicates_vs_indicators", n_bad == 0, float(n_bad),
                               detail=detail))

    # (3) complete positivity along the trajectory
    mins = ev.choi_min_eigs(ks)
    lo = float(np.min(mins))
    t_lo = float(grid[int(np.argmin(mins))])
    results.append(CheckResult("complete_positivity", lo >= -cp_tol, lo,
                               detail=f"min Choi eigenvalue {lo:.3e} at t={t_lo:.6g}",
                               physical=True))

    # (4) commutative closed form of G
    k = cond.kappa_of(cls)
    if k is None:
        results.append(CheckResult("commutative_G", True, 0.0, skipped=True,
                                   detail="not applicable to general dynamics"))
    else:
        share = 1.0 / (1.0 + k) if getattr(cls, "relabeled", False) else k / (1.0 + k)
        closed = ev.commutative_G(ks.Gamma, share)
        dev = float(np.max(np.abs(closed - ks.G) / np.maximum(1.0, np.abs(closed))))
        results.append(CheckResult("commutative_G", dev <= G_MATCH_TOL, dev,
                                   detail=f"max relative deviation {dev:.3e} (tol {G_MATCH_TOL:g})"))
    return results


__all__ = ["Probes", "Suite", "Agreement", "CheckResult", "indicator_suite", "boundary_mask",
           "compare_predicates", "run_checks"]
