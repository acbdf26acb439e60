"""Integral and pointwise inequalities certified at branch points.

Semi-stable solutions of the fourth-order problem obey a family of a-priori
bounds; this module evaluates both sides of each of them numerically and
reports left-hand side, right-hand side and margin.  Per-point checks:

* pointwise lower bound     v >= sqrt(lambda) g(u)            on the grid
* energy estimate           int f''(u) v |grad u|^2 <= lambda int f(u)
* g-H estimate              int g(u) H(u) <= int f(u)
* basic energy identity     int f'(u) u^2 <= int f(u) u

Along a branch the "uniform constant" claims become observable boundedness:
the running suprema of int f^(3/2)/(sqrt(u)+1), int f^2 and
int (f')^(2/gamma) over the pre-fold segment must stay finite with a flat
trend approaching the fold.  Points past the sampled fold are evaluated on
request but never asserted — the inequalities are statements about the
semi-stable segment only.

Satisfaction uses tol = 1e-6 * max(|lhs|, |rhs|, 1).  Integrands carry
their boundary values explicitly (u vanishes there, f(0) = 1 does not).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .branch import Branch, BranchPoint
from .families import NonlinearityFamily, g_aux, h_aux_grid, gamma_limits
from .radial import integrate_radial, radial_gradient

__all__ = [
    "EstimateReport",
    "BranchSupremum",
    "check_pointwise_bound",
    "check_energy_estimate",
    "check_gH_estimate",
    "check_basic_energy",
    "run_pointwise_suite",
    "check_crucial_integrals",
    "check_L2",
    "check_fprime_integral",
    "classify_holder_criterion",
    "POINTWISE_BOUND",
    "ENERGY",
    "G_H",
    "BASIC_ENERGY",
    "CRUCIAL_RATIO",
    "MASS",
    "L2",
    "FPRIME",
]

# estimate identifiers used in reports and CSV output
POINTWISE_BOUND = "pointwise-lower-bound"
ENERGY = "energy"
G_H = "g-times-H"
BASIC_ENERGY = "basic-energy"
CRUCIAL_RATIO = "f32-over-sqrt-u"
MASS = "mass-of-f"
L2 = "f-squared"
FPRIME = "fprime-power"

TOL_FACTOR = 1e-6
LOW_CONFIDENCE_MARGIN = 10.0  # times the touchdown guard


@dataclass
class EstimateReport:
    name: str
    lhs: float
    rhs: float
    margin: float
    satisfied: bool
    tol: float
    m: float
    lam: float
    grid_id: str
    low_confidence: bool = False


@dataclass
class BranchSupremum:
    """One integral tracked along the pre-fold segment of a branch."""

    name: str
    amplitudes: list[float]
    values: list[float]
    sup: float
    trend: float  # relative last-quarter slope per continuation step

    @property
    def finite(self) -> bool:
        return all(math.isfinite(v) for v in self.values)


def _tol(lhs: float, rhs: float) -> float:
    return TOL_FACTOR * max(abs(lhs), abs(rhs), 1.0)


def _meta(point: BranchPoint) -> tuple[float, float, str]:
    return point.m, point.lam, point.grid.key() if point.grid is not None else ""


def _low_confidence(family: NonlinearityFamily, point: BranchPoint, guard: float) -> bool:
    if not family.singular:
        return False
    return float(np.max(point.u)) > 1.0 - LOW_CONFIDENCE_MARGIN * guard


def check_pointwise_bound(
    family: NonlinearityFamily, point: BranchPoint, mems_guard: float = 1e-6
) -> EstimateReport:
    """Nodewise v - sqrt(lambda) g(u) >= 0; margin is the grid minimum."""
    m, lam, gid = _meta(point)
    gu = np.asarray(g_aux(family, point.u), dtype=float)
    bound = math.sqrt(max(lam, 0.0)) * gu
    margin = float(np.min(point.v - bound))
    scale = max(float(np.max(np.abs(point.v))), float(np.max(bound)), 1.0)
    tol = TOL_FACTOR * scale
    return EstimateReport(
        POINTWISE_BOUND,
        lhs=float(np.max(bound - point.v)),
        rhs=0.0,
        margin=margin,
        satisfied=margin >= -tol,
        tol=tol,
        m=m,
        lam=lam,
        grid_id=gid,
        low_confidence=_low_confidence(family, point, mems_guard),
    )


def check_energy_estimate(
    family: NonlinearityFamily, point: BranchPoint, mems_guard: float = 1e-6
) -> EstimateReport:
    """int f''(u) v (u')^2 dx <= lambda int f(u) dx."""
    m, lam, gid = _meta(point)
    grid = point.grid
    du = radial_gradient(point.u, grid)
    lhs = integrate_radial(family.fpp(point.u) * point.v * du**2, grid, outer=0.0)
    rhs = lam * integrate_radial(family.f(point.u), grid, outer=float(family.f(0.0)))
    margin = rhs - lhs
    tol = _tol(lhs, rhs)
    return EstimateReport(
        ENERGY, lhs, rhs, margin, margin >= -tol, tol, m, lam, gid,
        low_confidence=_low_confidence(family, point, mems_guard),
    )


def check_gH_estimate(
    family: NonlinearityFamily, point: BranchPoint, mems_guard: float = 1e-6
) -> EstimateReport:
    """int g(u) H(u) dx <= int f(u) dx."""
    m, lam, gid = _meta(point)
    grid = point.grid
    gu = np.asarray(g_aux(family, point.u), dtype=float)
    Hu = h_aux_grid(family, point.u)
    lhs = integrate_radial(gu * Hu, grid, outer=0.0)
    rhs = integrate_radial(family.f(point.u), grid, outer=float(family.f(0.0)))
    margin = rhs - lhs
    tol = _tol(lhs, rhs)
    return EstimateReport(
        G_H, lhs, rhs, margin, margin >= -tol, tol, m, lam, gid,
        low_confidence=_low_confidence(family, point, mems_guard),
    )


def check_basic_energy(
    family: NonlinearityFamily, point: BranchPoint, mems_guard: float = 1e-6
) -> EstimateReport:
    """int f'(u) u^2 dx <= int f(u) u dx."""
    m, lam, gid = _meta(point)
    grid = point.grid
    lhs = integrate_radial(family.fp(point.u) * point.u**2, grid, outer=0.0)
    rhs = integrate_radial(family.f(point.u) * point.u, grid, outer=0.0)
    margin = rhs - lhs
    tol = _tol(lhs, rhs)
    return EstimateReport(
        BASIC_ENERGY, lhs, rhs, margin, margin >= -tol, tol, m, lam, gid,
        low_confidence=_low_confidence(family, point, mems_guard),
    )


def run_pointwise_suite(
    family: NonlinearityFamily, point: BranchPoint, mems_guard: float = 1e-6
) -> list[EstimateReport]:
    """All four per-point checks in a fixed order."""
    return [
        check_pointwise_bound(family, point, mems_guard),
        check_energy_estimate(family, point, mems_guard),
        check_gH_estimate(family, point, mems_guard),
        check_basic_energy(family, point, mems_guard),
    ]


# ---------------------------------------------------------------------------
# branch suprema
# ---------------------------------------------------------------------------


def _last_quarter_trend(values: list[float]) -> float:
    """Least-squares slope per step over the trailing quarter, scaled by the
    mean magnitude there.  Flat approach to the fold means a small value."""
    if len(values) < 3:
        return 0.0
    k = max(3, len(values) // 4)
    tail = np.asarray(values[-k:], dtype=float)
    steps = np.arange(len(tail), dtype=float)
    slope = float(np.polyfit(steps, tail, 1)[0])
    scale = float(np.mean(np.abs(tail)))
    return slope / scale if scale > 0.0 else slope


def _track(name: str, branch: Branch, integrand_of_point) -> BranchSupremum:
    pts = branch.pre_fold_points
    ms, vals = [], []
    for pt in pts:
        ms.append(pt.m)
        vals.append(integrand_of_point(pt))
    sup = max(vals) if vals else 0.0
    return BranchSupremum(name, ms, vals, sup, _last_quarter_trend(vals))


def check_crucial_integrals(
    family: NonlinearityFamily, branch: Branch
) -> tuple[BranchSupremum, BranchSupremum]:
    """Track int f(u)^(3/2)/(sqrt(u)+1) dx and int f(u) dx over the pre-fold
    segment.  Defined for the regular (superlinear) families only."""
    if family.singular:
        raise ValueError("the ratio integral applies to the regular families only")
    grid = branch.grid

    def ratio(pt: BranchPoint) -> float:
        fu = family.f(pt.u)
        integrand = fu**1.5 / (np.sqrt(np.maximum(pt.u, 0.0)) + 1.0)
        return integrate_radial(integrand, grid, outer=float(family.f(0.0) ** 1.5))

    def mass(pt: BranchPoint) -> float:
        return integrate_radial(family.f(pt.u), grid, outer=float(family.f(0.0)))

    return _track(CRUCIAL_RATIO, branch, ratio), _track(MASS, branch, mass)


def check_L2(family: NonlinearityFamily, branch: Branch) -> BranchSupremum:
    """Track int f(u)^2 dx over the pre-fold segment.

    Requires a positive liminf of the curvature ratio, or the singular
    family with p > 1 — the regimes in which the bound is proved.
    """
    lims = gamma_limits(family)
    if family.singular:
        if family.p is None or family.p <= 1.0:
            raise ValueError("squared-mass bound for the singular family needs p > 1")
    elif not lims.delta_liminf > 0.0:
        raise ValueError(
            "squared-mass bound requires liminf of f f''/(f')^2 to be positive"
        )
    grid = branch.grid

    def sq(pt: BranchPoint) -> float:
        fu = family.f(pt.u)
        return integrate_radial(fu**2, grid, outer=float(family.f(0.0) ** 2))

    return _track(L2, branch, sq)


def check_fprime_integral(family: NonlinearityFamily, branch: Branch) -> BranchSupremum:
    """Track int (f'(u))^(2/gamma) dx with gamma the curvature-ratio limsup.

    Requires gamma in (0, 2); for the exponential family gamma = 1 and the
    tracked integral coincides with the squared mass.
    """
    gamma = gamma_limits(family).gamma_limsup
    if not 0.0 < gamma < 2.0:
        raise ValueError(f"exponent bound needs curvature ratio in (0, 2), got {gamma:g}")
    grid = branch.grid
    expo = 2.0 / gamma
    boundary = float(family.fp(0.0) ** expo)

    def fp_pow(pt: BranchPoint) -> float:
        return integrate_radial(family.fp(pt.u) ** expo, grid, outer=boundary)

    return _track(FPRIME, branch, fp_pow)


def classify_holder_criterion(family: NonlinearityFamily, alpha: float, N: int) -> bool:
    """Whether a uniform L^alpha bound on f(u) forces sup u < 1.

    For the singular family the sufficient exponent is
    alpha >= (p+1) N / (4 p).
    """
    if not family.singular:
        raise ValueError("the touchdown criterion applies to the singular family")
    if not alpha > 1.0:
        raise ValueError("needs alpha > 1")
    return alpha >= (family.p + 1.0) * N / (4.0 * family.p)
