"""Boundary scans over the (overlap, transmission, variance) axes.

For each transmission value and signal overlap, the entangled region is an
interval of variances starting at the physical floor: adding symmetric noise
to both conditionals is a positive-semidefinite perturbation of the pencil,
so once the record is compatible with a separable state it stays compatible
as the variance grows.  The boundary variance is therefore found by plain
bisection on the solver verdict, with Inconclusive counted as the
non-entangled side (a security tool must under-claim entanglement).
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .evm import DataError, Variant, separability_lmi
from .scenario import CoherentScenario, build_problem
from .solver import SolverOptions, VerdictKind, solve_feasibility

__all__ = [
    "ScanConfig",
    "BoundaryPoint",
    "ScanResult",
    "scenario_from_axes",
    "boundary_sigma",
    "run_scan",
]

DEFAULT_TRANSMISSIONS = (0.1, 0.25, 0.5, 1.0)


def _default_overlaps() -> tuple[float, ...]:
    return tuple(float(v) for v in np.geomspace(0.02, 0.98, 10))


@dataclass(frozen=True)
class ScanConfig:
    """Grid and tolerances for a boundary scan.

    ``sigma_lo``/``sigma_hi`` default to the vacuum variance ``kappa/2`` and
    four times it.  Grids must be sorted ascending; output row order is then
    (transmission, overlap) regardless of ``workers``.
    """

    transmissions: tuple[float, ...] = DEFAULT_TRANSMISSIONS
    overlaps: tuple[float, ...] = field(default_factory=_default_overlaps)
    sigma_lo: Optional[float] = None
    sigma_hi: Optional[float] = None
    bisect_tol: float = 1e-3
    kappa: float = 2.0
    variant: Variant = Variant.HETERODYNE
    tied_f: bool = False
    solver: SolverOptions = field(default_factory=SolverOptions)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "transmissions", tuple(float(t) for t in self.transmissions))
        object.__setattr__(self, "overlaps", tuple(float(o) for o in self.overlaps))
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.transmissions or not self.overlaps:
            raise DataError("transmissions and overlaps must be nonempty")
        if list(self.transmissions) != sorted(self.transmissions):
            raise DataError("transmissions must be sorted ascending")
        if list(self.overlaps) != sorted(self.overlaps):
            raise DataError("overlaps must be sorted ascending")
        if any(t <= 0 for t in self.transmissions):
            raise DataError("transmissions must be positive")
        if any(not 0.0 < o < 1.0 for o in self.overlaps):
            raise DataError("overlaps must lie strictly inside (0, 1)")
        if self.kappa <= 0:
            raise DataError(f"kappa must be positive, got {self.kappa!r}")
        if self.bisect_tol <= 0:
            raise DataError("bisect_tol must be positive")
        if self.workers < 1:
            raise DataError("workers must be >= 1")
        lo, hi = self.resolved_sigma_bounds()
        if lo < self.kappa / 2.0 - 1e-12:
            raise DataError(f"sigma_lo must be at least the vacuum variance "
                            f"kappa/2 = {self.kappa / 2.0} (got {lo!r})")
        if hi <= lo:
            raise DataError("sigma_hi must exceed sigma_lo")

    def resolved_sigma_bounds(self) -> tuple[float, float]:
        lo = self.kappa / 2.0 if self.sigma_lo is None else float(self.sigma_lo)
        hi = 2.0 * self.kappa if self.sigma_hi is None else float(self.sigma_hi)
        return lo, hi


@dataclass(frozen=True)
class BoundaryPoint:
    """One row of a scan: the bisected boundary variance at a grid point.

    ``verdict_at_lo`` is the verdict at the lower variance bracket; when it
    is not "infeasible" the point is degenerate (no entanglement certified
    anywhere in the bracket) and ``sigma_star`` sits at the bracket edge.
    ``max_delta_ratio`` tracks (sigma_sq_shot - 1) / (2*transmission) over
    the probes that came back infeasible, in vacuum-variance-one units.
    """

    transmission: float
    overlap: float
    sigma_star: Optional[float]
    verdict_at_lo: str
    iterations: int
    wall_time: float
    max_delta_ratio: Optional[float] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class ScanResult:
    points: tuple[BoundaryPoint, ...]
    summary: dict


def scenario_from_axes(overlap: float, transmission: float, sigma_sq: float,
                       kappa: float = 2.0,
                       variant: Variant = Variant.HETERODYNE) -> CoherentScenario:
    """Scenario from the scan axes: signal overlap and transmission ratio.

    The overlap fixes ``alpha_sq = -ln(overlap)/2`` and the transmission
    ratio fixes ``c = sqrt(transmission * alpha_sq)``; a priori probabilities
    are symmetric.
    """
    if not 0.0 < overlap < 1.0:
        raise DataError(f"overlap must lie strictly inside (0, 1), got {overlap!r}")
    if transmission <= 0:
        raise DataError(f"transmission must be positive, got {transmission!r}")
    alpha_sq = -0.5 * float(np.log(overlap))
    c = float(np.sqrt(transmission * alpha_sq))
    return CoherentScenario(alpha_sq=alpha_sq, c=c, sigma_sq=sigma_sq,
                            kappa=kappa, variant=variant)


def _solve_at(overlap: float, transmission: float, sigma_sq: float,
              cfg: ScanConfig) -> VerdictKind:
    sc = scenario_from_axes(overlap, transmission, sigma_sq, cfg.kappa, cfg.variant)
    data = build_problem(sc)
    lmi = separability_lmi(data, tied_f=cfg.tied_f)
    return solve_feasibility(lmi, cfg.solver).kind


def boundary_sigma(overlap: float, transmission: float, cfg: ScanConfig) -> BoundaryPoint:
    """Bisect the entangled-to-unresolved transition in the variance.

    Noise monotonicity guarantees a single transition, so the bracket
    endpoints decide everything: a non-infeasible verdict at ``sigma_lo``
    reports the point as degenerate at the lower edge, an infeasible verdict
    at ``sigma_hi`` reports saturation at the upper edge; neither is an
    error.
    """
    start = time.perf_counter()
    lo, hi = cfg.resolved_sigma_bounds()
    solves = 0
    max_ratio = None

    def classify(sigma_sq: float) -> VerdictKind:
        nonlocal solves, max_ratio
        kind = _solve_at(overlap, transmission, sigma_sq, cfg)
        solves += 1
        if kind is VerdictKind.INFEASIBLE:
            shot = sigma_sq * 2.0 / cfg.kappa
            ratio = (shot - 1.0) / (2.0 * transmission)
            max_ratio = ratio if max_ratio is None else max(max_ratio, ratio)
        return kind

    v_lo = classify(lo)
    if v_lo is not VerdictKind.INFEASIBLE:
        return BoundaryPoint(transmission=transmission, overlap=overlap,
                             sigma_star=lo, verdict_at_lo=v_lo.value,
                             iterations=solves,
                             wall_time=time.perf_counter() - start,
                             max_delta_ratio=max_ratio)
    v_hi = classify(hi)
    if v_hi is VerdictKind.INFEASIBLE:
        return BoundaryPoint(transmission=transmission, overlap=overlap,
                             sigma_star=hi, verdict_at_lo=v_lo.value,
                             iterations=solves,
                             wall_time=time.perf_counter() - start,
                             max_delta_ratio=max_ratio)
    a, b = lo, hi
    while b - a > cfg.bisect_tol:
        mid = 0.5 * (a + b)
        if classify(mid) is VerdictKind.INFEASIBLE:
            a = mid
        else:
            b = mid
    return BoundaryPoint(transmission=transmission, overlap=overlap,
                         sigma_star=0.5 * (a + b), verdict_at_lo=v_lo.value,
                         iterations=solves,
                         wall_time=time.perf_counter() - start,
                         max_delta_ratio=max_ratio)


def _point_task(args) -> BoundaryPoint:
    overlap, transmission, cfg = args
    try:
        return boundary_sigma(overlap, transmission, cfg)
    except Exception as exc:  # per-point failures stay in-row
        return BoundaryPoint(transmission=transmission, overlap=overlap,
                             sigma_star=None, verdict_at_lo="error",
                             iterations=0, wall_time=0.0,
                             error=f"{type(exc).__name__}: {exc}")


def run_scan(cfg: ScanConfig) -> ScanResult:
    """Scan the full grid and gather rows in deterministic order.

    Rows come back sorted by (transmission, overlap) whatever the worker
    count; per-point failures are recorded in their row and do not stop the
    scan.  The summary reports the largest observed excess-noise ratio
    delta/(2*transmission) among infeasible probes.
    """
    tasks = [(ov, tr, cfg) for tr in cfg.transmissions for ov in cfg.overlaps]
    if cfg.workers == 1:
        points = [_point_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            points = list(pool.map(_point_task, tasks))
    points.sort(key=lambda p: (p.transmission, p.overlap))
    ratios = [p.max_delta_ratio for p in points if p.max_delta_ratio is not None]
    summary = {
        "rows": len(points),
        "entangled_at_sigma_lo": sum(p.verdict_at_lo == VerdictKind.INFEASIBLE.value
                                     for p in points),
        "failed_rows": sum(p.error is not None for p in points),
        "total_solver_calls": sum(p.iterations for p in points),
        "max_delta_over_2eta": max(ratios) if ratios else None,
    }
    return ScanResult(points=tuple(points), summary=summary)
