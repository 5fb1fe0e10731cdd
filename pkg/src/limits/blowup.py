"""Euler-side reconstruction of the center value and the blow-up order fit."""
import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from src.geometry.cone import ConeChart
from src.limits.sweep import SweepResult
from src.utils.errors import DomainError

# Decades of rho - t covered by the order fit
FIT_DECADES = 2.0
# Decades of rho - t averaged for the tail estimate
TAIL_DECADES = 1.0
# Two-sided normal quantile of the reported confidence interval
CONFIDENCE_Z = 1.96


@dataclass(frozen=True)
class CenterSeries:
    t: np.ndarray
    v: np.ndarray


@dataclass
class BlowupReport:
    fitted_order: float
    order_interval: List[float]
    bounded_product: float
    final_product: float
    tail_limit_estimate: float
    tail_uncertainty: float
    sign_change: bool = False
    fit_points: int = 0
    notes: List[str] = field(default_factory=list)


def center_series_from_w(s: Sequence[float], w_center: Sequence[float],
                         chart: ConeChart) -> CenterSeries:
    """v(t, 0) = w(s(t), 0) / (rho - t)."""
    t = chart.t_of_s(np.asarray(s, dtype=float))
    if np.any(t >= chart.rho):
        raise DomainError("series reaches t = rho where v is undefined")
    return CenterSeries(t=np.asarray(t, dtype=float),
                        v=np.asarray(w_center, dtype=float) / (chart.rho - t))


def reconstruct_center_series(sweep: SweepResult, chart: ConeChart) -> CenterSeries:
    """Reconstruct v(t, 0) from the extrapolated center series of a sweep."""
    return center_series_from_w(sweep.times, sweep.extrapolated, chart)


def _linear_fit(x: np.ndarray, y: np.ndarray):
    """Least-squares line y = slope x + intercept with standard errors."""
    design = np.column_stack([x, np.ones_like(x)])
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    if x.size > 2:
        resid = y - design @ coef
        sigma2 = float(resid @ resid) / (x.size - 2)
        cov = sigma2 * np.linalg.inv(design.T @ design)
        stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
    else:
        stderr = np.zeros(2)
    return float(coef[0]), float(coef[1]), float(stderr[0]), float(stderr[1])


def blowup_fit(t: Sequence[float], v: Sequence[float], chart: ConeChart) -> BlowupReport:
    """Fit |v(t, 0)| ~ (rho - t)^(-order) over the final two decades of rho - t.

    The tail estimate of w(s, 0) = v (rho - t) as s -> infinity is the intercept of a
    linear fit in (rho - t) over the final decade.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.shape != v.shape or t.size < 3:
        raise DomainError("need matching t and v series with at least three samples")
    gap = chart.rho - t
    if np.any(gap <= 0):
        raise DomainError("every sample must satisfy t < rho")
    if gap.max() / gap.min() < 10 ** FIT_DECADES:
        raise DomainError(f"series covers {np.log10(gap.max() / gap.min()):.2f} decades of "
                          f"rho - t; at least {FIT_DECADES:g} are needed")
    notes = []
    window = gap <= gap.min() * 10 ** FIT_DECADES
    sign_change = bool(np.any(v[window] > 0) and np.any(v[window] < 0))
    if sign_change:
        logging.warning("v(t, 0) changes sign on the fit window; fitting |v|")
        notes.append("sign change on the fit window")
    usable = window & (v != 0)
    if usable.sum() < 2:
        raise DomainError("fewer than two nonzero samples in the fit window")
    slope, _, slope_err, _ = _linear_fit(-np.log(gap[usable]), np.log(np.abs(v[usable])))

    w = v * gap
    tail = gap <= gap.min() * 10 ** TAIL_DECADES
    if tail.sum() >= 2:
        _, intercept, _, intercept_err = _linear_fit(gap[tail], w[tail])
        uncertainty = max(intercept_err, abs(float(w[tail].mean()) - intercept))
    else:
        intercept, uncertainty = float(w[-1]), float("nan")
        notes.append("final decade holds a single sample")
    half = CONFIDENCE_Z * slope_err
    return BlowupReport(
        fitted_order=slope,
        order_interval=[slope - half, slope + half],
        bounded_product=float(np.abs(w).max()),
        final_product=float(abs(w[np.argmin(gap)])),
        tail_limit_estimate=float(intercept),
        tail_uncertainty=float(uncertainty),
        sign_change=sign_change,
        fit_points=int(usable.sum()),
        notes=notes,
    )
