"""Viscosity sweeps and the nu -> 0 extrapolation of the center series."""
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from tqdm import tqdm

from src.fields.grid import VectorField
from src.scheme.config import SchemeConfig
from src.scheme.picard import march, trajectory_norm
from src.utils.errors import DomainError

# Bracket for the fitted convergence order in nu
ORDER_BRACKET = (1e-3, 20.0)
# Differences below this (relative to the series scale) are treated as converged
DIFFERENCE_FLOOR = 1e-13


@dataclass
class SweepResult:
    nus: List[float]
    times: np.ndarray
    trajectories: Dict[float, np.ndarray]
    norms: Dict[float, float]
    extrapolated: np.ndarray
    error: np.ndarray
    order: Optional[float] = None
    declined: bool = False
    rho: float = 0.0
    notes: List[str] = field(default_factory=list)


def _check_nus(nus: Sequence[float]) -> List[float]:
    nus = [float(nu) for nu in nus]
    if not nus:
        raise DomainError("at least one viscosity is needed")
    if any(nu <= 0 for nu in nus):
        raise DomainError(f"every nu must be positive, got {nus}")
    if any(b >= a for a, b in zip(nus, nus[1:])):
        raise DomainError(f"nus must be strictly decreasing, got {nus}")
    return nus


def fit_order(nus: Sequence[float], d_coarse: float, d_fine: float) -> float:
    """Order p with |S(nu_a) - S(nu_b)| / |S(nu_b) - S(nu_c)| = (nu_a^p - nu_b^p) / (nu_b^p - nu_c^p)."""
    a, b, c = nus
    target = d_coarse / d_fine

    def mismatch(p: float) -> float:
        return np.log((a ** p - b ** p) / (b ** p - c ** p)) - np.log(target)

    lo, hi = ORDER_BRACKET
    if mismatch(lo) * mismatch(hi) > 0:
        raise DomainError(f"difference ratio {target:.4g} outside the order bracket {ORDER_BRACKET}")
    return float(brentq(mismatch, lo, hi, xtol=1e-12))


def richardson(nus: Sequence[float], series: Sequence[np.ndarray], order: float) -> np.ndarray:
    """Remove the leading nu^order term using the two smallest viscosities."""
    b, c = nus[-2], nus[-1]
    s_b, s_c = series[-2], series[-1]
    return s_c + (s_c - s_b) * c ** order / (b ** order - c ** order)


def extrapolate(nus: Sequence[float], series: Sequence[np.ndarray]):
    """Richardson extrapolation with an order fitted from the three smallest nu.

    Returns (extrapolated, error, order, declined, note).
    """
    raw = np.asarray(series[-1], dtype=float)
    if len(nus) < 3:
        return raw, np.full_like(raw, np.nan), None, True, "fewer than three viscosities"
    last_nus = list(nus[-3:])
    s_a, s_b, s_c = (np.asarray(x, dtype=float) for x in series[-3:])
    d1, d2 = s_b - s_a, s_c - s_b
    scale = max(float(np.abs(s_c).max()), 1.0)
    n1, n2 = float(np.abs(d1).max()), float(np.abs(d2).max())
    if n1 <= DIFFERENCE_FLOOR * scale and n2 <= DIFFERENCE_FLOOR * scale:
        return raw, np.zeros_like(raw), None, False, "series independent of nu"
    significant = np.abs(d2) > DIFFERENCE_FLOOR * scale
    if n2 >= n1 or np.any(np.sign(d1[significant]) != np.sign(d2[significant])):
        return raw, np.full_like(raw, np.nan), None, True, "non-monotone nu-differences"
    try:
        order = fit_order(last_nus, n1, n2)
    except DomainError as e:
        return raw, np.full_like(raw, np.nan), None, True, str(e)
    result = richardson(last_nus, [s_b, s_c], order)
    return result, np.abs(result - s_c), order, False, f"fitted order {order:.4g}"


def viscosity_sweep(config_base: SchemeConfig, nus: Sequence[float],
                    data: Optional[VectorField] = None, progress: bool = True) -> SweepResult:
    """March the scheme once per nu and extrapolate the center series w(s, 0) to nu = 0."""
    nus = _check_nus(nus)
    trajectories: Dict[float, np.ndarray] = {}
    norms: Dict[float, float] = {}
    with tqdm(total=len(nus), desc="Viscosity sweep", unit="nu", disable=not progress) as pbar:
        for nu in nus:
            config = dataclasses.replace(config_base, nu=nu)
            logging.info(f"Sweep member nu={nu:g} (rho={config.chart.rho:g})")
            trajectory = march(config, data, progress=False)
            trajectories[nu] = trajectory.center_series(0)
            norms[nu] = trajectory_norm(trajectory.samples, config).combined
            if not np.isfinite(norms[nu]):
                raise DomainError(f"non-finite norm for nu={nu}")
            pbar.update(1)

    series = [trajectories[nu] for nu in nus]
    extrapolated, error, order, declined, note = extrapolate(nus, series)
    if declined:
        logging.warning(f"nu -> 0 extrapolation declined: {note}; returning the nu={nus[-1]:g} series")
    else:
        logging.info(f"nu -> 0 extrapolation: {note}")
    return SweepResult(nus=nus, times=config_base.s_grid, trajectories=trajectories, norms=norms,
                       extrapolated=extrapolated, error=error, order=order, declined=declined,
                       rho=config_base.chart.rho, notes=[note])
