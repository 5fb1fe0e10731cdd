import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.integrate import trapezoid

from src.fields.grid import Frame, Trajectory
from src.fields.transforms import laplacian_via_cone
from src.geometry.cone import ConeChart
from src.kernels import spectral
from src.utils.errors import DomainError

DEFAULT_EPS_FRACTIONS = (1e-2, 1e-3, 1e-4)


@dataclass
class ForcingReport:
    """Forcings f^w = -nu Delta_y w and f^v = -nu Delta_x v with their L^2 norms.

    f_v is sampled at the cone points x = tan(y / (rho - t)) of the scheme grid.
    l2_fv[k] is the L^2 norm over [0, rho - eps[k]] x R^n in original coordinates;
    eps_covered[k] is False when the trajectory stops before rho - eps[k].
    """
    f_w: Trajectory
    f_v: Trajectory
    eps: List[float]
    l2_fw: List[float]
    l2_fv: List[float]
    eps_covered: List[bool]
    notes: List[str] = field(default_factory=list)

    @property
    def cauchy(self) -> bool:
        """Successive differences of the f^v ladder do not grow; False while a rung is uncovered."""
        if not all(self.eps_covered):
            return False
        diffs = np.abs(np.diff(self.l2_fv))
        return bool(np.all(diffs[1:] <= diffs[:-1] * (1.0 + 1e-12) + 1e-300))


def _time_l2(t: np.ndarray, spatial_sq: np.ndarray, t_end: float) -> float:
    """sqrt of the trapezoid integral of spatial_sq over t in [0, t_end] (slices up to t_end)."""
    keep = t <= t_end
    if keep.sum() < 2:
        return 0.0
    return float(np.sqrt(trapezoid(spatial_sq[keep], t[keep])))


def synthesize_forcing(w: Trajectory, nu: float, chart: ConeChart,
                       eps_fractions: Sequence[float] = DEFAULT_EPS_FRACTIONS) -> ForcingReport:
    """Forcings that turn the viscous trajectory into a solution of the forced inviscid problem."""
    if nu < 0:
        raise DomainError(f"nu must be nonnegative, got {nu}")
    if w.frame is not Frame.CONE_Y:
        raise DomainError(f"forcing synthesis expects a cone_y trajectory, got {w.frame.value}")
    spec = w.spec
    minus_k_sq = -spectral.wavenumber_sq(spec)
    t = chart.t_of_s(w.times)
    f_w = np.stack([-nu * spectral.apply_multiplier(w.samples[m], spec, minus_k_sq)
                    for m in range(len(w))])

    f_v = []
    fw_sq, fv_sq = [], []
    y = spec.axis()
    for m in range(len(w)):
        lap = laplacian_via_cone(w.slice(m), chart)
        f_v.append(-nu * lap.samples)
        fw_sq.append(spec.cell_volume * float(np.sum(f_w[m] ** 2)))
        # integrate over the open cone section with dx = prod(1 + x_j^2) / (rho - t)^n dy
        inside = np.abs(y) < chart.section_half_width(t[m])
        x = np.where(inside, np.tan(np.where(inside, y, 0.0) / (chart.rho - t[m])), 0.0)
        weight_1d = np.where(inside, (1.0 + x * x) / (chart.rho - t[m]), 0.0)
        weight = np.ones(spec.shape)
        for a in range(spec.n):
            weight = weight * weight_1d.reshape([-1 if a == b else 1 for b in range(spec.n)])
        fv_sq.append(spec.cell_volume * float(np.sum(weight * f_v[-1] ** 2)))
    f_v = np.stack(f_v)

    eps = [float(e) * chart.rho for e in eps_fractions]
    covered = [bool(t[-1] >= chart.rho - e) for e in eps]
    l2_fw = [_time_l2(t, np.asarray(fw_sq), chart.rho - e) for e in eps]
    l2_fv = [_time_l2(t, np.asarray(fv_sq), chart.rho - e) for e in eps]
    notes = []
    if not all(covered):
        notes.append("trajectory ends before rho - eps for some ladder entries")
        logging.warning(f"forcing ladder: eps values {[e for e, c in zip(eps, covered) if not c]} "
                        f"lie beyond the simulated range")
    return ForcingReport(
        f_w=w.with_samples(f_w, quantity="f_w"),
        f_v=w.with_samples(f_v, quantity="f_v", evaluated_at="cone_points"),
        eps=eps, l2_fw=l2_fw, l2_fv=l2_fv, eps_covered=covered, notes=notes,
    )
