from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import special

from src.fields.grid import Trajectory
from src.geometry.cone import CoeffKind
from src.kernels import spectral
from src.scheme.config import SchemeConfig
from src.scheme.duhamel import DuhamelPropagator, nonlinear_terms
from src.utils.errors import DomainError

# Step defects of a converged march stay below this multiple of fp_tol (sup-scaled)
DEFECT_FACTOR = 10.0


@dataclass(frozen=True)
class ResidualReport:
    """Strong-form residual norms on interior slices and step defects of the scheme.

    norms[i] belongs to times[i]; defects[m] is the L^2 defect of the step
    s_m -> s_(m+1) measured against the midpoint integrating-factor rule the
    march solves, so a converged march leaves defects at the fixed-point tolerance.
    """
    times: List[float]
    norms: List[float]
    defects: List[float]
    forced: bool

    @property
    def max_norm(self) -> float:
        return max(self.norms) if self.norms else 0.0

    @property
    def max_defect(self) -> float:
        return max(self.defects) if self.defects else 0.0


def _l2(samples: np.ndarray, config: SchemeConfig) -> float:
    return float(np.sqrt(config.grid.cell_volume * np.sum(samples * samples)))


def defect_tolerance(trajectory: Trajectory, config: SchemeConfig) -> float:
    """L^2 bound for step defects of a march that met its fixed-point tolerance on every step.

    The march stops once the sup change drops below fp_tol max(1, |W|); the L^2
    norm over the box adds at most the square root of n times its volume.
    """
    spec = config.grid
    volume = (2.0 * spec.half_extent) ** spec.n
    scale = max(1.0, float(np.abs(trajectory.samples).max()))
    return DEFECT_FACTOR * config.fp_tol * scale * max(1.0, float(np.sqrt(spec.n * volume)))


def step_defects(trajectory: Trajectory, config: SchemeConfig,
                 forcing: Optional[Trajectory] = None) -> List[float]:
    """L^2 defects of W_(m+1) = A E(ds) W_m + ds A' E(ds/2) N((W_m + W_(m+1)) / 2).

    With a forcing f the viscous factor E(ds) - 1 is replaced by its action on
    the forcing, -ds phi(-nu ds |xi|^2) f with phi(z) = (e^z - 1) / z, taken at
    the left slice. f = -nu Delta w then reproduces the unforced defect.
    """
    prop = DuhamelPropagator(config)
    spec = config.grid
    w = trajectory.samples
    phi = special.exprel(-config.nu * config.ds * spectral.wavenumber_sq(spec))
    defects = []
    for m in range(len(trajectory) - 1):
        source = nonlinear_terms(0.5 * (w[m] + w[m + 1]), float(prop.t_mid[m]), config)
        if forcing is None:
            linear = prop.advance(w[m], m)
        else:
            drift = spectral.apply_multiplier(forcing.samples[m], spec, phi)
            linear = prop.damp_full[m] * (w[m] - config.ds * drift)
        d = w[m + 1] - linear - prop.source_step(source, m)
        defects.append(_l2(d, config))
    return defects


def residual_check(trajectory: Trajectory, config: SchemeConfig,
                   forcing: Optional[Trajectory] = None) -> ResidualReport:
    """Discrete L^2 residual of the strong form plus the step defects of the scheme.

    Unforced: w_s - nu Delta w + damping(t) w - N(w). With a forcing f the
    viscosity-free form w_s + damping(t) w - N(w) + f is evaluated instead, so
    f = -nu Delta w reproduces the unforced residual. w_s uses centered
    differences and carries their O(ds^2) truncation error; Delta uses the
    full-band multiplier of the heat step.
    """
    if len(trajectory) != config.slices or trajectory.spec != config.grid:
        raise DomainError("trajectory does not live on the scheme's s-grid and y-grid")
    if len(trajectory) < 3:
        raise DomainError("centered differences need at least three slices")
    if forcing is not None and forcing.samples.shape != trajectory.samples.shape:
        raise DomainError(f"forcing shape {forcing.samples.shape} != {trajectory.samples.shape}")
    spec = config.grid
    chart = config.chart
    w = trajectory.samples
    ds = config.ds
    minus_k_sq = -spectral.wavenumber_sq(spec)
    times, norms = [], []
    for m in range(1, len(trajectory) - 1):
        t = float(config.t_grid[m])
        r = (w[m + 1] - w[m - 1]) / (2.0 * ds)
        if forcing is None:
            r = r - config.nu * spectral.apply_multiplier(w[m], spec, minus_k_sq)
        else:
            r = r + forcing.samples[m]
        if config.toggles.damping:
            r = r + chart.coeff(CoeffKind.DAMPING, t) * w[m]
        r = r - nonlinear_terms(w[m], t, config)
        times.append(float(config.s_grid[m]))
        norms.append(_l2(r, config))
    return ResidualReport(times=times, norms=norms,
                          defects=step_defects(trajectory, config, forcing),
                          forced=forcing is not None)
