"""Nonlinear terms of the transformed equation and the discrete Duhamel integral.

On the fixed y-grid the viscous part is the constant-coefficient multiplier
exp(-nu ds |xi|^2) and the damping term integrates exactly to the factor
(rho - t_b) / (rho - t_a). The nonlinear terms enter through the midpoint rule.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.fields.grid import Frame, Trajectory, VectorField
from src.geometry.cone import CoeffKind, ConeChart
from src.kernels import spectral
from src.kernels.heat import heat_convolve, heat_convolve_grad, heat_multiplier
from src.kernels.riesz import RieszKernel
from src.scheme.config import ConvectionVariant, SchemeConfig
from src.utils.errors import DomainError, SchemeDivergedError


def _along(values: np.ndarray, axis: int, n: int) -> np.ndarray:
    return values.reshape([-1 if axis == b else 1 for b in range(n)])


@dataclass(frozen=True)
class SectionGeometry:
    """Cylinder factors of one slice on the scheme grid, one broadcastable array per axis."""
    t: float
    z: List[np.ndarray]
    y: List[np.ndarray]
    cos2: List[np.ndarray]
    sec2: List[np.ndarray]
    taper: np.ndarray


def section_geometry(config: SchemeConfig, t: float) -> SectionGeometry:
    """z = y / (rho - t) clipped to the section, and the C^2 taper on its outer rim."""
    spec = config.grid
    n = spec.n
    y = spec.axis()
    z = config.chart.z_of_y(t, y, clip=True)
    profile = spectral.taper_profile(z, np.pi / 2)
    cos2 = np.cos(z) ** 2
    sec2 = np.zeros_like(cos2)
    np.divide(1.0, cos2, out=sec2, where=profile > 0)
    taper = np.ones(spec.shape)
    for a in range(n):
        taper = taper * _along(profile, a, n)
    return SectionGeometry(
        t=float(t),
        z=[_along(z, a, n) for a in range(n)],
        y=[_along(y, a, n) for a in range(n)],
        cos2=[_along(cos2, a, n) for a in range(n)],
        sec2=[_along(sec2, a, n) for a in range(n)],
        taper=taper,
    )


def convection_coefficient(variant: ConvectionVariant, chart: ConeChart, t: float,
                           z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Coefficient multiplying d_{y_j} w_i in the artificial convection term.

    z = arctan(x_j) and y = (rho - t) z inside the section; PRINTED_B uses the
    grid coordinate y itself.
    """
    if variant is ConvectionVariant.CHAIN_RULE:
        return chart.coeff(CoeffKind.BURGERS, t) * z
    if variant is ConvectionVariant.PRINTED_A:
        return chart.coeff(CoeffKind.CONVECTION, t) * z
    if variant is ConvectionVariant.PRINTED_B:
        return chart.coeff(CoeffKind.BURGERS, t) * y
    raise DomainError(f"unknown convection variant {variant}")


def _gradients(samples: np.ndarray, config: SchemeConfig) -> List[List[np.ndarray]]:
    """grads[i][j] = d_{y_j} w_i."""
    spec = config.grid
    k = spectral.wavenumbers(spec)
    grads = []
    for i in range(samples.shape[0]):
        coeffs = spectral.forward(samples[i], spec)
        grads.append([spectral.inverse(1j * k[j] * coeffs, spec) for j in range(spec.n)])
    return grads


def leray_source(grads: List[List[np.ndarray]], geo: SectionGeometry) -> np.ndarray:
    """Tapered strain product sum_{j,m} cos^2 z_j cos^2 z_m w_{m,j} w_{j,m} prod_l sec^2 z_l."""
    n = len(grads)
    strain = sum(geo.cos2[j] * geo.cos2[m] * grads[m][j] * grads[j][m]
                 for j in range(n) for m in range(n))
    measure = np.ones_like(geo.taper)
    for a in range(n):
        measure = measure * geo.sec2[a]
    return geo.taper * measure * strain


def leray_term(grads: List[List[np.ndarray]], t: float, config: SchemeConfig,
               geo: SectionGeometry) -> np.ndarray:
    """coeff(Leray, t) K_i * source for every component, sharing one forward FFT."""
    spec = config.grid
    kernel = RieszKernel(spec.n)
    source_hat = spectral.forward(leray_source(grads, geo), spec)
    coeff = config.chart.coeff(CoeffKind.LERAY, t)
    return np.stack([coeff * spectral.inverse(source_hat * kernel.symbol(spec, i), spec)
                     for i in range(spec.n)])


def nonlinear_terms(samples: np.ndarray, t: float, config: SchemeConfig) -> np.ndarray:
    """Right-hand side N(w) in w_s - nu Delta w + damping(t) w = N(w).

    N_i = -Burgers_i + Convection_i + Leray_i for the active toggles; Burgers and
    convection sources carry the section taper.
    """
    spec = config.grid
    if samples.shape != (spec.n,) + spec.shape:
        raise DomainError(f"expected samples of shape {(spec.n,) + spec.shape}, got {samples.shape}")
    toggles = config.toggles
    out = np.zeros_like(samples)
    if not toggles.nonlinear:
        return out
    n = spec.n
    chart = config.chart
    geo = section_geometry(config, t)
    grads = _gradients(samples, config)
    if toggles.burgers:
        c = chart.coeff(CoeffKind.BURGERS, t)
        for i in range(n):
            out[i] -= c * geo.taper * sum(geo.cos2[j] * samples[j] * grads[i][j] for j in range(n))
    if toggles.convection:
        factors = [convection_coefficient(config.convection_variant, chart, t, geo.z[j], geo.y[j])
                   for j in range(n)]
        for i in range(n):
            out[i] += geo.taper * sum(factors[j] * grads[i][j] for j in range(n))
    if toggles.leray:
        out += leray_term(grads, t, config, geo)
    return out


class DuhamelPropagator:
    """Exact heat and damping factors of one s-step plus the midpoint times.

    heat_full/heat_half are exp(-nu ds |xi|^2) and exp(-nu ds/2 |xi|^2);
    damp_full[m] and damp_half[m] carry the damping factor from s_m and from
    the midpoint of step m to s_{m+1} (ones when damping is off).
    """

    def __init__(self, config: SchemeConfig):
        self.config = config
        chart = config.chart
        self.s = config.s_grid
        self.t = config.t_grid
        self.ds = config.ds
        self.s_mid = 0.5 * (self.s[:-1] + self.s[1:])
        self.t_mid = chart.t_of_s(self.s_mid)
        template = VectorField(config.grid, np.zeros((1,) + config.grid.shape), Frame.CONE_Y)
        self.heat_full = heat_multiplier(template, config.nu, self.ds)
        self.heat_half = heat_multiplier(template, config.nu, 0.5 * self.ds)
        if config.toggles.damping:
            rho = chart.rho
            self.damp_full = (rho - self.t[1:]) / (rho - self.t[:-1])
            self.damp_half = (rho - self.t[1:]) / (rho - self.t_mid)
        else:
            self.damp_full = np.ones(self.s.size - 1)
            self.damp_half = np.ones(self.s.size - 1)

    def heat_step(self, samples: np.ndarray) -> np.ndarray:
        return spectral.apply_multiplier(samples, self.config.grid, self.heat_full)

    def source_step(self, source: np.ndarray, m: int, axis: Optional[int] = None) -> np.ndarray:
        """ds * damp_half[m] * (G_nu(ds/2) * source), or its axis derivative."""
        if axis is None:
            smoothed = spectral.apply_multiplier(source, self.config.grid, self.heat_half)
        else:
            field = VectorField(self.config.grid, source, Frame.CONE_Y, float(self.s_mid[m]))
            smoothed = heat_convolve_grad(field, self.config.nu, 0.5 * self.ds, axis).samples
        return self.ds * self.damp_half[m] * smoothed

    def advance(self, samples: np.ndarray, m: int) -> np.ndarray:
        """Free evolution of a slice from s_m to s_{m+1}."""
        return self.damp_full[m] * self.heat_step(samples)


def _check_finite(samples: np.ndarray, m: int, s: float) -> None:
    if not np.all(np.isfinite(samples)):
        raise SchemeDivergedError("non-finite values in the nonlinear terms", m, s, float("nan"))


def free_evolution(data: VectorField, config: SchemeConfig, damping: bool) -> Trajectory:
    """Heat flow of the data on the s-grid, times the damping factor when requested."""
    if data.spec != config.grid:
        raise DomainError(f"data grid {data.spec} does not match the scheme grid {config.grid}")
    chart = config.chart
    slices = [data.samples]
    for s in config.s_grid[1:]:
        slices.append(heat_convolve(data, config.nu, float(s)).samples)
    samples = np.stack(slices)
    if damping:
        factor = (chart.rho - config.t_grid) / chart.rho
        samples = samples * factor.reshape((-1,) + (1,) * (samples.ndim - 1))
    return Trajectory(config.grid, config.s_grid, samples, Frame.CONE_Y,
                      {"quantity": "free_evolution", "damping": damping})


def duhamel_rhs(w_prev: Trajectory, config: SchemeConfig,
                axis: Optional[int] = None) -> Trajectory:
    """Duhamel contribution of the nonlinear terms evaluated on w_prev.

    D(s_0) = 0 and D(s_{m+1}) = A_m E(ds) D(s_m) + ds A_m' E(ds/2) N(w_mid),
    where w_mid averages slices m and m+1 of w_prev, A are the damping factors
    and E the heat multipliers. With axis given, the spatial derivative of the
    contribution is returned (sources convolved with the heat-kernel gradient).
    """
    if len(w_prev) != config.slices:
        raise DomainError(f"w_prev has {len(w_prev)} slices, the scheme uses {config.slices}")
    if axis is not None and not 0 <= axis < config.chart.n:
        raise DomainError(f"axis {axis} out of range for dimension {config.chart.n}")
    prop = DuhamelPropagator(config)
    acc = np.zeros_like(w_prev.samples[0])
    out = [acc]
    if config.toggles.nonlinear:
        for m in range(config.slices - 1):
            mid = 0.5 * (w_prev.samples[m] + w_prev.samples[m + 1])
            source = nonlinear_terms(mid, float(prop.t_mid[m]), config)
            _check_finite(source, m, float(prop.s_mid[m]))
            acc = prop.advance(acc, m) + prop.source_step(source, m, axis)
            out.append(acc)
    else:
        out = [acc] * config.slices
    logging.debug(f"duhamel_rhs: {config.slices} slices, axis={axis}")
    return Trajectory(config.grid, config.s_grid, np.stack(out), Frame.CONE_Y,
                      {"quantity": "duhamel" if axis is None else f"duhamel_d{axis}"})
