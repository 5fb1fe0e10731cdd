import logging
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from src.fields.grid import Frame, GridSpec, VectorField
from src.geometry.cone import ConeChart
from src.kernels import spectral
from src.utils.errors import DomainError


def _periodic_axis(spec: GridSpec) -> np.ndarray:
    return np.append(spec.axis(), spec.half_extent)


def _wrap(samples: np.ndarray, ax: int) -> np.ndarray:
    first = np.take(samples, [0], axis=ax)
    return np.concatenate([samples, first], axis=ax)


def resample_separable(samples: np.ndarray, spec: GridSpec,
                       targets: Sequence[np.ndarray]) -> np.ndarray:
    """Monotone cubic (PCHIP) interpolation axis by axis onto a tensor grid.

    samples has leading component axes followed by the n grid axes; targets holds one
    coordinate array per grid axis. Points outside the periodic box are set to zero.
    """
    out = samples
    offset = samples.ndim - spec.n
    source = _periodic_axis(spec)
    for a, target in enumerate(targets):
        ax = offset + a
        interp = PchipInterpolator(source, _wrap(out, ax), axis=ax, extrapolate=False)
        out = np.nan_to_num(interp(np.asarray(target, dtype=float)), nan=0.0)
    return out


def _check_cone_frame(w: VectorField) -> None:
    if w.frame not in (Frame.CONE_Y, Frame.CYLINDER_Z):
        raise DomainError(f"expected a cone_y or cylinder_z field, got {w.frame.value}")


def _time_of(w: VectorField, chart: ConeChart) -> float:
    t = float(chart.t_of_s(w.time_tag))
    if t >= chart.rho:
        raise DomainError(f"slice at s={w.time_tag} has reached the horizon t = rho")
    return t


def push_velocity(w: VectorField, chart: ConeChart, target: GridSpec) -> VectorField:
    """v(t, x) = w(s, y(t, x)) / (rho - t) on an original-coordinate grid."""
    _check_cone_frame(w)
    t = _time_of(w, chart)
    x = target.axis()
    coords = np.arctan(x) if w.frame is Frame.CYLINDER_Z else chart.y_of_x(t, x)
    samples = resample_separable(w.samples, w.spec, [coords] * w.spec.n) / (chart.rho - t)
    return VectorField(target, samples, Frame.ORIGINAL_X, t, {**w.meta, "pushed_from": w.frame.value})


def pull_velocity(v: VectorField, chart: ConeChart, target: GridSpec,
                  frame: Frame = Frame.CYLINDER_Z) -> VectorField:
    """w(s, .) = (rho - t) v(t, x(.)) on a cone_y or cylinder_z grid; inverse of push."""
    if v.frame is not Frame.ORIGINAL_X:
        raise DomainError(f"pull expects an original_x field, got {v.frame.value}")
    if frame not in (Frame.CONE_Y, Frame.CYLINDER_Z):
        raise DomainError(f"pull target must be cone_y or cylinder_z, got {frame.value}")
    t = float(v.time_tag)
    if not 0 <= t < chart.rho:
        raise DomainError(f"t must lie in [0, {chart.rho}), got {t}")
    z = target.axis() if frame is Frame.CYLINDER_Z else chart.z_of_y(t, target.axis())
    inside = np.abs(z) < np.pi / 2
    x = np.where(inside, np.tan(np.where(inside, z, 0.0)), np.inf)
    # beyond the sampled box the data have decayed
    x = np.where(np.abs(x) <= v.spec.half_extent, x, 2 * v.spec.half_extent + 1)
    samples = (chart.rho - t) * resample_separable(v.samples, v.spec, [x] * v.spec.n)
    return VectorField(target, samples, frame, float(chart.s_of_t(t)), dict(v.meta))


def _axis_shape(a: int, n: int):
    return [-1 if a == b else 1 for b in range(n)]


def _cylinder_trig(w: VectorField, chart: ConeChart, t: float):
    z = w.spec.axis() if w.frame is Frame.CYLINDER_Z else chart.z_of_y(t, w.spec.axis(), clip=True)
    n = w.spec.n
    cos = [np.cos(z).reshape(_axis_shape(a, n)) for a in range(n)]
    sin = [np.sin(z).reshape(_axis_shape(a, n)) for a in range(n)]
    return cos, sin


def _y_derivative_scale(w: VectorField, chart: ConeChart, t: float) -> float:
    return 1.0 / (chart.rho - t) if w.frame is Frame.CYLINDER_Z else 1.0


def derivative_via_cone(w: VectorField, chart: ConeChart, axis: int) -> VectorField:
    """v_{i,axis} = w_{i,axis} / (1 + x_axis^2) evaluated at the cone points."""
    _check_cone_frame(w)
    t = _time_of(w, chart)
    cos, _ = _cylinder_trig(w, chart, t)
    scale = _y_derivative_scale(w, chart, t)
    samples = np.stack([cos[axis] ** 2 * scale * spectral.derivative(w.samples[i], w.spec, axis)
                        for i in range(w.components)])
    return w.with_samples(samples, quantity=f"dv/dx{axis}")


def laplacian_via_cone(w: VectorField, chart: ConeChart) -> VectorField:
    """Delta v_i = sum_j w_{i,jj} (rho - t) / (1 + x_j^2)^2 - w_{i,j} 2 x_j / (1 + x_j^2)^2.

    Evaluated at the cone points of w (same grid and frame); written with
    cos(z_j) and sin(z_j) so the factors stay bounded at the cone boundary.
    """
    _check_cone_frame(w)
    t = _time_of(w, chart)
    cos, sin = _cylinder_trig(w, chart, t)
    scale = _y_derivative_scale(w, chart, t)
    out = np.zeros_like(w.samples)
    flagged = False
    for i in range(w.components):
        coeffs = spectral.forward(w.samples[i], w.spec)
        k = spectral.wavenumbers(w.spec)
        for j in range(w.spec.n):
            first = spectral.inverse(1j * k[j] * coeffs, w.spec) * scale
            second = spectral.inverse(-(k[j] ** 2) * coeffs, w.spec) * scale ** 2
            out[i] += cos[j] ** 4 * (chart.rho - t) * second - 2.0 * cos[j] ** 3 * sin[j] * first
        flagged = flagged or spectral.is_under_resolved(w.samples[i], w.spec)
    if flagged:
        logging.warning("laplacian_via_cone: w is under-resolved for second derivatives")
    return w.with_samples(out, quantity="laplacian_v", under_resolved=flagged)
