from typing import Tuple

import numpy as np
from scipy.special import erf

from src.fields.grid import Frame, GridSpec, ScalarField, VectorField
from src.geometry.cone import ConeChart

# Half extent of original-coordinate grids in standard deviations of the data Gaussian
DATA_EXTENT_SIGMAS = 8.0


def data_width(chart: ConeChart) -> float:
    """a = rho^(-3), the squared length scale of the data exp(-|x|^2 / a)."""
    return chart.rho ** -3


def data_sigma(chart: ConeChart) -> float:
    return float(np.sqrt(data_width(chart) / 2.0))


def data_gradient_sup(chart: ConeChart) -> float:
    """max_j sup |d_j h_i| = sqrt(2 rho) exp(-1/2), attained at x_j = sqrt(a/2)."""
    return float(np.sqrt(2.0 * chart.rho) * np.exp(-0.5))


def make_gaussian_data(chart: ConeChart, points_per_axis: int = 32,
                       sigmas: float = DATA_EXTENT_SIGMAS) -> Tuple[VectorField, VectorField]:
    """Data h_i = exp(-|x|^2 / a) / rho with a = rho^(-3), and its cone image h^rho.

    h is sampled on [-sigmas*sigma, sigmas*sigma)^n in original coordinates;
    h^rho(y) = rho h(x(y)) is sampled on the cone base (-rho pi/2, rho pi/2)^n at s = 0,
    so that h^rho(0) = 1.
    """
    n, rho = chart.n, chart.rho
    a = data_width(chart)
    x_spec = GridSpec(n, points_per_axis, sigmas * data_sigma(chart))
    r2 = sum(c * c for c in x_spec.mesh())
    h_scalar = np.exp(-r2 / a) / rho
    h = VectorField(x_spec, np.stack([h_scalar] * n), Frame.ORIGINAL_X, 0.0, {"quantity": "h"})

    y_spec = GridSpec(n, points_per_axis, rho * np.pi / 2)
    tan2 = sum(np.tan(c / rho) ** 2 for c in y_spec.mesh())
    with np.errstate(over="ignore"):
        h_rho_scalar = np.exp(-rho ** 3 * tan2)
    h_rho = VectorField(y_spec, np.stack([h_rho_scalar] * n), Frame.CONE_Y, 0.0,
                        {"quantity": "h_rho", "rho": rho})
    return h, h_rho


def reflection_symmetric(f, tol: float = 1e-12) -> bool:
    """True when f(y) = f(y^{-j}) for every axis j (reflection y_j -> -y_j)."""
    spec = f.spec
    samples = f.samples
    offset = samples.ndim - spec.n
    scale = max(float(np.abs(samples).max()), 1.0)
    for j in range(spec.n):
        ax = offset + j
        mirrored = np.roll(np.flip(samples, axis=ax), 1, axis=ax)
        if np.abs(mirrored - samples).max() > tol * scale:
            return False
    return True


def cone_leakage(chart: ConeChart, half_extent: float) -> float:
    """Relative mass of exp(-|x|^2 / a) outside the sampled box [-H, H]^n."""
    a = data_width(chart)
    return float(1.0 - erf(half_extent / np.sqrt(a)) ** chart.n)


def constant_slice(spec: GridSpec, value: float, components: int,
                   frame: Frame = Frame.CONE_Y) -> VectorField:
    return VectorField(spec, np.full((components,) + spec.shape, float(value)), frame, 0.0)
