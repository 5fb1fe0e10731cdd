import logging
from typing import Union

import numpy as np

from src.fields.grid import ScalarField, VectorField
from src.kernels import spectral
from src.utils.errors import DomainError

Field = Union[ScalarField, VectorField]


def gaussian(r: np.ndarray, nu: float, tau: float, n: int) -> np.ndarray:
    """Heat kernel G_nu(tau, x) = (4 pi nu tau)^(-n/2) exp(-|x|^2 / (4 nu tau)) at |x| = r."""
    if nu <= 0 or tau <= 0:
        raise DomainError(f"heat kernel needs nu > 0 and tau > 0, got nu={nu}, tau={tau}")
    return (4.0 * np.pi * nu * tau) ** (-n / 2) * np.exp(-np.asarray(r) ** 2 / (4.0 * nu * tau))


def gaussian_grad(x: np.ndarray, r: np.ndarray, nu: float, tau: float, n: int) -> np.ndarray:
    """Derivative d_i G_nu along the component x = x_i."""
    return -np.asarray(x) / (2.0 * nu * tau) * gaussian(r, nu, tau, n)


def heat_multiplier(field: Field, nu: float, tau: float) -> np.ndarray:
    if tau <= 0:
        raise DomainError(f"elapsed time tau must be positive, got {tau}")
    if nu < 0:
        raise DomainError(f"viscosity must be nonnegative, got {nu}")
    return np.exp(-nu * tau * spectral.wavenumber_sq(field.spec))


def _resolution_flag(field: Field, nu: float, tau: float) -> bool:
    # kernel narrower than one grid cell cannot be sampled
    width = np.sqrt(2.0 * nu * tau)
    if 0 < width < field.spec.spacing:
        logging.debug(f"heat kernel width {width:.3g} below grid spacing {field.spec.spacing:.3g}")
        return True
    return False


def heat_convolve(field: Field, nu: float, tau: float) -> Field:
    """Convolve with G_nu at elapsed time tau (spectral, periodic extension)."""
    mult = heat_multiplier(field, nu, tau)
    flag = _resolution_flag(field, nu, tau)
    samples = spectral.apply_multiplier(field.samples, field.spec, mult)
    return field.with_samples(samples, kernel_under_resolved=flag)


def heat_convolve_grad(field: Field, nu: float, tau: float, axis: int) -> Field:
    """Convolve with d_axis G_nu, the spatial derivative of heat_convolve."""
    if not 0 <= axis < field.spec.n:
        raise DomainError(f"axis {axis} out of range for dimension {field.spec.n}")
    mult = heat_multiplier(field, nu, tau) * 1j * spectral.wavenumbers(field.spec)[axis]
    flag = _resolution_flag(field, nu, tau)
    samples = spectral.apply_multiplier(field.samples, field.spec, mult)
    return field.with_samples(samples, kernel_under_resolved=flag)


def leray_project(v: VectorField) -> VectorField:
    """Project onto discretely divergence-free fields with symbol I - xi xi^T / |xi|^2.

    The zero mode (and any mode whose derivative wavenumber vanishes) is left unchanged.
    """
    spec = v.spec
    if v.components != spec.n:
        raise DomainError(f"Leray projection needs {spec.n} components, got {v.components}")
    k = spectral.wavenumbers(spec)
    k_sq = sum(kk * kk for kk in k)
    inv = np.zeros_like(k_sq)
    np.divide(1.0, k_sq, out=inv, where=k_sq > 0)
    coeffs = np.stack([spectral.forward(v.samples[i], spec) for i in range(spec.n)])
    k_dot = sum(k[a] * coeffs[a] for a in range(spec.n))
    projected = [spectral.inverse(coeffs[i] - k[i] * k_dot * inv, spec) for i in range(spec.n)]
    return v.with_samples(np.stack(projected))
