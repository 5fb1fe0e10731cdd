import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import gamma

from src.fields.grid import ScalarField
from src.kernels import spectral
from src.utils.errors import DomainError

# Relative amplitude on the tapered rim above which a source is considered non-decaying
ALIASING_THRESHOLD = 1e-3


def unit_ball_volume(n: int) -> float:
    return np.pi ** (n / 2) / gamma(n / 2 + 1)


@dataclass(frozen=True)
class RieszKernel:
    """K_{n,i}(x) = c x_i / |x|^n with c = 1 / (n alpha(n)), i.e. minus the gradient of
    the fundamental solution of -Laplace. Its Fourier symbol is -i xi_i / |xi|^2."""
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise DomainError(f"Riesz kernel needs n >= 3, got {self.n}")

    @property
    def c(self) -> float:
        return 1.0 / (self.n * unit_ball_volume(self.n))

    def __call__(self, x: np.ndarray, axis: int) -> np.ndarray:
        """Kernel values at points x of shape (..., n); zero at the origin."""
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        out = np.zeros_like(r)
        nz = r > 0
        out[nz] = self.c * x[..., axis][nz] / r[nz] ** self.n
        return out

    def symbol(self, spec, axis: int) -> np.ndarray:
        k = spectral.wavenumbers(spec)
        k_sq = sum(kk * kk for kk in k)
        inv = np.zeros_like(k_sq)
        np.divide(1.0, k_sq, out=inv, where=k_sq > 0)
        return -1j * k[axis] * inv


def _rim_fraction(source: ScalarField) -> float:
    spec = source.spec
    peak = np.abs(source.samples).max()
    if peak == 0:
        return 0.0
    rim = spectral.taper_weights(spec) < 1.0
    return float(np.abs(source.samples[rim]).max(initial=0.0) / peak)


def riesz_convolve(source: ScalarField, axis: int, taper: bool = True) -> ScalarField:
    """Convolution K_{n,axis} * source, spectral fast path on the periodic grid.

    The source is multiplied by the rim taper first; sources that do not decay
    towards the rim are flagged as aliasing risks.
    """
    spec = source.spec
    if not 0 <= axis < spec.n:
        raise DomainError(f"axis {axis} out of range for dimension {spec.n}")
    kernel = RieszKernel(spec.n)
    rim = _rim_fraction(source)
    aliasing = rim > ALIASING_THRESHOLD
    if aliasing:
        logging.warning(f"Riesz source does not decay towards the grid rim (rim/peak={rim:.2e})")
    samples = source.samples * spectral.taper_weights(spec) if taper else source.samples
    out = spectral.apply_multiplier(samples, spec, kernel.symbol(spec, axis))
    return source.with_samples(out, aliasing=aliasing)


def sphere_quadrature(n: int, polar_nodes: int = 16) -> Tuple[np.ndarray, np.ndarray]:
    """Directions (M, n) and weights (M,) integrating over the unit sphere S^(n-1).

    Hyperspherical angles: Gauss-Legendre in each polar angle (with its sine weight),
    trapezoid in the azimuth.
    """
    nodes, weights = np.polynomial.legendre.leggauss(polar_nodes)
    polar = 0.5 * np.pi * (nodes + 1.0)
    polar_w = 0.5 * np.pi * weights
    azimuth_count = 2 * polar_nodes
    azimuth = 2.0 * np.pi * np.arange(azimuth_count) / azimuth_count
    azimuth_w = np.full(azimuth_count, 2.0 * np.pi / azimuth_count)

    grids = np.meshgrid(*([polar] * (n - 2) + [azimuth]), indexing="ij")
    wgrids = np.meshgrid(*([polar_w] * (n - 2) + [azimuth_w]), indexing="ij")
    angles = [g.ravel() for g in grids]
    w = np.prod([g.ravel() for g in wgrids], axis=0)

    directions = np.empty((angles[0].size, n))
    sin_prod = np.ones(angles[0].size)
    for k in range(n - 1):
        directions[:, k] = sin_prod * np.cos(angles[k])
        if k < n - 2:
            w = w * np.sin(angles[k]) ** (n - 2 - k)
        sin_prod = sin_prod * np.sin(angles[k])
    directions[:, n - 1] = sin_prod
    return directions, w


def riesz_direct_quadrature(func: Callable[[np.ndarray], np.ndarray], targets: np.ndarray,
                            axis: int, n: int, radius: float,
                            radial_nodes: int = 64, polar_nodes: int = 16) -> np.ndarray:
    """Reference path: truncated-kernel quadrature of K_{n,axis} * func at target points.

    In polar coordinates around each target the kernel times r^(n-1) is c omega_axis,
    and odd symmetrisation 0.5 (f(x - r w) - f(x + r w)) removes the singularity, so the
    integrand is smooth on [0, radius] x S^(n-1).
    """
    kernel = RieszKernel(n)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    directions, w_sphere = sphere_quadrature(n, polar_nodes)
    r_nodes, r_weights = np.polynomial.legendre.leggauss(radial_nodes)
    r = 0.5 * radius * (r_nodes + 1.0)
    w_r = 0.5 * radius * r_weights
    offsets = r[:, None, None] * directions[None, :, :]
    weight = kernel.c * w_r[:, None] * (w_sphere * directions[:, axis])[None, :]

    out = np.empty(len(targets))
    for k, x in enumerate(targets):
        minus = func(x - offsets)
        plus = func(x + offsets)
        out[k] = np.sum(weight * 0.5 * (minus - plus))
    return out


def riesz_convolve_direct(source: ScalarField, axis: int, targets: np.ndarray,
                          radius: float = None, **quadrature) -> np.ndarray:
    """Direct quadrature of a sampled source (cubic interpolation, zero outside the grid)."""
    spec = source.spec
    a = spec.axis()
    interp = RegularGridInterpolator([a] * spec.n, source.samples, method="cubic",
                                     bounds_error=False, fill_value=0.0)
    rad = spec.half_extent if radius is None else radius
    return riesz_direct_quadrature(lambda pts: interp(pts.reshape(-1, spec.n)).reshape(pts.shape[:-1]),
                                   targets, axis, spec.n, rad, **quadrature)
