"""FFT plumbing shared by every convolution engine.

Fields are treated as periodic on their grid box. Odd-order derivative
multipliers drop the Nyquist mode so that real fields stay real and the
discrete gradient, divergence and Leray projector are mutually consistent.
"""
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

from src.fields.grid import GridSpec

# Outer fraction of each axis covered by the taper
TAPER_FRACTION = 0.125
# Relative spectral amplitude in the outer third of the band that flags under-resolution
RESOLUTION_THRESHOLD = 1e-6


@lru_cache(maxsize=32)
def _wavenumbers(n: int, N: int, half_extent: float) -> Tuple[Tuple[np.ndarray, ...], np.ndarray]:
    k = 2.0 * np.pi * np.fft.fftfreq(N, d=2.0 * half_extent / N)
    k_derivative = k.copy()
    k_derivative[N // 2] = 0.0
    derivative = tuple(
        k_derivative.reshape([N if a == b else 1 for b in range(n)]) for a in range(n)
    )
    full = [k.reshape([N if a == b else 1 for b in range(n)]) for a in range(n)]
    k_sq = sum(kk * kk for kk in full)
    for arr in derivative:
        arr.setflags(write=False)
    k_sq.setflags(write=False)
    return derivative, k_sq


def wavenumbers(spec: GridSpec) -> Tuple[np.ndarray, ...]:
    """Broadcastable derivative wavenumbers per axis (Nyquist entry zeroed)."""
    return _wavenumbers(spec.n, spec.points_per_axis, spec.half_extent)[0]


def wavenumber_sq(spec: GridSpec) -> np.ndarray:
    """|xi|^2 on the full band, used by the heat multiplier."""
    return _wavenumbers(spec.n, spec.points_per_axis, spec.half_extent)[1]


def _axes(spec: GridSpec) -> Tuple[int, ...]:
    return tuple(range(-spec.n, 0))


def forward(samples: np.ndarray, spec: GridSpec) -> np.ndarray:
    return np.fft.fftn(samples, axes=_axes(spec))


def inverse(coefficients: np.ndarray, spec: GridSpec) -> np.ndarray:
    return np.fft.ifftn(coefficients, axes=_axes(spec)).real


def apply_multiplier(samples: np.ndarray, spec: GridSpec, multiplier: np.ndarray) -> np.ndarray:
    return inverse(forward(samples, spec) * multiplier, spec)


def derivative_multiplier(spec: GridSpec, orders: Sequence[int]) -> np.ndarray:
    """Multiplier prod_a (i xi_a)^orders[a]."""
    k = wavenumbers(spec)
    mult = np.ones((1,) * spec.n, dtype=complex)
    for a, order in enumerate(orders):
        if order:
            mult = mult * (1j * k[a]) ** order
    return mult


def derivative(samples: np.ndarray, spec: GridSpec, axis: int, order: int = 1) -> np.ndarray:
    orders = [0] * spec.n
    orders[axis] = order
    return apply_multiplier(samples, spec, derivative_multiplier(spec, orders))


def gradient(samples: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Stacked spectral gradient, shape (n, *grid)."""
    coeffs = forward(samples, spec)
    k = wavenumbers(spec)
    return np.stack([inverse(1j * k[a] * coeffs, spec) for a in range(spec.n)])


def laplacian(samples: np.ndarray, spec: GridSpec) -> np.ndarray:
    k = wavenumbers(spec)
    return apply_multiplier(samples, spec, -sum(kk * kk for kk in k))


def is_under_resolved(samples: np.ndarray, spec: GridSpec) -> bool:
    """True when the outer third of the spectrum carries noticeable amplitude."""
    coeffs = np.abs(forward(samples, spec))
    peak = coeffs.max()
    if peak == 0:
        return False
    k = wavenumbers(spec)
    k_max = np.pi / spec.spacing
    outer = np.zeros(coeffs.shape[-spec.n:], dtype=bool)
    for kk in k:
        outer = outer | (np.abs(kk) > 2.0 * k_max / 3.0)
    return bool(coeffs[..., outer].max(initial=0.0) > RESOLUTION_THRESHOLD * peak)


def taper_profile(coords: np.ndarray, half_width: float,
                  fraction: float = TAPER_FRACTION) -> np.ndarray:
    """C^2 quintic ramp: 1 inside (1 - fraction) * half_width, 0 beyond half_width."""
    u = (np.abs(coords) - (1.0 - fraction) * half_width) / (fraction * half_width)
    u = np.clip(u, 0.0, 1.0)
    return 1.0 - u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)


def taper_weights(spec: GridSpec, half_width: float = None,
                  fraction: float = TAPER_FRACTION) -> np.ndarray:
    """Tensor-product taper over the grid (or over a smaller centred box)."""
    width = spec.half_extent if half_width is None else half_width
    profile = taper_profile(spec.axis(), width, fraction)
    weights = np.ones(spec.shape)
    for a in range(spec.n):
        weights = weights * profile.reshape([-1 if a == b else 1 for b in range(spec.n)])
    return weights
