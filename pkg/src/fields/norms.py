import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from src.fields.grid import Frame, ScalarField, VectorField
from src.kernels import spectral
from src.utils.errors import DomainError

Field = Union[ScalarField, VectorField]

# Nested windows fitted by the decay-class check
DECAY_WINDOWS = 4
# Smallest window radius as a fraction of the grid half extent
DECAY_INNER_FRACTION = 0.5
# Growth allowed across each window refinement
DECAY_RATIO_LIMIT = 1.1
# Values below this fraction of a derivative's maximum count as decayed
DECAY_NOISE_FLOOR = 1e-10


@dataclass(frozen=True)
class NormReport:
    sobolev: float
    sup_cm: float
    m: int
    under_resolved: bool = False

    @property
    def combined(self) -> float:
        """Norm of H^m cap C^m, taken as the sum of both parts."""
        return self.sobolev + self.sup_cm


@dataclass(frozen=True)
class DecayReport:
    l: float
    m: int
    radii: List[float]
    window_constants: Dict[str, List[float]] = field(default_factory=dict)
    passed: bool = False


def multi_indices(n: int, m: int) -> Iterator[Tuple[int, ...]]:
    """All derivative multi-indices gamma with |gamma| <= m."""
    for gamma in itertools.product(range(m + 1), repeat=n):
        if sum(gamma) <= m:
            yield gamma


def _components(f: Field) -> List[np.ndarray]:
    if isinstance(f, VectorField):
        return [f.samples[i] for i in range(f.components)]
    return [f.samples]


def sobolev_cm_norm(f: Field, m: int, warn: bool = True) -> NormReport:
    """Discrete H^m norm via (1 + |xi|^2)^(m/2) and C^m norm via spectral derivatives.

    Vector fields report the maximum over components. With warn=False the
    under-resolution flag is set without logging.
    """
    if m < 0:
        raise DomainError(f"norm order must be nonnegative, got {m}")
    spec = f.spec
    weight = (1.0 + spectral.wavenumber_sq(spec)) ** m
    scale = spec.cell_volume / spec.points_per_axis ** spec.n
    sobolev, sup_cm, flagged = 0.0, 0.0, False
    for samples in _components(f):
        coeffs = spectral.forward(samples, spec)
        sobolev = max(sobolev, float(np.sqrt(scale * np.sum(weight * np.abs(coeffs) ** 2))))
        for gamma in multi_indices(spec.n, m):
            d = spectral.inverse(coeffs * spectral.derivative_multiplier(spec, gamma), spec)
            sup_cm = max(sup_cm, float(np.abs(d).max()))
        if m > 0 and spectral.is_under_resolved(samples, spec):
            flagged = True
    if flagged and warn:
        logging.warning(f"field under-resolved for derivatives of order {m}")
    return NormReport(sobolev=sobolev, sup_cm=sup_cm, m=m, under_resolved=flagged)


def decay_class_check(f: Field, l: float, m: int, windows: int = DECAY_WINDOWS,
                      noise_scale: Optional[float] = None) -> DecayReport:
    """Fit c in |D^gamma f| <= c / (1 + |x|^l) on nested windows 1 <= |x| <= R_k.

    The radii R_k are geometric over the outer part of the grid, from
    DECAY_INNER_FRACTION * half_extent (at least 1) to half_extent. Passes when
    every fitted constant is finite and no refinement R_k -> R_(k+1) grows the
    constant by DECAY_RATIO_LIMIT or more. Values below DECAY_NOISE_FLOOR times
    the larger of the derivative's maximum and noise_scale count as decayed;
    pass the size of the field f was subtracted from when f is a difference.
    """
    if f.frame is not Frame.ORIGINAL_X:
        raise DomainError(f"decay classes are defined in original coordinates, got {f.frame.value}")
    spec = f.spec
    if spec.half_extent <= 1.0:
        raise DomainError(f"grid half extent {spec.half_extent} must exceed 1 for decay windows")
    if windows < 3:
        raise DomainError(f"at least 3 nested windows are needed, got {windows}")
    inner = max(1.0, DECAY_INNER_FRACTION * spec.half_extent)
    radii = np.geomspace(inner, spec.half_extent, windows)
    r = spec.radius()
    weight = 1.0 + r ** l
    masks = [(r >= 1.0) & (r <= R) for R in radii]

    constants: Dict[str, List[float]] = {}
    passed = True
    for i, samples in enumerate(_components(f)):
        coeffs = spectral.forward(samples, spec)
        for gamma in multi_indices(spec.n, m):
            d = np.abs(spectral.inverse(coeffs * spectral.derivative_multiplier(spec, gamma), spec))
            d[d < DECAY_NOISE_FLOOR * max(float(d.max()), noise_scale or 0.0)] = 0.0
            g = d * weight
            c = np.array([g[mask].max(initial=0.0) for mask in masks])
            constants[f"{i}:{''.join(map(str, gamma))}"] = [float(v) for v in c]
            if not np.all(np.isfinite(c)):
                passed = False
                continue
            for before, after in zip(c[:-1], c[1:]):
                if before == 0.0:
                    passed = passed and after == 0.0
                elif after / before >= DECAY_RATIO_LIMIT:
                    passed = False
    return DecayReport(l=l, m=m, radii=[float(R) for R in radii],
                       window_constants=constants, passed=passed)


def divergence(v: VectorField) -> ScalarField:
    """Spectral divergence sum_i d_i v_i."""
    spec = v.spec
    total = sum(spectral.derivative(v.samples[i], spec, i) for i in range(spec.n))
    return ScalarField(spec, total, v.frame, v.time_tag)
