from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from src.fields.grid import GridSpec, Trajectory
from src.fields.norms import NormReport
from src.geometry.cone import ConeChart
from src.utils.errors import DomainError

# Slice norm relative to the data norm above which a run is aborted
DIVERGENCE_FACTOR = 1e6


class ConvectionVariant(Enum):
    """Readings of the artificial convection coefficient.

    PRINTED_A: (rho - t) q^3 / rho^2 * arctan(x_j)
    PRINTED_B: q^3 / rho^2 * y_j
    CHAIN_RULE: q^3 / rho^2 * arctan(x_j)
    with q = sqrt(rho^2 - t^2).
    """
    PRINTED_A = "printed_A"
    PRINTED_B = "printed_B"
    CHAIN_RULE = "chain_rule"


@dataclass(frozen=True)
class Toggles:
    """Which terms of the transformed equation are active."""
    burgers: bool = True
    convection: bool = True
    damping: bool = True
    leray: bool = True

    @classmethod
    def none(cls) -> "Toggles":
        return cls(False, False, False, False)

    @classmethod
    def only(cls, *names: str) -> "Toggles":
        unknown = set(names) - {"burgers", "convection", "damping", "leray"}
        if unknown:
            raise DomainError(f"unknown term toggles: {sorted(unknown)}")
        return cls(**{name: True for name in names}, **{
            name: False for name in ("burgers", "convection", "damping", "leray") if name not in names
        })

    @property
    def nonlinear(self) -> bool:
        return self.burgers or self.convection or self.leray


@dataclass(frozen=True)
class SchemeConfig:
    """Solver parameters for the transformed viscous scheme.

    The scheme lives on a fixed y-grid over the cone base (-rho pi/2, rho pi/2)^n
    with `slices` equally spaced s-values on [0, s_max].
    """
    chart: ConeChart
    nu: float
    m: int = 2
    points_per_axis: int = 16
    slices: int = 64
    s_max: Optional[float] = None
    k_max: int = 8
    fp_tol: float = 1e-8
    toggles: Toggles = field(default_factory=Toggles)
    convection_variant: ConvectionVariant = ConvectionVariant.CHAIN_RULE
    divergence_factor: float = DIVERGENCE_FACTOR

    def __post_init__(self):
        if not self.nu > 0:
            raise DomainError(f"the viscous scheme needs nu > 0, got {self.nu}")
        if self.m < 0:
            raise DomainError(f"norm order must be nonnegative, got {self.m}")
        if self.slices < 2:
            raise DomainError(f"at least two s-slices are needed, got {self.slices}")
        if self.k_max < 1:
            raise DomainError(f"k_max must be at least 1, got {self.k_max}")
        if not self.fp_tol > 0:
            raise DomainError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.s_max is None:
            object.__setattr__(self, "s_max", self.chart.s_max_default())
        if not self.s_max > 0:
            raise DomainError(f"s_max must be positive, got {self.s_max}")
        # rejects s_max whose t reaches rho in floating point
        self.chart.s_of_t(self.chart.t_of_s(self.s_max))

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.chart.n, self.points_per_axis, self.chart.rho * np.pi / 2)

    @property
    def ds(self) -> float:
        return self.s_max / (self.slices - 1)

    @property
    def s_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.s_max, self.slices)

    @property
    def t_grid(self) -> np.ndarray:
        return self.chart.t_of_s(self.s_grid)


@dataclass
class IterationState:
    """Picard state: sweep index, current iterate and the increment history.

    increments[k - 1] and increment_sup[k - 1] describe dw^(k) = w^(k) - w^(k-1);
    w0 is the heat flow of the data.
    """
    k: int
    w: Trajectory
    w0: Trajectory
    increments: List[NormReport] = field(default_factory=list)
    increment_sup: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def ratios(self) -> List[float]:
        """Sweep-to-sweep ratios of combined increment norms."""
        norms = [r.combined for r in self.increments]
        return [b / a if a > 0 else 0.0 for a, b in zip(norms, norms[1:])]
