import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np
from scipy import integrate, optimize

from src.utils.errors import DomainError

ArrayLike = Union[float, np.ndarray]

# Points in the bracketing scan that precedes the golden-section refinement
SUP_SCAN_POINTS = 2048
# Relative tolerance for quadratures of closed-form coefficients
QUAD_EPSREL = 1e-12


class CoeffKind(Enum):
    """The four time-dependent coefficient families of the transformed equation."""
    BURGERS = "burgers"
    CONVECTION = "convection"
    DAMPING = "damping"
    LERAY = "leray"


@dataclass(frozen=True)
class ConeChart:
    """Coordinate calculus for the cone transformation of dimension n and horizon rho.

    Maps (t, x) to (s, y) with s = t / sqrt(rho^2 - t^2) and
    y_i = (rho - t) arctan(x_i), and to the cylinder coordinate z_i = arctan(x_i).
    All methods accept scalars or numpy arrays and are pure.
    """
    n: int
    rho: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.n}")
        if not np.isfinite(self.rho) or self.rho <= 0:
            raise DomainError(f"horizon rho must be positive, got {self.rho}")

    # -- time map ---------------------------------------------------------

    def _check_t(self, t: ArrayLike, closed: bool = False) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        upper_ok = t <= self.rho if closed else t < self.rho
        if np.any(t < 0) or not np.all(upper_ok):
            bound = "]" if closed else ")"
            raise DomainError(f"t must lie in [0, {self.rho}{bound}, got {t}")
        return t

    def t_of_s(self, s: ArrayLike) -> ArrayLike:
        """Physical time t(s) = rho s / sqrt(1 + s^2)."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(np.isnan(s)):
            raise DomainError(f"s must be nonnegative, got {s}")
        return self.rho * s / np.sqrt(1.0 + s * s)

    def s_of_t(self, t: ArrayLike) -> ArrayLike:
        """Transformed time s(t) = t / sqrt(rho^2 - t^2), inverse of t_of_s."""
        t = self._check_t(t)
        return t / np.sqrt(self.rho ** 2 - t * t)

    def ds_dt(self, t: ArrayLike) -> ArrayLike:
        """ds/dt = rho^2 / (rho^2 - t^2)^(3/2)."""
        t = self._check_t(t)
        return self.rho ** 2 / (self.rho ** 2 - t * t) ** 1.5

    def dt_ds(self, s: ArrayLike) -> ArrayLike:
        """dt/ds = rho / (1 + s^2)^(3/2), the reciprocal of ds_dt at t(s)."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise DomainError(f"s must be nonnegative, got {s}")
        return self.rho / (1.0 + s * s) ** 1.5

    def s_max_default(self, tip_fraction: float = 1e-3) -> float:
        """s at which t(s) = rho - tip_fraction * rho."""
        if not 0 < tip_fraction < 1:
            raise DomainError(f"tip_fraction must lie in (0, 1), got {tip_fraction}")
        return float(self.s_of_t(self.rho * (1.0 - tip_fraction)))

    # -- space maps -------------------------------------------------------

    def section_half_width(self, t: ArrayLike) -> ArrayLike:
        """Half width (rho - t) pi / 2 of the cone section at time t."""
        t = self._check_t(t, closed=True)
        return (self.rho - t) * np.pi / 2

    def y_of_x(self, t: float, x: ArrayLike) -> np.ndarray:
        """Cone coordinate y_i = (rho - t) arctan(x_i), componentwise."""
        t = self._check_t(t)
        return (self.rho - t) * np.arctan(np.asarray(x, dtype=float))

    def x_of_y(self, t: float, y: ArrayLike) -> np.ndarray:
        """Inverse of y_of_x; y must lie strictly inside the cone section."""
        t = self._check_t(t)
        y = np.asarray(y, dtype=float)
        width = (self.rho - t) * np.pi / 2
        if np.any(np.abs(y) >= width):
            raise DomainError(f"|y| must be < {width:.6g} (outside the cone section)")
        return np.tan(y / (self.rho - t))

    def z_of_y(self, t: float, y: ArrayLike, clip: bool = False) -> np.ndarray:
        """Cylinder coordinate z = y / (rho - t); optionally clipped to [-pi/2, pi/2]."""
        t = self._check_t(t)
        z = np.asarray(y, dtype=float) / (self.rho - t)
        if clip:
            z = np.clip(z, -np.pi / 2, np.pi / 2)
        return z

    def measure_factor(self, t: float, x: ArrayLike) -> ArrayLike:
        """Jacobian dy/dx = (rho - t)^n prod_i 1 / (1 + x_i^2); x has trailing axis n."""
        t = self._check_t(t)
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DomainError(f"x must have a trailing axis of length {self.n}")
        return (self.rho - t) ** self.n * np.prod(1.0 / (1.0 + x * x), axis=-1)

    def inverse_measure_factor(self, t: float, x: ArrayLike) -> ArrayLike:
        """Jacobian dx/dy, the reciprocal of measure_factor."""
        return 1.0 / self.measure_factor(t, x)

    # -- coefficients -----------------------------------------------------

    def coeff(self, kind: CoeffKind, t: ArrayLike) -> ArrayLike:
        """Time coefficient of one term of the transformed equation, t in [0, rho).

        Damping is evaluated in the simplified form sqrt(rho^2 - t^2)(rho + t)/rho^2.
        """
        t = self._check_t(t)
        q = np.sqrt(self.rho ** 2 - t * t)
        r2 = self.rho ** 2
        if kind is CoeffKind.BURGERS:
            return q ** 3 / r2
        if kind in (CoeffKind.CONVECTION, CoeffKind.LERAY):
            return (self.rho - t) * q ** 3 / r2
        if kind is CoeffKind.DAMPING:
            return q * (self.rho + t) / r2
        raise DomainError(f"unknown coefficient kind {kind}")

    def damping_printed(self, t: ArrayLike) -> ArrayLike:
        """Damping coefficient in its unsimplified form q^3 / (rho^2 (rho - t)), t < rho."""
        t = self._check_t(t)
        q = np.sqrt(self.rho ** 2 - t * t)
        return q ** 3 / (self.rho ** 2 * (self.rho - t))

    def _sup_search(self, kind: CoeffKind) -> Tuple[float, float]:
        grid = np.linspace(0.0, self.rho, SUP_SCAN_POINTS, endpoint=False)
        upper = float(np.nextafter(self.rho, 0.0))
        values = self.coeff(kind, grid)
        i = int(np.argmax(values))
        if i == 0 or i == len(grid) - 1:
            return float(values[i]), float(grid[i])
        result = optimize.minimize_scalar(
            lambda t: -float(self.coeff(kind, min(max(t, 0.0), upper))),
            bracket=(grid[i - 1], grid[i], grid[i + 1]),
            method="golden",
            tol=1e-12,
        )
        return float(-result.fun), float(result.x)

    def coeff_sup(self, kind: CoeffKind) -> float:
        """Supremum of coeff(kind, .) over [0, rho)."""
        return self._sup_search(kind)[0]

    def coeff_argsup(self, kind: CoeffKind) -> float:
        """Time at which coeff_sup is attained."""
        return self._sup_search(kind)[1]

    # -- integrals --------------------------------------------------------

    def damping_time_integral(self, eps: float) -> float:
        """Integral of the damping coefficient in s-time over t(s) in [0, rho - eps].

        Equals ln(rho / eps) in closed form.
        """
        if not 0 < eps < self.rho:
            raise DomainError(f"eps must lie in (0, {self.rho}), got {eps}")
        s_end = float(self.s_of_t(self.rho - eps))
        value, abserr = integrate.quad(
            lambda s: float(self.coeff(CoeffKind.DAMPING, self.t_of_s(s))),
            0.0, s_end, epsabs=0.0, epsrel=QUAD_EPSREL, limit=400,
        )
        logging.debug(f"damping integral rho={self.rho} eps={eps}: {value} (+/- {abserr})")
        return value

    def cylinder_damping_mass(self, bound: float) -> float:
        """Integral of (rho - t)^(n-1) C over the cylinder [0, rho] x (-pi/2, pi/2)^n."""
        if bound < 0:
            raise DomainError(f"bound must be nonnegative, got {bound}")
        radial, _ = integrate.quad(lambda t: (self.rho - t) ** (self.n - 1), 0.0, self.rho,
                                   epsabs=0.0, epsrel=QUAD_EPSREL)
        return bound * np.pi ** self.n * radial
