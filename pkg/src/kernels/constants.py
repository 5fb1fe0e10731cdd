import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import integrate, optimize
from scipy.special import gamma

from src.fields.grid import ScalarField
from src.kernels.heat import heat_convolve_grad
from src.kernels.riesz import RieszKernel
from src.utils.errors import DomainError

# Gauss-Legendre nodes of the radial rule; the refinement check doubles them
RADIAL_NODES = 64


@dataclass(frozen=True)
class KernelConstants:
    """Bound constants of the heat and Riesz kernels for dimension n and exponent mu."""
    n: int
    mu: float
    C: float
    Cprime: float
    C_Kn: float
    M2: float
    z_star: float
    C_Kn_refinement_gap: float = 0.0

    @property
    def C_G(self) -> float:
        return max(self.C, self.Cprime)


@dataclass(frozen=True)
class LipschitzCheck:
    bound: float
    measured: float
    holds: bool


def _sup_power_gauss(power: float) -> Tuple[float, float]:
    """max over z > 0 of z^power exp(-z^2), returned with its argmax."""
    result = optimize.minimize_scalar(
        lambda z: -(z ** power) * np.exp(-z * z),
        bounds=(1e-12, 10.0 + power), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(-result.fun), float(result.x)


def sphere_area(k: int) -> float:
    """Surface area of the unit sphere S^k in R^(k+1)."""
    return 2.0 * np.pi ** ((k + 1) / 2) / gamma((k + 1) / 2)


def _riesz_norm(n: int, radial_nodes: int) -> float:
    c = RieszKernel(n).c
    # |x_i|/|x|^n on B_1: radial part r^(n-1) r^(1-n) = 1
    radial_l1, _ = integrate.fixed_quad(np.ones_like, 0.0, 1.0, n=radial_nodes)
    # x_i^2/|x|^(2n) outside B_1: r^(1-n) dr, substituted r = 1/u
    radial_l2, _ = integrate.fixed_quad(lambda u: u ** (n - 3), 0.0, 1.0, n=radial_nodes)
    angular_l1 = sphere_area(n - 2) * integrate.quad(
        lambda th: abs(np.cos(th)) * np.sin(th) ** (n - 2), 0.0, np.pi, points=[np.pi / 2])[0]
    angular_l2 = sphere_area(n - 1) / n
    return c * angular_l1 * radial_l1 + c * np.sqrt(angular_l2 * radial_l2)


def kernel_constants(n: int, mu: float, radial_nodes: int = RADIAL_NODES) -> KernelConstants:
    """Compute C, C', C_Kn and M2.

    C = pi^(-n/2) sup z^(n-2mu) e^(-z^2) bounds G by C (4 nu tau)^(-mu) |x|^(2mu-n);
    C' = 2 pi^(-n/2) sup z^(n+2-2mu) e^(-z^2) bounds d_i G by C' (4 nu tau)^(-mu) |x|^(2mu-n-1).
    """
    if n < 3:
        raise DomainError(f"kernel constants need n >= 3, got {n}")
    if radial_nodes < 1:
        raise DomainError(f"radial_nodes must be positive, got {radial_nodes}")
    if not 0 < mu < 1:
        raise DomainError(f"mu must lie in (0, 1), got {mu}")
    sup_c, z_star = _sup_power_gauss(n - 2 * mu)
    sup_cp, _ = _sup_power_gauss(n + 2 - 2 * mu)
    C = np.pi ** (-n / 2) * sup_c
    Cprime = 2.0 * np.pi ** (-n / 2) * sup_cp

    C_Kn = _riesz_norm(n, radial_nodes)
    gap = abs(_riesz_norm(n, 2 * radial_nodes) - C_Kn) / C_Kn

    M2, _ = integrate.quad(lambda y: y * y * np.exp(-y * y / 2) / np.sqrt(2 * np.pi),
                           -np.inf, np.inf, epsabs=1e-13)
    logging.debug(f"kernel constants n={n} mu={mu}: C={C:.6g} C'={Cprime:.6g} C_Kn={C_Kn:.6g}")
    return KernelConstants(n=n, mu=mu, C=float(C), Cprime=float(Cprime), C_Kn=float(C_Kn),
                           M2=float(M2), z_star=z_star, C_Kn_refinement_gap=float(gap))


def gaussian_envelope(r: np.ndarray, nu: float, tau: float, constants: KernelConstants) -> np.ndarray:
    n, mu = constants.n, constants.mu
    return constants.C * (4.0 * nu * tau) ** (-mu) * np.asarray(r, dtype=float) ** (2 * mu - n)


def gradient_envelope(r: np.ndarray, nu: float, tau: float, constants: KernelConstants) -> np.ndarray:
    n, mu = constants.n, constants.mu
    return constants.Cprime * (4.0 * nu * tau) ** (-mu) * np.asarray(r, dtype=float) ** (2 * mu - n - 1)


def printed_envelope_gap(nu: float, tau: float, constants: KernelConstants) -> float:
    """sup_x G |x|^(n-2mu) divided by the printed bound C (nu tau)^(-mu/2).

    Values above 1 mean the printed normalisation is violated; this happens
    exactly when nu tau < 1/16.
    """
    mu = constants.mu
    return float((4.0 * nu * tau) ** (-mu) / (nu * tau) ** (-mu / 2))


def large_time_envelope(s: np.ndarray, nu: float, n: int) -> np.ndarray:
    return (4.0 * np.pi * nu * np.asarray(s, dtype=float)) ** (-n / 2)


def large_time_envelope_integral(nu: float, n: int) -> float:
    """Integral of the large-time envelope over s in (1, inf); finite for n >= 3."""
    if n < 3:
        raise DomainError(f"large-time envelope is integrable only for n >= 3, got {n}")
    value, _ = integrate.quad(lambda s: float(large_time_envelope(s, nu, n)), 1.0, np.inf)
    return value


def lipschitz_moment_bound(L: float, constants: KernelConstants) -> float:
    """Bound 4 L M2 for |F * d_i G_nu| with F Lipschitz of constant L."""
    if L < 0:
        raise DomainError(f"Lipschitz constant must be nonnegative, got {L}")
    return 4.0 * L * constants.M2


def lipschitz_check(field: ScalarField, L: float, nu: float, tau: float,
                    constants: KernelConstants) -> LipschitzCheck:
    """Verify |F * d_i G_nu| <= 4 L M2 at every grid point and for every axis."""
    bound = lipschitz_moment_bound(L, constants)
    measured = max(float(np.abs(heat_convolve_grad(field, nu, tau, a).samples).max())
                   for a in range(field.spec.n))
    return LipschitzCheck(bound=bound, measured=measured, holds=measured <= bound + 1e-12)


def small_step_lipschitz_bound(L: float, delta: float, n: int) -> float:
    """L * int_0^delta (1/4) (4 pi)^(-n/2) sigma^(-5/2) exp(-1/(4 sigma)) d sigma."""
    if delta < 0 or L < 0:
        raise DomainError(f"delta and L must be nonnegative, got delta={delta}, L={L}")
    if delta == 0:
        return 0.0
    value, _ = integrate.quad(
        lambda sig: 0.25 * (4 * np.pi) ** (-n / 2) * sig ** -2.5 * np.exp(-0.25 / sig),
        0.0, delta)
    return L * value
