import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from tqdm import tqdm

from src.fields.data import make_gaussian_data
from src.fields.grid import Frame, Trajectory, VectorField
from src.fields.norms import NormReport, sobolev_cm_norm
from src.kernels import spectral
from src.kernels.constants import KernelConstants
from src.scheme.config import IterationState, SchemeConfig
from src.scheme.duhamel import DuhamelPropagator, duhamel_rhs, free_evolution, nonlinear_terms
from src.utils.errors import DomainError, SchemeDivergedError

# Ratio of the first source step to the data at which a march is rejected
STEP_RATIO_LIMIT = 2.0
# Consecutive growing fixed-point changes after which a step is rejected
EXPANDING_SWEEPS = 3


def scheme_data(config: SchemeConfig) -> VectorField:
    """Transformed Gaussian data h^rho on the scheme grid, tapered at the rim of the cone base."""
    _, h_rho = make_gaussian_data(config.chart, config.points_per_axis)
    weights = spectral.taper_weights(config.grid)
    return h_rho.with_samples(h_rho.samples * weights, tapered=True)


def _damping_profile(config: SchemeConfig) -> np.ndarray:
    if not config.toggles.damping:
        return np.ones(config.slices)
    return (config.chart.rho - config.t_grid) / config.chart.rho


def _data_norm(data: VectorField) -> float:
    return float(np.abs(data.samples).max())


def _check_divergence(samples: np.ndarray, index: int, s: float, data_norm: float,
                      config: SchemeConfig) -> None:
    norm = float(np.abs(samples).max())
    if not np.isfinite(norm):
        raise SchemeDivergedError("non-finite slice", index, s, float("nan"))
    if norm > config.divergence_factor * data_norm:
        raise SchemeDivergedError(
            f"slice norm exceeds {config.divergence_factor:g} x data norm {data_norm:.3e}",
            index, s, norm)


def trajectory_norm(samples: np.ndarray, config: SchemeConfig) -> NormReport:
    """Max over slices (and components) of the H^m and C^m parts."""
    spec = config.grid
    sobolev, sup_cm, flagged = 0.0, 0.0, False
    for index, slice_samples in enumerate(samples):
        report = sobolev_cm_norm(VectorField(spec, slice_samples, Frame.CONE_Y), config.m, warn=False)
        sobolev = max(sobolev, report.sobolev)
        sup_cm = max(sup_cm, report.sup_cm)
        flagged = flagged or report.under_resolved
    if flagged:
        logging.debug(f"increment under-resolved for derivatives of order {config.m}")
    return NormReport(sobolev=sobolev, sup_cm=sup_cm, m=config.m, under_resolved=flagged)


def initial_state(data: VectorField, config: SchemeConfig) -> IterationState:
    """w^(0): heat flow of the data without damping."""
    w0 = free_evolution(data, config, damping=False)
    return IterationState(k=0, w=w0, w0=w0)


def picard_sweep(state: IterationState, config: SchemeConfig) -> IterationState:
    """One whole-interval sweep w^(k) = damped heat flow of data + duhamel_rhs(w^(k-1))."""
    if state.k >= config.k_max:
        raise DomainError(f"sweep index {state.k} already reached k_max = {config.k_max}")
    profile = _damping_profile(config)
    linear = state.w0.samples * profile.reshape((-1,) + (1,) * (state.w0.samples.ndim - 1))
    contribution = duhamel_rhs(state.w, config)
    new = linear + contribution.samples
    data_norm = _data_norm(state.w0.slice(0))
    for index, s in enumerate(config.s_grid):
        _check_divergence(new[index], index, float(s), data_norm, config)

    delta = new - state.w.samples
    report = trajectory_norm(delta, config)
    sup = float(np.abs(delta).max())
    converged = report.combined < config.fp_tol
    logging.info(f"Picard sweep {state.k + 1}: increment H^{config.m}={report.sobolev:.3e} "
                 f"C^{config.m}={report.sup_cm:.3e} sup={sup:.3e}")
    return IterationState(
        k=state.k + 1,
        w=state.w.with_samples(new, quantity="w", sweep=state.k + 1),
        w0=state.w0,
        increments=state.increments + [report],
        increment_sup=state.increment_sup + [sup],
        converged=converged,
    )


def run_whole_interval(config: SchemeConfig, data: Optional[VectorField] = None,
                       progress: bool = True) -> IterationState:
    """Whole-interval Picard iteration until the increment drops below fp_tol or k_max sweeps."""
    data = scheme_data(config) if data is None else data
    state = initial_state(data, config)
    logging.info(f"Whole-interval Picard: rho={config.chart.rho}, nu={config.nu}, "
                 f"{config.slices} slices, k_max={config.k_max}")
    with tqdm(total=config.k_max, desc="Picard sweeps", unit="sweep", disable=not progress) as pbar:
        while state.k < config.k_max:
            state = picard_sweep(state, config)
            pbar.update(1)
            if state.converged:
                break
    if not state.converged:
        logging.warning(f"Picard iteration not converged after {state.k} sweeps "
                        f"(last increment {state.increments[-1].combined:.3e})")
    return state


def step_size_ratio(config: SchemeConfig, data: VectorField) -> float:
    """Sup of the first source step ds A' E(ds/2) N(h) relative to the sup of h.

    N is at most quadratic, so the contraction factor of the per-step fixed
    point lies between half of this ratio and the ratio itself.
    """
    if not config.toggles.nonlinear:
        return 0.0
    scale = _data_norm(data)
    if scale == 0.0:
        return 0.0
    prop = DuhamelPropagator(config)
    with np.errstate(over="ignore", invalid="ignore"):
        source = nonlinear_terms(data.samples, float(prop.t[0]), config)
        ratio = float(np.abs(prop.source_step(source, 0)).max()) / scale
    return ratio if np.isfinite(ratio) else float("inf")


def check_step_size(config: SchemeConfig, data: VectorField) -> float:
    """Reject a configuration whose s-step is too coarse for the per-step fixed point."""
    ratio = step_size_ratio(config, data)
    if ratio >= STEP_RATIO_LIMIT:
        needed = (int(np.ceil((config.slices - 1) * ratio / STEP_RATIO_LIMIT)) + 1
                  if np.isfinite(ratio) else None)
        hint = f"use at least {needed} slices" if needed else "refine the s-grid"
        raise DomainError(f"s-step {config.ds:.4g} too large for these data: the first source step "
                          f"is {ratio:.3g} x the data (limit {STEP_RATIO_LIMIT:g}); {hint} or raise nu")
    logging.debug(f"step size ratio {ratio:.3e} for ds={config.ds:.4g}")
    return ratio


def _check_prefix(prefix: Trajectory, config: SchemeConfig) -> None:
    if prefix.spec != config.grid:
        raise DomainError(f"prefix grid {prefix.spec} does not match the scheme grid {config.grid}")
    if not 1 <= len(prefix) <= config.slices:
        raise DomainError(f"prefix holds {len(prefix)} slices, the scheme uses {config.slices}")
    if not np.allclose(prefix.times, config.s_grid[:len(prefix)], rtol=1e-12, atol=1e-12):
        raise DomainError("prefix slices do not lie on the scheme's s-grid")


def march(config: SchemeConfig, data: Optional[VectorField] = None,
          progress: bool = True, prefix: Optional[Trajectory] = None) -> Trajectory:
    """Time-marching with per-step fixed-point sweeps on the same midpoint equations.

    Each step solves W_{m+1} = A E(ds) W_m + ds A' E(ds/2) N((W_m + W_{m+1}) / 2).
    With a prefix (earlier slices of a march on the same s-step) marching
    resumes from its last slice.

    Raises:
        DomainError: when the s-step is too coarse for the fixed point to contract
        SchemeDivergedError: when a slice leaves the divergence bound
    """
    data = scheme_data(config) if data is None else data
    if data.spec != config.grid:
        raise DomainError(f"data grid {data.spec} does not match the scheme grid {config.grid}")
    check_step_size(config, data)
    prop = DuhamelPropagator(config)
    data_norm = _data_norm(data)
    if prefix is None:
        slices = [np.array(data.samples)]
        sweeps: List[int] = []
    else:
        _check_prefix(prefix, config)
        slices = list(prefix.samples)
        sweeps = list(prefix.meta.get("sweeps", [0] * (len(prefix) - 1)))
    current = slices[-1]
    unconverged = 0
    start = len(slices) - 1
    with tqdm(total=config.slices - 1 - start, desc="Marching", unit="slice",
              disable=not progress) as pbar:
        for m in range(start, config.slices - 1):
            base = prop.advance(current, m)
            nxt, used = base, 0
            if config.toggles.nonlinear:
                changes: List[float] = []
                for used in range(1, config.k_max + 1):
                    source = nonlinear_terms(0.5 * (current + nxt), float(prop.t_mid[m]), config)
                    if not np.all(np.isfinite(source)):
                        if used > 1:
                            raise DomainError(
                                f"fixed point of step {m} (s={prop.s_mid[m]:.4g}) overflowed after "
                                f"{used - 1} sweeps; the s-step {config.ds:.4g} is too large for "
                                f"these data, use more slices or raise nu")
                        raise SchemeDivergedError("non-finite values in the nonlinear terms",
                                                  m, float(prop.s_mid[m]), float("nan"))
                    candidate = base + prop.source_step(source, m)
                    change = float(np.abs(candidate - nxt).max())
                    nxt = candidate
                    if change < config.fp_tol * max(1.0, float(np.abs(nxt).max())):
                        break
                    changes.append(change)
                    if len(changes) > EXPANDING_SWEEPS and all(
                            b > a for a, b in zip(changes[-EXPANDING_SWEEPS - 1:-1],
                                                  changes[-EXPANDING_SWEEPS:])):
                        raise DomainError(
                            f"fixed point of step {m} (s={prop.s_mid[m]:.4g}) expands over "
                            f"{EXPANDING_SWEEPS} sweeps; the s-step {config.ds:.4g} is too large "
                            f"for these data, use more slices or raise nu")
                else:
                    unconverged += 1
            _check_divergence(nxt, m + 1, float(prop.s[m + 1]), data_norm, config)
            sweeps.append(used)
            slices.append(nxt)
            current = nxt
            pbar.update(1)
    if unconverged:
        logging.warning(f"march: {unconverged} steps hit k_max before the fixed-point tolerance")
    return Trajectory(config.grid, config.s_grid, np.stack(slices), Frame.CONE_Y,
                      {"quantity": "w", "mode": "march", "sweeps": sweeps})


def contraction_constant(data_norm: float, m: int, constants: KernelConstants) -> float:
    """c* = 4 2^m C_h^2 C_G (1 + C_Kn)."""
    if not data_norm > 0:
        raise DomainError(f"data norm must be positive, got {data_norm}")
    if m < 0:
        raise DomainError(f"norm order must be nonnegative, got {m}")
    return 4.0 * 2 ** m * data_norm ** 2 * constants.C_G * (1.0 + constants.C_Kn)


@dataclass(frozen=True)
class NonvanishReport:
    passed: bool
    value: float
    threshold: float
    r: float
    max_rho: float


def nonvanish_criterion(rho: float, mu: float, h0: float = 1.0) -> NonvanishReport:
    """Test r (1 + r / (1 - r)) = r / (1 - r) <= h0 / 2 with r = rho^mu.

    max_rho is the largest rho that passes for this mu and h0.
    """
    if not 0 < mu < 1:
        raise DomainError(f"mu must lie in (0, 1), got {mu}")
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    r = rho ** mu
    if r >= 1:
        raise DomainError(f"rho^mu = {r:.6g} must be < 1")
    value = r * (1.0 + r / (1.0 - r))
    threshold = 0.5 * h0
    r_star = threshold / (1.0 + threshold)
    return NonvanishReport(passed=bool(value <= threshold), value=float(value),
                           threshold=float(threshold), r=float(r),
                           max_rho=float(r_star ** (1.0 / mu)))


def geometric_partial_sums(r: float, terms: int) -> np.ndarray:
    """Partial sums of sum_{l >= 2} r^(l-1), which tend to r / (1 - r)."""
    return np.cumsum(r ** np.arange(1, terms + 1, dtype=float))


@dataclass(frozen=True)
class IncrementTailReport:
    norms: List[float]
    ratios: List[float]
    r: Optional[float]
    tail_bound: float
    partial_sums: List[float]
    tail_holds: bool
    center_deviation: float
    increment_sup_sum: float
    center_stable: bool
    data_center_deviation: float = 0.0
    notes: List[str] = field(default_factory=list)


def increment_tail_report(state: IterationState) -> IncrementTailReport:
    """Geometric-tail and center-stability bookkeeping for a whole-interval run.

    The center deviation is measured against w^(0), the heat flow of the data,
    since w^(K) - w^(0) is exactly the sum of the recorded increments.
    """
    if not state.increments:
        raise DomainError("no sweeps recorded")
    norms = [r.combined for r in state.increments]
    ratios = state.ratios
    notes = []
    r = max(ratios) if ratios else None
    if r is not None and r < 1:
        tail_bound = r / (1.0 - r) * norms[0]
    else:
        tail_bound = float("inf")
        notes.append("no contraction ratio below 1 was measured")
    partial = list(np.cumsum(norms[1:])) if len(norms) > 1 else [0.0]
    tail_holds = bool(partial[-1] <= tail_bound * (1.0 + 1e-12))

    origin = (slice(None), slice(None)) + state.w.spec.origin_index
    center = state.w.samples[origin]
    center0 = state.w0.samples[origin]
    deviation = float(np.abs(center - center0).max())
    sup_sum = float(sum(state.increment_sup))
    data_center = state.w0.samples[(0, slice(None)) + state.w.spec.origin_index]
    data_deviation = float(np.abs(center - data_center[None, :]).max())
    return IncrementTailReport(
        norms=norms, ratios=ratios, r=r, tail_bound=float(tail_bound),
        partial_sums=[float(p) for p in partial], tail_holds=tail_holds,
        center_deviation=deviation, increment_sup_sum=sup_sum,
        center_stable=bool(deviation <= sup_sum * (1.0 + 1e-12) + 1e-14),
        data_center_deviation=data_deviation, notes=notes,
    )
