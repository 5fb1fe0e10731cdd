"""Identity and bound checks behind the `verify` subcommand.

Each group appends to a CheckLedger. Exact identities are checks; places where
a measured value differs from a printed constant are recorded as discrepancies,
and trends are recorded as measured entries.
"""
import logging
from typing import Dict, Optional, Sequence

import numpy as np

from src.fields.data import cone_leakage, data_sigma, make_gaussian_data, reflection_symmetric
from src.fields.grid import Frame, GridSpec, ScalarField, VectorField
from src.fields.norms import decay_class_check, divergence, sobolev_cm_norm
from src.fields.transforms import laplacian_via_cone, pull_velocity, push_velocity
from src.geometry.cone import CoeffKind, ConeChart
from src.kernels import constants as kc
from src.kernels import spectral
from src.kernels.heat import gaussian, gaussian_grad, leray_project
from src.kernels.riesz import riesz_convolve, riesz_direct_quadrature
from src.experiments.ledger import CheckLedger
from src.limits.blowup import (TAIL_DECADES, BlowupReport, CenterSeries, blowup_fit,
                               reconstruct_center_series)
from src.limits.sweep import SweepResult
from src.scheme.audit import transform_audit
from src.scheme.original import OriginalPicardResult, original_nse_picard
from src.scheme.picard import IncrementTailReport, geometric_partial_sums, nonvanish_criterion

# (rho, eps) pairs of the damping log-divergence check
DAMPING_INTEGRAL_CASES = ((0.1, 1e-3), (0.05, 1e-4))
SUP_RHOS = (0.01, 0.02, 0.05, 0.1)
ENVELOPE_MUS = (0.25, 0.5, 0.75)
PRINTED_DAMPING_SUP = 1.0
LERAY_POINTS = 64
RIESZ_POINTS = 64
# Projector and Riesz comparisons run in three dimensions
KERNEL_GRID_DIM = 3
RIESZ_HALF_EXTENT = 12.0
RIESZ_TARGETS = np.array([[0.5, 0.0, 0.0], [1.0, 0.5, -0.5], [-1.5, 1.0, 0.25]])
# Points per axis of the push/pull and cone-Laplacian grids
TRANSFORM_POINTS = 64
# Original-coordinate Picard run behind the decay-preservation checks
DECAY_POINTS = 64
DECAY_HALF_EXTENT = 8.0
DECAY_AMPLITUDE = 0.1
DECAY_NU = 0.1
DECAY_HORIZON = 0.1
# Lower end of the band |v| (rho - t) must stay in on the final decade
FINAL_PRODUCT_FLOOR = 0.4
# Largest relative spread of contraction ratios across viscosities
NU_SPREAD_LIMIT = 0.25
# Largest ratio of contraction ratios when rho decreases
RHO_SCALING_LIMIT = 0.6
# Slack on fitted blow-up orders
ORDER_TOLERANCE = 1e-3


def geometry_checks(ledger: CheckLedger, n: int = 3, rhos: Sequence[float] = SUP_RHOS) -> None:
    logging.info("Verify: geometry")
    for rho in rhos:
        chart = ConeChart(n, rho)
        t = np.linspace(0.0, 0.999 * rho, 257)
        trip = float(np.abs(chart.t_of_s(chart.s_of_t(t)) - t).max())
        ledger.add_check(f"geometry.time_roundtrip[rho={rho}]", trip <= 1e-12 * rho, trip, 0.0)
        x = np.linspace(-50.0, 50.0, 201)
        t_mid = 0.5 * rho
        x_trip = float(np.abs(chart.x_of_y(t_mid, chart.y_of_x(t_mid, x)) - x).max())
        ledger.add_check(f"geometry.space_roundtrip[rho={rho}]", x_trip <= 1e-9, x_trip, 0.0)
        jac = float(np.abs(chart.ds_dt(t) * chart.dt_ds(chart.s_of_t(t)) - 1.0).max())
        ledger.add_check(f"geometry.ds_dt_reciprocal[rho={rho}]", jac <= 1e-12, jac, 0.0)

        sup = chart.coeff_sup(CoeffKind.BURGERS)
        ledger.add_check(f"geometry.burgers_sup[rho={rho}]", abs(sup - rho) <= 1e-6 * rho, sup, rho)
        damping_sup = chart.coeff_sup(CoeffKind.DAMPING)
        expected = 3.0 * np.sqrt(3.0) / 4.0
        ledger.add_check(f"geometry.damping_sup[rho={rho}]", abs(damping_sup - expected) <= 1e-6,
                         damping_sup, expected, argsup=chart.coeff_argsup(CoeffKind.DAMPING))

    chart = ConeChart(n, rhos[0])
    ledger.add_discrepancy("geometry.damping_sup_printed", chart.coeff_sup(CoeffKind.DAMPING),
                           PRINTED_DAMPING_SUP,
                           note="damping coefficient reaches 3 sqrt(3)/4 at t = rho/2, above the printed bound 1")

    for rho, eps in DAMPING_INTEGRAL_CASES:
        value = ConeChart(n, rho).damping_time_integral(eps)
        expected = float(np.log(rho / eps))
        ledger.add_check(f"geometry.damping_integral[rho={rho},eps={eps}]",
                         abs(value - expected) <= 1e-6 * expected, value, expected)

    chart = ConeChart(n, rhos[-1])
    bound = 2.0
    mass = chart.cylinder_damping_mass(bound)
    closed = bound * np.pi ** n * chart.rho ** n / n
    ledger.add_check("geometry.cylinder_damping_mass", abs(mass - closed) <= 1e-10 * closed, mass, closed)
    jac = _measure_factor_gap(chart, 0.5 * chart.rho)
    ledger.add_check("geometry.measure_factor_jacobian", jac <= 1e-6, jac, 0.0)


def _measure_factor_gap(chart: ConeChart, t: float, points: int = 8, h: float = 1e-5) -> float:
    """Largest relative gap between measure_factor and a central-difference Jacobian determinant."""
    x = np.random.default_rng(0).uniform(-4.0, 4.0, (points, chart.n))
    jacobian = np.zeros((points, chart.n, chart.n))
    for j in range(chart.n):
        step = np.zeros(chart.n)
        step[j] = h
        jacobian[:, :, j] = (chart.y_of_x(t, x + step) - chart.y_of_x(t, x - step)) / (2 * h)
    exact = chart.measure_factor(t, x)
    return float(np.abs(np.linalg.det(jacobian) / exact - 1.0).max())


def kernel_checks(ledger: CheckLedger, n: int = 3, mus: Sequence[float] = ENVELOPE_MUS,
                  radial_nodes: int = kc.RADIAL_NODES) -> None:
    logging.info("Verify: kernels")
    spec = GridSpec(n, 32, 2.0)
    r = spec.radius()
    nonzero = r > 0
    for mu in mus:
        constants = kc.kernel_constants(n, mu, radial_nodes)
        for nu, tau in ((0.01, 1.0), (1.0, 0.5)):
            g = gaussian(r[nonzero], nu, tau, n)
            bound = kc.gaussian_envelope(r[nonzero], nu, tau, constants)
            worst = float((g / bound).max())
            ledger.add_check(f"kernels.gaussian_envelope[mu={mu},nu={nu},tau={tau}]",
                             worst <= 1.0 + 1e-12, worst, 1.0)
            grad = np.abs(gaussian_grad(spec.mesh()[0][nonzero], r[nonzero], nu, tau, n))
            bound = kc.gradient_envelope(r[nonzero], nu, tau, constants)
            worst = float((grad / bound).max())
            ledger.add_check(f"kernels.gradient_envelope[mu={mu},nu={nu},tau={tau}]",
                             worst <= 1.0 + 1e-12, worst, 1.0)
        gap = kc.printed_envelope_gap(0.01, 1.0, constants)
        ledger.add_discrepancy(f"kernels.printed_envelope[mu={mu}]", gap, 1.0,
                               note="ratio of the rigorous envelope to the printed sqrt(nu tau)^mu "
                                    "normalisation at nu tau = 0.01; above 1 whenever nu tau < 1/16")
        if mu == 0.5:
            ledger.add_check("kernels.M2", abs(constants.M2 - 1.0) <= 1e-10, constants.M2, 1.0)
            ledger.add_measured("kernels.C_Kn", constants.C_Kn,
                                refinement_gap=constants.C_Kn_refinement_gap)

    nu = 0.1
    closed = (4.0 * np.pi * nu) ** (-n / 2) / (n / 2 - 1.0)
    value = kc.large_time_envelope_integral(nu, n)
    ledger.add_check("kernels.large_time_integral", abs(value - closed) <= 1e-8 * closed, value, closed)
    bounds = [kc.small_step_lipschitz_bound(1.0, d, n) for d in (1e-3, 1e-2, 1e-1, 1.0)]
    ledger.add_check("kernels.small_step_bound_increasing", bool(np.all(np.diff(bounds) > 0)), bounds, None)

    periodic = GridSpec(n, 32, np.pi)
    field = ScalarField(periodic, np.sin(periodic.mesh()[0]), Frame.ORIGINAL_X)
    check = kc.lipschitz_check(field, 1.0, 0.1, 1.0, kc.kernel_constants(n, 0.5, radial_nodes))
    ledger.add_check("kernels.lipschitz_moment_bound", check.holds, check.measured, check.bound)

    leray_spec = GridSpec(KERNEL_GRID_DIM, LERAY_POINTS, RIESZ_HALF_EXTENT)
    mesh = leray_spec.mesh()
    bump = np.exp(-leray_spec.radius() ** 2 / 2.0)
    v = VectorField(leray_spec, np.stack([mesh[(i + 1) % 3] * bump for i in range(3)])
                    + np.stack([bump] * 3), Frame.ORIGINAL_X)
    p = leray_project(v)
    idem = float(np.abs(leray_project(p).samples - p.samples).max())
    ledger.add_check("kernels.leray_idempotent", idem <= 1e-10, idem, 0.0)
    div = float(np.abs(divergence(p).samples).max())
    ledger.add_check("kernels.leray_divergence_free", div <= 1e-10, div, 0.0)
    grad = VectorField(leray_spec, spectral.gradient(bump, leray_spec), Frame.ORIGINAL_X)
    annihilated = float(np.abs(leray_project(grad).samples).max())
    ledger.add_check("kernels.leray_annihilates_gradients", annihilated <= 1e-10, annihilated, 0.0)

    riesz_spec = GridSpec(KERNEL_GRID_DIM, RIESZ_POINTS, RIESZ_HALF_EXTENT)

    # d_0 Laplace exp(-r^2/2): zero mean and zero dipole moment, so the periodic
    # fast path has no k = 0 defect
    def source(points: np.ndarray) -> np.ndarray:
        r2 = np.sum(points * points, axis=-1)
        return points[..., 0] * (5.0 - r2) * np.exp(-r2 / 2.0)

    grid_points = np.stack(riesz_spec.mesh(), axis=-1)
    fast = riesz_convolve(ScalarField(riesz_spec, source(grid_points), Frame.ORIGINAL_X), 0)
    h = riesz_spec.spacing
    middle = riesz_spec.points_per_axis // 2
    indices = [tuple(int(round(c / h)) + middle for c in target) for target in RIESZ_TARGETS]
    targets = np.array([[riesz_spec.axis()[i] for i in idx] for idx in indices])
    direct = riesz_direct_quadrature(source, targets, 0, KERNEL_GRID_DIM, RIESZ_HALF_EXTENT)
    fast_values = np.array([fast.samples[idx] for idx in indices])
    rel = float(np.abs(fast_values - direct).max() / np.abs(direct).max())
    ledger.add_check("kernels.riesz_fast_vs_direct", rel <= 1e-3, rel, 0.0,
                     targets=targets.tolist())


def field_checks(ledger: CheckLedger, chart: ConeChart, points_per_axis: int = 32) -> None:
    logging.info("Verify: fields")
    h, h_rho = make_gaussian_data(chart, points_per_axis)
    center = float(h_rho.at_origin()[0])
    ledger.add_check("fields.h_rho_center", abs(center - 1.0) <= 1e-12, center, 1.0)
    ledger.add_check("fields.h_reflection_symmetric", reflection_symmetric(h), None, True)
    ledger.add_check("fields.h_rho_reflection_symmetric", reflection_symmetric(h_rho), None, True)
    leakage = cone_leakage(chart, h.spec.half_extent)
    ledger.add_check("fields.cone_leakage", leakage < 1e-8, leakage, 1e-8,
                     half_extent_sigmas=h.spec.half_extent / data_sigma(chart))

    # push then pull on the cylinder; the sampled x-box covers |z| <= arctan(12)
    grid_chart = ConeChart(KERNEL_GRID_DIM, chart.rho)
    s = 0.5
    t = float(grid_chart.t_of_s(s))
    z_spec = GridSpec(KERNEL_GRID_DIM, TRANSFORM_POINTS, np.pi / 2)
    z = z_spec.mesh()
    profile = np.exp(-sum(np.tan(za) ** 2 for za in z) / 8.0)
    w = VectorField(z_spec, (grid_chart.rho - t) * profile[None], Frame.CYLINDER_Z, s)
    v = push_velocity(w, grid_chart, GridSpec(KERNEL_GRID_DIM, TRANSFORM_POINTS, 12.0))
    back = pull_velocity(v, grid_chart, z_spec, Frame.CYLINDER_Z)
    core = np.all(np.abs(np.stack(z)) <= 1.0, axis=0)
    trip = float(np.abs(back.samples[0] - w.samples[0])[core].max() / np.abs(w.samples).max())
    ledger.add_check("fields.push_pull_roundtrip", trip <= 1e-2, trip, 0.0)

    # Delta_x of exp(-x_1^2) through the cone derivatives
    y_spec = GridSpec(KERNEL_GRID_DIM, TRANSFORM_POINTS, grid_chart.rho * np.pi / 2)
    z1 = y_spec.mesh()[0] / grid_chart.rho
    with np.errstate(over="ignore"):
        bump = grid_chart.rho * np.exp(-np.tan(z1) ** 2)
    lap = laplacian_via_cone(VectorField(y_spec, bump[None], Frame.CONE_Y, 0.0), grid_chart).samples[0]
    x1 = np.tan(z1)
    inner = np.abs(z1) < 1.2
    gap = float(np.abs(lap - (4.0 * x1 ** 2 - 2.0) * np.exp(-x1 ** 2))[inner].max())
    ledger.add_check("fields.laplacian_via_cone", gap <= 1e-3, gap, 0.0)

    x_spec = GridSpec(KERNEL_GRID_DIM, 32, 8.0)
    r2 = x_spec.radius() ** 2
    gaussian_field = ScalarField(x_spec, np.exp(-r2 / 2.0), Frame.ORIGINAL_X)
    algebraic = ScalarField(x_spec, 1.0 / (1.0 + r2), Frame.ORIGINAL_X)
    ledger.add_check("fields.decay_gaussian_in_class", decay_class_check(gaussian_field, 8, 2).passed,
                     None, True)
    ledger.add_check("fields.decay_algebraic_out_of_class", not decay_class_check(algebraic, 8, 0).passed,
                     None, False)
    l2 = sobolev_cm_norm(gaussian_field, 0).sobolev
    closed = np.pi ** (KERNEL_GRID_DIM / 4)
    ledger.add_check("fields.sobolev_gaussian_l2", abs(l2 - closed) <= 1e-4 * closed, l2, closed)
    h1 = sobolev_cm_norm(gaussian_field, 1, warn=False).sobolev
    ledger.add_check("fields.sobolev_monotone_in_m", h1 >= l2, h1, l2)


def scheme_checks(ledger: CheckLedger, mu: float = 0.5) -> None:
    logging.info("Verify: scheme constants")
    report = nonvanish_criterion(0.01, mu)
    if mu == 0.5:
        ledger.add_check("scheme.nonvanish_max_rho", abs(report.max_rho - 1.0 / 9.0) <= 1e-10,
                         report.max_rho, 1.0 / 9.0)
    edge = nonvanish_criterion(report.max_rho * (1.0 - 1e-9), mu)
    ledger.add_check("scheme.nonvanish_edge_passes", edge.passed, edge.value, edge.threshold)
    beyond = nonvanish_criterion(report.max_rho * (1.0 + 1e-6), mu)
    ledger.add_check("scheme.nonvanish_beyond_fails", not beyond.passed, beyond.value, beyond.threshold)
    sums = geometric_partial_sums(report.r, 200)
    limit = report.r / (1.0 - report.r)
    ledger.add_check("scheme.geometric_tail", abs(sums[-1] - limit) <= 1e-10, float(sums[-1]), limit)


def limits_checks(ledger: CheckLedger, chart: ConeChart, amplitude: float = 0.7) -> None:
    """Blow-up fit on an exact order-one series and the two center reconstructions."""
    logging.info("Verify: limits")
    gap = chart.rho * np.geomspace(1.0, 1e-3, 40)
    report = blowup_fit(chart.rho - gap, amplitude / gap, chart)
    ledger.add_check("limits.blowup_fit_synthetic", abs(report.fitted_order - 1.0) <= ORDER_TOLERANCE,
                     report.fitted_order, 1.0, bounded_product=report.bounded_product)

    s = np.linspace(0.0, 2.0, 5)
    series = np.linspace(1.0, 0.2, s.size)
    sweep = SweepResult(nus=[1.0], times=s, trajectories={1.0: series}, norms={1.0: 0.0},
                        extrapolated=series, error=np.zeros_like(series), rho=chart.rho)
    reconstructed = reconstruct_center_series(sweep, chart).v
    spec = GridSpec(chart.n, 16, chart.rho * np.pi / 2)
    data = np.exp(-spec.radius() ** 2 / chart.rho ** 2)
    target = GridSpec(chart.n, 16, 4.0)
    pushed = np.array([push_velocity(VectorField(spec, (c * data)[None], Frame.CONE_Y, float(si)),
                                     chart, target).at_origin()[0] for si, c in zip(s, series)])
    mismatch = float(np.abs(pushed - reconstructed).max() / np.abs(reconstructed).max())
    ledger.add_check("limits.reconstruction_identity", mismatch <= 1e-10, mismatch, 0.0)


def decay_checks(ledger: CheckLedger, progress: bool = False) -> OriginalPicardResult:
    """Burgers Picard increments in original coordinates keep the decay class (8, 2)."""
    logging.info("Verify: decay preservation")
    spec = GridSpec(KERNEL_GRID_DIM, DECAY_POINTS, DECAY_HALF_EXTENT)
    bump = DECAY_AMPLITUDE * np.exp(-spec.radius() ** 2 / 2.0)
    h = VectorField(spec, np.stack([bump] * KERNEL_GRID_DIM), Frame.ORIGINAL_X)
    burgers = original_nse_picard(h, DECAY_NU, DECAY_HORIZON, k_max=2, steps=4, leray=False,
                                  progress=progress)
    ledger.add_check("decay.original_burgers_increments", burgers.increments_decay_passed,
                     [[r.passed for r in sweep] for sweep in burgers.increment_decay], True,
                     l=burgers.increment_decay[0][0].l, m=burgers.increment_decay[0][0].m)
    ledger.add_check("decay.original_burgers_iterates", burgers.iterates_decay_passed, None, True)
    full = original_nse_picard(h, DECAY_NU, DECAY_HORIZON, k_max=2, steps=4, progress=progress)
    ledger.add_measured("decay.original_leray_increments", full.increments_decay_passed,
                        note="the Riesz term decays algebraically, so Leray increments may leave the class")
    return burgers


def nonvanish_chain_checks(ledger: CheckLedger, chart: ConeChart, mu: float, h0: float,
                           tail: IncrementTailReport, center: CenterSeries,
                           blowup: Optional[BlowupReport], prefix: str = "chain") -> None:
    """Measured links of the non-vanishing argument for one full-term run.

    The bound C on |v| (rho - t) is h0 plus the recorded increment sup-sum,
    which is what center stability allows.
    """
    criterion = nonvanish_criterion(chart.rho, mu, h0)
    ledger.add_measured(f"{prefix}.nonvanish_criterion", criterion.passed,
                        value=criterion.value, threshold=criterion.threshold, max_rho=criterion.max_rho)
    if not criterion.passed:
        ledger.add_measured(f"{prefix}.skipped", f"rho={chart.rho} lies above {criterion.max_rho:.4g}")
        return
    half = 0.5 * h0
    ledger.add_check(f"{prefix}.increment_sup_sum", tail.increment_sup_sum <= half,
                     tail.increment_sup_sum, half)
    ledger.add_check(f"{prefix}.center_stable", tail.center_stable, tail.center_deviation,
                     tail.increment_sup_sum)
    if blowup is None:
        ledger.add_check(f"{prefix}.tail_limit", False, None, half,
                         note="blow-up fit unavailable on this run")
        return
    ledger.add_check(f"{prefix}.tail_limit",
                     blowup.tail_limit_estimate + blowup.tail_uncertainty >= half,
                     blowup.tail_limit_estimate, half, uncertainty=blowup.tail_uncertainty)
    gap = chart.rho - center.t
    decade = gap <= gap.min() * 10 ** TAIL_DECADES
    product = np.abs(center.v[decade]) * gap[decade]
    upper = h0 + tail.increment_sup_sum
    ledger.add_check(f"{prefix}.final_decade_product",
                     bool(product.min() >= FINAL_PRODUCT_FLOOR and product.max() <= upper),
                     [float(product.min()), float(product.max())], [FINAL_PRODUCT_FLOOR, upper])
    ledger.add_check(f"{prefix}.blowup_order_at_most_one", blowup.order_interval[0] <= 1.0 + ORDER_TOLERANCE,
                     blowup.fitted_order, 1.0, order_interval=blowup.order_interval)


def sweep_checks(ledger: CheckLedger, report: Dict) -> None:
    """Contraction and extrapolation thresholds over a finished sweep report."""
    for rho, per_rho in report["per_rho"].items():
        ledger.add_check(f"sweep.extrapolation[rho={rho}]", not per_rho["declined"],
                         per_rho["order"], "fitted order", note="; ".join(per_rho["notes"]))
        for nu, row in per_rho["contraction"].items():
            ledger.add_check(f"sweep.contraction_converged[rho={rho},nu={nu}]", row["converged"],
                             row["ratios"][-1] if row["ratios"] else None, None)
            ledger.add_check(f"sweep.ratio_within_prediction[rho={rho},nu={nu}]",
                             row["within_prediction"], row["max_ratio"], row["predicted_ratio"])
    for rho, spread in report["trends"]["spread_across_nu"].items():
        ledger.add_check(f"sweep.nu_spread[rho={rho}]", bool(spread < NU_SPREAD_LIMIT),
                         spread, NU_SPREAD_LIMIT)
    for pair, by_nu in report["trends"]["ratio_of_ratios"].items():
        later, earlier = (float(v) for v in pair.split("/"))
        if later >= earlier:
            continue
        for nu, value in by_nu.items():
            ledger.add_check(f"sweep.rho_scaling[{pair},nu={nu}]", bool(value <= RHO_SCALING_LIMIT),
                             value, RHO_SCALING_LIMIT)


def audit_checks(ledger: CheckLedger, sample_count: int, seed: int, n: int = 3,
                 progress: bool = False):
    logging.info("Verify: transform audit")
    audit = transform_audit(sample_count, seed, n, progress=progress)
    for key in ("burgers", "damping", "damping_printed", "leray_time", "leray_spatial",
                "leray_measure", "identity_burgers", "identity_leray"):
        entry = audit.entries[key]
        ledger.add_check(f"audit.{key}", entry.matches, entry.max_rel_error, 0.0)
    ledger.add_check("audit.variant_resolved", audit.selected_variant is not None,
                     audit.selected_variant, "unique match")
    for variant in ("printed_A", "printed_B"):
        entry = audit.entries[f"convection_{variant}"]
        if not entry.matches:
            ledger.add_discrepancy(f"audit.convection_{variant}", entry.measured_factor, 1.0,
                                   note="median ratio to the chain-rule coefficient; equals rho - t",
                                   factor_is_gap=audit.entries[f"convection_{variant}_factor_is_gap"].matches)
    ledger.add_check("audit.printed_forms_coincide", audit.entries["printed_A_vs_printed_B"].matches,
                     audit.entries["printed_A_vs_printed_B"].max_rel_error, 0.0)
    for note in audit.notes:
        ledger.add_measured("audit.note", note)
    return audit


def run_verify(chart: ConeChart, mu: float = 0.5, sample_count: int = 1000, seed: int = 0,
               radial_nodes: int = kc.RADIAL_NODES, progress: bool = False,
               rhos: Optional[Sequence[float]] = None) -> CheckLedger:
    """Run every check group and return the ledger."""
    ledger = CheckLedger()
    geometry_checks(ledger, chart.n, SUP_RHOS if rhos is None else rhos)
    kernel_checks(ledger, chart.n, radial_nodes=radial_nodes)
    field_checks(ledger, chart)
    scheme_checks(ledger, mu)
    limits_checks(ledger, chart)
    decay_checks(ledger, progress)
    audit_checks(ledger, sample_count, seed, chart.n, progress)
    logging.info(f"Verify finished: {len(ledger.failures)} failures")
    return ledger
