import dataclasses
import math

import numpy as np
import pytest

from src.fields.grid import Frame, GridSpec, VectorField
from src.fields.norms import sobolev_cm_norm
from src.geometry.cone import ConeChart
from src.kernels import spectral
from src.kernels.constants import kernel_constants
from src.limits.forcing import synthesize_forcing
from src.scheme.audit import transform_audit
from src.scheme.config import ConvectionVariant, SchemeConfig, Toggles
from src.scheme.dual import Dual, derivative
from src.scheme.duhamel import (convection_coefficient, duhamel_rhs, free_evolution,
                                nonlinear_terms)
from src.scheme.original import original_nse_picard
from src.scheme.picard import (STEP_RATIO_LIMIT, contraction_constant, geometric_partial_sums,
                               increment_tail_report, initial_state, march, nonvanish_criterion,
                               picard_sweep, run_whole_interval, scheme_data, step_size_ratio)
from src.scheme.residual import defect_tolerance, residual_check
from src.utils.errors import DomainError, SchemeDivergedError


def _config(rho=0.02, **kw) -> SchemeConfig:
    values = dict(nu=1e-2, points_per_axis=16, slices=9, s_max=0.5, k_max=40, fp_tol=1e-12)
    values.update(kw)
    return SchemeConfig(chart=ConeChart(3, rho), **values)


# -- dual numbers -----------------------------------------------------------

def test_dual_derivatives_of_elementary_functions():
    assert derivative(lambda x: x.sin(), 0.3) == pytest.approx(math.cos(0.3))
    assert derivative(lambda x: x.arctan(), 2.0) == pytest.approx(1.0 / 5.0)
    assert derivative(lambda x: x.tan(), 0.4) == pytest.approx(1.0 / math.cos(0.4) ** 2)
    assert derivative(lambda x: (1.0 - x * x).sqrt(), 0.6) == pytest.approx(-0.6 / 0.8)
    assert derivative(lambda x: 1.0 / x, 4.0) == pytest.approx(-1.0 / 16.0)
    assert derivative(lambda x: x ** 3, 2.0) == pytest.approx(12.0)
    assert derivative(lambda x: (2.0 * x).exp(), 0.0) == pytest.approx(2.0)


def test_dual_errors():
    with pytest.raises(ZeroDivisionError):
        Dual(1.0) / Dual(0.0)
    with pytest.raises(ValueError):
        Dual(-1.0).sqrt()
    with pytest.raises(TypeError):
        derivative(lambda x: 1.0, 0.0)


# -- configuration ----------------------------------------------------------

def test_scheme_config_validation():
    with pytest.raises(DomainError):
        _config(nu=0.0)
    with pytest.raises(DomainError):
        _config(slices=1)
    with pytest.raises(DomainError):
        Toggles.only("pressure")
    config = SchemeConfig(chart=ConeChart(3, 0.02), nu=0.01)
    assert config.s_max == pytest.approx(config.chart.s_max_default())
    assert config.grid.half_extent == pytest.approx(0.02 * np.pi / 2)
    assert config.t_grid[-1] < config.chart.rho


def test_toggles():
    assert not Toggles.none().nonlinear
    only = Toggles.only("damping")
    assert only.damping and not only.nonlinear
    assert Toggles().nonlinear


def test_convection_variants_differ_by_the_gap(chart):
    t = 0.3 * chart.rho
    z = np.linspace(-1.5, 1.5, 7)
    y = (chart.rho - t) * z
    chain = convection_coefficient(ConvectionVariant.CHAIN_RULE, chart, t, z, y)
    printed_a = convection_coefficient(ConvectionVariant.PRINTED_A, chart, t, z, y)
    printed_b = convection_coefficient(ConvectionVariant.PRINTED_B, chart, t, z, y)
    assert np.allclose(printed_a, (chart.rho - t) * chain)
    assert np.allclose(printed_a, printed_b)


def test_nonlinear_terms_vanish_on_constant_fields():
    config = _config()
    samples = np.full((3,) + config.grid.shape, 0.7)
    assert np.allclose(nonlinear_terms(samples, 0.01, config), 0.0)
    with pytest.raises(DomainError):
        nonlinear_terms(samples[:2], 0.01, config)


# -- linear limits ----------------------------------------------------------

def test_all_terms_off_is_heat_flow():
    config = _config(toggles=Toggles.none())
    data = scheme_data(config)
    trajectory = march(config, data, progress=False)
    heat = free_evolution(data, config, damping=False)
    assert np.abs(trajectory.samples - heat.samples).max() < 1e-12


def test_damping_only_center_follows_the_gap():
    config = _config(nu=1e-8, slices=33, s_max=None, toggles=Toggles.only("damping"))
    data = scheme_data(config)
    trajectory = march(config, data, progress=False)
    rho, t = config.chart.rho, config.t_grid
    heat = free_evolution(data, config, damping=True)
    assert np.abs(trajectory.samples - heat.samples).max() < 1e-12
    center = trajectory.center_series(0)
    assert np.abs(center - (rho - t) / rho).max() <= 1e-2
    v = center / (rho - t)
    assert np.abs(v * rho - 1.0).max() <= 1e-2


def test_zero_data_stays_zero():
    config = _config()
    zero = VectorField(config.grid, np.zeros((3,) + config.grid.shape), Frame.CONE_Y)
    assert np.all(march(config, zero, progress=False).samples == 0.0)
    state = run_whole_interval(config, zero, progress=False)
    assert np.all(state.w.samples == 0.0)


# -- Duhamel integral ---------------------------------------------------------

def test_duhamel_derivative_path_equals_spectral_derivative():
    config = _config(slices=5)
    state = initial_state(scheme_data(config), config)
    plain = duhamel_rhs(state.w, config)
    scale = np.abs(plain.samples).max()
    assert scale > 0
    for axis in range(3):
        derived = duhamel_rhs(state.w, config, axis=axis)
        expected = spectral.derivative(plain.samples, config.grid, axis)
        assert np.abs(derived.samples - expected).max() <= 1e-10 * np.abs(expected).max()
    with pytest.raises(DomainError):
        duhamel_rhs(state.w, config, axis=3)


def test_march_agrees_with_whole_interval_iteration():
    config = _config(slices=5, s_max=0.25, k_max=30, fp_tol=1e-10)
    data = scheme_data(config)
    state = run_whole_interval(config, data, progress=False)
    marched = march(config, data, progress=False)
    scale = np.abs(marched.samples).max()
    assert np.abs(state.w.samples - marched.samples).max() < 1e-7 * scale
    assert state.ratios and state.ratios[0] < 1.0


def test_picard_sweep_refuses_to_exceed_k_max():
    config = _config(k_max=1)
    state = picard_sweep(initial_state(scheme_data(config), config), config)
    with pytest.raises(DomainError):
        picard_sweep(state, config)


def test_march_resumes_from_a_prefix():
    config = _config()
    full = march(config, progress=False)
    head = march(dataclasses.replace(config, slices=5, s_max=4 * config.ds), progress=False)
    resumed = march(config, progress=False, prefix=head)
    assert np.abs(resumed.samples - full.samples).max() <= 1e-14 * np.abs(full.samples).max()
    assert len(resumed.meta["sweeps"]) == config.slices - 1
    with pytest.raises(DomainError):
        march(config, progress=False, prefix=march(_config(slices=5), progress=False))


def test_march_rejects_steps_too_coarse_for_the_fixed_point():
    config = _config(rho=0.05, nu=1e-8, slices=9, s_max=1.0)
    with pytest.raises(DomainError, match="s-step"):
        march(config, progress=False)


def test_step_size_ratio_vanishes_without_nonlinear_terms():
    config = _config(toggles=Toggles.only("damping"))
    assert step_size_ratio(config, scheme_data(config)) == 0.0
    full = _config()
    ratio = step_size_ratio(full, scheme_data(full))
    assert 0.0 < ratio < STEP_RATIO_LIMIT


def test_divergence_guard_raises():
    config = _config(divergence_factor=1e-3)
    with pytest.raises(SchemeDivergedError) as info:
        march(config, progress=False)
    assert info.value.slice_index >= 1


def test_increment_tail_report_center_stability():
    config = _config(k_max=6)
    state = run_whole_interval(config, scheme_data(config), progress=False)
    report = increment_tail_report(state)
    assert report.center_stable
    assert len(report.norms) == state.k
    with pytest.raises(DomainError):
        increment_tail_report(initial_state(scheme_data(config), config))


# -- residual -----------------------------------------------------------------

def _residual_at(report, s):
    return report.norms[int(np.argmin(np.abs(np.asarray(report.times) - s)))]


def test_strong_residual_is_second_order_in_ds():
    coarse = _config(rho=0.05, nu=1e-5, slices=9, s_max=1.0, toggles=Toggles.only("damping"))
    fine = _config(rho=0.05, nu=1e-5, slices=17, s_max=1.0, toggles=Toggles.only("damping"))
    r_coarse = residual_check(march(coarse, progress=False), coarse)
    r_fine = residual_check(march(fine, progress=False), fine)
    for s in (0.25, 0.5, 0.75):
        assert _residual_at(r_coarse, s) > 0
        assert np.log2(_residual_at(r_coarse, s) / _residual_at(r_fine, s)) >= 1.9


def test_converged_march_leaves_step_defects_at_the_fixed_point_tolerance():
    config = _config()
    trajectory = march(config, progress=False)
    report = residual_check(trajectory, config)
    assert len(report.defects) == config.slices - 1
    assert report.max_defect <= defect_tolerance(trajectory, config)


def test_forced_defect_detects_forcings_other_than_the_heat_term():
    config = _config()
    trajectory = march(config, progress=False)
    forcing = synthesize_forcing(trajectory, config.nu, config.chart)
    tolerance = defect_tolerance(trajectory, config)
    matched = residual_check(trajectory, config, forcing=forcing.f_w)
    doubled = residual_check(trajectory, config,
                             forcing=forcing.f_w.with_samples(2.0 * forcing.f_w.samples))
    assert matched.max_defect <= tolerance
    assert doubled.max_defect > 1e3 * tolerance


def test_residual_is_linear_without_nonlinear_terms():
    config = _config(toggles=Toggles.only("damping"))
    trajectory = march(config, progress=False)
    base = residual_check(trajectory, config)
    scaled = residual_check(trajectory.with_samples(2.5 * trajectory.samples), config)
    assert np.allclose(scaled.norms, 2.5 * np.asarray(base.norms), rtol=1e-10, atol=1e-300)


def test_forced_residual_reproduces_the_unforced_one():
    config = _config()
    trajectory = march(config, progress=False)
    forcing = synthesize_forcing(trajectory, config.nu, config.chart)
    unforced = residual_check(trajectory, config)
    forced = residual_check(trajectory, config, forcing=forcing.f_w)
    assert forced.forced and not unforced.forced
    assert np.allclose(forced.norms, unforced.norms, rtol=1e-10, atol=1e-14)
    assert np.allclose(forced.defects, unforced.defects, rtol=1e-6, atol=1e-13)


def test_residual_rejects_foreign_trajectories():
    config = _config()
    trajectory = march(config, progress=False)
    with pytest.raises(DomainError):
        residual_check(trajectory, _config(slices=5))


# -- contraction and non-vanishing ------------------------------------------------

def test_contraction_constant_scaling():
    constants = kernel_constants(3, 0.5)
    base = contraction_constant(1.0, 2, constants)
    assert base == pytest.approx(16.0 * constants.C_G * (1.0 + constants.C_Kn))
    assert contraction_constant(2.0, 2, constants) == pytest.approx(4.0 * base)
    assert contraction_constant(1.0, 3, constants) == pytest.approx(2.0 * base)
    with pytest.raises(DomainError):
        contraction_constant(0.0, 2, constants)


def test_whole_interval_ratios_stay_below_the_predicted_contraction():
    constants = kernel_constants(3, 0.5)
    for rho in (0.05, 0.02):
        config = _config(rho=rho, slices=5, s_max=0.25, k_max=10)
        data = scheme_data(config)
        state = run_whole_interval(config, data, progress=False)
        data_norm = sobolev_cm_norm(data, config.m, warn=False).combined
        assert state.ratios
        assert max(state.ratios) <= rho * contraction_constant(data_norm, config.m, constants)


def test_nonvanish_threshold_for_mu_one_half():
    report = nonvanish_criterion(0.01, 0.5)
    assert report.passed
    assert report.max_rho == pytest.approx(1.0 / 9.0, abs=1e-10)
    assert nonvanish_criterion(report.max_rho * (1 - 1e-9), 0.5).passed
    assert not nonvanish_criterion(0.2, 0.5).passed
    with pytest.raises(DomainError):
        nonvanish_criterion(0.01, 1.0)


def test_geometric_partial_sums_converge():
    sums = geometric_partial_sums(0.25, 60)
    assert sums[0] == pytest.approx(0.25)
    assert sums[-1] == pytest.approx(0.25 / 0.75)


# -- audit --------------------------------------------------------------------------

def test_transform_audit_selects_the_chain_rule():
    ledger = transform_audit(sample_count=200, seed=0)
    assert ledger.selected_variant == "chain_rule"
    assert ledger.all_implemented_match
    assert ledger.entries["printed_A_vs_printed_B"].matches
    assert not ledger.entries["convection_printed_A"].matches
    assert ledger.entries["convection_printed_A_factor_is_gap"].matches
    assert ledger.entries["damping_printed"].matches


def test_transform_audit_is_deterministic():
    assert transform_audit(50, seed=3).to_dict() == transform_audit(50, seed=3).to_dict()
    with pytest.raises(ValueError):
        transform_audit(0)


# -- original coordinates --------------------------------------------------------------

def _original_data(amplitude: float) -> VectorField:
    spec = GridSpec(3, 64, 8.0)
    bump = amplitude * np.exp(-spec.radius() ** 2 / 2.0)
    return VectorField(spec, np.stack([bump] * 3), Frame.ORIGINAL_X)


def test_original_picard_with_zero_data():
    result = original_nse_picard(_original_data(0.0), 0.1, 0.1, k_max=2, steps=2)
    assert np.all(result.trajectory.samples == 0.0)
    assert all(report.combined == 0.0 for report in result.increments)


def test_original_picard_without_nonlinear_terms_is_heat_flow():
    h = _original_data(0.1)
    result = original_nse_picard(h, 0.1, 0.2, k_max=1, steps=4, burgers=False, leray=False)
    final = result.trajectory.slice(len(result.trajectory) - 1)
    expected = spectral.apply_multiplier(h.samples, h.spec,
                                         np.exp(-0.1 * 0.2 * spectral.wavenumber_sq(h.spec)))
    assert np.abs(final.samples - expected).max() < 1e-12


def test_original_picard_burgers_increments_keep_their_decay_class():
    result = original_nse_picard(_original_data(0.1), 0.1, 0.1, k_max=2, steps=4, leray=False)
    assert result.increments_decay_passed
    assert len(result.increment_decay) == 2
    assert result.increment_decay[0][0].l == 8


def test_original_picard_rejects_cone_frames():
    h = _original_data(0.1)
    with pytest.raises(DomainError):
        original_nse_picard(VectorField(h.spec, h.samples, Frame.CONE_Y), 0.1, 0.1, k_max=1)
