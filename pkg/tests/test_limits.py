import numpy as np
import pytest

from src.geometry.cone import ConeChart
from src.limits.blowup import blowup_fit, center_series_from_w, reconstruct_center_series
from src.limits.forcing import ForcingReport, synthesize_forcing
from src.limits.sweep import extrapolate, fit_order, richardson, viscosity_sweep
from src.scheme.config import SchemeConfig, Toggles
from src.scheme.picard import march
from src.utils.errors import DomainError

NUS = [1e-2, 5e-3, 2.5e-3]


def _config(rho=0.02, **kw) -> SchemeConfig:
    values = dict(nu=1e-2, points_per_axis=16, slices=5, s_max=0.25, k_max=20)
    values.update(kw)
    return SchemeConfig(chart=ConeChart(3, rho), **values)


# -- extrapolation ------------------------------------------------------------

@pytest.mark.parametrize("order", [0.5, 1.0, 2.0])
def test_fit_order_recovers_a_power_law(order):
    a, b, c = NUS
    d_coarse = a ** order - b ** order
    d_fine = b ** order - c ** order
    assert fit_order(NUS, d_coarse, d_fine) == pytest.approx(order, rel=1e-8)


def test_fit_order_rejects_ratios_outside_the_bracket():
    with pytest.raises(DomainError):
        fit_order(NUS, 1.0, 1.0)


def test_extrapolation_removes_a_single_power():
    limit = np.array([1.0, 0.5, -0.25])
    series = [limit + 3.0 * nu * np.array([1.0, 2.0, 0.5]) for nu in NUS]
    extrapolated, error, order, declined, _ = extrapolate(NUS, series)
    assert not declined
    assert order == pytest.approx(1.0, rel=1e-8)
    assert np.allclose(extrapolated, limit, atol=1e-12)
    assert np.allclose(error, np.abs(limit - series[-1]), atol=1e-12)
    assert np.allclose(richardson(NUS, series, 1.0), limit, atol=1e-12)


def test_extrapolation_declines_non_monotone_differences():
    series = [np.array([1.0]), np.array([1.1]), np.array([1.0])]
    extrapolated, error, order, declined, note = extrapolate(NUS, series)
    assert declined and order is None
    assert extrapolated[0] == 1.0
    assert np.isnan(error).all()
    assert "non-monotone" in note


def test_extrapolation_needs_three_viscosities():
    _, _, _, declined, note = extrapolate(NUS[:2], [np.ones(2), np.ones(2)])
    assert declined
    assert "three" in note


def test_extrapolation_of_a_viscosity_independent_series():
    series = [np.array([0.3, 0.2])] * 3
    extrapolated, error, order, declined, _ = extrapolate(NUS, series)
    assert not declined and order is None
    assert np.all(error == 0.0)


# -- viscosity sweep ------------------------------------------------------------

def test_viscosity_sweep_returns_one_series_per_viscosity():
    result = viscosity_sweep(_config(), NUS, progress=False)
    assert result.nus == NUS
    assert set(result.trajectories) == set(NUS)
    assert all(series.shape == (5,) for series in result.trajectories.values())
    assert result.extrapolated.shape == (5,)
    assert all(np.isfinite(norm) for norm in result.norms.values())
    assert result.rho == pytest.approx(0.02)
    assert result.notes


def test_viscosity_sweep_rejects_unordered_viscosities():
    with pytest.raises(DomainError):
        viscosity_sweep(_config(), [1e-3, 1e-2], progress=False)
    with pytest.raises(DomainError):
        viscosity_sweep(_config(), [], progress=False)


def test_damping_only_sweep_extrapolates_to_the_gap_factor():
    config = _config(toggles=Toggles.only("damping"))
    result = viscosity_sweep(config, [1e-7, 5e-8, 2.5e-8], progress=False)
    rho, t = config.chart.rho, config.t_grid
    deviation = np.abs(result.extrapolated - (rho - t) / rho).max()
    # the Richardson correction bounds the next-order remainder it leaves behind
    assert deviation < 1e-6 + result.error.max()
    assert deviation < 1e-5


def test_reconstructed_center_series_divides_by_the_gap():
    config = _config(toggles=Toggles.only("damping"))
    result = viscosity_sweep(config, [1e-7, 5e-8, 2.5e-8], progress=False)
    series = reconstruct_center_series(result, config.chart)
    assert np.allclose(series.v * config.chart.rho, 1.0, atol=1e-5)


# -- blow-up fit ------------------------------------------------------------------

def _synthetic_series(chart, amplitude=0.7, order=1.0):
    gap = chart.rho * np.geomspace(1.0, 1e-3, 40)
    t = chart.rho - gap
    return t, amplitude / gap ** order


def test_blowup_fit_of_an_order_one_singularity(chart):
    t, v = _synthetic_series(chart)
    report = blowup_fit(t, v, chart)
    assert report.fitted_order == pytest.approx(1.0, abs=1e-3)
    assert report.order_interval[0] <= report.fitted_order <= report.order_interval[1]
    assert report.bounded_product == pytest.approx(0.7)
    assert report.tail_limit_estimate == pytest.approx(0.7, rel=1e-6)
    assert not report.sign_change


def test_blowup_fit_of_a_weaker_singularity(chart):
    t, v = _synthetic_series(chart, order=0.5)
    assert blowup_fit(t, v, chart).fitted_order == pytest.approx(0.5, abs=1e-3)


def test_blowup_fit_needs_two_decades(chart):
    gap = chart.rho * np.geomspace(1.0, 0.5, 10)
    with pytest.raises(DomainError):
        blowup_fit(chart.rho - gap, 1.0 / gap, chart)
    with pytest.raises(DomainError):
        blowup_fit([0.0, 0.01], [1.0, 2.0], chart)


def test_center_series_from_w(chart):
    s = np.array([0.0, 1.0, 5.0])
    series = center_series_from_w(s, [1.0, 1.0, 1.0], chart)
    assert np.allclose(series.v, 1.0 / (chart.rho - chart.t_of_s(s)))
    with pytest.raises(DomainError):
        center_series_from_w([-1.0], [1.0], chart)


# -- forcing ------------------------------------------------------------------------

def test_forcing_is_linear_in_nu():
    config = _config()
    trajectory = march(config, progress=False)
    single = synthesize_forcing(trajectory, 1e-2, config.chart)
    double = synthesize_forcing(trajectory, 2e-2, config.chart)
    assert np.allclose(double.l2_fw, 2.0 * np.asarray(single.l2_fw), rtol=1e-10)
    assert np.allclose(double.l2_fv, 2.0 * np.asarray(single.l2_fv), rtol=1e-10)
    assert np.allclose(double.f_v.samples, 2.0 * single.f_v.samples, rtol=1e-10, atol=0.0)


def test_forcing_vanishes_without_viscosity():
    config = _config()
    report = synthesize_forcing(march(config, progress=False), 0.0, config.chart)
    assert np.all(report.f_w.samples == 0.0)
    assert np.all(report.f_v.samples == 0.0)
    assert report.l2_fv == [0.0] * len(report.eps)


def test_forcing_ladder_flags_uncovered_eps():
    config = _config()
    report = synthesize_forcing(march(config, progress=False), 1e-2, config.chart)
    assert report.eps == pytest.approx([1e-2 * 0.02, 1e-3 * 0.02, 1e-4 * 0.02])
    assert not any(report.eps_covered)
    assert report.notes
    with pytest.raises(DomainError):
        synthesize_forcing(march(config, progress=False), -1.0, config.chart)
    assert not report.cauchy


def _ladder(l2_fv, covered):
    trajectory = march(_config(), progress=False)
    zero = trajectory.with_samples(np.zeros_like(trajectory.samples))
    return ForcingReport(f_w=zero, f_v=zero, eps=[1e-2, 1e-3, 1e-4], l2_fw=[0.0] * 3,
                         l2_fv=l2_fv, eps_covered=covered)


def test_cauchy_needs_every_rung_of_the_ladder():
    assert _ladder([1.0, 1.5, 1.7], [True, True, True]).cauchy
    assert not _ladder([1.0, 1.5, 1.7], [True, True, False]).cauchy
    assert not _ladder([1.0, 1.2, 1.7], [True, True, True]).cauchy
