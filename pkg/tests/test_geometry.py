import numpy as np
import pytest

from src.geometry.cone import CoeffKind, ConeChart
from src.utils.errors import DomainError

RHOS = [0.01, 0.02, 0.05, 0.1]


@pytest.mark.parametrize("rho", RHOS)
def test_time_map_round_trip(rho):
    chart = ConeChart(3, rho)
    t = np.linspace(0.0, 0.999 * rho, 101)
    assert np.allclose(chart.t_of_s(chart.s_of_t(t)), t, rtol=0, atol=1e-12 * rho)
    s = np.linspace(0.0, 50.0, 101)
    assert np.allclose(chart.s_of_t(chart.t_of_s(s)), s, rtol=1e-9)


@pytest.mark.parametrize("rho", RHOS)
def test_ds_dt_is_reciprocal_of_dt_ds(rho):
    chart = ConeChart(3, rho)
    t = np.linspace(0.0, 0.99 * rho, 50)
    assert np.allclose(chart.ds_dt(t) * chart.dt_ds(chart.s_of_t(t)), 1.0, rtol=1e-12)


def test_space_maps_are_inverse(chart):
    x = np.linspace(-100.0, 100.0, 401)
    for t in (0.0, 0.01, 0.0199):
        assert np.allclose(chart.x_of_y(t, chart.y_of_x(t, x)), x, rtol=1e-9)
        assert np.all(np.abs(chart.y_of_x(t, x)) < chart.section_half_width(t))


def test_x_of_y_rejects_points_outside_the_section(chart):
    with pytest.raises(DomainError):
        chart.x_of_y(0.01, chart.section_half_width(0.01))


def test_time_domain_errors(chart):
    with pytest.raises(DomainError):
        chart.s_of_t(chart.rho)
    with pytest.raises(DomainError):
        chart.t_of_s(-1.0)
    with pytest.raises(DomainError):
        ConeChart(2, 0.1)
    with pytest.raises(DomainError):
        ConeChart(3, 0.0)


@pytest.mark.parametrize("rho,eps", [(0.1, 1e-3), (0.05, 1e-4)])
def test_damping_integral_diverges_logarithmically(rho, eps):
    value = ConeChart(3, rho).damping_time_integral(eps)
    assert value == pytest.approx(np.log(rho / eps), rel=1e-6)


def test_damping_integral_domain(chart):
    with pytest.raises(DomainError):
        chart.damping_time_integral(chart.rho)


@pytest.mark.parametrize("rho", RHOS)
def test_burgers_sup_equals_rho(rho):
    chart = ConeChart(3, rho)
    assert chart.coeff_sup(CoeffKind.BURGERS) == pytest.approx(rho, rel=1e-6)
    assert chart.coeff_argsup(CoeffKind.BURGERS) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("rho", RHOS)
def test_damping_sup_is_independent_of_rho(rho):
    chart = ConeChart(3, rho)
    assert chart.coeff_sup(CoeffKind.DAMPING) == pytest.approx(3 * np.sqrt(3) / 4, abs=1e-6)
    assert chart.coeff_argsup(CoeffKind.DAMPING) == pytest.approx(rho / 2, rel=1e-4)


def test_coefficients_at_the_endpoints(chart):
    rho = chart.rho
    assert chart.coeff(CoeffKind.BURGERS, 0.0) == pytest.approx(rho)
    assert chart.coeff(CoeffKind.DAMPING, 0.0) == pytest.approx(1.0)
    assert chart.coeff(CoeffKind.LERAY, 0.0) == pytest.approx(rho ** 2)
    near = rho * (1.0 - 1e-9)
    for kind in CoeffKind:
        assert chart.coeff(kind, near) < 1e-4
        with pytest.raises(DomainError):
            chart.coeff(kind, rho)
        with pytest.raises(DomainError):
            chart.coeff(kind, -1e-9)


def test_damping_printed_form_agrees_below_rho(chart):
    t = np.linspace(0.0, 0.999 * chart.rho, 200)
    assert np.allclose(chart.damping_printed(t), chart.coeff(CoeffKind.DAMPING, t), rtol=1e-12)


def test_measure_factors_are_reciprocal(chart):
    x = np.array([[0.0, 1.0, -2.0], [5.0, 5.0, 5.0]])
    product = chart.measure_factor(0.005, x) * chart.inverse_measure_factor(0.005, x)
    assert np.allclose(product, 1.0)


@pytest.mark.parametrize("t_fraction", [0.0, 0.5, 0.9])
def test_measure_factor_matches_the_numerical_jacobian(chart, t_fraction):
    t = t_fraction * chart.rho
    rng = np.random.default_rng(5)
    x = rng.uniform(-4.0, 4.0, (6, chart.n))
    h = 1e-5
    jacobian = np.zeros((x.shape[0], chart.n, chart.n))
    for j in range(chart.n):
        step = np.zeros(chart.n)
        step[j] = h
        jacobian[:, :, j] = (chart.y_of_x(t, x + step) - chart.y_of_x(t, x - step)) / (2 * h)
    numerical = np.linalg.det(jacobian)
    assert np.allclose(chart.measure_factor(t, x), numerical, rtol=1e-6, atol=0.0)


def test_cylinder_damping_mass_closed_form(chart):
    n, rho = chart.n, chart.rho
    expected = 2.0 * np.pi ** n * rho ** n / n
    assert chart.cylinder_damping_mass(2.0) == pytest.approx(expected, rel=1e-10)


def test_s_max_default_reaches_close_to_the_horizon(chart):
    t_end = chart.t_of_s(chart.s_max_default())
    assert t_end == pytest.approx(0.999 * chart.rho, rel=1e-12)
