import numpy as np
import pytest

from src.fields.grid import Frame, GridSpec, ScalarField, VectorField
from src.fields.norms import divergence
from src.kernels import constants as kc
from src.kernels import spectral
from src.kernels.heat import gaussian, heat_convolve, heat_convolve_grad, leray_project
from src.kernels.riesz import (RieszKernel, riesz_convolve, riesz_convolve_direct,
                               riesz_direct_quadrature, unit_ball_volume)
from src.utils.errors import DomainError

@pytest.fixture
def spec():
    return GridSpec(3, 32, 8.0)


def _bump(spec, width=1.0):
    return np.exp(-spec.radius() ** 2 / (2.0 * width ** 2))


def test_heat_flow_of_a_gaussian_matches_closed_form(spec):
    nu, tau = 0.25, 1.0
    field = ScalarField(spec, _bump(spec), Frame.ORIGINAL_X)
    out = heat_convolve(field, nu, tau)
    spread = 1.0 + 2.0 * nu * tau
    expected = spread ** -1.5 * np.exp(-spec.radius() ** 2 / (2.0 * spread))
    assert np.abs(out.samples - expected).max() < 1e-8


def test_heat_flow_keeps_constants(spec):
    field = ScalarField(spec, np.full(spec.shape, 3.0), Frame.ORIGINAL_X)
    assert np.allclose(heat_convolve(field, 0.1, 2.0).samples, 3.0)


def test_heat_flow_is_a_semigroup(spec):
    field = ScalarField(spec, _bump(spec), Frame.ORIGINAL_X)
    stepped = heat_convolve(heat_convolve(field, 0.2, 0.5), 0.2, 1.5)
    direct = heat_convolve(field, 0.2, 2.0)
    assert np.abs(stepped.samples - direct.samples).max() < 1e-12


def test_heat_gradient_is_the_derivative_of_heat_flow(spec):
    field = ScalarField(spec, _bump(spec), Frame.ORIGINAL_X)
    smoothed = heat_convolve(field, 0.1, 0.5).samples
    for axis in range(3):
        grad = heat_convolve_grad(field, 0.1, 0.5, axis).samples
        assert np.allclose(grad, spectral.derivative(smoothed, spec, axis), atol=1e-12)


def test_heat_rejects_bad_arguments(spec):
    field = ScalarField(spec, _bump(spec), Frame.ORIGINAL_X)
    with pytest.raises(DomainError):
        heat_convolve(field, 0.1, 0.0)
    with pytest.raises(DomainError):
        heat_convolve_grad(field, 0.1, 1.0, 3)


def test_leray_projection_is_idempotent_and_divergence_free(spec):
    mesh = spec.mesh()
    bump = _bump(spec)
    v = VectorField(spec, np.stack([mesh[1] * bump, -mesh[0] * bump + bump, mesh[2] * bump]),
                    Frame.ORIGINAL_X)
    p = leray_project(v)
    assert np.abs(leray_project(p).samples - p.samples).max() < 1e-10
    assert np.abs(divergence(p).samples).max() < 1e-10


def test_leray_projection_annihilates_gradients(spec):
    grad = VectorField(spec, spectral.gradient(_bump(spec), spec), Frame.ORIGINAL_X)
    assert np.abs(leray_project(grad).samples).max() < 1e-10


def test_riesz_kernel_constant():
    assert unit_ball_volume(3) == pytest.approx(4.0 * np.pi / 3.0)
    assert RieszKernel(3).c == pytest.approx(1.0 / (4.0 * np.pi))
    with pytest.raises(DomainError):
        RieszKernel(2)


def test_riesz_transforms_of_partial_derivatives_sum_to_the_field(spec):
    f = _bump(spec)
    f = f - f.mean()
    total = np.zeros(spec.shape)
    for axis in range(3):
        source = ScalarField(spec, spectral.derivative(f, spec, axis), Frame.ORIGINAL_X)
        total += riesz_convolve(source, axis, taper=False).samples
    assert np.abs(total - f).max() < 1e-7


def _dipole_free_source(points):
    """d_0 Laplace exp(-r^2/2); its Riesz transform along axis 0 is (x_0^2 - 1) exp(-r^2/2)."""
    r2 = np.sum(points * points, axis=-1)
    return points[..., 0] * (5.0 - r2) * np.exp(-r2 / 2.0)


def test_riesz_fast_path_matches_closed_form(spec):
    points = np.stack(spec.mesh(), axis=-1)
    fast = riesz_convolve(ScalarField(spec, _dipole_free_source(points), Frame.ORIGINAL_X), 0)
    x0 = points[..., 0]
    expected = (x0 * x0 - 1.0) * np.exp(-np.sum(points * points, axis=-1) / 2.0)
    assert np.abs(fast.samples - expected).max() < 1e-5


def test_riesz_fast_path_matches_direct_quadrature():
    spec = GridSpec(3, 64, 12.0)
    samples = _dipole_free_source(np.stack(spec.mesh(), axis=-1))
    fast = riesz_convolve(ScalarField(spec, samples, Frame.ORIGINAL_X), 0)
    middle = spec.points_per_axis // 2
    indices = [(middle + 2, middle, middle), (middle + 3, middle + 1, middle - 1)]
    targets = np.array([[spec.axis()[i] for i in idx] for idx in indices])
    direct = riesz_direct_quadrature(_dipole_free_source, targets, 0, 3, 12.0)
    fast_values = np.array([fast.samples[idx] for idx in indices])
    assert np.abs(fast_values - direct).max() <= 1e-3 * np.abs(direct).max()


def test_riesz_direct_path_on_sampled_source(spec):
    field = ScalarField(spec, _dipole_free_source(np.stack(spec.mesh(), axis=-1)), Frame.ORIGINAL_X)
    fast = riesz_convolve(field, 0)
    middle = spec.points_per_axis // 2
    # x_0 = 1.5, away from the zero of (x_0^2 - 1) at x_0 = 1
    target = np.array([[spec.axis()[middle + 3], 0.0, 0.0]])
    expected = fast.samples[middle + 3, middle, middle]
    assert abs(expected) > 0.1
    direct = riesz_convolve_direct(field, 0, target, radius=7.0, radial_nodes=48, polar_nodes=12)
    assert direct[0] == pytest.approx(expected, rel=2e-2)


def test_riesz_flags_sources_that_do_not_decay(spec):
    field = ScalarField(spec, np.ones(spec.shape), Frame.ORIGINAL_X)
    assert riesz_convolve(field, 0).meta["aliasing"] is True


@pytest.mark.parametrize("mu", [0.25, 0.5, 0.75])
def test_gaussian_envelopes_hold_pointwise(mu, spec):
    constants = kc.kernel_constants(3, mu)
    r = spec.radius()
    nonzero = r > 0
    for nu, tau in [(0.01, 1.0), (1.0, 0.5)]:
        g = gaussian(r[nonzero], nu, tau, 3)
        assert np.all(g <= kc.gaussian_envelope(r[nonzero], nu, tau, constants) * (1 + 1e-12))
        grad = np.abs(spec.mesh()[0][nonzero]) / (2 * nu * tau) * g
        assert np.all(grad <= kc.gradient_envelope(r[nonzero], nu, tau, constants) * (1 + 1e-12))


def test_kernel_constants_closed_forms():
    mu = 0.5
    constants = kc.kernel_constants(3, mu)
    z2 = (3 - 2 * mu) / 2
    assert constants.C == pytest.approx(np.pi ** -1.5 * z2 ** (z2) * np.exp(-z2), rel=1e-8)
    assert constants.z_star == pytest.approx(np.sqrt(z2), rel=1e-6)
    assert constants.M2 == pytest.approx(1.0, abs=1e-10)
    assert constants.C_G == max(constants.C, constants.Cprime)
    assert constants.C_Kn_refinement_gap < 1e-12
    c = RieszKernel(3).c
    expected = c * 2.0 * np.pi + c * np.sqrt(4.0 * np.pi / 3.0)
    assert constants.C_Kn == pytest.approx(expected, rel=1e-12)
    with pytest.raises(DomainError):
        kc.kernel_constants(3, 1.0)
    with pytest.raises(DomainError):
        kc.kernel_constants(3, 0.5, radial_nodes=0)


def test_kernel_constants_use_a_small_radial_rule():
    assert kc.RADIAL_NODES <= 128
    coarse = kc.kernel_constants(4, 0.5, radial_nodes=8)
    fine = kc.kernel_constants(4, 0.5)
    assert coarse.C_Kn == pytest.approx(fine.C_Kn, rel=1e-12)


def test_printed_envelope_gap_crosses_one_at_one_sixteenth():
    constants = kc.kernel_constants(3, 0.5)
    assert kc.printed_envelope_gap(1.0 / 16.0, 1.0, constants) == pytest.approx(1.0)
    assert kc.printed_envelope_gap(0.01, 1.0, constants) > 1.0
    assert kc.printed_envelope_gap(1.0, 1.0, constants) < 1.0


def test_large_time_envelope_integral():
    nu = 0.1
    closed = (4 * np.pi * nu) ** -1.5 / 0.5
    assert kc.large_time_envelope_integral(nu, 3) == pytest.approx(closed, rel=1e-8)


def test_small_step_lipschitz_bound_is_increasing_and_vanishes():
    values = [kc.small_step_lipschitz_bound(1.0, d, 3) for d in (1e-3, 1e-2, 1e-1, 1.0)]
    assert np.all(np.diff(values) > 0)
    assert kc.small_step_lipschitz_bound(1.0, 0.0, 3) == 0.0
    assert kc.small_step_lipschitz_bound(2.0, 0.5, 3) == pytest.approx(
        2.0 * kc.small_step_lipschitz_bound(1.0, 0.5, 3))


def test_lipschitz_moment_bound_holds():
    periodic = GridSpec(3, 32, np.pi)
    field = ScalarField(periodic, np.sin(periodic.mesh()[0]), Frame.ORIGINAL_X)
    check = kc.lipschitz_check(field, 1.0, 0.1, 1.0, kc.kernel_constants(3, 0.5))
    assert check.holds
    assert check.bound == pytest.approx(4.0)
