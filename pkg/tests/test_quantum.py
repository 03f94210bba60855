import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wignerflow.errors import UnsupportedParameterError
from wignerflow.quantum import (
    FieldLabel,
    PhaseGrid,
    SystemConfig,
    eigenenergy,
    eigenstate,
    energy_residual,
    evaluate_field,
    wigner_closed,
    wigner_marginal,
    wigner_quadrature,
    y_kernel_closed,
    y_kernel_quadrature,
)


def _wigner_direct(cfg, x, k):
    # oracle: (1/pi) * integral over y of cos(2ky) phi(x-y) phi(x+y), plain scipy quad
    f = lambda y: math.cos(2 * k * y) * eigenstate(cfg, x - y) * eigenstate(cfg, x + y)
    val, _ = integrate.quad(f, 0.0, x, epsabs=1e-13, epsrel=1e-13, limit=400)
    return 2.0 * val / math.pi


def test_eigenstate_ground_value():
    cfg = SystemConfig(0, 1.5)
    expected = math.sqrt(2) / math.sqrt(0.75 * math.sqrt(math.pi)) * math.exp(-0.5)
    assert expected == pytest.approx(0.7439, abs=1e-4)
    assert eigenstate(cfg, 1.0) == pytest.approx(expected, rel=1e-14)


def test_eigenstate_vanishes_off_half_line():
    cfg = SystemConfig(1, 2.5)
    assert np.all(eigenstate(cfg, np.linspace(-3, 0, 7)) == 0.0)


def test_eigenstate_normalized(cfg):
    val, _ = integrate.quad(lambda x: eigenstate(cfg, x) ** 2, 0, 20, epsabs=1e-13, limit=200)
    assert val == pytest.approx(1.0, abs=1e-12)


def test_eigenenergy_and_residual(cfg):
    assert eigenenergy(cfg) == 2 * cfg.n + 1
    assert energy_residual(cfg, h=1e-3) <= 1e-5


def test_config_validation():
    with pytest.raises(ValueError):
        SystemConfig(0, 0.25)
    with pytest.raises(ValueError):
        SystemConfig(-1, 1.5)
    with pytest.raises(UnsupportedParameterError):
        wigner_closed(SystemConfig(0, 1.7), 1.0, 0.0)
    assert SystemConfig.semi_integer(1, 2) == SystemConfig(1, 2.5)


@pytest.mark.parametrize("x, k", [(0.4, 0.0), (1.3, 0.7), (2.2, -1.9), (3.5, 3.1)])
def test_quadrature_matches_direct_integral(cfg, x, k):
    assert wigner_quadrature(cfg, x, k) == pytest.approx(_wigner_direct(cfg, x, k), abs=1e-11)


def test_closed_form_matches_quadrature(cfg):
    rng = np.random.default_rng(11)
    x = rng.uniform(0.1, 5.0, 24)
    k = rng.uniform(-5.0, 5.0, 24)
    assert np.max(np.abs(wigner_closed(cfg, x, k) - wigner_quadrature(cfg, x, k))) <= 1e-8
    assert np.max(np.abs(y_kernel_closed(cfg, x, k) - y_kernel_quadrature(cfg, x, k))) <= 1e-8


def test_general_alpha_quadrature_only():
    cfg = SystemConfig(1, 1.8)
    w = wigner_quadrature(cfg, 1.2, 0.4)
    assert w == pytest.approx(_wigner_direct(cfg, 1.2, 0.4), abs=1e-11)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(0, 1.5), (1, 2.5), (2, 1.5)]), st.floats(0.05, 6.0), st.floats(0.0, 6.0))
def test_w_even_in_k(params, x, k):
    cfg = SystemConfig(*params)
    assert wigner_closed(cfg, x, k) == wigner_closed(cfg, x, -k)
    assert y_kernel_closed(cfg, x, k) == y_kernel_closed(cfg, x, -k)


def test_w_origin_bounded_by_pure_state_limit(cfg):
    # |W| <= 1/pi for any pure state
    w = wigner_closed(cfg, *np.meshgrid(np.linspace(0.05, 5, 40), np.linspace(-5, 5, 41)))
    assert np.max(np.abs(w)) <= 1 / math.pi + 1e-12


def test_marginal_reproduces_density():
    cfg = SystemConfig(1, 1.5)
    x = np.array([0.5, 1.2, 2.0, 3.1])
    assert np.max(np.abs(wigner_marginal(cfg, x) - eigenstate(cfg, x) ** 2)) <= 1e-6


def test_field_grid_riemann_sum():
    cfg = SystemConfig(1, 2.5)
    field = evaluate_field(cfg, PhaseGrid.default(), "W")
    assert field.values.shape == (201, 201)
    assert field.riemann_sum() == pytest.approx(1.0, abs=1e-4)
    X, K = field.grid.mesh()
    assert np.array_equal(field.values[1:], wigner_closed(cfg, X[1:], -K[1:]))


def test_field_labels_parse():
    assert FieldLabel.parse("JkCl") is FieldLabel.JK_CLASSICAL
    assert FieldLabel.parse("Div") is FieldLabel.DIVERGENCE_RESIDUAL
    with pytest.raises(ValueError):
        FieldLabel.parse("nope")


def test_bounce_even_and_matches_half_line_far_from_wall():
    for n, a in [(0, 1.5), (1, 2.5)]:
        half = SystemConfig(n, a)
        bounce = SystemConfig(n, a, "bounce")
        X, K = np.meshgrid(np.linspace(3, 6, 13), np.linspace(-5, 5, 11), indexing="ij")
        assert np.max(np.abs(wigner_closed(bounce, X, K) - wigner_closed(half, X, K))) <= 1e-6
        assert np.array_equal(wigner_closed(bounce, X, K), wigner_closed(bounce, -X, K))


def test_bounce_closed_matches_quadrature():
    cfg = SystemConfig(1, 1.5, "bounce")
    x = np.array([-2.0, -0.5, 0.3, 1.7])
    k = np.array([0.2, -1.4, 2.5, 0.0])
    assert np.max(np.abs(wigner_closed(cfg, x, k) - wigner_quadrature(cfg, x, k))) <= 1e-8


def test_y_kernel_rejects_harmonic_limit():
    cfg = SystemConfig(0, 0.5)
    with pytest.raises(ValueError):
        y_kernel_closed(cfg, 1.0, 0.0)
    with pytest.raises(ValueError):
        y_kernel_quadrature(cfg, 1.0, 0.0)
