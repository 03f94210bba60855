import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wignerflow.classical import force, hamiltonian, orbit_coefficients, orbit_point, trajectory
from wignerflow.errors import SingularityError


def _area_by_quadrature(alpha, eps):
    # oracle: 2 * integral of sqrt(2(eps - V)) between turning points
    a, b = orbit_coefficients(alpha, eps)
    lo, hi = math.sqrt(a - b), math.sqrt(a + b)
    f = lambda x: math.sqrt(max(2 * eps + 2 * alpha - x * x - (4 * alpha**2 - 1) / (4 * x * x), 0.0))
    return 2 * integrate.quad(f, lo, hi, epsabs=1e-12, limit=200)[0]


def _d4(v, h):
    # fourth-order periodic central difference (last node duplicates the first)
    p = v[:-1]
    return (-np.roll(p, -2) + 8 * np.roll(p, -1) - 8 * np.roll(p, 1) + np.roll(p, 2)) / (12 * h)


def test_turning_points_example():
    traj = trajectory(1.5, 1.0)
    x2 = traj.x**2
    assert x2.min() == pytest.approx(2.5 - math.sqrt(4.25), abs=1e-6)
    assert x2.max() == pytest.approx(2.5 + math.sqrt(4.25), abs=1e-12)
    assert (2.5 - math.sqrt(4.25), 2.5 + math.sqrt(4.25)) == pytest.approx((0.4384, 4.5616), abs=1e-4)


@pytest.mark.parametrize("alpha, eps", [(0.5, 1.0), (1.5, 1.0), (2.5, 3.0), (1.5, 5.5)])
def test_energy_conserved(alpha, eps):
    traj = trajectory(alpha, eps, 0.3, 4096)
    assert np.max(np.abs(traj.energy() - eps)) <= 1e-12


def _hamilton_defects(alpha, eps, n):
    traj = trajectory(alpha, eps, 0.7, n)
    h = traj.step
    return (np.max(np.abs(_d4(traj.x, h) - traj.k[:-1])),
            np.max(np.abs(_d4(traj.k, h) - force(alpha, traj.x[:-1]))))


def test_hamilton_equations():
    dx, dk = _hamilton_defects(1.5, 1.0, 4096)
    assert dx <= 1e-9 and dk <= 1e-8


@pytest.mark.parametrize("alpha, eps", [(1.5, 1.0), (2.5, 3.0), (1.5, 5.0)])
def test_hamilton_defects_are_stencil_error(alpha, eps):
    # a fourth-order stencil on an exact orbit shrinks 16x per halving
    coarse = _hamilton_defects(alpha, eps, 2048)
    fine = _hamilton_defects(alpha, eps, 4096)
    for c, f in zip(coarse, fine):
        assert 14.4 <= c / f <= 17.6


def test_closed_orbit():
    traj = trajectory(2.5, 3.0, 1.1)
    assert abs(traj.x[0] - traj.x[-1]) <= 1e-14 and abs(traj.k[0] - traj.k[-1]) <= 1e-13


def test_normal_orthogonal_to_velocity():
    traj = trajectory(1.5, 2.0)
    vx, vk = traj.dxdtau, traj.dkdtau
    nx, nk = -vk, vx
    assert np.all(nx * vx + nk * vk == 0.0)


@pytest.mark.parametrize("alpha, eps", [(1.5, 1.0), (2.5, 2.0), (0.5, 1.5)])
def test_area_matches_action(alpha, eps):
    area = math.pi * (eps + alpha - math.sqrt(alpha**2 - 0.25))
    assert _area_by_quadrature(alpha, eps) == pytest.approx(area, rel=1e-9)
    traj = trajectory(alpha, eps, 0.0, 4096)
    # our tau range covers the orbit twice
    assert traj.period_integral(traj.k * traj.dxdtau) == pytest.approx(2 * area, rel=1e-10)


def test_single_traversal_form_covers_the_orbit_once():
    alpha, eps = 1.5, 2.0
    a, b = orbit_coefficients(alpha, eps)
    tau = np.linspace(0, 2 * math.pi, 4097)
    x = np.sqrt(a + b * np.cos(tau))
    k = -b * np.sin(tau) / x
    # here dx/dtau = k/2, so the enclosed area is the integral of k^2/2
    dxdtau = -b * np.sin(tau) / (2 * x)
    assert np.allclose(dxdtau, k / 2)
    v = k * dxdtau
    area = (tau[1] - tau[0]) * (v[1:-1].sum() + 0.5 * (v[0] + v[-1]))
    assert area == pytest.approx(math.pi * (eps + alpha - math.sqrt(alpha**2 - 0.25)), rel=1e-10)
    np.testing.assert_allclose(hamiltonian(alpha, x, k), eps, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([0.5, 1.5, 2.5, 3.5]), st.floats(0.05, 8.0), st.floats(0, 2 * math.pi),
       st.floats(0, 2 * math.pi))
def test_orbit_points_lie_on_energy_shell(alpha, eps, theta, tau):
    x, k = orbit_point(alpha, eps, theta, tau)
    if x > 0:
        assert hamiltonian(alpha, x, k) == pytest.approx(eps, rel=1e-11, abs=1e-11)


def test_period_is_pi():
    x1, k1 = orbit_point(1.5, 2.0, 0.4, np.linspace(0, 3, 7))
    x2, k2 = orbit_point(1.5, 2.0, 0.4, np.linspace(0, 3, 7) + math.pi)
    assert np.allclose(x1, x2, atol=1e-14) and np.allclose(k1, k2, atol=1e-13)


def test_parameter_errors():
    with pytest.raises(ValueError):
        trajectory(1.5, 0.0)
    with pytest.raises(ValueError):
        trajectory(0.4, 1.0)
    with pytest.raises(ValueError):
        trajectory(1.5, 1.0, n_samples=32)
    with pytest.raises(SingularityError):
        hamiltonian(1.5, 0.0, 1.0)


def test_trajectory_table_layout():
    traj = trajectory(1.5, 1.0, 0.0, 64)
    arr = traj.as_array()
    assert arr.shape == (65, 4)
    assert traj.n_samples == 64
    assert arr[-1, 0] == pytest.approx(2 * math.pi)
