import math

import numpy as np
import pytest
from scipy import integrate

from wignerflow.flow import (
    Classification,
    current,
    current_k,
    current_k_classical,
    current_x,
    delta_current_k,
    divergence_residual,
    find_stagnation_points,
    loop_winding,
)
from wignerflow.quantum import PhaseGrid, SystemConfig, eigenstate, evaluate_field, wigner_closed


def _moment(cfg, x, k, nu):
    f = lambda y: y ** (2 * nu) * math.cos(2 * k * y) * eigenstate(cfg, x - y) * eigenstate(cfg, x + y)
    return 2 * integrate.quad(f, 0, x, epsabs=1e-14, epsrel=1e-13, limit=400)[0] / math.pi


def moyal_partial_sum(cfg, x, k, nu_max):
    """Truncated Moyal series for J_k with exact k-derivatives.

    d^(2nu)/dk^(2nu) W is (-4)^nu times the y^(2nu) moment of the overlap
    integrand, and the odd derivatives of x^2/2 + (4a^2-1)/(8x^2) are closed
    form, so each term is exact and only truncation remains.
    """
    a = cfg.alpha
    s = -x * _moment(cfg, x, k, 0)
    for nu in range(nu_max + 1):
        s += (4 * a * a - 1) / 8 * (2 * nu + 2) * x ** (-2 * nu - 3) * _moment(cfg, x, k, nu)
    return s


def _rect(x0, x1, k0, k1):
    return np.array([[x0, k0], [x1, k0], [x1, k1], [x0, k1]])


@pytest.fixture(scope="module")
def inventory_n1():
    cfg = SystemConfig(1, 1.5)
    return cfg, find_stagnation_points(cfg, PhaseGrid(0, 5, -4, 4, 101, 101))


def test_current_components(cfg):
    x = np.array([0.4, 1.1, 2.7])
    k = np.array([-1.0, 0.3, 2.2])
    w = wigner_closed(cfg, x, k)
    assert np.array_equal(current_x(cfg, x, k), k * w)
    jx, jk = current(cfg, x, k)
    assert np.array_equal(jx, current_x(cfg, x, k))
    assert np.allclose(jk, current_k(cfg, x, k), rtol=0, atol=1e-15)
    assert np.allclose(current_k(cfg, x, k), current_k_classical(cfg, x, k) + delta_current_k(cfg, x, k),
                       rtol=1e-12, atol=1e-15)


def test_current_parity_in_k(cfg):
    x, k = 1.3, 0.9
    assert current_x(cfg, x, -k) == -current_x(cfg, x, k)
    assert current_k(cfg, x, -k) == current_k(cfg, x, k)


def test_harmonic_limit_has_no_excess_current():
    cfg = SystemConfig(2, 0.5)
    field = evaluate_field(cfg, PhaseGrid.default(), "DeltaJk")
    assert np.all(field.values == 0.0)
    X, K = PhaseGrid.default().mesh()
    assert np.array_equal(current_k(cfg, X, K), -X * wigner_closed(cfg, X, K))


def test_classical_current_far_from_wall():
    cfg = SystemConfig(0, 1.5)
    x, k = 5.0, np.linspace(-1, 1, 5)
    assert np.allclose(current_k_classical(cfg, x, k), -x * wigner_closed(cfg, x, k), rtol=1e-2)


def test_divergence_residual_second_order():
    cfg = SystemConfig(0, 1.5)
    coarse = np.max(np.abs(divergence_residual(cfg, PhaseGrid(0, 6, -6, 6, 101, 101)).values))
    fine = np.max(np.abs(divergence_residual(cfg, PhaseGrid(0, 6, -6, 6, 201, 201)).values))
    assert 3.2 <= coarse / fine <= 4.8


@pytest.mark.parametrize("x, k", [(0.5, 0.0), (1.0, 0.8), (2.0, 0.0), (3.0, 0.8)])
def test_moyal_partial_sums_converge_to_resummed_current(x, k):
    cfg = SystemConfig(1, 1.5)
    ref = current_k(cfg, x, k)
    errs = [abs(moyal_partial_sum(cfg, x, k, m) - ref) for m in (0, 6, 12, 24)]
    assert errs[0] > errs[1] > errs[2] > errs[3]


def test_moyal_series_far_from_wall():
    cfg = SystemConfig(1, 1.5)
    for k in (0.0, 0.8):
        assert abs(moyal_partial_sum(cfg, 3.0, k, 24) - current_k(cfg, 3.0, k)) <= 1e-6


def test_moyal_six_terms_within_1e4():
    # Six-term truncation against the resummed current on x in [0.5, 3].
    # The series converges slowly near the wall, so this is expected to fail.
    cfg = SystemConfig(1, 1.5)
    worst = 0.0
    for x in np.linspace(0.5, 3.0, 6):
        for k in (0.0, 0.8):
            worst = max(worst, abs(moyal_partial_sum(cfg, x, k, 6) - current_k(cfg, x, k)))
    assert worst <= 1e-4, f"six-term truncation error {worst:.2e}"


def test_inventory_kinds_and_windings(inventory_n1):
    cfg, pts = inventory_n1
    assert {p.winding for p in pts} <= {-1, 0, 1}
    kinds = {p.classification for p in pts}
    assert Classification.SADDLE in kinds
    assert kinds & {Classification.VORTEX_CW, Classification.VORTEX_CCW}
    for p in pts:
        if p.classification in (Classification.VORTEX_CW, Classification.VORTEX_CCW):
            assert p.index == 1 and p.jacobian_det > 0
            assert p.winding == (1 if p.curl > 0 else -1)
        else:
            assert p.winding == 0
    for p in pts:
        scale = np.max(np.abs(np.stack(current(cfg, *PhaseGrid(0, 5, -4, 4, 101, 101).mesh()))))
        assert p.residual <= 1e-9 * scale


def test_inventory_mirror_symmetric(inventory_n1):
    _, pts = inventory_n1
    off = [p for p in pts if abs(p.k) > 1e-6]
    for p in off:
        twin = min(off, key=lambda q: abs(q.x - p.x) + abs(q.k + p.k))
        assert abs(twin.x - p.x) < 1e-8 and abs(twin.k + p.k) < 1e-8
        assert twin.classification == p.classification


def _enclosed_index(pts, x0, x1, k0, k1):
    return sum(p.index for p in pts if x0 < p.x < x1 and k0 < p.k < k1)


@pytest.mark.parametrize("rect, count", [
    ((3.5, 4.0, 0.2, 0.4), 0),
    ((0.9, 1.13, -0.3, 0.3), 1),
    ((1.1, 1.4, 0.5, 1.1), 1),
    ((0.9, 1.6, -0.3, 0.3), 2),
    ((0.9, 1.6, -1.1, 1.1), 4),
])
def test_loop_winding_counts_enclosed_points(inventory_n1, rect, count):
    cfg, pts = inventory_n1
    x0, x1, k0, k1 = rect
    assert sum(x0 < p.x < x1 and k0 < p.k < k1 for p in pts) == count
    assert loop_winding(cfg, _rect(*rect)) == _enclosed_index(pts, *rect)


def test_inventory_independent_of_threads():
    cfg = SystemConfig(0, 2.5)
    grid = PhaseGrid(0, 5, -4, 4, 81, 81)
    a = find_stagnation_points(cfg, grid, threads=1)
    b = find_stagnation_points(cfg, grid, threads=3)
    assert [p.to_dict() for p in a] == [p.to_dict() for p in b]


def test_stagnation_serializable(inventory_n1):
    _, pts = inventory_n1
    d = pts[0].to_dict()
    assert {"x", "k", "classification", "winding", "residual"} <= set(d)


def test_reference_point_compositions():
    # (1 - 4 alpha^2)/4 = -2 at alpha = 3/2, and x = 1 removes the powers of x
    from wignerflow.quantum import y_kernel_closed

    cfg = SystemConfig(0, 1.5)
    w, y = wigner_closed(cfg, 1.0, 0.0), y_kernel_closed(cfg, 1.0, 0.0)
    assert current_k(cfg, 1.0, 0.0) == pytest.approx(-(w - 2 * y), rel=1e-14)
    assert current_k_classical(cfg, 1.0, 0.0) == pytest.approx(w, rel=1e-14)
    assert delta_current_k(cfg, 1.0, 0.0) == pytest.approx(2 * (y - w), rel=1e-14)
    assert current_x(cfg, 1.0, 0.0) == 0.0
    assert current_x(cfg, 1.0, 0.5) == 0.5 * wigner_closed(cfg, 1.0, 0.5)
