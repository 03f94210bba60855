"""Acceptance checks; each returns a :class:`CheckResult` with the measured
value next to its tolerance."""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .classical import hamiltonian, trajectory
from .flow import delta_current_k, divergence_residual, find_stagnation_points
from .quantifiers import RATES, find_flux_zero, flux_report, flux_sweep
from .quantum import (
    PhaseGrid,
    SystemConfig,
    eigenstate,
    energy_residual,
    evaluate_field,
    wigner_closed,
    wigner_marginal,
    wigner_normalization,
    wigner_purity,
    wigner_quadrature,
    y_kernel_closed,
    y_kernel_quadrature,
)

__all__ = ["CheckResult", "CONFIGS", "CHECKS", "run_checks", "format_table"]

CONFIGS = [SystemConfig(n, a) for n, a in itertools.product((0, 1, 2), (1.5, 2.5))]
ORACLE_SEED = 20240611


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    measured: str
    tolerance: str
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        s = f"[{status}] {self.number:2d} {self.name}: measured {self.measured}; required {self.tolerance}"
        return s + (f" ({self.detail})" if self.detail else "")


def _label(cfg: SystemConfig) -> str:
    return f"n={cfg.n},alpha={cfg.alpha:g}"


def check_normalization(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    adaptive, grid = {}, {}
    for cfg in CONFIGS:
        adaptive[_label(cfg)] = abs(wigner_normalization(cfg) - 1)
        grid[_label(cfg)] = abs(evaluate_field(cfg, PhaseGrid.default(), "W").riemann_sum() - 1)
    dt = time.perf_counter() - t0
    bad = [k for k in grid if grid[k] > 1e-4] + [k for k in adaptive if adaptive[k] > 1e-6]
    return CheckResult(
        1, "normalization", not bad and dt <= 60,
        f"adaptive {max(adaptive.values()):.1e}, grid {max(grid.values()):.1e}, {dt:.0f}s",
        "adaptive 1e-6, 201x201 grid 1e-4, <= 60 s", dt,
        "grid exceeds at " + ", ".join(f"{k} ({grid[k]:.1e})" for k in grid if grid[k] > 1e-4) if bad else "",
    )


def check_purity(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    dev = {_label(c): abs(wigner_purity(c) - 1) for c in CONFIGS}
    worst = max(dev, key=dev.get)
    return CheckResult(2, "purity", dev[worst] <= 1e-6, f"{dev[worst]:.1e} at {worst}", "1e-6",
                       time.perf_counter() - t0)


MARGINAL_X = np.linspace(0.2, 4.0, 25)


def check_marginal(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    dev = {}
    for cfg in CONFIGS:
        m = wigner_marginal(cfg, MARGINAL_X)
        dev[_label(cfg)] = float(np.max(np.abs(m - eigenstate(cfg, MARGINAL_X) ** 2)))
    worst = max(dev, key=dev.get)
    return CheckResult(3, "marginal", dev[worst] <= 1e-6, f"{dev[worst]:.1e} at {worst}",
                       "1e-6 at 25 x-points", time.perf_counter() - t0)


def oracle_points(count: int = 200, seed: int = ORACLE_SEED):
    """Scrambled Halton points in x in (0.1, 5], k in [-5, 5]."""
    u = qmc.Halton(d=2, scramble=True, seed=seed).random(count)
    return 0.1 + 4.9 * u[:, 0], -5.0 + 10.0 * u[:, 1]


def check_oracle(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    x, k = oracle_points()
    dev = {}
    for cfg in CONFIGS:
        dw = np.max(np.abs(wigner_closed(cfg, x, k) - wigner_quadrature(cfg, x, k)))
        dy = np.max(np.abs(y_kernel_closed(cfg, x, k) - y_kernel_quadrature(cfg, x, k)))
        dev[_label(cfg)] = float(max(dw, dy))
    worst = max(dev, key=dev.get)
    return CheckResult(4, "oracle equivalence", dev[worst] <= 1e-8, f"{dev[worst]:.1e} at {worst}",
                       "1e-8 (W and Y, 200 points)", time.perf_counter() - t0)


def check_energy(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    dev = {_label(c): energy_residual(c, h=1e-3) for c in CONFIGS}
    worst = max(dev, key=dev.get)
    return CheckResult(5, "eigen-energy", dev[worst] <= 1e-5, f"{dev[worst]:.1e} at {worst}",
                       "1e-5 at h = 1e-3", time.perf_counter() - t0)


def check_stationarity(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    ratios = {}
    for cfg in CONFIGS:
        coarse = np.max(np.abs(divergence_residual(cfg, PhaseGrid(0, 6, -6, 6, 201, 201)).values))
        fine = np.max(np.abs(divergence_residual(cfg, PhaseGrid(0, 6, -6, 6, 401, 401)).values))
        ratios[_label(cfg)] = coarse / fine
    worst = max(ratios, key=lambda k: abs(ratios[k] - 4))
    ok = all(3.2 <= r <= 4.8 for r in ratios.values())
    return CheckResult(6, "stationarity", ok,
                       f"ratios {min(ratios.values()):.3f}..{max(ratios.values()):.3f}",
                       "4 +- 20% per halving", time.perf_counter() - t0, f"furthest from 4: {worst}")


CLASSICAL_EPS = (0.5, 1.0, 2.0, 4.0)


def check_classical_limit(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    worst_field, worst_rate = 0.0, 0.0
    for n in (0, 1, 2):
        cfg = SystemConfig(n, 0.5)
        X, K = PhaseGrid.default().mesh()
        worst_field = max(worst_field, float(np.max(np.abs(delta_current_k(cfg, X, K)))))
        for eps in CLASSICAL_EPS:
            r = flux_report(cfg, eps)
            worst_rate = max(worst_rate, abs(r.sigma_rate), abs(r.entropy_rate), abs(r.purity_rate))
    ok = worst_field == 0.0 and worst_rate <= 1e-12
    return CheckResult(7, "classical limit", ok, f"max|DeltaJk| {worst_field:.1e}, max|rate| {worst_rate:.1e}",
                       "DeltaJk == 0, rates 1e-12", time.perf_counter() - t0)


def _crossings(cfg, centre, half_width=0.2, probes=9):
    """First resolved sign change of each rate inside centre +- half_width,
    refined by bisection to 1e-4; None where a rate never leaves its
    rounding floor."""
    es = np.linspace(centre - half_width, centre + half_width, probes)
    reports = [flux_report(cfg, e) for e in es]
    out = {}
    for rate in RATES:
        signs = [rep.resolved_sign(rate) for rep in reports]
        out[rate] = None
        for i in range(probes - 1):
            if signs[i] and signs[i + 1] and signs[i] != signs[i + 1]:
                out[rate] = find_flux_zero(cfg, rate, (es[i], es[i + 1]))
                break
    return out, reports[probes // 2]


def check_zero_nodes(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    missing, spread, slowest, peak = [], 0.0, 0.0, 0.0
    for cfg in CONFIGS:
        tc = time.perf_counter()
        roots, centre = _crossings(cfg, 2 * cfg.n + 1.0)
        slowest = max(slowest, time.perf_counter() - tc)
        peak = max(peak, max(abs(centre.rate(r)) / centre.scale(r) for r in RATES))
        gone = [r for r, v in roots.items() if v is None]
        if gone:
            missing.append(f"{_label(cfg)}: {'/'.join(gone)}")
            continue
        vals = list(roots.values())
        spread = max(spread, max(vals) - min(vals))
    ok = not missing and spread <= 0.1 and slowest <= 180
    return CheckResult(
        8, "quantized zero nodes", ok,
        f"{len(CONFIGS) - len(missing)}/{len(CONFIGS)} configs with resolved crossings; "
        f"max |rate|/scale at 2n+1 = {peak:.1e}; slowest config {slowest:.0f}s",
        "sign change within 0.2 of 2n+1, pairwise 0.1, <= 3 min per config", time.perf_counter() - t0,
        "no resolved sign change: " + "; ".join(missing) if missing else "",
    )


def _sweep_maxima(cfg, steps):
    reports = flux_sweep(cfg, 0.25, 6.0, steps, spot_check=False)
    out = {}
    for r in RATES:
        vals = np.array([abs(rep.rate(r)) for rep in reports])
        resolved = any(rep.resolved_sign(r) != 0 for rep in reports)
        out[r] = (float(vals.max()), resolved)
    return out


def check_alpha_suppression(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    steps = 24 if quick else 47
    literal_fail, unresolved = [], []
    for n in (0, 1, 2):
        lo = _sweep_maxima(SystemConfig(n, 1.5), steps)
        hi = _sweep_maxima(SystemConfig(n, 2.5), steps)
        for r in RATES:
            if not hi[r][0] < lo[r][0]:
                literal_fail.append(f"n={n} {r}")
            if not lo[r][1]:
                unresolved.append(f"n={n} {r}")
    ok = not literal_fail and not unresolved
    detail = []
    if unresolved:
        detail.append(f"alpha=3/2 maxima at rounding level for {len(unresolved)}/9 (n, rate) pairs")
    if literal_fail:
        detail.append("not smaller at alpha=5/2: " + ", ".join(literal_fail))
    return CheckResult(9, "alpha suppression", ok,
                       f"{9 - len(set(literal_fail) | set(unresolved))}/9 pairs suppressed and resolved",
                       "max|rate|(5/2) < max|rate|(3/2) for each n and rate",
                       time.perf_counter() - t0, "; ".join(detail))


def enclosed_winding(cfg: SystemConfig, grid: PhaseGrid | None = None):
    """(points, sum of windings inside the eps = 2n+1 orbit, sum of indices)."""
    grid = grid or PhaseGrid.default()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pts = find_stagnation_points(cfg, grid)
    eps = 2 * cfg.n + 1.0
    inside = [p for p in pts if hamiltonian(cfg.alpha, p.x, p.k) < eps]
    return pts, sum(p.winding for p in inside), sum(p.index for p in inside)


def check_winding(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    sums, values = {}, set()
    for n in (0, 1, 2):
        pts, wsum, isum = enclosed_winding(SystemConfig(n, 1.5))
        values |= {p.winding for p in pts}
        sums[n] = (wsum, isum)
    ok = values <= {-1, 0, 1} and all(w == 0 for w, _ in sums.values())
    return CheckResult(
        10, "winding bookkeeping", ok,
        "enclosed winding sums " + ", ".join(f"n={n}: {w:+d}" for n, (w, _) in sums.items())
        + f"; values {sorted(values)}",
        "values in {-1,0,1}; enclosed sum 0", time.perf_counter() - t0,
        "Poincare index sums " + ", ".join(f"n={n}: {i:+d}" for n, (_, i) in sums.items()),
    )


def check_trajectory(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    energy = 0.0
    for a, eps in itertools.product((0.75, 1.5, 2.5), (0.25, 1.0, 3.0, 6.0)):
        t = trajectory(a, eps, 0.3, 4096)
        energy = max(energy, float(np.max(np.abs(t.energy() - eps))))
    theta_dev, refine_dev = 0.0, 0.0
    for cfg in (SystemConfig(0, 1.5), SystemConfig(1, 2.5), SystemConfig(2, 1.5)):
        for eps in (1.0, 2 * cfg.n + 1.0, 4.5):
            base = flux_report(cfg, eps, 0.0, 2048)
            shifted = flux_report(cfg, eps, 1.1, 2048)
            fine = flux_report(cfg, eps, 0.0, 4096)
            for r in RATES:
                theta_dev = max(theta_dev, abs(base.rate(r) - shifted.rate(r)))
                if base.clamp_events == 0 and fine.clamp_events == 0:
                    refine_dev = max(refine_dev, abs(base.rate(r) - fine.rate(r)))
    ok = energy <= 1e-12 and theta_dev <= 1e-10 and refine_dev <= 1e-9
    return CheckResult(11, "trajectory exactness", ok,
                       f"energy {energy:.1e}, theta {theta_dev:.1e}, refinement {refine_dev:.1e}",
                       "1e-12, 1e-10, 1e-9", time.perf_counter() - t0)


def check_bounce(quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    X, K = np.meshgrid(np.linspace(3, 6, 31), np.linspace(-6, 6, 49), indexing="ij")
    dev, even = {}, 0.0
    for cfg in CONFIGS:
        b = SystemConfig(cfg.n, cfg.alpha, "bounce")
        dev[_label(cfg)] = float(np.max(np.abs(wigner_closed(b, X, K) - wigner_closed(cfg, X, K))))
        even = max(even, float(np.max(np.abs(wigner_closed(b, X, K) - wigner_closed(b, -X, K)))))
    worst = max(dev, key=dev.get)
    bad = [k for k, v in dev.items() if v > 1e-6]
    return CheckResult(12, "bounce consistency", not bad and even == 0.0,
                       f"{dev[worst]:.1e} at {worst}, parity {even:.1e}", "1e-6 for x >= 3, even in x",
                       time.perf_counter() - t0, "exceeds at " + ", ".join(bad) if bad else "")


CHECKS = [
    check_normalization, check_purity, check_marginal, check_oracle, check_energy, check_stationarity,
    check_classical_limit, check_zero_nodes, check_alpha_suppression, check_winding, check_trajectory,
    check_bounce,
]


def run_checks(quick: bool = True, only=None, echo=None) -> list[CheckResult]:
    results = []
    for i, check in enumerate(CHECKS, start=1):
        if only and i not in only:
            continue
        res = check(quick=quick)
        results.append(res)
        if echo:
            echo(res.line())
    return results


def format_table(results: list[CheckResult]) -> str:
    lines = [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)
