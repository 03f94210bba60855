"""Boundary-flux rates of probability, Wigner entropy and purity across a
classical orbit, and energy sweeps of them.

With dx/dtau = k on the orbit, each rate is a trapezoid period integral::

    sigma   = -Int dtau  DeltaJ_k k
    entropy = +Int dtau  ln|W| DeltaJ_k k
    purity  = -Int dtau  W DeltaJ_k k        (times 2 pi for DP/Dtau)

ln|W| is log-singular wherever W changes sign on the orbit. Those zeros
are located and their singular part ln|2 sin((tau - tau0)/2)| is integrated
exactly through its Fourier series, which keeps the entropy integral
spectrally accurate.

Every rate also carries the integral of the absolute integrand. A rate
whose magnitude is below ``RESOLUTION`` times that scale is
indistinguishable from rounding error and has no definite sign.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._parallel import resolve_threads
from .classical import DEFAULT_SAMPLES, ClassicalTrajectory, orbit_point, trajectory
from .errors import BracketError, EvaluationError, UnsupportedParameterError
from .flow import delta_current_k
from .quantum import SystemConfig, wigner_closed, wigner_quadrature, y_kernel_closed, y_kernel_quadrature

__all__ = [
    "LOG_FLOOR",
    "RESOLUTION",
    "RATES",
    "FluxReport",
    "probability_flux_rate",
    "entropy_flux_rate",
    "purity_flux_rate",
    "flux_report",
    "flux_sweep",
    "find_flux_zero",
    "oracle_spot_check",
    "log_singular_trapezoid",
]

LOG_FLOOR = 1e-30
RESOLUTION = 1e-10
RATES = ("sigma", "entropy", "purity")
SPOT_CHECK_POINTS = 16
SPOT_CHECK_SEED = 1729
SPOT_CHECK_TOL = 1e-8
_NEAR_ROOT = 1e-3  # fraction of a step inside which ln|W| is not trusted


@dataclass(frozen=True)
class FluxReport:
    cfg: SystemConfig
    epsilon: float
    theta: float
    sigma_rate: float
    entropy_rate: float
    purity_rate: float
    n_samples: int
    clamp_events: int
    sigma_scale: float = 0.0
    entropy_scale: float = 0.0
    purity_scale: float = 0.0
    oracle_deviation: float = float("nan")
    error: str | None = None

    @property
    def purity_rate_2pi(self) -> float:
        """DP/Dtau (the purity carries a 2 pi normalization)."""
        return 2 * math.pi * self.purity_rate

    @property
    def failed(self) -> bool:
        return self.error is not None

    def rate(self, name: str) -> float:
        return getattr(self, f"{_check_rate(name)}_rate")

    def scale(self, name: str) -> float:
        return getattr(self, f"{_check_rate(name)}_scale")

    def resolved_sign(self, name: str, resolution: float = RESOLUTION) -> int:
        """+1/-1 when the rate stands out of its rounding floor, else 0."""
        r = self.rate(name)
        if not np.isfinite(r) or abs(r) <= resolution * self.scale(name):
            return 0
        return 1 if r > 0 else -1

    def to_dict(self) -> dict:
        return {
            "n": self.cfg.n,
            "alpha": self.cfg.alpha,
            "support_mode": self.cfg.support_mode.value,
            "epsilon": self.epsilon,
            "theta": self.theta,
            "sigma_rate": self.sigma_rate,
            "entropy_rate": self.entropy_rate,
            "purity_rate": self.purity_rate,
            "purity_rate_2pi": self.purity_rate_2pi,
            "n_samples": self.n_samples,
            "clamp_events": self.clamp_events,
            "sigma_scale": self.sigma_scale,
            "entropy_scale": self.entropy_scale,
            "purity_scale": self.purity_scale,
            "oracle_deviation": self.oracle_deviation,
            "error": self.error,
        }


def _check_rate(name: str) -> str:
    if name not in RATES:
        raise ValueError(f"unknown rate {name!r}; expected one of {RATES}")
    return name


def _check_cfg(cfg: SystemConfig):
    if cfg.bounce:
        raise UnsupportedParameterError("flux rates need a classical orbit; use the half-line mode")


def _path_fields(cfg: SystemConfig, traj: ClassicalTrajectory):
    if traj.alpha != cfg.alpha:
        raise ValueError(f"trajectory alpha {traj.alpha} != system alpha {cfg.alpha}")
    w = wigner_closed(cfg, traj.x, traj.k)
    dj = delta_current_k(cfg, traj.x, traj.k)
    bad = ~(np.isfinite(w) & np.isfinite(dj))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise EvaluationError("non-finite field on the orbit", x=traj.x[i], k=traj.k[i], tau=traj.tau[i])
    return w, dj * traj.dxdtau


def _log_abs(w):
    aw = np.abs(w)
    clamped = aw < LOG_FLOOR
    return np.log(np.where(clamped, LOG_FLOOR, aw)), int(np.count_nonzero(clamped))


def _orbit_zeros(cfg: SystemConfig, traj: ClassicalTrajectory, w: np.ndarray) -> list[float]:
    """Times in [0, 2 pi) where W changes sign, including zeros on a node."""

    def w_at(t):
        x, k = orbit_point(traj.alpha, traj.epsilon, traj.theta, t)
        return float(wigner_closed(cfg, x, k))

    n = w.size - 1
    s = np.sign(w[:-1])
    roots = []
    for i in range(n):
        nxt = s[(i + 1) % n]
        if s[i] == 0:
            if s[i - 1] * nxt < 0:
                roots.append(float(traj.tau[i]))
        elif s[i] * nxt < 0:
            roots.append(brentq(w_at, traj.tau[i], traj.tau[i + 1], xtol=1e-15, rtol=1e-15))
    return roots


def log_singular_trapezoid(tau: np.ndarray, log_w: np.ndarray, g: np.ndarray, roots) -> float:
    """Int_0^{2 pi} log_w g dtau on uniform nodes ``tau`` (endpoint included),
    where ``log_w`` = ln|f| for a periodic f with simple zeros at ``roots``
    and g is smooth and periodic.

    Each zero's ln|2 sin((tau - t0)/2)| is removed before the trapezoid rule
    and integrated exactly via ln|2 sin(u/2)| = -sum_{m>=1} cos(m u)/m.
    The smooth remainder at the nodes nearest each zero, where ln|f| has
    lost its relative accuracy, is interpolated from the neighbours.
    """
    step = float(tau[1] - tau[0])
    trap = lambda v: step * (0.5 * (v[0] + v[-1]) + v[1:-1].sum())
    if len(roots) == 0:
        return float(trap(log_w * g))
    n = tau.size - 1
    gh = np.fft.rfft(g[:-1]) * step  # Int g exp(-i m tau) dtau
    m = np.arange(gh.size)
    weight = np.zeros(gh.size)
    weight[1:] = 1.0 / m[1:]
    if n % 2 == 0:
        weight[-1] *= 0.5  # Nyquist term shared between +m and -m
    smooth = np.array(log_w[:-1], float)
    singular = 0.0
    near = np.zeros(n, bool)
    for t0 in roots:
        u = (tau[:-1] - t0 + math.pi) % (2 * math.pi) - math.pi
        near |= np.abs(u) < _NEAR_ROOT * step
        with np.errstate(divide="ignore"):
            smooth -= np.log(np.abs(2 * np.sin(0.5 * u)))
        singular -= float(np.sum(weight * np.real(np.exp(1j * m * t0) * gh)))
    for i in np.flatnonzero(near):
        nb = [(i + d) % n for d in (-2, -1, 1, 2)]
        if near[nb].any():
            raise EvaluationError("zeros of W closer than the sampling step", tau=float(tau[i]))
        smooth[i] = (-smooth[nb[0]] + 4 * smooth[nb[1]] + 4 * smooth[nb[2]] - smooth[nb[3]]) / 6
    smooth = np.append(smooth, smooth[0])
    return float(trap(smooth * g)) + singular


def _log_weighted_integral(cfg, traj, w, g):
    lw, clamps = _log_abs(w)
    return log_singular_trapezoid(traj.tau, lw, g, _orbit_zeros(cfg, traj, w)), clamps


def probability_flux_rate(cfg: SystemConfig, traj: ClassicalTrajectory) -> float:
    _check_cfg(cfg)
    _, flux = _path_fields(cfg, traj)
    return -traj.period_integral(flux)


def entropy_flux_rate(cfg: SystemConfig, traj: ClassicalTrajectory) -> tuple[float, int]:
    """Returns (rate, number of samples where |W| hit the log floor)."""
    _check_cfg(cfg)
    w, flux = _path_fields(cfg, traj)
    return _log_weighted_integral(cfg, traj, w, flux)


def purity_flux_rate(cfg: SystemConfig, traj: ClassicalTrajectory) -> tuple[float, float]:
    """Returns (raw rate, 2 pi x raw rate)."""
    _check_cfg(cfg)
    w, flux = _path_fields(cfg, traj)
    raw = -traj.period_integral(w * flux)
    return raw, 2 * math.pi * raw


def oracle_spot_check(cfg: SystemConfig, traj: ClassicalTrajectory,
                      points: int = SPOT_CHECK_POINTS, seed: int = SPOT_CHECK_SEED) -> float:
    """Max |closed - quadrature| of W and Y at a few seeded orbit samples."""
    rng = np.random.default_rng(seed)
    idx = rng.choice(traj.tau.size - 1, size=min(points, traj.tau.size - 1), replace=False)
    x, k = traj.x[idx], traj.k[idx]
    dev = np.abs(wigner_closed(cfg, x, k) - wigner_quadrature(cfg, x, k))
    if cfg.inverse_square_coefficient != 0.0:
        dev = np.maximum(dev, np.abs(y_kernel_closed(cfg, x, k) - y_kernel_quadrature(cfg, x, k)))
    return float(dev.max())


def flux_report(cfg: SystemConfig, epsilon: float, theta: float = 0.0,
                n_samples: int = DEFAULT_SAMPLES, spot_check: bool = False) -> FluxReport:
    """All three rates on the orbit of energy ``epsilon``."""
    _check_cfg(cfg)
    traj = trajectory(cfg.alpha, epsilon, theta, n_samples)
    w, flux = _path_fields(cfg, traj)
    lw, clamps = _log_abs(w)
    entropy, _ = _log_weighted_integral(cfg, traj, w, flux)
    dev = float("nan")
    if spot_check:
        dev = oracle_spot_check(cfg, traj)
        if dev > SPOT_CHECK_TOL:
            raise EvaluationError(f"closed form deviates from quadrature by {dev:.3e} on the orbit")
    return FluxReport(
        cfg=cfg, epsilon=float(epsilon), theta=float(theta),
        sigma_rate=-traj.period_integral(flux),
        entropy_rate=entropy,
        purity_rate=-traj.period_integral(w * flux),
        n_samples=n_samples, clamp_events=clamps,
        sigma_scale=traj.period_integral(np.abs(flux)),
        entropy_scale=traj.period_integral(np.abs(lw * flux)),
        purity_scale=traj.period_integral(np.abs(w * flux)),
        oracle_deviation=dev,
    )


def _failed_report(cfg, eps, theta, n_samples, exc) -> FluxReport:
    nan = float("nan")
    return FluxReport(cfg, float(eps), float(theta), nan, nan, nan, n_samples, 0, nan, nan, nan,
                      nan, f"{type(exc).__name__}: {exc}")


def flux_sweep(cfg: SystemConfig, epsilon_min: float, epsilon_max: float, steps: int,
               theta: float = 0.0, n_samples: int = DEFAULT_SAMPLES,
               threads: int | None = None, spot_check: bool = True) -> list[FluxReport]:
    """Reports at ``steps`` uniformly spaced energies, in increasing order.

    A failing energy yields a report with ``error`` set and NaN rates; the
    sweep continues. The oracle spot check runs once, on the first energy.
    """
    _check_cfg(cfg)
    if not 0 < epsilon_min < epsilon_max:
        raise ValueError(f"need 0 < epsilon_min < epsilon_max, got [{epsilon_min}, {epsilon_max}]")
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    energies = np.linspace(epsilon_min, epsilon_max, steps)

    def one(i):
        try:
            return flux_report(cfg, energies[i], theta, n_samples, spot_check=spot_check and i == 0)
        except (EvaluationError, ValueError, ArithmeticError) as exc:
            return _failed_report(cfg, energies[i], theta, n_samples, exc)

    threads = resolve_threads(threads)
    if threads == 1:
        return [one(i) for i in range(steps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(steps)))


def find_flux_zero(cfg: SystemConfig, rate: str, bracket: tuple[float, float],
                   theta: float = 0.0, n_samples: int = DEFAULT_SAMPLES,
                   xtol: float = 1e-4, resolution: float = RESOLUTION) -> float:
    """Bisection in energy for a sign change of one rate.

    Ends must carry opposite resolved signs (see :meth:`FluxReport.resolved_sign`);
    a rate at its rounding floor has no sign and cannot bracket a zero.
    """
    _check_rate(rate)
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got {bracket}")

    def sign(e):
        return flux_report(cfg, e, theta, n_samples).resolved_sign(rate, resolution)

    s_lo, s_hi = sign(lo), sign(hi)
    if s_lo == 0 or s_hi == 0 or s_lo == s_hi:
        raise BracketError(
            f"{rate} rate has no resolved sign change on [{lo}, {hi}] "
            f"(signs {s_lo:+d}, {s_hi:+d}; 0 = below rounding floor)"
        )
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        s = sign(mid)
        if s == 0:
            return mid
        if s == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
