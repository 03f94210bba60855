"""Classical Hamiltonian and exact closed orbits used as flux boundaries.

With X = x^2 the energy shell H = epsilon is the ellipse-like curve::

    X(tau) = A + B cos(2 tau + theta),   k(tau) = -B sin(2 tau + theta) / x
    A = alpha + epsilon,                 B = sqrt(epsilon^2 + 2 alpha epsilon + 1/4)

which satisfies dx/dtau = k and dk/dtau = -dH/dx exactly. The motion
repeats with period pi in tau; sampling tau over [0, 2 pi] traverses the
orbit twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularityError

__all__ = ["hamiltonian", "force", "orbit_coefficients", "orbit_point", "ClassicalTrajectory", "trajectory"]

DEFAULT_SAMPLES = 2048
MIN_SAMPLES = 64


def hamiltonian(alpha: float, x, k):
    """H = (k^2 + x^2 + (4 alpha^2 - 1)/(4 x^2) - 2 alpha) / 2."""
    x = np.asarray(x, float)
    if np.any(x == 0):
        raise SingularityError("H is singular at x = 0")
    out = 0.5 * (np.square(k) + x * x + (4 * alpha * alpha - 1) / (4 * x * x) - 2 * alpha)
    return out if np.ndim(out) else float(out)


def force(alpha: float, x):
    """-dH/dx = -x + (4 alpha^2 - 1)/(4 x^3)."""
    x = np.asarray(x, float)
    if np.any(x == 0):
        raise SingularityError("the force is singular at x = 0")
    return -x + (4 * alpha * alpha - 1) / (4 * x**3)


def orbit_coefficients(alpha: float, epsilon: float) -> tuple[float, float]:
    """(A, B) of the orbit X = A + B cos(...)."""
    a = alpha + epsilon
    b = math.sqrt(epsilon * epsilon + 2 * alpha * epsilon + 0.25)
    return a, b


@dataclass(frozen=True)
class ClassicalTrajectory:
    epsilon: float
    alpha: float
    theta: float
    tau: np.ndarray
    x: np.ndarray
    k: np.ndarray
    dxdtau: np.ndarray

    @property
    def n_samples(self) -> int:
        """Number of trapezoid intervals; there are n_samples + 1 nodes."""
        return self.tau.size - 1

    @property
    def step(self) -> float:
        return float(self.tau[1] - self.tau[0])

    @property
    def dkdtau(self) -> np.ndarray:
        return force(self.alpha, self.x)

    def energy(self) -> np.ndarray:
        return hamiltonian(self.alpha, self.x, self.k)

    def as_array(self) -> np.ndarray:
        """Columns tau, x, k, dx/dtau."""
        return np.column_stack([self.tau, self.x, self.k, self.dxdtau])

    def period_integral(self, integrand) -> float:
        """Trapezoid rule over [0, 2 pi]; spectrally accurate for periodic data."""
        v = np.asarray(integrand, float)
        return float(self.step * (0.5 * (v[0] + v[-1]) + v[1:-1].sum()))


def trajectory(alpha: float, epsilon: float, theta: float = 0.0,
               n_samples: int = DEFAULT_SAMPLES) -> ClassicalTrajectory:
    """Exact orbit of energy epsilon sampled uniformly on tau in [0, 2 pi].

    alpha = 1/2 is allowed: the orbit then touches x = 0, where the
    particle reflects (k flips sign) without any singular term.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if alpha < 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be >= {MIN_SAMPLES}, got {n_samples}")
    tau = np.linspace(0.0, 2 * math.pi, n_samples + 1)
    x, k = orbit_point(alpha, epsilon, theta, tau)
    return ClassicalTrajectory(float(epsilon), float(alpha), float(theta), tau, x, k, k.copy())


def orbit_point(alpha: float, epsilon: float, theta, tau):
    """(x, k) on the orbit at time ``tau`` (vectorized)."""
    a, b = orbit_coefficients(alpha, epsilon)
    phase = np.asarray(tau, float) + 0.5 * theta
    s, c = np.sin(phase), np.cos(phase)
    # A - B = (alpha^2 - 1/4) / (A + B) avoids cancellation near the inner turning point
    inner = (alpha * alpha - 0.25) / (a + b)
    x = np.sqrt((a + b) * c * c + inner * s * s)
    if alpha == 0.5:
        k = -2 * b * s * np.sign(c) / math.sqrt(a + b)
    else:
        k = -2 * b * s * c / x
    return x, k
