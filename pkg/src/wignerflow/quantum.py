"""Eigenstates, Wigner function and the auxiliary Y kernel.

Two independent evaluators exist for both W and Y: a finite closed form
(nested jets in z and mu, semi-integer alpha only) and adaptive quadrature
of the eigenstate overlap integral. The quadrature path is the oracle.

Conventions (dimensionless, x > 0 on the half line)::

    phi(x)  = sqrt(2) N x^(alpha+1/2) exp(-x^2/2) L_n^alpha(x^2)
    W(x, k) = (1/pi) Int dy cos(2ky) phi(x-y) phi(x+y)
    Y(x, k) = (1/pi) Int dy cos(2ky) (x^2-y^2)^-2 phi(x-y) phi(x+y)
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._parallel import map_nodes
from .errors import EvaluationError, UnsupportedParameterError
from .quadrature import gauss_kronrod
from .specfun import (
    TaylorJet,
    erf_complex_real_scaled,
    laguerre_assoc,
    log_gamma,
    solve_linear_jet_ode,
)

__all__ = [
    "SupportMode",
    "SystemConfig",
    "PhaseGrid",
    "FieldLabel",
    "ScalarField",
    "eigenstate",
    "eigenenergy",
    "energy_residual",
    "wigner_quadrature",
    "wigner_closed",
    "y_kernel_quadrature",
    "y_kernel_closed",
    "evaluate_field",
    "wigner_marginal",
    "wigner_normalization",
    "wigner_purity",
]

_SQRT_PI = math.sqrt(math.pi)
# Beyond |y| = |x| + this the overlap integrand is below exp(-100).
_BOUNCE_TAIL = 10.0
_QUAD_CHUNK = 256


class SupportMode(str, enum.Enum):
    HALF_LINE = "half_line"
    BOUNCE = "bounce"


@dataclass(frozen=True)
class SystemConfig:
    """Quantum number, anharmonicity and support of one eigenstate."""

    n: int
    alpha: float
    support_mode: SupportMode = SupportMode.HALF_LINE

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n}")
        if not self.alpha >= 0.5:
            raise ValueError(f"alpha must be >= 1/2, got {self.alpha}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "support_mode", SupportMode(self.support_mode))

    @classmethod
    def semi_integer(cls, n: int, upsilon: int, support_mode="half_line") -> "SystemConfig":
        return cls(n, upsilon + 0.5, support_mode)

    @property
    def is_semi_integer(self) -> bool:
        return (self.alpha - 0.5).is_integer()

    @property
    def upsilon(self) -> int:
        if not self.is_semi_integer:
            raise UnsupportedParameterError(
                f"alpha={self.alpha} is not semi-integer; the closed form needs "
                "alpha = upsilon + 1/2 (use the quadrature evaluators instead)"
            )
        return int(self.alpha - 0.5)

    @property
    def bounce(self) -> bool:
        return self.support_mode is SupportMode.BOUNCE

    @property
    def inverse_square_coefficient(self) -> float:
        """(1 - 4 alpha^2) / 4, the prefactor of Y in the k-current."""
        return (1.0 - 4.0 * self.alpha**2) / 4.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["support_mode"] = self.support_mode.value
        return d


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform rectangular (x, k) lattice, endpoints included."""

    x_min: float
    x_max: float
    k_min: float
    k_max: float
    nx: int
    nk: int

    def __post_init__(self):
        if self.nx < 2 or self.nk < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        if not (self.x_max > self.x_min and self.k_max > self.k_min):
            raise ValueError("grid bounds must be increasing")

    @classmethod
    def default(cls, n_nodes: int = 201) -> "PhaseGrid":
        return cls(0.0, 6.0, -6.0, 6.0, n_nodes, n_nodes)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ks(self) -> np.ndarray:
        return np.linspace(self.k_min, self.k_max, self.nk)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dk(self) -> float:
        return (self.k_max - self.k_min) / (self.nk - 1)

    def mesh(self):
        """(X, K) arrays of shape (nx, nk)."""
        return np.meshgrid(self.xs, self.ks, indexing="ij")

    def interior(self) -> "PhaseGrid":
        return PhaseGrid(self.x_min + self.dx, self.x_max - self.dx,
                         self.k_min + self.dk, self.k_max - self.dk,
                         self.nx - 2, self.nk - 2)

    def to_dict(self) -> dict:
        return asdict(self)


class FieldLabel(str, enum.Enum):
    W = "W"
    Y = "Y"
    JX = "Jx"
    JK = "Jk"
    JK_CLASSICAL = "JkClassical"
    DELTA_JK = "DeltaJk"
    DIVERGENCE_RESIDUAL = "DivergenceResidual"

    @classmethod
    def parse(cls, name) -> "FieldLabel":
        aliases = {"JkCl": cls.JK_CLASSICAL, "Div": cls.DIVERGENCE_RESIDUAL}
        if isinstance(name, cls):
            return name
        return aliases.get(name) or cls(name)


@dataclass(frozen=True)
class ScalarField:
    grid: PhaseGrid
    values: np.ndarray  # shape (nx, nk)
    label: FieldLabel

    def riemann_sum(self) -> float:
        return float(self.values.sum() * self.grid.dx * self.grid.dk)


# -- eigenstates -------------------------------------------------------------


def eigenenergy(cfg: SystemConfig) -> float:
    return 2.0 * cfg.n + 1.0


def eigenstate(cfg: SystemConfig, x):
    """phi_n^alpha(x); zero on x <= 0 in half-line mode.

    In bounce mode the step function is dropped. For semi-integer alpha the
    factor x^(alpha+1/2) = x^(upsilon+1) is continued analytically (parity
    (-1)^(upsilon+1)); otherwise |x|^(alpha+1/2) is used.
    """
    x = np.asarray(x, dtype=float)
    a = cfg.alpha
    log_norm = 0.5 * (log_gamma(cfg.n + 1) - log_gamma(cfg.n + a + 1))
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        radial = np.exp(log_norm + (a + 0.5) * np.log(ax) - 0.5 * ax * ax)
    radial = math.sqrt(2.0) * radial * laguerre_assoc(cfg.n, a, x * x)
    if cfg.bounce:
        if cfg.is_semi_integer and cfg.upsilon % 2 == 0:
            radial = np.where(x < 0, -radial, radial)
        out = radial
    else:
        out = np.where(x > 0, radial, 0.0)
    return out if out.ndim else float(out)


def energy_residual(cfg: SystemConfig, h: float = 1e-3, x_range=(0.2, 6.0)) -> float:
    """max |H phi - (2n+1) phi| / max |phi| with a 5-point second derivative."""
    x = np.arange(x_range[0], x_range[1] + 0.5 * h, h)
    pad = np.concatenate([x[0] - h * np.arange(2, 0, -1), x, x[-1] + h * np.arange(1, 3)])
    phi = eigenstate(cfg, pad)
    d2 = (-phi[4:] + 16 * phi[3:-1] - 30 * phi[2:-2] + 16 * phi[1:-3] - phi[:-4]) / (12 * h * h)
    p = phi[2:-2]
    a = cfg.alpha
    h_phi = 0.5 * (-d2 + (x * x + (4 * a * a - 1) / (4 * x * x) - 2 * a) * p)
    return float(np.max(np.abs(h_phi - eigenenergy(cfg) * p)) / np.max(np.abs(p)))


# -- quadrature evaluators ---------------------------------------------------


def _points(x, k):
    x, k = np.broadcast_arrays(np.asarray(x, float), np.asarray(k, float))
    return x, k, x.shape


def _finish(out, shape):
    out = np.asarray(out).reshape(shape)
    return out if out.ndim else float(out)


def _overlap_quadrature(cfg, x, k, tol, weight_power):
    """(1/pi) Int dy cos(2ky) (x^2-y^2)^weight_power phi(x-y) phi(x+y) for
    1-D arrays x > 0 (half line) or any x (bounce)."""
    ax = np.abs(x)
    phi = lambda u: eigenstate(cfg, u)

    if weight_power == 0:
        # y = |x| s on the inner segment
        def inner(s):
            s = s[:, None]
            y = ax * s
            return (2 * ax / math.pi) * np.cos(2 * k * y) * phi(ax - y) * phi(ax + y)
        value, _ = gauss_kronrod(inner, 0.0, 1.0, tol=tol / 2)
    else:
        # y = |x| sin(theta) regularizes the (x^2-y^2)^-2 endpoint
        def inner(th):
            th = th[:, None]
            y = ax * np.sin(th)
            c = np.cos(th)
            return (2 / math.pi) * np.cos(2 * k * y) * phi(ax - y) * phi(ax + y) / (ax**3 * c**3)
        value, _ = gauss_kronrod(inner, 0.0, 0.5 * math.pi, tol=tol / 2)
    if not cfg.bounce:
        return value

    def outer(t):
        t = t[:, None]
        y = ax + t
        w = np.cos(2 * k * y) * phi(ax - y) * phi(ax + y)
        if weight_power:
            w = w / (ax * ax - y * y) ** 2
        return (2 / math.pi) * w

    tail, _ = gauss_kronrod(outer, 0.0, _BOUNCE_TAIL, tol=tol / 2)
    return value + tail


def _chunked(cfg, x, k, tol, weight_power, chunk=_QUAD_CHUNK):
    # points sharing a subdivision cost as much as the worst of them; sorting
    # by |k| groups similar oscillation rates and bounds memory per chunk
    order = np.argsort(np.abs(k) * np.abs(x), kind="stable")
    out = np.empty(x.size)
    for lo in range(0, x.size, chunk):
        idx = order[lo:lo + chunk]
        out[idx] = _overlap_quadrature(cfg, x[idx], k[idx], tol, weight_power)
    return out


def wigner_quadrature(cfg: SystemConfig, x, k, tol: float = 1e-10):
    """W by adaptive Gauss-Kronrod quadrature of the overlap integral.

    Works for any real alpha >= 1/2. Vectorized: all points share one
    adaptive subdivision.
    """
    x, k, shape = _points(x, k)
    xf, kf = x.ravel(), k.ravel()
    out = np.zeros(xf.size)
    live = np.ones(xf.size, bool) if cfg.bounce else xf > 0
    if np.any(live):
        out[live] = _chunked(cfg, xf[live], kf[live], tol, 0)
    return _finish(out, shape)


def y_kernel_quadrature(cfg: SystemConfig, x, k, tol: float = 1e-10):
    """Y by quadrature with the y = x sin(theta) substitution; x > 0."""
    if cfg.alpha <= 0.5:
        raise ValueError(
            "Y diverges at alpha = 1/2 (its k-current prefactor vanishes there; "
            "short-circuit instead)"
        )
    x, k, shape = _points(x, k)
    xf, kf = x.ravel(), k.ravel()
    if np.any(xf == 0):
        raise ValueError("Y is evaluated for x != 0 only")
    out = np.zeros(xf.size)
    live = (xf != 0) if cfg.bounce else xf > 0
    if np.any(live):
        out[live] = _chunked(cfg, xf[live], kf[live], tol, -2)
    return _finish(out, shape)


# -- closed form -------------------------------------------------------------


def _erf_kernel_jet(x, k, order, bounce):
    """Jet in (mu - 1) of mu^-1/2 exp(-k^2/mu) Re erf(sqrt(mu) x + i k/sqrt(mu))
    (the error function replaced by 1 in bounce mode)."""
    mu = TaylorJet.variable(np.ones_like(x), order)
    inv_sqrt = mu.power(-0.5)
    if bounce:
        return inv_sqrt * (mu.reciprocal() * (-(k * k))).exp()
    # P = exp(-k^2/mu) Re erf(u) obeys P' = (k^2/mu^2) P + Re[exp(-mu x^2 - 2ixk) u'] 2/sqrt(pi)
    rate = mu.power(-2) * (k * k)
    drive = (
        inv_sqrt * (0.5 * x * np.cos(2 * x * k)) - mu.power(-1.5) * (0.5 * k * np.sin(2 * x * k))
    )
    source = (mu * (-(x * x))).exp() * drive * (2 / _SQRT_PI)
    p = solve_linear_jet_ode(rate, source, erf_complex_real_scaled(x, k))
    return inv_sqrt * p


def _closed_form(cfg: SystemConfig, x, k, kind: str):
    a, n, v = cfg.alpha, cfg.n, cfg.upsilon
    k = np.abs(k)  # the sum is even in k; this makes the symmetry exact
    total = np.zeros(np.broadcast_shapes(x.shape, k.shape))
    for j in range(n + 1):
        m = n - j
        if kind == "W":
            p, xpow = v + 1 + 2 * j, 2 * (a + 1 + 2 * j)
        else:
            p, xpow = v - 1 + 2 * j, 2 * (a - 1 + 2 * j)
        if p < 0:
            continue  # empty l-sum (upsilon = 0, j = 0)
        kernel = _erf_kernel_jet(x, k, p + m, cfg.bounce)
        g = TaylorJet.constant(np.zeros_like(total), m)
        for ell in range(p + 1):
            # x^(xpow - 2l - 1) is a non-negative power; folding keeps small x finite
            weight = math.comb(p, ell) * x ** (xpow - 2 * ell - 1)
            g = g + kernel.differentiate(ell).truncate(m) * weight
        g = g * (_SQRT_PI / 2)
        # mu(z) - 1 = 2z/(1-z)
        dmu = TaylorJet(np.r_[0.0, np.full(m, 2.0)])
        beta = a + 1 + 2 * j
        r = np.arange(m + 1)
        # (1-z)^-beta binomial series
        prefactor = TaylorJet(np.exp(
            np.array([math.lgamma(beta + i) - math.lgamma(beta) - math.lgamma(i + 1) for i in r])
        ))
        gauss = (dmu * (-(x * x))).exp() * np.exp(-x * x)
        series = prefactor * gauss * g.compose(dmu)
        scale = (4 / math.pi) * math.exp(-math.lgamma(a + j + 1) - math.lgamma(j + 1))
        total = total + scale * series.coefficients[m]
    return total


def wigner_closed(cfg: SystemConfig, x, k):
    """W from the finite double sum over j and l (semi-integer alpha only)."""
    cfg.upsilon  # raises for non-semi-integer alpha
    x, k, shape = _points(x, k)
    xf, kf = x.ravel(), k.ravel()
    out = np.zeros(xf.size)
    if cfg.bounce:
        out = _closed_form(cfg, np.abs(xf), kf, "W")
    else:
        live = xf > 0
        if np.any(live):
            out[live] = _closed_form(cfg, xf[live], kf[live], "W")
    return _finish(out, shape)


def y_kernel_closed(cfg: SystemConfig, x, k):
    """Y from the finite double sum. For upsilon = 0 the j = 0 term has an
    empty l-range and is dropped. Y diverges at alpha = 1/2, where callers
    must use its vanishing prefactor instead."""
    if cfg.upsilon == 0:
        raise ValueError("Y diverges at alpha = 1/2 (its k-current prefactor vanishes there; "
                         "short-circuit instead)")
    x, k, shape = _points(x, k)
    xf, kf = x.ravel(), k.ravel()
    out = np.zeros(xf.size)
    if cfg.bounce:
        out = _closed_form(cfg, np.abs(xf), kf, "Y")
    else:
        live = xf > 0
        if np.any(live):
            out[live] = _closed_form(cfg, xf[live], kf[live], "Y")
    return _finish(out, shape)


# -- fields ------------------------------------------------------------------


def _field_kernel(cfg: SystemConfig, label: FieldLabel):
    from . import flow

    return {
        FieldLabel.W: lambda x, k: wigner_closed(cfg, x, k),
        FieldLabel.Y: lambda x, k: y_kernel_closed(cfg, x, k),
        FieldLabel.JX: lambda x, k: flow.current_x(cfg, x, k),
        FieldLabel.JK: lambda x, k: flow.current_k(cfg, x, k),
        FieldLabel.JK_CLASSICAL: lambda x, k: flow.current_k_classical(cfg, x, k),
        FieldLabel.DELTA_JK: lambda x, k: flow.delta_current_k(cfg, x, k),
    }[label]


def evaluate_field(cfg: SystemConfig, grid: PhaseGrid, label, threads: int | None = None) -> ScalarField:
    """Closed-form field on every grid node (node-parallel).

    Half-line nodes with x <= 0 are exactly zero. The divergence residual is
    returned on the interior grid.
    """
    label = FieldLabel.parse(label)
    if label is FieldLabel.DIVERGENCE_RESIDUAL:
        from .flow import divergence_residual

        return divergence_residual(cfg, grid, threads=threads)
    X, K = grid.mesh()
    values = map_nodes(_field_kernel(cfg, label), X, K, threads=threads)
    bad = ~np.isfinite(values)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise EvaluationError(f"non-finite {label.value}", x=X[i, j], k=K[i, j])
    return ScalarField(grid, values, label)


# -- phase-space integrals ----------------------------------------------------
#
# The half-line eigenstates are only C^(upsilon) across the wall once extended
# by zero, so W decays algebraically in k (the momentum density falls like
# |k|^-(2 alpha + 3)). Integrals over k therefore combine the closed form on
# |k| <= k_core with a tail computed from the overlap integral.

_X_EXTENT = 10.0  # phi^2 < 1e-35 beyond this for n <= 4, alpha <= 9/2


def _require_half_line(cfg: SystemConfig):
    if cfg.bounce:
        raise UnsupportedParameterError("phase-space integrals are defined for the half line")


def _band_marginal(cfg: SystemConfig, x, k_lo: float, k_hi: float, tol: float):
    """Int over k_lo < |k| < k_hi of W(x, k) dk with the k-integral done exactly::

        (2/pi) Int_0^x phi(x-y) phi(x+y) (sin 2 k_hi y - sin 2 k_lo y) / y dy
    """
    x = np.atleast_1d(np.asarray(x, float))
    half_width, centre = k_hi - k_lo, k_hi + k_lo

    def inner(s):
        s = s[:, None]
        y = x * s
        # (sin a - sin b)/y = 2 cos((a+b)/2) sin((a-b)/2)/y, finite at y = 0
        kern = 2 * half_width * np.cos(centre * y) * np.sinc(half_width * y / math.pi)
        return (2 / math.pi) * x * kern * eigenstate(cfg, x - y) * eigenstate(cfg, x + y)

    # sin(2 k_hi y) needs ~k_hi x / pi periods resolved
    pieces = int(min(4096, max(1, math.ceil(k_hi * float(np.max(x)) / 4))))
    value, _ = gauss_kronrod(inner, 0.0, 1.0, tol=tol, breakpoints=np.linspace(0, 1, pieces + 1)[1:-1])
    return value


def wigner_marginal(cfg: SystemConfig, x, k_core: float = 4.0, k_tail: float = 2000.0,
                    tol: float = 1e-10):
    """Int W(x, k) dk over |k| <= k_tail (an estimate of |phi(x)|^2).

    The closed form covers |k| <= k_core; the remainder uses the overlap
    integral. The truncation error decays like k_tail^-(alpha + 3/2).
    """
    _require_half_line(cfg)
    x = np.atleast_1d(np.asarray(x, float))
    out = np.zeros(x.size)
    live = x > 0
    xs = x[live]
    if xs.size:
        core, _ = gauss_kronrod(
            lambda k: wigner_closed(cfg, xs[None, :], k[:, None]),
            -k_core, k_core, tol=tol, breakpoints=(0.0,),
        )
        out[live] = core + _band_marginal(cfg, xs, k_core, k_tail, tol)
    return out


def wigner_normalization(cfg: SystemConfig, k_core: float = 4.0, k_tail: float = 200.0,
                         tol: float = 1e-9) -> float:
    """Adaptive estimate of Int Int W dx dk (should be 1)."""
    _require_half_line(cfg)

    def outer(xs):
        return wigner_marginal(cfg, xs, k_core, k_tail, tol=0.1 * tol)

    value, _ = gauss_kronrod(outer, 0.0, _X_EXTENT, tol=tol, breakpoints=(1.0, 2.0, 4.0))
    return value


def wigner_purity(cfg: SystemConfig, k_core: float = 4.0, k_tail: float = 40.0,
                  tol: float = 1e-9) -> float:
    """Adaptive estimate of 2 pi Int Int W^2 dx dk (1 for a pure state).

    The tail k_core < |k| <= k_tail uses the quadrature evaluator.
    """
    _require_half_line(cfg)

    def outer(xs):
        core, _ = gauss_kronrod(
            lambda k: wigner_closed(cfg, xs[None, :], k[:, None]) ** 2,
            0.0, k_core, tol=0.05 * tol,
        )
        tail, _ = gauss_kronrod(
            lambda k: wigner_quadrature(cfg, xs[None, :], k[:, None], tol=1e-11) ** 2,
            k_core, k_tail, tol=0.05 * tol,
        )
        return 2 * (core + tail)  # W is even in k

    value, _ = gauss_kronrod(outer, 0.0, _X_EXTENT, tol=tol / (2 * math.pi),
                             breakpoints=(1.0, 2.0, 4.0))
    return 2 * math.pi * value
