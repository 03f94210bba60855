"""Adaptive Gauss-Kronrod (G7/K15) quadrature with batched integrands.

The integrand receives a 1-D array of abscissae and returns an array whose
leading axis matches it; trailing axes are a batch of independent integrals
that share one subdivision. An interval is accepted once every member of
the batch meets its share of the absolute tolerance.
"""

from __future__ import annotations

import numpy as np

__all__ = ["QuadratureError", "gauss_kronrod", "integrate_2d"]

# QUADPACK qk15 abscissae (positive half, descending) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[1:15:2] = np.concatenate([_WG[:-1], _WG[::-1]])


class QuadratureError(RuntimeError):
    """Adaptive refinement hit its depth limit before meeting the tolerance."""

    def __init__(self, message: str, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def gauss_kronrod(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 30,
                  breakpoints=(), max_intervals: int = 20000):
    """Integrate ``f`` over [a, b]; returns ``(value, error_estimate)``.

    ``value`` has the batch shape of ``f``'s output (a float when ``f``
    returns a 1-D array). Refinement stops with :class:`QuadratureError`
    at ``max_depth`` bisections or once more than ``max_intervals``
    intervals are pending (a tolerance below the integrand's noise level
    otherwise doubles the work every level).
    """
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    edges = np.unique(np.concatenate([[a], [p for p in breakpoints if a < p < b], [b]]))
    lo, hi = edges[:-1], edges[1:]
    length = b - a
    total = None
    err_total = None
    for depth in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        t = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
        vals = np.asarray(f(t), dtype=float)
        batch = vals.shape[1:]
        vals = vals.reshape((lo.size, 15) + batch)
        wshape = (1, 15) + (1,) * len(batch)
        hshape = (-1,) + (1,) * len(batch)
        kron = half.reshape(hshape) * np.sum(vals * _KRONROD.reshape(wshape), axis=1)
        gauss = half.reshape(hshape) * np.sum(vals * _GAUSS.reshape(wshape), axis=1)
        err = np.abs(kron - gauss)
        if total is None:
            total = np.zeros(batch)
            err_total = np.zeros(batch)
        # roundoff floor keeps already-converged intervals from splitting forever
        floor = 50 * np.finfo(float).eps * np.abs(kron)
        share = tol * (hi - lo) / length
        ok = np.all((err <= share.reshape(hshape)) | (err <= floor), axis=tuple(range(1, err.ndim)))
        total = total + kron[ok].sum(axis=0)
        err_total = err_total + err[ok].sum(axis=0)
        if np.all(ok):
            return _unwrap(total), _unwrap(err_total)
        if depth == max_depth or 2 * np.count_nonzero(~ok) > max_intervals:
            pending = kron[~ok].sum(axis=0)
            pending_err = err[~ok].sum(axis=0)
            raise QuadratureError(
                f"no convergence on [{a}, {b}] after depth {depth}: "
                f"error estimate {np.max(err_total + pending_err):.3e} > tol {tol:.1e}",
                _unwrap(total + pending), _unwrap(err_total + pending_err),
            )
        lo_bad, hi_bad = lo[~ok], hi[~ok]
        mid_bad = 0.5 * (lo_bad + hi_bad)
        lo = np.concatenate([lo_bad, mid_bad])
        hi = np.concatenate([mid_bad, hi_bad])


def integrate_2d(f, x_range, k_range, tol: float = 1e-10, max_depth: int = 30):
    """Iterated adaptive integral of ``f(x, k)`` (vectorized, broadcasting)
    over a rectangle. Returns ``(value, error_estimate)``."""
    (x0, x1), (k0, k1) = x_range, k_range
    inner_tol = tol / (2 * (x1 - x0))

    def outer(xs):
        value, _ = gauss_kronrod(
            lambda ks: f(xs[None, :], ks[:, None]), k0, k1, tol=inner_tol, max_depth=max_depth
        )
        return value

    return gauss_kronrod(outer, x0, x1, tol=tol / 2, max_depth=max_depth)


def _unwrap(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v
