"""Special functions and truncated Taylor (jet) arithmetic.

Everything here is vectorized over numpy arrays: a jet's coefficient array
has the truncation order on its leading axis and any point shape after it,
so one jet carries the expansions at many phase-space nodes at once.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

__all__ = [
    "TaylorJet",
    "laguerre_assoc",
    "log_gamma",
    "erf_complex_real",
    "erf_complex_real_scaled",
    "jet_extract_derivative",
    "binomial",
]

# |Re erf(a + ib)| ~ exp(b^2 - a^2); beyond this the double range is exhausted.
_ERF_OVERFLOW_EXPONENT = 700.0


class TaylorJet:
    """Truncated Taylor expansion about a fixed point.

    ``coefficients[m]`` is the m-th Taylor coefficient, so the m-th
    derivative at the expansion point is ``m! * coefficients[m]``.
    Trailing axes of ``coefficients`` are point axes and broadcast like
    ordinary numpy arrays.
    """

    __slots__ = ("coefficients",)
    __array_priority__ = 100  # keep ndarray * jet from broadcasting elementwise

    def __init__(self, coefficients):
        c = np.asarray(coefficients)
        if c.ndim == 0:
            c = c[None]
        if not np.issubdtype(c.dtype, np.inexact):
            c = c.astype(float)
        self.coefficients = c

    @property
    def order(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def shape(self) -> tuple:
        return self.coefficients.shape[1:]

    @classmethod
    def variable(cls, value, order: int) -> "TaylorJet":
        """The identity function expanded about ``value``."""
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1,) + value.shape)
        c[0] = value
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int) -> "TaylorJet":
        value = np.asarray(value)
        dtype = np.result_type(value, float)
        c = np.zeros((order + 1,) + value.shape, dtype=dtype)
        c[0] = value
        return cls(c)

    # -- helpers ---------------------------------------------------------

    def _coerce(self, other) -> "TaylorJet":
        if isinstance(other, TaylorJet):
            if other.order != self.order:
                raise ValueError(
                    f"jet orders differ ({self.order} vs {other.order})"
                )
            return other
        return TaylorJet.constant(other, self.order)

    def truncate(self, order: int) -> "TaylorJet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        return TaylorJet(self.coefficients[: order + 1])

    @property
    def real(self) -> "TaylorJet":
        return TaylorJet(self.coefficients.real)

    @property
    def imag(self) -> "TaylorJet":
        return TaylorJet(self.coefficients.imag)

    # -- arithmetic ------------------------------------------------------

    def __neg__(self):
        return TaylorJet(-self.coefficients)

    def __add__(self, other):
        a, b = _align(self.coefficients, self._coerce(other).coefficients)
        return TaylorJet(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = _align(self.coefficients, self._coerce(other).coefficients)
        return TaylorJet(a - b)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TaylorJet):
            a, b = _align(self.coefficients, np.asarray(other)[None])
            return TaylorJet(a * b)
        a, b = _align(self.coefficients, self._coerce(other).coefficients)
        out = np.zeros(
            (self.order + 1,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]),
            dtype=np.result_type(a, b),
        )
        for m in range(self.order + 1):
            for i in range(m + 1):
                out[m] += a[i] * b[m - i]
        return TaylorJet(out)

    __rmul__ = __mul__

    def reciprocal(self) -> "TaylorJet":
        a = self.coefficients
        if np.any(a[0] == 0):
            raise ZeroDivisionError("jet has a zero constant term")
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        out[0] = 1.0 / a[0]
        for m in range(1, self.order + 1):
            acc = np.zeros_like(out[0])
            for i in range(1, m + 1):
                acc = acc + a[i] * out[m - i]
            out[m] = -acc / a[0]
        return TaylorJet(out)

    def __truediv__(self, other):
        if not isinstance(other, TaylorJet):
            other = np.asarray(other)
            if np.any(other == 0):
                raise ZeroDivisionError("division of a jet by zero")
            a, b = _align(self.coefficients, other[None])
            return TaylorJet(a / b)
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, exponent):
        if isinstance(exponent, TaylorJet):
            raise TypeError("jet ** jet is not supported; use exp(b * log(a))")
        return self.power(exponent)

    def exp(self) -> "TaylorJet":
        a = self.coefficients
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        out[0] = np.exp(a[0])
        for m in range(1, self.order + 1):
            acc = np.zeros_like(out[0])
            for i in range(1, m + 1):
                acc = acc + i * a[i] * out[m - i]
            out[m] = acc / m
        return TaylorJet(out)

    def log(self) -> "TaylorJet":
        a = self.coefficients
        if np.any(a[0] == 0):
            raise ZeroDivisionError("log of a jet with zero constant term")
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        out[0] = np.log(a[0])
        for m in range(1, self.order + 1):
            acc = m * a[m]
            for i in range(1, m):
                acc = acc - i * out[i] * a[m - i]
            out[m] = acc / (m * a[0])
        return TaylorJet(out)

    def power(self, exponent: float) -> "TaylorJet":
        """``self ** exponent`` for a real exponent (nonzero constant term
        unless the exponent is a non-negative integer)."""
        if float(exponent).is_integer() and exponent >= 0:
            result = TaylorJet.constant(np.ones(self.shape), self.order)
            for _ in range(int(exponent)):
                result = result * self
            return result
        a = self.coefficients
        if np.any(a[0] == 0):
            raise ZeroDivisionError("fractional power of a jet with zero constant term")
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        out[0] = a[0] ** exponent
        for m in range(1, self.order + 1):
            acc = np.zeros_like(out[0])
            for i in range(1, m + 1):
                acc = acc + (exponent * i - (m - i)) * a[i] * out[m - i]
            out[m] = acc / (m * a[0])
        return TaylorJet(out)

    def sqrt(self) -> "TaylorJet":
        return self.power(0.5)

    def compose(self, inner: "TaylorJet") -> "TaylorJet":
        """Series of ``self(inner(t))`` where ``self`` is expanded about
        ``inner``'s constant term; ``inner`` is passed as its deviation,
        i.e. with a zero constant term."""
        if inner.order != self.order:
            raise ValueError("composition requires equal orders")
        if np.any(inner.coefficients[0] != 0):
            raise ValueError("inner jet must have zero constant term")
        c = self.coefficients
        result = TaylorJet.constant(c[-1], self.order)
        for m in range(self.order - 1, -1, -1):
            result = result * inner + TaylorJet.constant(c[m], self.order)
        return result

    def differentiate(self, times: int = 1) -> "TaylorJet":
        """Jet of the ``times``-th derivative, with order reduced by ``times``."""
        if times > self.order:
            raise ValueError(f"cannot differentiate order-{self.order} jet {times} times")
        c = self.coefficients
        r = np.arange(self.order + 1 - times)
        scale = np.exp(
            special.gammaln(r + times + 1) - special.gammaln(r + 1)
        ).reshape((-1,) + (1,) * (c.ndim - 1))
        return TaylorJet(c[times:] * scale)

    def derivative(self, m: int):
        return jet_extract_derivative(self, m)

    def __call__(self, t):
        """Evaluate the truncated polynomial at deviation ``t``."""
        c = self.coefficients
        result = np.array(c[-1])
        for m in range(self.order - 1, -1, -1):
            result = result * t + c[m]
        return result

    def __repr__(self):
        return f"TaylorJet(order={self.order}, shape={self.shape})"


def _align(a: np.ndarray, b: np.ndarray):
    """Pad point axes (after the order axis) so that a and b broadcast."""
    extra = a.ndim - b.ndim
    if extra > 0:
        b = b.reshape(b.shape[:1] + (1,) * extra + b.shape[1:])
    elif extra < 0:
        a = a.reshape(a.shape[:1] + (1,) * (-extra) + a.shape[1:])
    return a, b


def jet_extract_derivative(jet: TaylorJet, m: int):
    """m-th derivative at the expansion point, ``m! * coefficients[m]``."""
    if m < 0 or m > jet.order:
        raise IndexError(f"derivative order {m} outside jet order {jet.order}")
    return math.factorial(m) * jet.coefficients[m]


def solve_linear_jet_ode(rate: TaylorJet, source: TaylorJet, initial) -> TaylorJet:
    """Jet of the solution of ``f' = rate * f + source`` with ``f(0) = initial``."""
    a, b = rate.coefficients, source.coefficients
    order = rate.order
    shape = np.broadcast_shapes(a.shape[1:], b.shape[1:], np.shape(initial))
    out = np.zeros((order + 1,) + shape, dtype=np.result_type(a, b, initial))
    out[0] = initial
    for r in range(order):
        acc = b[r].copy() if np.ndim(b[r]) else np.array(b[r])
        for i in range(r + 1):
            acc = acc + a[i] * out[r - i]
        out[r + 1] = acc / (r + 1)
    return TaylorJet(out)


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)


def laguerre_assoc(n: int, alpha: float, x):
    """Generalized Laguerre polynomial L_n^alpha(x) by forward recurrence."""
    if n < 0 or int(n) != n:
        raise ValueError(f"degree must be a non-negative integer, got {n}")
    if alpha <= -1:
        raise ValueError(f"alpha must exceed -1, got {alpha}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for m in range(1, n):
        prev, cur = cur, ((2 * m + 1 + alpha - x) * cur - (m + alpha) * prev) / (m + 1)
    return cur if cur.ndim else float(cur)


def log_gamma(a: float) -> float:
    """Natural log of Gamma(a) for a > 0."""
    if not a > 0:
        raise ValueError(f"log_gamma requires a > 0, got {a}")
    return math.lgamma(a)


def erf_complex_real(a, b):
    """Re[erf(a + ib)].

    Raises OverflowError where exp(b^2 - a^2) leaves the double range instead
    of silently returning inf.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b * b - a * a > _ERF_OVERFLOW_EXPONENT):
        raise OverflowError(
            "Re erf(a + ib) overflows: b^2 - a^2 exceeds "
            f"{_ERF_OVERFLOW_EXPONENT:g}; use erf_complex_real_scaled"
        )
    out = np.where(b == 0, special.erf(a), special.erf(a + 1j * b).real)
    if not np.all(np.isfinite(out)):
        raise OverflowError("Re erf(a + ib) is not finite at the requested points")
    return out if out.ndim else float(out)


def erf_complex_real_scaled(a, b):
    """exp(-b^2) * Re[erf(a + ib)], bounded for every real a, b.

    With z = a + ib and a >= 0, exp(-b^2) erfc(z) = exp(-a^2 - 2iab) w(ia - b),
    where w is the Faddeeva function evaluated in the closed upper half-plane.
    Negative a follows from Re erf(-a + ib) = -Re erf(a + ib).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sign = np.where(a < 0, -1.0, 1.0)
    aa = np.abs(a)
    tail = np.exp(-aa * aa - 2j * aa * b) * special.wofz(-b + 1j * aa)
    out = sign * (np.exp(-b * b) - tail.real)
    return out if out.ndim else float(out)
