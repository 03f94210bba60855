"""Wigner currents, the quantum excess of the k-current, the continuity
residual and stagnation-point analysis."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._parallel import map_nodes
from .errors import EvaluationError
from .quantum import (
    FieldLabel,
    PhaseGrid,
    ScalarField,
    SystemConfig,
    wigner_closed,
    y_kernel_closed,
)

__all__ = [
    "current_x",
    "current_k",
    "current_k_classical",
    "delta_current_k",
    "divergence_residual",
    "current",
    "Classification",
    "StagnationPoint",
    "find_stagnation_points",
    "loop_winding",
]


def _wy(cfg: SystemConfig, x, k, need_y: bool):
    w = wigner_closed(cfg, x, k)
    y = y_kernel_closed(cfg, x, k) if need_y else None
    return w, y


def current_x(cfg: SystemConfig, x, k):
    """J_x = k W."""
    return np.multiply(k, wigner_closed(cfg, x, k))


def current_k(cfg: SystemConfig, x, k):
    """J_k = -x (W + (1 - 4 alpha^2)/4 Y), the resummed Moyal series."""
    c = cfg.inverse_square_coefficient
    if c == 0.0:
        return np.multiply(-np.asarray(x, float), wigner_closed(cfg, x, k))
    w, y = _wy(cfg, x, k, True)
    return -np.asarray(x, float) * (w + c * y)


def current_k_classical(cfg: SystemConfig, x, k):
    """Liouvillian truncation -(x + (1 - 4 alpha^2)/(4 x^3)) W."""
    x = np.asarray(x, float)
    w = wigner_closed(cfg, x, k)
    c = cfg.inverse_square_coefficient
    if c == 0.0:
        return -x * w
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(w == 0, 0.0, -(x + c / x**3) * w)
    return out if np.ndim(out) else float(out)


def delta_current_k(cfg: SystemConfig, x, k):
    """J_k minus its Liouvillian part: -(1 - 4 alpha^2)/4 (x Y - W / x^3).

    Identically zero for alpha = 1/2.
    """
    x = np.asarray(x, float)
    c = cfg.inverse_square_coefficient
    if c == 0.0:
        out = np.zeros(np.broadcast_shapes(x.shape, np.shape(k)))
        return out if out.ndim else 0.0
    w, y = _wy(cfg, x, k, True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(w == 0, -c * x * y, -c * (x * y - w / x**3))
    return out if np.ndim(out) else float(out)


def divergence_residual(cfg: SystemConfig, grid: PhaseGrid, threads: int | None = None) -> ScalarField:
    """Central-difference dJx/dx + dJk/dk on the interior nodes.

    Eigenstates are stationary, so this is pure discretization error, O(h^2).
    """
    if grid.nx < 3 or grid.nk < 3:
        raise ValueError("divergence residual needs at least 3 nodes per axis")
    X, K = grid.mesh()
    jx = map_nodes(lambda x, k: current_x(cfg, x, k), X, K, threads=threads)
    jk = map_nodes(lambda x, k: current_k(cfg, x, k), X, K, threads=threads)
    div = (jx[2:, 1:-1] - jx[:-2, 1:-1]) / (2 * grid.dx) + (jk[1:-1, 2:] - jk[1:-1, :-2]) / (2 * grid.dk)
    return ScalarField(grid.interior(), div, FieldLabel.DIVERGENCE_RESIDUAL)


# -- stagnation points ---------------------------------------------------------


class Classification(str, enum.Enum):
    VORTEX_CW = "vortex_cw"
    VORTEX_CCW = "vortex_ccw"
    SADDLE = "saddle"
    SEPARATRIX_NODE = "separatrix_node"


_WINDING = {
    Classification.VORTEX_CCW: 1,
    Classification.VORTEX_CW: -1,
    Classification.SADDLE: 0,
    Classification.SEPARATRIX_NODE: 0,
}


@dataclass(frozen=True)
class StagnationPoint:
    """Joint zero of (J_x, J_k).

    ``winding`` is the signed vortex count (+1 counter-clockwise, -1
    clockwise, 0 for saddles and separatrix nodes). ``index`` is the
    Poincare index measured on the refinement loop (+1 vortex, -1 saddle),
    the quantity that is additive over enclosed points.
    """

    x: float
    k: float
    classification: Classification
    winding: int
    index: int
    residual: float
    jacobian_det: float
    curl: float
    multiplicity: int = 1

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "k": self.k,
            "classification": self.classification.value,
            "winding": self.winding,
            "residual": self.residual,
            "index": self.index,
            "jacobian_det": self.jacobian_det,
            "curl": self.curl,
            "multiplicity": self.multiplicity,
        }


def current(cfg: SystemConfig, x, k) -> tuple[np.ndarray, np.ndarray]:
    """(J_x, J_k) sharing one W evaluation."""
    x = np.asarray(x, float)
    w = wigner_closed(cfg, x, k)
    jx = np.multiply(k, w)
    c = cfg.inverse_square_coefficient
    if c == 0.0:
        return jx, -x * w
    return jx, -x * (w + c * y_kernel_closed(cfg, x, k))


def _angle_sum(jx: np.ndarray, jk: np.ndarray) -> float:
    """Total turning of the vector along a closed sequence, in turns."""
    ang = np.arctan2(jk, jx)
    d = np.diff(np.concatenate([ang, ang[:1]]))
    d = (d + math.pi) % (2 * math.pi) - math.pi
    return float(d.sum() / (2 * math.pi))


def loop_winding(cfg: SystemConfig, curve, max_refine: int = 12) -> int:
    """Poincare index of J along a closed polygon ``curve`` (m x 2 array of
    (x, k) vertices, not repeated at the end).

    Segments are bisected until the flow angle turns by less than pi/4 per
    step, so sparse vertex lists are safe. Raises EvaluationError if the
    field vanishes on the curve.
    """
    pts = np.asarray(curve, float)
    pts = np.vstack([pts, pts[:1]])
    out = [pts[:1]]
    for p, q in zip(pts[:-1], pts[1:]):
        seg = np.linspace(p, q, 9)
        for _ in range(max_refine):
            jx, jk = current(cfg, seg[:, 0], seg[:, 1])
            ang = np.arctan2(jk, jx)
            d = np.abs((np.diff(ang) + math.pi) % (2 * math.pi) - math.pi)
            bad = d > math.pi / 4
            if not np.any(bad):
                break
            mids = 0.5 * (seg[:-1][bad] + seg[1:][bad])
            pos = np.flatnonzero(bad) + 1
            seg = np.insert(seg, pos, mids, axis=0)
        out.append(seg[1:])
    path = np.vstack(out)[:-1]
    jx, jk = current(cfg, path[:, 0], path[:, 1])
    if np.any((jx == 0) & (jk == 0)):
        i = int(np.flatnonzero((jx == 0) & (jk == 0))[0])
        raise EvaluationError("current vanishes on the winding curve", x=path[i, 0], k=path[i, 1])
    return int(round(_angle_sum(jx, jk)))


def _jacobian(cfg, x, k, hx, hk):
    pts_x = np.array([x + hx, x - hx, x, x])
    pts_k = np.array([k, k, k + hk, k - hk])
    jx, jk = current(cfg, pts_x, pts_k)
    return np.array([
        [(jx[0] - jx[1]) / (2 * hx), (jx[2] - jx[3]) / (2 * hk)],
        [(jk[0] - jk[1]) / (2 * hx), (jk[2] - jk[3]) / (2 * hk)],
    ])


def _newton(cfg, x0, k0, dx, dk, target, max_iter=60):
    """Damped Newton on (J_x, J_k) = 0 confined to a 2-cell box."""
    x, k = x0, k0
    f = np.array(current(cfg, x, k), float)
    for _ in range(max_iter):
        if math.hypot(*f) <= target:
            return x, k, math.hypot(*f)
        jac = _jacobian(cfg, x, k, 1e-4 * dx, 1e-4 * dk)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        norm = math.hypot(*f)
        while lam > 1e-4:
            xn, kn = x + lam * step[0], k + lam * step[1]
            fn = np.array(current(cfg, xn, kn), float)
            if math.hypot(*fn) < norm:
                break
            lam *= 0.5
        else:
            return None
        x, k, f = xn, kn, fn
        if abs(x - x0) > 2 * dx or abs(k - k0) > 2 * dk:
            return None
    return (x, k, math.hypot(*f)) if math.hypot(*f) <= target else None


def _classify(cfg, x, k, dx, dk, loops: int = 16):
    th = 2 * math.pi * np.arange(loops) / loops
    lx = x + 2 * dx * np.cos(th)
    lk = k + 2 * dk * np.sin(th)
    jx, jk = current(cfg, lx, lk)
    index = int(round(_angle_sum(jx, jk)))
    jac = _jacobian(cfg, x, k, 0.5 * dx, 0.5 * dk)
    det = float(np.linalg.det(jac))
    curl = float(jac[1, 0] - jac[0, 1])
    if index == 1 and det > 0:
        cls = Classification.VORTEX_CCW if curl > 0 else Classification.VORTEX_CW
    elif index == -1 and det < 0:
        cls = Classification.SADDLE
    else:
        cls = Classification.SEPARATRIX_NODE
    return cls, index, det, curl


def _sign_change(v: np.ndarray) -> np.ndarray:
    """Cells (i, j) whose four corner values do not share a strict sign."""
    c = np.stack([v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]])
    return (c.max(axis=0) >= 0) & (c.min(axis=0) <= 0)


def find_stagnation_points(cfg: SystemConfig, grid: PhaseGrid, threads: int | None = None,
                           tol: float = 1e-9, significance: float = 1e-6) -> list[StagnationPoint]:
    """Joint zeros of the Wigner current on ``grid``.

    Cells where both components change sign are refined by damped Newton
    to |J| <= tol * max|J|. Cells whose corner magnitudes all fall below
    ``significance * max|J|`` are skipped: there the fields are at the level
    of their own rounding error and sign patterns carry no information.
    Points closer than one cell are merged with a warning.
    """
    X, K = grid.mesh()
    jx = map_nodes(lambda x, k: current(cfg, x, k)[0], X, K, threads=threads)
    jk = map_nodes(lambda x, k: current(cfg, x, k)[1], X, K, threads=threads)
    mag = np.hypot(jx, jk)
    scale = float(mag.max())
    if scale == 0:
        return []
    cells = _sign_change(jx) & _sign_change(jk)
    corner_max = np.maximum.reduce([mag[:-1, :-1], mag[1:, :-1], mag[:-1, 1:], mag[1:, 1:]])
    cells &= corner_max >= significance * scale
    if not cfg.bounce:
        cells &= X[:-1, :-1] > 0
    dx, dk = grid.dx, grid.dk
    found = []
    for i, j in np.argwhere(cells):
        x0 = X[i, j] + 0.5 * dx
        k0 = K[i, j] + 0.5 * dk
        res = _newton(cfg, x0, k0, dx, dk, tol * scale)
        if res is None:
            continue
        x, k, r = res
        if not cfg.bounce and x <= 0:
            continue
        found.append((x, k, r))
    # neighbouring cells often converge onto one root: drop exact repeats
    # silently, merge distinct roots closer than a cell with a warning
    points: list[list] = []
    for x, k, r in found:
        for p in points:
            ddx, ddk = abs(p[0] - x), abs(p[1] - k)
            if ddx < dx and ddk < dk:
                if ddx > 1e-2 * dx or ddk > 1e-2 * dk:
                    p[3] += 1
                break
        else:
            points.append([x, k, r, 1])
    out = []
    for x, k, r, mult in points:
        if mult > 1:
            warnings.warn(f"merged {mult} candidates into the stagnation point at "
                          f"(x={x:.6g}, k={k:.6g})", RuntimeWarning, stacklevel=2)
        cls, index, det, curl = _classify(cfg, x, k, dx, dk)
        out.append(StagnationPoint(float(x), float(k), cls, _WINDING[cls], index, float(r / scale),
                                   det, curl, mult))
    out.sort(key=lambda p: (p.x, p.k))
    return out
