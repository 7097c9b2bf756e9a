"""Model Riemannian charts and pointwise curvature data.

A chart is a coordinate box with symbolic metric entries.  Christoffel
symbols and their derivatives are assembled by exact symbolic
differentiation of the metric and evaluated numerically at points; the
curvature tensor, Ricci tensor and scalar curvature follow.

Sign convention, fixed once and recorded in CLI reports:

    R(X, Y, Z, W) = g(nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z, W)
    K(X, Y)       = R(X, Y, Y, X) / (|X|^2 |Y|^2 - g(X, Y)^2)

With this choice the round sphere of curvature C has K = +C, the
constant-curvature tensor is R_ijkl = C (g_il g_jk - g_ik g_jl), and
Ric = (n-1) C g.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import (
    Expr, Num, add, differentiate, div, evaluate_on, exp, mul, neg, num,
    powi, sqrt, sub, var,
)

__all__ = [
    "Axis", "MetricChart", "CurvatureAtPoint", "CONVENTIONS",
    "make_flat_torus", "make_round_sphere", "make_poincare_ball",
    "make_conformally_flat", "curvature_at", "curvature_batch",
    "curvature_operator_at", "sectional_curvature",
]

CONVENTIONS = {
    "curvature_sign":
        "R(X,Y,Z,W) = g(nabla_X nabla_Y Z - nabla_Y nabla_X Z"
        " - nabla_[X,Y] Z, W); round sphere has K = +C",
    "sectional": "K(X,Y) = R(X,Y,Y,X) / (|X|^2 |Y|^2 - g(X,Y)^2)",
    "form_inner_product": "sum over strictly increasing multi-indices",
    "orientation": "dx1 ^ ... ^ dxn is positively oriented",
}


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    periodic: bool = False

    @property
    def span(self) -> float:
        return self.hi - self.lo


@dataclass
class CurvatureAtPoint:
    """Curvature data at one point: Gamma[m,j,k], R[i,j,k,l] covariant,
    Ricci, scalar curvature, and the metric/inverse used to build them."""
    point: np.ndarray
    metric: np.ndarray
    inverse_metric: np.ndarray
    christoffel: np.ndarray      # Gamma^m_{jk} indexed [m, j, k]
    riemann: np.ndarray          # R_{ijkl} = g(R(d_i, d_j) d_k, d_l)
    ricci: np.ndarray
    scalar: float


class MetricChart:
    """Coordinate box with symbolic metric entries.

    Instances are immutable after construction; derived symbolic data
    (inverse metric, Christoffel symbols, their derivatives) is built
    lazily and cached.
    """

    def __init__(self, n, axes, g, label="custom", curvature=None,
                 conformally_flat=None):
        if n < 1:
            raise ValueError(f"dimension must be >= 1, got {n}")
        if len(axes) != n:
            raise ValueError("need one axis interval per dimension")
        self.n = int(n)
        self.axes = tuple(axes)
        rows = []
        for i in range(n):
            if len(g[i]) != n:
                raise ValueError("metric must be an n x n matrix of expressions")
            rows.append(tuple(g[i]))
        self.g = tuple(rows)
        for i in range(n):
            for j in range(i):
                if self.g[i][j] != self.g[j][i]:
                    raise ValueError("metric entries must be symmetric")
        self.label = label
        self.curvature = curvature
        if conformally_flat is None:
            conformally_flat = n == 2 and self._looks_conformal()
        self.conformally_flat = bool(conformally_flat)
        self._cache: dict = {}

    # -- basic queries ------------------------------------------------------

    @property
    def is_torus(self) -> bool:
        return all(a.periodic for a in self.axes)

    @property
    def periods(self) -> tuple[float, ...]:
        if not self.is_torus:
            raise ValueError(f"chart '{self.label}' is not periodic")
        return tuple(a.span for a in self.axes)

    def _looks_conformal(self) -> bool:
        diag = self.g[0][0]
        for i in range(self.n):
            for j in range(self.n):
                if i == j:
                    if self.g[i][j] != diag:
                        return False
                elif self.g[i][j] != Num(0.0):
                    return False
        return True

    def sample_points(self, count, seed=0, margin=0.08) -> np.ndarray:
        """Seeded interior sample points, inset from the box boundary."""
        rng = np.random.default_rng(seed)
        cols = []
        for a in self.axes:
            inset = margin * a.span
            cols.append(rng.uniform(a.lo + inset, a.hi - inset, size=count))
        return np.column_stack(cols)

    def contains(self, point) -> bool:
        point = np.asarray(point, dtype=float)
        for x, a in zip(point, self.axes):
            if a.periodic:
                continue
            if not (a.lo < x < a.hi):
                return False
        return True

    def require_interior(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        for row in pts:
            if not self.contains(row):
                raise ValueError(f"point {row.tolist()} outside chart domain")
        return pts

    # -- symbolic derived data ----------------------------------------------

    def det_expr(self) -> Expr:
        if "det" not in self._cache:
            self._cache["det"] = _det([list(row) for row in self.g])
        return self._cache["det"]

    def sqrt_det_expr(self) -> Expr:
        if "sqrtdet" not in self._cache:
            self._cache["sqrtdet"] = sqrt(self.det_expr())
        return self._cache["sqrtdet"]

    def inverse_exprs(self):
        """Inverse metric as expressions, via adjugate over determinant."""
        if "inv" not in self._cache:
            n, det = self.n, self.det_expr()
            inv = [[None] * n for _ in range(n)]
            for i in range(n):
                for j in range(n):
                    minor = _det(_delete(self.g, j, i))
                    cof = minor if (i + j) % 2 == 0 else neg(minor)
                    inv[i][j] = div(cof, det)
            self._cache["inv"] = tuple(tuple(row) for row in inv)
        return self._cache["inv"]

    def christoffel_exprs(self):
        """Gamma^m_{jk} = 1/2 g^{ml} (d_j g_lk + d_k g_lj - d_l g_jk)."""
        if "gamma" not in self._cache:
            n, inv = self.n, self.inverse_exprs()
            dg = [[[differentiate(self.g[a][b], c + 1) for c in range(n)]
                   for b in range(n)] for a in range(n)]
            gamma = np.empty((n, n, n), dtype=object)
            for m in range(n):
                for j in range(n):
                    for k in range(n):
                        total = Num(0.0)
                        for l in range(n):
                            bracket = sub(add(dg[l][k][j], dg[l][j][k]),
                                          dg[j][k][l])
                            total = add(total, mul(inv[m][l], bracket))
                        gamma[m, j, k] = mul(num(0.5), total)
            self._cache["gamma"] = gamma
        return self._cache["gamma"]

    def christoffel_derivative_exprs(self):
        """d_i Gamma^m_{jk}, indexed [i, m, j, k]."""
        if "dgamma" not in self._cache:
            n = self.n
            gamma = self.christoffel_exprs()
            dgamma = np.empty((n, n, n, n), dtype=object)
            for i in range(n):
                for m in range(n):
                    for j in range(n):
                        for k in range(n):
                            dgamma[i, m, j, k] = differentiate(
                                gamma[m, j, k], i + 1)
            self._cache["dgamma"] = dgamma
        return self._cache["dgamma"]

    # -- numeric evaluation ---------------------------------------------------

    def metric_at(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return _eval_grid(self.g, pts)

    def inverse_metric_at(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.linalg.inv(self.metric_at(pts))

    def sqrt_det_at(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return evaluate_on(self.sqrt_det_expr(), pts)

    def christoffel_at(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return _eval_grid(self.christoffel_exprs(), pts)

    def christoffel_derivative_at(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return _eval_grid(self.christoffel_derivative_exprs(), pts)


def _delete(matrix, row, col):
    return [[matrix[i][j] for j in range(len(matrix)) if j != col]
            for i in range(len(matrix)) if i != row]


def _det(matrix) -> Expr:
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    total = Num(0.0)
    for j in range(n):
        if matrix[0][j] == Num(0.0):
            continue
        minor = _det(_delete(matrix, 0, j))
        term = mul(matrix[0][j], minor)
        total = add(total, term) if j % 2 == 0 else sub(total, term)
    return total


def _eval_grid(exprs, pts) -> np.ndarray:
    """Evaluate a nested structure of expressions at pts (m, n)."""
    arr = np.asarray(exprs, dtype=object)
    out = np.empty((pts.shape[0],) + arr.shape)
    for idx in np.ndindex(arr.shape):
        out[(slice(None),) + idx] = evaluate_on(arr[idx], pts)
    return out


# ---------------------------------------------------------------------------
# model charts

def make_flat_torus(n: int, periods=None) -> MetricChart:
    """Flat torus: identity metric, all axes periodic."""
    if n < 2:
        raise ValueError(f"torus dimension must be >= 2, got {n}")
    if periods is None:
        periods = (2 * math.pi,) * n
    periods = tuple(float(p) for p in periods)
    if len(periods) != n or any(p <= 0 for p in periods):
        raise ValueError("need one positive period per axis")
    axes = [Axis(0.0, p, periodic=True) for p in periods]
    g = [[Num(1.0) if i == j else Num(0.0) for j in range(n)] for i in range(n)]
    return MetricChart(n, axes, g, label="flat-torus", curvature=0.0,
                       conformally_flat=True)


def _conformal_radius_expr(n: int, C: float) -> Expr:
    rho2 = powi(var(1), 2)
    for i in range(2, n + 1):
        rho2 = add(rho2, powi(var(i), 2))
    return div(num(4.0), powi(add(num(1.0), mul(num(C), rho2)), 2))


def _as_axes(n, box):
    """Box given as a half-width or as per-axis (lo, hi) intervals."""
    if np.isscalar(box):
        return [Axis(-float(box), float(box)) for _ in range(n)]
    axes = [Axis(float(lo), float(hi)) for lo, hi in box]
    if len(axes) != n:
        raise ValueError("need one interval per axis")
    return axes


def _constant_curvature_chart(n, C, box, label):
    factor = _conformal_radius_expr(n, C)
    axes = _as_axes(n, box)
    g = [[factor if i == j else Num(0.0) for j in range(n)] for i in range(n)]
    return MetricChart(n, axes, g, label=label, curvature=float(C),
                       conformally_flat=True)


def make_round_sphere(n: int, C: float, box=None) -> MetricChart:
    """Stereographic chart of the round sphere of sectional curvature C > 0.

    Metric 4 |dx|^2 / (1 + C |x|^2)^2 on a coordinate box.
    """
    if C <= 0:
        raise ValueError(f"sphere curvature must be positive, got {C}")
    if box is None:
        box = 0.8 / math.sqrt(n * C)
    return _constant_curvature_chart(n, C, box, "round-sphere")


def make_poincare_ball(n: int, C: float, box=None) -> MetricChart:
    """Conformal ball chart of constant sectional curvature C < 0.

    Metric 4 |dx|^2 / (1 + C |x|^2)^2; the box stays inside the radius
    where the conformal factor is finite.
    """
    if C >= 0:
        raise ValueError(f"ball curvature must be negative, got {C}")
    if box is None:
        box = 0.55 / math.sqrt(n * abs(C))
    axes = _as_axes(n, box)
    reach = sum(max(a.lo ** 2, a.hi ** 2) for a in axes)
    if reach >= 1.0 / abs(C):
        raise ValueError("box reaches the conformal boundary")
    return _constant_curvature_chart(n, C, axes_to_box(axes), "poincare-ball")


def axes_to_box(axes):
    return [(a.lo, a.hi) for a in axes]


def make_conformally_flat(n: int, f: Expr, box=1.0,
                          label="conformally-flat") -> MetricChart:
    """Metric e^{2 f} * identity on a coordinate box."""
    factor = exp(mul(num(2.0), f))
    axes = [Axis(-box, box) for _ in range(n)]
    g = [[factor if i == j else Num(0.0) for j in range(n)] for i in range(n)]
    curvature = 0.0 if isinstance(f, Num) else None
    return MetricChart(n, axes, g, label=label, curvature=curvature,
                       conformally_flat=True)


# ---------------------------------------------------------------------------
# curvature assembly

def curvature_batch(chart: MetricChart, pts):
    """Vectorized curvature data at many points.

    Returns a dict with arrays g (m,n,n), ginv, gamma (m,n,n,n),
    riemann (m,n,n,n,n) covariant, ricci (m,n,n) and scalar (m,).
    """
    pts = chart.require_interior(pts)
    g = chart.metric_at(pts)
    ginv = np.linalg.inv(g)
    gamma = chart.christoffel_at(pts)
    dgamma = chart.christoffel_derivative_at(pts)

    # R^l_{ijk} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik}
    #             + Gamma^m_{jk} Gamma^l_{im} - Gamma^m_{ik} Gamma^l_{jm}
    r_up = (np.einsum("piljk->plijk", dgamma[:, :, :, :, :])
            - np.einsum("pjlik->plijk", dgamma)
            + np.einsum("pmjk,plim->plijk", gamma, gamma)
            - np.einsum("pmik,pljm->plijk", gamma, gamma))
    riemann = np.einsum("pwl,plijk->pijkw", g, r_up)
    ricci = np.einsum("pil,pijkl->pjk", ginv, riemann)
    scalar = np.einsum("pjk,pjk->p", ginv, ricci)
    return {"points": pts, "g": g, "ginv": ginv, "gamma": gamma,
            "riemann": riemann, "ricci": ricci, "scalar": scalar}


def curvature_at(chart: MetricChart, point) -> CurvatureAtPoint:
    """Assemble Gamma, R, Ric and s at one interior point."""
    data = curvature_batch(chart, point)
    return CurvatureAtPoint(point=data["points"][0], metric=data["g"][0],
                            inverse_metric=data["ginv"][0],
                            christoffel=data["gamma"][0],
                            riemann=data["riemann"][0],
                            ricci=data["ricci"][0],
                            scalar=float(data["scalar"][0]))


def sectional_curvature(curv: CurvatureAtPoint, X, Y) -> float:
    """K(X, Y) from assembled curvature data at a point."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    g = curv.metric
    numerator = np.einsum("ijkw,i,j,k,w->", curv.riemann, X, Y, Y, X)
    gram = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
    if gram <= 0:
        raise ValueError("X and Y do not span a 2-plane")
    return float(numerator / gram)


def curvature_operator_at(chart: MetricChart, point) -> np.ndarray:
    """Matrix of the symmetric curvature operator on 2-form components.

    Built in the orthonormal frame from the Cholesky factor of g(p);
    entry ((a,b), (c,d)) is R(e_a, e_b, e_d, e_c).
    """
    curv = curvature_at(chart, point)
    n = chart.n
    L = np.linalg.cholesky(curv.metric)
    frame = np.linalg.inv(L.T)  # columns are orthonormal frame vectors
    pairs = list(itertools.combinations(range(n), 2))
    R_frame = np.einsum("ijkw,ia,jb,kc,wd->abcd", curv.riemann,
                        frame, frame, frame, frame)
    op = np.empty((len(pairs), len(pairs)))
    for row, (a, b) in enumerate(pairs):
        for col, (c, d) in enumerate(pairs):
            op[row, col] = R_frame[a, b, d, c]
    return op
