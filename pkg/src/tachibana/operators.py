"""Differential operators on forms: d, d*, nabla, the rough, Hodge and
Tachibana Laplacians, the Weitzenboeck curvature term, and the three
first-order basis operators D1, D2, D3.

Exterior derivative and codifferential are built symbolically (so they
compose), while the second-order covariant machinery is assembled
numerically at sample points from exact symbolic jets of the form and of
the Christoffel symbols.  Nothing is approximated by finite differences.

Conventions: d* is the covariant divergence,
(d* w)_{i2..ir} = -g^{jk} (nabla_j w)_{k i2..ir}, which on the torus makes
<d a, b> = <a, d* b> exact in the Fourier basis.  The Tachibana
Laplacian is

    box = 1/(r(r+1)) * (rough - 1/(r+1) d* d - 1/(n-r+1) d d*)

whose kernel consists of the conformal Killing r-forms; the second route
expresses the same operator through the Hodge Laplacian and the
Weitzenboeck term and must agree pointwise with the first.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .expr import Expr, Num, add, differentiate, evaluate_on, mul, num, sub
from .forms import (
    ExprForm, FourierForm, index_position, multi_indices, raised_gram,
    sort_with_sign,
)
from .geometry import MetricChart, curvature_batch

__all__ = [
    "OperatorResult", "exterior_d", "codifferential", "covariant_derivative",
    "rough_laplacian", "hodge_laplacian", "weitzenbock_term",
    "tachibana_laplacian", "tachibana_values", "apply_D", "tensor_inner",
    "form_values",
]

D_NAMES = ("D1", "D2", "D3")


@dataclass
class OperatorResult:
    """Operator output plus a provenance tag naming operator and route."""
    output: object
    operator: str
    route: str = ""


# ---------------------------------------------------------------------------
# index bookkeeping tables

@lru_cache(maxsize=None)
def _replace_table(n: int, r: int):
    """[ci][slot][m-1] -> (sign, cj) for replacing one index, or None."""
    keys = multi_indices(n, r)
    pos = index_position(n, r)
    table = []
    for I in keys:
        rows = []
        for a in range(r):
            entries = []
            for m in range(1, n + 1):
                sign, J = sort_with_sign(I[:a] + (m,) + I[a + 1:])
                entries.append(None if J is None else (sign, pos[J]))
            rows.append(entries)
        table.append(rows)
    return table


@lru_cache(maxsize=None)
def _embed_table(n: int, r: int):
    """[j-1][ci] -> (sign, cK) embedding (j, I) into degree r+1 storage."""
    keys = multi_indices(n, r)
    pos = index_position(n, r + 1)
    table = []
    for j in range(1, n + 1):
        row = []
        for I in keys:
            sign, K = sort_with_sign((j,) + I)
            row.append(None if K is None else (sign, pos[K]))
        table.append(row)
    return table


# ---------------------------------------------------------------------------
# numeric jets

class GeometryJet:
    """Metric, Christoffel symbols and their derivatives at sample points."""

    def __init__(self, chart: MetricChart, pts):
        pts = chart.require_interior(pts)
        self.chart = chart
        self.pts = pts
        self.g = chart.metric_at(pts)
        self.ginv = np.linalg.inv(self.g)
        self.gamma = chart.christoffel_at(pts)
        self.dgamma = chart.christoffel_derivative_at(pts)


def form_values(form, pts) -> np.ndarray:
    return form.values(pts)


def _form_jet(form: ExprForm, pts, order=1):
    """Component values and exact partials: vals (m,C), d1 (m,n,C),
    and for order 2 also d2 (m,n,n,C)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    chart = form.chart
    n = chart.n
    keys = multi_indices(n, form.degree)
    pos = index_position(n, form.degree)
    m = pts.shape[0]
    vals = np.zeros((m, len(keys)))
    d1 = np.zeros((m, n, len(keys)))
    d2 = np.zeros((m, n, n, len(keys))) if order >= 2 else None
    for I, e in form.components.items():
        ci = pos[I]
        vals[:, ci] = evaluate_on(e, pts)
        firsts = [differentiate(e, j + 1) for j in range(n)]
        for j, de in enumerate(firsts):
            d1[:, j, ci] = evaluate_on(de, pts)
            if order >= 2:
                for k in range(j, n):
                    dd = differentiate(de, k + 1)
                    v = evaluate_on(dd, pts)
                    d2[:, j, k, ci] = v
                    d2[:, k, j, ci] = v
    return vals, d1, d2


# ---------------------------------------------------------------------------
# exterior derivative

def exterior_d(form):
    """Exterior derivative; degree r -> r + 1, exact per Fourier mode."""
    if form.degree >= form.chart.n:
        raise ValueError("exterior derivative undefined on top-degree forms")
    if isinstance(form, FourierForm):
        return _d_fourier(form)
    return _d_expr(form)


def _d_expr(form: ExprForm) -> ExprForm:
    chart, r = form.chart, form.degree
    n = chart.n
    comps: dict = {}
    for K in multi_indices(n, r + 1):
        total = Num(0.0)
        for a, ka in enumerate(K):
            rest = K[:a] + K[a + 1:]
            e = form.component(rest)
            if e == Num(0.0):
                continue
            term = differentiate(e, ka)
            if a % 2 == 1:
                term = mul(num(-1.0), term)
            total = add(total, term)
        if total != Num(0.0):
            comps[K] = total
    return ExprForm(chart, r + 1, comps)


@lru_cache(maxsize=None)
def _wedge_structure(n: int, r: int):
    """Entries (row, col, slot_index) of exterior multiplication at degree r."""
    rows = multi_indices(n, r + 1)
    pos = index_position(n, r)
    out = []
    for row, K in enumerate(rows):
        for a, ka in enumerate(K):
            rest = K[:a] + K[a + 1:]
            out.append((row, pos[rest], ka - 1, (-1.0) ** a))
    return out


def wedge_matrix(n: int, r: int, kappa) -> np.ndarray:
    """Matrix of exterior multiplication by the covector kappa."""
    kappa = np.asarray(kappa, dtype=float)
    M = np.zeros((len(multi_indices(n, r + 1)), len(multi_indices(n, r))))
    for row, col, axis, sign in _wedge_structure(n, r):
        M[row, col] += sign * kappa[axis]
    return M


def _d_fourier(form: FourierForm) -> FourierForm:
    n, r = form.chart.n, form.degree

    def mapper(k, vec):
        return 1j * wedge_matrix(n, r, form.kappa(k)) @ vec

    return form.map_coeffs(mapper, degree=r + 1)


# ---------------------------------------------------------------------------
# codifferential

def codifferential(form, route="divergence"):
    """Formal adjoint of d; degree r -> r - 1.

    ExprForm routes: "divergence" (covariant divergence, primary) or
    "star" (star-conjugation of d); the two agree pointwise.
    """
    if form.degree == 0:
        raise ValueError("codifferential undefined on 0-forms")
    if isinstance(form, FourierForm):
        return _codiff_fourier(form)
    if route == "divergence":
        return _codiff_expr_divergence(form)
    if route == "star":
        return _codiff_expr_star(form)
    raise ValueError(f"unknown codifferential route '{route}'")


def _cov_component_expr(form: ExprForm, j: int, I) -> Expr:
    """(nabla_j w)_I for increasing I, as an expression."""
    chart = form.chart
    gamma = chart.christoffel_exprs()
    e = differentiate(form.component(I), j)
    for a, ia in enumerate(I):
        for m in range(1, chart.n + 1):
            coeff = gamma[m - 1, j - 1, ia - 1]
            if coeff == Num(0.0):
                continue
            target = form.component_signed(I[:a] + (m,) + I[a + 1:])
            if target == Num(0.0):
                continue
            e = sub(e, mul(coeff, target))
    return e


def _codiff_expr_divergence(form: ExprForm) -> ExprForm:
    chart, r = form.chart, form.degree
    n = chart.n
    ginv = chart.inverse_exprs()
    comps: dict = {}
    for Ip in multi_indices(n, r - 1):
        total = Num(0.0)
        for k in range(1, n + 1):
            sign, I = sort_with_sign((k,) + Ip)
            if I is None:
                continue
            for j in range(1, n + 1):
                coeff = ginv[j - 1][k - 1]
                if coeff == Num(0.0):
                    continue
                term = mul(coeff, _cov_component_expr(form, j, I))
                if sign < 0:
                    term = mul(num(-1.0), term)
                total = sub(total, term)  # overall minus sign
        if total != Num(0.0):
            comps[Ip] = total
    return ExprForm(chart, r - 1, comps)


def _codiff_expr_star(form: ExprForm) -> ExprForm:
    from .forms import hodge_star
    n, r = form.chart.n, form.degree
    sign = (-1.0) ** (n * (r + 1) + 1)
    out = hodge_star(exterior_d(hodge_star(form)))
    return out.scaled(sign)


def _codiff_fourier(form: FourierForm) -> FourierForm:
    n, r = form.chart.n, form.degree

    def mapper(k, vec):
        return -1j * wedge_matrix(n, r - 1, form.kappa(k)).T @ vec

    return form.map_coeffs(mapper, degree=r - 1)


# ---------------------------------------------------------------------------
# covariant derivative and rough Laplacian (pointwise numeric)

def covariant_derivative(form: ExprForm, pts, geo: GeometryJet | None = None):
    """(nabla w)_{j, I} at points: array of shape (m, n, C(n, r))."""
    chart = form.chart
    geo = geo or GeometryJet(chart, pts)
    n, r = chart.n, form.degree
    vals, d1, _ = _form_jet(form, geo.pts, order=1)
    out = d1.copy()
    table = _replace_table(n, r)
    keys = multi_indices(n, r)
    for ci, I in enumerate(keys):
        for a, ia in enumerate(I):
            for m in range(1, n + 1):
                ent = table[ci][a][m - 1]
                if ent is None:
                    continue
                sign, cj = ent
                out[:, :, ci] -= sign * geo.gamma[:, m - 1, :, ia - 1] \
                    * vals[:, None, cj]
    return out


def _second_covariant(form: ExprForm, geo: GeometryJet):
    """(nabla^2 w)_{j, k, I} at points: shape (m, n, n, C)."""
    chart = form.chart
    n, r = chart.n, form.degree
    vals, d1, d2 = _form_jet(form, geo.pts, order=2)
    nabla = covariant_derivative(form, geo.pts, geo=geo)
    keys = multi_indices(n, r)
    table = _replace_table(n, r)

    # d_j (nabla_k w)_I from exact jets of w and Gamma
    dn = d2.copy()
    for ci, I in enumerate(keys):
        for a, ia in enumerate(I):
            for m in range(1, n + 1):
                ent = table[ci][a][m - 1]
                if ent is None:
                    continue
                sign, cj = ent
                dn[:, :, :, ci] -= sign * (
                    geo.dgamma[:, :, m - 1, :, ia - 1] * vals[:, None, None, cj]
                    + geo.gamma[:, None, m - 1, :, ia - 1] * d1[:, :, None, cj])

    # subtract connection action on the first slot and on the form slots
    out = dn - np.einsum("pmjk,pmc->pjkc", geo.gamma, nabla)
    for ci, I in enumerate(keys):
        for a, ia in enumerate(I):
            for m in range(1, n + 1):
                ent = table[ci][a][m - 1]
                if ent is None:
                    continue
                sign, cj = ent
                out[:, :, :, ci] -= sign * (
                    geo.gamma[:, m - 1, :, ia - 1][:, :, None]
                    * nabla[:, :, cj][:, None, :])
    return out


def rough_laplacian(form: ExprForm, pts, geo: GeometryJet | None = None):
    """Trace Laplacian nabla* nabla at points: shape (m, C(n, r))."""
    geo = geo or GeometryJet(form.chart, pts)
    second = _second_covariant(form, geo)
    return -np.einsum("pjk,pjkc->pc", geo.ginv, second)


def rough_laplacian_fourier(form: FourierForm) -> FourierForm:
    def mapper(k, vec):
        kappa = form.kappa(k)
        return float(kappa @ kappa) * vec

    return form.map_coeffs(mapper)


# ---------------------------------------------------------------------------
# Hodge Laplacian

def hodge_laplacian(form):
    """Delta = d d* + d* d (single composition at the edge degrees)."""
    r, n = form.degree, form.chart.n
    if r == 0:
        return codifferential(exterior_d(form))
    if r == n:
        return exterior_d(codifferential(form))
    return codifferential(exterior_d(form)) + exterior_d(codifferential(form))


# ---------------------------------------------------------------------------
# Weitzenboeck curvature term

def weitzenbock_term(form: ExprForm, pts, curv=None):
    """Curvature term F_r with Delta = rough + F_r, at points.

    F_r(w)_I = sum_a Ric_{i_a}{}^m w_{I[a->m]}
               + sum_{a<b} R^{mk}{}_{i_a i_b} w_{I[a->m, b->k]}

    The sign of the curvature-tensor contraction is calibrated so that
    constant-curvature charts give F_r = r (n - r) C w.
    """
    chart = form.chart
    n, r = chart.n, form.degree
    if r < 1 or r > n - 1:
        raise ValueError("Weitzenboeck term defined for 1 <= r <= n-1")
    data = curv or curvature_batch(chart, pts)
    pts = data["points"]
    vals = form.values(pts)
    ginv = data["ginv"]
    ric_mixed = np.einsum("pil,plm->pim", data["ricci"], ginv)
    r_upup = np.einsum("pma,pkb,pabcd->pmkcd", ginv, ginv, data["riemann"])

    keys = multi_indices(n, r)
    pos = index_position(n, r)
    table = _replace_table(n, r)
    out = np.zeros_like(vals)
    for ci, I in enumerate(keys):
        for a, ia in enumerate(I):
            for m in range(1, n + 1):
                ent = table[ci][a][m - 1]
                if ent is None:
                    continue
                sign, cj = ent
                out[:, ci] += sign * ric_mixed[:, ia - 1, m - 1] * vals[:, cj]
        for a, b in itertools.combinations(range(r), 2):
            ia, ib = I[a], I[b]
            for m in range(1, n + 1):
                for k in range(1, n + 1):
                    J = list(I)
                    J[a], J[b] = m, k
                    sign, K = sort_with_sign(tuple(J))
                    if K is None:
                        continue
                    out[:, ci] += sign \
                        * r_upup[:, m - 1, k - 1, ia - 1, ib - 1] \
                        * vals[:, pos[K]]
    return out


# ---------------------------------------------------------------------------
# Tachibana Laplacian

def _tachibana_guard(form):
    n, r = form.chart.n, form.degree
    if r < 1 or r > n - 1:
        raise ValueError("Tachibana Laplacian defined for 1 <= r <= n-1")
    return n, r


def tachibana_values(form: ExprForm, pts, route="via-4.1"):
    """Tachibana Laplacian at points: shape (m, C(n, r)).

    Routes: "via-4.1" through the rough Laplacian, "via-5.2" through the
    Hodge Laplacian minus the Weitzenboeck term.  Both agree pointwise.
    """
    n, r = _tachibana_guard(form)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    dsd = codifferential(exterior_d(form)).values(pts)
    dds = exterior_d(codifferential(form)).values(pts)
    if route == "via-4.1":
        core = rough_laplacian(form, pts)
    elif route == "via-5.2":
        core = hodge_laplacian(form).values(pts) - weitzenbock_term(form, pts)
    else:
        raise ValueError(f"unknown Tachibana route '{route}'")
    core = core - dsd / (r + 1) - dds / (n - r + 1)
    return core / (r * (r + 1))


def tachibana_laplacian(form: FourierForm, route="via-4.1") -> OperatorResult:
    """Tachibana Laplacian of a band-limited torus form (exact per mode)."""
    n, r = _tachibana_guard(form)
    dsd = codifferential(exterior_d(form))
    dds = exterior_d(codifferential(form))
    if route == "via-4.1":
        core = rough_laplacian_fourier(form)
    elif route == "via-5.2":
        core = hodge_laplacian(form)  # flat torus: Weitzenboeck term is zero
    else:
        raise ValueError(f"unknown Tachibana route '{route}'")
    out = (core + dsd.scaled(-1.0 / (r + 1))
           + dds.scaled(-1.0 / (n - r + 1))).scaled(1.0 / (r * (r + 1)))
    return OperatorResult(output=out, operator="tachibana", route=route)


# ---------------------------------------------------------------------------
# basis operators D1, D2, D3

def apply_D(which: str, form: ExprForm, pts, geo: GeometryJet | None = None):
    """One of the three basis operators as a (1, r)-tensor at points.

    D1 = antisymmetric part of nabla (scaled d), D2 = trace part (scaled
    g wedge d*), D3 = the remainder; D1 + D2 + D3 = nabla exactly and the
    three parts are pointwise orthogonal.  Shape (m, n, C(n, r)).
    """
    if which not in D_NAMES:
        raise ValueError(f"operator must be one of {D_NAMES}")
    chart = form.chart
    n, r = chart.n, form.degree
    if r < 1 or r > n - 1:
        raise ValueError("basis operators defined for 1 <= r <= n-1")
    geo = geo or GeometryJet(chart, pts)
    if which == "D1":
        return _d1_part(form, geo)
    if which == "D2":
        return _d2_part(form, geo)
    nabla = covariant_derivative(form, geo.pts, geo=geo)
    return nabla - _d1_part(form, geo) - _d2_part(form, geo)


def _d1_part(form: ExprForm, geo: GeometryJet):
    chart = form.chart
    n, r = chart.n, form.degree
    dvals = exterior_d(form).values(geo.pts)
    table = _embed_table(n, r)
    keys = multi_indices(n, r)
    out = np.zeros((geo.pts.shape[0], n, len(keys)))
    for j in range(n):
        for ci in range(len(keys)):
            ent = table[j][ci]
            if ent is None:
                continue
            sign, cK = ent
            out[:, j, ci] = sign * dvals[:, cK]
    return out / (r + 1)


def _d2_part(form: ExprForm, geo: GeometryJet):
    chart = form.chart
    n, r = chart.n, form.degree
    theta = codifferential(form).values(geo.pts)
    pos = index_position(n, r - 1)
    keys = multi_indices(n, r)
    out = np.zeros((geo.pts.shape[0], n, len(keys)))
    for ci, I in enumerate(keys):
        for a, ia in enumerate(I):
            rest = I[:a] + I[a + 1:]
            sign = (-1.0) ** a
            out[:, :, ci] += sign * geo.g[:, :, ia - 1] \
                * theta[:, None, pos[rest]]
    return -out / (n - r + 1)


def tensor_inner(T, S, chart: MetricChart, pts, degree: int):
    """Pointwise inner product of (1, r)-tensor value arrays (m, n, C)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    ginv = chart.inverse_metric_at(pts)
    gram = raised_gram(ginv, chart.n, degree)
    return np.einsum("pjk,pab,pja,pkb->p", ginv, gram, T, S)
