"""Constructed test forms on the model charts.

Curved-chart candidates come from ambient symmetry: restrictions of
ambient linear functions give closed conformal Killing forms, rotation
generators give Killing forms, and a radial potential on the conformal
ball gives a locally harmonic form.  Class membership of every candidate
is checked numerically before use, never assumed.
"""

from __future__ import annotations

import math

import numpy as np

from .expr import (
    Expr, add, cos, differentiate, div, mul, num, powi, sin, sqrt, sub, var,
)
from .forms import ExprForm, multi_indices, wedge
from .geometry import MetricChart, make_poincare_ball

__all__ = [
    "sphere_embedding", "sphere_closed_ck_form", "sphere_killing_form",
    "offset_ball_chart", "ball_radial_harmonic_form",
    "planar_harmonic_gradient", "random_trig_form", "constant_form",
    "coordinate_wedge_forms",
]


def _radius_squared(n: int) -> Expr:
    rho2 = powi(var(1), 2)
    for i in range(2, n + 1):
        rho2 = add(rho2, powi(var(i), 2))
    return rho2


def sphere_embedding(chart: MetricChart) -> list[Expr]:
    """Coordinates of the ambient embedding of a stereographic sphere chart.

    y_i = 2 x_i / (1 + C |x|^2) for i <= n and
    y_{n+1} = C^{-1/2} (C |x|^2 - 1) / (C |x|^2 + 1); then |y|^2 = 1/C.
    """
    C = chart.curvature
    if C is None or C <= 0:
        raise ValueError("sphere embedding needs a constant curvature C > 0")
    n = chart.n
    denom = add(num(1.0), mul(num(C), _radius_squared(n)))
    ys = [div(mul(num(2.0), var(i)), denom) for i in range(1, n + 1)]
    numer = sub(mul(num(C), _radius_squared(n)), num(1.0))
    ys.append(mul(num(1.0 / math.sqrt(C)), div(numer, denom)))
    return ys


def sphere_closed_ck_form(chart: MetricChart, axis: int | None = None) -> ExprForm:
    """Closed conformal Killing 1-form d(y_axis) on a sphere chart.

    The restriction of an ambient linear function satisfies
    Hess f = -C f g, so its differential is closed, conformal Killing
    and not co-closed.
    """
    ys = sphere_embedding(chart)
    axis = chart.n + 1 if axis is None else axis
    f = ys[axis - 1]
    comps = {(j,): differentiate(f, j) for j in range(1, chart.n + 1)}
    return ExprForm(chart, 1, comps)


def sphere_killing_form(chart: MetricChart, a: int = 1, b: int = 2) -> ExprForm:
    """Killing 1-form dual to the rotation generator in the (y_a, y_b) plane."""
    ys = sphere_embedding(chart)
    ya, yb = ys[a - 1], ys[b - 1]
    comps = {}
    for j in range(1, chart.n + 1):
        comps[(j,)] = sub(mul(ya, differentiate(yb, j)),
                          mul(yb, differentiate(ya, j)))
    return ExprForm(chart, 1, comps)


def offset_ball_chart(n: int, C: float) -> MetricChart:
    """Conformal ball chart on an all-positive box, away from the origin.

    Needed for radial candidate forms that are singular at x = 0.
    """
    scale = 1.0 / math.sqrt(abs(C))
    box = [(0.18 * scale, 0.52 * scale)] * n
    return make_poincare_ball(n, C, box=box)


def ball_radial_harmonic_form(chart: MetricChart) -> ExprForm:
    """Locally harmonic (closed and co-closed) radial 1-form on a 3-dim
    conformal ball chart: w_j = x_j (1 + C |x|^2) / (2 |x|^3)."""
    C = chart.curvature
    if chart.n != 3 or C is None:
        raise ValueError("radial harmonic candidate is built for n = 3 "
                         "constant-curvature ball charts")
    rho2 = _radius_squared(3)
    rho3 = mul(rho2, sqrt(rho2))
    factor = div(add(num(1.0), mul(num(C), rho2)), mul(num(2.0), rho3))
    comps = {(j,): mul(var(j), factor) for j in range(1, 4)}
    return ExprForm(chart, 1, comps)


def planar_harmonic_gradient(chart: MetricChart) -> ExprForm:
    """d(x1^2 - x2^2) on a 2-dim conformal chart.

    The flat-harmonic potential stays harmonic because the codifferential
    on 1-forms is conformally invariant in dimension two.
    """
    if chart.n != 2:
        raise ValueError("planar harmonic gradient requires n = 2")
    return ExprForm(chart, 1, {(1,): mul(num(2.0), var(1)),
                               (2,): mul(num(-2.0), var(2))})


_TRIG_FREQS = (1, 2)


def _random_component(chart: MetricChart, rng) -> Expr:
    n = chart.n
    a = rng.uniform(-1.0, 1.0, size=4)
    i = int(rng.integers(1, n + 1))
    j = int(rng.integers(1, n + 1))
    if chart.is_torus:
        # integer frequencies keep the component periodic
        ki = int(rng.choice(_TRIG_FREQS))
        kj = int(rng.choice(_TRIG_FREQS))
        terms = [num(a[0]),
                 mul(num(a[1]), sin(mul(num(ki), var(i)))),
                 mul(num(a[2]), cos(mul(num(kj), var(j)))),
                 mul(num(a[3]), mul(sin(var(i)), cos(var(j))))]
    else:
        terms = [num(a[0]),
                 mul(num(a[1]), var(i)),
                 mul(num(a[2]), sin(var(j))),
                 mul(num(a[3]), mul(var(i), cos(var(j))))]
    total = terms[0]
    for t in terms[1:]:
        total = add(total, t)
    return total


def random_trig_form(chart: MetricChart, degree: int, seed: int = 0) -> ExprForm:
    """Seeded random polynomial/trig form; periodic components on tori."""
    rng = np.random.default_rng(seed)
    comps = {I: _random_component(chart, rng)
             for I in multi_indices(chart.n, degree)}
    return ExprForm(chart, degree, comps)


def constant_form(chart: MetricChart, I, value: float = 1.0) -> ExprForm:
    return ExprForm(chart, len(I), {tuple(I): num(value)})


def coordinate_wedge_forms(chart: MetricChart, h: int, degree: int) -> list[ExprForm]:
    """All wedges of the first h constant coordinate 1-forms, degree r.

    Returns the C(h, r) forms dx_{i1} ^ ... ^ dx_{ir} with indices <= h,
    built through the wedge product.
    """
    if not 1 <= degree <= h <= chart.n:
        raise ValueError("wedge construction requires 1 <= r <= h <= n")
    ones = {i: constant_form(chart, (i,)) for i in range(1, h + 1)}
    out = []
    for I in multi_indices(h, degree):
        form = ones[I[0]]
        for i in I[1:]:
            form = wedge(form, ones[i])
        out.append(form)
    return out
