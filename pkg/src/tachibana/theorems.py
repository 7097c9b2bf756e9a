"""Executable verification of the curvature identities and eigenvalue
statements satisfied by the operator calculus, at desk scale.

Each identity in the catalogue has a key, a hypothesis (on the chart, on
the form class, or both) and a pointwise residual.  Hypotheses are
checked before the residual is formed - with the form class established
numerically through :mod:`tachibana.classify`, never trusted - and a
violation is reported, not silently skipped.

Identity keys and the relations they check (box is the Tachibana
Laplacian, F the Weitzenboeck term, s scalar curvature, C constant
sectional curvature, A = d* d, B = d d*):

==== =====================================================================
5.1   Delta w = rough w + F(w)
5.2   box w = 1/(r(r+1)) (Delta w - F(w) - A w/(r+1) - B w/(n-r+1))
5.3   Delta w = F(w) + A w/(r+1) + B w/(n-r+1)          [w conformal Killing]
5.5   F(w) = r s/(2(2r-1)) w                            [conformally flat, n=2r]
5.6   Delta w = (r+1) s/(2(2r-1)) w                     [w CK; same charts]
5.11  r s/(2(2r-1)) w = r/(r+1) Delta w - r(r+1) box w  [conformally flat, n=2r]
5.12  r s/(2(2r-1)) w = -r(r+1) box w                   [w harmonic; same charts]
5.13  F(w) = r(n-r) C w                                 [constant curvature]
5.14  box w = 1/(r(r+1)) (Delta w - r(n-r)C w - A w/(r+1) - B w/(n-r+1))
5.15  box w = 1/(r(r+1)) ((n-r)/(n-r+1) Delta w - r(n-r)C w
              + (2r-n)/((r+1)(n-r+1)) A w)
5.16  box w = 1/(r(r+1)) (r/(r+1) Delta w - r(n-r)C w
              + (n-2r)/((r+1)(n-r+1)) B w)
T3.1  box w = -(n-r)/(r+1) C w          [w harmonic, C < 0]
T3.2  Delta w = r(n-r+1) C w            [w closed conformal Killing, C > 0]
T3.3  Delta w = (n-r)(r+1) C w          [w Killing, C > 0]
C1    Delta w = (r+1) s/(2(2r-1)) w for conformal Killing w when the
      constant scalar curvature is positive; box w = -s/(2(r+1)(2r-1)) w
      for harmonic w when it is negative.
==== =====================================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classify import classify
from .expr import parse
from .forms import (
    ExprForm, FourierForm, expr_to_fourier, fourier_to_expr, global_inner,
    multi_indices,
)
from .geometry import (
    MetricChart, curvature_batch, make_conformally_flat, make_flat_torus,
    make_poincare_ball, make_round_sphere,
)
from .modelforms import (
    ball_radial_harmonic_form, constant_form, coordinate_wedge_forms,
    offset_ball_chart, planar_harmonic_gradient, random_trig_form,
    sphere_closed_ck_form, sphere_killing_form,
)
from .operators import (
    codifferential, exterior_d, hodge_laplacian, rough_laplacian,
    tachibana_values, weitzenbock_term, wedge_matrix,
)

__all__ = [
    "IdentityCheck", "CatalogueEntry", "IDENTITY_NAMES", "verify_identity",
    "theorem4_construct", "Theorem4Witness", "decomposition_check",
    "DecompositionResult", "default_catalogue", "violation_catalogue",
    "run_catalogue", "build_chart", "build_form", "HypothesisViolation",
]

CLASS_TOL = 1e-7

IDENTITY_NAMES = {
    "5.1": "weitzenboeck-split",
    "5.2": "tachibana-two-routes",
    "5.3": "conformal-killing-laplacian-split",
    "5.5": "middle-degree-curvature-term",
    "5.6": "middle-degree-ck-eigenvalue",
    "5.11": "middle-degree-operator-relation",
    "5.12": "middle-degree-harmonic-relation",
    "5.13": "constant-curvature-term-value",
    "5.14": "constant-curvature-tachibana-form",
    "5.15": "tachibana-closed-form-rewrite",
    "5.16": "tachibana-coclosed-form-rewrite",
    "T3.1": "harmonic-tachibana-eigenvalue",
    "T3.2": "closed-ck-hodge-eigenvalue",
    "T3.3": "killing-hodge-eigenvalue",
    "C1": "constant-scalar-eigenform",
}


class HypothesisViolation(Exception):
    """Raised internally when a fixture does not satisfy an identity's
    hypothesis; reported on the IdentityCheck, never silently skipped."""


@dataclass
class IdentityCheck:
    identity: str
    name: str
    chart_label: str
    form_label: str
    n: int
    degree: int
    residual: float
    tol: float
    passed: bool
    hypothesis_ok: bool
    note: str = ""


class _Context:
    """Lazy per-fixture operator evaluations shared by the identities."""

    def __init__(self, form: ExprForm, pts):
        self.form = form
        self.chart = form.chart
        self.pts = np.atleast_2d(np.asarray(pts, dtype=float))
        self.n = self.chart.n
        self.r = form.degree
        self._cache: dict = {}

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    @property
    def vals(self):
        return self._get("vals", lambda: self.form.values(self.pts))

    @property
    def norm(self):
        return self._get("norm", lambda: max(float(np.max(np.abs(self.vals))),
                                             1e-12))

    @property
    def delta(self):
        return self._get("delta",
                         lambda: hodge_laplacian(self.form).values(self.pts))

    @property
    def rough(self):
        return self._get("rough", lambda: rough_laplacian(self.form, self.pts))

    @property
    def weitz(self):
        return self._get("weitz",
                         lambda: weitzenbock_term(self.form, self.pts))

    @property
    def dstar_d(self):
        return self._get("dstar_d", lambda: codifferential(
            exterior_d(self.form)).values(self.pts))

    @property
    def d_dstar(self):
        return self._get("d_dstar", lambda: exterior_d(
            codifferential(self.form)).values(self.pts))

    @property
    def box(self):
        return self._get("box", lambda: tachibana_values(
            self.form, self.pts, route="via-4.1"))

    @property
    def box_other_route(self):
        return self._get("box52", lambda: tachibana_values(
            self.form, self.pts, route="via-5.2"))

    @property
    def scalar(self):
        return self._get("scalar", lambda: curvature_batch(
            self.chart, self.pts)["scalar"])

    @property
    def report(self):
        return self._get("report",
                         lambda: classify(self.form, self.pts, tol=CLASS_TOL))

    def curvature_constant(self):
        if self.chart.curvature is None:
            raise HypothesisViolation(
                f"chart '{self.chart.label}' does not declare constant "
                "sectional curvature")
        return float(self.chart.curvature)

    def require_conformally_flat_middle(self):
        if not self.chart.conformally_flat:
            raise HypothesisViolation(
                f"chart '{self.chart.label}' is not conformally flat")
        if self.n != 2 * self.r:
            raise HypothesisViolation(
                f"identity needs n = 2r, got n={self.n}, r={self.r}")

    def require_class(self, key, meaning):
        if not self.report.memberships[key]:
            raise HypothesisViolation(
                f"form is not {meaning} (residuals {self.report.residuals})")

    def constant_scalar(self):
        s = self.scalar
        if float(np.max(s) - np.min(s)) > 1e-8 * max(1.0, float(np.max(np.abs(s)))):
            raise HypothesisViolation("scalar curvature is not constant")
        value = float(np.mean(s))
        if value == 0.0:
            raise HypothesisViolation("scalar curvature vanishes")
        return value


def _resid(ctx, difference):
    return float(np.max(np.abs(difference))) / ctx.norm


def _check_51(ctx):
    return _resid(ctx, ctx.delta - ctx.rough - ctx.weitz)


def _check_52(ctx):
    return _resid(ctx, ctx.box - ctx.box_other_route)


def _check_53(ctx):
    ctx.require_class("T", "conformal Killing")
    r, n = ctx.r, ctx.n
    rhs = ctx.weitz + ctx.dstar_d / (r + 1) + ctx.d_dstar / (n - r + 1)
    return _resid(ctx, ctx.delta - rhs)


def _check_55(ctx):
    ctx.require_conformally_flat_middle()
    r = ctx.r
    coeff = r / (2.0 * (2 * r - 1))
    return _resid(ctx, ctx.weitz - coeff * ctx.scalar[:, None] * ctx.vals)


def _check_56(ctx):
    ctx.require_conformally_flat_middle()
    ctx.require_class("T", "conformal Killing")
    r = ctx.r
    coeff = (r + 1) / (2.0 * (2 * r - 1))
    return _resid(ctx, ctx.delta - coeff * ctx.scalar[:, None] * ctx.vals)


def _check_511(ctx):
    ctx.require_conformally_flat_middle()
    r = ctx.r
    lhs = r / (2.0 * (2 * r - 1)) * ctx.scalar[:, None] * ctx.vals
    rhs = r / (r + 1.0) * ctx.delta - r * (r + 1.0) * ctx.box
    return _resid(ctx, lhs - rhs)


def _check_512(ctx):
    ctx.require_conformally_flat_middle()
    ctx.require_class("H", "harmonic")
    r = ctx.r
    lhs = r / (2.0 * (2 * r - 1)) * ctx.scalar[:, None] * ctx.vals
    return _resid(ctx, lhs + r * (r + 1.0) * ctx.box)


def _check_513(ctx):
    C = ctx.curvature_constant()
    r, n = ctx.r, ctx.n
    return _resid(ctx, ctx.weitz - r * (n - r) * C * ctx.vals)


def _check_514(ctx):
    C = ctx.curvature_constant()
    r, n = ctx.r, ctx.n
    inner = (ctx.delta - r * (n - r) * C * ctx.vals
             - ctx.dstar_d / (r + 1) - ctx.d_dstar / (n - r + 1))
    return _resid(ctx, ctx.box - inner / (r * (r + 1)))


def _check_515(ctx):
    C = ctx.curvature_constant()
    r, n = ctx.r, ctx.n
    inner = ((n - r) / (n - r + 1.0) * ctx.delta
             - r * (n - r) * C * ctx.vals
             + (2.0 * r - n) / ((r + 1.0) * (n - r + 1.0)) * ctx.dstar_d)
    return _resid(ctx, ctx.box - inner / (r * (r + 1)))


def _check_516(ctx):
    C = ctx.curvature_constant()
    r, n = ctx.r, ctx.n
    inner = (r / (r + 1.0) * ctx.delta
             - r * (n - r) * C * ctx.vals
             + (n - 2.0 * r) / ((r + 1.0) * (n - r + 1.0)) * ctx.d_dstar)
    return _resid(ctx, ctx.box - inner / (r * (r + 1)))


def _check_t31(ctx):
    C = ctx.curvature_constant()
    if C >= 0:
        raise HypothesisViolation(
            "harmonic eigenforms of the Tachibana Laplacian need C < 0 "
            "(eigenvalue -(n-r)C/(r+1) must be nonnegative)")
    ctx.require_class("H", "harmonic")
    lam = -(ctx.n - ctx.r) / (ctx.r + 1.0) * C
    return _resid(ctx, ctx.box - lam * ctx.vals)


def _check_t32(ctx):
    C = ctx.curvature_constant()
    if C <= 0:
        raise HypothesisViolation("closed conformal Killing eigenforms of "
                                  "the Hodge Laplacian need C > 0")
    ctx.require_class("P", "closed conformal Killing")
    lam = ctx.r * (ctx.n - ctx.r + 1.0) * C
    return _resid(ctx, ctx.delta - lam * ctx.vals)


def _check_t33(ctx):
    C = ctx.curvature_constant()
    if C <= 0:
        raise HypothesisViolation("Killing eigenforms of the Hodge "
                                  "Laplacian need C > 0")
    ctx.require_class("K", "Killing")
    lam = (ctx.n - ctx.r) * (ctx.r + 1.0) * C
    return _resid(ctx, ctx.delta - lam * ctx.vals)


def _check_c1(ctx):
    ctx.require_conformally_flat_middle()
    s = ctx.constant_scalar()
    r = ctx.r
    if ctx.report.memberships["T"] and s > 0:
        lam = (r + 1.0) * s / (2.0 * (2 * r - 1))
        return _resid(ctx, ctx.delta - lam * ctx.vals)
    if ctx.report.memberships["H"] and s < 0:
        lam = -s / (2.0 * (r + 1.0) * (2 * r - 1))
        return _resid(ctx, ctx.box - lam * ctx.vals)
    raise HypothesisViolation(
        "needs a conformal Killing form with s > 0 or a harmonic form "
        f"with s < 0 (classes {ctx.report.member_classes()}, s = {s:g})")


_CHECKS = {
    "5.1": _check_51, "5.2": _check_52, "5.3": _check_53, "5.5": _check_55,
    "5.6": _check_56, "5.11": _check_511, "5.12": _check_512,
    "5.13": _check_513, "5.14": _check_514, "5.15": _check_515,
    "5.16": _check_516, "T3.1": _check_t31, "T3.2": _check_t32,
    "T3.3": _check_t33, "C1": _check_c1,
}


def verify_identity(identity: str, form: ExprForm, chart: MetricChart, pts,
                    tol: float = 1e-8, form_label: str = "") -> IdentityCheck:
    """Check one identity on one fixture; hypothesis violations are
    reported as failed checks with hypothesis_ok = False."""
    if identity not in _CHECKS:
        raise ValueError(f"unknown identity '{identity}'; known: "
                         f"{sorted(_CHECKS)}")
    if form.chart is not chart:
        raise ValueError("form does not live on the given chart")
    if not 1 <= form.degree <= chart.n - 1:
        raise ValueError("identity checks need 1 <= r <= n-1")
    ctx = _Context(form, pts)
    base = dict(identity=identity, name=IDENTITY_NAMES[identity],
                chart_label=chart.label, form_label=form_label,
                n=chart.n, degree=form.degree, tol=tol)
    try:
        residual = _CHECKS[identity](ctx)
    except HypothesisViolation as violation:
        return IdentityCheck(residual=float("nan"), passed=False,
                             hypothesis_ok=False, note=str(violation), **base)
    return IdentityCheck(residual=residual, passed=residual <= tol,
                         hypothesis_ok=True, **base)


# ---------------------------------------------------------------------------
# Theorem-4 style witness: parallel wedges bound the Tachibana number below

@dataclass
class Theorem4Witness:
    forms: list
    gram: np.ndarray
    rank: int
    lower_bound: int
    all_parallel: bool


def theorem4_construct(n: int, h: int, degree: int,
                       periods=None) -> Theorem4Witness:
    """Wedge the first h constant coordinate 1-forms on the flat torus
    into all C(h, r) degree-r products.

    The products are parallel (hence conformal Killing) and linearly
    independent, witnessing t_r >= h! / (r! (h-r)!).
    """
    chart = make_flat_torus(n, periods)
    forms = coordinate_wedge_forms(chart, h, degree)
    pts = chart.sample_points(10, seed=0)
    all_parallel = all(
        classify(f, pts, tol=CLASS_TOL).memberships["C"] for f in forms)
    fforms = [expr_to_fourier(f, 1) for f in forms]
    gram = np.array([[global_inner(a, b) for b in fforms] for a in fforms])
    rank = int(np.linalg.matrix_rank(gram))
    bound = math.comb(h, degree)
    return Theorem4Witness(forms=forms, gram=gram, rank=rank,
                           lower_bound=bound, all_parallel=all_parallel)


# ---------------------------------------------------------------------------
# decomposition of conformal Killing torus forms

@dataclass
class DecompositionResult:
    killing_part: FourierForm
    planar_part: FourierForm
    killing_report: object
    planar_report: object


def decomposition_check(form: FourierForm, tol: float = 1e-7,
                        points=24, seed=0) -> DecompositionResult:
    """Split a conformal Killing torus form as Killing + closed conformal
    Killing via the exact per-frequency Hodge projectors.

    The harmonic (k = 0) part is assigned to the Killing summand: parallel
    forms sit in both classes and the co-closed one is the convention
    here.  Both parts are re-classified before being returned.
    """
    chart = form.chart
    pts = chart.sample_points(points, seed=seed)
    base_report = classify(fourier_to_expr(form), pts, tol=tol)
    if not base_report.memberships["T"]:
        raise ValueError(
            "decomposition requires a conformal Killing form; residuals "
            f"{base_report.residuals}")
    n, r = chart.n, form.degree
    killing_coeffs = {}
    planar_coeffs = {}
    for k, vec in form.coeffs.items():
        if all(x == 0 for x in k):
            killing_coeffs[k] = vec
            continue
        kappa = form.kappa(k)
        E = wedge_matrix(n, r - 1, kappa)
        exact_projector = E @ E.T / float(kappa @ kappa)
        exact = exact_projector @ vec
        planar_coeffs[k] = exact
        killing_coeffs[k] = vec - exact
    killing_part = FourierForm(chart, r, form.band, killing_coeffs)
    planar_part = FourierForm(chart, r, form.band, planar_coeffs)
    killing_report = classify(fourier_to_expr(killing_part), pts, tol=tol)
    planar_report = classify(fourier_to_expr(planar_part), pts, tol=tol)
    return DecompositionResult(killing_part=killing_part,
                               planar_part=planar_part,
                               killing_report=killing_report,
                               planar_report=planar_report)


# ---------------------------------------------------------------------------
# fixture registry and the identity catalogue

@dataclass(frozen=True)
class CatalogueEntry:
    identity: str
    chart_spec: str
    form_spec: str
    tol: float = 1e-8
    points: int = 20
    seed: int = 0


_CONFORMAL_EXPONENTS = {
    "wavy2": (2, "sin(x1)*cos(x2)/3"),
    "wavy3": (3, "sin(x1)*cos(x2)/4 + sin(x3)/5"),
    "wavy4": (4, "sin(x1)*cos(x2)/5 + x3*x4/10"),
}


def build_chart(spec: str, base_dir=None) -> MetricChart:
    """Chart from a registry spec: torus:N, sphere:N:C, ball:N:C,
    ball-offset:N:C, conformal:KEY, or file:PATH."""
    head, _, rest = spec.partition(":")
    if head == "torus":
        return make_flat_torus(int(rest))
    if head == "sphere":
        n, c = rest.split(":")
        return make_round_sphere(int(n), float(c))
    if head == "ball":
        n, c = rest.split(":")
        return make_poincare_ball(int(n), float(c))
    if head == "ball-offset":
        n, c = rest.split(":")
        return offset_ball_chart(int(n), float(c))
    if head == "conformal":
        n, text = _CONFORMAL_EXPONENTS[rest]
        return make_conformally_flat(n, parse(text, n))
    if head == "file":
        from .fixtures import parse_chart_file
        return parse_chart_file(rest, base_dir=base_dir)
    raise ValueError(f"unknown chart spec '{spec}'")


def build_form(spec: str, chart: MetricChart, base_dir=None) -> ExprForm:
    """Form from a registry spec: random:R:SEED, constant:I1-I2, sphere-ck,
    sphere-ck:AXIS, sphere-killing:A:B, ball-harmonic, planar-harmonic,
    or file:PATH."""
    head, _, rest = spec.partition(":")
    if head == "random":
        r, seed = rest.split(":")
        return random_trig_form(chart, int(r), seed=int(seed))
    if head == "constant":
        I = tuple(int(x) for x in rest.split("-"))
        return constant_form(chart, I)
    if head == "sphere-ck":
        axis = int(rest) if rest else None
        return sphere_closed_ck_form(chart, axis)
    if head == "sphere-killing":
        a, b = (int(x) for x in rest.split(":")) if rest else (1, 2)
        return sphere_killing_form(chart, a, b)
    if head == "ball-harmonic":
        return ball_radial_harmonic_form(chart)
    if head == "planar-harmonic":
        return planar_harmonic_gradient(chart)
    if head == "file":
        from .fixtures import parse_form_file
        return parse_form_file(rest, chart, base_dir=base_dir)
    raise ValueError(f"unknown form spec '{spec}'")


def default_catalogue() -> list[CatalogueEntry]:
    """Passing fixtures covering every identity in the catalogue."""
    E = CatalogueEntry
    return [
        E("5.1", "torus:3", "random:1:1"),
        E("5.1", "sphere:3:1", "random:1:2"),
        E("5.1", "sphere:3:1", "random:2:3"),
        E("5.1", "ball:3:-1", "random:2:4"),
        E("5.1", "conformal:wavy3", "random:1:5"),
        E("5.2", "sphere:3:1", "random:1:6"),
        E("5.2", "ball:3:-1", "random:2:7"),
        E("5.2", "conformal:wavy3", "random:2:8"),
        E("5.3", "sphere:3:1", "sphere-killing:1:2", 1e-7),
        E("5.3", "sphere:2:1", "sphere-ck", 1e-7),
        E("5.5", "sphere:2:1", "random:1:9"),
        E("5.5", "conformal:wavy2", "random:1:10"),
        E("5.5", "conformal:wavy4", "random:2:11"),
        E("5.6", "sphere:2:1", "sphere-ck", 1e-7),
        E("5.11", "conformal:wavy2", "random:1:12"),
        E("5.11", "sphere:2:1", "random:1:13"),
        E("5.12", "conformal:wavy2", "planar-harmonic", 1e-7),
        E("5.12", "ball:2:-1", "planar-harmonic", 1e-7),
        E("5.13", "sphere:2:1", "random:1:14"),
        E("5.13", "sphere:3:1", "random:1:15"),
        E("5.13", "sphere:3:1", "random:2:16"),
        E("5.13", "ball:3:-1", "random:1:17"),
        E("5.13", "sphere:4:1", "random:2:18"),
        E("5.14", "sphere:3:1", "random:1:19"),
        E("5.14", "ball:3:-1", "random:2:20"),
        E("5.15", "sphere:3:1", "random:1:21"),
        E("5.15", "ball:3:-1", "random:2:22"),
        E("5.16", "sphere:3:1", "random:2:23"),
        E("5.16", "ball:3:-1", "random:1:24"),
        E("T3.1", "ball-offset:3:-1", "ball-harmonic", 1e-7),
        E("T3.2", "sphere:3:1", "sphere-ck", 1e-7),
        E("T3.2", "sphere:2:1", "sphere-ck", 1e-7),
        E("T3.3", "sphere:3:1", "sphere-killing:1:2", 1e-7),
        E("T3.3", "sphere:3:1", "sphere-killing:2:3", 1e-7),
        E("C1", "sphere:2:1", "sphere-ck", 1e-7),
        E("C1", "ball:2:-1", "planar-harmonic", 1e-7),
    ]


def violation_catalogue() -> list[CatalogueEntry]:
    """One hypothesis-violating fixture per identity that has a hypothesis."""
    E = CatalogueEntry
    return [
        E("5.3", "sphere:3:1", "random:1:31"),     # not conformal Killing
        E("5.5", "sphere:3:1", "random:1:32"),     # n != 2r
        E("5.6", "sphere:2:1", "random:1:33"),     # not conformal Killing
        E("5.11", "sphere:3:1", "random:1:34"),    # n != 2r
        E("5.12", "conformal:wavy2", "random:1:35"),  # not harmonic
        E("5.13", "conformal:wavy3", "random:1:36"),  # no constant curvature
        E("5.14", "conformal:wavy3", "random:1:37"),
        E("5.15", "conformal:wavy3", "random:1:38"),
        E("5.16", "conformal:wavy3", "random:2:39"),
        E("T3.1", "sphere:3:1", "random:1:40"),    # C > 0: eigenvalue < 0
        E("T3.2", "sphere:3:1", "random:1:41"),    # not closed CK
        E("T3.3", "sphere:3:1", "sphere-ck"),      # closed CK, not Killing
        E("C1", "conformal:wavy2", "random:1:42"),  # s not constant
    ]


def run_catalogue(entries, base_dir=None) -> list[IdentityCheck]:
    """Verify every catalogue entry, in order."""
    results = []
    for entry in entries:
        chart = build_chart(entry.chart_spec, base_dir=base_dir)
        form = build_form(entry.form_spec, chart, base_dir=base_dir)
        pts = chart.sample_points(entry.points, seed=entry.seed)
        results.append(verify_identity(entry.identity, form, chart, pts,
                                       tol=entry.tol,
                                       form_label=entry.form_spec))
    return results
