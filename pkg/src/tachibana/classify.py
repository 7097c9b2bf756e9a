"""Residual-based placement of a form in the inclusion lattice of
closed / co-closed / conformal Killing / harmonic / Killing / planar /
parallel forms.

Membership is a numerical judgment at finitely many sample points: each
defining operator (d, d*, D3, nabla) gets a sup-norm residual, a class
is assigned when its residual falls below tol * (1 + |w|_inf), and the
raw residuals always travel with the report so consumers can
re-threshold.  Lattice consistency (parallel implies everything else) is
enforced, not assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forms import ExprForm
from .operators import (
    GeometryJet, apply_D, codifferential, covariant_derivative, exterior_d,
)

__all__ = ["ClassificationReport", "classify", "LatticeConsistencyError"]

OPERATOR_KEYS = ("d", "dstar", "D3", "nabla")
CLASS_KEYS = ("D", "F", "T", "H", "K", "P", "C")

CLASS_MEANING = {
    "D": "closed (d w = 0)",
    "F": "co-closed (d* w = 0)",
    "T": "conformal Killing (D3 w = 0)",
    "H": "harmonic (closed and co-closed)",
    "K": "Killing (co-closed conformal Killing)",
    "P": "planar (closed conformal Killing)",
    "C": "parallel (nabla w = 0)",
}


class LatticeConsistencyError(RuntimeError):
    """A parallel form failed one of the weaker memberships: this is an
    internal error of the residual computation, not a valid report."""


@dataclass
class ClassificationReport:
    degree: int
    residuals: dict
    memberships: dict
    tol: float
    norm: float
    points_id: str = ""
    chart_label: str = ""

    def member_classes(self):
        return tuple(k for k in CLASS_KEYS if self.memberships[k])


def classify(form: ExprForm, pts, tol: float = 1e-7,
             points_id: str = "") -> ClassificationReport:
    """Classify an expression form by operator residuals at sample points."""
    chart = form.chart
    n, r = chart.n, form.degree
    if not 1 <= r <= n - 1:
        raise ValueError(f"classification requires 1 <= r <= n-1, got r={r}")
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("empty sample point set")

    geo = GeometryJet(chart, pts)
    norm = form.sup_norm(pts)
    residuals = {
        "d": float(np.max(np.abs(exterior_d(form).values(pts)))),
        "dstar": float(np.max(np.abs(codifferential(form).values(pts)))),
        "D3": float(np.max(np.abs(apply_D("D3", form, pts, geo=geo)))),
        "nabla": float(np.max(np.abs(covariant_derivative(form, pts, geo=geo)))),
    }
    threshold = tol * (1.0 + norm)
    memberships = {
        "D": residuals["d"] <= threshold,
        "F": residuals["dstar"] <= threshold,
        "T": residuals["D3"] <= threshold,
        "C": residuals["nabla"] <= threshold,
    }
    memberships["H"] = memberships["D"] and memberships["F"]
    memberships["K"] = memberships["T"] and memberships["F"]
    memberships["P"] = memberships["T"] and memberships["D"]

    if memberships["C"] and not (memberships["K"] and memberships["P"]
                                 and memberships["H"]):
        raise LatticeConsistencyError(
            f"parallel form escaped a weaker class: residuals {residuals}")
    return ClassificationReport(degree=r, residuals=residuals,
                                memberships=memberships, tol=tol, norm=norm,
                                points_id=points_id, chart_label=chart.label)
