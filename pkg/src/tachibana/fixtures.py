"""File formats for charts, forms and identity catalogues.

Chart fixture (one directive per line, '#' comments)::

    dim 3
    axis 1 -0.46 0.46 open          # axis index, lo, hi, open|periodic
    label round-sphere
    curvature 1.0
    conformally-flat true
    g 1 1 4/(1+x1^2+x2^2+x3^2)^2    # metric entries in the expression
                                    # grammar; missing entries are zero

Form fixture: a "degree r" line, then one component per line as
"i1,i2,...,ir : <expression>".

Fourier fixture: one coefficient per line as "k1,...,kn ; i1,...,ir ; re,im".

Catalogue: one check per line as
"<identity> ; <chart spec> ; <form spec> [; tol=... ; points=... ; seed=...]",
where chart and form specs are registry strings (torus:3, sphere:2:1,
random:1:7, ...) or file:PATH references resolved next to the catalogue.
"""

from __future__ import annotations

import os

import numpy as np

from .expr import parse, to_text
from .forms import ExprForm, FourierForm, multi_indices
from .geometry import Axis, MetricChart, Num

__all__ = [
    "FixtureError", "parse_chart_file", "parse_form_file",
    "parse_fourier_file", "parse_catalogue_file", "write_chart_file",
    "write_form_file", "write_fourier_file",
]


class FixtureError(ValueError):
    """Malformed fixture file; message carries file and line number."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def _resolve(path, base_dir):
    if base_dir and not os.path.isabs(path):
        return os.path.join(base_dir, path)
    return path


def _content_lines(path):
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def parse_chart_file(path, base_dir=None) -> MetricChart:
    path = _resolve(path, base_dir)
    n = None
    axes = {}
    entries = {}
    label = "custom"
    curvature = None
    conformally_flat = None
    for lineno, line in _content_lines(path):
        fields = line.split(None, 1)
        key = fields[0]
        rest = fields[1] if len(fields) > 1 else ""
        try:
            if key == "dim":
                n = int(rest)
            elif key == "axis":
                idx, lo, hi, kind = rest.split()
                if kind not in ("open", "periodic"):
                    raise ValueError(f"axis kind must be open|periodic, "
                                     f"got '{kind}'")
                axes[int(idx)] = Axis(float(lo), float(hi),
                                      periodic=kind == "periodic")
            elif key == "label":
                label = rest.strip()
            elif key == "curvature":
                curvature = float(rest)
            elif key == "conformally-flat":
                conformally_flat = rest.strip().lower() in ("true", "yes", "1")
            elif key == "g":
                if n is None:
                    raise ValueError("metric entry before 'dim' line")
                i, j, text = rest.split(None, 2)
                entries[(int(i), int(j))] = parse(text, n)
            else:
                raise ValueError(f"unknown directive '{key}'")
        except FixtureError:
            raise
        except Exception as exc:
            raise FixtureError(path, lineno, str(exc)) from exc
    if n is None:
        raise FixtureError(path, 0, "missing 'dim' line")
    missing = [i for i in range(1, n + 1) if i not in axes]
    if missing:
        raise FixtureError(path, 0, f"missing axis lines for {missing}")
    g = [[Num(0.0)] * n for _ in range(n)]
    for (i, j), e in entries.items():
        g[i - 1][j - 1] = e
        g[j - 1][i - 1] = e
    return MetricChart(n, [axes[i] for i in range(1, n + 1)], g, label=label,
                       curvature=curvature, conformally_flat=conformally_flat)


def parse_form_file(path, chart: MetricChart, base_dir=None) -> ExprForm:
    path = _resolve(path, base_dir)
    degree = None
    components = {}
    for lineno, line in _content_lines(path):
        try:
            if degree is None:
                key, value = line.split()
                if key != "degree":
                    raise ValueError("first line must be 'degree r'")
                degree = int(value)
                continue
            head, _, text = line.partition(":")
            if not text.strip():
                raise ValueError("component line must be 'i1,...,ir : expr'")
            head = head.strip()
            index = tuple(int(x) for x in head.split(",")) if head else ()
            components[index] = parse(text.strip(), chart.n)
        except FixtureError:
            raise
        except Exception as exc:
            raise FixtureError(path, lineno, str(exc)) from exc
    if degree is None:
        raise FixtureError(path, 0, "missing 'degree' line")
    try:
        return ExprForm(chart, degree, components)
    except ValueError as exc:
        raise FixtureError(path, 0, str(exc)) from exc


def parse_fourier_file(path, chart: MetricChart, base_dir=None) -> FourierForm:
    path = _resolve(path, base_dir)
    rows = []
    for lineno, line in _content_lines(path):
        try:
            k_text, i_text, c_text = (part.strip()
                                      for part in line.split(";"))
            k = tuple(int(x) for x in k_text.split(","))
            index = tuple(int(x) for x in i_text.split(",")) if i_text else ()
            re_part, im_part = (float(x) for x in c_text.split(","))
            rows.append((k, index, complex(re_part, im_part)))
        except Exception as exc:
            raise FixtureError(path, lineno, str(exc)) from exc
    if not rows:
        raise FixtureError(path, 0, "empty Fourier fixture")
    degree = len(rows[0][1])
    band = max(max(abs(x) for x in k) for k, _, _ in rows)
    band = max(band, 1)
    coeffs = {}
    pos = {I: c for c, I in enumerate(multi_indices(chart.n, degree))}
    for k, index, value in rows:
        vec = coeffs.setdefault(
            k, np.zeros(len(pos), dtype=complex))
        vec[pos[index]] += value
    return FourierForm(chart, degree, band, coeffs)


def parse_catalogue_file(path):
    """Catalogue entries plus the directory fixtures resolve against."""
    from .theorems import CatalogueEntry
    entries = []
    for lineno, line in _content_lines(path):
        parts = [p.strip() for p in line.split(";")]
        if len(parts) < 3:
            raise FixtureError(path, lineno,
                               "need '<identity> ; <chart> ; <form>'")
        identity, chart_spec, form_spec = parts[:3]
        options = {"tol": 1e-8, "points": 20, "seed": 0}
        for extra in parts[3:]:
            key, _, value = extra.partition("=")
            key = key.strip()
            if key not in options:
                raise FixtureError(path, lineno, f"unknown option '{key}'")
            options[key] = float(value) if key == "tol" else int(value)
        entries.append(CatalogueEntry(identity=identity,
                                      chart_spec=chart_spec,
                                      form_spec=form_spec, **options))
    return entries, os.path.dirname(os.path.abspath(path))


def write_chart_file(path, chart: MetricChart):
    lines = [f"dim {chart.n}"]
    for i, axis in enumerate(chart.axes, start=1):
        kind = "periodic" if axis.periodic else "open"
        lines.append(f"axis {i} {axis.lo!r} {axis.hi!r} {kind}")
    lines.append(f"label {chart.label}")
    if chart.curvature is not None:
        lines.append(f"curvature {chart.curvature!r}")
    lines.append(f"conformally-flat {'true' if chart.conformally_flat else 'false'}")
    for i in range(chart.n):
        for j in range(i, chart.n):
            if chart.g[i][j] != Num(0.0):
                lines.append(f"g {i + 1} {j + 1} {to_text(chart.g[i][j])}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def write_form_file(path, form: ExprForm):
    lines = [f"degree {form.degree}"]
    for I in multi_indices(form.chart.n, form.degree):
        if I in form.components:
            head = ",".join(str(i) for i in I)
            lines.append(f"{head} : {to_text(form.components[I])}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def write_fourier_file(path, form: FourierForm):
    lines = []
    keys = multi_indices(form.chart.n, form.degree)
    for k in form.frequencies():
        vec = form.coeff(k)
        for ci, I in enumerate(keys):
            if vec[ci] == 0:
                continue
            k_text = ",".join(str(x) for x in k)
            i_text = ",".join(str(i) for i in I)
            lines.append(f"{k_text} ; {i_text} ; "
                         f"{float(vec[ci].real)!r},{float(vec[ci].imag)!r}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
