import numpy as np
import pytest

from tachibana.fixtures import (
    FixtureError, parse_catalogue_file, parse_chart_file, parse_form_file,
    parse_fourier_file, write_chart_file, write_form_file, write_fourier_file,
)
from tachibana.forms import random_fourier_form
from tachibana.geometry import make_flat_torus, make_round_sphere
from tachibana.modelforms import random_trig_form


class TestChartFiles:
    def test_round_trip(self, tmp_path):
        chart = make_round_sphere(3, 1.0)
        path = tmp_path / "sphere.chart"
        write_chart_file(path, chart)
        back = parse_chart_file(str(path))
        assert back.n == 3
        assert back.label == "round-sphere"
        assert back.curvature == 1.0
        assert back.conformally_flat
        pts = chart.sample_points(6, seed=1)
        assert np.allclose(back.metric_at(pts), chart.metric_at(pts))

    def test_periodic_axes_round_trip(self, tmp_path):
        chart = make_flat_torus(2, (2.0, 4.0))
        path = tmp_path / "torus.chart"
        write_chart_file(path, chart)
        back = parse_chart_file(str(path))
        assert back.is_torus
        assert back.periods == (2.0, 4.0)

    def test_error_carries_location(self, tmp_path):
        path = tmp_path / "bad.chart"
        path.write_text("dim 2\naxis 1 0 1 open\naxis 2 0 1 open\n"
                        "g 1 1 sin(x9)\n")
        with pytest.raises(FixtureError, match="bad.chart:4"):
            parse_chart_file(str(path))

    def test_missing_dim(self, tmp_path):
        path = tmp_path / "nodim.chart"
        path.write_text("label foo\n")
        with pytest.raises(FixtureError, match="missing 'dim'"):
            parse_chart_file(str(path))


class TestFormFiles:
    def test_round_trip(self, tmp_path):
        chart = make_flat_torus(3)
        form = random_trig_form(chart, 2, seed=5)
        path = tmp_path / "form.form"
        write_form_file(path, form)
        back = parse_form_file(str(path), chart)
        pts = chart.sample_points(8, seed=2)
        assert np.allclose(back.values(pts), form.values(pts))

    def test_plain_format(self, tmp_path):
        chart = make_flat_torus(2)
        path = tmp_path / "w.form"
        path.write_text("degree 1\n1 : sin(x1)\n2 : x1^2\n")
        form = parse_form_file(str(path), chart)
        assert form.degree == 1
        assert len(form.components) == 2

    def test_degree_line_required(self, tmp_path):
        path = tmp_path / "w.form"
        path.write_text("1 : sin(x1)\n")
        with pytest.raises(FixtureError):
            parse_form_file(str(path), make_flat_torus(2))

    def test_bad_expression_location(self, tmp_path):
        path = tmp_path / "w.form"
        path.write_text("degree 1\n1 : sin(x1\n")
        with pytest.raises(FixtureError, match="w.form:2"):
            parse_form_file(str(path), make_flat_torus(2))


class TestFourierFiles:
    def test_round_trip(self, tmp_path):
        chart = make_flat_torus(3)
        form = random_fourier_form(chart, 1, 2, seed=9)
        path = tmp_path / "f.fourier"
        write_fourier_file(path, form)
        back = parse_fourier_file(str(path), chart)
        assert back.degree == 1
        for k in form.frequencies():
            assert np.allclose(back.coeff(k), form.coeff(k))

    def test_example_lines(self, tmp_path):
        chart = make_flat_torus(2)
        path = tmp_path / "f.fourier"
        path.write_text("1,0 ; 2 ; 0.0,-0.5\n-1,0 ; 2 ; 0.0,0.5\n")
        form = parse_fourier_file(str(path), chart)
        assert form.degree == 1
        assert form.reality_defect() == 0.0


class TestCatalogueFiles:
    def test_parse_and_run(self, tmp_path):
        from tachibana.theorems import run_catalogue
        path = tmp_path / "cat.txt"
        path.write_text(
            "# demo catalogue\n"
            "5.13 ; sphere:2:1 ; random:1:3 ; tol=1e-8 ; points=10 ; seed=4\n"
            "5.1 ; torus:3 ; random:1:5\n")
        entries, base = parse_catalogue_file(str(path))
        assert len(entries) == 2
        assert entries[0].identity == "5.13"
        assert entries[0].points == 10
        results = run_catalogue(entries, base_dir=base)
        assert all(c.passed for c in results)

    def test_file_chart_reference(self, tmp_path):
        from tachibana.theorems import run_catalogue
        chart = make_round_sphere(2, 1.0)
        write_chart_file(tmp_path / "s2.chart", chart)
        cat = tmp_path / "cat.txt"
        cat.write_text("5.13 ; file:s2.chart ; random:1:6\n")
        entries, base = parse_catalogue_file(str(cat))
        results = run_catalogue(entries, base_dir=base)
        assert results[0].passed

    def test_mislabeled_curvature_fails_residual(self, tmp_path):
        # chart file claims C = 2 while the metric encodes C = 1: the
        # constant-curvature identity must fail with residual ~ |w|
        from tachibana.theorems import run_catalogue
        chart = make_round_sphere(2, 1.0)
        path = tmp_path / "mislabeled.chart"
        write_chart_file(path, chart)
        text = path.read_text().replace("curvature 1.0", "curvature 2.0")
        path.write_text(text)
        cat = tmp_path / "cat.txt"
        cat.write_text("5.13 ; file:mislabeled.chart ; random:1:7\n")
        entries, base = parse_catalogue_file(str(cat))
        result = run_catalogue(entries, base_dir=base)[0]
        assert result.hypothesis_ok
        assert not result.passed
        assert result.residual > 0.5

    def test_short_line_rejected(self, tmp_path):
        path = tmp_path / "cat.txt"
        path.write_text("5.13 ; sphere:2:1\n")
        with pytest.raises(FixtureError):
            parse_catalogue_file(str(path))
