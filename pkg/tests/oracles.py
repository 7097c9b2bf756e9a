"""Independent oracles used by the test suite.

The full-matrix oracle assembles operators on the whole real band-limited
space through the form-level FourierForm implementations (not the
per-frequency block assembly) and counts kernels with one dense SVD.
"""

import numpy as np

from tachibana.forms import FourierForm, half_space_frequencies, multi_indices
from tachibana.geometry import make_flat_torus
from tachibana.operators import (
    codifferential, exterior_d, hodge_laplacian, tachibana_laplacian,
)


def real_basis(chart, degree, band):
    """Real basis of band-limited forms: constants, then cosine/sine pairs."""
    n = chart.n
    ncomp = len(multi_indices(n, degree))
    zero = (0,) * n
    basis = []
    for ci in range(ncomp):
        vec = np.zeros(ncomp, dtype=complex)
        vec[ci] = 1.0
        basis.append(FourierForm(chart, degree, band, {zero: vec}))
    for k in half_space_frequencies(n, band):
        mk = tuple(-x for x in k)
        for ci in range(ncomp):
            vec = np.zeros(ncomp, dtype=complex)
            vec[ci] = 0.5
            basis.append(FourierForm(chart, degree, band, {k: vec, mk: vec}))
            vec = np.zeros(ncomp, dtype=complex)
            vec[ci] = -0.5j
            basis.append(FourierForm(chart, degree, band,
                                     {k: vec, mk: np.conj(vec)}))
    return basis


def coordinates(form, band):
    """Coordinates of a real band-limited form in the real basis order."""
    n = form.chart.n
    ncomp = form.ncomp
    zero = (0,) * n
    coords = [form.coeff(zero).real]
    for k in half_space_frequencies(n, band):
        c = form.coeff(k)
        coords.append(2.0 * c.real)
        coords.append(-2.0 * c.imag)
    return np.concatenate(coords)


def operator_matrix(op, chart, degree, band):
    basis = real_basis(chart, degree, band)
    cols = [coordinates(op(b), band) for b in basis]
    return np.column_stack(cols)


def full_matrix_numbers(n, degree, band, tol=1e-9):
    """Betti/Tachibana/Killing/planarity numbers by dense SVD of the full
    real operator matrices."""
    chart = make_flat_torus(n)
    laplace = operator_matrix(hodge_laplacian, chart, degree, band)
    box = operator_matrix(
        lambda f: tachibana_laplacian(f).output, chart, degree, band)
    dmat = operator_matrix(exterior_d, chart, degree, band)
    dstar = operator_matrix(codifferential, chart, degree, band)

    def kernel(matrix):
        s = np.linalg.svd(matrix, compute_uv=False)
        threshold = tol * max(1.0, float(s[0]))
        return matrix.shape[1] - int(np.sum(s >= threshold))

    return {
        "betti": kernel(laplace),
        "tachibana": kernel(box),
        "killing": kernel(np.vstack([box, dstar])),
        "planarity": kernel(np.vstack([box, dmat])),
    }
