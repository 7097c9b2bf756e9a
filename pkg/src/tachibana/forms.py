"""Multi-index algebra and the two differential-form representations.

Multi-indices are strictly increasing tuples of 1-based coordinate
indices; a degree-r form stores one component per increasing multi-index
and the full antisymmetric tensor is implied.  Pointwise and global
inner products sum over increasing multi-indices (no 1/r! factor), and
dx1 ^ ... ^ dxn is the positive orientation.

Two representations:

* :class:`ExprForm` - components are symbolic expressions on a chart;
* :class:`FourierForm` - band-limited coefficients per integer frequency
  on a flat torus, enabling exact spectral computations.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .expr import Expr, Num, add, cos, evaluate_on, mul, num, sin, sub, var
from .geometry import MetricChart

__all__ = [
    "multi_indices", "index_position", "sort_with_sign", "merge_sign",
    "complement", "ExprForm", "FourierForm", "wedge", "pointwise_inner",
    "global_inner", "hodge_star", "torus_volume", "random_fourier_form",
    "fourier_to_expr", "expr_to_fourier", "raised_gram",
]


# ---------------------------------------------------------------------------
# multi-index utilities

@lru_cache(maxsize=None)
def multi_indices(n: int, r: int) -> tuple[tuple[int, ...], ...]:
    """All strictly increasing r-tuples from 1..n, lexicographic order."""
    if r < 0 or r > n:
        raise ValueError(f"degree {r} out of range for dimension {n}")
    return tuple(itertools.combinations(range(1, n + 1), r))


@lru_cache(maxsize=None)
def index_position(n: int, r: int) -> dict:
    return {I: c for c, I in enumerate(multi_indices(n, r))}


def sort_with_sign(idx) -> tuple[int, tuple[int, ...] | None]:
    """Sort an index tuple, returning (permutation sign, sorted tuple).

    Returns (0, None) when the tuple has a repeated index.
    """
    idx = tuple(idx)
    if len(set(idx)) != len(idx):
        return 0, None
    sign = 1
    items = list(idx)
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


def merge_sign(I, J) -> int:
    """Sign of the shuffle sorting the concatenation (I, J); 0 if not disjoint."""
    sign, merged = sort_with_sign(tuple(I) + tuple(J))
    return sign if merged is not None else 0


@lru_cache(maxsize=None)
def complement(n: int, I: tuple) -> tuple[int, ...]:
    return tuple(i for i in range(1, n + 1) if i not in I)


def _validate_key(n, r, I):
    I = tuple(int(i) for i in I)
    if len(I) != r:
        raise ValueError(f"multi-index {I} does not have degree {r}")
    if any(not 1 <= i <= n for i in I):
        raise ValueError(f"multi-index {I} out of range for dimension {n}")
    if any(I[a] >= I[a + 1] for a in range(len(I) - 1)):
        raise ValueError(f"multi-index {I} is not strictly increasing")
    return I


# ---------------------------------------------------------------------------
# expression forms

class ExprForm:
    """Degree-r form with expression components on a chart.

    ``components`` maps increasing multi-indices to expressions; missing
    entries are zero.  Immutable by convention.
    """

    def __init__(self, chart: MetricChart, degree: int, components: dict):
        if degree < 0 or degree > chart.n:
            raise ValueError(f"degree {degree} out of range for n={chart.n}")
        self.chart = chart
        self.degree = int(degree)
        comps = {}
        for I, e in components.items():
            I = _validate_key(chart.n, degree, I)
            if not isinstance(e, Expr):
                e = num(e)
            if e != Num(0.0):
                comps[I] = e
        self.components = comps

    @property
    def keys(self):
        return multi_indices(self.chart.n, self.degree)

    def component(self, I) -> Expr:
        return self.components.get(tuple(I), Num(0.0))

    def component_signed(self, idx) -> Expr:
        """Component at an arbitrary index tuple, via antisymmetry."""
        sign, I = sort_with_sign(idx)
        if I is None or I not in self.components:
            return Num(0.0)
        e = self.components[I]
        return e if sign == 1 else mul(num(sign), e)

    def values(self, pts) -> np.ndarray:
        """Component values at points: shape (npoints, C(n, r))."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros((pts.shape[0], len(self.keys)))
        pos = index_position(self.chart.n, self.degree)
        for I, e in self.components.items():
            out[:, pos[I]] = evaluate_on(e, pts)
        return out

    def sup_norm(self, pts) -> float:
        vals = self.values(pts)
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    def map_components(self, fn) -> "ExprForm":
        return ExprForm(self.chart, self.degree,
                        {I: fn(e) for I, e in self.components.items()})

    def __add__(self, other: "ExprForm") -> "ExprForm":
        self._check_match(other)
        comps = dict(self.components)
        for I, e in other.components.items():
            comps[I] = add(comps.get(I, Num(0.0)), e)
        return ExprForm(self.chart, self.degree, comps)

    def __sub__(self, other: "ExprForm") -> "ExprForm":
        return self + other.scaled(-1.0)

    def scaled(self, c: float) -> "ExprForm":
        return self.map_components(lambda e: mul(num(c), e))

    def _check_match(self, other):
        if self.chart is not other.chart:
            raise ValueError("forms live on different charts")
        if self.degree != other.degree:
            raise ValueError(
                f"degree mismatch: {self.degree} vs {other.degree}")


# ---------------------------------------------------------------------------
# Fourier forms on flat tori

class FourierForm:
    """Band-limited degree-r form on a flat torus.

    ``coeffs`` maps integer frequency tuples k (|k|_inf <= band) to
    complex coefficient vectors over the increasing multi-indices.  A
    real-valued form satisfies coeff(-k) == conj(coeff(k)).
    """

    def __init__(self, chart: MetricChart, degree: int, band: int, coeffs: dict):
        if not chart.is_torus:
            raise ValueError("FourierForm requires a flat torus chart")
        if degree < 0 or degree > chart.n:
            raise ValueError(f"degree {degree} out of range for n={chart.n}")
        self.chart = chart
        self.degree = int(degree)
        self.band = int(band)
        self.ncomp = len(multi_indices(chart.n, degree))
        clean = {}
        for k, vec in coeffs.items():
            k = tuple(int(x) for x in k)
            if len(k) != chart.n:
                raise ValueError(f"frequency {k} has wrong length")
            if max(abs(x) for x in k) > self.band:
                raise ValueError(f"frequency {k} exceeds band {self.band}")
            vec = np.asarray(vec, dtype=complex).reshape(self.ncomp)
            if np.any(vec != 0):
                clean[k] = vec
        self.coeffs = clean

    def kappa(self, k) -> np.ndarray:
        """Wave vector 2*pi*k/L for frequency tuple k."""
        L = np.asarray(self.chart.periods)
        return 2.0 * math.pi * np.asarray(k, dtype=float) / L

    def coeff(self, k) -> np.ndarray:
        return self.coeffs.get(tuple(k), np.zeros(self.ncomp, dtype=complex))

    def frequencies(self):
        return sorted(self.coeffs)

    def reality_defect(self) -> float:
        """Max |coeff(-k) - conj(coeff(k))| over stored frequencies."""
        worst = 0.0
        for k, vec in self.coeffs.items():
            mirror = self.coeff(tuple(-x for x in k))
            worst = max(worst, float(np.max(np.abs(mirror - np.conj(vec)))))
        return worst

    def values(self, pts) -> np.ndarray:
        """Real component values at points: shape (npoints, C(n, r))."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros((pts.shape[0], self.ncomp), dtype=complex)
        for k, vec in self.coeffs.items():
            phase = np.exp(1j * pts @ self.kappa(k))
            out += phase[:, None] * vec[None, :]
        return out.real

    def map_coeffs(self, fn, degree=None) -> "FourierForm":
        degree = self.degree if degree is None else degree
        return FourierForm(self.chart, degree, self.band,
                           {k: fn(k, vec) for k, vec in self.coeffs.items()})

    def __add__(self, other: "FourierForm") -> "FourierForm":
        if self.chart is not other.chart or self.degree != other.degree:
            raise ValueError("mismatched Fourier forms")
        coeffs = {k: vec.copy() for k, vec in self.coeffs.items()}
        for k, vec in other.coeffs.items():
            coeffs[k] = coeffs.get(k, 0) + vec
        return FourierForm(self.chart, self.degree,
                           max(self.band, other.band), coeffs)

    def __sub__(self, other: "FourierForm") -> "FourierForm":
        return self + other.scaled(-1.0)

    def scaled(self, c) -> "FourierForm":
        return self.map_coeffs(lambda k, vec: c * vec)


def torus_volume(chart: MetricChart) -> float:
    return float(np.prod(chart.periods))


def random_fourier_form(chart: MetricChart, degree: int, band: int,
                        seed: int = 0, scale: float = 1.0) -> FourierForm:
    """Seeded random real band-limited form on a flat torus."""
    rng = np.random.default_rng(seed)
    ncomp = len(multi_indices(chart.n, degree))
    coeffs = {}
    zero = (0,) * chart.n
    coeffs[zero] = rng.uniform(-1, 1, size=ncomp).astype(complex) * scale
    for k in half_space_frequencies(chart.n, band):
        vec = (rng.uniform(-1, 1, size=ncomp)
               + 1j * rng.uniform(-1, 1, size=ncomp)) * (scale / 2.0)
        coeffs[k] = vec
        coeffs[tuple(-x for x in k)] = np.conj(vec)
    return FourierForm(chart, degree, band, coeffs)


def half_space_frequencies(n: int, band: int):
    """Lexicographically positive frequencies with |k|_inf <= band."""
    out = []
    for k in itertools.product(range(-band, band + 1), repeat=n):
        for x in k:
            if x > 0:
                out.append(k)
                break
            if x < 0:
                break
    return out


# ---------------------------------------------------------------------------
# wedge product

def wedge(a: ExprForm, b: ExprForm) -> ExprForm:
    """Alternating wedge product with shuffle signs."""
    if a.chart is not b.chart:
        raise ValueError("forms live on different charts")
    degree = a.degree + b.degree
    if degree > a.chart.n:
        raise ValueError(
            f"wedge degree {degree} exceeds dimension {a.chart.n}")
    comps: dict = {}
    for I, ea in a.components.items():
        for J, eb in b.components.items():
            sign = merge_sign(I, J)
            if sign == 0:
                continue
            K = tuple(sorted(I + J))
            term = mul(ea, eb)
            if sign < 0:
                term = mul(num(-1.0), term)
            comps[K] = add(comps.get(K, Num(0.0)), term)
    return ExprForm(a.chart, degree, comps)


# ---------------------------------------------------------------------------
# inner products

def raised_gram(ginv: np.ndarray, n: int, r: int) -> np.ndarray:
    """Gram matrix G^{IJ} = det(g^{i_a j_b}) on increasing multi-indices.

    ``ginv`` has shape (m, n, n); result has shape (m, C(n,r), C(n,r)).
    """
    keys = multi_indices(n, r)
    m = ginv.shape[0]
    if r == 0:
        return np.ones((m, 1, 1))
    out = np.empty((m, len(keys), len(keys)))
    for ci, I in enumerate(keys):
        rows = np.asarray(I) - 1
        for cj, J in enumerate(keys):
            cols = np.asarray(J) - 1
            minor = ginv[:, rows[:, None], cols[None, :]]
            out[:, ci, cj] = np.linalg.det(minor)
    return out


def pointwise_inner(a: ExprForm, b: ExprForm, pts) -> np.ndarray:
    """g(a, b) at points, contracting every slot with the inverse metric."""
    a._check_match(b)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    ginv = a.chart.inverse_metric_at(pts)
    gram = raised_gram(ginv, a.chart.n, a.degree)
    va = a.values(pts)
    vb = b.values(pts)
    return np.einsum("mij,mi,mj->m", gram, va, vb)


def global_inner(a: FourierForm, b: FourierForm) -> float:
    """<a, b> = integral of g(a, b) over the torus, evaluated exactly
    through Parseval's identity."""
    if a.chart is not b.chart or a.degree != b.degree:
        raise ValueError("mismatched Fourier forms")
    total = 0.0 + 0.0j
    for k, vec in a.coeffs.items():
        total += np.vdot(b.coeff(k), vec)  # sum conj(b) * a
    total *= torus_volume(a.chart)
    if abs(total.imag) > 1e-9 * max(1.0, abs(total.real)):
        raise ValueError("inner product of non-real forms")
    return float(total.real)


# ---------------------------------------------------------------------------
# Hodge star

def _star_sign_table(n: int, r: int):
    keys = multi_indices(n, r)
    table = []
    for I in keys:
        J = complement(n, I)
        table.append((I, J, merge_sign(I, J)))
    return table


def hodge_star(form):
    """Hodge star in the coordinate orientation dx1 ^ ... ^ dxn.

    (*w)_J = sqrt(det g) * sign(I, J) * w^I with I the complement of J.
    """
    if isinstance(form, FourierForm):
        return _star_fourier(form)
    return _star_expr(form)


def _star_fourier(form: FourierForm) -> FourierForm:
    n, r = form.chart.n, form.degree
    pos = index_position(n, n - r)
    src = multi_indices(n, r)

    def mapper(k, vec):
        out = np.zeros(len(multi_indices(n, n - r)), dtype=complex)
        for ci, I in enumerate(src):
            J = complement(n, I)
            out[pos[J]] = merge_sign(I, J) * vec[ci]
        return out

    return form.map_coeffs(mapper, degree=n - r)


def _star_expr(form: ExprForm) -> ExprForm:
    chart, r = form.chart, form.degree
    n = chart.n
    ginv = chart.inverse_exprs()
    sqrtdet = chart.sqrt_det_expr()
    comps = {}
    for I, J, sign in _star_sign_table(n, r):
        raised = _raise_component(form, I, ginv)
        if raised == Num(0.0):
            continue
        term = mul(sqrtdet, raised)
        if sign < 0:
            term = mul(num(-1.0), term)
        comps[J] = term
    return ExprForm(chart, n - r, comps)


def _raise_component(form: ExprForm, I, ginv) -> Expr:
    """w^I = sum_K det(g^{i_a k_b}) w_K as an expression."""
    r = form.degree
    if r == 0:
        return form.component(())
    total = Num(0.0)
    for K, e in form.components.items():
        minor = [[ginv[i - 1][k - 1] for k in K] for i in I]
        total = add(total, mul(_perm_det(minor), e))
    return total


def _perm_det(matrix) -> Expr:
    r = len(matrix)
    total = Num(0.0)
    for perm in itertools.permutations(range(r)):
        sign = _perm_parity(perm)
        term = matrix[0][perm[0]]
        for i in range(1, r):
            term = mul(term, matrix[i][perm[i]])
        total = add(total, term) if sign > 0 else sub(total, term)
    return total


def _perm_parity(perm) -> int:
    perm = list(perm)
    parity = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            parity = -parity
    return parity


# ---------------------------------------------------------------------------
# representation conversion

def fourier_to_expr(form: FourierForm) -> ExprForm:
    """Expand a band-limited Fourier form into trig expression components."""
    chart = form.chart
    L = chart.periods
    comps = {}
    for I in multi_indices(chart.n, form.degree):
        pos = index_position(chart.n, form.degree)[I]
        total = Num(0.0)
        zero = (0,) * chart.n
        c0 = form.coeff(zero)[pos]
        if c0 != 0:
            total = num(c0.real)
        for k in half_space_frequencies(chart.n, form.band):
            c = form.coeff(k)[pos]
            if c == 0:
                continue
            phase = Num(0.0)
            for axis, kx in enumerate(k):
                if kx == 0:
                    continue
                coef = 2.0 * math.pi * kx / L[axis]
                phase = add(phase, mul(num(coef), var(axis + 1)))
            # c e^{i phase} + conj pair = 2 Re(c) cos - 2 Im(c) sin
            total = add(total, mul(num(2.0 * c.real), cos(phase)))
            total = add(total, mul(num(-2.0 * c.imag), sin(phase)))
        if total != Num(0.0):
            comps[I] = total
    return ExprForm(chart, form.degree, comps)


def expr_to_fourier(form: ExprForm, band: int) -> FourierForm:
    """Recover coefficients of a band-limited ExprForm by exact DFT.

    Sampling on a uniform grid with 2*band+1 points per axis is exact
    for trigonometric polynomials within the band.
    """
    chart = form.chart
    if not chart.is_torus:
        raise ValueError("expr_to_fourier requires a flat torus chart")
    n = chart.n
    N = 2 * band + 1
    L = chart.periods
    grids = np.meshgrid(*[np.arange(N) * (Li / N) for Li in L], indexing="ij")
    pts = np.column_stack([g.reshape(-1) for g in grids])
    pos = index_position(n, form.degree)
    coeffs: dict = {}
    for I, e in form.components.items():
        vals = evaluate_on(e, pts).reshape((N,) * n)
        spec = np.fft.fftn(vals) / (N ** n)
        for k in itertools.product(range(-band, band + 1), repeat=n):
            c = spec[tuple(kx % N for kx in k)]
            if abs(c) < 1e-13:
                continue
            vec = coeffs.setdefault(
                k, np.zeros(len(multi_indices(n, form.degree)), dtype=complex))
            vec[pos[I]] = c
    return FourierForm(chart, form.degree, band, coeffs)
