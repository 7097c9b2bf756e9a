"""Exact per-frequency operator blocks on flat tori and the kernel
dimensions they carry: Betti, Tachibana, Killing and planarity numbers.

On a flat torus every operator acts frequency by frequency on the
C(n, r)-dimensional coefficient space, so kernels of the Hodge and
Tachibana Laplacians (and their intersections with ker d* / ker d) are
computed exactly from small dense blocks.  Real dimensions are counted
over a half-space of frequency representatives with multiplicity two
(sine/cosine pairs), plus the k = 0 block once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .forms import half_space_frequencies, multi_indices
from .operators import wedge_matrix

__all__ = [
    "FreqBlock", "SpectralNumbers", "IndeterminateKernelError",
    "assemble_block", "kernel_dimension", "compute_numbers",
    "duality_check", "bound_check", "number_bounds",
]

DEFAULT_TOL = 1e-9
GAP_FACTOR = 1e3


class IndeterminateKernelError(RuntimeError):
    """Spectral gap between kept and dropped singular values is too small
    to call the kernel dimension; signals band/tolerance misconfiguration."""


@dataclass
class FreqBlock:
    """Operator blocks at one frequency: Laplace and Tachibana blocks are
    C(n,r) x C(n,r); d maps degree r -> r+1 and d* maps r -> r-1."""
    k: tuple
    degree: int
    laplace: np.ndarray
    tachibana: np.ndarray
    d: np.ndarray
    dstar: np.ndarray


@dataclass
class SpectralNumbers:
    n: int
    degree: int
    band: int
    betti: int
    tachibana: int
    killing: int
    planarity: int
    tol: float
    diagnostics: dict = field(default_factory=dict)


def assemble_block(n: int, r: int, k, periods=None) -> FreqBlock:
    """Exact operator blocks at integer frequency k on the flat torus.

    The d block is exterior multiplication by i * kappa, its conjugate
    transpose is the d* block, the Laplace block is |kappa|^2 * identity,
    and the Tachibana block is
        1/(r(r+1)) (|kappa|^2 I - 1/(r+1) d*d - 1/(n-r+1) dd*).
    """
    if not 1 <= r <= n - 1:
        raise ValueError(f"degree must satisfy 1 <= r <= n-1, got r={r}")
    k = tuple(int(x) for x in k)
    if periods is None:
        periods = (2 * math.pi,) * n
    kappa = 2 * math.pi * np.asarray(k, dtype=float) / np.asarray(periods)
    E_r = wedge_matrix(n, r, kappa)
    E_rm1 = wedge_matrix(n, r - 1, kappa)
    d_block = 1j * E_r
    dstar_block = -1j * E_rm1.T
    dstar_d = E_r.T @ E_r
    d_dstar = E_rm1 @ E_rm1.T
    k2 = float(kappa @ kappa)
    ncomp = len(multi_indices(n, r))
    laplace = k2 * np.eye(ncomp)
    tachibana = (laplace - dstar_d / (r + 1) - d_dstar / (n - r + 1)) \
        / (r * (r + 1))
    return FreqBlock(k=k, degree=r, laplace=laplace, tachibana=tachibana,
                     d=d_block, dstar=dstar_block)


def kernel_dimension(matrix, tol: float = DEFAULT_TOL) -> int:
    """Kernel dimension by singular value counting with a gap check.

    Counts singular values below tol * max(1, s_max); requires the ratio
    between the smallest kept and the largest dropped singular value to
    be at least 1e3, otherwise raises IndeterminateKernelError.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    matrix = np.asarray(matrix)
    ncols = matrix.shape[1]
    if matrix.size == 0:
        return ncols
    s = np.linalg.svd(matrix, compute_uv=False)
    threshold = tol * max(1.0, float(s[0]) if s.size else 1.0)
    kept = s[s >= threshold]
    dropped = s[s < threshold]
    if kept.size and dropped.size:
        largest_dropped = float(dropped.max())
        if largest_dropped > 0 and float(kept.min()) / largest_dropped < GAP_FACTOR:
            raise IndeterminateKernelError(
                f"singular values {float(kept.min()):.3e} (kept) and "
                f"{largest_dropped:.3e} (dropped) are not separated by "
                f"a factor of {GAP_FACTOR:g}")
    return ncols - int(kept.size)


def _stack(*matrices) -> np.ndarray:
    return np.vstack([np.asarray(m) for m in matrices])


def compute_numbers(n: int, r: int, band: int, tol: float = DEFAULT_TOL,
                    periods=None) -> SpectralNumbers:
    """Betti, Tachibana, Killing and planarity numbers of the flat torus
    restricted to the band |k|_inf <= band.

    b_r counts ker(Laplace), t_r counts ker(Tachibana), k_r and p_r count
    the kernels of the Tachibana block stacked with the d* and d blocks.
    Intersections are computed by stacking matrices, never by projecting
    kernel bases onto each other.
    """
    if n < 2:
        raise ValueError(f"torus dimension must be >= 2, got {n}")
    if not 1 <= r <= n - 1:
        raise ValueError(f"degree must satisfy 1 <= r <= n-1, got r={r}")
    if band < 1:
        raise ValueError(f"band limit must be >= 1, got {band}")

    counts = {"betti": 0, "tachibana": 0, "killing": 0, "planarity": 0}
    per_block = {}
    zero = (0,) * n
    frequencies = [(zero, 1)] + [(k, 2) for k in half_space_frequencies(n, band)]
    for k, multiplicity in frequencies:
        block = assemble_block(n, r, k, periods=periods)
        stacks = {
            "betti": block.laplace,
            "tachibana": block.tachibana,
            "killing": _stack(block.tachibana, block.dstar),
            "planarity": _stack(block.tachibana, block.d),
        }
        smallest = {}
        for name, matrix in stacks.items():
            counts[name] += multiplicity * kernel_dimension(matrix, tol)
            s = np.linalg.svd(matrix, compute_uv=False)
            smallest[name] = float(s[-1]) if s.size else 0.0
        per_block[",".join(str(x) for x in k)] = smallest

    diagnostics = {
        "tol": tol,
        "blocks": len(frequencies),
        "smallest_singular_values": per_block,
    }
    return SpectralNumbers(n=n, degree=r, band=band, tol=tol,
                           betti=counts["betti"], tachibana=counts["tachibana"],
                           killing=counts["killing"],
                           planarity=counts["planarity"],
                           diagnostics=diagnostics)


def duality_check(numbers_r: SpectralNumbers,
                  numbers_nr: SpectralNumbers) -> dict:
    """Duality identities between degrees r and n - r:
    b_r = b_{n-r}, t_r = t_{n-r}, p_r = k_{n-r}."""
    if numbers_r.n != numbers_nr.n:
        raise ValueError("duality check needs numbers on the same torus")
    if numbers_r.degree + numbers_nr.degree != numbers_r.n:
        raise ValueError("duality check needs complementary degrees")
    if (numbers_r.band, numbers_r.tol) != (numbers_nr.band, numbers_nr.tol):
        raise ValueError("duality check needs matching band and tolerance")
    pairs = {
        "betti": (numbers_r.betti, numbers_nr.betti),
        "tachibana": (numbers_r.tachibana, numbers_nr.tachibana),
        "planarity_vs_killing": (numbers_r.planarity, numbers_nr.killing),
        "killing_vs_planarity": (numbers_r.killing, numbers_nr.planarity),
    }
    return {name: {"values": list(vals), "equal": vals[0] == vals[1]}
            for name, vals in pairs.items()}


def number_bounds(n: int, r: int) -> dict:
    """Dimension upper bounds for the Tachibana, Killing and planarity
    numbers of an n-manifold at degree r."""
    return {
        "tachibana": math.factorial(n + 2)
        // (math.factorial(r + 1) * math.factorial(n - r + 1)),
        "killing": math.factorial(n + 1)
        // (math.factorial(r + 1) * math.factorial(n - r)),
        "planarity": math.factorial(n + 1)
        // (math.factorial(r) * math.factorial(n - r + 1)),
    }


def bound_check(numbers: SpectralNumbers) -> dict:
    """Compare computed numbers against their dimension upper bounds."""
    bounds = number_bounds(numbers.n, numbers.degree)
    values = {"tachibana": numbers.tachibana, "killing": numbers.killing,
              "planarity": numbers.planarity}
    return {name: {"value": values[name], "bound": bounds[name],
                   "within": values[name] <= bounds[name]}
            for name in bounds}
