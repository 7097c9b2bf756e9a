import math

import numpy as np
import pytest

from oracles import full_matrix_numbers
from tachibana.forms import half_space_frequencies, multi_indices
from tachibana.spectral import (
    IndeterminateKernelError, assemble_block, bound_check, compute_numbers,
    duality_check, kernel_dimension, number_bounds,
)


class TestAssembleBlock:
    def test_zero_frequency_blocks_vanish(self):
        block = assemble_block(3, 1, (0, 0, 0))
        for matrix in (block.laplace, block.tachibana, block.d, block.dstar):
            assert np.max(np.abs(matrix)) == 0.0

    def test_laplace_block_is_k2_identity(self):
        for k in ((1, 0, 0), (2, -1, 1), (0, 2, 2)):
            block = assemble_block(3, 1, k)
            k2 = float(np.dot(k, k))
            assert np.max(np.abs(block.laplace - k2 * np.eye(3))) <= 1e-12

    def test_tachibana_block_spectrum_n3_r1(self):
        # brute-force eigendecomposition oracle
        block = assemble_block(3, 1, (1, 0, 0))
        eigs = np.sort(np.linalg.eigvalsh(block.tachibana))
        assert np.max(np.abs(eigs - np.array([0.25, 0.25, 1.0 / 3.0]))) <= 1e-12

    def test_laplace_identity_for_unit_frequency(self):
        block = assemble_block(3, 1, (1, 0, 0))
        assert np.max(np.abs(block.laplace - np.eye(3))) <= 1e-15

    @pytest.mark.parametrize("n,r,k", [
        (3, 1, (1, 2, 0)), (3, 2, (1, 1, 1)), (4, 2, (2, 0, -1, 1)),
        (4, 3, (1, 0, 0, 2)),
    ])
    def test_closed_form_block_spectrum(self, n, r, k):
        # coexact eigenvalue |k|^2/(r+1)^2 with multiplicity C(n-1, r),
        # exact eigenvalue |k|^2 (n-r)/((n-r+1) r (r+1)) with C(n-1, r-1)
        block = assemble_block(n, r, k)
        k2 = float(np.dot(k, k))
        coex = k2 / (r + 1) ** 2
        exact = k2 * (n - r) / ((n - r + 1) * r * (r + 1))
        expected = sorted([coex] * math.comb(n - 1, r)
                          + [exact] * math.comb(n - 1, r - 1))
        eigs = np.sort(np.linalg.eigvalsh(block.tachibana))
        assert np.max(np.abs(eigs - np.array(expected))) <= 1e-12 * max(1.0, k2)

    def test_tachibana_block_symmetric_psd(self):
        block = assemble_block(4, 2, (1, -2, 0, 1))
        T = block.tachibana
        assert np.max(np.abs(T - T.T.conj())) <= 1e-14
        assert np.min(np.linalg.eigvalsh(T)) >= -1e-14

    def test_block_adjointness_exact(self):
        for k in ((1, 0, 0), (1, -1, 2)):
            lower = assemble_block(3, 1, k)
            upper = assemble_block(3, 2, k)
            assert np.array_equal(upper.dstar, lower.d.conj().T)

    def test_hodge_split_rank(self):
        # for k != 0: C(n,r) = rank(d at r-1) + rank(d at r)
        for n, r, k in ((3, 1, (1, 2, 0)), (4, 2, (1, 0, 1, -1))):
            up = assemble_block(n, r, k).d
            down_rank = np.linalg.matrix_rank(assemble_block(n, r, k).dstar)
            assert np.linalg.matrix_rank(up) + down_rank == len(
                multi_indices(n, r))

    def test_degree_out_of_range(self):
        with pytest.raises(ValueError):
            assemble_block(3, 3, (1, 0, 0))
        with pytest.raises(ValueError):
            assemble_block(3, 0, (1, 0, 0))


class TestKernelDimension:
    def test_zero_matrix(self):
        assert kernel_dimension(np.zeros((3, 3))) == 3

    def test_identity(self):
        assert kernel_dimension(np.eye(4)) == 0

    def test_unit_frequency_tachibana_block(self):
        block = assemble_block(3, 1, (1, 0, 0))
        assert kernel_dimension(block.tachibana) == 0

    def test_rectangular(self):
        m = np.zeros((5, 3))
        m[0, 0] = 1.0
        assert kernel_dimension(m) == 2

    def test_indeterminate_gap_raises(self):
        m = np.diag([1.0, 2e-9, 5e-10])
        with pytest.raises(IndeterminateKernelError):
            kernel_dimension(m, tol=1e-9)

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            kernel_dimension(np.eye(2), tol=0.0)


class TestComputeNumbers:
    def test_t3_r1(self):
        nums = compute_numbers(3, 1, 2)
        assert (nums.betti, nums.tachibana, nums.killing, nums.planarity) \
            == (3, 3, 3, 3)

    def test_t2_r1(self):
        nums = compute_numbers(2, 1, 3)
        assert (nums.betti, nums.tachibana, nums.killing, nums.planarity) \
            == (2, 2, 2, 2)

    def test_t4_r2(self):
        nums = compute_numbers(4, 2, 2)
        assert nums.betti == 6
        assert nums.tachibana == 6

    def test_band_stability(self):
        values = [compute_numbers(3, 1, band) for band in (1, 2, 3)]
        tuples = [(v.betti, v.tachibana, v.killing, v.planarity)
                  for v in values]
        assert tuples[0] == tuples[1] == tuples[2]

    def test_diagnostics_recorded(self):
        nums = compute_numbers(2, 1, 1)
        assert nums.diagnostics["tol"] == 1e-9
        assert nums.diagnostics["blocks"] == 1 + len(
            half_space_frequencies(2, 1))
        assert "0,0" in nums.diagnostics["smallest_singular_values"]

    def test_validation_errors(self):
        with pytest.raises(ValueError):
            compute_numbers(3, 3, 2)
        with pytest.raises(ValueError):
            compute_numbers(1, 1, 2)
        with pytest.raises(ValueError):
            compute_numbers(3, 1, 0)

    @pytest.mark.parametrize("n,r,band", [(2, 1, 2), (3, 1, 1), (3, 2, 1),
                                          (4, 2, 1)])
    def test_against_full_matrix_oracle(self, n, r, band):
        nums = compute_numbers(n, r, band)
        oracle = full_matrix_numbers(n, r, band)
        assert nums.betti == oracle["betti"]
        assert nums.tachibana == oracle["tachibana"]
        assert nums.killing == oracle["killing"]
        assert nums.planarity == oracle["planarity"]


class TestDualityAndBounds:
    def test_t3_duality(self):
        n1 = compute_numbers(3, 1, 2)
        n2 = compute_numbers(3, 2, 2)
        report = duality_check(n1, n2)
        assert all(entry["equal"] for entry in report.values())

    def test_duality_validation(self):
        with pytest.raises(ValueError):
            duality_check(compute_numbers(3, 1, 2), compute_numbers(3, 1, 2))

    def test_bound_values_n3_r1(self):
        bounds = number_bounds(3, 1)
        assert bounds == {"tachibana": 10, "killing": 6, "planarity": 4}

    def test_bound_check_passes_on_torus(self):
        report = bound_check(compute_numbers(3, 1, 2))
        assert all(entry["within"] for entry in report.values())
        assert report["tachibana"]["bound"] == 10
        assert report["killing"]["bound"] == 6
        assert report["planarity"]["bound"] == 4
