import numpy as np
import pytest

from conftest import KERNELS
from curvlab import (
    KernelSpec,
    MatrixMultiplier,
    build_truncated_module,
    build_truncated_quotient,
    localized_dimension,
    oracle_gram_check,
    quotient_eigenvector_check,
    similarity_map_report,
)
from curvlab.errors import IndeterminateRankError, UnsupportedError
from curvlab.multiplier import PolyC, left_inverse_for, z
from curvlab.truncation import kernel_tail, monomial_norms, numerical_rank, span_rank, truncated_reproducing_residual

Z = z()
A = MatrixMultiplier.from_rows([[1], [Z]])
C = MatrixMultiplier.from_rows([[Z], [1 - Z]])
R2 = MatrixMultiplier.from_rows([[1], [Z], [Z**2]])


class TestModule:
    def test_bergman_weights(self):
        mod = build_truncated_module(KERNELS["bergman"], 6)
        assert np.allclose(np.diag(mod.shift, -1)[:2], [np.sqrt(1 / 2), np.sqrt(2 / 3)])
        assert np.allclose(mod.weights, 1 / np.sqrt(np.arange(1, 8)))

    def test_minimum_degree(self):
        with pytest.raises(ValueError):
            build_truncated_module(KERNELS["szego"], 3)

    def test_ball_unsupported(self):
        with pytest.raises(UnsupportedError):
            monomial_norms(KernelSpec.ball("szego", 2), 5)

    @pytest.mark.parametrize("kname", list(KERNELS))
    def test_reproducing(self, kname):
        mod = build_truncated_module(KERNELS[kname], 12)
        p = PolyC.from_coeffs([1, -2j, 0.5, 3])
        assert truncated_reproducing_residual(mod, p, 0.4 + 0.3j) < 1e-13

    def test_multiplication_is_shift(self):
        mod = build_truncated_module(KERNELS["wb1"], 8)
        assert np.allclose(mod.multiplication(Z), mod.shift)


class TestRank:
    def test_clear_gap(self):
        assert numerical_rank(np.array([1.0, 0.5, 1e-14])) == 2

    def test_ambiguous(self):
        with pytest.raises(IndeterminateRankError) as info:
            numerical_rank(np.array([1.0, 1e-8]))
        assert info.value.gap is not None

    def test_zero(self):
        assert numerical_rank(np.zeros(3)) == 0


class TestQuotient:
    @pytest.mark.parametrize("N", [6, 20])
    def test_dimension(self, N):
        assert build_truncated_quotient(KERNELS["szego"], A, N).dim == N + 1

    def test_rank_two_dimension(self):
        assert build_truncated_quotient(KERNELS["bergman"], R2, 10).dim == 2 * 11


class TestEigenvectors:
    @pytest.mark.parametrize("kname", list(KERNELS))
    @pytest.mark.parametrize("theta", [A, C, R2], ids=["one_z", "z_1mz", "rank2"])
    @pytest.mark.parametrize("w", [0.0, 0.45j, -0.6])
    def test_residuals(self, kname, theta, w):
        ec = quotient_eigenvector_check(KERNELS[kname], theta, w, 48)
        assert ec.max <= 1e-8

    @pytest.mark.parametrize("theta, m", [(A, 1), (R2, 2)])
    def test_localized(self, theta, m):
        assert localized_dimension(KERNELS["bergman"], theta, 0.3 - 0.2j, 48) == m

    def test_too_small_n(self):
        with pytest.raises(IndeterminateRankError, match="too small"):
            localized_dimension(KERNELS["szego"], A, 0.5j, 12)

    def test_tail_szego(self):
        assert kernel_tail(KERNELS["szego"], 0.5, 10) == pytest.approx(0.5**11, rel=1e-10)

    def test_span_rank(self):
        ws = [0.1, 0.3j, -0.2, 0.5]
        assert span_rank(KERNELS["szego"], A, ws, 40) == 4


class TestGramOracle:
    def test_geometric_decay(self):
        devs = [oracle_gram_check(KERNELS["szego"], A, 0.6, 0.6, N) for N in (12, 24, 48)]
        assert devs[0] > devs[1] > devs[2]
        assert devs[2] < 1e-12

    def test_off_diagonal(self):
        assert oracle_gram_check(KERNELS["bergman"], C, 0.3, -0.5j, 48) < 1e-10


class TestSimilarityMap:
    def test_trivial_is_isometric(self):
        th = MatrixMultiplier.from_rows([[1], [0]])
        rep = similarity_map_report(KERNELS["szego"], th, MatrixMultiplier.from_rows([[1, 0]]), 16)
        assert rep.condition == pytest.approx(1.0)

    @pytest.mark.parametrize("kname", ["szego", "bergman"])
    def test_bounded_trend(self, kname):
        psi = left_inverse_for(C)
        conds = [similarity_map_report(KERNELS[kname], C, psi, N).condition for N in (12, 24, 48)]
        assert all(b >= a - 1e-12 for a, b in zip(conds, conds[1:]))
        assert conds[-1] < 4.0

    def test_module_residual_decreases(self):
        psi = left_inverse_for(C)
        res = [similarity_map_report(KERNELS["szego"], C, psi, N).module_residual for N in (12, 24, 48)]
        assert res[2] < res[0]
        assert res[2] < 1e-12
