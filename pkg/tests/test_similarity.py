import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import KERNELS
from curvlab import (
    GramFunction,
    GridSpec,
    MatrixMultiplier,
    QuotientSpec,
    build_idempotent,
    carleson_diagnostic,
    defect_profile,
    delta_theta,
    hs_projection_derivative,
    similarity_defect,
    splitting_angle,
    uniform_equivalence_diagnostic,
)
from curvlab.errors import CertificateError, ShapeError, UnsupportedError
from curvlab.multiplier import left_inverse_for, z

Z = z()
A = MatrixMultiplier.from_rows([[1], [Z]])
C = MatrixMultiplier.from_rows([[Z], [1 - Z]])
TRIVIAL = MatrixMultiplier.from_rows([[1], [0]])
TRIVIAL_PSI = MatrixMultiplier.from_rows([[1, 0]])


class TestIdempotent:
    def test_closed_form(self):
        Q = build_idempotent(C, MatrixMultiplier.from_rows([[1, 1]]))
        expected = np.array([[0.7, -0.3], [-0.7, 0.3]])
        assert np.allclose(Q(np.array([[0.3]]))[0], expected)
        assert all(v == 0 for v in Q.residuals.values())

    def test_bad_psi(self):
        with pytest.raises(CertificateError):
            build_idempotent(C, MatrixMultiplier.from_rows([[1, 0]]))

    def test_shape(self):
        with pytest.raises(ShapeError):
            build_idempotent(C, MatrixMultiplier.from_rows([[1], [1]]))

    def test_rank_two(self):
        th = MatrixMultiplier.from_rows([[1], [Z], [Z**2]])
        Q = build_idempotent(th, MatrixMultiplier.from_rows([[1, 0, 0]]))
        assert Q.rank == 2


class TestSplittingAngle:
    def test_trivial(self, small_grid):
        angle, cond = splitting_angle(TRIVIAL, build_idempotent(TRIVIAL, TRIVIAL_PSI), small_grid)
        assert angle == pytest.approx(np.pi / 2)
        assert cond == pytest.approx(1.0)

    def test_bezout_pair(self):
        # at z the two lines are spanned by (z, 1-z) and (1, -1)
        Q = build_idempotent(C, left_inverse_for(C))
        w = 0.5
        u, v = np.array([w, 1 - w]), np.array([1, -1])
        cos = abs(u @ v) / np.linalg.norm(u) / np.linalg.norm(v)
        angle, _ = splitting_angle(C, Q, np.array([[w]]))
        assert angle == pytest.approx(np.arccos(cos))

    def test_positive_for_one_z(self, small_grid):
        Q = build_idempotent(A, MatrixMultiplier.from_rows([[1, 0]]))
        angle, cond = splitting_angle(A, Q, small_grid)
        assert 0 < angle <= np.pi / 2
        assert np.isfinite(cond)


class TestHSProjection:
    @pytest.mark.parametrize("w", [0.0, 0.5, 0.3 - 0.4j])
    def test_trivial_szego(self, w):
        g = GramFunction(delta_theta(TRIVIAL), KERNELS["szego"])
        assert hs_projection_derivative(g, w) == pytest.approx(1 / (1 - abs(w) ** 2) ** 2, rel=1e-13)

    @pytest.mark.parametrize("w", [0.0, 0.2, 0.6j])
    def test_twisted_defect(self, w):
        h = similarity_defect(QuotientSpec(KERNELS["szego"], A), w)
        assert h == pytest.approx(1 / (1 + abs(w) ** 2) ** 2, rel=1e-12)

    def test_rank_two_trace(self):
        th = MatrixMultiplier.from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 0], [0, 0, 0]])
        h = similarity_defect(QuotientSpec(KERNELS["szego"], th), np.array([[0.1], [0.7]]))
        assert np.abs(h).max() < 1e-10

    def test_disk_only(self):
        g = GramFunction(delta_theta(MatrixMultiplier.from_rows([[z(2, 1) + 1], [z(2, 0)]])))
        with pytest.raises(UnsupportedError):
            hs_projection_derivative(g, np.zeros(2))

    def test_non_szego_warns(self):
        with pytest.warns(UserWarning):
            similarity_defect(QuotientSpec(KERNELS["bergman"], A), 0.1)

    def test_profile_flag(self, small_grid):
        prof = defect_profile(QuotientSpec(KERNELS["bergman"], A), small_grid)
        assert prof.kernel_warning
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert not defect_profile(QuotientSpec(KERNELS["szego"], A), small_grid).kernel_warning


class TestCarleson:
    def test_level_zero_quadrature(self):
        r_max = 0.9
        rep = carleson_diagnostic(QuotientSpec(KERNELS["szego"], A), 0, GridSpec.disk(r_max))
        mass, _ = quad(lambda r: 2 * np.pi * (1 - r) * r / (1 + r * r) ** 2, 0, r_max)
        assert rep.level_sups[0] == pytest.approx(mass, rel=1e-4)

    def test_trivial_is_zero(self):
        rep = carleson_diagnostic(QuotientSpec(KERNELS["szego"], TRIVIAL), 4, n_radial=64, n_angular=64)
        assert rep.sup_ratio < 1e-10

    def test_levels_bounds(self):
        with pytest.raises(ValueError):
            carleson_diagnostic(QuotientSpec(KERNELS["szego"], A), 11)

    def test_json_keys(self):
        rep = carleson_diagnostic(QuotientSpec(KERNELS["szego"], A), 2, n_radial=32, n_angular=32)
        assert {"sup_ratio", "pointwise_constant", "truncation_radius"} <= set(rep.to_json())


class TestUniformEquivalence:
    def test_one_z(self):
        lo, hi = uniform_equivalence_diagnostic(A, GridSpec.disk(0.8))
        assert lo == pytest.approx(1.0)
        assert hi == pytest.approx(np.sqrt(1.64))


class TestKernelIndependence:
    @settings(max_examples=10, deadline=None)
    @given(st.sampled_from(list(KERNELS)))
    def test_angle_does_not_see_kernel(self, name):
        grid = GridSpec.disk(0.8, 4, 8)
        Q = build_idempotent(C, left_inverse_for(C))
        ref = splitting_angle(C, Q, grid)
        QuotientSpec(KERNELS[name], C)
        assert splitting_angle(C, Q, grid) == ref
