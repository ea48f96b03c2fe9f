import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab import GramFunction, KernelSpec, MatrixMultiplier, cokernel_frame, delta_theta, exact_curvature, line_curvature
from curvlab.bundle import curvature_from_gram, local_frames
from curvlab.errors import DomainError, MetricDegeneracyError, ShapeError, SingularPointError
from curvlab.kernels import eval_kernel
from curvlab.multiplier import PolyC, z

Z = z()
coef = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


def random_column(cs):
    entries = [PolyC.from_coeffs(c) for c in cs]
    return MatrixMultiplier(tuple((e,) for e in entries))


class TestDelta:
    def test_components(self):
        d = delta_theta(MatrixMultiplier.from_rows([[1], [Z]]))
        assert np.allclose(d.components[0].coeffs(), [0, 1])
        assert np.allclose(d.components[1].coeffs(), [-1])

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.lists(coef, min_size=1, max_size=3), min_size=3, max_size=3))
    def test_annihilates_columns(self, cs):
        th = random_column(cs[:2])
        th = MatrixMultiplier.from_rows([[th[0, 0], 1], [th[1, 0], Z], [PolyC.from_coeffs(cs[2]), Z**2]])
        D = delta_theta(th).matrix
        assert (D.transpose() @ th).max_abs_coeff() <= 1e-12 * max(1.0, th.max_abs_coeff()) ** 4

    def test_wrong_shape(self):
        with pytest.raises(ShapeError):
            delta_theta(MatrixMultiplier.from_rows([[1], [Z], [Z**2]]))


class TestCokernelFrame:
    th = MatrixMultiplier.from_rows([[1], [Z], [Z**2]])

    def test_annihilates(self):
        f = cokernel_frame(self.th, 0.2)
        assert (f.matrix.transpose() @ self.th).max_abs_coeff() == 0

    def test_rank(self):
        assert cokernel_frame(self.th, 0.0).rank == 2

    def test_singular_point(self):
        with pytest.raises(SingularPointError):
            cokernel_frame(MatrixMultiplier.from_rows([[Z], [Z**2], [Z**3]]), 0.0)

    def test_chart_cover(self):
        th = MatrixMultiplier.from_rows([[Z], [1 - Z], [Z**2]])
        pts = np.linspace(-0.9, 0.9, 19)[:, None]
        frames = local_frames(th, pts)
        covered = np.sort(np.concatenate([idx for _, idx in frames]))
        assert np.array_equal(covered, np.arange(19))


class TestLineCurvature:
    @pytest.mark.parametrize("spec, c", [(KernelSpec("szego"), 1), (KernelSpec("bergman"), 2)])
    @pytest.mark.parametrize("r", [0.0, 0.45, 0.7])
    def test_disk(self, spec, c, r):
        k = line_curvature(lambda p: eval_kernel(spec, p, p), r, domain=spec)
        assert k.blocks[0, 0, 0, 0].real == pytest.approx(-c / (1 - r * r) ** 2, rel=1e-6)

    def test_drury_arveson_origin(self):
        spec = KernelSpec.ball("drury_arveson", 2)
        k = line_curvature(lambda p: eval_kernel(spec, p, p), np.zeros(2), domain=spec)
        assert np.allclose(k.blocks[..., 0, 0], -np.eye(2), atol=1e-7)

    def test_non_positive_metric(self):
        with pytest.raises(DomainError):
            line_curvature(lambda p: -np.ones(p.shape[:-1]), 0.1)


class TestTwistCurvature:
    """``G_f = 1 + |z|^2`` for ``Theta = [[1],[z]]``, so the curvature is ``-1/(1+|z|^2)^2``."""

    @pytest.mark.parametrize("w", [0.0, 0.3, 0.5 - 0.5j])
    def test_exact(self, w):
        g = GramFunction(delta_theta(MatrixMultiplier.from_rows([[1], [Z]])))
        k = exact_curvature(g, w)
        assert k.blocks[0, 0, 0, 0].real == pytest.approx(-1 / (1 + abs(w) ** 2) ** 2, rel=1e-13)

    def test_fd_matches_exact(self):
        th = MatrixMultiplier.from_rows([[1, 0], [0, 1], [Z, Z**2]])
        g = GramFunction(cokernel_frame(th, 0.0), KernelSpec("bergman"))
        pts = np.array([[0.1], [0.4j], [-0.3 + 0.2j]])
        ex = exact_curvature(g, pts).orthonormal()
        fd = curvature_from_gram(g.metric, pts).orthonormal()
        assert np.abs(ex - fd).max() < 1e-6


class TestFrameInvariance:
    @settings(max_examples=25, deadline=None)
    @given(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7))
    def test_charts_agree(self, x, y):
        w = complex(x, y) * 0.9
        th = MatrixMultiplier.from_rows([[Z], [1 - Z], [Z**2 + 0.5]])
        vals = []
        for centre in (0.0, 0.6, -0.6):
            try:
                f = cokernel_frame(th, centre)
                if not f.in_chart(np.array([[w]]))[0]:
                    continue
                vals.append(np.linalg.eigvalsh(exact_curvature(GramFunction(f), w).full_matrix()))
            except SingularPointError:
                continue
        for v in vals[1:]:
            assert np.allclose(v, vals[0], atol=1e-9)

    def test_hermitian(self):
        th = MatrixMultiplier.from_rows([[1, 0], [0, 1], [Z, Z**2]])
        k = exact_curvature(GramFunction(cokernel_frame(th, 0.0), KernelSpec("szego")), np.array([[0.3j], [0.5]]))
        assert k.hermitian_defect() < 1e-12

    def test_degenerate_metric(self):
        with pytest.raises(MetricDegeneracyError):
            g = GramFunction(MatrixMultiplier.from_rows([[Z, 1], [Z, 1]]))
            exact_curvature(g, 0.0)
