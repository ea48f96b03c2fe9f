"""Frames, Gram kernels and Chern curvature of the quotient bundles.

Frames are polynomial: the fibre ``ker Theta(z)^T`` is spanned by holomorphic
polynomial vectors ``f_i(z)``; the anti-holomorphic frame of the quotient
bundle is ``k_z (x) conj f_i(z)``. Curvature blocks are the coefficients of
``dw_i ^ dwbar_j`` of the form ``dbar(G^{-1} dG)``, i.e.
``block[i, j] = -dbar_j(G^{-1} d_i G)``, which reduces to
``-d_i dbar_j log g`` for line bundles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from .errors import (
    ChartError,
    DomainError,
    MetricDegeneracyError,
    ShapeError,
    SingularPointError,
)
from .kernels import DEFAULT_MARGIN, KernelSpec, as_points, eval_kernel, kernel_jet
from .multiplier import MatrixMultiplier, PolyC, _det, require_multiplier_shape
from .wirtinger import wirtinger_jet

CHART_RATIO = 0.1
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class DeltaFrame:
    """Signed maximal minors of ``Theta`` (the formal determinant)."""

    components: tuple[PolyC, ...]

    @property
    def matrix(self) -> MatrixMultiplier:
        return MatrixMultiplier(tuple((c,) for c in self.components))

    @property
    def rank(self) -> int:
        return 1

    def __call__(self, z) -> np.ndarray:
        return np.stack([c(z) for c in self.components], axis=-1)

    def validate(self, z) -> None:
        v = np.linalg.norm(self(z), axis=-1)
        if np.any(v < 1e-12):
            raise SingularPointError("Delta_Theta vanishes: Theta drops rank")


def delta_theta(theta: MatrixMultiplier) -> DeltaFrame:
    """Cofactor expansion of the formal determinant ``det[e | Theta]``."""
    q, p = theta.shape
    if q != p + 1:
        raise ShapeError(f"delta_theta needs q = p + 1, got {theta.shape}; use cokernel_frame")
    comps = []
    for i in range(q):
        rows = [r for r in range(q) if r != i]
        minor = _det(theta.submatrix(rows), theta.nvars)
        comps.append(minor if i % 2 == 0 else -minor)
    return DeltaFrame(tuple(comps))


@dataclass(frozen=True)
class CokernelFrame:
    """Cramer frame of ``ker Theta(z)^T`` on the chart of a pivot minor.

    Column ``c`` belongs to the ``c``-th non-pivot row ``r``: entry ``-det Theta_P``
    in slot ``r`` and ``det(Theta_P with row a replaced by row r)`` in pivot
    slot ``P[a]``, so every entry is a polynomial.
    """

    pivot_rows: tuple[int, ...]
    matrix: MatrixMultiplier
    pivot_det: PolyC
    center: np.ndarray = field(compare=False)
    center_det: float = 0.0

    @property
    def rank(self) -> int:
        return self.matrix.cols

    def __call__(self, z) -> np.ndarray:
        self.validate(z)
        return self.matrix(z)

    def in_chart(self, z) -> np.ndarray:
        return np.abs(self.pivot_det(z)) >= CHART_RATIO * self.center_det

    def validate(self, z) -> None:
        if not np.all(self.in_chart(z)):
            raise ChartError(
                f"point outside the chart of pivot rows {self.pivot_rows} "
                f"(|det| < {CHART_RATIO} * {self.center_det:.3g})"
            )


def select_pivots(theta: MatrixMultiplier, z0) -> tuple[tuple[int, ...], float]:
    """Pivot rows maximising ``|det Theta_P(z0)|``; ties go to the lexicographically first."""
    q, p = theta.shape
    T = theta(as_points(z0, theta.nvars))
    sv = np.linalg.svd(T, compute_uv=False)
    if sv[-1] <= 1e-10 * max(sv[0], 1.0):
        raise SingularPointError(f"rank Theta(z0) < {p} at z0 = {np.ravel(z0).tolist()}")
    best, best_val = None, -1.0
    for rows in combinations(range(q), p):
        val = abs(np.linalg.det(T[list(rows)]))
        if val > best_val * (1 + 1e-12):
            best, best_val = rows, val
    return best, best_val


def cokernel_frame(theta: MatrixMultiplier, z0) -> CokernelFrame:
    require_multiplier_shape(theta)
    q, p = theta.shape
    z0 = as_points(z0, theta.nvars)
    pivots, val = select_pivots(theta, z0)
    minor_rows = theta.submatrix(pivots)
    d = _det(minor_rows, theta.nvars)
    cols = []
    for r in range(q):
        if r in pivots:
            continue
        col = [PolyC(theta.nvars)] * q
        col[r] = -d
        for a, pa in enumerate(pivots):
            replaced = [list(row) for row in minor_rows]
            replaced[a] = list(theta.entries[r])
            col[pa] = _det(replaced, theta.nvars)
        cols.append(col)
    mat = MatrixMultiplier(tuple(tuple(cols[c][i] for c in range(len(cols))) for i in range(q)))
    return CokernelFrame(pivots, mat, d, z0, float(abs(d(z0))))


def frame_for(theta: MatrixMultiplier, z0=None):
    """``Delta_Theta`` when ``q = p + 1`` (a global frame), otherwise a Cramer chart at ``z0``."""
    require_multiplier_shape(theta)
    if theta.rows == theta.cols + 1:
        return delta_theta(theta)
    if z0 is None:
        z0 = np.zeros(theta.nvars, dtype=complex)
    return cokernel_frame(theta, z0)


def local_frames(theta: MatrixMultiplier, points) -> list[tuple[object, np.ndarray]]:
    """Cover ``points`` by frames; returns ``[(frame, indices), ...]`` in first-index order."""
    pts = as_points(points, theta.nvars).reshape(-1, theta.nvars)
    if theta.rows == theta.cols + 1:
        frame = delta_theta(theta)
        frame.validate(pts)
        return [(frame, np.arange(len(pts)))]
    groups: dict[tuple[int, ...], list[int]] = {}
    for k, z0 in enumerate(pts):
        pivots, _ = select_pivots(theta, z0)
        groups.setdefault(pivots, []).append(k)
    out = []
    for pivots, idx in groups.items():
        idx = np.array(idx)
        # centre the chart where this pivot minor is largest among its points
        dets = np.abs(np.linalg.det(theta(pts[idx])[:, list(pivots)]))
        frame = cokernel_frame(theta, pts[idx[np.argmax(dets)]])
        if frame.pivot_rows != pivots or not np.all(frame.in_chart(pts[idx])):
            for k in idx:
                out.append((cokernel_frame(theta, pts[k]), np.array([k])))
            continue
        out.append((frame, idx))
    out.sort(key=lambda fi: fi[1][0])
    return out


class GramFunction:
    """Two-variable Gram kernel ``G_ij(z, w) = K(z, w) <f_i(z), f_j(w)>``.

    With ``kernel=None`` this is the untwisted frame Gramian ``G_f``.
    """

    def __init__(self, frame, kernel: KernelSpec | None = None, margin: float = DEFAULT_MARGIN):
        self.frame = frame
        self.kernel = kernel
        self.margin = margin
        mat = frame.matrix if hasattr(frame, "matrix") else frame
        self.F = mat
        self.dF = [mat.derivative(i) for i in range(mat.nvars)]

    @property
    def rank(self) -> int:
        return self.F.cols

    @property
    def nvars(self) -> int:
        return self.F.nvars

    def _check_chart(self, z):
        if hasattr(self.frame, "in_chart") and not np.all(self.frame.in_chart(z)):
            raise ChartError("Gram evaluation outside the frame chart")

    def __call__(self, z, w) -> np.ndarray:
        z = as_points(z, self.nvars)
        w = as_points(w, self.nvars)
        self._check_chart(z)
        self._check_chart(w)
        Fz, Fw = self.F(z), self.F(w)
        G = np.einsum("...ka,...kb->...ab", Fz, np.conj(Fw))
        if self.kernel is not None:
            G = G * np.asarray(eval_kernel(self.kernel, z, w, self.margin))[..., None, None]
        return G

    def metric(self, z) -> np.ndarray:
        """Diagonal ``G(z) = G(z, z)``, shape ``(..., m, m)``."""
        return self(z, z)

    def jet(self, z):
        """Exact ``(G, G_z, G_wbar, G_zwbar)`` on the diagonal.

        Shapes ``(P,m,m)``, ``(P,n,m,m)``, ``(P,n,m,m)``, ``(P,n,n,m,m)``; ``G_z[:, i]`` is
        the derivative in the holomorphic slot, ``G_wbar[:, j]`` in the anti-holomorphic one.
        """
        z = as_points(z, self.nvars).reshape(-1, self.nvars)
        self._check_chart(z)
        F = self.F(z)
        dF = np.stack([d(z) for d in self.dF], axis=1)
        cF, cdF = np.conj(F), np.conj(dF)
        phi = np.einsum("pka,pkb->pab", F, cF)
        phi_z = np.einsum("pika,pkb->piab", dF, cF)
        phi_w = np.einsum("pka,pjkb->pjab", F, cdF)
        phi_zw = np.einsum("pika,pjkb->pijab", dF, cdF)
        if self.kernel is None:
            return phi, phi_z, phi_w, phi_zw
        K, K_z, K_w, K_zw = kernel_jet(self.kernel, z, self.margin)
        G = K[:, None, None] * phi
        G_z = K_z[:, :, None, None] * phi[:, None] + K[:, None, None, None] * phi_z
        G_w = K_w[:, :, None, None] * phi[:, None] + K[:, None, None, None] * phi_w
        G_zw = (
            K_zw[..., None, None] * phi[:, None, None]
            + K_z[:, :, None, None, None] * phi_w[:, None]
            + K_w[:, None, :, None, None] * phi_z[:, :, None]
            + K[:, None, None, None, None] * phi_zw
        )
        return G, G_z, G_w, G_zw


def gram_function(kernel: KernelSpec | None, frame) -> GramFunction:
    return GramFunction(frame, kernel)


@dataclass
class CurvatureMatrix:
    """Blocks of shape ``(..., n, n, m, m)``; ``blocks[..., i, j]`` multiplies ``dw_i ^ dwbar_j``.

    Blocks are expressed in the frame used to compute them. ``metric`` (the Gram
    matrix at the point) allows passing to an orthonormal frame.
    """

    blocks: np.ndarray
    metric: np.ndarray | None = None  # hermitian H = F^* F of the frame

    @property
    def n(self) -> int:
        return self.blocks.shape[-4]

    @property
    def m(self) -> int:
        return self.blocks.shape[-1]

    def orthonormal(self) -> np.ndarray:
        """Blocks conjugated to a frame orthonormal at the point: ``G^{1/2} K G^{-1/2}``."""
        if self.metric is None or self.m == 1:
            return self.blocks
        evals, evecs = np.linalg.eigh(self.metric)
        sq = np.einsum("...ik,...k,...jk->...ij", evecs, np.sqrt(evals), np.conj(evecs))
        isq = np.einsum("...ik,...k,...jk->...ij", evecs, 1 / np.sqrt(evals), np.conj(evecs))
        return np.einsum("...ab,...ijbc,...cd->...ijad", sq, self.blocks, isq)

    def hermitian_defect(self) -> float:
        """Max entrywise ``|B_ij - B_ji^*|`` in an orthonormal frame."""
        B = self.orthonormal()
        BT = np.conj(np.swapaxes(np.swapaxes(B, -4, -3), -2, -1))
        return float(np.max(np.abs(B - BT))) if B.size else 0.0

    def full_matrix(self) -> np.ndarray:
        """Hermitian ``nm x nm`` matrix ``[(i,a),(j,b)]`` built from the orthonormal blocks."""
        B = self.orthonormal()
        n, m = self.n, self.m
        return np.swapaxes(B, -3, -2).reshape(B.shape[:-4] + (n * m, n * m))


def _t(a):
    return np.swapaxes(a, -1, -2)


def curvature_from_jet(G, G_z, G_w, G_zw) -> np.ndarray:
    """``-dbar_j(H^{-1} d_i H) = H^{-1}(dbar_j H H^{-1} d_i H - d_i dbar_j H)`` with ``H = G^T``.

    ``G_ab = <f_a, f_b>`` is holomorphic in ``a``; its transpose ``H = F^* F`` is the
    metric that transforms as ``A^* H A`` under a holomorphic frame change ``F A``.
    """
    G, G_z, G_w, G_zw = _t(G), _t(G_z), _t(G_w), _t(G_zw)
    cond = np.linalg.cond(G)
    if np.any(~np.isfinite(cond)) or np.any(cond > MAX_CONDITION):
        raise MetricDegeneracyError(f"metric condition number {np.max(cond):.3g} exceeds {MAX_CONDITION:g}")
    Ginv = np.linalg.inv(G)
    A = np.einsum("...ab,...ibc->...iac", Ginv, G_z)  # G^{-1} d_i G
    t1 = np.einsum("...jab,...ibc->...ijac", G_w, A)
    return np.einsum("...ab,...ijbc->...ijac", Ginv, t1 - G_zw)


def curvature_from_gram(metric: Callable, z, h=None, domain=None) -> CurvatureMatrix:
    """Chern curvature of ``metric`` (``z -> (..., m, m)``) by numerical Wirtinger differentiation."""
    z = as_points(z)
    single = z.ndim == 1
    jet = wirtinger_jet(metric, z, h=h, domain=domain)
    G = jet.value
    if G.ndim == 1:
        raise ShapeError("metric must return (..., m, m) matrices; use line_curvature for scalars")
    blocks = curvature_from_jet(G, jet.d, jet.dbar, jet.ddbar)
    if single:
        return CurvatureMatrix(blocks[0], _t(G[0]))
    return CurvatureMatrix(blocks, _t(G))


def line_curvature(metric: Callable, z, h=None, domain=None) -> CurvatureMatrix:
    """``-d_i dbar_j log g`` for a positive scalar metric ``g``."""
    z = as_points(z)
    single = z.ndim == 1

    def logg(p):
        g = np.asarray(metric(p))
        if np.iscomplexobj(g):
            if np.any(np.abs(g.imag) > 1e-9 * np.abs(g.real)):
                raise DomainError("metric sample is not real")
            g = g.real
        if np.any(g <= 0):
            raise DomainError("non-positive metric sample")
        return np.log(g)

    jet = wirtinger_jet(logg, z, h=h, domain=domain)
    blocks = -jet.ddbar[..., None, None]
    g = np.exp(jet.value)[..., None, None]
    if single:
        return CurvatureMatrix(blocks[0], g[0])
    return CurvatureMatrix(blocks, g)


def exact_curvature(gram: GramFunction, z) -> CurvatureMatrix:
    """Curvature from the exact Gram jet (no finite differences)."""
    z = as_points(z, gram.nvars)
    single = z.ndim == 1
    G, G_z, G_w, G_zw = gram.jet(z)
    blocks = curvature_from_jet(G, G_z, G_w, G_zw)
    if single:
        return CurvatureMatrix(blocks[0], _t(G[0]))
    return CurvatureMatrix(blocks, _t(G))
