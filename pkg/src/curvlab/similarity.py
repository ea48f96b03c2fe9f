"""Symbol-level similarity diagnostics for quotient modules.

Everything here acts on polynomial symbols or on finite Gram data; the
operator-level similarity map lives in :mod:`curvlab.truncation`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .bundle import GramFunction, local_frames
from .errors import CertificateError, DegenerateInputError, MetricDegeneracyError, ShapeError, UnsupportedError
from .grids import GridSpec
from .kernels import as_points
from .multiplier import MatrixMultiplier, require_multiplier_shape
from .quotient import QuotientSpec, _points
from .bundle import delta_theta

EXACT_TOL = 1e-12
ANGLE_FLOOR = 1e-10


@dataclass(frozen=True)
class IdempotentSymbol:
    Q: MatrixMultiplier
    rank: int
    residuals: dict = field(default_factory=dict, compare=False)

    def __call__(self, z) -> np.ndarray:
        return self.Q(z)


def build_idempotent(theta: MatrixMultiplier, psi: MatrixMultiplier, tol: float = EXACT_TOL) -> IdempotentSymbol:
    """``Q = I - Theta Psi``, checked at coefficient level."""
    require_multiplier_shape(theta)
    q, p = theta.shape
    if psi.shape != (p, q):
        raise ShapeError(f"Psi must be {p} x {q}, got {psi.shape}")
    cert = (psi @ theta - MatrixMultiplier.identity(p, theta.nvars)).max_abs_coeff()
    if cert > tol:
        raise CertificateError(f"Psi Theta != I: coefficient residual {cert:.3g}")
    Q = MatrixMultiplier.identity(q, theta.nvars) - theta @ psi
    residuals = {
        "psi_theta": cert,
        "idempotent": (Q @ Q - Q).max_abs_coeff(),
        "annihilates_theta": (Q @ theta).max_abs_coeff(),
        "trace": (Q.trace() - (q - p)).max_abs_coeff(),
    }
    bad = {k: v for k, v in residuals.items() if v > tol}
    if bad:
        raise CertificateError(f"idempotent identities fail: {bad}")
    return IdempotentSymbol(Q, q - p, residuals)


def _range_basis(M: np.ndarray, k: int) -> np.ndarray:
    U, _, _ = np.linalg.svd(M)
    return U[..., :k]


def splitting_angle(theta: MatrixMultiplier, Q: IdempotentSymbol, grid) -> tuple[float, float]:
    """Min principal angle between ``ran Theta(z)`` and ``ran Q(z)``, and the max condition
    number of ``[Theta-basis | Q-basis]``, over the grid. Takes no kernel by design."""
    pts = _points(grid, theta.nvars)
    q, p = theta.shape
    U1 = _range_basis(theta(pts), p)
    U2 = _range_basis(Q(pts), Q.rank)
    C = np.conj(np.swapaxes(U1, -1, -2)) @ U2
    cos = np.linalg.svd(C, compute_uv=False)[:, 0]
    resid = U2 - U1 @ C
    sin = np.linalg.svd(resid, compute_uv=False)[:, -1]
    angles = np.arctan2(sin, cos)
    k = int(np.argmin(angles))
    if angles[k] < ANGLE_FLOOR:
        raise DegenerateInputError(f"ran Theta and ran Q nearly meet at {pts[k].tolist()} (angle {angles[k]:.3g})")
    cond = np.linalg.cond(np.concatenate([U1, U2], axis=-1))
    return float(angles.min()), float(cond.max())


def hs_projection_derivative(gram: GramFunction, z):
    """``||dPi/dz||_2^2`` for the projection onto the span of the anti-holomorphic frame.

    With ``V`` the frame, ``W = dbar V`` and ``Pi = V G^{-1} V^*``:
    ``dPi = V C Y^*`` for ``C = [-G^{-1} G_z G^{-1} | G^{-1}]`` and ``Y = [V | W]``, so the
    squared Hilbert-Schmidt norm is ``tr(C G_Y C^* G)``.
    """
    if gram.nvars != 1:
        raise UnsupportedError("hs_projection_derivative is defined on the disk only")
    z = as_points(z, 1)
    single = z.ndim == 1
    G, G_z, G_w, G_zw = gram.jet(z)
    G_z, G_w, G_zw = G_z[:, 0], G_w[:, 0], G_zw[:, 0, 0]
    cond = np.linalg.cond(G)
    if np.any(cond > 1e12):
        raise MetricDegeneracyError(f"Gram matrix condition number {cond.max():.3g}")
    Ginv = np.linalg.inv(G)
    A = -Ginv @ G_z @ Ginv
    C = np.concatenate([A, Ginv], axis=-1)
    GY = np.concatenate(
        [np.concatenate([G, G_w], axis=-1), np.concatenate([G_z, G_zw], axis=-1)], axis=-2
    )
    val = np.trace(C @ GY @ np.conj(np.swapaxes(C, -1, -2)) @ G, axis1=-2, axis2=-1).real
    return float(val[0]) if single else val


def _quotient_hs(spec: QuotientSpec, pts: np.ndarray) -> np.ndarray:
    out = np.empty(len(pts))
    for frame, idx in local_frames(spec.theta, pts):
        out[idx] = hs_projection_derivative(GramFunction(frame, spec.kernel), pts[idx])
    return out


def _warn_kernel(spec: QuotientSpec) -> bool:
    if spec.kernel.family != "szego":
        warnings.warn(
            f"similarity defect compares against the Hardy term; building block {spec.kernel.family!r} "
            "is outside that setting",
            stacklevel=3,
        )
        return True
    return False


def similarity_defect(spec: QuotientSpec, z):
    """``h(z) = ||dPi/dz||^2 - m / (1 - |z|^2)^2`` with ``m = q - p``."""
    if spec.kernel.dim != 1:
        raise UnsupportedError("similarity defect is defined on the disk only")
    _warn_kernel(spec)
    z = as_points(z, 1)
    single = z.ndim == 1
    pts = z.reshape(-1, 1)
    h = _quotient_hs(spec, pts) - spec.rank / (1 - np.abs(pts[:, 0]) ** 2) ** 2
    return float(h[0]) if single else h


@dataclass
class DefectProfile:
    points: np.ndarray
    values: np.ndarray
    m: int
    kernel_warning: bool = False

    @property
    def samples(self) -> list[tuple[complex, float]]:
        return [(complex(p[0]), float(v)) for p, v in zip(self.points, self.values)]

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "kernel_warning": self.kernel_warning,
            "min": float(self.values.min()),
            "max": float(self.values.max()),
            "samples": [[p.real, p.imag, v] for p, v in self.samples],
        }

    def csv_rows(self):
        return [(p.real, p.imag, v) for p, v in self.samples]


def defect_profile(spec: QuotientSpec, grid) -> DefectProfile:
    pts = _points(grid, 1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        h = similarity_defect(spec, pts)
    return DefectProfile(pts, np.atleast_1d(h), spec.rank, bool(caught))


@dataclass
class CarlesonReport:
    levels: int
    sup_ratio: float
    pointwise_constant: float
    level_sups: list[float]
    r_max: float
    negative_mass: bool
    kernel_warning: bool = False

    def to_json(self) -> dict:
        return {
            "levels": self.levels,
            "sup_ratio": self.sup_ratio,
            "pointwise_constant": self.pointwise_constant,
            "level_sups": self.level_sups,
            "truncation_radius": self.r_max,
            "negative_mass": self.negative_mass,
            "kernel_warning": self.kernel_warning,
        }


def carleson_diagnostic(
    spec: QuotientSpec,
    levels: int,
    grid: GridSpec | None = None,
    n_radial: int = 256,
    n_angular: int = 512,
) -> CarlesonReport:
    """Dyadic Carleson-box sums of ``dmu = h(z)(1 - |z|) dA`` over the truncated disk.

    Box ``Q(I) = {1 - l(I) <= |z| < 1, arg z in I}`` for dyadic arcs ``I`` of normalised
    length ``l(I) = 2^-level``; cells beyond ``r_max`` are not integrated. Midpoint
    polar quadrature on ``n_radial x n_angular`` cells, Lebesgue area.
    """
    if spec.kernel.dim != 1:
        raise UnsupportedError("Carleson diagnostic is defined on the disk only")
    if not 0 <= levels <= 10:
        raise ValueError("levels must lie in 0..10")
    r_max = (grid or GridSpec.disk()).r_max
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        _warn_kernel(spec)
    dr = r_max / n_radial
    dt = 2 * np.pi / n_angular
    r = (np.arange(n_radial) + 0.5) * dr
    t = (np.arange(n_angular) + 0.5) * dt
    pts = (r[:, None] * np.exp(1j * t)[None, :]).reshape(-1, 1)
    hs = _quotient_hs(spec, pts).reshape(n_radial, n_angular)
    h = hs - spec.rank / (1 - r**2)[:, None] ** 2
    mass = h * (1 - r)[:, None] * (r * dr * dt)[:, None]
    pointwise = float(np.max((1 - r)[:, None] * np.sqrt(np.maximum(h, 0))))

    level_sups = []
    for lev in range(levels + 1):
        ell = 2.0**-lev
        inner = r >= 1 - ell
        ring = mass[inner].sum(axis=0)
        arc = np.floor(t / (2 * np.pi) * 2**lev).astype(int)
        boxes = np.zeros(2**lev)
        np.add.at(boxes, arc, ring)
        level_sups.append(float(boxes.max() / ell))
    return CarlesonReport(
        levels,
        float(max(level_sups)),
        pointwise,
        level_sups,
        r_max,
        bool((h < 0).any()),
        bool(caught),
    )


def uniform_equivalence_diagnostic(theta: MatrixMultiplier, grid) -> tuple[float, float]:
    """Inf and sup of ``||Delta_Theta(z)||`` over the grid."""
    pts = _points(grid, theta.nvars)
    norms = np.linalg.norm(delta_theta(theta)(pts), axis=-1)
    return float(norms.min()), float(norms.max())
