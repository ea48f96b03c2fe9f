"""Curvature of quotient modules and the isomorphism criteria built on it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import (
    CurvatureMatrix,
    GramFunction,
    curvature_from_gram,
    delta_theta,
    exact_curvature,
    local_frames,
)
from .errors import CertificateError, CurvlabError, DegenerateInputError, ShapeError
from .grids import GridSpec
from .kernels import KernelSpec, as_points, eval_kernel
from .multiplier import (
    LeftInverseCertificate,
    MatrixMultiplier,
    require_multiplier_shape,
    verify_left_inverse,
)

ISO_TOL = 1e-5


@dataclass(frozen=True)
class QuotientSpec:
    kernel: KernelSpec
    theta: MatrixMultiplier
    psi: MatrixMultiplier | None = None

    def __post_init__(self):
        require_multiplier_shape(self.theta)
        if self.theta.nvars != self.kernel.dim:
            raise ShapeError(
                f"multiplier has {self.theta.nvars} variables, kernel domain has dimension {self.kernel.dim}"
            )
        if self.psi is not None and self.psi.shape != (self.theta.cols, self.theta.rows):
            raise ShapeError(f"Psi must be {self.theta.cols} x {self.theta.rows}, got {self.psi.shape}")

    @property
    def rank(self) -> int:
        return self.theta.rows - self.theta.cols

    def certify(self, grid, tol: float = 1e-10) -> LeftInverseCertificate:
        if self.psi is None:
            raise CertificateError("no left inverse supplied")
        cert = verify_left_inverse(self.theta, self.psi, _points(grid, self.theta.nvars))
        if not cert.valid(tol):
            raise CertificateError(f"Psi Theta - I has residual {cert.residual:.3g} > {tol:g}")
        return cert


def _points(grid, nvars: int) -> np.ndarray:
    if isinstance(grid, GridSpec):
        return grid.points()
    return as_points(grid, nvars).reshape(-1, nvars)


def _kernel_metric(kernel: KernelSpec):
    def metric(p):
        return np.asarray(eval_kernel(kernel, p, p))[..., None, None]

    return metric


def _stack(pts, pieces, n, m):
    out = np.empty((len(pts), n, n, m, m), dtype=complex)
    G = np.empty((len(pts), m, m), dtype=complex)
    for idx, curv in pieces:
        out[idx] = curv.blocks
        G[idx] = curv.metric
    return CurvatureMatrix(out, G)


def quotient_curvature(spec: QuotientSpec, z) -> CurvatureMatrix:
    """Curvature of ``G_Theta(w) = K(w, w) G_f(w)`` by numerical differentiation."""
    z = as_points(z, spec.kernel.dim)
    single = z.ndim == 1
    pts = z.reshape(-1, spec.kernel.dim)
    pieces = []
    for frame, idx in local_frames(spec.theta, pts):
        gram = GramFunction(frame, spec.kernel)
        pieces.append((idx, curvature_from_gram(gram.metric, pts[idx], domain=spec.kernel)))
    out = _stack(pts, pieces, spec.kernel.dim, spec.rank)
    if single:
        return CurvatureMatrix(out.blocks[0], out.metric[0])
    return out


def kernel_curvature(kernel: KernelSpec, z) -> CurvatureMatrix:
    """Curvature of the building block, through the same matrix path as the quotient."""
    return curvature_from_gram(_kernel_metric(kernel), z, domain=kernel)


def twist_curvature(theta: MatrixMultiplier, z) -> CurvatureMatrix:
    """Curvature of the cokernel bundle from the untwisted frame Gramian ``G_f``; never touches a kernel."""
    pts = as_points(z, theta.nvars).reshape(-1, theta.nvars)
    pieces = []
    for frame, idx in local_frames(theta, pts):
        gram = GramFunction(frame, None)
        pieces.append((idx, curvature_from_gram(gram.metric, pts[idx])))
    return _stack(pts, pieces, theta.nvars, theta.rows - theta.cols)


@dataclass
class AdditivityReport:
    max_residual: float
    residuals: np.ndarray
    points: np.ndarray
    twist: CurvatureMatrix
    skipped: list = field(default_factory=list)


def additivity_profile(spec: QuotientSpec, grid, on_error: str = "abort") -> AdditivityReport:
    """Per-point residual of ``K_{H_Theta} - K_H (x) I - I (x) K_V``.

    ``on_error="skip"`` drops points where a chart or metric error occurs and
    records ``(point, message)`` pairs instead of raising.
    """
    pts = _points(grid, spec.kernel.dim)
    skipped = []
    if on_error == "skip":
        good = []
        for k, p in enumerate(pts):
            try:
                quotient_curvature(spec, p)
                good.append(k)
            except CurvlabError as exc:
                skipped.append((p.tolist(), str(exc)))
        pts = pts[good]
    elif on_error != "abort":
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")
    if len(pts) == 0:
        raise DegenerateInputError("no usable grid points")
    quot = quotient_curvature(spec, pts).blocks
    base = kernel_curvature(spec.kernel, pts).blocks
    twist = twist_curvature(spec.theta, pts)
    m = spec.rank
    diff = quot - base[..., 0:1, 0:1] * np.eye(m) - twist.blocks
    res = np.linalg.norm(diff, ord=2, axis=(-2, -1)).max(axis=(-2, -1))
    return AdditivityReport(float(res.max()), res, pts, twist, skipped)


def verify_additivity(spec: QuotientSpec, grid, on_error: str = "abort") -> float:
    """Max residual of the curvature additivity identity over ``grid``."""
    return additivity_profile(spec, grid, on_error).max_residual


def delta_log_hessian(theta: MatrixMultiplier, z) -> np.ndarray:
    """Exact ``[d_i dbar_j log ||Delta_Theta||^2]``, shape ``(P, n, n)``.

    Uses the Lagrange form ``sum_{k<l} W^i_{kl} conj(W^j_{kl}) / ||Delta||^4`` with
    ``W^i_{kl} = Delta_k d_i Delta_l - Delta_l d_i Delta_k``, which is free of
    cancellation and exactly invariant under constant rescaling of ``Delta``.
    """
    delta = delta_theta(theta)
    pts = as_points(z, theta.nvars).reshape(-1, theta.nvars)
    D = delta(pts)
    dD = np.stack([np.stack([c.derivative(i)(pts) for c in delta.components], -1) for i in range(theta.nvars)], 1)
    g = np.sum(np.abs(D) ** 2, axis=-1)
    if np.any(g <= 1e-24):
        k = int(np.argmax(g <= 1e-24))
        raise DegenerateInputError(f"Delta_Theta vanishes at {pts[k].tolist()} (rank drop)")
    q = D.shape[-1]
    k_idx, l_idx = np.triu_indices(q, 1)
    W = D[:, None, k_idx] * dD[:, :, l_idx] - D[:, None, l_idx] * dD[:, :, k_idx]
    return np.einsum("pik,pjk->pij", W, np.conj(W)) / (g**2)[:, None, None]


@dataclass
class IsoVerdict:
    isomorphic: bool
    max_deviation: float
    witness_point: np.ndarray | None
    tolerance: float
    label: str = "numerical"

    def to_json(self) -> dict:
        w = None
        if self.witness_point is not None:
            w = [v for c in np.ravel(self.witness_point) for v in (float(c.real), float(c.imag))]
        return {
            "verdict": bool(self.isomorphic),
            "max_deviation": float(self.max_deviation),
            "witness": w,
            "tolerance": self.tolerance,
            "label": self.label,
        }


def _twist_invariants(theta: MatrixMultiplier, pts) -> np.ndarray:
    """Sorted eigenvalues of the orthonormalised twist curvature (frame-independent)."""
    out = []
    for frame, idx in local_frames(theta, pts):
        curv = exact_curvature(GramFunction(frame, None), pts[idx])
        out.append((idx, np.linalg.eigvalsh(curv.full_matrix())))
    ev = np.empty((len(pts), out[0][1].shape[-1]))
    for idx, vals in out:
        ev[idx] = vals
    return ev


def iso_test(theta1: MatrixMultiplier, theta2: MatrixMultiplier, grid, tol: float = ISO_TOL) -> IsoVerdict:
    """Numerical isomorphism verdict for the quotients of one building block by two multipliers."""
    require_multiplier_shape(theta1)
    require_multiplier_shape(theta2)
    if theta1.nvars != theta2.nvars:
        raise ShapeError("multipliers act on different numbers of variables")
    pts = _points(grid, theta1.nvars)
    m1, m2 = theta1.rows - theta1.cols, theta2.rows - theta2.cols
    if m1 != m2:
        return IsoVerdict(False, float("inf"), None, tol)
    if m1 == 1:
        dev = np.abs(delta_log_hessian(theta1, pts) - delta_log_hessian(theta2, pts)).max(axis=(1, 2))
    else:
        dev = np.abs(_twist_invariants(theta1, pts) - _twist_invariants(theta2, pts)).max(axis=1)
    k = int(np.argmax(dev))
    return IsoVerdict(bool(dev[k] <= tol), float(dev[k]), pts[k], tol)


@dataclass
class CrossKernelReport:
    consistent: bool
    iso_verdict: IsoVerdict
    kernel_verdicts: dict
    twist_gap: float
    kernel_deviations: dict


def cross_kernel_report(
    kernel_a: KernelSpec,
    kernel_b: KernelSpec,
    theta1: MatrixMultiplier,
    theta2: MatrixMultiplier,
    grid,
    tol: float = ISO_TOL,
    twist_tol: float = 1e-6,
) -> CrossKernelReport:
    """Run the full quotient pipeline under two building blocks and compare.

    For each kernel the quotients are compared through their own curvatures; the
    twist parts ``K_{H_Theta} - K_H`` extracted under the two kernels must agree.
    """
    pts = _points(grid, theta1.nvars)
    base = iso_test(theta1, theta2, pts, tol)
    verdicts, devs, twists = {}, {}, {}
    for label, kern in (("A", kernel_a), ("B", kernel_b)):
        kc = kernel_curvature(kern, pts).blocks[..., 0:1, 0:1]
        curv = []
        for th in (theta1, theta2):
            qc = quotient_curvature(QuotientSpec(kern, th), pts)
            tw = qc.blocks - kc * np.eye(qc.m)
            twists[(label, id(th))] = tw
            curv.append(CurvatureMatrix(tw, qc.metric))
        if curv[0].m != curv[1].m:
            dev = float("inf")
        elif curv[0].m == 1:
            dev = float(np.abs(curv[0].blocks - curv[1].blocks).max())
        else:
            e1 = np.linalg.eigvalsh(curv[0].full_matrix())
            e2 = np.linalg.eigvalsh(curv[1].full_matrix())
            dev = float(np.abs(e1 - e2).max())
        devs[label] = dev
        verdicts[label] = dev <= tol
    gap = max(
        float(np.abs(twists[("A", id(th))] - twists[("B", id(th))]).max()) for th in (theta1, theta2)
    )
    consistent = verdicts["A"] == verdicts["B"] == base.isomorphic and gap <= twist_tol
    return CrossKernelReport(consistent, base, verdicts, gap, devs)


def cross_kernel_check(kernel_a, kernel_b, theta1, theta2, grid, tol: float = ISO_TOL) -> bool:
    return cross_kernel_report(kernel_a, kernel_b, theta1, theta2, grid, tol).consistent
