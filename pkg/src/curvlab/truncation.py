"""Degree-``N`` matrix models of weighted Hardy-type modules on the disk.

Vectors in ``H (x) C^q`` are stored component-major: index ``i * (N + 1) + k``
holds the coefficient of ``e_k`` in component ``i``, where ``e_k = z^k / beta_k``
is the orthonormal monomial basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .bundle import frame_for
from .errors import DegenerateInputError, IndeterminateRankError, ShapeError, UnsupportedError
from .kernels import KernelSpec
from .multiplier import MatrixMultiplier, PolyC, require_multiplier_shape
from .similarity import build_idempotent

RANK_REL = 1e-8
RANK_BAND = 100.0
DEFAULT_N = 48


def monomial_norms(kernel: KernelSpec, N: int) -> np.ndarray:
    """``beta_k = ||z^k||`` for ``k = 0..N``."""
    if kernel.dim != 1 or kernel.family == "product":
        raise UnsupportedError("matrix models exist for one-variable disk kernels only")
    k = np.arange(N + 1, dtype=float)
    if kernel.family in ("szego", "drury_arveson"):
        return np.ones(N + 1)
    if kernel.family == "bergman":
        return 1 / np.sqrt(k + 1)
    a = kernel.alpha
    # 1/||z^k||^2 is the k-th Taylor coefficient of (1 - x)^-(a+2)
    return np.exp(0.5 * (gammaln(k + 1) + gammaln(a + 2) - gammaln(k + a + 2)))


def numerical_rank(svals: np.ndarray, rel: float = RANK_REL, band: float = RANK_BAND) -> int:
    """Count singular values above ``rel * s_max``; refuse to decide inside the ``band``."""
    svals = np.asarray(svals)
    if svals.size == 0 or svals[0] == 0:
        return 0
    thr = rel * svals[0]
    ambiguous = (svals > thr / band) & (svals < thr * band)
    if ambiguous.any():
        above = svals[svals >= thr * band]
        below = svals[svals <= thr / band]
        gap = (above.min() if above.size else np.inf, below.max() if below.size else 0.0)
        raise IndeterminateRankError(
            f"singular value {svals[ambiguous][0]:.3g} within a factor {band:g} of the rank threshold {thr:.3g}",
            gap,
        )
    return int(np.sum(svals > thr))


@dataclass(frozen=True)
class TruncatedModule:
    kernel: KernelSpec
    N: int
    weights: np.ndarray
    shift: np.ndarray

    @property
    def size(self) -> int:
        return self.N + 1

    def kernel_vector(self, w: complex) -> np.ndarray:
        """Coefficients of ``k_w`` truncated at degree ``N``: ``conj(w)^k / beta_k``."""
        return np.conj(complex(w)) ** np.arange(self.size) / self.weights

    def poly_vector(self, p: PolyC) -> np.ndarray:
        """Orthonormal-basis coefficients of a one-variable polynomial of degree <= N."""
        c = np.zeros(self.size, dtype=complex)
        for (k,), v in p.terms.items():
            if k > self.N:
                raise ShapeError(f"degree {k} exceeds truncation {self.N}")
            c[k] = v * self.weights[k]
        return c

    def multiplication(self, p: PolyC) -> np.ndarray:
        """Compression of ``M_p`` to degree <= N."""
        T = np.zeros((self.size, self.size), dtype=complex)
        for (d,), c in p.terms.items():
            k = np.arange(self.size - d)
            T[k + d, k] += c * self.weights[k + d] / self.weights[k]
        return T

    def block(self, theta: MatrixMultiplier) -> np.ndarray:
        """Block matrix of a multiplier: ``rows*(N+1) x cols*(N+1)``."""
        n = self.size
        out = np.zeros((theta.rows * n, theta.cols * n), dtype=complex)
        for i in range(theta.rows):
            for j in range(theta.cols):
                out[i * n:(i + 1) * n, j * n:(j + 1) * n] = self.multiplication(theta[i, j])
        return out

    def ambient_shift(self, q: int) -> np.ndarray:
        return np.kron(np.eye(q), self.shift)


def build_truncated_module(kernel: KernelSpec, N: int) -> TruncatedModule:
    if N < 4:
        raise ValueError("truncation degree N must be at least 4")
    beta = monomial_norms(kernel, N)
    S = np.zeros((N + 1, N + 1))
    S[np.arange(1, N + 1), np.arange(N)] = beta[1:] / beta[:-1]
    return TruncatedModule(kernel, N, beta, S)


@dataclass(frozen=True)
class TruncatedQuotient:
    module: TruncatedModule
    theta: MatrixMultiplier
    range_basis: np.ndarray
    complement: np.ndarray
    action: np.ndarray

    @property
    def ambient_dim(self) -> int:
        return self.theta.rows * self.module.size

    @property
    def dim(self) -> int:
        return self.complement.shape[1]

    def project_range(self, v: np.ndarray) -> np.ndarray:
        return self.range_basis @ (self.range_basis.conj().T @ v)

    def project_complement(self, v: np.ndarray) -> np.ndarray:
        return self.complement @ (self.complement.conj().T @ v)


def build_truncated_quotient(kernel: KernelSpec, theta: MatrixMultiplier, N: int) -> TruncatedQuotient:
    """Orthogonal complement of ``ran P_N M_Theta P_N``.

    Because ``Theta`` only raises degree, this complement equals the intersection of
    the true quotient complement with the degree-``N`` polynomials.
    """
    require_multiplier_shape(theta)
    if theta.nvars != 1:
        raise UnsupportedError("matrix models are one-variable only")
    mod = build_truncated_module(kernel, N)
    M = mod.block(theta)
    U, s, _ = np.linalg.svd(M)
    r = numerical_rank(s)
    rng, comp = U[:, :r], U[:, r:]
    action = comp.conj().T @ mod.ambient_shift(theta.rows) @ comp
    return TruncatedQuotient(mod, theta, rng, comp, action)


def _gamma(mod: TruncatedModule, theta: MatrixMultiplier, w: complex, frame=None) -> np.ndarray:
    """``k_w (x) conj f(w)`` for each frame column: shape ``(q(N+1), m)``."""
    frame = frame or frame_for(theta, w)
    F = frame.matrix(np.array([[w]]))[0]
    kw = mod.kernel_vector(w)
    return np.concatenate([np.outer(kw, np.conj(F[i])) for i in range(theta.rows)], axis=0)


@dataclass
class EigenCheck:
    eigen_residual: float
    orthogonality: float

    @property
    def max(self) -> float:
        return max(self.eigen_residual, self.orthogonality)


def quotient_eigenvector_check(kernel: KernelSpec, theta: MatrixMultiplier, w: complex, N: int = DEFAULT_N) -> EigenCheck:
    """Residual of ``(M_z^* (x) I) gamma_w = conj(w) gamma_w`` on the truncated quotient,
    and the relative size of the component of ``gamma_w`` in ``ran M_Theta``."""
    tq = build_truncated_quotient(kernel, theta, N)
    gam = _gamma(tq.module, theta, w)
    nrm = np.linalg.norm(gam, axis=0)
    if np.any(nrm < 1e-14):
        raise DegenerateInputError("gamma_w vanishes")
    ortho = np.max(np.linalg.norm(tq.project_range(gam), axis=0) / nrm)
    g = tq.project_complement(gam)
    Sa = tq.module.ambient_shift(theta.rows).conj().T
    eig = np.max(np.linalg.norm(Sa @ g - np.conj(w) * g, axis=0) / np.linalg.norm(g, axis=0))
    return EigenCheck(float(eig), float(ortho))


def kernel_tail(kernel: KernelSpec, w: complex, N: int, extra: int = 2000) -> float:
    """Relative norm of ``k_w - P_N k_w``, summed directly (no cancellation)."""
    beta = monomial_norms(kernel, N + extra)
    k = np.arange(N + extra + 1)
    terms = np.abs(complex(w)) ** (2 * k) / beta**2
    return float(np.sqrt(terms[N + 1:].sum() / terms.sum()))


def localized_dimension(kernel: KernelSpec, theta: MatrixMultiplier, w: complex, N: int = DEFAULT_N) -> int:
    """``dim H_Theta / (z - w) H_Theta`` at truncation ``N``.

    Raises
    ------
    IndeterminateRankError
        If ``N`` is too small for ``w`` (kernel tail above ``RANK_REL * RANK_BAND``)
        or a singular value falls inside the ambiguity band.
    """
    tail = kernel_tail(kernel, w, N)
    if tail > RANK_REL * RANK_BAND:
        raise IndeterminateRankError(f"truncation N={N} too small at w={w}: kernel tail {tail:.3g}", (tail, RANK_REL))
    tq = build_truncated_quotient(kernel, theta, N)
    A = tq.action - w * np.eye(tq.dim)
    s = np.linalg.svd(A, compute_uv=False)
    return tq.dim - numerical_rank(s)


def oracle_gram_check(kernel: KernelSpec, theta: MatrixMultiplier, z: complex, w: complex, N: int = DEFAULT_N) -> float:
    """Relative deviation of ``<gamma_w, gamma_z>`` from the analytic Gram kernel."""
    from .bundle import GramFunction

    mod = build_truncated_module(kernel, N)
    frame = frame_for(theta, z)
    gz, gw = _gamma(mod, theta, z, frame), _gamma(mod, theta, w, frame)
    trunc = gz.conj().T @ gw
    analytic = GramFunction(frame, kernel)(np.array([[z]]), np.array([[w]]))[0]
    return float(np.linalg.norm(trunc - analytic) / np.linalg.norm(analytic))


@dataclass
class SimilarityMapReport:
    N: int
    condition: float
    sigma_min: float
    sigma_max: float
    module_residual: float
    quotient_dim: int
    noninvertible: bool

    def to_json(self) -> dict:
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in self.__dict__.items()}


def similarity_map_report(kernel: KernelSpec, theta: MatrixMultiplier, psi: MatrixMultiplier, N: int = DEFAULT_N) -> SimilarityMapReport:
    """Singular values of ``x -> Q x`` on the degree-``N`` part of the quotient complement.

    ``Q = I - Theta Psi`` is applied without truncation (the target space carries
    degree ``N + deg Q``), so the result is an exact restriction of the similarity map
    and its condition number is non-decreasing in ``N``. The module-map residual
    ``||Q P S x - S Q x||`` is measured on complement vectors of degree ``<= N - deg Theta - 1``.
    """
    idem = build_idempotent(theta, psi)
    q = theta.rows
    dq = max(idem.Q.degree, 0)
    tq = build_truncated_quotient(kernel, theta, N)
    big = build_truncated_module(kernel, N + dq + 1)
    nb, n = big.size, tq.module.size

    def embed(v):
        out = np.zeros((q * nb,) + v.shape[1:], dtype=complex)
        for i in range(q):
            out[i * nb:i * nb + n] = v[i * n:(i + 1) * n]
        return out

    TQ = big.block(idem.Q)
    X = TQ @ embed(tq.complement)
    s = np.linalg.svd(X, compute_uv=False)
    smin, smax = float(s[-1]), float(s[0])

    low = N - max(theta.degree, 0) - 1
    resid = 0.0
    if low >= 0:
        tql = build_truncated_quotient(kernel, theta, low)
        nl = tql.module.size
        lowvec = np.zeros((q * n, tql.dim), dtype=complex)
        for i in range(q):
            lowvec[i * n:i * n + nl] = tql.complement[i * nl:(i + 1) * nl]
        Sx = tq.module.ambient_shift(q) @ lowvec
        lhs = TQ @ embed(tq.project_complement(Sx))
        rhs = big.ambient_shift(q) @ (TQ @ embed(lowvec))
        if lowvec.shape[1]:
            resid = float(np.linalg.norm(lhs - rhs, ord=2) / max(smax, 1e-300))
    return SimilarityMapReport(N, smax / smin if smin > 0 else np.inf, smin, smax, resid, tq.dim, smin < 1e-10)


def similarity_map_condition(kernel: KernelSpec, theta: MatrixMultiplier, psi: MatrixMultiplier, N: int = DEFAULT_N) -> float:
    return similarity_map_report(kernel, theta, psi, N).condition


def truncated_reproducing_residual(mod: TruncatedModule, p: PolyC, w: complex) -> float:
    """``|<p, k_w^(N)> - p(w)|`` for a polynomial of degree <= N."""
    inner = np.vdot(mod.kernel_vector(w), mod.poly_vector(p))
    return float(abs(inner - p(np.array([[w]]))[0]))


def span_rank(kernel: KernelSpec, theta: MatrixMultiplier, ws, N: int = DEFAULT_N) -> int:
    """Numerical rank of ``{gamma_w}`` (threshold only, no ambiguity band)."""
    mod = build_truncated_module(kernel, N)
    frame = frame_for(theta, ws[0])
    V = np.concatenate([_gamma(mod, theta, w, frame) for w in ws], axis=1)
    s = np.linalg.svd(V, compute_uv=False)
    return int(np.sum(s > RANK_REL * s[0]))


__all__ = [
    "TruncatedModule",
    "TruncatedQuotient",
    "EigenCheck",
    "SimilarityMapReport",
    "monomial_norms",
    "numerical_rank",
    "build_truncated_module",
    "build_truncated_quotient",
    "quotient_eigenvector_check",
    "localized_dimension",
    "oracle_gram_check",
    "similarity_map_report",
    "similarity_map_condition",
    "truncated_reproducing_residual",
    "span_rank",
    "kernel_tail",
]
