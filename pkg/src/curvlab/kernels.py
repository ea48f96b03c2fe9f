"""Scalar reproducing kernels of the classical Hilbert modules.

Every supported kernel is a product of factors ``(1 - <z_B, w_B>)^(-s_B)`` over
coordinate blocks ``B``; the catalogue below only decides the blocks and the
exponents. Evaluation is always by closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, DomainError, ParameterError

DEFAULT_MARGIN = 0.05

SHAPES = ("unit_disk", "unit_ball", "polydisk")
FAMILIES = ("szego", "bergman", "weighted_bergman", "drury_arveson", "product")


@dataclass(frozen=True)
class DomainSpec:
    shape: str
    dim: int = 1

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ParameterError(f"unknown domain shape {self.shape!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"domain dimension must be a positive integer, got {self.dim}")
        if self.shape == "unit_disk" and self.dim != 1:
            raise ParameterError("unit_disk has dimension 1")

    def boundary_distance(self, z):
        """Distance from ``z`` (shape ``(..., n)``) to the boundary; negative outside."""
        z = np.asarray(z, dtype=complex)
        if self.shape == "polydisk":
            return 1.0 - np.max(np.abs(z), axis=-1)
        return 1.0 - np.linalg.norm(z, axis=-1)


@dataclass(frozen=True)
class KernelSpec:
    family: str
    domain: DomainSpec = field(default_factory=lambda: DomainSpec("unit_disk", 1))
    alpha: float | None = None
    factors: tuple["KernelSpec", ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown kernel family {self.family!r}")
        if self.family == "weighted_bergman":
            if self.alpha is None:
                raise ParameterError("weighted_bergman requires alpha")
            if not self.alpha > -1:
                raise ParameterError(f"alpha must exceed -1, got {self.alpha}")
        elif self.alpha is not None:
            raise ParameterError(f"alpha is only meaningful for weighted_bergman, not {self.family}")
        if self.family == "product":
            if not self.factors:
                raise ParameterError("product kernel needs at least one factor")
            if any(f.family == "product" for f in self.factors):
                raise ParameterError("nested product kernels are not supported")
            total = sum(f.domain.dim for f in self.factors)
            if total != self.domain.dim:
                raise ParameterError(
                    f"product factors cover {total} coordinates, domain has {self.domain.dim}"
                )
        elif self.factors:
            raise ParameterError("factors are only meaningful for the product family")
        if self.family == "drury_arveson" and self.domain.shape == "polydisk":
            raise ParameterError("drury_arveson lives on the unit ball")

    @property
    def dim(self) -> int:
        return self.domain.dim

    @classmethod
    def disk(cls, family: str, alpha: float | None = None) -> "KernelSpec":
        return cls(family, DomainSpec("unit_disk", 1), alpha)

    @classmethod
    def ball(cls, family: str, dim: int, alpha: float | None = None) -> "KernelSpec":
        shape = "unit_disk" if dim == 1 else "unit_ball"
        return cls(family, DomainSpec(shape, dim), alpha)

    def blocks(self) -> list[tuple[slice, float]]:
        """Coordinate blocks and exponents ``s`` with ``K = prod (1 - <z_B, w_B>)^(-s)``."""
        if self.family == "product":
            out, start = [], 0
            for f in self.factors:
                for sl, s in f.blocks():
                    out.append((slice(start + sl.start, start + sl.stop), s))
                start += f.dim
            return out
        n = self.dim
        shape = self.domain.shape
        alpha = self.alpha or 0.0
        if shape == "polydisk":
            s = {"szego": 1.0, "bergman": 2.0, "weighted_bergman": alpha + 2.0}[self.family]
            return [(slice(i, i + 1), s) for i in range(n)]
        s = {
            "szego": float(n),
            "bergman": n + 1.0,
            "weighted_bergman": n + 1.0 + alpha,
            "drury_arveson": 1.0,
        }[self.family]
        return [(slice(0, n), s)]

    def boundary_distance(self, z):
        if self.family != "product":
            return self.domain.boundary_distance(z)
        z = np.asarray(z, dtype=complex)
        dists, start = [], 0
        for f in self.factors:
            dists.append(f.boundary_distance(z[..., start:start + f.dim]))
            start += f.dim
        return np.min(np.stack(dists), axis=0)

    def to_json(self) -> dict:
        d = {"family": self.family, "dim": self.dim, "domain": self.domain.shape}
        if self.alpha is not None:
            d["alpha"] = self.alpha
        if self.factors:
            d["factors"] = [f.to_json() for f in self.factors]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "KernelSpec":
        dim = int(d.get("dim", 1))
        shape = d.get("domain", "unit_disk" if dim == 1 else "unit_ball")
        factors = tuple(cls.from_json(f) for f in d.get("factors", ()))
        alpha = d.get("alpha")
        return cls(d["family"], DomainSpec(shape, dim), None if alpha is None else float(alpha), factors)


def as_points(z, dim: int | None = None) -> np.ndarray:
    """Coerce ``z`` to a complex array of shape ``(..., n)``; scalars become 1-d points."""
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        z = z.reshape(1)
    if dim is not None and z.shape[-1] != dim:
        if dim == 1:
            z = z[..., None]
        else:
            raise DomainError(f"expected points with {dim} coordinates, got shape {z.shape}")
    return z


def check_inside(spec: KernelSpec, z, margin: float = DEFAULT_MARGIN) -> np.ndarray:
    z = as_points(z, spec.dim)
    dist = spec.boundary_distance(z)
    bad = np.asarray(dist < margin)
    if bad.any():
        p = z[tuple(np.argwhere(bad)[0])] if bad.ndim else z
        raise DomainError(
            f"point {np.round(p, 12).tolist()} is within {margin} of the boundary of the "
            f"{spec.domain.shape}"
        )
    return z


def eval_kernel(spec: KernelSpec, z, w, margin: float = DEFAULT_MARGIN):
    """Closed-form value ``K(z, w)``; broadcasts over leading axes."""
    z = check_inside(spec, z, margin)
    w = check_inside(spec, w, margin)
    out = 1.0
    for sl, s in spec.blocks():
        inner = np.sum(z[..., sl] * np.conj(w[..., sl]), axis=-1)
        out = out * (1.0 - inner) ** (-s)
    out = np.asarray(out, dtype=complex)
    return complex(out) if out.ndim == 0 else out


def kernel_jet(spec: KernelSpec, z, margin: float = DEFAULT_MARGIN):
    """Value and exact Wirtinger derivatives of ``K(z, w)`` on the diagonal ``w = z``.

    Returns ``(K, K_z, K_wbar, K_zwbar)`` with shapes ``(P,)``, ``(P, n)``, ``(P, n)``
    and ``(P, n, n)``: ``K_z[i] = d/dz_i K``, ``K_wbar[j] = d/dwbar_j K`` and
    ``K_zwbar[i, j] = d/dz_i d/dwbar_j K``, all at ``w = z``.
    """
    z = check_inside(spec, z, margin)
    z = z.reshape(-1, spec.dim)
    P, n = z.shape
    logk = np.zeros(P, dtype=float)
    L_z = np.zeros((P, n), dtype=complex)
    L_w = np.zeros((P, n), dtype=complex)
    L_zw = np.zeros((P, n, n), dtype=complex)
    for sl, s in spec.blocks():
        zb = z[:, sl]
        u = 1.0 - np.sum(np.abs(zb) ** 2, axis=-1)
        logk -= s * np.log(u)
        L_z[:, sl] = s * np.conj(zb) / u[:, None]
        L_w[:, sl] = s * zb / u[:, None]
        m = sl.stop - sl.start
        L_zw[:, sl, sl] = s * (
            np.eye(m)[None] / u[:, None, None]
            + np.conj(zb)[:, :, None] * zb[:, None, :] / (u**2)[:, None, None]
        )
    K = np.exp(logk).astype(complex)
    K_z = K[:, None] * L_z
    K_w = K[:, None] * L_w
    K_zw = K[:, None, None] * (L_zw + L_z[:, :, None] * L_w[:, None, :])
    return K, K_z, K_w, K_zw


def gram_psd_check(spec: KernelSpec, points: Sequence, margin: float = DEFAULT_MARGIN) -> float:
    """Smallest eigenvalue of the kernel matrix ``[K(z_i, z_j)]``."""
    pts = check_inside(spec, points, margin).reshape(-1, spec.dim)
    if len(pts) == 0:
        raise DegenerateInputError("empty point set")
    diff = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    np.fill_diagonal(diff, np.inf)
    if (diff < 1e-14).any():
        raise DegenerateInputError("duplicate points make the strict positivity check meaningless")
    gram = eval_kernel(spec, pts[:, None, :], pts[None, :, :], margin)
    gram = np.atleast_2d(gram)
    gram = 0.5 * (gram + gram.conj().T)
    return float(np.linalg.eigvalsh(gram)[0])
