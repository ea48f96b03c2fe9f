"""Numerical Wirtinger differentiation.

Central differences in the ``2n`` real coordinates ``(x_1..x_n, y_1..y_n)`` with
one level of Richardson extrapolation, so the error is ``O(h^4)`` for smooth
fields. Fields are callables ``f(points)`` taking a complex array of shape
``(..., n)`` and returning an array of shape ``(...)`` or ``(..., *vshape)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DomainError, ParameterError, StepSizeError
from .kernels import DEFAULT_MARGIN, as_points

REL_STEP = 1e-4


@dataclass(frozen=True)
class WirtingerOrder:
    """Multi-indices of holomorphic (``d/dz``) and anti-holomorphic (``d/dzbar``) orders."""

    holo: tuple[int, ...]
    anti: tuple[int, ...]

    def __post_init__(self):
        if len(self.holo) != len(self.anti):
            raise ParameterError("holo and anti multi-indices must have equal length")
        if any(k < 0 for k in self.holo + self.anti):
            raise ParameterError("orders must be non-negative")
        if sum(self.holo) + sum(self.anti) > 2:
            raise ParameterError("only total order <= 2 is supported")

    @classmethod
    def of(cls, n: int, d: tuple[int, ...] = (), dbar: tuple[int, ...] = ()) -> "WirtingerOrder":
        """Build from lists of coordinate indices, e.g. ``of(2, d=(0,), dbar=(1,))``."""
        holo, anti = [0] * n, [0] * n
        for i in d:
            holo[i] += 1
        for j in dbar:
            anti[j] += 1
        return cls(tuple(holo), tuple(anti))


def default_step(z) -> np.ndarray:
    """Per-point step ``1e-4 * max(1, |z|)``."""
    return REL_STEP * np.maximum(1.0, np.linalg.norm(np.asarray(z), axis=-1))


def _check_stencil(z, h, domain, margin):
    if domain is None:
        return
    dist = domain.boundary_distance(z)
    if np.any(dist < margin):
        k = np.unravel_index(np.argmin(dist), np.shape(dist))
        raise DomainError(f"point {np.round(z[k], 12).tolist()} is within {margin} of the boundary")
    if np.any(dist < margin + 4 * h):
        raise StepSizeError(
            f"stencil of radius 4h={4 * np.max(h):.3g} leaves the margin {margin}; shrink h or move z"
        )


def _to_real(z):
    return np.concatenate([z.real, z.imag], axis=-1)


def _to_complex(x):
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def _real_partial(f, x, h, idx):
    """Richardson-extrapolated central difference for real partial(s) ``idx``."""

    def central(step):
        s = step[..., None]
        if len(idx) == 1:
            e = np.zeros(x.shape[-1])
            e[idx[0]] = 1.0
            pts = np.stack([x + s * e, x - s * e])
            v = f(_to_complex(pts))
            return (v[0] - v[1]) / _bshape(2 * step, v[0])
        a, b = idx
        ea = np.zeros(x.shape[-1])
        ea[a] = 1.0
        eb = np.zeros(x.shape[-1])
        eb[b] = 1.0
        if a == b:
            pts = np.stack([x + s * ea, x, x - s * ea])
            v = f(_to_complex(pts))
            return (v[0] - 2 * v[1] + v[2]) / _bshape(step**2, v[0])
        pts = np.stack([x + s * (ea + eb), x + s * (ea - eb), x - s * (ea - eb), x - s * (ea + eb)])
        v = f(_to_complex(pts))
        return (v[0] - v[1] - v[2] + v[3]) / _bshape(4 * step**2, v[0])

    return (4.0 * central(h) - central(2.0 * h)) / 3.0


def _bshape(step, v):
    step = np.asarray(step)
    return step.reshape(step.shape + (1,) * (np.ndim(v) - step.ndim))


def _expand(order: WirtingerOrder):
    """Expand a Wirtinger operator into ``[(coef, real_indices), ...]``."""
    n = len(order.holo)
    factors = []
    for i, k in enumerate(order.holo):
        factors += [[(0.5, i), (-0.5j, n + i)]] * k
    for j, k in enumerate(order.anti):
        factors += [[(0.5, j), (0.5j, n + j)]] * k
    terms = [(1.0 + 0j, ())]
    for fac in factors:
        terms = [(c * c2, idx + (a,)) for c, idx in terms for c2, a in fac]
    return terms


def wirtinger_derivative(f, z, order: WirtingerOrder, h=None, domain=None, margin: float = DEFAULT_MARGIN):
    """Apply the Wirtinger operator ``order`` to ``f`` at ``z``.

    ``d = (d/dx - i d/dy)/2`` and ``dbar = (d/dx + i d/dy)/2`` per coordinate.
    ``domain`` (anything with ``boundary_distance``) enables the stencil check.
    """
    n = len(order.holo)
    z = as_points(z, n)
    h = default_step(z) if h is None else np.broadcast_to(np.asarray(h, dtype=float), z.shape[:-1])
    _check_stencil(z, h, domain, margin)
    x = _to_real(z)
    terms = _expand(order)
    if not terms[0][1]:
        return f(z)
    total = 0
    for coef, idx in terms:
        total = total + coef * _real_partial(f, x, h, tuple(sorted(idx)))
    return total


@dataclass
class Jet:
    """Value, first Wirtinger derivatives and mixed ``d_i dbar_j`` derivatives.

    Shapes: ``value (P, *v)``, ``d (P, n, *v)``, ``dbar (P, n, *v)``,
    ``ddbar (P, n, n, *v)`` with ``ddbar[:, i, j] = d_i dbar_j f``.
    """

    value: np.ndarray
    d: np.ndarray
    dbar: np.ndarray
    ddbar: np.ndarray


def wirtinger_jet(f, z, h=None, domain=None, margin: float = DEFAULT_MARGIN) -> Jet:
    """All first and mixed second Wirtinger derivatives from a single batched evaluation."""
    z = as_points(z)
    z = z.reshape(-1, z.shape[-1])
    P, n = z.shape
    h = default_step(z) if h is None else np.broadcast_to(np.asarray(h, dtype=float), (P,))
    _check_stencil(z, h, domain, margin)
    x = _to_real(z)
    N = 2 * n
    eye = np.eye(N)
    pairs = list(combinations(range(N), 2))

    offsets = [np.zeros(N)]
    for a in range(N):
        for m in (1, -1, 2, -2):
            offsets.append(m * eye[a])
    for a, b in pairs:
        for m in (1, 2):
            for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                offsets.append(m * (sa * eye[a] + sb * eye[b]))
    offsets = np.array(offsets)
    pts = x[None, :, :] + offsets[:, None, :] * h[None, :, None]
    vals = np.asarray(f(_to_complex(pts)))
    vshape = vals.shape[2:]

    def hb(p):
        return (h**p).reshape((P,) + (1,) * len(vshape))

    center = vals[0]
    grad = np.empty((N, P) + vshape, dtype=vals.dtype)
    hess = np.empty((N, N, P) + vshape, dtype=vals.dtype)
    k = 1
    for a in range(N):
        p1, m1, p2, m2 = vals[k:k + 4]
        k += 4
        d1 = (p1 - m1) / (2 * hb(1))
        d2 = (p2 - m2) / (4 * hb(1))
        grad[a] = (4 * d1 - d2) / 3
        s1 = (p1 - 2 * center + m1) / hb(2)
        s2 = (p2 - 2 * center + m2) / (4 * hb(2))
        hess[a, a] = (4 * s1 - s2) / 3
    for a, b in pairs:
        pp1, pm1, mp1, mm1, pp2, pm2, mp2, mm2 = vals[k:k + 8]
        k += 8
        c1 = (pp1 - pm1 - mp1 + mm1) / (4 * hb(2))
        c2 = (pp2 - pm2 - mp2 + mm2) / (16 * hb(2))
        hess[a, b] = hess[b, a] = (4 * c1 - c2) / 3

    gx, gy = grad[:n], grad[n:]
    d = 0.5 * (gx - 1j * gy)
    dbar = 0.5 * (gx + 1j * gy)
    hxx = hess[:n, :n]
    hyy = hess[n:, n:]
    hxy = hess[:n, n:]  # [i, j] = d_xi d_yj
    hyx = hess[n:, :n]  # [i, j] = d_yi d_xj
    ddbar = 0.25 * (hxx + hyy + 1j * (hxy - hyx))
    return Jet(
        value=center,
        d=np.moveaxis(d, 0, 1),
        dbar=np.moveaxis(dbar, 0, 1),
        ddbar=np.moveaxis(ddbar, (0, 1), (1, 2)),
    )
