"""Polynomial matrix multipliers.

A multiplier is a ``q x p`` matrix of complex polynomials in ``n`` variables.
Arithmetic is carried out on coefficients so identities such as ``Psi Theta = I``
or ``Q^2 = Q`` can be checked term by term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DegenerateInputError,
    NotCoprimeError,
    ShapeError,
    UnsupportedError,
)
from .kernels import as_points

BEZOUT_FLOOR = 1e-12


class PolyC:
    """Sparse complex polynomial ``sum c_k z^k`` keyed by exponent tuples."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], complex] | None = None):
        self.nvars = int(nvars)
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.nvars or any(e < 0 for e in exp):
                raise ShapeError(f"exponent {exp} invalid for {self.nvars} variables")
            c = complex(c)
            if c != 0:
                clean[exp] = clean.get(exp, 0) + c
        self.terms = {k: v for k, v in clean.items() if v != 0}

    @classmethod
    def const(cls, nvars: int, c: complex) -> "PolyC":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int, power: int = 1) -> "PolyC":
        exp = [0] * nvars
        exp[i] = power
        return cls(nvars, {tuple(exp): 1.0})

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[complex]) -> "PolyC":
        """One-variable polynomial from ascending coefficients."""
        return cls(1, {(k,): c for k, c in enumerate(coeffs)})

    def coeffs(self) -> np.ndarray:
        """Ascending coefficient array (one variable only)."""
        if self.nvars != 1:
            raise UnsupportedError("coefficient arrays are only defined for one variable")
        out = np.zeros(self.degree + 1 if self.terms else 1, dtype=complex)
        for (k,), c in self.terms.items():
            out[k] = c
        return out

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def _lift(self, other) -> "PolyC":
        if isinstance(other, PolyC):
            if other.nvars != self.nvars:
                raise ShapeError("polynomials in different numbers of variables")
            return other
        return PolyC.const(self.nvars, other)

    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        return PolyC(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return PolyC(self.nvars, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        terms: dict[tuple[int, ...], complex] = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                terms[k] = terms.get(k, 0) + v1 * v2
        return PolyC(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            raise ValueError("only non-negative integer powers")
        out = PolyC.const(self.nvars, 1)
        for _ in range(int(k)):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, PolyC):
            try:
                other = self._lift(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "PolyC(0)"
        parts = []
        for exp, c in sorted(self.terms.items()):
            mono = "*".join(f"z{i + 1}^{e}" if e > 1 else f"z{i + 1}" for i, e in enumerate(exp) if e)
            parts.append(f"({c:g})" + (f"*{mono}" if mono else ""))
        return "PolyC(" + " + ".join(parts) + ")"

    def conj_coeffs(self) -> "PolyC":
        return PolyC(self.nvars, {k: np.conj(v) for k, v in self.terms.items()})

    def derivative(self, i: int) -> "PolyC":
        terms = {}
        for exp, c in self.terms.items():
            if exp[i]:
                e = list(exp)
                e[i] -= 1
                terms[tuple(e)] = c * exp[i]
        return PolyC(self.nvars, terms)

    def __call__(self, z):
        """Evaluate at points of shape ``(..., n)`` (scalars allowed when ``n = 1``)."""
        z = as_points(z, self.nvars)
        out = np.zeros(z.shape[:-1], dtype=complex)
        if not self.terms:
            return out
        maxdeg = max(max(e) for e in self.terms)
        # pw[k][..., i] = z_i^k
        pw = np.empty((maxdeg + 1,) + z.shape, dtype=complex)
        pw[0] = 1.0
        for k in range(1, maxdeg + 1):
            pw[k] = pw[k - 1] * z
        for exp, c in self.terms.items():
            term = np.full(z.shape[:-1], c, dtype=complex)
            for i, e in enumerate(exp):
                if e:
                    term = term * pw[e][..., i]
            out = out + term
        return out

    def to_json(self) -> list[dict]:
        return [
            {"exp": list(exp), "re": float(c.real), "im": float(c.imag)}
            for exp, c in sorted(self.terms.items())
        ]

    @classmethod
    def from_json(cls, nvars: int, monomials: list[dict]) -> "PolyC":
        terms: dict[tuple[int, ...], complex] = {}
        for m in monomials:
            exp = tuple(m["exp"])
            terms[exp] = terms.get(exp, 0) + complex(m.get("re", 0.0), m.get("im", 0.0))
        return cls(nvars, terms)


def _det(mat: list[list[PolyC]], nvars: int) -> PolyC:
    """Cofactor expansion along the first row; matrices here are at most 8 x 8."""
    k = len(mat)
    if k == 0:
        return PolyC.const(nvars, 1)
    if k == 1:
        return mat[0][0]
    if k == 2:
        return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    total = PolyC(nvars)
    for j in range(k):
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * _det(minor, nvars)
        total = total + term if j % 2 == 0 else total - term
    return total


@dataclass(frozen=True, eq=False)
class MatrixMultiplier:
    """``rows x cols`` matrix of :class:`PolyC` entries sharing ``nvars``."""

    entries: tuple[tuple[PolyC, ...], ...]

    def __post_init__(self):
        if not self.entries or not self.entries[0]:
            raise ShapeError("empty multiplier")
        cols = len(self.entries[0])
        nv = self.entries[0][0].nvars
        for row in self.entries:
            if len(row) != cols:
                raise ShapeError("ragged multiplier entries")
            if any(e.nvars != nv for e in row):
                raise ShapeError("all entries must share nvars")
        object.__setattr__(self, "entries", tuple(tuple(r) for r in self.entries))

    @classmethod
    def from_rows(cls, rows) -> "MatrixMultiplier":
        rows = [list(r) for r in rows]
        nv = next((e.nvars for r in rows for e in r if isinstance(e, PolyC)), 1)
        return cls(tuple(tuple(e if isinstance(e, PolyC) else PolyC.const(nv, e) for e in r) for r in rows))

    @classmethod
    def constant(cls, mat, nvars: int = 1) -> "MatrixMultiplier":
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        return cls(tuple(tuple(PolyC.const(nvars, c) for c in row) for row in mat))

    @classmethod
    def identity(cls, size: int, nvars: int = 1) -> "MatrixMultiplier":
        return cls.constant(np.eye(size), nvars)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def nvars(self) -> int:
        return self.entries[0][0].nvars

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def degree(self) -> int:
        return max(e.degree for row in self.entries for e in row)

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    def __call__(self, z):
        """Evaluate to an array of shape ``(..., rows, cols)``."""
        z = as_points(z, self.nvars)
        out = np.empty(z.shape[:-1] + self.shape, dtype=complex)
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                out[..., i, j] = e(z)
        return out

    def _coerce(self, other) -> "MatrixMultiplier":
        if isinstance(other, MatrixMultiplier):
            return other
        return MatrixMultiplier.constant(other, self.nvars)

    def __matmul__(self, other):
        other = self._coerce(other)
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
        zero = PolyC(self.nvars)
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = zero
                for k in range(self.cols):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(tuple(row))
        return MatrixMultiplier(tuple(out))

    def __rmatmul__(self, other):
        return self._coerce(other) @ self

    def __add__(self, other):
        other = self._coerce(other)
        if other.shape != self.shape:
            raise ShapeError("shape mismatch in addition")
        return MatrixMultiplier(tuple(
            tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)
        ))

    def __neg__(self):
        return MatrixMultiplier(tuple(tuple(-a for a in r) for r in self.entries))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c: complex) -> "MatrixMultiplier":
        return MatrixMultiplier(tuple(tuple(a * c for a in r) for r in self.entries))

    def transpose(self) -> "MatrixMultiplier":
        return MatrixMultiplier(tuple(zip(*self.entries)))

    def submatrix(self, rows, cols=None) -> list[list[PolyC]]:
        cols = range(self.cols) if cols is None else cols
        return [[self.entries[i][j] for j in cols] for i in rows]

    def det(self) -> PolyC:
        if self.rows != self.cols:
            raise ShapeError("determinant of a non-square multiplier")
        return _det(self.submatrix(range(self.rows)), self.nvars)

    def derivative(self, i: int) -> "MatrixMultiplier":
        return MatrixMultiplier(tuple(tuple(e.derivative(i) for e in r) for r in self.entries))

    def max_abs_coeff(self) -> float:
        return max(e.max_abs_coeff() for r in self.entries for e in r)

    def trace(self) -> PolyC:
        if self.rows != self.cols:
            raise ShapeError("trace of a non-square multiplier")
        acc = PolyC(self.nvars)
        for i in range(self.rows):
            acc = acc + self.entries[i][i]
        return acc

    def __eq__(self, other):
        if not isinstance(other, MatrixMultiplier):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"MatrixMultiplier({[list(r) for r in self.entries]})"

    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "nvars": self.nvars,
            "entries": [[e.to_json() for e in row] for row in self.entries],
        }

    @classmethod
    def from_json(cls, d: dict) -> "MatrixMultiplier":
        nv = int(d.get("nvars", 1))
        entries = tuple(tuple(PolyC.from_json(nv, e) for e in row) for row in d["entries"])
        m = cls(entries)
        if m.rows != int(d["rows"]) or m.cols != int(d["cols"]):
            raise ShapeError(f"declared shape ({d['rows']}, {d['cols']}) does not match entries {m.shape}")
        return m


def z(nvars: int = 1, i: int = 0, power: int = 1) -> PolyC:
    """Shorthand for the coordinate monomial ``z_i^power``."""
    return PolyC.var(nvars, i, power)


def column(*entries) -> MatrixMultiplier:
    """Column multiplier ``[[e1], [e2], ...]``."""
    return MatrixMultiplier.from_rows([[e] for e in entries])


def require_multiplier_shape(theta: MatrixMultiplier) -> None:
    if not 1 <= theta.cols < theta.rows:
        raise ShapeError(f"multiplier must satisfy 1 <= p < q, got q x p = {theta.shape}")


def eval_multiplier(theta: MatrixMultiplier, z) -> np.ndarray:
    return theta(z)


def corona_bound(theta: MatrixMultiplier, grid) -> float:
    """Minimum over ``grid`` of the smallest singular value of ``Theta(z)``."""
    pts = as_points(grid, theta.nvars).reshape(-1, theta.nvars)
    if len(pts) == 0:
        raise DegenerateInputError("empty grid")
    sv = np.linalg.svd(theta(pts), compute_uv=False)
    return float(sv[:, -1].min())


def _polydiv(num: np.ndarray, den: np.ndarray):
    """Long division of ascending coefficient arrays; ``den`` has nonzero leading term."""
    num = num.astype(complex).copy()
    dd = len(den) - 1
    if len(num) - 1 < dd:
        return np.zeros(1, dtype=complex), num
    quot = np.zeros(len(num) - dd, dtype=complex)
    for k in range(len(num) - 1, dd - 1, -1):
        c = num[k] / den[-1]
        quot[k - dd] = c
        num[k - dd:k + 1] -= c * den
    return quot, num[:dd] if dd > 0 else np.zeros(1, dtype=complex)


def _trim(a: np.ndarray, floor: float) -> np.ndarray:
    a = np.where(np.abs(a) <= floor, 0, a)
    nz = np.nonzero(a)[0]
    return a[: nz[-1] + 1] if len(nz) else np.zeros(1, dtype=complex)


def _polymul(a, b):
    return np.convolve(a, b)


def _polysub(a, b):
    n = max(len(a), len(b))
    out = np.zeros(n, dtype=complex)
    out[: len(a)] += a
    out[: len(b)] -= b
    return out


def bezout_left_inverse(theta1: PolyC, theta2: PolyC) -> tuple[PolyC, PolyC]:
    """Extended Euclid over ``C[z]``: ``psi1, psi2`` with ``theta1 psi1 + theta2 psi2 = 1``."""
    if theta1.nvars != 1 or theta2.nvars != 1:
        raise UnsupportedError("Bezout construction is one-variable only; supply Psi explicitly")
    a, b = theta1.coeffs(), theta2.coeffs()
    scale = max(np.abs(a).max(), np.abs(b).max())
    if scale == 0:
        raise NotCoprimeError("both polynomials vanish identically")
    floor = BEZOUT_FLOOR * scale
    r0, r1 = _trim(a, floor), _trim(b, floor)
    s0, s1 = np.array([1.0 + 0j]), np.array([0j])
    t0, t1 = np.array([0j]), np.array([1.0 + 0j])
    while np.any(r1 != 0):
        quot, rem = _polydiv(r0, r1)
        rem = _trim(rem, floor)
        r0, r1 = r1, rem
        s0, s1 = s1, _trim(_polysub(s0, _polymul(quot, s1)), 0)
        t0, t1 = t1, _trim(_polysub(t0, _polymul(quot, t1)), 0)
    if len(r0) > 1:
        raise NotCoprimeError(f"common factor of degree {len(r0) - 1}: no left inverse")
    g = r0[0]
    return PolyC.from_coeffs(s0 / g), PolyC.from_coeffs(t0 / g)


@dataclass
class LeftInverseCertificate:
    psi: MatrixMultiplier
    residual: float
    psi_sup_norm: float
    grid: np.ndarray

    def valid(self, tol: float = 1e-10) -> bool:
        return self.residual <= tol


def verify_left_inverse(theta: MatrixMultiplier, psi: MatrixMultiplier, grid) -> LeftInverseCertificate:
    """Grid certificate: max ``||Psi(z) Theta(z) - I_p||`` and sup ``||Psi(z)||``."""
    q, p = theta.shape
    if psi.shape != (p, q):
        raise ShapeError(f"Psi must be {p} x {q} for Theta of shape {theta.shape}, got {psi.shape}")
    pts = as_points(grid, theta.nvars).reshape(-1, theta.nvars)
    if len(pts) == 0:
        raise DegenerateInputError("empty grid")
    P = psi(pts)
    prod = P @ theta(pts) - np.eye(p)
    res = np.linalg.norm(prod, ord=2, axis=(-2, -1))
    norms = np.linalg.norm(P, ord=2, axis=(-2, -1))
    return LeftInverseCertificate(psi, float(res.max()), float(norms.max()), pts)


def left_inverse_for(theta: MatrixMultiplier) -> MatrixMultiplier:
    """Bezout left inverse for a one-variable ``2 x 1`` column."""
    if theta.shape != (2, 1):
        raise UnsupportedError("automatic left inverse only for 2 x 1 columns; supply Psi")
    psi1, psi2 = bezout_left_inverse(theta[0, 0], theta[1, 0])
    return MatrixMultiplier(((psi1, psi2),))


__all__ = [
    "PolyC",
    "MatrixMultiplier",
    "LeftInverseCertificate",
    "z",
    "column",
    "eval_multiplier",
    "corona_bound",
    "bezout_left_inverse",
    "verify_left_inverse",
    "left_inverse_for",
    "require_multiplier_shape",
]
