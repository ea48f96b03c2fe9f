"""Deterministic sampling grids inside the disk, ball and polydisk."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import product

import numpy as np

from .errors import ParameterError
from .kernels import DEFAULT_MARGIN, SHAPES


@dataclass(frozen=True)
class GridSpec:
    shape: str = "unit_disk"
    dim: int = 1
    r_max: float = 0.8
    n_radial: int = 24
    n_angular: int = 48
    per_axis: int = 8
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ParameterError(f"unknown grid shape {self.shape!r}")
        if self.shape == "unit_disk" and self.dim != 1:
            raise ParameterError("unit_disk grids are one-dimensional")
        if not 0 < self.r_max < 1 - self.margin:
            raise ParameterError(f"r_max must lie in (0, {1 - self.margin}), got {self.r_max}")
        if self.n_radial < 2 or self.n_angular < 1 or self.per_axis < 2:
            raise ParameterError("grid counts too small")

    @classmethod
    def disk(cls, r_max: float = 0.8, n_radial: int = 24, n_angular: int = 48) -> "GridSpec":
        return cls("unit_disk", 1, r_max, n_radial, n_angular)

    def points(self) -> np.ndarray:
        """Grid points, shape ``(P, dim)``.

        Disk: the origin, then ``n_radial - 1`` circles of ``n_angular`` points each,
        radius-major. Ball/polydisk: a tensor grid of ``per_axis`` values per real
        coordinate, filtered to the region.
        """
        if self.shape == "unit_disk":
            radii = self.r_max * np.arange(1, self.n_radial) / (self.n_radial - 1)
            angles = 2 * np.pi * np.arange(self.n_angular) / self.n_angular
            ring = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
            return np.concatenate([[0j], ring])[:, None]
        axis = np.linspace(-self.r_max, self.r_max, self.per_axis)
        pts = np.array(list(product(axis, repeat=2 * self.dim)))
        z = pts[:, : self.dim] + 1j * pts[:, self.dim:]
        if self.shape == "polydisk":
            keep = np.max(np.abs(z), axis=1) <= self.r_max + 1e-12
        else:
            keep = np.linalg.norm(z, axis=1) <= self.r_max + 1e-12
        return z[keep]

    def to_json(self) -> dict:
        return asdict(self)
