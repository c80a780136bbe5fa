"""Grids, quadrature and the (shifted) bilaplacian.

Two grid kinds are supported:

``line``
    periodic box [-L, L) with ``n`` uniform nodes; derivatives are spectral.
``radial``
    ball of radius R in dimension 2..7, ``n`` cell-centred shells; the
    Laplacian is the conservative flux stencil with a zero-flux closure at the
    origin and a Dirichlet closure at r = R.

Both kinds expose the same surface (``integrate``, ``laplacian``,
``bilaplacian``, ``solve_shifted``), so the variational layer never branches
on grid kind.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import kernels

LINE = "line"
RADIAL = "radial"
KINDS = (LINE, RADIAL)


class GridError(ValueError):
    """Invalid grid construction or mismatched grids."""


class InvalidDimension(GridError):
    pass


class InvalidSize(GridError):
    pass


class GridMismatch(GridError):
    pass


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in R^dim."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


@dataclass(frozen=True, eq=False)
class GridSpec:
    kind: str
    n: int
    extent: float
    dim: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def key(self) -> tuple:
        return (self.kind, self.n, self.extent, self.dim)

    def same_as(self, other: "GridSpec") -> bool:
        return self is other or self.key == other.key

    @property
    def spacing(self) -> float:
        if self.kind == LINE:
            return 2.0 * self.extent / self.n
        return self.extent / self.n

    @property
    def measure(self) -> float:
        if self.kind == LINE:
            return 2.0 * self.extent
        return sphere_area(self.dim) * self.extent**self.dim / self.dim

    # -- spectral data (line) -------------------------------------------------
    def _wavenumbers(self) -> np.ndarray:
        k = self._cache.get("k")
        if k is None:
            k = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.spacing)
            k.setflags(write=False)
            self._cache["k"] = k
        return k

    # -- flux data (radial) ---------------------------------------------------
    def _flux(self) -> tuple[np.ndarray, float]:
        data = self._cache.get("flux")
        if data is None:
            h = self.spacing
            om = sphere_area(self.dim)
            faces = h * np.arange(1, self.n)
            face = om * faces ** (self.dim - 1) / h
            outer = om * self.extent ** (self.dim - 1) / h
            face.setflags(write=False)
            data = (face, outer)
            self._cache["flux"] = data
        return data

    def _penta(self, lam: float):
        key = ("penta", float(lam))
        fac = self._cache.get(key)
        if fac is None:
            face, outer = self._flux()
            w = self.weights
            n = self.n
            kd = np.zeros(n)
            kd[:-1] -= face
            kd[1:] -= face
            kd[-1] -= 2.0 * outer
            d0 = kd * kd / w + lam * w
            d0[1:] += face**2 / w[:-1]
            d0[:-1] += face**2 / w[1:]
            d1 = kd[:-1] * face / w[:-1] + face * kd[1:] / w[1:]
            d2 = face[:-1] * face[1:] / w[1:-1]
            fac = kernels.penta_factor(
                np.ascontiguousarray(d0), np.ascontiguousarray(d1), np.ascontiguousarray(d2)
            )
            self._cache[key] = fac
        return fac

    # -- operators on raw arrays ---------------------------------------------
    def integrate(self, f: np.ndarray) -> float:
        return float(self.weights @ f)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        if self.kind == LINE:
            k = self._wavenumbers()
            return np.fft.irfft(-(k * k) * np.fft.rfft(f), self.n)
        face, outer = self._flux()
        return kernels.flux_apply(np.ascontiguousarray(f, dtype=float), face, outer) / self.weights

    def bilaplacian(self, f: np.ndarray) -> np.ndarray:
        if self.kind == LINE:
            k = self._wavenumbers()
            return np.fft.irfft(k**4 * np.fft.rfft(f), self.n)
        return self.laplacian(self.laplacian(f))

    def solve_shifted(self, f: np.ndarray, lam: float) -> np.ndarray:
        """Solve (bilaplacian + lam) w = f."""
        if not lam > 0:
            raise ValueError(f"shift must be positive, got {lam}")
        if self.kind == LINE:
            k = self._wavenumbers()
            return np.fft.irfft(np.fft.rfft(f) / (k**4 + lam), self.n)
        rhs = np.ascontiguousarray(self.weights * f)
        return kernels.penta_solve(self._penta(lam), rhs)

    def inner(self, f1: np.ndarray, f2: np.ndarray, lam: float) -> float:
        """<f1, f2>_lam = int Lap f1 Lap f2 + lam int f1 f2."""
        w = self.weights
        if f1 is f2:
            lf = self.laplacian(f1)
            return float(w @ (lf * lf) + lam * (w @ (f1 * f1)))
        return float(w @ (self.laplacian(f1) * self.laplacian(f2)) + lam * (w @ (f1 * f2)))


def make_grid(kind: str, n: int, extent: float, dim: int = 1) -> GridSpec:
    """Build a line (periodic, dim 1) or radial (dim 2..7) grid."""
    if kind not in KINDS:
        raise GridError(f"unknown grid kind {kind!r}")
    if int(n) != n or n < 8:
        raise InvalidSize(f"need at least 8 nodes, got {n}")
    if not extent > 0:
        raise InvalidSize(f"extent must be positive, got {extent}")
    n = int(n)
    extent = float(extent)
    if not 1 <= dim <= 7:
        raise InvalidDimension(f"dimension must lie in 1..7, got {dim}")
    if kind == LINE:
        if dim != 1:
            raise InvalidDimension(f"line grids are one-dimensional, got dim={dim}")
        h = 2.0 * extent / n
        nodes = -extent + h * np.arange(n)
        weights = np.full(n, h)
    else:
        if dim < 2:
            raise InvalidDimension("radial grids need 2 <= dim <= 7; use a line grid for dim=1")
        h = extent / n
        nodes = h * (np.arange(n) + 0.5)
        weights = _shell_weights(nodes, h, extent, dim)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return GridSpec(kind, n, extent, dim, nodes, weights)


def _shell_weights(nodes: np.ndarray, h: float, radius: float, dim: int) -> np.ndarray:
    # midpoint weights, with the O(h^2) deficit against the exact ball volume
    # folded into the outermost shell where fields vanish
    om = sphere_area(dim)
    w = om * nodes ** (dim - 1) * h
    w[-1] += om * radius**dim / dim - w.sum()
    return w


# -----------------------------------------------------------------------------
# Field


@dataclass(frozen=True, eq=False)
class Field:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise GridMismatch(f"field has shape {vals.shape}, grid has {self.grid.n} nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def _check(self, other: "Field") -> None:
        if not self.grid.same_as(other.grid):
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values * other.values)
        return Field(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __abs__(self):
        return Field(self.grid, np.abs(self.values))

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "Field":
        return cls(grid, fn(grid.nodes))


def _on(g: GridSpec, f: Field) -> np.ndarray:
    if not g.same_as(f.grid):
        raise GridMismatch("field does not live on the given grid")
    return f.values


def integrate(g: GridSpec, f: Field) -> float:
    return g.integrate(_on(g, f))


def apply_bilaplacian(g: GridSpec, f: Field) -> Field:
    return Field(g, g.bilaplacian(_on(g, f)))


def apply_laplacian(g: GridSpec, f: Field) -> Field:
    return Field(g, g.laplacian(_on(g, f)))


def solve_shifted_bilaplacian(g: GridSpec, f: Field, lam: float) -> Field:
    return Field(g, g.solve_shifted(_on(g, f), lam))


def inner_product_j(g: GridSpec, f1: Field, f2: Field, lam: float) -> float:
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return g.inner(_on(g, f1), _on(g, f2), lam)


def norm_j(g: GridSpec, f: Field, lam: float) -> float:
    return math.sqrt(inner_product_j(g, f, f, lam))


# -----------------------------------------------------------------------------
# CSV


def write_field_csv(path, f: Field) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["coord", "value"])
        for x, y in zip(f.grid.nodes, f.values):
            w.writerow([f"{x:.17g}", f"{y:.17g}"])


def read_field_csv(path, grid: GridSpec | None = None) -> Field:
    """Read a ``coord,value`` CSV; the grid is matched against ``grid`` when given."""
    coords, vals = _read_columns(path, ("coord", "value"))
    if grid is None:
        grid = infer_grid(coords)
    elif grid.n != len(coords) or not np.allclose(grid.nodes, coords, rtol=0, atol=1e-12 * grid.extent):
        raise GridMismatch(f"{path}: nodes do not match the target grid")
    return Field(grid, vals)


def _read_columns(path, names: Iterable[str]) -> tuple[np.ndarray, ...]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = [c.strip() for c in rows[0]]
    idx = [header.index(n) for n in names]
    data = np.array([[float(r[i]) for i in idx] for r in rows[1:] if r], dtype=float)
    return tuple(data[:, j] for j in range(len(idx)))


def infer_grid(coords: np.ndarray, dim: int | None = None) -> GridSpec:
    """Recover a grid from its node coordinates (line if any node is negative)."""
    n = len(coords)
    if coords[0] < 0:
        return make_grid(LINE, n, -float(coords[0]), 1)
    h = 2.0 * float(coords[0])
    return make_grid(RADIAL, n, h * n, dim if dim is not None else 3)
