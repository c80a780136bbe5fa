"""Energy functional, Nehari functional and their derivatives.

With ``||.||`` the product norm built from the two weighted inner products,

    Phi(u, v) = 1/2 ||u||_1^2 - 1/4 int u^4 + 1/2 ||v||_2^2 - 1/6 int |v|^3
                - beta/2 int u^2 v
    Psi(u, v) = Phi'(u, v)[(u, v)]

Gradients are returned as Riesz representatives, i.e. smoothed by the shifted
bilaplacian inverse of each component.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import Field, GridMismatch, GridSpec

TOL_PSI = 1e-9


class NehariError(ValueError):
    pass


class ZeroState(NehariError):
    pass


class NoPositiveRoot(NehariError):
    pass


class OffManifold(NehariError):
    pass


@dataclass(frozen=True)
class Params:
    lambda1: float
    lambda2: float
    beta: float
    dim: int = 1

    def __post_init__(self):
        if not self.lambda1 > 0:
            raise ValueError(f"lambda1 > 0 required, got {self.lambda1}")
        if not self.lambda2 > 0:
            raise ValueError(f"lambda2 > 0 required, got {self.lambda2}")
        if not (int(self.dim) == self.dim and 1 <= self.dim <= 7):
            raise ValueError(f"dim must be an integer in 1..7, got {self.dim}")
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")

    @property
    def outside_theorem_range(self) -> bool:
        return self.beta <= 0

    def with_(self, **kw) -> "Params":
        d = dict(lambda1=self.lambda1, lambda2=self.lambda2, beta=self.beta, dim=self.dim)
        d.update(kw)
        return Params(**d)


class State:
    """A pair (u, v) of fields on one grid."""

    __slots__ = ("grid", "u", "v")

    def __init__(self, grid: GridSpec, u, v):
        u = np.ascontiguousarray(u.values if isinstance(u, Field) else u, dtype=float)
        v = np.ascontiguousarray(v.values if isinstance(v, Field) else v, dtype=float)
        if u.shape != (grid.n,) or v.shape != (grid.n,):
            raise GridMismatch("state components must match the grid size")
        self.grid = grid
        self.u = u
        self.v = v

    @classmethod
    def from_fields(cls, u: Field, v: Field) -> "State":
        if not u.grid.same_as(v.grid):
            raise GridMismatch("components live on different grids")
        return cls(u.grid, u.values, v.values)

    @property
    def u_field(self) -> Field:
        return Field(self.grid, self.u)

    @property
    def v_field(self) -> Field:
        return Field(self.grid, self.v)

    def _other(self, o: "State") -> "State":
        if not self.grid.same_as(o.grid):
            raise GridMismatch("states live on different grids")
        return o

    def __add__(self, o: "State") -> "State":
        o = self._other(o)
        return State(self.grid, self.u + o.u, self.v + o.v)

    def __sub__(self, o: "State") -> "State":
        o = self._other(o)
        return State(self.grid, self.u - o.u, self.v - o.v)

    def __mul__(self, c: float) -> "State":
        return State(self.grid, c * self.u, c * self.v)

    __rmul__ = __mul__

    def __neg__(self) -> "State":
        return State(self.grid, -self.u, -self.v)

    def abs(self) -> "State":
        return State(self.grid, np.abs(self.u), np.abs(self.v))

    def is_zero(self) -> bool:
        return not (np.any(self.u) or np.any(self.v))

    def sup(self) -> float:
        return float(max(np.max(np.abs(self.u)), np.max(np.abs(self.v))))

    def copy(self) -> "State":
        return State(self.grid, self.u.copy(), self.v.copy())

    def __repr__(self):
        return f"State(grid={self.grid!r}, |u|_inf={np.max(np.abs(self.u)):.3g}, |v|_inf={np.max(np.abs(self.v)):.3g})"


def zero_state(g: GridSpec) -> State:
    return State(g, np.zeros(g.n), np.zeros(g.n))


@dataclass(frozen=True)
class EnergyBreakdown:
    phi: float
    i1: float
    i2: float
    coupling: float
    norm_sq: float
    quartic: float
    cubic_abs: float
    cross: float
    norm1_sq: float = 0.0
    norm2_sq: float = 0.0
    beta: float = 0.0

    @property
    def psi(self) -> float:
        return psi_from(self.norm_sq, self.quartic, self.cubic_abs, self.cross, self.beta)


def psi_from(norm_sq, quartic, cubic_abs, cross, beta) -> float:
    return norm_sq - quartic - 0.5 * cubic_abs - 1.5 * beta * cross


def _check(p: Params, s: State) -> None:
    if s.grid.dim != p.dim:
        raise GridMismatch(f"grid dimension {s.grid.dim} does not match params dim {p.dim}")


def energy(p: Params, s: State) -> EnergyBreakdown:
    _check(p, s)
    g = s.grid
    lu = g.laplacian(s.u)
    lv = g.laplacian(s.v)
    w = g.weights
    su2, sv2, su4, sv3, suv = kernels.moments(s.u, s.v, w)
    n1 = float(w @ (lu * lu)) + p.lambda1 * su2
    n2 = float(w @ (lv * lv)) + p.lambda2 * sv2
    i1 = 0.5 * n1 - 0.25 * su4
    i2 = 0.5 * n2 - sv3 / 6.0
    coupling = -0.5 * p.beta * suv
    return EnergyBreakdown(
        phi=i1 + i2 + coupling,
        i1=i1,
        i2=i2,
        coupling=coupling,
        norm_sq=n1 + n2,
        quartic=su4,
        cubic_abs=sv3,
        cross=suv,
        norm1_sq=n1,
        norm2_sq=n2,
        beta=p.beta,
    )


def state_inner(p: Params, a: State, b: State) -> float:
    """Product inner product <a, b> = <a_u, b_u>_1 + <a_v, b_v>_2."""
    g = a.grid
    return g.inner(a.u, b.u, p.lambda1) + g.inner(a.v, b.v, p.lambda2)


def state_norm(p: Params, s: State) -> float:
    return math.sqrt(state_inner(p, s, s))


def nehari_value(p: Params, s: State) -> float:
    e = energy(p, s)
    return psi_from(e.norm_sq, e.quartic, e.cubic_abs, e.cross, p.beta)


def on_manifold(p: Params, s: State, tol: float = TOL_PSI) -> bool:
    e = energy(p, s)
    return abs(e.psi) <= tol * e.norm_sq and e.norm_sq > 0


def nehari_derivative_diag(p: Params, s: State) -> float:
    """Psi'(s)[s]."""
    e = energy(p, s)
    return 2.0 * e.norm_sq - 4.0 * e.quartic - 1.5 * e.cubic_abs - 4.5 * p.beta * e.cross


def gradient(p: Params, s: State) -> State:
    """Riesz representative of Phi'(s)."""
    _check(p, s)
    g = s.grid
    u, v = s.u, s.v
    fu = u**3 + p.beta * u * v
    fv = 0.5 * np.abs(v) * v + 0.5 * p.beta * u * u
    return State(g, u - g.solve_shifted(fu, p.lambda1), v - g.solve_shifted(fv, p.lambda2))


def psi_derivative(p: Params, s: State, h: State) -> float:
    """Psi'(s)[h]."""
    _check(p, s)
    g = s.grid
    u, v = s.u, s.v
    w = g.weights
    lin = 2.0 * state_inner(p, s, h)
    nl = w @ ((4.0 * u**3 + 3.0 * p.beta * u * v) * h.u) + w @ (
        (1.5 * np.abs(v) * v + 1.5 * p.beta * u * u) * h.v
    )
    return float(lin - nl)


def psi_gradient(p: Params, s: State) -> State:
    """Riesz representative of Psi'(s), the normal direction to the manifold."""
    _check(p, s)
    g = s.grid
    u, v = s.u, s.v
    fu = 4.0 * u**3 + 3.0 * p.beta * u * v
    fv = 1.5 * np.abs(v) * v + 1.5 * p.beta * u * u
    return State(g, 2.0 * u - g.solve_shifted(fu, p.lambda1), 2.0 * v - g.solve_shifted(fv, p.lambda2))


def constrained_gradient(p: Params, s: State, grad: State | None = None) -> State:
    """Gradient with its component along the manifold normal removed."""
    gr = gradient(p, s) if grad is None else grad
    nrm = psi_gradient(p, s)
    nn = state_inner(p, nrm, nrm)
    if nn == 0.0:
        return gr
    return gr - nrm * (state_inner(p, gr, nrm) / nn)


def hessian_form(p: Params, s: State, h: State) -> float:
    """Phi''(s)[h, h]."""
    _check(p, s)
    s._other(h)
    w = s.grid.weights
    u, v = s.u, s.v
    h1, h2 = h.u, h.v
    return float(
        state_inner(p, h, h)
        - 3.0 * (w @ (u * u * h1 * h1))
        - w @ (np.abs(v) * h2 * h2)
        - p.beta * (w @ (v * h1 * h1))
        - 2.0 * p.beta * (w @ (u * h1 * h2))
    )


def projection_root(a: float, b: float, c: float) -> float:
    """Positive root t of a - b t^2 - c t = 0 (a > 0, b >= 0)."""
    if not a > 0:
        raise ZeroState("cannot project the zero state")
    if b <= 0.0 and c <= 0.0:
        raise NoPositiveRoot(f"no positive root: quartic term {b}, cubic term {c}")
    disc = math.sqrt(c * c + 4.0 * a * b)
    if c >= 0.0:
        return 2.0 * a / (c + disc)
    return (disc - c) / (2.0 * b)


def nehari_project(p: Params, s: State) -> tuple[float, State]:
    """Scale ``s`` onto the Nehari manifold; returns (t, t*s)."""
    if s.is_zero():
        raise ZeroState("cannot project the zero state")
    e = energy(p, s)
    t = projection_root(e.norm_sq, e.quartic, 0.5 * e.cubic_abs + 1.5 * p.beta * e.cross)
    return t, s * t


def constrained_energy(p: Params, s: State, tol: float = TOL_PSI) -> float:
    """Phi restricted to the manifold: ||s||^2/6 + int u^4/12."""
    e = energy(p, s)
    if not (e.norm_sq > 0 and abs(e.psi) <= tol * e.norm_sq):
        raise OffManifold(f"|Psi| = {abs(e.psi):.3e} exceeds {tol:g} * ||s||^2 = {tol * e.norm_sq:.3e}")
    return constrained_energy_from(e.norm_sq, e.quartic)


def constrained_energy_from(norm_sq: float, quartic: float) -> float:
    return norm_sq / 6.0 + quartic / 12.0


def strong_residual(p: Params, s: State) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise residual of the stationary system in strong form."""
    g = s.grid
    u, v = s.u, s.v
    ru = g.bilaplacian(u) + p.lambda1 * u - u**3 - p.beta * u * v
    rv = g.bilaplacian(v) + p.lambda2 * v - 0.5 * np.abs(v) * v - 0.5 * p.beta * u * u
    return ru, rv
