"""Scalar and coupled ground states on the Nehari manifold.

All solves share one engine: Riesz-gradient descent followed by Nehari
projection, with Armijo backtracking on the projected energy.  The scalar
problem is the coupled one with the first component frozen at zero.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import LINE, RADIAL, Field, GridSpec
from .variational import (
    TOL_PSI,
    NehariError,
    Params,
    projection_root,
    State,
    energy,
    gradient,
    nehari_project,
    state_inner,
    strong_residual,
)

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class SolveError(RuntimeError):
    pass


class DegenerateInit(SolveError):
    pass


@dataclass
class SolveOptions:
    max_iters: int = 5000
    tol_grad: float = 1e-8
    tol_energy: float = 1e-12
    step0: float = 1.0
    armijo: float = 1e-4
    multistart: int = 3
    seed: int = 0

    def __post_init__(self):
        if not (self.tol_grad > 0 and self.tol_energy > 0 and self.step0 > 0):
            raise ValueError("tolerances and step0 must be positive")
        if not 0 < self.armijo < 1:
            raise ValueError("armijo parameter must lie in (0, 1)")
        if self.multistart < 1:
            raise ValueError("multistart must be >= 1")


@dataclass
class SolveReport:
    converged: bool = False
    iters: int = 0
    final_energy: float = float("nan")
    grad_norm: float = float("inf")
    residual_sup: float = float("nan")
    nehari_floor: float = float("inf")
    sign_fix_applied: bool = False
    t_history_max: float = 0.0
    sign_fix_t: float = float("nan")
    sign_fix_t_h1: float = float("nan")
    semi_trivial: bool = False
    changes_sign: bool = False
    projection_failures: int = 0
    max_energy_increase: float = 0.0
    start: str = ""
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def descend(p: Params, s0: State, opts: SolveOptions, freeze_u: bool = False) -> tuple[State, SolveReport, list]:
    """Projected Riesz-gradient descent of Phi on {Psi = 0}.

    Returns the final state, its report and the accepted energy history.
    ``grad_norm`` in the report is ||grad|| / max(1, ||s||).
    """
    rep = SolveReport()
    t, s = nehari_project(p, s0)
    rep.t_history_max = t
    e = energy(p, s)
    phi = e.phi
    rep.nehari_floor = e.norm_sq
    history = [phi]
    quiet = 0
    for it in range(opts.max_iters):
        g = gradient(p, s)
        if freeze_u:
            g.u[:] = 0.0
        gn2 = state_inner(p, g, g)
        # scaled by the state norm: the absolute norm carries the domain volume
        gn = math.sqrt(max(gn2, 0.0)) / max(1.0, math.sqrt(e.norm_sq))
        rep.grad_norm = gn
        rep.iters = it
        if gn <= opts.tol_grad and quiet >= 3:
            rep.converged = True
            break
        # already critical at the start: nothing to descend
        if gn == 0.0 or (it == 0 and gn <= opts.tol_grad):
            rep.converged = True
            break
        alpha = opts.step0
        accepted = False
        slack = 8.0 * _EPS * max(abs(phi), 1.0)
        while alpha >= 1e-14:
            try:
                t, cand = nehari_project(p, s - g * alpha)
            except NehariError:
                rep.projection_failures += 1
                alpha *= 0.5
                continue
            ec = energy(p, cand)
            if ec.phi <= phi - opts.armijo * alpha * gn2 + slack:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            rep.notes.append(f"line search stalled at iteration {it}")
            break
        dphi = ec.phi - phi
        rep.max_energy_increase = max(rep.max_energy_increase, dphi)
        rep.t_history_max = max(rep.t_history_max, t)
        quiet = quiet + 1 if abs(dphi) <= opts.tol_energy * max(1.0, abs(phi)) else 0
        s, e, phi = cand, ec, ec.phi
        rep.nehari_floor = min(rep.nehari_floor, e.norm_sq)
        history.append(phi)
    else:
        rep.iters = opts.max_iters
    rep.final_energy = phi
    ru, rv = strong_residual(p, s)
    rep.residual_sup = float(max(np.max(np.abs(rv)), 0.0 if freeze_u else np.max(np.abs(ru))))
    rep.changes_sign = bool(np.any(s.v < 0) or np.any(s.u < 0))
    return s, rep, history


def gaussian_bump(g: GridSpec, amplitude: float, width: float, center: float = 0.0) -> np.ndarray:
    x = g.nodes - (center if g.kind == LINE else 0.0)
    return amplitude * np.exp(-((x / width) ** 2))


def solve_scalar_ground(lam: float, g: GridSpec, opts: SolveOptions | None = None,
                        init: np.ndarray | None = None) -> tuple[Field, SolveReport]:
    """Ground state of bilap V + lam V = |V| V / 2 by descent on its Nehari manifold."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    opts = opts or SolveOptions()
    v0 = gaussian_bump(g, 2.0 * lam, lam**-0.25) if init is None else np.asarray(init, float)
    if not g.integrate(np.abs(v0) ** 3) > 0:
        raise DegenerateInit("initial profile has zero cubic moment")
    p = Params(1.0, lam, 0.0, g.dim)
    s, rep, _ = descend(p, State(g, np.zeros(g.n), v0), opts, freeze_u=True)
    rep.start = "gaussian" if init is None else "user"
    if not rep.converged:
        log.warning("scalar solve did not converge: grad %.3e after %d iterations", rep.grad_norm, rep.iters)
    return Field(g, s.v), rep


def rescale_ground(V: Field, lam2: float, target: GridSpec | None = None, support_tol: float = 1e-6) -> Field:
    """Sample x -> lam2 * V(lam2^(1/4) x) on ``target`` (default: V's own grid).

    Line grids use exact trigonometric interpolation of V; radial grids use an
    even-extended cubic spline.
    """
    if not lam2 > 0:
        raise ValueError(f"lambda2 must be positive, got {lam2}")
    src = V.grid
    target = target or src
    if target.kind != src.kind or target.dim != src.dim:
        raise ValueError("source and target grids must share kind and dimension")
    scale = lam2**0.25
    vals = V.values
    peak = np.max(np.abs(vals))
    # the rescaled profile must have decayed before the target boundary
    edge = target.extent * scale
    if src.kind == LINE:
        lo = min(edge, src.extent)
        tail = np.max(np.abs(vals[np.abs(src.nodes) >= lo - 2 * src.spacing]))
    else:
        lo = min(edge, src.extent)
        tail = np.max(np.abs(vals[src.nodes >= lo - 2 * src.spacing]))
    if tail > support_tol * peak:
        raise ValueError(
            f"target grid too small for rescaled profile: tail/peak = {tail / peak:.2e} at scaled extent {edge:.3g}"
        )
    y = scale * target.nodes
    if scale == 1.0 and target.same_as(src):
        return Field(target, lam2 * vals)
    if src.kind == LINE:
        out = _trig_interp(src, vals, y)
    else:
        r = src.nodes
        spline = CubicSpline(np.concatenate([-r[::-1], r]), np.concatenate([vals[::-1], vals]))
        out = np.where(y <= src.extent, spline(np.minimum(y, src.extent)), 0.0)
    return Field(target, lam2 * out)


def _trig_interp(g: GridSpec, vals: np.ndarray, y: np.ndarray) -> np.ndarray:
    inside = np.abs(y) < g.extent
    out = np.zeros_like(y)
    coef = np.fft.rfft(vals) / g.n
    k = 2.0 * np.pi * np.fft.rfftfreq(g.n, d=g.spacing)
    mult = np.full(coef.shape, 2.0)
    mult[0] = 1.0
    if g.n % 2 == 0:
        mult[-1] = 1.0
    coef = coef * mult
    yy = y[inside] + g.extent
    for lo in range(0, yy.size, 512):
        blk = yy[lo:lo + 512]
        out_idx = np.flatnonzero(inside)[lo:lo + 512]
        out[out_idx] = np.real(np.exp(1j * np.outer(blk, k)) @ coef)
    return out


def scaled_moment(m_p: float, p: float, lam2: float, dim: int) -> float:
    """int V2^p = lam2^(p - N/4) int V^p."""
    if not lam2 > 0:
        raise ValueError(f"lambda2 must be positive, got {lam2}")
    return lam2 ** (p - dim / 4.0) * m_p


def sign_fix(p: Params, s: State) -> tuple[float, State, bool]:
    """Project (|u|, |v|); keep it only if the energy does not increase.

    Returns the projection factor, the kept state and whether it changed.
    """
    t, cand = nehari_project(p, s.abs())
    if np.array_equal(cand.u, s.u) and np.array_equal(cand.v, s.v):
        return t, s, False
    if energy(p, cand).phi <= energy(p, s).phi:
        return t, cand, True
    return t, s, False


def sign_fix_t_h1(p: Params, s: State) -> float:
    """Projection factor of (|u|, |v|) computed with the norm of (u, v) itself.

    This is the quantity the classical positivity argument bounds by 1; it
    differs from the true factor whenever |u| or |v| has kinks.
    """
    e = energy(p, s)
    ea = energy(p, s.abs())
    return projection_root(e.norm_sq, ea.quartic, 0.5 * ea.cubic_abs + 1.5 * p.beta * ea.cross)


def default_starts(p: Params, g: GridSpec, V2: Field, opts: SolveOptions) -> list[tuple[str, State]]:
    v2 = V2.values
    rng = np.random.default_rng(opts.seed)
    amp = float(np.max(np.abs(v2)))
    width = p.lambda2**-0.25
    centre = 0.0
    a1, a2 = rng.uniform(0.5, 1.5, size=2)
    w1, w2 = rng.uniform(0.7, 1.4, size=2) * width
    starts = [
        ("0.1V2,V2", State(g, 0.1 * v2, v2)),
        ("V2,V2", State(g, v2.copy(), v2.copy())),
        ("random", State(g, gaussian_bump(g, a1 * amp, w1, centre), gaussian_bump(g, a2 * amp, w2, centre))),
    ]
    return starts[: opts.multistart] if opts.multistart <= 3 else starts + [
        (f"random{i}", State(g, gaussian_bump(g, rng.uniform(0.3, 2) * amp, rng.uniform(0.5, 2) * width),
                             gaussian_bump(g, rng.uniform(0.3, 2) * amp, rng.uniform(0.5, 2) * width)))
        for i in range(opts.multistart - 3)
    ]


def solve_coupled_ground(p: Params, g: GridSpec, opts: SolveOptions | None = None,
                         V2: Field | None = None, starts: list | None = None) -> tuple[State, SolveReport]:
    """Minimise Phi over the Nehari manifold from several starts; keep the lowest."""
    opts = opts or SolveOptions()
    if g.dim != p.dim:
        raise ValueError(f"grid dimension {g.dim} does not match params dim {p.dim}")
    if p.dim >= 2 and g.kind != RADIAL:
        raise ValueError("dimensions 2..7 require a radial grid")
    if V2 is None:
        V2, _ = solve_scalar_ground(p.lambda2, g, opts)
    if starts is None:
        starts = default_starts(p, g, V2, opts)
    best = None
    for name, s0 in starts:
        try:
            s, rep, _ = descend(p, s0, opts)
        except NehariError as exc:
            log.warning("start %s failed: %s", name, exc)
            continue
        rep.start = name
        log.info("start %s: phi=%.12g grad=%.2e iters=%d", name, rep.final_energy, rep.grad_norm, rep.iters)
        if best is None or rep.final_energy < best[1].final_energy:
            best = (s, rep)
    if best is None:
        raise SolveError("every start failed to project")
    s, rep = best
    t, fixed, changed = sign_fix(p, s)
    rep.sign_fix_t = t
    rep.sign_fix_t_h1 = sign_fix_t_h1(p, s)
    rep.sign_fix_applied = changed
    if changed:
        s = fixed
        rep.final_energy = energy(p, s).phi
        ru, rv = strong_residual(p, s)
        rep.residual_sup = float(max(np.max(np.abs(ru)), np.max(np.abs(rv))))
    rep.changes_sign = bool(np.any(s.u < 0) or np.any(s.v < 0))
    rep.semi_trivial = bool(np.max(np.abs(s.u)) <= 1e-8 * max(np.max(np.abs(s.v)), 1e-300))
    return s, rep


def on_manifold_report(p: Params, s: State) -> tuple[float, bool]:
    e = energy(p, s)
    return e.psi, abs(e.psi) <= TOL_PSI * e.norm_sq
