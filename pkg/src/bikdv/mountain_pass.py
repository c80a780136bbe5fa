"""String-method estimate of the mountain-pass level on the Nehari manifold.

The path is a chain of beads between two on-manifold endpoints.  Each sweep
moves interior beads along the component of the Riesz gradient normal to the
path, re-projects them and redistributes them uniformly in arclength.  Once the
top bead energy is stationary, the highest bead is refined by a climbing-image
iteration so that it settles on the saddle rather than between two beads.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .ground import SolveOptions
from .variational import (
    TOL_PSI,
    NehariError,
    OffManifold,
    Params,
    State,
    constrained_gradient,
    energy,
    gradient,
    nehari_project,
    state_inner,
)

log = logging.getLogger(__name__)


@dataclass
class MountainPassReport:
    level_m: float
    bead_count: int
    argmax_state: State
    endpoint_energies: tuple
    saddle_grad_norm: float
    argmax_index: int = 0
    string_iters: int = 0
    climb_iters: int = 0
    converged: bool = False
    bead_energies: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "level_m": self.level_m,
            "bead_count": self.bead_count,
            "endpoint_energy_a": self.endpoint_energies[0],
            "endpoint_energy_b": self.endpoint_energies[1],
            "saddle_grad_norm": self.saddle_grad_norm,
            "argmax_index": self.argmax_index,
            "string_iters": self.string_iters,
            "climb_iters": self.climb_iters,
            "converged": self.converged,
        }


def _require_on_manifold(p: Params, s: State, name: str) -> float:
    e = energy(p, s)
    if not (e.norm_sq > 0 and abs(e.psi) <= TOL_PSI * e.norm_sq):
        raise OffManifold(f"endpoint {name} is off the Nehari manifold (|Psi|/||s||^2 = {abs(e.psi) / max(e.norm_sq, 1e-300):.2e})")
    return e.phi


def _dist(p: Params, a: State, b: State) -> float:
    d = a - b
    return math.sqrt(max(state_inner(p, d, d), 0.0))


def _reparametrize(p: Params, beads: list[State]) -> list[State]:
    seg = np.array([_dist(p, beads[i], beads[i + 1]) for i in range(len(beads) - 1)])
    total = seg.sum()
    if total == 0.0:
        return beads
    arc = np.concatenate([[0.0], np.cumsum(seg)]) / total
    targets = np.linspace(0.0, 1.0, len(beads))
    out = [beads[0]]
    for s_t in targets[1:-1]:
        j = min(int(np.searchsorted(arc, s_t, side="right")) - 1, len(beads) - 2)
        frac = (s_t - arc[j]) / (arc[j + 1] - arc[j]) if arc[j + 1] > arc[j] else 0.0
        mixed = beads[j] * (1.0 - frac) + beads[j + 1] * frac
        out.append(nehari_project(p, mixed)[1])
    out.append(beads[-1])
    return out


def _tangent(p: Params, prev: State, nxt: State) -> State:
    d = nxt - prev
    n = math.sqrt(state_inner(p, d, d))
    return d * (1.0 / n) if n > 0 else d


def mountain_pass_estimate(p: Params, endpoint_a: State, endpoint_b: State, beads: int = 17,
                           opts: SolveOptions | None = None, max_iters: int = 2000,
                           stall_tol: float = 1e-10, climb_tol: float = 1e-6,
                           climb_iters: int = 3000) -> MountainPassReport:
    opts = opts or SolveOptions()
    if beads < 2:
        raise ValueError("need at least the two endpoints")
    phi_a = _require_on_manifold(p, endpoint_a, "a")
    phi_b = _require_on_manifold(p, endpoint_b, "b")
    if beads == 2:
        top = 0 if phi_a >= phi_b else 1
        st = (endpoint_a, endpoint_b)[top]
        gn = math.sqrt(max(state_inner(p, g := constrained_gradient(p, st), g), 0.0))
        return MountainPassReport(max(phi_a, phi_b), 2, st, (phi_a, phi_b), gn,
                                  argmax_index=top * 1, converged=True, bead_energies=[phi_a, phi_b])

    path = [endpoint_a]
    for a in np.linspace(0.0, 1.0, beads)[1:-1]:
        path.append(nehari_project(p, endpoint_a * (1.0 - a) + endpoint_b * a)[1])
    path.append(endpoint_b)
    path = _reparametrize(p, path)
    energies = [energy(p, s).phi for s in path]

    history = []
    it = 0
    for it in range(1, max_iters + 1):
        new = [path[0]]
        for i in range(1, beads - 1):
            s = path[i]
            g = gradient(p, s)
            tau = _tangent(p, path[i - 1], path[i + 1])
            g_perp = g - tau * state_inner(p, g, tau)
            gn2 = state_inner(p, g_perp, g_perp)
            alpha = opts.step0
            cand, ec = s, energies[i]
            while gn2 > 0 and alpha >= 1e-10:
                try:
                    _, trial = nehari_project(p, s - g_perp * alpha)
                except NehariError:
                    alpha *= 0.5
                    continue
                et = energy(p, trial).phi
                if et <= energies[i] - opts.armijo * alpha * gn2:
                    cand, ec = trial, et
                    break
                alpha *= 0.5
            new.append(cand)
        new.append(path[-1])
        path = _reparametrize(p, new)
        energies = [energy(p, s).phi for s in path]
        history.append(max(energies))
        if len(history) > 5 and max(abs(history[-k] - history[-k - 1]) for k in range(1, 6)) < stall_tol * max(1.0, abs(history[-1])):
            break
    string_iters = it

    top = int(np.argmax(energies))
    climber = path[top]
    n_climb = 0
    gn = math.sqrt(max(state_inner(p, gc := constrained_gradient(p, climber), gc), 0.0))
    if 0 < top < beads - 1:
        tau = _tangent(p, path[top - 1], path[top + 1])
        step = 0.5 * opts.step0
        for n_climb in range(1, climb_iters + 1):
            gc = constrained_gradient(p, climber)
            gn = math.sqrt(max(state_inner(p, gc, gc), 0.0))
            if gn <= climb_tol:
                break
            d = gc - tau * (2.0 * state_inner(p, gc, tau))
            try:
                _, trial = nehari_project(p, climber - d * step)
            except NehariError:
                step *= 0.5
                continue
            gt = constrained_gradient(p, trial)
            gtn = math.sqrt(max(state_inner(p, gt, gt), 0.0))
            if gtn < gn or step < 1e-3:
                climber = trial
                # follow the unstable direction as the climber moves
                tau = _tangent(p, path[top - 1], path[top + 1]) if n_climb % 50 else tau
                step = min(step * 1.2, opts.step0)
            else:
                step *= 0.5
        path[top] = climber
        energies[top] = energy(p, climber).phi
    level = max(max(energies), phi_a, phi_b)
    rep = MountainPassReport(level, beads, climber, (phi_a, phi_b), gn, argmax_index=top,
                             string_iters=string_iters, climb_iters=n_climb,
                             converged=gn <= max(climb_tol, opts.tol_grad), bead_energies=energies)
    log.info("mountain pass: level %.12g at bead %d, |grad| %.2e", level, top, gn)
    return rep
