"""Critical coupling, classification of the semi-trivial state, and the
energy comparison with the candidate w = t (V2, V2).
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import Field, GridSpec
from .ground import rescale_ground, scaled_moment
from .variational import Params, State, energy, hessian_form, psi_derivative

log = logging.getLogger(__name__)


class AnalysisError(RuntimeError):
    pass


class InvalidProfile(AnalysisError, ValueError):
    pass


class NotConverged(AnalysisError):
    pass


LOCAL_MIN = "local-min"
SADDLE = "saddle"
MARGINAL = "marginal"


# -----------------------------------------------------------------------------
# critical coupling


def lambda_threshold(g: GridSpec, lam1: float, V2: Field, tol: float = 1e-10,
                     max_iters: int = 5000, init: np.ndarray | None = None) -> tuple[float, Field]:
    """Infimum of ||phi||_1^2 / int V2 phi^2 and its minimiser.

    Power iteration on phi -> (bilap + lam1)^-1 (V2 phi), normalised in the
    lam1 norm, stopped once successive Rayleigh quotients agree to ``tol``.
    """
    if not lam1 > 0:
        raise ValueError(f"lambda1 must be positive, got {lam1}")
    v = V2.values
    if init is None:
        phi = np.maximum(v, 0.0)
    else:
        phi = np.asarray(init, dtype=float).copy()
    if not np.any(phi):
        raise InvalidProfile("V2 has no positive part")
    q_old = None
    for it in range(max_iters):
        phi = g.solve_shifted(v * phi, lam1)
        nrm = math.sqrt(g.inner(phi, phi, lam1))
        if nrm == 0.0:
            raise InvalidProfile("iterate vanished")
        phi /= nrm
        den = g.integrate(v * phi * phi)
        if not den > 0:
            raise InvalidProfile(f"int V2 phi^2 = {den:.3e} is not positive")
        q = 1.0 / den
        if q_old is not None and it >= 2 and abs(q - q_old) <= tol * abs(q):
            break
        q_old = q
    else:
        raise NotConverged(f"Rayleigh quotient did not settle in {max_iters} iterations")
    # report the quotient of the returned vector itself
    lam_c = g.inner(phi, phi, lam1) / g.integrate(v * phi * phi)
    return lam_c, Field(g, phi)


def rayleigh_quotient(g: GridSpec, lam1: float, V2: Field, phi: np.ndarray) -> float:
    return g.inner(phi, phi, lam1) / g.integrate(V2.values * phi * phi)


def random_field(g: GridSpec, rng: np.random.Generator, lam: float = 1.0) -> np.ndarray:
    """Smooth random field: shifted-bilaplacian-filtered white noise with unit sup."""
    f = g.solve_shifted(rng.standard_normal(g.n), lam)
    return f / np.max(np.abs(f))


# -----------------------------------------------------------------------------
# classification


@dataclass
class Classification:
    lambda_crit: float
    beta: float
    verdict: str
    witness_value: float
    n_samples: int
    min_sample: float
    witness_weight: float = 0.0
    tol: float = 0.0
    max_tangency_defect: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def j2_derivative(p: Params, V2: Field, h: np.ndarray) -> float:
    """J2'(V2)[h] = 2 <V2, h>_2 - 3/2 int |V2| V2 h."""
    g = V2.grid
    v = V2.values
    return 2.0 * g.inner(v, h, p.lambda2) - 1.5 * g.integrate(np.abs(v) * v * h)


def tangent_project(p: Params, V2: Field, h2: np.ndarray) -> np.ndarray:
    """Remove the V2 component of h2 so that J2'(V2)[h2] = 0."""
    den = j2_derivative(p, V2, V2.values)
    if den == 0.0:
        raise InvalidProfile("J2'(V2)[V2] = 0: V2 is not a Nehari point")
    return h2 - (j2_derivative(p, V2, h2) / den) * V2.values


def classify_semitrivial(p: Params, V2: Field, lam_c: float, h_tilde: Field,
                         n_samples: int = 200, seed: int = 0) -> Classification:
    """Sign of the constrained second variation at (0, V2)."""
    g = V2.grid
    v2 = State(g, np.zeros(g.n), V2.values)
    tol = 1e-8 * g.inner(V2.values, V2.values, p.lambda2)
    ht = h_tilde.values
    wit_dir = State(g, ht, np.zeros(g.n))
    witness = hessian_form(p, v2, wit_dir)
    weight = g.integrate(V2.values * ht * ht)
    rng = np.random.default_rng(seed)
    samples = []
    defect = abs(psi_derivative(p, v2, wit_dir))
    for _ in range(n_samples):
        h1 = random_field(g, rng, p.lambda1)
        h2 = tangent_project(p, V2, random_field(g, rng, p.lambda2))
        h = State(g, h1, h2)
        nrm = math.sqrt(g.inner(h1, h1, p.lambda1) + g.inner(h2, h2, p.lambda2))
        h = h * (1.0 / nrm)
        defect = max(defect, abs(psi_derivative(p, v2, h)))
        samples.append(hessian_form(p, v2, h))
    smin = float(min(samples)) if samples else float("nan")
    if witness < -tol:
        verdict = SADDLE
    elif samples and smin > tol and witness > tol:
        verdict = LOCAL_MIN
    else:
        verdict = MARGINAL
    return Classification(lam_c, p.beta, verdict, witness, len(samples), smin, weight, tol, defect)


# -----------------------------------------------------------------------------
# candidate w = t (V2, V2)


@dataclass
class Theorem8Report:
    t_star: float | None
    phi_w: float | None
    phi_v2: float
    inequality_holds: bool
    lambda2: float
    beta: float
    A: float
    B: float
    C: float
    C_abs: float
    lambda2_threshold: float | None = None
    phi_w_grid: float | None = None
    grid_rel_diff: float | None = None
    psi_w_grid: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def unit_moments(V: Field) -> dict:
    g = V.grid
    v = V.values
    return {
        "A": g.integrate(v * v),
        "B": g.integrate(v**4),
        "C": g.integrate(v**3),
        "C_abs": g.integrate(np.abs(v) ** 3),
    }


def candidate_root(A: float, B: float, C: float, p: Params, C_abs: float | None = None) -> float | None:
    """Positive t solving lam2 B t^2 + (C_abs + 3 beta C) t / 2 = C_abs + (lam1 - lam2) A / lam2."""
    Ca = C if C_abs is None else C_abs
    if not B > 0:
        raise ValueError("quartic moment B must be positive")
    lam1, lam2, beta = p.lambda1, p.lambda2, p.beta
    a = lam2 * B
    b = 0.5 * (Ca + 3.0 * beta * C)
    k0 = Ca + (lam1 - lam2) / lam2 * A
    if not k0 > 0:
        return None
    disc = math.sqrt(b * b + 4.0 * a * k0)
    return 2.0 * k0 / (b + disc) if b >= 0 else (disc - b) / (2.0 * a)


def theorem8_candidate(A: float, B: float, C: float, p: Params, V: Field | None = None,
                       C_abs: float | None = None, grid: GridSpec | None = None) -> Theorem8Report:
    """Energy of w = t (V2, V2) on the manifold against Phi(0, V2), from unit moments.

    With ``V`` given, Phi(w) is also evaluated directly on ``grid`` (default:
    V's grid) using the rescaled profile.
    """
    Ca = C if C_abs is None else C_abs
    lam1, lam2, N = p.lambda1, p.lambda2, p.dim
    scale = lam2 ** (3.0 - N / 4.0)
    phi_v2 = scale * Ca / 12.0
    t = candidate_root(A, B, C, p, Ca)
    rep = Theorem8Report(t, None, phi_v2, False, lam2, p.beta, A, B, C, Ca)
    if t is None:
        return rep
    k0 = Ca + (lam1 - lam2) / lam2 * A
    rep.phi_w = scale * (t * t * k0 / 6.0 + t**4 * lam2 * B / 12.0)
    rep.inequality_holds = bool(t * t * k0 + 0.5 * t**4 * lam2 * B - 0.5 * Ca < 0)
    if V is not None:
        target = grid or V.grid
        V2 = rescale_ground(V, lam2, target)
        w = State(target, t * V2.values, t * V2.values)
        e = energy(p, w)
        rep.phi_w_grid = e.phi
        rep.grid_rel_diff = abs(e.phi - rep.phi_w) / abs(rep.phi_w)
        rep.psi_w_grid = e.psi / e.norm_sq
    return rep


def moment_scaled_check(m: dict, lam2: float, dim: int) -> dict:
    return {k: scaled_moment(v, {"A": 2, "B": 4, "C": 3, "C_abs": 3}[k], lam2, dim) for k, v in m.items()}


@dataclass
class Sweep:
    rows: list = field(default_factory=list)
    threshold: float | None = None
    monotone: bool = True
    violations: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("lambda2,t_star,phi_w,phi_v2,holds\n")
            for r in self.rows:
                fh.write(
                    f"{r.lambda2:.17g},{_fmt(r.t_star)},{_fmt(r.phi_w)},{r.phi_v2:.17g},{int(r.inequality_holds)}\n"
                )


def _fmt(x) -> str:
    return "" if x is None else f"{x:.17g}"


def sweep_lambda2(A: float, B: float, C: float, p: Params, C_abs: float | None = None,
                  lam2_grid=None, bisect_steps: int = 20) -> Sweep:
    """Scan lam2 over a geometric grid, then bisect the first false -> true flip."""
    if lam2_grid is None:
        lam2_grid = [2.0**k for k in range(13)]
    lam2_grid = sorted(float(x) for x in lam2_grid)
    sw = Sweep()

    def holds(l2: float) -> bool:
        return theorem8_candidate(A, B, C, p.with_(lambda2=l2), C_abs=C_abs).inequality_holds

    for l2 in lam2_grid:
        sw.rows.append(theorem8_candidate(A, B, C, p.with_(lambda2=l2), C_abs=C_abs))
    flags = [r.inequality_holds for r in sw.rows]
    for i in range(1, len(flags)):
        if flags[i - 1] and not flags[i]:
            sw.monotone = False
            sw.violations.append(lam2_grid[i])
    if not any(flags):
        return sw
    first = flags.index(True)
    if first == 0:
        sw.threshold = lam2_grid[0]
        log.info("candidate inequality already holds at the smallest swept lambda2 = %g", lam2_grid[0])
        return sw
    lo, hi = lam2_grid[first - 1], lam2_grid[first]
    for _ in range(bisect_steps):
        mid = 0.5 * (lo + hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    sw.threshold = hi
    return sw
