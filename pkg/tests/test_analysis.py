import math

import numpy as np
import pytest

from bikdv import make_grid
from bikdv.analysis import (
    LOCAL_MIN,
    MARGINAL,
    SADDLE,
    InvalidProfile,
    candidate_root,
    classify_semitrivial,
    j2_derivative,
    lambda_threshold,
    random_field,
    rayleigh_quotient,
    sweep_lambda2,
    tangent_project,
    theorem8_candidate,
    unit_moments,
)
from bikdv.grid import Field
from bikdv.variational import Params, State, hessian_form, psi_derivative


def test_constant_profile_gives_lambda_over_c():
    g = make_grid("line", 128, 10.0)
    lam_c, h = lambda_threshold(g, 2.0, Field(g, np.full(128, 4.0)))
    assert abs(lam_c - 0.5) < 1e-10
    assert np.ptp(h.values) < 1e-12 * np.max(np.abs(h.values))


def test_lambda_rejects_bad_profiles():
    g = make_grid("line", 64, 10.0)
    with pytest.raises(InvalidProfile):
        lambda_threshold(g, 1.0, Field(g, -np.ones(64)))
    with pytest.raises(ValueError):
        lambda_threshold(g, 0.0, Field(g, np.ones(64)))


@pytest.mark.parametrize("which", ["line", "radial"])
def test_minimizer_satisfies_its_quotient(which, request):
    lam_c, h = request.getfixturevalue(f"lam_{which}")
    V = request.getfixturevalue(f"v2_{which}")[0]
    g = V.grid
    hv = h.values
    defect = g.inner(hv, hv, 1.0) - lam_c * g.integrate(V.values * hv * hv)
    assert abs(defect) <= 1e-9 * g.inner(hv, hv, 1.0)
    # for lam1 = lam2 the profile itself nearly attains the infimum (value 1/2)
    assert lam_c == pytest.approx(0.5, abs=1e-3)


def test_random_quotients_stay_above_lambda(line_grid, v2_line, lam_line):
    V, _ = v2_line
    lam_c, h = lam_line
    rng = np.random.default_rng(7)
    worst = math.inf
    for _ in range(500):
        phi = random_field(line_grid, rng) + rng.normal() * h.values
        if line_grid.integrate(V.values * phi * phi) <= 0:
            continue
        worst = min(worst, rayleigh_quotient(line_grid, 1.0, V, phi))
    assert worst >= lam_c * (1 - 1e-8)


@pytest.mark.parametrize("factor,verdict", [(2.0, SADDLE), (0.5, LOCAL_MIN), (1.1, SADDLE), (0.9, LOCAL_MIN)])
def test_classification_across_lambda(line_grid, v2_line, lam_line, factor, verdict):
    V, _ = v2_line
    lam_c, h = lam_line
    p = Params(1.0, 1.0, factor * lam_c)
    c = classify_semitrivial(p, V, lam_c, h, n_samples=200, seed=3)
    assert c.verdict == verdict
    assert c.n_samples >= 200
    weight = line_grid.integrate(V.values * h.values**2)
    assert abs(c.witness_value - (lam_c - p.beta) * weight) <= 1e-8 * abs(lam_c * weight)
    if verdict == SADDLE:
        assert c.witness_value < 0
    else:
        assert c.min_sample > 0
    assert c.max_tangency_defect <= 1e-10


def test_marginal_at_lambda(line_grid, v2_line, lam_line):
    V, _ = v2_line
    lam_c, h = lam_line
    c = classify_semitrivial(Params(1.0, 1.0, lam_c), V, lam_c, h, n_samples=20)
    assert c.verdict == MARGINAL


def test_tangent_directions(line_grid, v2_line):
    V, _ = v2_line
    p = Params(1.0, 1.0, 0.4)
    rng = np.random.default_rng(11)
    v2 = State(line_grid, np.zeros(line_grid.n), V.values)
    for _ in range(20):
        h1 = random_field(line_grid, rng)
        h2 = tangent_project(p, V, random_field(line_grid, rng))
        assert abs(j2_derivative(p, V, h2)) <= 1e-10 * math.sqrt(line_grid.inner(h2, h2, 1.0))
        h = State(line_grid, h1, h2)
        nrm = math.sqrt(line_grid.inner(h1, h1, 1.0) + line_grid.inner(h2, h2, 1.0))
        assert abs(psi_derivative(p, v2, h) - j2_derivative(p, V, h2)) <= 1e-10 * nrm
        assert abs(psi_derivative(p, v2, State(line_grid, h1, np.zeros(line_grid.n)))) <= 1e-10 * nrm
        # second variation along a tangent v-direction is positive
        only_v = State(line_grid, np.zeros(line_grid.n), h2)
        form = hessian_form(p, v2, only_v)
        expect = line_grid.inner(h2, h2, 1.0) - line_grid.integrate(np.abs(V.values) * h2 * h2)
        assert form == pytest.approx(expect, rel=1e-12)
        assert form > 0


def test_j2_derivative_at_profile_is_minus_norm(v2_line):
    V, _ = v2_line
    g = V.grid
    p = Params(1.0, 1.0, 0.0)
    n2 = g.inner(V.values, V.values, 1.0)
    assert j2_derivative(p, V, V.values) == pytest.approx(-n2, rel=1e-8)


def test_candidate_root_textbook_case():
    t = candidate_root(1.0, 1.0, 2.0, Params(1.0, 1.0, 1.0))
    assert t == pytest.approx(math.sqrt(6) - 2, rel=1e-14)
    t2 = theorem8_candidate(1.0, 1.0, 2.0, Params(1.0, 1.0, 1.0)).t_star
    assert t2 == t


def test_candidate_without_positive_root():
    # constant term C + (lam1 - lam2) A / lam2 <= 0
    rep = theorem8_candidate(10.0, 1.0, 1.0, Params(0.1, 1.0, 0.5))
    assert rep.t_star is None and rep.phi_w is None and not rep.inequality_holds
    with pytest.raises(ValueError):
        candidate_root(1.0, 0.0, 1.0, Params(1, 1, 1))


def test_candidate_matches_grid_and_lies_on_manifold(line_grid, v2_line):
    V, _ = v2_line
    m = unit_moments(V)
    p = Params(4.0, 3.0, 0.3)
    rep = theorem8_candidate(m["A"], m["B"], m["C"], p, V=V, C_abs=m["C_abs"])
    assert rep.grid_rel_diff < 1e-6
    assert abs(rep.psi_w_grid) < 1e-9
    assert rep.phi_v2 == pytest.approx(3.0**2.75 * m["C_abs"] / 12, rel=1e-14)
    if rep.inequality_holds:
        assert rep.phi_w < rep.phi_v2


def test_sweep_flips_once_and_writes_csv(tmp_path, v2_line):
    V, _ = v2_line
    m = unit_moments(V)
    lam_c, _ = lambda_threshold(V.grid, 4.0, V)
    p = Params(4.0, 1.0, 0.2 * lam_c)
    sw = sweep_lambda2(m["A"], m["B"], m["C"], p, m["C_abs"])
    flags = [r.inequality_holds for r in sw.rows]
    assert sw.monotone and not sw.violations
    assert not flags[0] and flags[-1]
    assert 1.0 < sw.threshold < 2.0
    assert not theorem8_candidate(m["A"], m["B"], m["C"], p.with_(lambda2=sw.threshold * 0.999), C_abs=m["C_abs"]).inequality_holds
    assert theorem8_candidate(m["A"], m["B"], m["C"], p.with_(lambda2=sw.threshold), C_abs=m["C_abs"]).inequality_holds
    path = tmp_path / "sweep.csv"
    sw.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda2,t_star,phi_w,phi_v2,holds"
    assert len(lines) == 14


def test_sweep_edges(v2_line, lam_line):
    V, _ = v2_line
    m = unit_moments(V)
    # at lam1 = 1 the flip lies below lam2 = 1: the sweep starts already true
    p = Params(1.0, 1.0, 0.2 * lam_line[0])
    sw = sweep_lambda2(m["A"], m["B"], m["C"], p, m["C_abs"])
    assert all(r.inequality_holds for r in sw.rows)
    assert sw.threshold == 1.0
    never = sweep_lambda2(1.0, 1.0, 2.0, Params(1.0, 1.0, 0.0), lam2_grid=[1.0])
    assert never.threshold is None and not never.rows[0].inequality_holds
