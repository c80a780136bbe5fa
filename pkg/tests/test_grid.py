import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bikdv.grid import (
    Field,
    GridMismatch,
    InvalidDimension,
    InvalidSize,
    apply_bilaplacian,
    infer_grid,
    inner_product_j,
    integrate,
    make_grid,
    norm_j,
    read_field_csv,
    solve_shifted_bilaplacian,
    write_field_csv,
)

from .conftest import smooth_random


def test_line_grid_of_eight_on_pi():
    g = make_grid("line", 8, math.pi, 1)
    assert g.spacing == pytest.approx(math.pi / 4, rel=1e-15)
    assert np.allclose(g.weights, math.pi / 4, rtol=1e-15)
    assert g.weights.sum() == pytest.approx(2 * math.pi, rel=1e-15)
    assert np.all(np.diff(g.nodes) > 0)


@pytest.mark.parametrize("kind,dim", [("radial", 9), ("radial", 1), ("line", 3), ("radial", 0)])
def test_bad_dimension(kind, dim):
    with pytest.raises(InvalidDimension):
        make_grid(kind, 64, 10.0, dim)


@pytest.mark.parametrize("n,extent", [(7, 1.0), (64, 0.0), (64, -2.0), (12.5, 1.0)])
def test_bad_size(n, extent):
    with pytest.raises(InvalidSize):
        make_grid("line", n, extent, 1)


def test_unknown_kind():
    with pytest.raises(ValueError):
        make_grid("square", 64, 1.0)


@pytest.mark.parametrize("dim", range(2, 8))
def test_radial_weight_sum_is_ball_volume(dim):
    g = make_grid("radial", 1024, 30.0, dim)
    vol = 2 * math.pi ** (dim / 2) / math.gamma(dim / 2) * 30.0**dim / dim
    assert g.weights.sum() == pytest.approx(vol, rel=1e-10)
    assert np.all(g.weights > 0)
    assert g.nodes[0] == pytest.approx(30.0 / 1024 / 2)
    assert np.allclose(np.diff(g.nodes), 30.0 / 1024)


def test_radial_3d_sum_matches_four_thirds_pi_r_cubed():
    g = make_grid("radial", 1024, 30.0, 3)
    assert abs(g.weights.sum() / (4 * math.pi * 30.0**3 / 3) - 1) < 1e-10


def test_integrate_sin_squared_over_period():
    g = make_grid("line", 64, math.pi)
    assert integrate(g, Field.from_function(g, lambda x: np.sin(x) ** 2)) == pytest.approx(math.pi, abs=1e-12)


def test_integrate_one_on_line():
    g = make_grid("line", 100, 5.0)
    assert integrate(g, Field(g, np.ones(100))) == pytest.approx(10.0, rel=1e-14)


def test_radial_gaussian_integral():
    g = make_grid("radial", 2048, 30.0, 3)
    val = integrate(g, Field.from_function(g, lambda r: np.exp(-r * r)))
    assert abs(val - math.pi**1.5) < 1e-6


@pytest.mark.parametrize("m", [1, 2, 5, 11])
def test_trig_polynomials_integrate_exactly(m):
    g = make_grid("line", 64, 3.0)
    x = g.nodes
    k = math.pi * m / 3.0
    f = np.cos(k * x) ** 2 + 0.5 * np.sin(k * x)
    assert g.integrate(f) == pytest.approx(3.0, rel=1e-12)


def test_bilaplacian_of_sine_mode():
    g = make_grid("line", 64, math.pi)
    f = Field.from_function(g, lambda x: np.sin(3 * x))
    out = apply_bilaplacian(g, f)
    # transform roundoff is amplified by the largest symbol k^4
    kmax = math.pi * (g.n // 2) / g.extent
    assert np.max(np.abs(out.values - 81 * f.values)) < 10 * np.finfo(float).eps * kmax**4


def test_bilaplacian_of_constant_vanishes():
    g = make_grid("line", 128, 7.0)
    out = apply_bilaplacian(g, Field(g, np.full(128, 3.25)))
    assert np.max(np.abs(out.values)) < 1e-12


def test_radial_laplacian_of_r_squared_away_from_edges():
    g = make_grid("radial", 512, 10.0, 3)
    r = g.nodes
    h = g.spacing
    lap = g.laplacian(r * r)
    inner = slice(0, g.n - 1)
    # midpoint shell volumes leave an exact h^2 / (2 r^2) defect
    assert np.max(np.abs(lap[inner] - 6.0 - h * h / (2 * r[inner] ** 2))) < 1e-9
    bil = g.laplacian(lap)
    far = slice(20, g.n - 12)
    assert np.all(np.abs(bil[far]) <= 1.01 * h * h / r[far] ** 4 + 1e-6)
    assert np.max(np.abs(bil[g.n // 2 : g.n - 12])) < 1e-6


def test_shifted_solve_on_sine():
    g = make_grid("line", 64, math.pi)
    f = Field.from_function(g, lambda x: np.sin(2 * x))
    w = solve_shifted_bilaplacian(g, f, 9.0)
    assert np.max(np.abs(w.values - f.values / 25)) < 1e-14


def test_shifted_solve_on_constant():
    g = make_grid("line", 64, 4.0)
    w = solve_shifted_bilaplacian(g, Field(g, np.full(64, 2.0)), 4.0)
    assert np.allclose(w.values, 0.5, rtol=0, atol=1e-15)


@pytest.mark.parametrize("lam", [0.0, -1.0])
def test_shifted_solve_rejects_nonpositive_shift(lam):
    g = make_grid("line", 64, 4.0)
    with pytest.raises(ValueError):
        solve_shifted_bilaplacian(g, Field(g, np.ones(64)), lam)


@pytest.mark.parametrize("grid_name", ["small_line", "small_radial"])
@pytest.mark.parametrize("lam", [0.25, 1.0, 16.0])
def test_shifted_solve_roundtrip(grid_name, lam, request, rng):
    g = request.getfixturevalue(grid_name)
    f = smooth_random(g, rng) + 0.01 * rng.standard_normal(g.n) * (g.nodes < 0.8 * g.extent)
    w = g.solve_shifted(f, lam)
    back = g.bilaplacian(w) + lam * w
    assert np.max(np.abs(back - f)) <= 1e-10 * np.max(np.abs(f))


@pytest.mark.parametrize("grid_name", ["small_line", "small_radial"])
def test_bilaplacian_is_symmetric(grid_name, request, rng):
    g = request.getfixturevalue(grid_name)
    f = smooth_random(g, rng)
    h = smooth_random(g, rng)
    a = g.integrate(g.bilaplacian(f) * h)
    b = g.integrate(f * g.bilaplacian(h))
    assert abs(a - b) <= 1e-10 * max(abs(a), abs(b))


def test_inner_product_values_on_period():
    g = make_grid("line", 64, math.pi)
    s1 = Field.from_function(g, np.sin)
    s2 = Field.from_function(g, lambda x: np.sin(2 * x))
    assert inner_product_j(g, s1, s1, 2.0) == pytest.approx(3 * math.pi, rel=1e-12)
    assert abs(inner_product_j(g, s1, s2, 2.0)) < 1e-12
    assert norm_j(g, s1, 2.0) == pytest.approx(math.sqrt(3 * math.pi), rel=1e-12)


def test_inner_product_of_constants():
    g = make_grid("line", 64, 5.0)
    c = Field(g, np.full(64, 1.5))
    assert inner_product_j(g, c, c, 3.0) == pytest.approx(30 * 1.5**2, rel=1e-12)


def test_inner_product_rejects_nonpositive_lambda():
    g = make_grid("line", 64, 5.0)
    c = Field(g, np.ones(64))
    with pytest.raises(ValueError):
        inner_product_j(g, c, c, 0.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), lam=st.floats(0.05, 50.0), radial=st.booleans())
def test_inner_product_dominates_l2(seed, lam, radial):
    g = make_grid("radial", 128, 10.0, 3) if radial else make_grid("line", 128, 10.0)
    f = np.random.default_rng(seed).standard_normal(g.n)
    l2 = g.integrate(f * f)
    assert g.inner(f, f, lam) >= lam * l2 * (1 - 1e-12) > 0


def test_field_checks():
    g = make_grid("line", 16, 1.0)
    h = make_grid("line", 16, 2.0)
    with pytest.raises(ValueError):
        Field(g, np.full(16, np.nan))
    with pytest.raises(GridMismatch):
        Field(g, np.ones(15))
    with pytest.raises(GridMismatch):
        Field(g, np.ones(16)) + Field(h, np.ones(16))
    with pytest.raises(GridMismatch):
        integrate(g, Field(h, np.ones(16)))
    twice = Field(g, np.ones(16)) * 2.0 - Field(g, np.ones(16))
    assert np.all(twice.values == 1.0)
    assert abs(-twice).sup == 1.0


def test_fields_on_equal_but_distinct_grids_combine():
    a = make_grid("line", 16, 1.0)
    b = make_grid("line", 16, 1.0)
    out = Field(a, np.ones(16)) + Field(b, np.ones(16))
    assert np.all(out.values == 2.0)


@pytest.mark.parametrize("kind,dim", [("line", 1), ("radial", 3), ("radial", 5)])
def test_csv_roundtrip_is_exact(tmp_path, kind, dim, rng):
    g = make_grid(kind, 64, 7.5, dim)
    f = Field(g, rng.standard_normal(64))
    path = tmp_path / "f.csv"
    write_field_csv(path, f)
    assert path.read_text().splitlines()[0] == "coord,value"
    back = read_field_csv(path, g)
    assert np.array_equal(back.values, f.values)
    guessed = read_field_csv(path) if dim in (1, 3) else Field(infer_grid(g.nodes, dim), back.values)
    assert guessed.grid.same_as(g)


def test_csv_rejects_other_grid(tmp_path):
    g = make_grid("line", 64, 7.5)
    write_field_csv(tmp_path / "f.csv", Field(g, np.zeros(64)))
    with pytest.raises(GridMismatch):
        read_field_csv(tmp_path / "f.csv", make_grid("line", 64, 8.0))
