import math

import numpy as np
import pytest
import sympy as sp

from nonlocal_calculus.fields import (
    BUILTIN_FIELDS,
    builtin_field,
    local_curl,
    local_divergence,
    local_gradient,
    multi_indices,
    sobolev_norm,
    sobolev_norms,
)
from nonlocal_calculus.grid import GridFunction, sample_to_grid

FIELD_CASES = [
    ("constant", 2, None, {"c": 3.0}),
    ("linear", 3, None, {"A": np.arange(9.0).reshape(3, 3) - 4, "b": [1.0, 0.0, -2.0]}),
    ("quadratic", 2, None, {"Q": [[1.0, 0.5], [0.5, -2.0]], "A": [0.3, -0.1], "b": 0.7}),
    ("gaussian", 1, 1, {}),
    ("gaussian", 2, 2, {"width": 0.8}),
    ("gaussian", 3, 3, {}),
    ("bump", 1, 1, {"radius": 1.5}),
    ("bump", 2, 2, {"radius": 2.0}),
    ("bump", 3, 1, {"radius": 1.0}),
    ("trig-bump", 2, 2, {}),
    ("trig-bump", 3, 3, {"radius": 1.5}),
]


def _richardson(f, x, axis, alpha_prev, h=1e-4):
    """Central difference of partial ``alpha_prev`` along ``axis``, Richardson-extrapolated."""
    e = np.zeros(x.shape[1])
    e[axis] = 1.0

    def d(step):
        return (f.partial(alpha_prev, x + step * e) - f.partial(alpha_prev, x - step * e)) / (2 * step)

    return (4 * d(h / 2) - d(h)) / 3


@pytest.mark.parametrize("name,n,m,params", FIELD_CASES)
def test_partials_match_finite_differences(name, n, m, params):
    f = builtin_field(name, n, m, **params)
    rng = np.random.default_rng(42)
    if f.support_box is not None:
        lo, hi = f.support_box
    else:
        lo, hi = -np.ones(n), np.ones(n)
    x = lo + (hi - lo) * rng.random((100, n))
    for alpha in multi_indices(n, 3, min_order=1):
        axis = max(i for i, a in enumerate(alpha) if a)
        prev = list(alpha)
        prev[axis] -= 1
        fd = _richardson(f, x, axis, tuple(prev))
        exact = f.partial(alpha, x)
        scale = max(1.0, float(np.max(np.abs(exact))))
        assert np.max(np.abs(fd - exact)) <= 1e-6 * scale, alpha


@pytest.mark.parametrize("name,n,m,params", FIELD_CASES)
def test_partial_zero_is_eval(name, n, m, params):
    f = builtin_field(name, n, m, **params)
    x = np.random.default_rng(1).normal(size=(10, n))
    assert np.array_equal(f.partial((0,) * n, x), f(x))


def test_builtin_examples():
    c = builtin_field("constant", 2, c=3.0)
    x = np.random.default_rng(0).normal(size=(5, 2))
    assert np.all(c(x) == 3.0)
    assert np.all(c.partial((1, 0), x) == 0.0)
    lin = builtin_field("linear", 2, A=[[2, 0], [0, 3]])
    assert lin.components == 2
    assert np.allclose(lin([0.3, 0.7]), [0.6, 2.1])
    assert np.allclose(lin.partial((1, 0), x)[:, 0], 2.0)
    assert np.all(lin.partial((1, 1), x) == 0.0)
    g = builtin_field("gaussian", 1)
    assert g(0.5) == pytest.approx(math.exp(-0.25), rel=1e-15)
    assert g.partial((1,), 0.5) == pytest.approx(-math.exp(-0.25), rel=1e-15)


def test_unknown_field_rejected():
    with pytest.raises(ValueError):
        builtin_field("sawtooth", 1)
    assert set(BUILTIN_FIELDS) == {"constant", "linear", "quadratic", "gaussian", "bump", "trig-bump"}


def test_bump_is_compactly_supported():
    f = builtin_field("bump", 2, radius=1.0)
    pts = np.array([[1.0, 0.0], [0.8, 0.7], [2.0, 2.0]])
    for alpha in multi_indices(2, 3):
        assert np.all(f.partial(alpha, pts) == 0.0)
    assert f([0.0, 0.0]) == pytest.approx(math.exp(-1.0))


def test_local_operator_examples():
    lin = builtin_field("linear", 2, A=[[2, 0], [0, 3]])
    assert local_divergence(lin, [0.4, -1.2]) == pytest.approx(5.0)
    assert local_gradient(builtin_field("gaussian", 1), [0.0]) == pytest.approx(0.0)
    swirl = builtin_field("linear", 3, A=[[0, -1, 0], [1, 0, 0], [0, 0, 0]])
    pts = np.random.default_rng(3).normal(size=(7, 3))
    assert np.allclose(local_curl(swirl, pts), [0.0, 0.0, 2.0])
    with pytest.raises(ValueError):
        local_curl(builtin_field("gaussian", 2, 2), [0.0, 0.0])
    with pytest.raises(ValueError):
        local_gradient(lin, [0.0, 0.0])


def _gaussian_w32_closed_form():
    x = sp.symbols("x", real=True)
    u = sp.exp(-x**2)
    total = sum(sp.integrate(sp.diff(u, x, k) ** 2, (x, -sp.oo, sp.oo)) for k in range(4))
    return float(sp.sqrt(total))


def test_gaussian_sobolev_norm_closed_form():
    exact = _gaussian_w32_closed_form()
    assert sobolev_norm(builtin_field("gaussian", 1), 2) == pytest.approx(exact, rel=1e-8)


def test_sobolev_examples():
    c = builtin_field("constant", 2, c=3.0)
    assert sobolev_norm(c, math.inf, box=(0, 1), resolution=11) == 3.0
    lin = builtin_field("linear", 2, A=[[2, 0], [0, 3]])
    assert sobolev_norm(lin, math.inf, box=(-1, 1), resolution=21) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        sobolev_norm(c, 0.5, box=(0, 1))


def test_sobolev_monotone_in_order_and_homogeneous():
    f = builtin_field("gaussian", 2, 2)
    for q in (1.0, 2.0, math.inf):
        n0, n1, n3 = (sobolev_norm(f, q, order=k, resolution=121) for k in (0, 1, 3))
        assert n0 <= n1 <= n3
    f2 = builtin_field("gaussian", 2, 2)
    scaled = type(f2)(2, f2.profile, f2.centers, amplitudes=-2.5 * f2.amplitudes, support_box=np.column_stack(f2.support_box))
    for q in (1.0, 2.0, math.inf):
        assert sobolev_norm(scaled, q, resolution=121) == pytest.approx(2.5 * sobolev_norm(f2, q, resolution=121), rel=1e-13)


def test_bump_norm_unchanged_by_larger_box():
    f = builtin_field("bump", 1, radius=1.0, margin=0.5)
    lo, hi = f.support_box
    base = sobolev_norms(f, [1, 2, math.inf], resolution=301)
    h = (hi[0] - lo[0]) / 300
    big = sobolev_norms(f, [1, 2, math.inf], box=(lo[0] - 40 * h, hi[0] + 40 * h), resolution=381)
    for q in base:
        assert big[q] == pytest.approx(base[q], rel=1e-13)


def test_sample_to_grid_examples():
    g = sample_to_grid(builtin_field("constant", 2, c=3.0), (0, 1), 4)
    assert np.all(g.values == 3.0)
    lin = sample_to_grid(builtin_field("linear", 1, A=[[2.0]]), (0, 1), 3)
    assert np.allclose(lin.values, [0, 1, 2])
    gau = sample_to_grid(builtin_field("gaussian", 1), (-6, 6), 1201)
    assert gau.values[600] == 1.0
    assert gau.h == pytest.approx(0.01)


def test_grid_csv_round_trip(tmp_path):
    g = sample_to_grid(builtin_field("gaussian", 2, 2), [(-1, 1), (0, 2)], (5, 4))
    path = tmp_path / "g.csv"
    g.to_csv(path)
    back = GridFunction.from_csv(path)
    assert back.same_grid(g) and back.components == 2
    assert np.array_equal(back.values, g.values)
