"""Property-based checks over random kernels and fields."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_calculus.analysis import rate_fit
from nonlocal_calculus.fields import PolynomialField, local_operator, multi_indices
from nonlocal_calculus.kernel import kernel_la_norm_exact, kernel_new, second_moment_exact
from nonlocal_calculus.operators import evaluate_points, nonlocal_operator
from nonlocal_calculus.quadrature import build_rule, la_norm_numeric, moment_check

dims = st.sampled_from([1, 2, 3])
fractions = st.floats(0.05, 0.95)
deltas = st.floats(0.01, 3.0)


@settings(max_examples=40, deadline=None)
@given(n=dims, t=fractions, delta=deltas)
def test_second_moment_is_one(n, t, delta):
    k = kernel_new(n, t * n, delta)
    assert abs(second_moment_exact(k) - 1.0) < 1e-14
    rule = build_rule(n, k.p, delta)
    for j in range(1, n + 1):
        e = tuple(int(i == j - 1) for i in range(n))
        assert abs(moment_check(rule, k, e, j) - 1.0) < 1e-10
        assert abs(moment_check(rule, k, (0,) * n, j)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(n=dims, t=fractions, delta=deltas, a=st.floats(1.0, 3.0))
def test_la_norm_identity(n, t, delta, a):
    k = kernel_new(n, t * n, delta)
    if a * k.p >= n:
        return
    exact = kernel_la_norm_exact(k, a)
    assert math.isclose(la_norm_numeric(k, a), exact, rel_tol=1e-9)


@st.composite
def quadratic_fields(draw, n, m):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    terms = [{alpha: float(rng.normal()) for alpha in multi_indices(n, 2)} for _ in range(m)]
    return PolynomialField(n, terms)


@settings(max_examples=25, deadline=None)
@given(data=st.data(), n=dims, t=fractions, delta=st.floats(0.05, 1.0))
def test_quadratic_exactness(data, n, t, delta):
    kind = data.draw(st.sampled_from(["gradient", "divergence"] + (["curl"] if n == 3 else [])))
    m = 1 if kind == "gradient" else n
    f = data.draw(quadratic_fields(n, m))
    spec = nonlocal_operator(kind, n, t * n, delta)
    x = np.random.default_rng(0).uniform(-2, 2, size=(5, n))
    nl = np.asarray(evaluate_points(spec, f, x))
    loc = np.asarray(local_operator(kind, f, x))
    assert np.max(np.abs(nl.reshape(loc.shape) - loc)) <= 1e-9 * max(1.0, np.max(np.abs(loc)))


@settings(max_examples=50, deadline=None)
@given(order=st.floats(0.5, 4.0), c=st.floats(1e-3, 1e3), base=st.floats(0.05, 1.0))
def test_rate_fit_recovers_power_law(order, c, base):
    ds = [base / 2**k for k in range(4)]
    rows = [(d, c * d**order) for d in ds]
    if min(e for _, e in rows) < 1e-12:
        return
    got, log_c = rate_fit(rows)
    assert abs(got - order) < 1e-10
    assert abs(log_c - math.log(c)) < 1e-9
