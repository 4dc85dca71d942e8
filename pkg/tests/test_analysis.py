import io
import json
import math

import numpy as np
import pytest

from nonlocal_calculus.analysis import (
    CSV_COLUMNS,
    c0_constant,
    convergence_sweep,
    convergence_sweeps,
    format_float,
    lq_error,
    rate_fit,
    refinement_change,
    reports_to_csv,
)
from nonlocal_calculus.fields import builtin_field
from nonlocal_calculus.grid import GridFunction


def _grid1d(values, lo=0.0, h=1.0):
    values = np.asarray(values, dtype=float)
    return GridFunction(np.array([lo]), np.array([lo + h * (len(values) - 1)]), values, 1)


def test_lq_error_examples():
    a = _grid1d([1.0, 2.0, 3.0])
    assert lq_error(a, a, 2) == 0.0
    assert lq_error(_grid1d([0, 0, 1]), _grid1d([0, 0, 0]), 2) == pytest.approx(1.0)
    assert lq_error(_grid1d([1, 1, 1, 1], h=0.5), _grid1d([0, 0, 0, 0], h=0.5), 1) == pytest.approx(2.0)
    assert lq_error(_grid1d([0, -3, 1]), _grid1d([0, 0, 0]), math.inf) == 3.0


def test_lq_error_vector_magnitude_and_mismatch():
    lo, hi = np.array([0.0]), np.array([1.0])
    a = GridFunction(lo, hi, np.array([[3.0, 4.0], [0.0, 0.0]]), 2)
    b = GridFunction(lo, hi, np.zeros((2, 2)), 2)
    assert lq_error(a, b, math.inf) == 5.0
    with pytest.raises(ValueError):
        lq_error(a, _grid1d([0, 0, 0]), 2)
    with pytest.raises(ValueError):
        lq_error(a, b, 0.5)


def test_linf_dominates_scaled_l2():
    rng = np.random.default_rng(0)
    a = _grid1d(rng.normal(size=50), h=0.1)
    b = _grid1d(np.zeros(50), h=0.1)
    measure = 50 * 0.1
    assert lq_error(a, b, math.inf) >= measure ** -0.5 * lq_error(a, b, 2)


def test_c0_examples():
    assert c0_constant(2, 1.0) == pytest.approx(math.pi / 3)
    assert c0_constant(1, 0.5) == pytest.approx(0.5)
    assert c0_constant(3, 1.5) == pytest.approx(5 * math.pi / 9)
    for bad in [(1, 1.0), (2, 0.0), (4, 1.0)]:
        with pytest.raises(ValueError):
            c0_constant(*bad)


def test_rate_fit_examples():
    order, log_c = rate_fit([(1, 0.1), (0.5, 0.025), (0.25, 0.00625)])
    assert order == pytest.approx(2.0, abs=1e-13)
    assert math.exp(log_c) == pytest.approx(0.1, rel=1e-13)
    assert rate_fit([(1, 0.3), (0.5, 0.3), (0.1, 0.3)])[0] == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(ValueError):
        rate_fit([(1, 0.1), (0.5, 1e-14)])


def test_linear_sweep_is_exact():
    f = builtin_field("linear", 2, A=[[2, 0], [0, 3]])
    rep = convergence_sweep(f, "div", 2, 1.0, 2, (0.4, 0.2, 0.1), box=(-1, 1), resolution=21)
    assert all(r.error <= 1e-9 for r in rep.rows)
    assert rep.fitted_order is None and rep.exact
    assert rep.to_dict()["fitted_order"] == "exact"


def test_gaussian_sweep_order_and_bound():
    f = builtin_field("gaussian", 1)
    rep = convergence_sweep(f, "grad", 1, 0.5, 2, (0.4, 0.2, 0.1, 0.05))
    assert 1.9 <= rep.fitted_order <= 2.1
    assert rep.bound_holds() and rep.max_ratio <= 1.0
    assert rep.c0 == pytest.approx(0.5)
    d = json.loads(rep.to_json())
    assert d["quadrature"] == {"radial_order": 8, "angular_order": 1}
    assert d["convention"].startswith("lq-sum")


def test_sweep_input_validation():
    f = builtin_field("gaussian", 1)
    with pytest.raises(ValueError):
        convergence_sweep(f, "grad", 1, 0.5, 2, (0.1, 0.2, 0.4))
    with pytest.raises(ValueError):
        convergence_sweep(f, "grad", 1, 0.5, 2, (0.4, 0.2))
    with pytest.raises(ValueError):
        convergence_sweep(f, "grad", 1, 0.5, 2, (0.4, 0.2, 0.1), box=(-7, 7))
    with pytest.raises(ValueError):
        convergence_sweep(f, "grad", 2, 1.0, 2, (0.4, 0.2, 0.1))


def test_csv_report_format():
    f = builtin_field("gaussian", 1)
    reps = convergence_sweeps(f, "grad", 1, 0.5, [1, math.inf], (0.4, 0.2, 0.1), resolution=501)
    text = reports_to_csv(reps)
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 6
    assert lines[-1].split(",")[1] == "inf"
    row = lines[1].split(",")
    assert float(row[0]) == 0.4 and row[0] == format_float(0.4)


def test_grid_refinement_is_small():
    f = builtin_field("gaussian", 1)
    assert refinement_change(f, "grad", 1, 0.5, 2, 0.05) < 0.02
