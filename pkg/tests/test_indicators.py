import numpy as np
import pytest

from fdppr.errors import ConfigError, NestingError, NonPositiveValue
from fdppr.fe import cell_l2_norm, interpolate
from fdppr.grid import FdGrid, build_interpolant_mesh
from fdppr.indicators import (DivisionByZeroError, ExactReference, ReferenceSolution,
                              convergence_rates, effectivity, fitted_slope, poisson_indicator,
                              static_measures, summarize, true_error_norm)
from fdppr.ppr import recover_nodal_gradients_direct, recovered_minus_discrete

from oracles import gauss_tensor

PI = np.pi


def make_mesh(dim, n, r):
    return build_interpolant_mesh(FdGrid(dim, n - 1), r)


def sample(mesh, f):
    return f(*np.meshgrid(*[mesh.axis_nodes(a) for a in range(mesh.dim)], indexing="ij"))


def wavy(x, y):
    return np.sin(3 * x) * np.exp(y) + x * x * y


def wavy_grad(x, y):
    return 3 * np.cos(3 * x) * np.exp(y) + 2 * x * y, np.sin(3 * x) * np.exp(y) + x * x


def test_pythagorean_aggregation(rng):
    mesh = make_mesh(2, 9, 3)
    report = poisson_indicator(interpolate(rng.normal(size=mesh.nodes_per_axis), mesh))
    assert report.global_spatial ** 2 == pytest.approx(np.sum(report.per_cell["spatial"] ** 2), rel=1e-12)
    assert report.global_temporal is None
    assert report.global_value == report.global_spatial


def test_two_cell_hand_quadrature():
    # three nodes on [0, 1]: every patch is the whole line, so G_h u_h interpolates the
    # derivative of the quadratic through the data at the three nodes
    u = np.array([0.2, -0.7, 1.3])
    mesh = make_mesh(1, 2, 1)
    report = poisson_indicator(interpolate(u, mesh))
    c = np.polyfit([0.0, 0.5, 1.0], u, 2)
    g = np.polyval(np.polyder(c), [0.0, 0.5, 1.0])
    cells = []
    for k in range(2):
        a = 0.5 * k
        slope = (u[k + 1] - u[k]) / 0.5
        rec = lambda x: g[k] + (g[k + 1] - g[k]) * (x - a) / 0.5
        cells.append(np.sqrt(gauss_tensor(lambda x: (rec(x) - slope) ** 2, [(a, a + 0.5)])))
    assert report.per_cell["spatial"] == pytest.approx(cells, rel=1e-12)
    assert report.global_spatial == pytest.approx(np.hypot(*cells), rel=1e-12)


def test_fast_and_pointwise_indicators_agree():
    mesh = make_mesh(2, 6, 3)
    field = interpolate(sample(mesh, wavy), mesh)
    rec = recover_nodal_gradients_direct(field)
    fast = poisson_indicator(field)
    slow = poisson_indicator(field, rec)
    assert np.allclose(fast.per_cell["spatial"], slow.per_cell["spatial"], rtol=1e-9, atol=1e-14)
    integrand = recovered_minus_discrete(rec, field)
    loop = np.array([[cell_l2_norm(integrand, mesh, (i, j)) for j in range(2)] for i in range(2)])
    assert np.allclose(fast.per_cell["spatial"], loop, rtol=1e-9)


def test_linear_field_has_zero_indicator():
    mesh = make_mesh(2, 5, 1)
    report = poisson_indicator(interpolate(sample(mesh, lambda x, y: 2 * x - y + 1), mesh))
    assert report.global_value <= 1e-12


def test_exact_polynomial_has_zero_error():
    mesh = make_mesh(2, 6, 3)
    p = lambda x, y: x ** 3 * y - 2 * y ** 2
    grad = lambda x, y: (3 * x ** 2 * y, x ** 3 - 4 * y)
    rep = true_error_norm(interpolate(sample(mesh, p), mesh), ReferenceSolution.exact(grad))
    assert rep.true_error <= 1e-12 and rep.recovered_error <= 1e-11


def test_fine_reference_matches_exact_for_polynomial():
    mesh, fine = make_mesh(2, 6, 3), make_mesh(2, 24, 3)
    p = lambda x, y: x ** 3 * y ** 2 - x * y ** 3
    grad = lambda x, y: (3 * x ** 2 * y ** 2 - y ** 3, 2 * x ** 3 * y - 3 * x * y ** 2)
    u = sample(mesh, lambda x, y: p(x, y) + 0.01 * np.sin(5 * x))
    a = summarize(static_measures(mesh, u, reference=ExactReference(grad)), 2, "H1")
    b = summarize(static_measures(mesh, u, reference=ReferenceSolution.fine(sample(fine, p), fine)), 2, "H1")
    for key in ("eta", "error", "rec_error"):
        assert a["total"][key] == pytest.approx(b["total"][key], rel=1e-10)


def test_nesting_error():
    coarse, fine = make_mesh(2, 4, 1), make_mesh(2, 6, 1)
    with pytest.raises(NestingError):
        static_measures(coarse, np.zeros(coarse.nodes_per_axis),
                        reference=ReferenceSolution.fine(np.zeros(fine.nodes_per_axis), fine))


def test_two_sided_bound(rng):
    for n in (8, 16, 32):
        mesh = make_mesh(2, n, 1)
        u = sample(mesh, wavy) + 1e-3 * rng.normal(size=mesh.nodes_per_axis)
        s = summarize(static_measures(mesh, u, reference=ExactReference(wavy_grad)), 2, "H1")["total"]
        assert abs(s["eta"] - s["error"]) <= s["rec_error"] * (1 + 1e-12)


def test_effectivity_examples():
    assert effectivity(0.3, 0.3) == 1.0
    assert effectivity(2.490e-3, 2.547e-3) == pytest.approx(0.978, abs=5e-4)
    assert effectivity(0.0, 1.0) == 0.0
    with pytest.raises(DivisionByZeroError):
        effectivity(1.0, 0.0)
    with pytest.raises(ZeroDivisionError):
        effectivity(0.0, 0.0)


def test_rates_examples():
    assert convergence_rates([(1 / 16, 1.012e-2), (1 / 32, 4.996e-3)])[0] == pytest.approx(1.02, abs=5e-3)
    assert convergence_rates([(0.5, 3.0), (0.25, 3.0), (0.125, 3.0)]) == [0.0, 0.0]
    assert convergence_rates([(0.5, 8.0), (0.25, 4.0), (0.125, 2.0)]) == pytest.approx([1.0, 1.0])
    assert convergence_rates([(0.5, 1.0)]) == []
    assert fitted_slope([0.5, 0.25, 0.125], [4.0, 1.0, 0.25]) == pytest.approx(2.0)
    with pytest.raises(NonPositiveValue):
        convergence_rates([(0.5, 1.0), (0.25, 0.0)])
    with pytest.raises(NonPositiveValue):
        fitted_slope([0.5, 0.25], [1.0, -1.0])
    with pytest.raises(ConfigError):
        convergence_rates([(0.25, 1.0), (0.5, 0.5)])


def test_quadrature_order_insensitive_for_polynomials():
    mesh = make_mesh(2, 6, 3)
    p = lambda x, y: x ** 4 * y ** 3 - y ** 4
    grad = lambda x, y: (4 * x ** 3 * y ** 3, 3 * x ** 4 * y ** 2 - 4 * y ** 3)
    u = sample(mesh, p)
    a, b = (summarize(static_measures(mesh, u, q, ExactReference(grad)), 2, "H1")["total"] for q in (5, 6))
    for key in ("eta", "error", "rec_error"):
        assert a[key] == pytest.approx(b[key], rel=1e-8)


def test_quadrature_order_insensitive_for_smooth_run():
    u = lambda x, y: np.sin(8 * PI * x) * np.sin(8 * PI * y)
    grad = lambda x, y: (8 * PI * np.cos(8 * PI * x) * np.sin(8 * PI * y),
                         8 * PI * np.sin(8 * PI * x) * np.cos(8 * PI * y))
    mesh = make_mesh(2, 96, 1)
    a, b = (summarize(static_measures(mesh, sample(mesh, u), q, ExactReference(grad)), 2, "H1")["total"]
            for q in (3, 4))
    for key in ("eta", "error", "rec_error"):
        assert a[key] == pytest.approx(b[key], rel=1e-4)
