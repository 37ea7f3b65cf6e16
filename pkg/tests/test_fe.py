import numpy as np
import pytest

from fdppr.errors import OutOfDomain, ShapeMismatch
from fdppr.fe import (InterpolatedField, LagrangeBasis1D, QuadratureRule, cell_l2_norm, interpolate)
from fdppr.grid import FdGrid, build_interpolant_mesh
from fdppr.indicators import ExactReference, static_measures, summarize

from oracles import rate


def make_mesh(dim, n, r):
    return build_interpolant_mesh(FdGrid(dim, n - 1), r)


def sample(mesh, f):
    axes = [mesh.axis_nodes(a) for a in range(mesh.dim)]
    return f(*np.meshgrid(*axes, indexing="ij"))


@pytest.mark.parametrize("r", [1, 2, 3])
def test_reproduces_tensor_polynomials(r, rng):
    mesh = make_mesh(2, 2 * r, r)
    c = rng.normal(size=(r + 1, r + 1))
    p = lambda x, y: np.polynomial.polynomial.polyval2d(x, y, c)
    field = interpolate(sample(mesh, p), mesh)
    pts = rng.uniform(0, 1, size=(200, 2))
    assert np.abs(field.evaluate(pts) - p(pts[:, 0], pts[:, 1])).max() <= 1e-12 * max(1, np.abs(c).sum())


def test_bilinear_example_and_constants(rng):
    mesh = make_mesh(2, 4, 1)
    field = interpolate(sample(mesh, lambda x, y: x * y), mesh)
    pts = rng.uniform(0, 1, size=(50, 2))
    assert np.allclose(field.evaluate(pts), pts[:, 0] * pts[:, 1], atol=1e-13)
    ones = interpolate(np.full(mesh.nodes_per_axis, 2.5), mesh)
    assert np.allclose(ones.evaluate(pts), 2.5, atol=1e-14)
    assert np.abs(ones.gradient(pts)).max() <= 1e-12


def test_linear_1d_cell():
    mesh = make_mesh(1, 2, 1)
    field = InterpolatedField(mesh, np.array([0.0, 1.0, 1.0]))
    assert field.eval([0.25]) == pytest.approx(0.5)
    assert field.eval_gradient([0.25])[0] == pytest.approx(2.0)


def test_cubic_derivative_at_midpoint():
    mesh = make_mesh(1, 3, 3)
    field = interpolate(mesh.axis_nodes(0) ** 3, mesh)
    assert field.eval_gradient([0.5])[0] == pytest.approx(0.75, abs=1e-12)


def test_values_at_fd_points_are_exact(rng):
    mesh = make_mesh(2, 6, 3)
    vals = rng.normal(size=mesh.nodes_per_axis)
    field = interpolate(vals, mesh)
    X, Y = np.meshgrid(mesh.axis_nodes(0), mesh.axis_nodes(1), indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    assert np.array_equal(field.evaluate(pts), vals.ravel())


def test_shape_and_domain_errors():
    mesh = make_mesh(2, 4, 1)
    with pytest.raises(ShapeMismatch):
        interpolate(np.zeros(7), mesh)
    with pytest.raises(OutOfDomain):
        interpolate(np.zeros(mesh.nodes_per_axis), mesh).eval([1.5, 0.2])


@pytest.mark.parametrize("r", [1, 3])
def test_gradient_matches_finite_differences(r, rng):
    mesh = make_mesh(2, 6 * r, r)
    field = interpolate(sample(mesh, lambda x, y: np.sin(3 * x) * np.cos(2 * y) + x * y ** 2), mesh)
    pts = rng.uniform(0.05, 0.95, size=(100, 2))
    step = 1e-6
    for a in range(2):
        e = np.zeros(2)
        e[a] = step
        fd = (field.evaluate(pts + e) - field.evaluate(pts - e)) / (2 * step)
        # skip points whose stencil straddles an element face
        h = mesh.cell_sizes[a]
        ok = np.floor((pts[:, a] + step) / h) == np.floor((pts[:, a] - step) / h)
        assert np.abs(fd[ok] - field.gradient(pts[ok])[:, a]).max() <= 1e-5


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_partition_of_unity(r, rng):
    basis = LagrangeBasis1D(r)
    xi = rng.uniform(0, 1, size=50)
    assert np.allclose(basis.values(xi).sum(axis=1), 1.0, atol=1e-13)
    assert np.allclose(basis.derivatives(xi).sum(axis=1), 0.0, atol=1e-10)
    assert np.allclose(basis.values(basis.nodes), np.eye(r + 1))


@pytest.mark.parametrize("r,ns", [(1, (24, 48, 96)), (3, (48, 96, 192))])
def test_h1_interpolation_rate(r, ns):
    u = lambda x, y: np.sin(8 * np.pi * x) * np.sin(8 * np.pi * y)
    grad = lambda x, y: (8 * np.pi * np.cos(8 * np.pi * x) * np.sin(8 * np.pi * y),
                         8 * np.pi * np.sin(8 * np.pi * x) * np.cos(8 * np.pi * y))
    errs = []
    for n in ns:
        mesh = make_mesh(2, n, r)
        s = summarize(static_measures(mesh, sample(mesh, u), reference=ExactReference(grad)), 2, "H1")
        errs.append(s["total"]["error"])
    assert rate(errs, [1 / n for n in ns]) == pytest.approx(r, abs=0.15)


def test_cell_l2_norm_examples():
    mesh = make_mesh(2, 2, 2)
    assert cell_l2_norm(lambda p: np.ones(len(p)), mesh, (0, 0)) == pytest.approx(1.0)
    assert cell_l2_norm(lambda p: p[:, 0], mesh, (0, 0)) == pytest.approx(1 / np.sqrt(3))
    half = make_mesh(2, 2, 1)
    assert cell_l2_norm(lambda p: np.ones(len(p)), half, (1, 0)) == pytest.approx(0.5)
    field = interpolate(sample(half, lambda x, y: x + y * y), half)
    diff = lambda p: field.gradient(p) - field.gradient(p)
    assert cell_l2_norm(diff, half, (1, 1)) == 0.0


@pytest.mark.parametrize("q", [1, 2, 3, 5])
def test_quadrature_exact_on_monomials(q):
    rule = QuadratureRule(q, 2)
    bounds = [(0.25, 0.5), (0.0, 0.75)]
    pts, w = rule.on_cell(bounds)
    deg = 2 * q - 1
    for i in range(deg + 1):
        for j in range(deg + 1):
            exact = ((0.5 ** (i + 1) - 0.25 ** (i + 1)) / (i + 1)) * (0.75 ** (j + 1) / (j + 1))
            assert np.sum(w * pts[:, 0] ** i * pts[:, 1] ** j) == pytest.approx(exact, rel=1e-12)
