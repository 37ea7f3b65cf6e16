import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdppr.errors import DivisibilityError, IndexOutOfRange, InterfaceNotResolved, OutOfDomain
from fdppr import grid as G


def mesh2(n_intervals, r, **kw):
    return G.build_interpolant_mesh(G.FdGrid(2, n_intervals - 1), r, **kw)


def test_fig3_layout():
    m = mesh2(6, 3)
    assert m.cells_per_axis == (2, 2)
    assert m.h == pytest.approx(0.5)
    assert m.nodes_per_axis == (7, 7)


def test_identity_coarsening():
    m = mesh2(4, 1)
    assert m.cells_per_axis == (4, 4)
    assert m.h == pytest.approx(0.25)


def test_space_time_mesh_parameter():
    g = G.SpaceTimeGrid(G.FdGrid(2, 23), 47, 1.0)
    m = G.build_interpolant_mesh(g, 3)
    assert m.cells_per_axis == (8, 8, 16)
    assert m.h == pytest.approx(1 / 8)
    assert m.is_space_time and m.n_space_axes == 2


def test_divisibility_error():
    with pytest.raises(DivisibilityError):
        mesh2(8, 3)
    with pytest.raises(DivisibilityError):
        G.build_interpolant_mesh(G.SpaceTimeGrid(G.FdGrid(2, 5), 6, 1.0), 3)


def test_node_coordinates():
    g = G.FdGrid(2, 3)
    assert G.node_coordinate(g, (0, 0)) == (0.0, 0.0)
    assert G.node_coordinate(g, (2, 3)) == (0.5, 0.75)
    st_grid = G.SpaceTimeGrid(G.FdGrid(2, 31), 31, 0.705)
    assert G.node_coordinate(st_grid, (16, 16, 32)) == pytest.approx((0.5, 0.5, 0.705), abs=1e-15)
    with pytest.raises(IndexOutOfRange):
        G.node_coordinate(g, (5, 0))
    with pytest.raises(IndexOutOfRange):
        G.node_coordinate(g, (1,))


def test_spacing_and_cfl():
    g = G.FdGrid(3, 15)
    assert g.spacing * g.n_intervals == 1.0
    st_grid = G.SpaceTimeGrid(g, 31, 1.0)
    assert st_grid.dt == pytest.approx(1 / 32)
    assert st_grid.cfl() == pytest.approx(0.5)
    assert st_grid.time(32) == 1.0


@pytest.mark.parametrize("p,cell", [((0.25, 0.75), (0, 1)), ((0.5, 0.5), (0, 0)),
                                    ((1.0, 1.0), (1, 1)), ((0.0, 0.0), (0, 0))])
def test_cell_of_point(p, cell):
    assert mesh2(2, 1).cell_of_point(p) == cell


def test_cell_of_point_out_of_domain():
    with pytest.raises(OutOfDomain):
        mesh2(2, 1).cell_of_point((1.2, 0.5))


@settings(max_examples=60, deadline=None)
@given(r=st.sampled_from([1, 2, 3]), cells=st.integers(2, 6), data=st.data())
def test_node_round_trip(r, cells, data):
    n = r * cells
    m = mesh2(n, r)
    idx = data.draw(st.tuples(st.integers(0, n), st.integers(0, n)))
    p = G.node_coordinate(G.FdGrid(2, n - 1), idx)
    cell = m.cell_of_point(p)
    assert all(i in rng for i, rng in zip(idx, m.cell_nodes(cell)))


@settings(max_examples=30, deadline=None)
@given(r=st.sampled_from([1, 3]), cells=st.integers(2, 5), dim=st.sampled_from([1, 2, 3]))
def test_cells_tile_the_box(r, cells, dim):
    m = G.build_interpolant_mesh(G.FdGrid(dim, r * cells - 1), r)
    total = sum(m.cell_volume(c) for c in m.iter_cells())
    assert total == pytest.approx(1.0, rel=1e-14)


def test_mesh_nodes_are_fd_points():
    g = G.FdGrid(2, 11)
    m = G.build_interpolant_mesh(g, 3)
    for a in range(2):
        assert np.array_equal(m.axis_nodes(a), g.axis_coordinates(a))


def test_flat_index_round_trip():
    shape = (4, 5, 3)
    for k in range(60):
        assert G.flat_index(shape, G.multi_index(shape, k)) == k
    assert G.flat_index(shape, (1, 0, 0)) == 1


def test_interfaces_become_cuts():
    m = mesh2(8, 1, interfaces={0: [0.5], 1: [0.5]})
    assert m.cuts == ((4,), (4,))
    assert len(m.blocks) == 4
    assert m.subdomain_of_cell((5, 2)) == (1, 0)
    with pytest.raises(InterfaceNotResolved):
        mesh2(9, 3, interfaces={0: [0.5]})
