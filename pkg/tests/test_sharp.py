import numpy as np
import pytest

from multiwell import Box, builtin
from multiwell.errors import ConfigError, InfeasibleError
from multiwell.geodesic import GeodesicConfig
from multiwell.sharp import (
    DistanceCache,
    F0_energy_1d,
    F0_energy_2d,
    GraphInterfaceSums,
    InterfaceMesh2D,
    JumpConfiguration1D,
    dirichlet_energy,
    graph_interface_sums,
    minimal_jump_1d,
)

SIGMA = 8.0 / 3.0


@pytest.fixture(scope="module")
def dw():
    return builtin("scalar-double-well")


@pytest.fixture(scope="module")
def modulated():
    return builtin("modulated")


def test_configuration_invariants():
    JumpConfiguration1D((0.0,), (1, 2))
    with pytest.raises(ConfigError):
        JumpConfiguration1D((0.5, 0.2), (1, 2, 1))
    with pytest.raises(ConfigError):
        JumpConfiguration1D((0.0,), (1, 1))
    with pytest.raises(ConfigError):
        JumpConfiguration1D((0.0,), (1, 2, 1))
    with pytest.raises(ConfigError):
        InterfaceMesh2D((((0.0, 0.0), (1.0, 0.0), 1, 1),))


def test_f0_1d_values(dw):
    total, _ = F0_energy_1d(dw, JumpConfiguration1D((), (1,)))
    assert total == 0.0
    one, _ = F0_energy_1d(dw, JumpConfiguration1D((0.1,), (1, 2)))
    assert one == pytest.approx(SIGMA, abs=1e-3)
    two, _ = F0_energy_1d(dw, JumpConfiguration1D((-0.4, 0.4), (1, 2, 1)))
    assert two >= one
    assert two == pytest.approx(2 * one, rel=1e-6)


def test_f0_1d_additive_over_disjoint_jumps(dw):
    cache = DistanceCache(dw)
    a, _ = F0_energy_1d(dw, JumpConfiguration1D((-0.5,), (1, 2)), cache)
    b, _ = F0_energy_1d(dw, JumpConfiguration1D((0.5,), (2, 1)), cache)
    ab, _ = F0_energy_1d(dw, JumpConfiguration1D((-0.5, 0.5), (1, 2, 1)), cache)
    assert ab == pytest.approx(a + b, rel=1e-12)


def test_f0_1d_rejects_exterior_jump(dw):
    with pytest.raises(ConfigError):
        F0_energy_1d(dw, JumpConfiguration1D((1.5,), (1, 2)))


def test_f0_2d_straight_unit_segment():
    pot = builtin("scalar-double-well", Box((0.0, 0.0), (1.0, 1.0)))
    mesh = InterfaceMesh2D((((0.5, 0.0), (0.5, 1.0), 1, 2),))
    total, _ = F0_energy_2d(pot, mesh)
    assert total == pytest.approx(SIGMA, abs=1e-3)


def test_f0_2d_zero_length_mesh():
    pot = builtin("scalar-double-well", Box((0.0, 0.0), (1.0, 1.0)))
    mesh = InterfaceMesh2D((((0.2, 0.2), (0.2, 0.2), 1, 2),))
    total, _ = F0_energy_2d(pot, mesh)
    assert total == 0.0


def test_f0_2d_quadrature_refinement():
    pot = builtin("modulated", Box((-1.0, -1.0), (1.0, 1.0)))
    mesh = InterfaceMesh2D((((-0.8, -0.5), (0.9, 0.7), 1, 2),))
    cache = DistanceCache(pot)
    e8, _ = F0_energy_2d(pot, mesh, 8, cache)
    e16, _ = F0_energy_2d(pot, mesh, 16, cache)
    assert abs(e16 - e8) <= 1e-3 * abs(e16)


def test_minimal_jump_modulated(modulated):
    x_star, f0 = minimal_jump_1d(modulated, (1, 2))
    # oracle: distance sqrt(1 + x^2) * 8/3 is minimized at the origin
    assert abs(x_star) <= 1e-4
    assert f0 == pytest.approx(SIGMA, rel=1e-3)


def test_minimal_jump_mass_pinned(dw):
    x_star, f0 = minimal_jump_1d(dw, (1, 2), mass=[0.0])
    assert abs(x_star) <= 1e-6
    assert f0 == pytest.approx(SIGMA, rel=1e-3)


def test_minimal_jump_errors(dw):
    with pytest.raises(ConfigError):
        minimal_jump_1d(dw, (2, 2))
    with pytest.raises(InfeasibleError):
        minimal_jump_1d(dw, (1, 2), mass=[5.0])


def test_dirichlet_energy_1d(dw):
    no_jump = JumpConfiguration1D((), (1,))
    total, _ = dirichlet_energy(dw, no_jump, (np.array([-1.0]), np.array([-1.0])))
    assert total == pytest.approx(0.0, abs=1e-9)
    total, _ = dirichlet_energy(dw, no_jump, (np.array([-1.0]), np.array([1.0])))
    assert total == pytest.approx(SIGMA, abs=1e-3)
    # non-well boundary value: 2 * integral of (1 - u^2) from -1 to 0.3
    g = 0.3
    oracle = 2.0 * ((g - g ** 3 / 3.0) - (-1.0 + 1.0 / 3.0))
    total, _ = dirichlet_energy(dw, no_jump, (np.array([-1.0]), np.array([g])))
    assert total == pytest.approx(oracle, abs=1e-3)
    assert total > 0


def test_dirichlet_energy_2d_matching_trace():
    pot = builtin("scalar-double-well", Box((0.0, 0.0), (1.0, 1.0)))
    mesh = InterfaceMesh2D((((0.5, 0.0), (0.5, 1.0), 1, 2),))

    def trace(x):
        return [-1.0] if x[0] < 0.5 else [1.0]

    total, _ = dirichlet_energy(pot, mesh, trace, trace=trace)
    assert total == pytest.approx(SIGMA, abs=2e-3)


def test_cache_concurrent_reads(dw):
    from concurrent.futures import ThreadPoolExecutor

    cache = DistanceCache(dw, GeodesicConfig(nodes=64, max_iter=300))
    with ThreadPoolExecutor(max_workers=8) as pool:
        vals = list(pool.map(lambda k: cache.well_distance([0.123], 1, 2), range(32)))
    assert len(set(vals)) == 1
    assert len(cache) == 1


def test_graph_interface_sums_contrast():
    pot = builtin("product-distance")
    f = lambda xs: np.sin(xs ** -2.0)

    def cells(t_max):
        ts = np.arange(1, int(t_max / np.pi) + 1) * np.pi
        return np.sort(ts ** -0.5)

    cache = DistanceCache(pot, GeodesicConfig(nodes=32, max_iter=300))
    lvl1 = graph_interface_sums(pot, f, cells(20 * np.pi), cache=cache)
    lvl2 = graph_interface_sums(pot, f, cells(200 * np.pi), cache=cache)
    assert isinstance(lvl1, GraphInterfaceSums)
    # separation-weighted length keeps growing as the cut refines toward 0
    assert lvl2.weighted_by_separation >= 1.3 * lvl1.weighted_by_separation
    # distance-weighted length has already converged
    assert abs(lvl2.weighted_by_distance - lvl1.weighted_by_distance) \
        <= 0.05 * lvl1.weighted_by_distance
