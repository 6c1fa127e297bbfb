import numpy as np
import pytest

from fourierident.errors import InvalidParameterError, SimulationDivergedError
from fourierident.grid import Grid
from fourierident.simulate import (
    DEFAULT_GRIDS,
    InitialCondition,
    PdeSpec,
    benchmark_spec,
    etdrk4_coefficients,
    make_initial_condition,
    simulate,
    with_grid,
)

from conftest import clean_benchmark


def test_heat_matches_closed_form():
    spec = benchmark_spec("heat", InitialCondition("sine", modes=1))
    traj = simulate(spec)
    g = traj.grid
    k = 2 * np.pi / g.X
    exact = np.exp(-0.1 * k**2 * g.t)[None, :] * np.sin(k * g.x)[:, None]
    assert np.max(np.abs(traj.values - exact)) < 1e-8


def test_transport_matches_dispersion_relation():
    spec = benchmark_spec("transport", InitialCondition("sine", modes=3))
    traj = simulate(spec)
    g = traj.grid
    k = 3 * 2 * np.pi / g.X
    exact = np.exp(-0.1 * k**2 * g.t)[None, :] * np.sin(k * (g.x[:, None] - g.t[None, :]))
    assert np.max(np.abs(traj.values - exact)) < 1e-8


def test_kdv_conserves_mass():
    traj = clean_benchmark("kdv")
    mass = traj.values.sum(axis=0) * traj.grid.dx
    size = np.abs(traj.values[:, 0]).sum() * traj.grid.dx
    assert np.max(np.abs(mass - mass[0])) / size < 1e-6


def test_burgers_resolution_doubling():
    base = DEFAULT_GRIDS["burgers"]
    coarse = simulate(benchmark_spec("burgers"))
    fine_grid = Grid(2 * base.n_x, base.n_t, base.dx / 2, base.dt, base.x0, base.t0)
    fine = simulate(with_grid(benchmark_spec("burgers"), fine_grid))
    assert np.max(np.abs(fine.values[::2] - coarse.values)) < 1e-4


def test_ks_stays_bounded():
    traj = clean_benchmark("ks")
    assert np.max(np.abs(traj.values)) < 10
    assert np.std(traj.values[:, -1]) > 0.1  # still active, not decayed


# --- initial conditions --------------------------------------------------------------------


def test_multimode_single_literal():
    g = Grid(64, 2, 2 * np.pi / 64, 1.0)
    u0 = make_initial_condition(InitialCondition("multimode", modes=1, phases=(0.0, 0.0), wavenumber=1.0), g)
    assert np.allclose(u0, np.cos(g.x) + np.sin(g.x))


def test_multimode_is_band_limited():
    g = Grid(512, 2, 10 / 512, 1.0)
    u0 = make_initial_condition(InitialCondition("multimode", modes=50, seed=3), g)
    spec = np.abs(np.fft.rfft(u0))
    spec /= spec.max()
    assert np.all(spec[1:51] > 1e-6)
    assert np.max(spec[51:]) < 1e-10 and spec[0] < 1e-10


def test_seeds_change_phases_not_support():
    g = Grid(256, 2, 0.1, 1.0)
    a = np.abs(np.fft.rfft(make_initial_condition(InitialCondition(modes=5, seed=1), g)))
    b = np.abs(np.fft.rfft(make_initial_condition(InitialCondition(modes=5, seed=2), g)))
    assert not np.allclose(a, b)
    assert np.array_equal(a > 1e-8 * a.max(), b > 1e-8 * b.max())


def test_initial_condition_validation():
    with pytest.raises(InvalidParameterError):
        InitialCondition(modes=0)
    with pytest.raises(InvalidParameterError):
        InitialCondition(kind="gauss")
    with pytest.raises(InvalidParameterError):
        InitialCondition(wavenumber=-1.0)


def test_spec_rejects_wrong_coefficients():
    with pytest.raises(InvalidParameterError):
        PdeSpec("heat", ((2, 1, 0.2),), DEFAULT_GRIDS["heat"])
    with pytest.raises(InvalidParameterError):
        benchmark_spec("wave")


def test_divergence_is_reported():
    g = Grid(64, 20, 2 * np.pi / 64, 1.0)
    spec = PdeSpec("custom", ((2, 1, -1.0), (1, 2, 1.0)), g, InitialCondition(modes=3))
    with pytest.raises(SimulationDivergedError) as info:
        simulate(spec)
    assert info.value.step >= 1


def test_linear_divergence_is_reported():
    g = Grid(64, 200, 2 * np.pi / 64, 1.0)
    spec = PdeSpec("custom", ((2, 1, -1.0),), g, InitialCondition(modes=3))
    with pytest.raises(SimulationDivergedError):
        simulate(spec)


def test_etdrk4_coefficients_limit():
    # for L -> 0 the weights reduce to classical RK4: Q = h/2 and f1 = f2 = f3 = h/6 (f2 enters twice)
    h = 0.1
    E, E2, Q, f1, f2, f3 = etdrk4_coefficients(np.array([0.0 + 0j, 1e-9 + 0j]), h)
    assert np.allclose(E, 1) and np.allclose(E2, 1)
    assert np.allclose(Q, h / 2)
    assert np.allclose(f1, h / 6) and np.allclose(f2, h / 6) and np.allclose(f3, h / 6)


def test_simulation_is_deterministic():
    a = simulate(benchmark_spec("burgers"))
    b = simulate(benchmark_spec("burgers"))
    assert a.values.tobytes() == b.values.tobytes()
