"""
End-to-end checks of the published reference values: stability limits, tuned
omegas, convergence rates and the instability runs.
"""
import math

import numpy as np
import pytest

from src.analysis import (
    block_symbol_branches,
    default_theta_grid,
    diffusion_crossing_cfl,
    dispersion_curve,
    me_report,
    spectrum_point,
    spectrum_sweep,
    vn_stability_limit,
    zero_diffusion_omega,
)
from src.basis import make_nodes
from src.errors import DivergenceDetected
from src.operators import Discretization, assemble, center_stencil
from src.solver import Simulation, SimulationConfig, convergence_study, damping_rate, run


def test_p0_stability_limit():
    assert vn_stability_limit(0, "chebyshev", 3.0, cfl_ref="element") == pytest.approx(1 / math.sqrt(3), abs=1e-4)


@pytest.mark.parametrize("omega, limit", [("upwind", 1 + math.sqrt(2)), (1.0, math.sqrt(2))])
def test_p1_stability_limits(omega, limit):
    assert vn_stability_limit(1, "alpha:0.25", omega) == pytest.approx(limit, abs=1e-3)


def test_upwind_omega_echo():
    disc = Discretization.create(make_nodes(1, "chebyshev"), 0.1, "upwind")
    assert disc.omega == pytest.approx(68.28, abs=0.01)


def test_zero_diffusion_omega():
    assert zero_diffusion_omega(1, "chebyshev", 0.1) == pytest.approx(-1163.68, abs=0.5)


@pytest.mark.parametrize("cfl, omega", [(0.3, 1.0), (0.8, "upwind"), (1.1, 3.0)])
def test_p2_periodic_spectrum_keeps_the_constant_mode(cfl, omega):
    # constants are preserved, so the periodic matrix always carries lambda = 1
    values = spectrum_point(make_nodes(2, "chebyshev"), cfl, omega, "periodic")
    assert len(values) == 3
    assert np.min(np.abs(values - 1.0)) == pytest.approx(0.0, abs=1e-8)


def test_zero_neighbor_branches_merge_inside_the_stable_range():
    cfls = np.round(np.arange(1, 41) * 0.05, 10)
    report = spectrum_sweep(2, "chebyshev", 0.1, 1.0, "zero_neighbor", cfls)
    assert report.merge_point == pytest.approx(0.65, abs=0.051)
    window = (cfls >= 0.2 - 1e-9) & (cfls <= 1.2 + 1e-9)
    assert np.all(report.max_abs[window] < 1.0)


@pytest.mark.slow
@pytest.mark.parametrize("P", [1, 2])
def test_h_convergence_low_degree(P):
    table = convergence_study(P, "chebyshev", "upwind", 0.1, [10, 20, 30, 40, 50])
    assert table.order == pytest.approx(P, abs=0.3)


@pytest.mark.slow
@pytest.mark.parametrize("P", [3, 4])
def test_h_convergence_high_degree(P):
    table = convergence_study(P, "chebyshev", "upwind", 0.1, [10, 20, 40])
    assert table.order >= P - 0.5


@pytest.mark.slow
def test_p_refinement():
    errors = [run(SimulationConfig(P=P, K=10, cfl=0.1)).l2_error for P in range(1, 7)]
    assert all(e1 < e0 for e0, e1 in zip(errors, errors[1:]))
    assert errors[0] / errors[-1] >= 1e3


def _norm_ratio(config):
    try:
        return run(config).norm_ratio
    except DivergenceDetected as e:
        # partial history up to the last step below the divergence threshold
        return e.history[-1][1] / e.history[0][1]


@pytest.mark.slow
@pytest.mark.parametrize("cfl, unstable", [(3.0, True), (1.0, False)])
def test_large_courant_number_instability(cfl, unstable):
    ratio = _norm_ratio(SimulationConfig(P=2, kind="uniform", K=10, cfl=cfl, t_end=5.0))
    if unstable:
        assert ratio > 1.5
    else:
        assert ratio <= 1.05


def test_zero_diffusion_omega_is_mildly_antidiffusive():
    omega = zero_diffusion_omega(1, "chebyshev", 0.1)
    report = run(SimulationConfig(P=1, K=10, cfl=0.1, omega=omega, t_end=0.05))
    assert report.norm_ratio > 1 + 1e-4

    nodeset = make_nodes(1, "chebyshev")
    me = me_report(nodeset, Discretization.create(nodeset, 0.1, omega))
    assert me.b[2] == pytest.approx(0.0, abs=1e-9)
    assert me.b[4] < 0.0


def test_diffusion_crossing_matches_stability_limit():
    crossing = diffusion_crossing_cfl(0, "chebyshev", 3.0, cfl_ref="element")
    assert crossing == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert crossing == pytest.approx(vn_stability_limit(0, "chebyshev", 3.0, cfl_ref="element"), abs=1e-5)


@pytest.mark.parametrize("P", [0, 2, 4])
def test_dispersion_suite(P):
    nodeset = make_nodes(P, "uniform")
    disc = Discretization.create(nodeset, 0.5, 1.0)
    st = center_stencil(assemble(nodeset, disc))
    thetas = default_theta_grid(512)

    exact = dispersion_curve(st, disc, thetas)
    assert max(s.im_kstar_dx for s in exact) <= 1e-12

    low = thetas[thetas <= 0.5]
    truncated = dispersion_curve(st, disc, low, mode="me_truncated", terms=13)
    for e, t in zip(exact, truncated):
        assert t.re_kstar_dx == pytest.approx(e.re_kstar_dx, abs=1e-6)
        assert t.im_kstar_dx == pytest.approx(e.im_kstar_dx, abs=1e-6)

    if P > 0:
        assert all(abs(s.re_kstar_dx - s.theta) <= 0.02 for s in exact if s.theta <= 0.5)


def test_end_to_end_damping():
    dt = Simulation(SimulationConfig(P=1, K=64, cfl=0.1)).disc.dt
    sim = Simulation(SimulationConfig(P=1, K=64, cfl=0.1, t_end=80.5 * dt))
    measured = damping_rate(sim.run().norm_history, 30, 80)
    physical = block_symbol_branches(sim.ops, 2 * math.pi / 64)[0]
    assert measured == pytest.approx(math.log(abs(physical)) / dt, rel=0.05)
