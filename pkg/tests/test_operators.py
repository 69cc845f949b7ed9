import numpy as np
import pytest

from src.basis import make_nodes, monomial_row
from src.errors import ConfigError
from src.fluxes import LaxFriedrichsFlux
from src.linalg import eigenvalues
from src.operators import (
    Discretization,
    assemble,
    assemble_shift,
    center_stencil,
    interface_weights,
    periodic_operator,
    step_update,
    zero_neighbor_operator,
)

GRID_P = range(0, 7)
GRID_KIND = ["chebyshev", "uniform"]
GRID_CFL = [0.1, 0.5]
GRID_OMEGA = [0.0, 1.0, 3.0, "upwind"]


def _ops(P, kind="chebyshev", cfl=0.1, omega="upwind", cfl_ref="min_spacing"):
    nodeset = make_nodes(P, kind)
    return assemble(nodeset, Discretization.create(nodeset, cfl, omega, cfl_ref))


# ----------------------------------------------------------------------
# Discretization
# ----------------------------------------------------------------------

def test_time_step_conventions():
    ns = make_nodes(1, "chebyshev")
    d = Discretization.create(ns, 0.1, "upwind", "min_spacing", a=2.0, dx=0.5)
    assert d.dt == pytest.approx(0.1 * ns.d_min * 0.5 / 2.0)
    assert d.nu == pytest.approx(0.1 * ns.d_min)

    e = Discretization.create(ns, 0.1, "upwind", "element", a=2.0, dx=0.5)
    assert e.dt == pytest.approx(0.025)
    assert e.nu == pytest.approx(0.1)


def test_resolved_upwind_omega_for_chebyshev_p1():
    d = Discretization.create(make_nodes(1, "chebyshev"), 0.1, "upwind")
    assert d.omega == pytest.approx(68.28, abs=0.01)


def test_with_dt_rescales_cfl():
    d = Discretization.create(make_nodes(2), 0.4, 1.0)
    half = d.with_dt(d.dt / 2)
    assert half.dt == pytest.approx(d.dt / 2)
    assert half.cfl == pytest.approx(0.2)
    assert d.with_cfl(0.8).nu == pytest.approx(2 * d.nu)


@pytest.mark.parametrize("kwargs", [
    {"cfl": 0.0},
    {"cfl": -1.0},
    {"cfl_ref": "diagonal"},
    {"a": 0.0},
    {"dx": -1.0},
])
def test_discretization_validation(kwargs):
    args = {"cfl": 0.1, "cfl_ref": "min_spacing", "a": 1.0, "dx": 1.0}
    args.update(kwargs)
    with pytest.raises(ConfigError):
        Discretization.create(make_nodes(1), args["cfl"], "upwind", args["cfl_ref"], args["a"], args["dx"])


@pytest.mark.parametrize("omega, expected", [
    ("upwind", (1.0, 0.0)),
    (0.0, (0.5, 0.5)),
    (3.0, (0.5 + 1.5 * 0.2, 0.5 - 1.5 * 0.2)),
])
def test_interface_weights(omega, expected):
    disc = Discretization.create(make_nodes(0), 0.2, omega, "element")
    assert interface_weights(disc) == pytest.approx(expected)


# ----------------------------------------------------------------------
# assembly structure
# ----------------------------------------------------------------------

@pytest.mark.parametrize("P", [0, 1, 2, 5])
def test_shapes_and_normal_matrix(P):
    ops = _ops(P)
    n = P + 1
    assert ops.X.shape == (n + 2, n)
    assert ops.F.shape == (n, n + 2)
    for N in (ops.N_prev, ops.N_self, ops.N_next):
        assert N.shape == (n, n)
    assert ops.A[0, 0] == pytest.approx(P + 3)
    assert np.allclose(ops.A, ops.A.T)


def test_p1_center_row_of_fit_is_a_plain_mean():
    for kind in ("chebyshev", "uniform", "alpha:0.3"):
        ops = _ops(1, kind)
        assert monomial_row(0.0, 2) @ ops.F == pytest.approx([0.25] * 4, abs=1e-14)


def test_upwind_has_no_downstream_coupling():
    ops = _ops(3, cfl=0.3)
    assert np.all(ops.N_next == 0.0)


def test_operators_are_reassembled_not_cached():
    a = _ops(2, cfl=0.1)
    b = _ops(2, cfl=0.2)
    assert not np.allclose(a.N_self, b.N_self)


def test_negative_shift_rejected():
    with pytest.raises(ConfigError):
        assemble_shift(make_nodes(1), -0.1, 0.5, 0.5)


@pytest.mark.parametrize("P, kind", [(2, "uniform"), (4, "chebyshev")])
def test_advected_vandermonde_conditioning_grows_with_shift(P, kind):
    nodeset = make_nodes(P, kind)
    conds = [assemble_shift(nodeset, nu, 1.0, 0.0).cond_vstar for nu in np.linspace(0.0, 1.0, 61)]
    assert all(c1 >= c0 * (1 - 1e-12) for c0, c1 in zip(conds, conds[1:]))
    if P == 4:
        assert assemble_shift(nodeset, 0.3, 1.0, 0.0).cond_vstar > assemble_shift(nodeset, 0.1, 1.0, 0.0).cond_vstar


# ----------------------------------------------------------------------
# operator property suite
# ----------------------------------------------------------------------

@pytest.mark.parametrize("omega", GRID_OMEGA)
@pytest.mark.parametrize("cfl", GRID_CFL)
@pytest.mark.parametrize("kind", GRID_KIND)
@pytest.mark.parametrize("P", GRID_P)
def test_constants_are_preserved(P, kind, cfl, omega):
    ops = _ops(P, kind, cfl, omega)
    ones = np.ones(P + 1)
    assert step_update(ops, ones, ones, ones) == pytest.approx(ones, abs=1e-9)


@pytest.mark.parametrize("omega", GRID_OMEGA)
@pytest.mark.parametrize("cfl", GRID_CFL)
@pytest.mark.parametrize("kind", GRID_KIND)
@pytest.mark.parametrize("P", GRID_P)
def test_polynomials_up_to_degree_p_advect_exactly(P, kind, cfl, omega):
    ops = _ops(P, kind, cfl, omega)
    chi = ops.nodeset.nodes
    for degree in range(P + 1):
        # global polynomial in units of dx, element k centered at 0
        def poly(x):
            return (x + 0.3) ** degree

        updated = step_update(ops, poly(chi - 1.0), poly(chi), poly(chi + 1.0))
        assert updated == pytest.approx(poly(chi - ops.nu), abs=1e-8)


@pytest.mark.parametrize("cfl", GRID_CFL)
@pytest.mark.parametrize("kind", GRID_KIND)
@pytest.mark.parametrize("P", GRID_P)
def test_upwind_matches_lax_friedrichs_at_inverse_nu(P, kind, cfl):
    nodeset = make_nodes(P, kind)
    up = Discretization.create(nodeset, cfl, "upwind")
    lf = Discretization.create(nodeset, cfl, LaxFriedrichsFlux(up.omega))
    a, b = assemble(nodeset, up), assemble(nodeset, lf)
    for N_up, N_lf in ((a.N_prev, b.N_prev), (a.N_self, b.N_self), (a.N_next, b.N_next)):
        assert np.allclose(N_up, N_lf, atol=1e-10)


@pytest.mark.parametrize("omega", GRID_OMEGA)
@pytest.mark.parametrize("cfl", GRID_CFL)
def test_p0_update_conserves_mass(cfl, omega):
    ops = _ops(0, "chebyshev", cfl, omega)
    rng = np.random.default_rng(3)
    Q = rng.normal(size=9)
    Q_new = ops.N_prev[0, 0] * np.roll(Q, 1) + ops.N_self[0, 0] * Q + ops.N_next[0, 0] * np.roll(Q, -1)
    assert Q_new.sum() == pytest.approx(Q.sum(), abs=1e-12)


@pytest.mark.parametrize("w", [(0.5, 0.5), (1.0, 0.0), (1.25, -0.25)])
def test_p0_periodic_operator_is_identity_at_zero_shift(w):
    ops = assemble_shift(make_nodes(0), 0.0, *w)
    assert periodic_operator(ops) == pytest.approx(np.eye(1), abs=1e-15)


@pytest.mark.parametrize("P", [1, 2, 3, 4])
def test_zero_shift_preserves_global_polynomials(P):
    ops = assemble_shift(make_nodes(P, "uniform"), 0.0, 0.5, 0.5)
    chi = ops.nodeset.nodes
    poly = lambda x: 1.0 - 2.0 * x + x ** P
    assert step_update(ops, poly(chi - 1), poly(chi), poly(chi + 1)) == pytest.approx(poly(chi), abs=1e-10)


def test_zero_shift_periodic_spectra():
    p2 = eigenvalues(periodic_operator(assemble_shift(make_nodes(2, "uniform"), 0.0, 0.5, 0.5)))
    assert np.sort(p2.real) == pytest.approx([0.2, 1.0, 1.0], abs=1e-10)
    assert np.abs(p2.imag) == pytest.approx([0.0] * 3, abs=1e-10)

    p1 = eigenvalues(periodic_operator(assemble_shift(make_nodes(1, "alpha:0.25"), 0.0, 0.5, 0.5)))
    assert np.sort(p1.real) == pytest.approx([0.2, 1.0], abs=1e-12)


@pytest.mark.parametrize("P", [1, 2, 3])
def test_zero_neighbor_operator_is_self_coupling(P):
    ops = _ops(P, cfl=0.3, omega=1.0)
    assert np.array_equal(zero_neighbor_operator(ops), ops.N_self)


# ----------------------------------------------------------------------
# center stencil
# ----------------------------------------------------------------------

def _as_dict(st):
    return {round(o, 12): w for o, w in st.entries}


def test_p0_stencil_weights():
    nodeset = make_nodes(0)
    ops = assemble(nodeset, Discretization.create(nodeset, 0.5, 3.0, "element"))
    st = center_stencil(ops)
    w_l, w_r = 1.25, -0.25
    assert _as_dict(st) == pytest.approx({-1.0: w_l / 3, 0.0: 2.0 / 3, 1.0: w_r / 3})


def test_p1_upwind_stencil():
    nodeset = make_nodes(1, "alpha:0.25")
    alpha = 0.25
    ops = assemble(nodeset, Discretization.create(nodeset, 0.2, "upwind"))
    nu = ops.nu
    assert nu == pytest.approx(0.05)
    expected = {
        -1.0 - alpha: 1 / 8 - 1 / (16 * alpha) + nu / (8 * alpha),
        -1.0 + alpha: 1 / 8 + 1 / (16 * alpha) - nu / (8 * alpha),
        -alpha: 3 / 8 - 1 / (16 * alpha) + 3 * nu / (8 * alpha),
        alpha: 3 / 8 + 1 / (16 * alpha) - 3 * nu / (8 * alpha),
    }
    assert _as_dict(center_stencil(ops)) == pytest.approx(expected, abs=1e-12)


def _lf_stencil(alpha, nu, w_l, w_r):
    s = 8 * alpha
    return {
        -1.0 - alpha: w_l * (alpha + nu - 0.5) / s,
        -1.0 + alpha: w_l * (alpha - nu + 0.5) / s,
        -alpha: (w_r * (alpha + nu + 0.5) + 2 * alpha + 2 * nu + w_l * (alpha + nu - 0.5)) / s,
        alpha: (w_r * (alpha - nu - 0.5) + 2 * alpha - 2 * nu + w_l * (alpha - nu + 0.5)) / s,
        1.0 - alpha: w_r * (alpha + nu + 0.5) / s,
        1.0 + alpha: w_r * (alpha - nu - 0.5) / s,
    }


@pytest.mark.parametrize("cfl", [0.2, 0.6])
def test_p1_lax_friedrichs_stencil(cfl):
    nodeset = make_nodes(1, "alpha:0.25")
    ops = assemble(nodeset, Discretization.create(nodeset, cfl, 1.0))
    expected = _lf_stencil(0.25, ops.nu, ops.w_l, ops.w_r)
    assert ops.w_l == pytest.approx(0.5 * (1 + ops.nu))
    assert _as_dict(center_stencil(ops)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("omega", GRID_OMEGA)
@pytest.mark.parametrize("P", [1, 2, 3, 4])
def test_stencil_moments(P, omega):
    ops = _ops(P, "uniform", 0.5, omega)
    st = center_stencil(ops)
    assert st.moment(0) == pytest.approx(1.0, abs=1e-12)
    assert st.moment(1) == pytest.approx(-ops.nu, abs=1e-11)


def test_stencil_provenance():
    st = center_stencil(_ops(2, "uniform", 0.5, 1.0))
    assert st.provenance["P"] == 2
    assert st.provenance["kind"] == "uniform"
    assert st.provenance["omega"] == 1.0
    assert st.provenance["nodes"] == pytest.approx((-0.25, 0.0, 0.25))
