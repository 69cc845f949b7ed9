"""
Exact one-step update of the semi-Lagrangian spectral element method for one element.

Each element carries P+1 nodal values. One step advects the nodes by nu = a*dt/dx,
projects the advected interpolant back onto the fixed nodes, and then refits a degree-P
monomial by least squares through the P+1 projected values plus the two interface
constraints coupling the element to its neighbours. The result is linear:

    Q[k]^{n+1} = N_prev Q[k-1]^n + N_self Q[k]^n + N_next Q[k+1]^n
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np

from src.basis import NodeSet, monomial_row, vandermonde
from src.errors import ConfigError, SingularMatrix
from src.fluxes import InterfaceFlux, make_flux
from src.linalg import condition_estimate, inverse, solve

logger = logging.getLogger(__name__)

CFL_REFERENCES = ("min_spacing", "element")
STENCIL_DROP_TOL = 1e-14


@dataclass(frozen=True)
class Discretization:
    """
    Element width, wave speed and Courant number convention. With cfl_ref='min_spacing'
    the time step is cfl*d_min*dx/a, with cfl_ref='element' it is cfl*dx/a.
    """
    a: float
    dx: float
    cfl: float
    flux: InterfaceFlux
    d_min: float
    cfl_ref: str = "min_spacing"

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigError(f"a: wave speed must be > 0, got {self.a}")
        if not self.dx > 0:
            raise ConfigError(f"dx: element width must be > 0, got {self.dx}")
        if not self.cfl > 0:
            raise ConfigError(f"cfl: must be > 0, got {self.cfl}")
        if self.cfl_ref not in CFL_REFERENCES:
            raise ConfigError(f"cfl_ref: expected one of {CFL_REFERENCES}, got '{self.cfl_ref}'")
        if not self.d_min > 0:
            raise ConfigError(f"d_min: node spacing must be > 0, got {self.d_min}")

    @classmethod
    def create(cls, nodeset: NodeSet, cfl: float, omega="upwind", cfl_ref: str = "min_spacing",
               a: float = 1.0, dx: float = 1.0) -> "Discretization":
        return cls(a=a, dx=dx, cfl=cfl, flux=make_flux(omega), d_min=nodeset.d_min, cfl_ref=cfl_ref)

    @property
    def reference_length(self) -> float:
        """Length, in units of dx, that the Courant number is measured against."""
        return self.d_min if self.cfl_ref == "min_spacing" else 1.0

    @property
    def dt(self) -> float:
        return self.cfl * self.reference_length * self.dx / self.a

    @property
    def nu(self) -> float:
        return self.a * self.dt / self.dx

    @property
    def omega(self) -> float:
        return self.flux.effective_omega(self.nu)

    def with_dt(self, dt: float) -> "Discretization":
        """Same discretization with a different time step (the cfl is rescaled)."""
        return replace(self, cfl=self.cfl * dt / self.dt)

    def with_cfl(self, cfl: float) -> "Discretization":
        return replace(self, cfl=cfl)


@dataclass(frozen=True)
class ElementOperators:
    nodeset: NodeSet
    disc: Discretization | None
    nu: float
    w_l: float
    w_r: float
    V: np.ndarray
    Vstar: np.ndarray
    X: np.ndarray
    A: np.ndarray
    F: np.ndarray
    S_prev: np.ndarray
    S_self: np.ndarray
    S_next: np.ndarray
    N_prev: np.ndarray
    N_self: np.ndarray
    N_next: np.ndarray
    cond_vstar: float

    @property
    def size(self) -> int:
        return self.nodeset.size


@dataclass(frozen=True)
class CenterStencil:
    """Weights c_j at offsets delta_j (units of dx) producing the updated element-center value."""
    offsets: np.ndarray
    weights: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def entries(self) -> List[Tuple[float, float]]:
        return list(zip(self.offsets.tolist(), self.weights.tolist()))

    def moment(self, n: int) -> float:
        return float(np.sum(self.weights * self.offsets ** n))


def interface_weights(disc: Discretization) -> Tuple[float, float]:
    return disc.flux.weights(disc.nu)


def assemble_shift(nodeset: NodeSet, nu: float, w_l: float, w_r: float,
                   disc: Discretization | None = None) -> ElementOperators:
    """
    Builds the recursion matrices for an explicit shift nu >= 0 and interface weights.
    """
    if nu < 0:
        raise ConfigError(f"nu: shift must be >= 0, got {nu}")
    n = nodeset.size
    chi = nodeset.nodes

    V = vandermonde(chi, n)
    Vstar = vandermonde(chi + nu, n)
    try:
        Vstar_inv = inverse(Vstar)
    except SingularMatrix as e:
        raise SingularMatrix(f"advected Vandermonde singular at nu={nu:.6g}: {e}") from e

    # nodal projection and edge traces of the advected interpolant
    R = V @ Vstar_inv
    t_right = monomial_row(0.5, n) @ Vstar_inv
    t_left = monomial_row(-0.5, n) @ Vstar_inv

    chi_b = np.concatenate(([-0.5], chi, [0.5]))
    X = vandermonde(chi_b, n)
    A = X.T @ X
    try:
        F = solve(A, X.T)
    except SingularMatrix as e:
        raise SingularMatrix(f"normal equations singular for {nodeset.label} P={nodeset.degree}: {e}") from e

    rows = n + 2
    S_prev = np.zeros((rows, n))
    S_self = np.zeros((rows, n))
    S_next = np.zeros((rows, n))
    S_prev[0] = w_l * t_right
    S_self[0] = w_r * t_left
    S_self[1:n + 1] = R
    S_self[n + 1] = w_l * t_right
    S_next[n + 1] = w_r * t_left

    VF = V @ F
    ops = ElementOperators(
        nodeset=nodeset, disc=disc, nu=float(nu), w_l=float(w_l), w_r=float(w_r),
        V=V, Vstar=Vstar, X=X, A=A, F=F,
        S_prev=S_prev, S_self=S_self, S_next=S_next,
        N_prev=VF @ S_prev, N_self=VF @ S_self, N_next=VF @ S_next,
        cond_vstar=condition_estimate(Vstar),
    )
    logger.debug(
        f"Assembled P={nodeset.degree} {nodeset.label} nu={nu:.6g} "
        f"w=({w_l:.6g}, {w_r:.6g}) cond(V*)={ops.cond_vstar:.3e}"
    )
    return ops


def assemble(nodeset: NodeSet, disc: Discretization) -> ElementOperators:
    w_l, w_r = interface_weights(disc)
    return assemble_shift(nodeset, disc.nu, w_l, w_r, disc=disc)


def periodic_operator(ops: ElementOperators) -> np.ndarray:
    """Single element whose neighbours are itself."""
    return ops.N_prev + ops.N_self + ops.N_next


def zero_neighbor_operator(ops: ElementOperators) -> np.ndarray:
    """Single element whose neighbours carry zero data."""
    return ops.N_self.copy()


def center_stencil(ops: ElementOperators) -> CenterStencil:
    n = ops.size
    center_row = monomial_row(0.0, n) @ ops.F
    chi = ops.nodeset.nodes

    offsets = np.concatenate((chi - 1.0, chi, chi + 1.0))
    weights = np.concatenate((center_row @ ops.S_prev, center_row @ ops.S_self, center_row @ ops.S_next))
    keep = np.abs(weights) >= STENCIL_DROP_TOL

    disc = ops.disc
    provenance = {
        "P": ops.nodeset.degree,
        "kind": ops.nodeset.label,
        "nodes": tuple(chi.tolist()),
        "nu": ops.nu,
        "cfl": disc.cfl if disc is not None else None,
        "omega": disc.omega if disc is not None else None,
    }
    return CenterStencil(offsets=offsets[keep], weights=weights[keep], provenance=provenance)


def step_update(ops: ElementOperators, q_prev, q_self, q_next) -> np.ndarray:
    return ops.N_prev @ q_prev + ops.N_self @ q_self + ops.N_next @ q_next
