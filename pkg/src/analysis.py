"""
Analysis instruments for the assembled one-step update.

  * Modified Equation coefficients from the logarithm of the center-node symbol.
  * Dispersion and diffusion curves of the effective wavenumber.
  * Scalar Von Neumann limits of the center-node stencil.
  * Eigenvalue sweeps of the single-element periodic and zero-neighbour matrices.
  * Block Fourier symbol of the three recursion matrices on a periodic mesh.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect, brentq, minimize_scalar

from src.basis import NodeSet, make_nodes
from src.errors import (
    BracketInvalid,
    BranchFailure,
    ConfigError,
    DegenerateDependence,
    NumericalError,
)
from src.linalg import TruncatedSeries, eigenvalues, series_log
from src.operators import (
    CenterStencil,
    Discretization,
    ElementOperators,
    assemble,
    center_stencil,
    periodic_operator,
    zero_neighbor_operator,
)

logger = logging.getLogger(__name__)

DEFAULT_TERMS = 13
VN_THETA_POINTS = 4096
VN_GROWTH_TOL = 1e-10
DISPERSION_POINTS = 2048
MERGE_TOL = 1e-8
BLOCK_THETA_POINTS = 512
BOUNDARY_KINDS = ("periodic", "zero_neighbor")
SCAN_CFLS = np.round(np.arange(0.05, 10.0 + 1e-9, 0.05), 10)


@dataclass(frozen=True)
class ReferenceCheck:
    """A closed-form coefficient compared against the engine."""
    label: str
    m: int
    reference: float
    computed: float

    @property
    def delta(self) -> float:
        return self.computed - self.reference

    def agrees(self, rel_tol: float = 1e-8) -> bool:
        return abs(self.delta) <= rel_tol * max(1.0, abs(self.reference))


@dataclass
class MEReport:
    """
    Coefficients of dQ/dt = sum_m a_m d^mQ/dx^m. a[m] and b[m] are indexed by the
    derivative order (index 0 unused); b_m = a_m * dt / dx**m is the dimensionless form.
    """
    provenance: Dict
    a: np.ndarray
    b: np.ndarray
    comparisons: List[ReferenceCheck] = field(default_factory=list)

    @property
    def order(self) -> int:
        return self.a.size - 1

    def coefficient(self, m: int) -> float:
        return float(self.a[m])

    @property
    def diffusion(self) -> float:
        return self.coefficient(2)

    @property
    def dispersion(self) -> float:
        return self.coefficient(3)


@dataclass(frozen=True)
class DispersionSample:
    theta: float
    re_kstar_dx: float
    im_kstar_dx: float
    mode: str
    terms: int | None = None


@dataclass
class SpectrumReport:
    variable: str
    values: np.ndarray
    eigenvalues: List[np.ndarray]
    max_abs: np.ndarray
    merge_point: float | None
    provenance: Dict = field(default_factory=dict)


# ----------------------------------------------------------------------
# symbol and Modified Equation
# ----------------------------------------------------------------------

def symbol(st: CenterStencil, theta):
    """g(theta) = sum_j c_j exp(i delta_j theta); theta may be an array."""
    theta = np.asarray(theta, dtype=float)
    phases = np.exp(1j * np.multiply.outer(theta, st.offsets))
    g = phases @ st.weights
    return complex(g) if g.ndim == 0 else g


def symbol_series(st: CenterStencil, M: int) -> TruncatedSeries:
    """Taylor coefficients of g in powers of (i theta): G_n = sum_j c_j delta_j^n / n!."""
    coeffs = [st.moment(n) / math.factorial(n) for n in range(M + 1)]
    return TruncatedSeries(np.array(coeffs))


def _reference_checks(st: CenterStencil, disc: Discretization, a2: float) -> List[ReferenceCheck]:
    P = st.provenance.get("P")
    a, dx, dt = disc.a, disc.dx, disc.dt
    checks = []
    if P == 0:
        checks.append(ReferenceCheck("p0 derived: dx^2/(6 dt) - a^2 dt/2", 2,
                                     dx ** 2 / (6 * dt) - 0.5 * a ** 2 * dt, a2))
        checks.append(ReferenceCheck("p0 printed: dx^2/(3 dt) - a^2 dt/2", 2,
                                     dx ** 2 / (3 * dt) - 0.5 * a ** 2 * dt, a2))
    elif P == 1 and "nodes" in st.provenance:
        alpha = abs(st.provenance["nodes"][1])
        omega = disc.omega
        checks.append(ReferenceCheck(
            "p1 bracket: alpha^2 dx^2/(2 dt) + a^2 omega dt/4 - a^2 dt/2", 2,
            alpha ** 2 * dx ** 2 / (2 * dt) + 0.25 * a ** 2 * omega * dt - 0.5 * a ** 2 * dt, a2))
    for check in checks:
        logger.info(
            f"ME a_{check.m} [{check.label}]: reference={check.reference:.17g} "
            f"computed={check.computed:.17g} delta={check.delta:.3e} "
            f"{'agrees' if check.agrees() else 'DIFFERS'}"
        )
    return checks


def mea(st: CenterStencil, disc: Discretization, M: int = DEFAULT_TERMS) -> MEReport:
    if M < 2:
        raise ConfigError(f"terms: Modified Equation order must be >= 2, got {M}")
    log_g = series_log(symbol_series(st, M))
    b = log_g.coefficients.copy()
    b[0] = 0.0
    m = np.arange(M + 1)
    a = b * disc.dx ** m / disc.dt

    if abs(a[1] + disc.a) > 1e-9 * disc.a:
        logger.warning(f"ME a_1={a[1]:.17g} is not -a={-disc.a}; stencil does not transport at speed a")

    provenance = {
        "P": st.provenance.get("P"),
        "kind": st.provenance.get("kind"),
        "cfl": disc.cfl,
        "cfl_ref": disc.cfl_ref,
        "omega": disc.omega,
        "dx": disc.dx,
        "a": disc.a,
        "dt": disc.dt,
        "nu": disc.nu,
        "d_min": disc.d_min,
    }
    report = MEReport(provenance=provenance, a=a, b=b)
    report.comparisons = _reference_checks(st, disc, float(a[2]))
    return report


def _stencil_for(nodeset: NodeSet, disc: Discretization) -> CenterStencil:
    return center_stencil(assemble(nodeset, disc))


def me_report(nodeset: NodeSet, disc: Discretization, M: int = DEFAULT_TERMS) -> MEReport:
    """Assembles, extracts the center stencil and runs mea in one go."""
    return mea(_stencil_for(nodeset, disc), disc, M)


def zero_diffusion_omega(P: int, kind: str, cfl: float, cfl_ref: str = "min_spacing",
                         alpha: float | None = None, a: float = 1.0, dx: float = 1.0) -> float:
    """
    The omega cancelling the second-order coefficient. a_2 is affine in omega
    for P >= 1 (the first moment of the stencil is -nu for every omega), so two
    evaluations fix it. For P=0 omega also sets the transport speed, so the question
    is ill-posed there.
    """
    if P == 0:
        raise DegenerateDependence("zero-diffusion omega needs P >= 1; for P=0 omega also sets the first moment")
    nodeset = make_nodes(P, kind, alpha)
    # dimensionless b_2
    b2 = [me_report(nodeset, Discretization.create(nodeset, cfl, w, cfl_ref, a, dx), M=2).b[2]
          for w in (0.0, 1.0)]
    slope = b2[1] - b2[0]
    if abs(slope) < 1e-14:
        raise DegenerateDependence(
            f"a_2 does not depend on omega for P={P} {kind} cfl={cfl} (b_2={b2[0]:.6g})"
        )
    omega = -b2[0] / slope
    residual = me_report(nodeset, Discretization.create(nodeset, cfl, omega, cfl_ref, a, dx), M=2).b[2]
    if abs(residual) > 1e-9 * abs(slope):
        logger.warning(f"zero-diffusion omega={omega:.10g} leaves a_2={residual:.3e}")
    logger.info(f"Zero-diffusion omega for P={P} {kind} cfl={cfl}: {omega:.10g}")
    return omega


def diffusion_crossing_cfl(P: int, kind: str, omega="upwind", cfl_ref: str = "min_spacing",
                           alpha: float | None = None, bracket: Tuple[float, float] | None = None) -> float:
    """Courant number at which the second-order coefficient changes sign."""
    nodeset = make_nodes(P, kind, alpha)

    def b2(cfl):
        disc = Discretization.create(nodeset, cfl, omega, cfl_ref)
        return me_report(nodeset, disc, M=2).b[2]

    if bracket is None:
        bracket = _scan_for_sign_change(lambda c: b2(c) < 0.0, "a_2 sign change")
    lo, hi = bracket
    if b2(lo) * b2(hi) > 0:
        raise BracketInvalid(f"bracket: a_2 has the same sign at cfl={lo} and cfl={hi}")
    return float(brentq(b2, lo, hi, xtol=1e-12))


# ----------------------------------------------------------------------
# Von Neumann
# ----------------------------------------------------------------------

def max_amplification(st: CenterStencil, theta_points: int = VN_THETA_POINTS) -> float:
    """
    max |g| over theta in [0, pi]: uniform grid, then bounded refinement around the
    grid maximum. The weights are real, so |g(-theta)| = |g(theta)| and [0, pi]
    covers every mode the mesh resolves.
    """
    thetas = np.linspace(0.0, np.pi, theta_points + 1)
    step = thetas[1]
    magnitude = np.abs(symbol(st, thetas))
    k = int(np.argmax(magnitude))
    best = float(magnitude[k])

    refined = minimize_scalar(
        lambda t: -abs(symbol(st, t)),
        bounds=(max(thetas[k] - step, 0.0), min(thetas[k] + step, np.pi)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return max(best, float(-refined.fun))


def amplification_at(nodeset: NodeSet, cfl: float, omega, cfl_ref: str,
                     theta_points: int = VN_THETA_POINTS) -> float:
    disc = Discretization.create(nodeset, cfl, omega, cfl_ref)
    return max_amplification(center_stencil(assemble(nodeset, disc)), theta_points)


def _scan_for_sign_change(is_past, what: str, grid=SCAN_CFLS) -> Tuple[float, float]:
    lo = float(grid[0])
    if is_past(lo):
        raise BracketInvalid(f"bracket: {what} already at the smallest scanned cfl={lo}")
    for cfl in grid[1:]:
        if is_past(float(cfl)):
            return lo, float(cfl)
        lo = float(cfl)
    raise BracketInvalid(f"bracket: no {what} found for cfl up to {grid[-1]}")


def vn_scan(P: int, kind: str, omega, cfls: Sequence[float], cfl_ref: str = "min_spacing",
            alpha: float | None = None) -> List[Tuple[float, float]]:
    nodeset = make_nodes(P, kind, alpha)
    return [(float(c), amplification_at(nodeset, float(c), omega, cfl_ref)) for c in cfls]


def vn_stability_limit(P: int, kind: str, omega="upwind", bracket: Tuple[float, float] | None = None,
                       cfl_ref: str = "min_spacing", alpha: float | None = None,
                       growth_tol: float = VN_GROWTH_TOL, xtol: float = 1e-7) -> float:
    """
    Largest Courant number (in the cfl_ref convention) for which the center-node
    symbol satisfies max|g| <= 1 + growth_tol.
    """
    nodeset = make_nodes(P, kind, alpha)

    def excess(cfl):
        return amplification_at(nodeset, cfl, omega, cfl_ref) - 1.0 - growth_tol

    if bracket is None:
        bracket = _scan_for_sign_change(lambda c: excess(c) > 0.0, "instability")
    lo, hi = bracket
    if not 0 < lo < hi:
        raise BracketInvalid(f"bracket: expected 0 < lo < hi, got ({lo}, {hi})")
    if excess(lo) > 0.0 or excess(hi) <= 0.0:
        raise BracketInvalid(
            f"bracket: ({lo}, {hi}) must be stable at lo and unstable at hi for P={P} {kind} omega={omega}"
        )
    limit = float(bisect(excess, lo, hi, xtol=xtol))
    logger.info(f"VN limit P={P} {nodeset.label} omega={omega} ({cfl_ref}): {limit:.8f}")
    return limit


# ----------------------------------------------------------------------
# dispersion / diffusion
# ----------------------------------------------------------------------

def dispersion_curve(st: CenterStencil, disc: Discretization, thetas, mode: str = "exact_symbol",
                     terms: int = DEFAULT_TERMS) -> List[DispersionSample]:
    """
    kstar*dx = (i/nu) Log g(theta). Re compares to theta (phase), Im < 0 means damping.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.size == 0 or thetas.min() <= 0.0 or thetas.max() > np.pi + 1e-12:
        raise ConfigError("theta: dispersion grid must lie in (0, pi]")
    nu = disc.nu

    if mode == "exact_symbol":
        g = symbol(st, thetas)
        g = np.atleast_1d(g)
        if np.any(np.abs(g) < 1e-300):
            bad = thetas[np.argmin(np.abs(g))]
            raise BranchFailure(f"symbol vanishes near theta={bad:.6g}; logarithm undefined")
        log_g = np.log(np.abs(g)) + 1j * np.unwrap(np.angle(g))
        kstar = 1j * log_g / nu
        used_terms = None
    elif mode == "me_truncated":
        if terms < 2:
            raise ConfigError(f"terms: truncated series needs at least 2 terms, got {terms}")
        b = series_log(symbol_series(st, terms)).coefficients
        z = 1j * thetas
        series = sum(b[m] * z ** m for m in range(1, terms + 1))
        kstar = 1j * series / nu
        used_terms = terms
    else:
        raise ConfigError(f"mode: expected exact_symbol or me_truncated, got '{mode}'")

    return [
        DispersionSample(theta=float(t), re_kstar_dx=float(k.real), im_kstar_dx=float(k.imag),
                         mode=mode, terms=used_terms)
        for t, k in zip(thetas, kstar)
    ]


def default_theta_grid(points: int = DISPERSION_POINTS) -> np.ndarray:
    return np.linspace(np.pi / points, np.pi, points)


# ----------------------------------------------------------------------
# eigenvalue spectra
# ----------------------------------------------------------------------

def recursion_matrix(ops: ElementOperators, bc: str) -> np.ndarray:
    if bc == "periodic":
        return periodic_operator(ops)
    if bc == "zero_neighbor":
        return zero_neighbor_operator(ops)
    raise ConfigError(f"bc: expected periodic or zero_neighbor, got '{bc}'")


def spectrum_point(nodeset: NodeSet, cfl: float, omega, bc: str, cfl_ref: str = "min_spacing",
                   dx: float = 1.0, a: float = 1.0) -> np.ndarray:
    disc = Discretization.create(nodeset, cfl, omega, cfl_ref, a=a, dx=dx)
    try:
        return eigenvalues(recursion_matrix(assemble(nodeset, disc), bc))
    except NumericalError as e:
        raise type(e)(f"cfl={cfl:.6g}: {e}") from e


def is_complex_pair(values: np.ndarray, tol: float = MERGE_TOL) -> bool:
    return bool(np.any(np.abs(values.imag) > tol * (1.0 + np.abs(values))))


def spectrum_sweep(P: int, kind: str, dx: float, omega, bc: str, cfls: Sequence[float],
                   cfl_ref: str = "min_spacing", alpha: float | None = None,
                   runner=None) -> SpectrumReport:
    cfls = np.asarray(cfls, dtype=float)
    if cfls.size == 0 or np.any(np.diff(cfls) <= 0):
        raise ConfigError("cfl: sweep grid must be non-empty and strictly increasing")
    nodeset = make_nodes(P, kind, alpha)
    if bc not in BOUNDARY_KINDS:
        raise ConfigError(f"bc: expected one of {BOUNDARY_KINDS}, got '{bc}'")

    tasks = [(nodeset, float(c), omega, bc, cfl_ref, dx) for c in cfls]
    if runner is not None:
        spectra = runner.map(_spectrum_task, tasks)
    else:
        spectra = [_spectrum_task(t) for t in tasks]

    merge_point = None
    for c, values in zip(cfls, spectra):
        if is_complex_pair(values):
            merge_point = float(c)
            break

    return SpectrumReport(
        variable="cfl",
        values=cfls,
        eigenvalues=spectra,
        max_abs=np.array([np.max(np.abs(v)) for v in spectra]),
        merge_point=merge_point,
        provenance={"P": P, "kind": nodeset.label, "dx": dx, "omega": str(omega), "bc": bc,
                    "cfl_ref": cfl_ref, "d_min": nodeset.d_min},
    )


def _spectrum_task(task):
    nodeset, cfl, omega, bc, cfl_ref, dx = task
    return spectrum_point(nodeset, cfl, omega, bc, cfl_ref, dx)


# ----------------------------------------------------------------------
# block Fourier symbol
# ----------------------------------------------------------------------

def block_symbol(ops: ElementOperators, theta: float) -> np.ndarray:
    return ops.N_prev * np.exp(-1j * theta) + ops.N_self + ops.N_next * np.exp(1j * theta)


def block_symbol_branches(ops: ElementOperators, theta: float) -> np.ndarray:
    """Eigenvalues of the block symbol; the first entry is the largest in modulus."""
    return eigenvalues(block_symbol(ops, theta))


def block_symbol_radius(ops: ElementOperators, thetas=None) -> float:
    if thetas is None:
        thetas = np.arange(BLOCK_THETA_POINTS) * (2.0 * np.pi / BLOCK_THETA_POINTS)
    return float(max(np.max(np.abs(block_symbol_branches(ops, t))) for t in np.atleast_1d(thetas)))


# ----------------------------------------------------------------------
# coefficient sweep over omega
# ----------------------------------------------------------------------

def omega_sweep(P: int, kind: str, cfl: float, omegas: Sequence[float], orders: Sequence[int] = (2, 3, 4),
                cfl_ref: str = "min_spacing", alpha: float | None = None,
                a: float = 1.0, dx: float = 1.0) -> List[Tuple[float, int, float]]:
    """Rows (omega, m, a_m) of the Modified Equation coefficients as omega varies."""
    nodeset = make_nodes(P, kind, alpha)
    M = max(max(orders), 2)
    rows = []
    for omega in omegas:
        disc = Discretization.create(nodeset, cfl, float(omega), cfl_ref, a, dx)
        report = me_report(nodeset, disc, M)
        rows.extend((float(omega), m, report.coefficient(m)) for m in orders)
    return rows
