import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from src.basis import NodeSet, make_nodes, vandermonde
from src.errors import ConfigError, DivergenceDetected
from src.linalg import solve
from src.operators import Discretization, ElementOperators, assemble

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12
QUADRATURE_POINTS = 16
# history sampling interval that keeps only the initial and final norms
FINAL_ONLY = 10 ** 9

# Gauss-Legendre rule mapped to the centered element coordinate [-1/2, 1/2]
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(QUADRATURE_POINTS)
GL_CHI = 0.5 * _GL_NODES
GL_WEIGHTS = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True)
class Mesh:
    """K equal elements on the periodic domain [0, 1]."""
    K: int
    nodeset: NodeSet

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError(f"elements: need at least one element, got {self.K}")

    @property
    def dx(self) -> float:
        return 1.0 / self.K

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.K) + 0.5) * self.dx

    def coordinates(self, chi=None) -> np.ndarray:
        """Global x of local points chi (default: the nodes); shape (K, len(chi))."""
        chi = self.nodeset.nodes if chi is None else np.asarray(chi)
        return self.centers[:, None] + chi[None, :] * self.dx


@dataclass
class SimState:
    mesh: Mesh
    t: float
    Q: np.ndarray
    step_count: int = 0


@dataclass(frozen=True)
class SimulationConfig:
    P: int
    kind: str = "chebyshev"
    K: int = 10
    cfl: float = 0.1
    cfl_ref: str = "min_spacing"
    omega: str | float = "upwind"
    t_end: float = 1.0
    a: float = 1.0
    alpha: float | None = None
    history_every: int = 1

    def __post_init__(self):
        if self.t_end < 0:
            raise ConfigError(f"t_end: must be >= 0, got {self.t_end}")
        if self.history_every < 1:
            raise ConfigError(f"history_every: must be >= 1, got {self.history_every}")


@dataclass
class RunReport:
    l2_error: float
    nodal_rms_error: float
    mass: float
    norm_history: List[Tuple[float, float]]
    cond_vstar: float
    config: Dict
    final_state: SimState | None = field(default=None, repr=False)

    @property
    def norm_ratio(self) -> float:
        return self.norm_history[-1][1] / self.norm_history[0][1]


def sine_wave(x, t: float = 0.0, a: float = 1.0):
    return np.sin(2.0 * np.pi * (x - a * t))


def init_sine(mesh: Mesh) -> SimState:
    return SimState(mesh=mesh, t=0.0, Q=sine_wave(mesh.coordinates()))


def step(state: SimState, ops: ElementOperators, dt: float | None = None) -> SimState:
    """One update of every element, neighbours taken with periodic wraparound."""
    dt = ops.disc.dt if dt is None else dt
    Q = state.Q
    Q_new = (np.roll(Q, 1, axis=0) @ ops.N_prev.T
             + Q @ ops.N_self.T
             + np.roll(Q, -1, axis=0) @ ops.N_next.T)

    if not np.all(np.isfinite(Q_new)) or np.max(np.abs(Q_new)) > DIVERGENCE_LIMIT:
        raise DivergenceDetected(
            f"|Q| exceeded {DIVERGENCE_LIMIT:.0e} at step {state.step_count + 1} (t={state.t + dt:.6g})",
            state=state,
        )
    return SimState(mesh=state.mesh, t=state.t + dt, Q=Q_new, step_count=state.step_count + 1)


def _element_coefficients(state: SimState) -> np.ndarray:
    """Monomial coefficients per element, shape (P+1, K)."""
    nodeset = state.mesh.nodeset
    return solve(vandermonde(nodeset.nodes, nodeset.size), state.Q.T)


def _quadrature_values(state: SimState) -> np.ndarray:
    coeffs = _element_coefficients(state)
    return (vandermonde(GL_CHI, state.mesh.nodeset.size) @ coeffs).T


def l2_error(state: SimState, exact: Callable) -> float:
    mesh = state.mesh
    diff = _quadrature_values(state) - exact(mesh.coordinates(GL_CHI))
    return float(math.sqrt(mesh.dx * np.sum(GL_WEIGHTS[None, :] * diff ** 2)))


def l2_norm(state: SimState) -> float:
    return l2_error(state, lambda x: np.zeros_like(x))


def nodal_rms_error(state: SimState, exact: Callable) -> float:
    diff = state.Q - exact(state.mesh.coordinates())
    return float(np.sqrt(np.mean(diff ** 2)))


def mass(state: SimState) -> float:
    """Sum over elements of the element integral of the polynomial solution."""
    return float(state.mesh.dx * np.sum(GL_WEIGHTS[None, :] * _quadrature_values(state)))


def damping_rate(history: Sequence[Tuple[float, float]], start: int, stop: int) -> float:
    """Exponential rate of the norm between two history samples."""
    (t0, n0), (t1, n1) = history[start], history[stop]
    return math.log(n1 / n0) / (t1 - t0)


class Simulation:
    """
    Owns one advection run: builds the mesh and operators once, then steps
    to t_end, landing exactly on it with a shortened final step.
    """

    def __init__(self, config: SimulationConfig):
        self.config = config
        self.nodeset = make_nodes(config.P, config.kind, config.alpha)
        self.mesh = Mesh(K=config.K, nodeset=self.nodeset)
        self.disc = Discretization.create(self.nodeset, config.cfl, config.omega, config.cfl_ref,
                                          a=config.a, dx=self.mesh.dx)
        self.ops = assemble(self.nodeset, self.disc)
        self.history: List[Tuple[float, float]] = []

    def exact(self, t: float) -> Callable:
        return lambda x: sine_wave(x, t, self.config.a)

    def _record(self, state: SimState):
        self.history.append((state.t, l2_norm(state)))
        self._recorded_step = state.step_count

    def config_echo(self) -> Dict:
        echo = asdict(self.config)
        echo.update({
            "kind": self.nodeset.label,
            "omega_resolved": self.disc.omega,
            "dt": self.disc.dt,
            "nu": self.disc.nu,
            "dx": self.mesh.dx,
            "d_min": self.nodeset.d_min,
        })
        return echo

    def run(self) -> RunReport:
        cfg = self.config
        dt = self.disc.dt
        n_full = int(math.floor(cfg.t_end / dt))
        remainder = cfg.t_end - n_full * dt

        state = init_sine(self.mesh)
        self.history = []
        self._record(state)
        logger.info(
            f"Running P={cfg.P} {self.nodeset.label} K={cfg.K} cfl={cfg.cfl} ({cfg.cfl_ref}) "
            f"omega={self.disc.omega:.6g} dt={dt:.6g}: {n_full} steps to t={cfg.t_end}"
        )

        try:
            for _ in range(n_full):
                state = step(state, self.ops)
                if state.step_count % cfg.history_every == 0:
                    self._record(state)

            if remainder > 1e-12 * dt:
                last_ops = assemble(self.nodeset, self.disc.with_dt(remainder))
                state = step(state, last_ops, remainder)
            if state.step_count > 0:
                state.t = cfg.t_end
                if self._recorded_step == state.step_count:
                    self.history[-1] = (state.t, self.history[-1][1])
                else:
                    self._record(state)
        except DivergenceDetected as e:
            logger.error(f"Run diverged: {e}")
            e.history = list(self.history)
            raise

        exact = self.exact(cfg.t_end)
        report = RunReport(
            l2_error=l2_error(state, exact),
            nodal_rms_error=nodal_rms_error(state, exact),
            mass=mass(state),
            norm_history=list(self.history),
            cond_vstar=self.ops.cond_vstar,
            config=self.config_echo(),
            final_state=state,
        )
        self._log_results(report, state)
        return report

    def _log_results(self, report: RunReport, state: SimState):
        logger.info("-" * 50)
        logger.info(f"Finished {state.step_count} steps at t={state.t:.6g}")
        logger.info(f"L2 error={report.l2_error:.6e} nodal RMS={report.nodal_rms_error:.6e} "
                    f"mass={report.mass:.6e} norm ratio={report.norm_ratio:.6g}")
        logger.info("-" * 50)


def run(config: SimulationConfig) -> RunReport:
    return Simulation(config).run()


@dataclass
class ConvergenceTable:
    P: int
    rows: List[Tuple[int, float, float]]
    order: float

    def local_orders(self) -> List[float | None]:
        orders = [None]
        for (k0, e0, _), (k1, e1, _) in zip(self.rows, self.rows[1:]):
            orders.append(math.log(e0 / e1) / math.log(k1 / k0))
        return orders


def fitted_order(Ks: Sequence[int], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(1/K)."""
    slope, _ = np.polyfit(np.log(1.0 / np.asarray(Ks, dtype=float)), np.log(np.asarray(errors)), 1)
    return float(slope)


def _convergence_task(config: SimulationConfig) -> Tuple[int, float, float]:
    report = run(config)
    return config.K, report.l2_error, report.nodal_rms_error


def convergence_study(P: int, kind: str, omega, cfl: float, Ks: Sequence[int], t_end: float = 1.0,
                      cfl_ref: str = "min_spacing", alpha: float | None = None,
                      runner=None) -> ConvergenceTable:
    if len(Ks) < 2:
        raise ConfigError("elements: a convergence study needs at least two element counts")
    configs = [SimulationConfig(P=P, kind=kind, K=int(K), cfl=cfl, cfl_ref=cfl_ref, omega=str(omega),
                                t_end=t_end, alpha=alpha, history_every=FINAL_ONLY)
               for K in sorted(Ks)]
    if runner is not None:
        rows = runner.map(_convergence_task, configs)
    else:
        rows = [_convergence_task(c) for c in configs]

    order = fitted_order([r[0] for r in rows], [r[1] for r in rows])
    logger.info(f"Convergence P={P} {kind}: fitted order {order:.4f}")
    return ConvergenceTable(P=P, rows=rows, order=order)
