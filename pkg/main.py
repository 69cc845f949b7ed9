import argparse
import logging
import sys

import numpy as np

from src.analysis import (
    block_symbol_radius,
    default_theta_grid,
    dispersion_curve,
    me_report,
    omega_sweep,
    spectrum_sweep,
    vn_scan,
    vn_stability_limit,
    zero_diffusion_omega,
)
from src.basis import make_nodes
from src.errors import ConfigError, DegenerateDependence, NumericalError
from src.operators import Discretization, assemble, center_stencil
from src.report_writer import Artifact, ReportWriter
from src.run_config import COMMANDS, RunConfig
from src.solver import Simulation, SimulationConfig, convergence_study
from src.sweep_runner import SweepRunner

logger = logging.getLogger("main")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_INTERRUPTED = 130


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as configuration errors instead of exiting."""

    def error(self, message):
        raise ConfigError(f"arguments: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="File of 'key = value' lines; flags override it.")
    common.add_argument("--format", choices=["csv", "json"], help="Artifact format (default csv).")
    common.add_argument("--output", help="Artifact path (default <artifact>.<format>).")
    common.add_argument("--workers", help="Processes used by sweep commands (default 1).")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level on stderr.")

    scheme = _Parser(add_help=False)
    scheme.add_argument("--p", help="Polynomial degree P >= 0.")
    scheme.add_argument("--nodes", help="chebyshev, uniform or alpha:<float> (P=1 only).")
    scheme.add_argument("--cfl-ref", help="min_spacing or element (default: element for P=0, min_spacing otherwise).")
    scheme.add_argument("--omega", help="'upwind' or a Lax-Friedrichs omega.")

    stepping = _Parser(add_help=False)
    stepping.add_argument("--cfl", help="Courant number.")

    parser = _Parser(description="Semi-Lagrangian spectral element advection: runs and analysis.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("simulate", parents=[common, scheme, stepping], help="Advect sin(2 pi x) to t_end.")
    p.add_argument("--elements", help="Number of elements K.")
    p.add_argument("--t-end", help="Final time.")
    p.add_argument("--history-every", help="Record the L2 norm every N steps.")

    p = sub.add_parser("convergence", parents=[common, scheme, stepping], help="h-refinement study.")
    p.add_argument("--elements", help="Comma separated element counts, e.g. 10,20,40.")
    p.add_argument("--t-end", help="Final time.")

    p = sub.add_parser("mea", parents=[common, scheme, stepping], help="Modified Equation coefficients.")
    p.add_argument("--terms", help="Highest derivative order.")
    p.add_argument("--dx", help="Element width.")

    p = sub.add_parser("dispersion", parents=[common, scheme, stepping], help="Effective wavenumber curves.")
    p.add_argument("--terms", help="Series order for me_truncated.")
    p.add_argument("--mode", help="exact_symbol, me_truncated or both.")
    p.add_argument("--points", help="Number of theta samples in (0, pi].")

    p = sub.add_parser("vn", parents=[common, scheme], help="Von Neumann limit of the center stencil.")
    p.add_argument("--bracket", help="lo:hi cfl bracket for the limit (default: scanned).")
    p.add_argument("--cfls", help="lo:hi:step grid for the max|g| table.")

    p = sub.add_parser("spectrum", parents=[common, scheme], help="Single-element eigenvalue sweep.")
    p.add_argument("--bc", help="periodic or zero_neighbor.")
    p.add_argument("--dx", help="Element width.")
    p.add_argument("--cfls", help="lo:hi:step cfl grid.")

    sub.add_parser("stencil", parents=[common, scheme, stepping], help="Center-node stencil weights.")

    p = sub.add_parser("omega-sweep", parents=[common, scheme, stepping], help="a_m as omega varies.")
    p.add_argument("--omegas", help="lo:hi:step omega grid.")
    p.add_argument("--orders", help="Comma separated derivative orders (default 2,3,4).")
    return parser


def configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _discretization(cfg: RunConfig, dx: float = 1.0):
    nodeset = make_nodes(cfg.p, cfg.nodes)
    return nodeset, Discretization.create(nodeset, cfg.cfl, cfg.omega, cfg.cfl_ref, dx=dx)


def run_simulate(cfg: RunConfig, runner: SweepRunner):
    sim = Simulation(SimulationConfig(P=cfg.p, kind=cfg.nodes, K=cfg.K, cfl=cfg.cfl, cfl_ref=cfg.cfl_ref,
                                      omega=cfg.omega, t_end=cfg.t_end, history_every=cfg.history_every))
    report = sim.run()
    state = report.final_state
    x = state.mesh.coordinates()
    exact = sim.exact(state.t)(x)
    order = np.argsort(x, axis=None, kind="stable")
    rows = [(x.flat[i], state.t, state.Q.flat[i], exact.flat[i]) for i in order]
    artifact = Artifact(
        name="solution",
        columns=("x", "t", "q", "q_exact"),
        rows=rows,
        header=report.config,
        summary={
            "l2_error": report.l2_error,
            "nodal_rms_error": report.nodal_rms_error,
            "mass": report.mass,
            "norm_ratio": report.norm_ratio,
            "cond_vstar": report.cond_vstar,
        },
    )
    return artifact, f"L2 error={report.l2_error:.6e}"


def run_convergence(cfg: RunConfig, runner: SweepRunner):
    table = convergence_study(cfg.p, cfg.nodes, cfg.omega, cfg.cfl, cfg.elements, cfg.t_end,
                              cfg.cfl_ref, runner=runner)
    rows = [(K, table.P, l2, rms, est) for (K, l2, rms), est in zip(table.rows, table.local_orders())]
    artifact = Artifact(
        name="convergence",
        columns=("K", "P", "l2_error", "nodal_rms", "est_order"),
        rows=rows,
        header={**cfg.echo(), "t_end": cfg.t_end},
        summary={"order": table.order},
    )
    return artifact, f"order={table.order:.4f}"


def run_mea(cfg: RunConfig, runner: SweepRunner):
    nodeset, disc = _discretization(cfg, cfg.dx)
    report = me_report(nodeset, disc, cfg.terms)
    rows = [(m, report.a[m], report.b[m]) for m in range(1, report.order + 1)]
    summary = {f"reference[{c.label}]": c.reference for c in report.comparisons}
    artifact = Artifact(
        name="mea",
        columns=("m", "a_m", "b_m"),
        rows=rows,
        header={**cfg.echo(), "omega_resolved": disc.omega, "dx": disc.dx, "dt": disc.dt, "nu": disc.nu,
                "terms": cfg.terms},
        summary=summary,
    )
    return artifact, f"a_2={report.diffusion:.10g}"


def run_dispersion(cfg: RunConfig, runner: SweepRunner):
    nodeset, disc = _discretization(cfg)
    st = center_stencil(assemble(nodeset, disc))
    thetas = default_theta_grid(cfg.points)
    modes = ("exact_symbol", "me_truncated") if cfg.mode == "both" else (cfg.mode,)
    rows = []
    for mode in modes:
        samples = dispersion_curve(st, disc, thetas, mode=mode, terms=cfg.terms)
        rows.extend((s.theta, s.re_kstar_dx, s.im_kstar_dx, s.mode, s.terms) for s in samples)
    worst = max(r[2] for r in rows)
    artifact = Artifact(
        name="dispersion",
        columns=("theta", "re_kstar_dx", "im_kstar_dx", "mode", "terms"),
        rows=rows,
        header={**cfg.echo(), "omega_resolved": disc.omega, "nu": disc.nu},
    )
    return artifact, f"max im_kstar_dx={worst:.6g}"


def run_vn(cfg: RunConfig, runner: SweepRunner):
    limit = vn_stability_limit(cfg.p, cfg.nodes, cfg.omega, bracket=cfg.bracket, cfl_ref=cfg.cfl_ref)
    rows = vn_scan(cfg.p, cfg.nodes, cfg.omega, cfg.cfls, cfg.cfl_ref)
    summary = {"limit": limit}
    if cfg.format == "json":
        nodeset = make_nodes(cfg.p, cfg.nodes)
        disc = Discretization.create(nodeset, limit, cfg.omega, cfg.cfl_ref)
        summary["block_symbol_radius"] = block_symbol_radius(assemble(nodeset, disc))
    header = cfg.echo()
    header.pop("cfl")
    artifact = Artifact(name="vn", columns=("cfl", "max_abs_g"), rows=rows, header=header, summary=summary)
    return artifact, f"limit={limit:.6g}"


def run_spectrum(cfg: RunConfig, runner: SweepRunner):
    report = spectrum_sweep(cfg.p, cfg.nodes, cfg.dx, cfg.omega, cfg.bc, cfg.cfls, cfg.cfl_ref, runner=runner)
    rows = [(c, i, lam.real, lam.imag)
            for c, values in zip(report.values, report.eigenvalues)
            for i, lam in enumerate(values)]
    artifact = Artifact(
        name="spectrum",
        columns=("cfl", "index", "re_lambda", "im_lambda"),
        rows=rows,
        header=report.provenance,
        summary={"merge_point": report.merge_point},
    )
    merge = "none" if report.merge_point is None else f"{report.merge_point:.6g}"
    return artifact, f"merge_point={merge}"


def run_stencil(cfg: RunConfig, runner: SweepRunner):
    nodeset, disc = _discretization(cfg)
    st = center_stencil(assemble(nodeset, disc))
    artifact = Artifact(
        name="stencil",
        columns=("offset", "weight"),
        rows=st.entries,
        header={**st.provenance, "cfl_ref": cfg.cfl_ref},
        summary={"weight_sum": st.moment(0), "first_moment": st.moment(1)},
    )
    return artifact, f"{len(st.entries)} weights, sum={st.moment(0):.15g}"


def run_omega_sweep(cfg: RunConfig, runner: SweepRunner):
    rows = omega_sweep(cfg.p, cfg.nodes, cfg.cfl, cfg.omegas, cfg.orders, cfg.cfl_ref)
    try:
        critical = zero_diffusion_omega(cfg.p, cfg.nodes, cfg.cfl, cfg.cfl_ref)
    except DegenerateDependence as e:
        logger.warning(f"No zero-diffusion omega: {e}")
        critical = None
    header = cfg.echo()
    header.pop("omega")
    artifact = Artifact(
        name="omega_sweep",
        columns=("omega", "m", "a_m"),
        rows=rows,
        header=header,
        summary={"zero_diffusion_omega": critical},
    )
    shown = "none" if critical is None else f"{critical:.6g}"
    return artifact, f"zero_diffusion_omega={shown}"


HANDLERS = {
    "simulate": run_simulate,
    "convergence": run_convergence,
    "mea": run_mea,
    "dispersion": run_dispersion,
    "vn": run_vn,
    "spectrum": run_spectrum,
    "stencil": run_stencil,
    "omega-sweep": run_omega_sweep,
}


def dispatch(argv) -> int:
    """Runs one command; returns the process exit code."""
    configure_logging("--verbose" in argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command not in COMMANDS:
            raise ConfigError(f"command: expected one of {', '.join(COMMANDS)}")
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
        cfg = RunConfig.resolve(args.command, flags, args.config)

        runner = SweepRunner(cfg.workers)
        artifact, result = HANDLERS[cfg.command](cfg, runner)
        path = ReportWriter(cfg.format).write(artifact, cfg.output)
        print(f"{cfg.command}: {result} -> {path}")
        return EXIT_OK

    except ConfigError as e:
        print(f"Configuration Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"Numerical Error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        print("\nStopping application...", file=sys.stderr)
        return EXIT_INTERRUPTED


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
