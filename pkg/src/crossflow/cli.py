"""Command-line interface.

Subcommands: mesh, run, validate, mesh-study, sweep.  All physics comes from
the JSON configuration file; only the output directory (CROSSFLOW_OUT) and
worker count (CROSSFLOW_JOBS) can be overridden from the environment, and
explicit flags win over both.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 I/O error.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .geometry import STANDARD_DS, ChannelGeometry, GradingSpec, SpacerConfig
from .mesh import mesh_quality
from .msh_io import MshParseError, write_msh
from .oracles import berman_dp, poiseuille_dp
from .params import PhysicalParams
from .postproc import (
    boundary_flux_report,
    concentration_undershoot,
    export_csv,
    membrane_flux_report,
    permeate_profile,
    pressure_drop_profile,
    total_mass_flow,
    volumetric_flow_per_width,
)
from .solver import (
    LinearSolveError,
    NonConvergenceError,
    SolverControl,
    compute_residuals,
    picard_solve,
)
from .spaces import FemSpaces
from .vtk_io import export_vtk

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _resolve_out(flag_value, config: RunConfig):
    if flag_value:
        return flag_value
    env = os.environ.get("CROSSFLOW_OUT")
    if env:
        return env
    return config.output_dir


def _resolve_jobs(flag_value):
    if flag_value:
        return max(1, int(flag_value))
    env = os.environ.get("CROSSFLOW_JOBS")
    if env:
        return max(1, int(env))
    return 1


def _solve(config: RunConfig, mesh, physics=None):
    physics = physics if physics is not None else config.physics
    return picard_solve(
        mesh,
        FemSpaces(),
        physics,
        config.nitsche,
        config.solver,
        membrane="darcy",
    )


def cmd_mesh(config: RunConfig, out_dir=None):
    """Build (or import) the mesh and report statistics."""
    mesh = config.build_mesh()
    report = mesh_quality(mesh).as_dict()
    report["run_id"] = config.run_id
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_msh(mesh, os.path.join(out_dir, "channel.msh"))
    return report


def cmd_run(config: RunConfig, out_dir):
    """Solve the configured case and write VTK/CSV artifacts plus a report."""
    os.makedirs(out_dir, exist_ok=True)
    mesh = config.build_mesh()
    fields, trace = _solve(config, mesh)

    vw = volumetric_flow_per_width(fields, mesh)
    mtot = total_mass_flow(fields, mesh, config.geometry, config.physics)
    bounds = membrane_flux_report(fields, mesh, config.physics)
    balance = boundary_flux_report(fields, mesh)
    residuals = compute_residuals(
        mesh, FemSpaces(), config.physics, config.nitsche, config.solver, fields
    )
    report = {
        "run_id": config.run_id,
        "converged": trace.converged,
        "iterations": trace.iterations,
        "volumetric_flow_per_width": vw,
        "total_mass_flow": mtot,
        "flux_max_violation": bounds.max_violation,
        "theta_min": float(fields.theta.min()),
        "theta_max": float(fields.theta.max()),
        "theta_undershoot": concentration_undershoot(fields),
        "mass_balance": {
            "inlet": balance.inlet,
            "outlet": balance.outlet,
            "membrane": balance.membrane,
            "wall": balance.wall,
            "relative_imbalance": balance.relative_imbalance,
        },
        "residual_flow": residuals.flow_rel,
        "residual_transport": residuals.transport_rel,
    }
    if "vtk" in config.formats:
        export_vtk(fields, mesh, os.path.join(out_dir, "solution.vtk"))
    if "csv" in config.formats:
        profiles = [pressure_drop_profile(fields, mesh)]
        for wall in ("bottom", "top"):
            puy, pth = permeate_profile(fields, mesh, wall)
            profiles.extend([puy, pth])
        export_csv(profiles, os.path.join(out_dir, "profiles.csv"), config.run_id)
        with open(os.path.join(out_dir, "trace.csv"), "w") as fh:
            fh.write("iteration,u_increment,theta_increment\n")
            for k, (du, dth) in enumerate(
                zip(trace.u_increments, trace.theta_increments), start=1
            ):
                fh.write(f"{k},{du:.12e},{dth:.12e}\n")
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def cmd_validate(case: str, config: RunConfig, out_dir=None, v_w=None):
    """Pressure-drop comparison against the closed-form channel models."""
    case = case.lower()
    if case not in ("poiseuille", "berman"):
        raise ConfigError(f"unknown validation case {case!r}")
    mesh = config.build_mesh()
    if case == "poiseuille":
        fields, _ = picard_solve(
            mesh, FemSpaces(), config.physics, config.nitsche, config.solver,
            membrane="impermeable", solve_transport=False,
        )
        exact = lambda x: poiseuille_dp(x, config.physics, config.geometry)
    else:
        flux = config.physics.dP / config.physics.I0 if v_w is None else float(v_w)
        fields, _ = picard_solve(
            mesh, FemSpaces(), config.physics, config.nitsche, config.solver,
            membrane="fixed_flux", fixed_flux=flux, solve_transport=False,
        )
        exact = lambda x: berman_dp(x, config.physics, config.geometry, flux)

    profile = pressure_drop_profile(fields, mesh, n_samples=11)
    rows = []
    for x, computed in zip(profile.x[1:], profile.values[1:]):
        ana = exact(x)
        rel = abs(computed - ana) / abs(ana)
        rows.append({"x": float(x), "analytic": ana, "computed": float(computed), "rel_err": rel})
    report = {
        "case": case,
        "run_id": config.run_id,
        "rows": rows,
        "max_rel_err": max(r["rel_err"] for r in rows),
    }
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, f"validate_{case}.csv"), "w") as fh:
            fh.write("x,analytic,computed,rel_err\n")
            for r in rows:
                fh.write(
                    f"{r['x']:.12e},{r['analytic']:.12e},"
                    f"{r['computed']:.12e},{r['rel_err']:.12e}\n"
                )
    return report


def _study_ladder(config: RunConfig, refinement: str, levels):
    if refinement == "uniform":
        levels = levels or [2 * j for j in range(1, 8)]
        return [GradingSpec(mode="uniform", n_y=n, ratio=1.0) for n in levels]
    levels = levels or [5 * j for j in range(1, 5)]
    ratio = config.grading.ratio if config.grading is not None else 1.5
    return [GradingSpec(mode="toward_membrane", n_y=n, ratio=ratio) for n in levels]


def cmd_mesh_study(config: RunConfig, out_dir, refinement="toward_membrane", levels=None):
    """Nonlinear solve over a refinement ladder; records cells vs total mass flow."""
    from .mesh import build_rectangle_mesh

    geom = config.geometry
    if geom.config is not SpacerConfig.NO_SPACERS:
        raise ConfigError("mesh-study runs on the spacer-free channel")
    rows = []
    prev = None
    for spec in _study_ladder(config, refinement, levels):
        mesh = build_rectangle_mesh(geom, spec)
        fields, _ = _solve(config, mesh)
        mtot = total_mass_flow(fields, mesh, geom, config.physics)
        rel = abs(mtot - prev) / abs(prev) if prev is not None else float("nan")
        rows.append({"n_y": spec.n_y, "cells": mesh.n_cells, "mtot": mtot, "rel_change": rel})
        prev = mtot
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        name = f"mesh_study_{refinement}.csv"
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write("n_y,cells,mtot_kg_per_s,rel_change\n")
            for r in rows:
                fh.write(
                    f"{r['n_y']},{r['cells']},{r['mtot']:.12e},{r['rel_change']:.12e}\n"
                )
    return rows


def _sweep_geometry(base: ChannelGeometry, name: str) -> ChannelGeometry:
    d_S = base.d_S if base.d_S > 0 else STANDARD_DS
    spacer_x = base.spacer_x if base.config is SpacerConfig(name) else ()
    return ChannelGeometry(
        L=base.L, d=base.d, W=base.W, d_S=d_S, config=SpacerConfig(name),
        n_spacers=base.n_spacers, spacer_x=spacer_x,
    )


def _sweep_point(args):
    config, name, u0, dP = args
    geom = _sweep_geometry(config.geometry, name)
    physics = replace(config.physics, u0=u0, dP=dP)
    from .mesh import build_spacer_mesh

    mesh = build_spacer_mesh(geom, config.grading)
    fields, trace = picard_solve(
        mesh, FemSpaces(), physics, config.nitsche, config.solver, membrane="darcy"
    )
    return {
        "configuration": name,
        "u0": u0,
        "dP": dP,
        "V_per_W": volumetric_flow_per_width(fields, mesh),
        "iterations": trace.iterations,
    }


def cmd_sweep(config: RunConfig, out_dir, jobs=1):
    """Permeate-flow table over configurations x inlet velocities x pressures."""
    points = [
        (config, name, u0, dP)
        for name in config.sweep_configs
        for dP in config.sweep_dP
        for u0 in config.sweep_u0
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, points))
    else:
        rows = [_sweep_point(p) for p in points]
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "sweep.csv"), "w") as fh:
            fh.write("configuration,u0_m_per_s,dP_Pa,V_per_W_m3_per_s_per_m\n")
            for r in rows:
                fh.write(
                    f"{r['configuration']},{r['u0']:.6g},{r['dP']:.6g},"
                    f"{r['V_per_W']:.12e}\n"
                )
    return rows


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="crossflow",
        description="Finite element simulator for reverse-osmosis cross-flow channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("mesh", help="build the mesh and print quality statistics")
    add_common(p)

    p = sub.add_parser("run", help="solve the configured case and write artifacts")
    add_common(p)

    p = sub.add_parser("validate", help="compare against closed-form channel models")
    add_common(p)
    p.add_argument("--case", required=True, choices=["poiseuille", "berman"])
    p.add_argument("--vw", type=float, default=None, help="wall velocity override (berman)")

    p = sub.add_parser("mesh-study", help="total-mass-flow stability over refinements")
    add_common(p)
    p.add_argument(
        "--refinement", choices=["uniform", "toward_membrane"], default="toward_membrane"
    )
    p.add_argument("--levels", type=int, nargs="*", default=None, help="n_y ladder")

    p = sub.add_parser("sweep", help="permeate-flow parameter sweep")
    add_common(p)
    p.add_argument("--jobs", type=int, default=None, help="parallel workers")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out_dir = _resolve_out(args.out, config)
        if args.command == "mesh":
            report = cmd_mesh(config, args.out)
            print(json.dumps(report, indent=2, sort_keys=True))
        elif args.command == "run":
            report = cmd_run(config, out_dir)
            print(json.dumps(report, indent=2, sort_keys=True))
        elif args.command == "validate":
            report = cmd_validate(args.case, config, args.out, v_w=args.vw)
            print(f"# {args.case} validation, run {report['run_id']}")
            print(f"{'x':>14} {'analytic':>14} {'computed':>14} {'rel_err':>10}")
            for r in report["rows"]:
                print(
                    f"{r['x']:14.6e} {r['analytic']:14.6e} "
                    f"{r['computed']:14.6e} {r['rel_err']:10.3e}"
                )
            print(f"max relative error: {report['max_rel_err']:.3e}")
        elif args.command == "mesh-study":
            rows = cmd_mesh_study(config, out_dir, args.refinement, args.levels)
            print("cells,mtot_kg_per_s,rel_change")
            for r in rows:
                print(f"{r['cells']},{r['mtot']:.6e},{r['rel_change']:.3e}")
        elif args.command == "sweep":
            rows = cmd_sweep(config, out_dir, _resolve_jobs(args.jobs))
            print("configuration,u0_m_per_s,dP_Pa,V_per_W_m3_per_s_per_m")
            for r in rows:
                print(
                    f"{r['configuration']},{r['u0']:.6g},{r['dP']:.6g},{r['V_per_W']:.6e}"
                )
        return EXIT_OK
    except (ConfigError, MshParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, LinearSolveError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
