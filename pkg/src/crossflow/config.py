"""JSON run configuration.

Every section is optional; omitted values fall back to the standard channel
unit and seawater operating point.  Schema (all SI units):

{
  "geometry": {"L", "d", "W", "d_S", "config", "n_spacers", "spacer_x"},
  "physics":  {"rho0", "mu0", "D0", "kappa", "I0", "dP", "u0", "theta0"},
  "nitsche":  {"alpha"},
  "solver":   {"tol_rel", "max_outer", "relaxation", "supg"},
  "mesh":     {"mode", "n_y", "ratio"}  or  {"msh_path"},
  "sweep":    {"configs", "u0", "dP"},
  "output":   {"dir", "formats"}
}
"""

import hashlib
import json
import os
from dataclasses import dataclass, field

from .geometry import ChannelGeometry, GradingMode, GradingSpec, SpacerConfig
from .mesh import Mesh, build_rectangle_mesh, build_spacer_mesh
from .msh_io import read_msh
from .params import NitscheParams, PhysicalParams
from .solver import SolverControl

DEFAULT_SWEEP_CONFIGS = ["cavity", "submerged", "zigzag"]
DEFAULT_SWEEP_U0 = [0.258, 0.129, 0.0645]
DEFAULT_SWEEP_DP = [4053000.0, 5572875.0]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    geometry: ChannelGeometry
    physics: PhysicalParams
    nitsche: NitscheParams
    solver: SolverControl
    grading: GradingSpec = None
    msh_path: str = None
    output_dir: str = "out"
    formats: tuple = ("vtk", "csv")
    sweep_configs: list = field(default_factory=lambda: list(DEFAULT_SWEEP_CONFIGS))
    sweep_u0: list = field(default_factory=lambda: list(DEFAULT_SWEEP_U0))
    sweep_dP: list = field(default_factory=lambda: list(DEFAULT_SWEEP_DP))
    run_id: str = "run"

    def build_mesh(self) -> Mesh:
        if self.msh_path is not None:
            return read_msh(self.msh_path)
        if self.geometry.config is SpacerConfig.NO_SPACERS:
            return build_rectangle_mesh(self.geometry, self.grading)
        return build_spacer_mesh(self.geometry, self.grading)


def _section(data, name, allowed):
    sect = data.get(name, {})
    if not isinstance(sect, dict):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(sect) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in section {name!r}: {sorted(unknown)}")
    return sect


def parse_config(data: dict, base_dir=".") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a JSON object")
    unknown = set(data) - {
        "geometry", "physics", "nitsche", "solver", "mesh", "sweep", "output",
    }
    if unknown:
        raise ConfigError(f"unknown top-level sections: {sorted(unknown)}")

    g = _section(data, "geometry", ("L", "d", "W", "d_S", "config", "n_spacers", "spacer_x"))
    cfg_name = g.get("config", "no_spacers")
    try:
        spacer_config = SpacerConfig(cfg_name)
    except ValueError:
        raise ConfigError(f"unknown spacer configuration {cfg_name!r}")
    try:
        geometry = ChannelGeometry(
            L=float(g.get("L", 1.5e-2)),
            d=float(g.get("d", 7.4e-4)),
            W=float(g.get("W", 1.5e-2)),
            d_S=float(
                g.get("d_S", 3.6e-4 if spacer_config is not SpacerConfig.NO_SPACERS else 0.0)
            ),
            config=spacer_config,
            n_spacers=int(g.get("n_spacers", 3)),
            spacer_x=tuple(g.get("spacer_x", ())),
        )
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc

    ph = _section(
        data, "physics", ("rho0", "mu0", "D0", "kappa", "I0", "dP", "u0", "theta0")
    )
    try:
        physics = PhysicalParams(
            rho0=float(ph.get("rho0", 1027.2)),
            mu0=float(ph.get("mu0", 8.9e-4)),
            D0=float(ph.get("D0", 1.5e-9)),
            kappa=float(ph.get("kappa", 4955.144)),
            I0=float(ph.get("I0", 8.41e10)),
            dP=float(ph.get("dP", 4053000.0)),
            u0=float(ph.get("u0", 0.129)),
            theta0=float(ph.get("theta0", 600.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"physics: {exc}") from exc

    ni = _section(data, "nitsche", ("alpha",))
    try:
        nitsche = NitscheParams(alpha=float(ni.get("alpha", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"nitsche: {exc}") from exc

    so = _section(data, "solver", ("tol_rel", "max_outer", "relaxation", "supg"))
    try:
        solver = SolverControl(
            tol_rel=float(so.get("tol_rel", 1e-8)),
            max_outer=int(so.get("max_outer", 100)),
            relaxation=float(so.get("relaxation", 1.0)),
            supg=bool(so.get("supg", True)),
        )
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc

    me = _section(data, "mesh", ("mode", "n_y", "ratio", "msh_path"))
    msh_path = me.get("msh_path")
    grading = None
    if msh_path is not None:
        msh_path = os.path.join(base_dir, msh_path)
        if not os.path.isfile(msh_path):
            raise ConfigError(f"mesh file does not exist: {msh_path}")
    else:
        mode = me.get("mode", "toward_membrane")
        try:
            grading = GradingSpec(
                mode=GradingMode(mode),
                n_y=int(me.get("n_y", 20)),
                ratio=float(
                    me.get("ratio", 1.0 if GradingMode(mode) is GradingMode.UNIFORM else 1.5)
                ),
            )
        except ValueError as exc:
            raise ConfigError(f"mesh: {exc}") from exc

    sw = _section(data, "sweep", ("configs", "u0", "dP"))
    sweep_configs = list(sw.get("configs", DEFAULT_SWEEP_CONFIGS))
    for name in sweep_configs:
        if SpacerConfig(name) is SpacerConfig.NO_SPACERS:
            raise ConfigError("sweep configurations must have spacers")
    sweep_u0 = [float(v) for v in sw.get("u0", DEFAULT_SWEEP_U0)]
    sweep_dP = [float(v) for v in sw.get("dP", DEFAULT_SWEEP_DP)]

    out = _section(data, "output", ("dir", "formats"))
    output_dir = out.get("dir", "out")
    formats = tuple(out.get("formats", ("vtk", "csv")))
    for fmt in formats:
        if fmt not in ("vtk", "csv"):
            raise ConfigError(f"unknown output format {fmt!r}")

    canon = json.dumps(data, sort_keys=True, separators=(",", ":"))
    run_id = hashlib.sha256(canon.encode()).hexdigest()[:10]

    return RunConfig(
        geometry=geometry,
        physics=physics,
        nitsche=nitsche,
        solver=solver,
        grading=grading,
        msh_path=msh_path,
        output_dir=output_dir,
        formats=formats,
        sweep_configs=sweep_configs,
        sweep_u0=sweep_u0,
        sweep_dP=sweep_dP,
        run_id=run_id,
    )


def load_config(path) -> RunConfig:
    path = str(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})")
    return parse_config(data, base_dir=os.path.dirname(os.path.abspath(path)))
