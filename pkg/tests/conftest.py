import numpy as np
import pytest

import crossflow as cf


@pytest.fixture(scope="session")
def coarse_darcy():
    """Small coupled solve at the standard operating point, shared by the
    behavioral tests (not accuracy-critical)."""
    geom = cf.ChannelGeometry.standard()
    params = cf.PhysicalParams.seawater()
    mesh = cf.build_rectangle_mesh(
        geom, cf.GradingSpec(mode="toward_membrane", n_y=8, ratio=1.4)
    )
    fields, trace = cf.picard_solve(
        mesh, cf.FemSpaces(), params, cf.NitscheParams(1.0),
        cf.SolverControl(), membrane="darcy",
    )
    return {
        "geom": geom,
        "params": params,
        "mesh": mesh,
        "fields": fields,
        "trace": trace,
    }


@pytest.fixture(scope="session")
def coarse_impermeable():
    geom = cf.ChannelGeometry.standard()
    params = cf.PhysicalParams.seawater()
    mesh = cf.build_rectangle_mesh(
        geom, cf.GradingSpec(mode="toward_membrane", n_y=8, ratio=1.4)
    )
    fields, trace = cf.picard_solve(
        mesh, cf.FemSpaces(), params, cf.NitscheParams(1.0),
        cf.SolverControl(), membrane="impermeable", solve_transport=False,
    )
    return {"geom": geom, "params": params, "mesh": mesh, "fields": fields}
