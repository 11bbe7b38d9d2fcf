"""Closed-form reference models for validation.

Plane channel flow with impermeable walls (Poiseuille) and with uniform wall
suction (Berman) give the axial pressure drop at mid-height in closed form;
the membrane law itself and the Van't Hoff osmotic pressure are pointwise
formulas.
"""

from dataclasses import dataclass

from .geometry import ChannelGeometry
from .params import PhysicalParams


@dataclass(frozen=True)
class FlowNumbers:
    """Cross-flow and wall Reynolds numbers built on the half-height
    d_tilde = d/2 (the Re convention carries a factor 4)."""

    Re: float
    Re_n: float
    d_tilde: float

    @classmethod
    def from_params(cls, params: PhysicalParams, geom: ChannelGeometry, v_w=0.0):
        dt = geom.d / 2.0
        return cls(
            Re=4.0 * params.rho0 * dt * params.u0 / params.mu0,
            Re_n=params.rho0 * dt * v_w / params.mu0,
            d_tilde=dt,
        )


def vant_hoff(theta: float, kappa: float) -> float:
    """Osmotic pressure kappa * theta [Pa]."""
    if theta < 0:
        raise ValueError(f"negative concentration {theta}")
    return kappa * theta


def darcy_starling(theta: float, params: PhysicalParams) -> float:
    """Pointwise membrane permeate velocity (dP - kappa*theta) / I0 [m/s].

    A negative value signals locally reversed (forward-osmosis) flux; the
    caller decides how to treat it."""
    if theta < 0:
        raise ValueError(f"negative concentration {theta}")
    return (params.dP - params.kappa * theta) / params.I0


def poiseuille_dp(x: float, params: PhysicalParams, geom: ChannelGeometry) -> float:
    """Impermeable-wall pressure drop p(0, d/2) - p(x, d/2).

    Algebraically equals 3 mu0 u0 x / d_tilde^2."""
    if not 0.0 <= x <= geom.L:
        raise ValueError(f"x={x} outside the channel [0, {geom.L}]")
    fn = FlowNumbers.from_params(params, geom)
    return (
        0.5 * params.rho0 * params.u0**2 * (24.0 / fn.Re) * (x / fn.d_tilde)
    )


def berman_dp(
    x: float, params: PhysicalParams, geom: ChannelGeometry, v_w: float
) -> float:
    """Pressure drop for a channel with constant wall suction velocity v_w;
    degenerates to the Poiseuille value at v_w = 0."""
    if not 0.0 <= x <= geom.L:
        raise ValueError(f"x={x} outside the channel [0, {geom.L}]")
    if v_w < 0:
        raise ValueError("wall velocity must be nonnegative")
    fn = FlowNumbers.from_params(params, geom, v_w=v_w)
    xs = x / fn.d_tilde
    return (
        0.5
        * params.rho0
        * params.u0**2
        * (24.0 / fn.Re - (648.0 / 35.0) * (fn.Re_n / fn.Re))
        * (1.0 - 2.0 * (fn.Re_n / fn.Re) * xs)
        * xs
    )
