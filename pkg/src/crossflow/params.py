"""Fluid, membrane, and solver parameters."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalParams:
    """Operating constants.

    rho0    fluid density [kg/m^3]
    mu0     dynamic viscosity [kg/(m s)]
    D0      solute diffusivity [m^2/s]
    kappa   Van't Hoff coefficient [Pa m^3/mol]
    I0      membrane resistance [Pa s/m]
    dP      transmembrane pressure [Pa]
    u0      mean inlet velocity [m/s]
    theta0  inlet molar concentration [mol/m^3]

    ``kappa`` and ``theta0`` may be zero (degenerate validation states); the
    remaining constants must be strictly positive, and ``dP > kappa*theta0``
    or the unit would run in forward osmosis.
    """

    rho0: float
    mu0: float
    D0: float
    kappa: float
    I0: float
    dP: float
    u0: float
    theta0: float

    def __post_init__(self):
        for name in ("rho0", "mu0", "D0", "I0", "dP", "u0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.kappa < 0 or self.theta0 < 0:
            raise ValueError("kappa and theta0 must be nonnegative")
        if self.dP <= self.kappa * self.theta0:
            raise ValueError(
                f"forward osmosis: transmembrane pressure dP={self.dP} Pa does not "
                f"exceed the inlet osmotic pressure kappa*theta0="
                f"{self.kappa * self.theta0} Pa"
            )

    @classmethod
    def seawater(cls, dP=4053000.0, u0=0.129, theta0=600.0):
        """Seawater feed at the standard operating point."""
        return cls(
            rho0=1027.2,
            mu0=8.9e-4,
            D0=1.5e-9,
            kappa=4955.144,
            I0=8.41e10,
            dP=dP,
            u0=u0,
            theta0=theta0,
        )


@dataclass(frozen=True)
class NitscheParams:
    """Penalty constant for the weak membrane condition; the per-edge mesh
    size entering the penalty is the local boundary-edge length."""

    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("Nitsche penalty constant alpha must be positive")
