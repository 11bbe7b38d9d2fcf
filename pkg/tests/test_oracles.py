import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossflow.geometry import ChannelGeometry
from crossflow.oracles import (
    FlowNumbers,
    berman_dp,
    darcy_starling,
    poiseuille_dp,
    vant_hoff,
)
from crossflow.params import PhysicalParams

GEOM = ChannelGeometry.standard()
PARAMS = PhysicalParams.seawater()


class TestVantHoff:
    def test_zero(self):
        assert vant_hoff(0.0, 4955.144) == 0.0

    def test_seawater_value(self):
        # 4955.144 * 600 = 2.9731e6 Pa
        assert vant_hoff(600.0, 4955.144) == pytest.approx(2.9730864e6, rel=1e-6)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            vant_hoff(-1.0, 4955.144)

    @settings(max_examples=30, deadline=None)
    @given(theta=st.floats(0.0, 1e4), kappa=st.floats(0.0, 1e5))
    def test_linear(self, theta, kappa):
        assert vant_hoff(2.0 * theta, kappa) == pytest.approx(
            2.0 * vant_hoff(theta, kappa), abs=1e-300
        )


class TestDarcyStarling:
    def test_pure_water_flux_low_pressure(self):
        assert darcy_starling(0.0, PARAMS) == pytest.approx(4.8193e-5, rel=1e-4)

    def test_pure_water_flux_high_pressure(self):
        p = PhysicalParams.seawater(dP=5572875.0)
        assert darcy_starling(0.0, p) == pytest.approx(6.6265e-5, rel=1e-4)

    def test_inlet_concentration_flux(self):
        assert darcy_starling(600.0, PARAMS) == pytest.approx(1.2841e-5, rel=1e-4)

    def test_osmotic_retardation_speed(self):
        # kappa*theta0/I0 at the standard operating point
        assert PARAMS.kappa * 600.0 / PARAMS.I0 == pytest.approx(3.5352e-5, rel=1e-4)


class TestFlowNumbers:
    def test_reynolds_convention(self):
        fn = FlowNumbers.from_params(PARAMS, GEOM)
        assert fn.d_tilde == GEOM.d / 2
        assert fn.Re == pytest.approx(220.35, rel=1e-4)
        assert fn.Re_n == 0.0

    def test_wall_reynolds(self):
        fn = FlowNumbers.from_params(PARAMS, GEOM, v_w=4.8193e-5)
        assert fn.Re_n == pytest.approx(0.020582, rel=1e-4)


class TestPoiseuille:
    def test_zero_at_inlet(self):
        assert poiseuille_dp(0.0, PARAMS, GEOM) == 0.0

    def test_full_channel_drop(self):
        assert poiseuille_dp(GEOM.L, PARAMS, GEOM) == pytest.approx(37.74, abs=0.01)

    def test_rejects_outside_channel(self):
        with pytest.raises(ValueError):
            poiseuille_dp(-0.1 * GEOM.L, PARAMS, GEOM)
        with pytest.raises(ValueError):
            poiseuille_dp(1.1 * GEOM.L, PARAMS, GEOM)

    @settings(max_examples=30, deadline=None)
    @given(
        x=st.floats(1e-5, 1.5e-2),
        u0=st.floats(1e-3, 1.0),
        mu0=st.floats(1e-4, 1e-2),
    )
    def test_algebraic_identity(self, x, u0, mu0):
        # (rho u0^2 / 2)(24/Re)(x/d~) == 3 mu0 u0 x / d~^2
        p = PhysicalParams(
            rho0=1027.2, mu0=mu0, D0=1.5e-9, kappa=0.0, I0=8.41e10, dP=1e6,
            u0=u0, theta0=0.0,
        )
        dt = GEOM.d / 2
        assert poiseuille_dp(x, p, GEOM) == pytest.approx(
            3.0 * mu0 * u0 * x / dt**2, rel=1e-12
        )

    def test_linear_in_x(self):
        a = poiseuille_dp(GEOM.L / 3, PARAMS, GEOM)
        b = poiseuille_dp(2 * GEOM.L / 3, PARAMS, GEOM)
        assert b == pytest.approx(2 * a, rel=1e-12)


class TestBerman:
    def test_degenerates_to_poiseuille(self):
        for x in np.linspace(0, GEOM.L, 7):
            assert berman_dp(x, PARAMS, GEOM, 0.0) == pytest.approx(
                poiseuille_dp(x, PARAMS, GEOM), rel=1e-14, abs=1e-300
            )

    def test_below_poiseuille_for_suction(self):
        vw = PARAMS.dP / PARAMS.I0
        assert berman_dp(GEOM.L, PARAMS, GEOM, vw) < poiseuille_dp(GEOM.L, PARAMS, GEOM)

    def test_monotone_in_x(self):
        vw = PARAMS.dP / PARAMS.I0
        xs = np.linspace(0, GEOM.L, 50)
        vals = [berman_dp(x, PARAMS, GEOM, vw) for x in xs]
        assert np.all(np.diff(vals) > 0)

    def test_pressure_case_insensitivity(self):
        # The two operating pressures give wall velocities whose pressure-drop
        # curves differ by less than 1% of the Poiseuille drop everywhere.
        vw1 = 4053000.0 / PARAMS.I0
        vw2 = 5572875.0 / PARAMS.I0
        for x in np.linspace(GEOM.L / 20, GEOM.L, 20):
            diff = abs(
                berman_dp(x, PARAMS, GEOM, vw1) - berman_dp(x, PARAMS, GEOM, vw2)
            )
            assert diff < 0.01 * poiseuille_dp(x, PARAMS, GEOM)

    def test_rejects_negative_wall_velocity(self):
        with pytest.raises(ValueError):
            berman_dp(GEOM.L / 2, PARAMS, GEOM, -1e-5)


def test_viscous_loss_below_one_percent_of_dp():
    # Self-check of the constant-transmembrane-pressure assumption over the
    # operating grid.
    for u0 in (0.0645, 0.129, 0.258):
        for dP in (4053000.0, 5572875.0):
            p = PhysicalParams.seawater(dP=dP, u0=u0)
            assert poiseuille_dp(GEOM.L, p, GEOM) < 0.01 * dP


def test_params_reject_forward_osmosis():
    with pytest.raises(ValueError, match="forward osmosis"):
        PhysicalParams.seawater(dP=2.0e6)  # below kappa*theta0 = 2.97e6


def test_params_reject_nonpositive():
    with pytest.raises(ValueError):
        PhysicalParams(
            rho0=0.0, mu0=1e-3, D0=1e-9, kappa=1.0, I0=1.0, dP=10.0, u0=0.1, theta0=1.0
        )
