import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossflow.geometry import ChannelGeometry, GradingSpec, SpacerConfig


def test_standard_channel_dimensions():
    g = ChannelGeometry.standard()
    assert g.L == 1.5e-2
    assert g.d == 7.4e-4
    assert g.W == 1.5e-2
    assert g.config is SpacerConfig.NO_SPACERS


def test_default_spacer_positions_equally_spaced():
    g = ChannelGeometry.standard(config="cavity", n_spacers=3)
    assert g.spacer_x == tuple(i * g.L / 4 for i in (1, 2, 3))
    assert g.d_S == 3.6e-4


def test_rejects_nonpositive_dimensions():
    with pytest.raises(ValueError):
        ChannelGeometry(L=0.0, d=1.0, W=1.0)
    with pytest.raises(ValueError):
        ChannelGeometry(L=1.0, d=-1.0, W=1.0)


def test_rejects_spacer_diameter_not_below_height():
    with pytest.raises(ValueError, match="d_S"):
        ChannelGeometry(L=1.0, d=0.1, W=1.0, d_S=0.1, config="cavity")


def test_rejects_overlapping_spacers():
    with pytest.raises(ValueError, match="overlap"):
        ChannelGeometry(
            L=1.0, d=0.1, W=1.0, d_S=0.05, config="cavity", spacer_x=(0.5, 0.54)
        )


def test_rejects_spacer_outside_channel():
    with pytest.raises(ValueError):
        ChannelGeometry(
            L=1.0, d=0.1, W=1.0, d_S=0.05, config="cavity", spacer_x=(0.01,)
        )


def test_rejects_decreasing_spacer_positions():
    with pytest.raises(ValueError):
        ChannelGeometry(
            L=1.0, d=0.1, W=1.0, d_S=0.05, config="cavity", spacer_x=(0.6, 0.3)
        )


def test_spacer_circles_by_configuration():
    g = ChannelGeometry.standard(config="zigzag", n_spacers=3)
    circles = g.spacer_circles()
    assert [cy for _, cy, _ in circles] == [0.0, g.d, 0.0]
    g = ChannelGeometry.standard(config="submerged", n_spacers=2)
    assert all(cy == g.d / 2 for _, cy, _ in g.spacer_circles())
    assert all(r == g.d_S / 2 for _, _, r in g.spacer_circles())


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=6),
    ds_frac=st.floats(min_value=0.1, max_value=0.9),
)
def test_generated_spacers_always_valid(n, ds_frac):
    g = ChannelGeometry(
        L=1.5e-2, d=7.4e-4, W=1.5e-2, d_S=ds_frac * 7.4e-4, config="cavity",
        n_spacers=n,
    )
    xs = g.spacer_x
    assert len(xs) == n
    r = g.d_S / 2
    assert all(r < x < g.L - r for x in xs)
    assert all(xs[i + 1] - xs[i] > g.d_S for i in range(n - 1))


def test_grading_spec_invariants():
    with pytest.raises(ValueError):
        GradingSpec(n_y=1)
    with pytest.raises(ValueError):
        GradingSpec(n_y=4, ratio=0.8)
    with pytest.raises(ValueError):
        GradingSpec(mode="uniform", n_y=4, ratio=1.2)
    spec = GradingSpec(mode="toward_membrane", n_y=8, ratio=1.3)
    assert spec.ratio == 1.3
