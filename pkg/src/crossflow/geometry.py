"""Channel and spacer geometry descriptions.

The feed channel is the rectangle [0, L] x [0, d] with membranes on the two
horizontal walls.  Spacer filaments of diameter ``d_S`` can be attached to
the bottom membrane (cavity), to alternating membranes (zig-zag), or float
at mid-height (submerged).
"""

from dataclasses import dataclass, field
from enum import Enum


class SpacerConfig(str, Enum):
    NO_SPACERS = "no_spacers"
    CAVITY = "cavity"
    ZIGZAG = "zigzag"
    SUBMERGED = "submerged"


class GradingMode(str, Enum):
    UNIFORM = "uniform"
    TOWARD_MEMBRANE = "toward_membrane"


# Standard channel unit: 28 mil feed gap, square footprint.
STANDARD_L = 1.5e-2
STANDARD_D = 7.4e-4
STANDARD_W = 1.5e-2
STANDARD_DS = 3.6e-4


@dataclass(frozen=True)
class ChannelGeometry:
    """Channel dimensions and spacer layout.

    ``W`` is the out-of-plane width and only enters post-processing.
    ``spacer_x`` lists the filament centers; when empty and the configuration
    has spacers, ``n_spacers`` equally spaced centers are generated.
    """

    L: float
    d: float
    W: float
    d_S: float = 0.0
    config: SpacerConfig = SpacerConfig.NO_SPACERS
    n_spacers: int = 3
    spacer_x: tuple = ()

    def __post_init__(self):
        if self.L <= 0 or self.d <= 0 or self.W <= 0:
            raise ValueError("channel dimensions L, d, W must be positive")
        config = SpacerConfig(self.config)
        object.__setattr__(self, "config", config)
        if config is SpacerConfig.NO_SPACERS:
            if self.spacer_x:
                raise ValueError("spacer_x given but config is no_spacers")
            object.__setattr__(self, "spacer_x", ())
            return
        if not 0 < self.d_S < self.d:
            raise ValueError(
                f"spacer diameter d_S={self.d_S} must lie in (0, d={self.d})"
            )
        xs = tuple(float(x) for x in self.spacer_x)
        if not xs:
            if self.n_spacers < 1:
                raise ValueError("n_spacers must be >= 1 when config has spacers")
            xs = tuple(
                i * self.L / (self.n_spacers + 1) for i in range(1, self.n_spacers + 1)
            )
        object.__setattr__(self, "spacer_x", xs)
        object.__setattr__(self, "n_spacers", len(xs))
        r = self.d_S / 2.0
        for i, x in enumerate(xs):
            if not r < x < self.L - r:
                raise ValueError(
                    f"spacer center {x} must lie in ({r}, {self.L - r})"
                )
            if i > 0 and x - xs[i - 1] <= self.d_S:
                raise ValueError(
                    f"spacers at x={xs[i - 1]} and x={x} overlap "
                    f"(gap must exceed d_S={self.d_S})"
                )

    def spacer_circles(self):
        """Filament cross-sections as (cx, cy, radius) triples."""
        r = self.d_S / 2.0
        if self.config is SpacerConfig.NO_SPACERS:
            return []
        if self.config is SpacerConfig.CAVITY:
            return [(x, 0.0, r) for x in self.spacer_x]
        if self.config is SpacerConfig.ZIGZAG:
            return [
                (x, 0.0 if i % 2 == 0 else self.d, r)
                for i, x in enumerate(self.spacer_x)
            ]
        return [(x, self.d / 2.0, r) for x in self.spacer_x]

    @classmethod
    def standard(cls, config=SpacerConfig.NO_SPACERS, n_spacers=3, spacer_x=()):
        """The standard membrane channel unit used throughout the test suite."""
        return cls(
            L=STANDARD_L,
            d=STANDARD_D,
            W=STANDARD_W,
            d_S=STANDARD_DS if SpacerConfig(config) is not SpacerConfig.NO_SPACERS else 0.0,
            config=SpacerConfig(config),
            n_spacers=n_spacers,
            spacer_x=spacer_x,
        )


@dataclass(frozen=True)
class GradingSpec:
    """Vertical mesh grading: ``n_y`` cells across the height, geometric ratio
    toward the membrane walls (finest cells at the walls)."""

    mode: GradingMode = GradingMode.UNIFORM
    n_y: int = 8
    ratio: float = 1.0

    def __post_init__(self):
        mode = GradingMode(self.mode)
        object.__setattr__(self, "mode", mode)
        if self.n_y < 2:
            raise ValueError(f"n_y={self.n_y} must be >= 2")
        if self.ratio < 1.0:
            raise ValueError(f"grading ratio {self.ratio} must be >= 1")
        if mode is GradingMode.UNIFORM and self.ratio != 1.0:
            raise ValueError("uniform grading forces ratio = 1")
