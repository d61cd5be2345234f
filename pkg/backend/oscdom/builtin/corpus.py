"""
Test-function generators. Every member is supported in [-1.5, 1.5]^n and is
meant to be sampled on a box of half-width >= 2, so it is compactly supported
inside the grid.
"""
import numpy as np

from oscdom.field import GridFunction
from oscdom.params import Configurable, FloatParam, IntParam

SUPPORT_HALF_WIDTH = 1.5


def smoothstep(t):
    """Quintic S(t) = 6t^5 - 15t^4 + 10t^3 on [0, 1], clamped outside"""
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (t * (6.0 * t - 15.0) + 10.0)


def plateau_profile(t, core=1.0, ramp=0.5):
    """1 on |t| <= core, C^2 descent to 0 at |t| = core + ramp"""
    return 1.0 - smoothstep((np.abs(t) - core) / ramp)


class CorpusGenerator(Configurable):
    """Base class of corpus members. `smooth` marks C^2 members (usable for ∇f)."""
    display_name = "Generator"
    smooth = False
    uses_rng = False

    def evaluate(self, points, rng):
        raise NotImplementedError

    def generate(self, grid, rng=None):
        if self.uses_rng and rng is None:
            raise ValueError(f"{type(self).__name__} needs a random stream")
        return GridFunction.sample(grid, lambda p: self.evaluate(p, rng), compact=True)


class PlateauGenerator(CorpusGenerator):
    """
    Smooth plateau with a small ripple: ≈1 on the core cube [-1, 1]^n, where
    every cube has small oscillation relative to its average.
    """
    display_name = "Plateau"
    smooth = True
    params = [
        FloatParam("ripple", "Ripple amplitude ε", value=0.05, min=0.0, max=0.5),
        FloatParam("frequency", "Ripple frequency", value=8.0, min=0.0),
    ]

    def evaluate(self, points, rng):
        base = np.prod(plateau_profile(points), axis=1)
        return base * (1.0 + self.ripple * np.sin(2.0 * np.pi * self.frequency * points[:, 0]))


class BumpGenerator(CorpusGenerator):
    """(1 - |x|²/r²)^3 on the ball of radius r"""
    display_name = "Bump"
    smooth = True
    params = [FloatParam("radius", "Radius", value=1.0, min=0.05, max=SUPPORT_HALF_WIDTH)]

    def evaluate(self, points, rng):
        r2 = np.sum(points ** 2, axis=1) / self.radius ** 2
        return np.clip(1.0 - r2, 0.0, None) ** 3


class TrigGenerator(CorpusGenerator):
    """Random trigonometric polynomial times the plateau cutoff"""
    display_name = "Trigonometric"
    smooth = True
    uses_rng = True
    params = [IntParam("terms", "Number of modes", value=4, min=1, max=32)]

    def evaluate(self, points, rng):
        n = points.shape[1]
        amps = rng.normal(size=self.terms)
        freqs = rng.integers(1, 9, size=(self.terms, n))
        phases = rng.uniform(0.0, 2.0 * np.pi, size=self.terms)
        waves = np.cos(np.pi * points @ freqs.T + phases) @ amps
        return waves * np.prod(plateau_profile(points), axis=1)


class PiecewiseGenerator(CorpusGenerator):
    """
    Random piecewise-quadratic function on [-1.5, 1.5] (a product of two such
    factors in 2-D); discontinuous at the breakpoints.
    """
    display_name = "Piecewise"
    uses_rng = True
    params = [IntParam("pieces", "Number of pieces", value=5, min=1, max=64)]

    def _factor(self, t, rng):
        w = SUPPORT_HALF_WIDTH
        breaks = np.concatenate([[-w], np.sort(rng.uniform(-w, w, size=self.pieces - 1)), [w]])
        coeffs = rng.normal(size=(self.pieces, 3))
        idx = np.clip(np.searchsorted(breaks, t, side="right") - 1, 0, self.pieces - 1)
        c = coeffs[idx]
        out = c[:, 0] + c[:, 1] * t + c[:, 2] * t ** 2
        return np.where(np.abs(t) <= w, out, 0.0)

    def evaluate(self, points, rng):
        out = np.ones(len(points))
        for axis in range(points.shape[1]):
            out *= self._factor(points[:, axis], rng)
        return out


class IndicatorGenerator(CorpusGenerator):
    display_name = "Indicator"
    params = [FloatParam("half_width", "Half width", value=1.0, min=0.0, max=SUPPORT_HALF_WIDTH)]

    def evaluate(self, points, rng):
        return np.all(np.abs(points) <= self.half_width, axis=1).astype(float)


class SmoothedIndicatorGenerator(CorpusGenerator):
    display_name = "Smoothed indicator"
    smooth = True
    params = [
        FloatParam("half_width", "Half width", value=1.0, min=0.0, max=1.0),
        FloatParam("ramp", "Ramp width", value=0.25, min=0.01, max=0.5),
    ]

    def evaluate(self, points, rng):
        return np.prod(plateau_profile(points, self.half_width, self.ramp), axis=1)


class ZeroGenerator(CorpusGenerator):
    display_name = "Zero"
    smooth = True

    def evaluate(self, points, rng):
        return np.zeros(len(points))


# name -> (generator key, params); the 12 default members
DEFAULT_CORPUS = (
    ("plateau", "plateau", {"ripple": 0.05, "frequency": 8.0}),
    ("plateau-fine", "plateau", {"ripple": 0.02, "frequency": 4.0}),
    ("bump", "bump", {"radius": 1.0}),
    ("bump-narrow", "bump", {"radius": 0.5}),
    ("trig-3", "trig", {"terms": 3}),
    ("trig-5", "trig", {"terms": 5}),
    ("trig-8", "trig", {"terms": 8}),
    ("piecewise-3", "piecewise", {"pieces": 3}),
    ("piecewise-5", "piecewise", {"pieces": 5}),
    ("piecewise-9", "piecewise", {"pieces": 9}),
    ("indicator", "indicator", {"half_width": 1.0}),
    ("indicator-smooth", "smooth-indicator", {"half_width": 1.0, "ramp": 0.25}),
)
