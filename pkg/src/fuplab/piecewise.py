"""Piecewise-linear functions with exact Poisson-kernel integration.

Functions are zero outside their breakpoint span, linear between strictly
increasing breakpoints.  Sums are built from slope-change events (O(n log n)
for many bumps), maxima insert the pairwise crossing points, and the
integral against 1/(1+x^2) has a closed form per linear piece.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PiecewiseLinear:
    xs: np.ndarray  # strictly increasing breakpoints
    ys: np.ndarray  # values; zero outside [xs[0], xs[-1]]

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.size != ys.size:
            raise ValueError("xs and ys must have equal length")
        if xs.size and np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def zero(cls) -> "PiecewiseLinear":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def trapezoid(cls, lo: float, hi: float, height: float,
                  ramp: float) -> "PiecewiseLinear":
        """Plateau `height` on [lo, hi], linear ramps of width `ramp` to 0."""
        if hi < lo or ramp <= 0 or height < 0:
            raise ValueError("need lo <= hi, ramp > 0, height >= 0")
        if hi == lo:
            return cls([lo - ramp, lo, lo + ramp], [0.0, height, 0.0])
        return cls([lo - ramp, lo, hi, hi + ramp],
                   [0.0, height, height, 0.0])

    def __call__(self, x) -> np.ndarray:
        if self.xs.size == 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.interp(x, self.xs, self.ys, left=0.0, right=0.0)

    def scale(self, c: float) -> "PiecewiseLinear":
        return PiecewiseLinear(self.xs, self.ys * c)

    @property
    def support(self) -> tuple[float, float]:
        if self.xs.size == 0:
            return (0.0, 0.0)
        return (float(self.xs[0]), float(self.xs[-1]))

    def max_abs_slope(self) -> float:
        if self.xs.size < 2:
            return 0.0
        slopes = np.diff(self.ys) / np.diff(self.xs)
        edge = 0.0
        if self.ys[0] != 0.0 or self.ys[-1] != 0.0:
            edge = math.inf  # jump to the outside zero level
        return max(float(np.max(np.abs(slopes))), edge)

    def maximum(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        if self.xs.size == 0:
            return other
        if other.xs.size == 0:
            return self
        pts = set(self.xs.tolist()) | set(other.xs.tolist())
        pts.update(_crossings(self, other))
        xs = np.array(sorted(pts))
        ys = np.maximum(self(xs), other(xs))
        return PiecewiseLinear(xs, ys)

    def add(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        return sum_functions([self, other])

    def poisson_integral(self) -> float:
        """Exact integral of f(x) / (1 + x^2) over the real line."""
        total = 0.0
        for i in range(self.xs.size - 1):
            a, b = self.xs[i], self.xs[i + 1]
            ya, yb = self.ys[i], self.ys[i + 1]
            slope = (yb - ya) / (b - a)
            intercept = ya - slope * a
            total += slope * 0.5 * math.log((1 + b * b) / (1 + a * a))
            total += intercept * (math.atan(b) - math.atan(a))
        return total


def _crossings(f: PiecewiseLinear, g: PiecewiseLinear) -> list[float]:
    pts = np.array(sorted(set(f.xs.tolist()) | set(g.xs.tolist())))
    out = []
    fy, gy = f(pts), g(pts)
    for i in range(pts.size - 1):
        d0 = fy[i] - gy[i]
        d1 = fy[i + 1] - gy[i + 1]
        if d0 * d1 < 0:
            t = d0 / (d0 - d1)
            out.append(float(pts[i] + t * (pts[i + 1] - pts[i])))
    return out


def sum_functions(fns: list[PiecewiseLinear]) -> PiecewiseLinear:
    """Sum many piecewise-linear bumps via slope-change events."""
    events: dict[float, float] = {}
    anchors: set[float] = set()
    for f in fns:
        if f.xs.size < 2:
            continue
        if f.ys[0] != 0.0 or f.ys[-1] != 0.0:
            raise ValueError("summands must vanish at their support ends")
        slopes = np.diff(f.ys) / np.diff(f.xs)
        prev = 0.0
        for i, x in enumerate(f.xs):
            nxt = slopes[i] if i < slopes.size else 0.0
            delta = nxt - prev
            if delta != 0.0:
                events[float(x)] = events.get(float(x), 0.0) + delta
            anchors.add(float(x))
            prev = nxt
    if not anchors:
        return PiecewiseLinear.zero()
    xs = np.array(sorted(anchors))
    ys = np.zeros_like(xs)
    slope = 0.0
    val = 0.0
    prev_x = xs[0]
    for i, x in enumerate(xs):
        val += slope * (x - prev_x)
        ys[i] = val
        slope += events.get(float(x), 0.0)
        prev_x = x
    # accumulated roundoff can leave a stray tail; pin the end to zero
    ys[-1] = 0.0
    return PiecewiseLinear(xs, ys)
