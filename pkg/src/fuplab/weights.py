"""Slow-decay weights, dyadic band coverings, and admissible weight functions.

theta(xi) = (log(10 + |xi|))^-delta parametrizes the admissible Fourier
decay class; the scaled set is covered band by band with intervals of length
2^k theta(2^k), whose counts obey N_k <= C theta(2^k)^-(1-eps) for porous
sets with eps = 1 - log(m-1)/log m, m = ceil(2/nu).  The weight w is a sum
of trapezoid bumps over the covering plus a low-frequency patch, and its
Poisson integral is computed in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .intervals import IntervalSet, _as_rational
from .piecewise import PiecewiseLinear, sum_functions


@dataclass(frozen=True)
class ThetaWeight:
    """theta(xi) = (log(10+|xi|))^-delta; positive, even, decreasing, with
    xi*theta(xi) increasing."""

    delta: float
    m: Optional[int] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1)")

    def __call__(self, xi) -> np.ndarray:
        return np.log(10.0 + np.abs(np.asarray(xi, dtype=float))) ** (-self.delta)

    def xi_theta(self, xi) -> np.ndarray:
        return np.abs(np.asarray(xi, dtype=float)) * self(xi)


def choose_delta(nu) -> ThetaWeight:
    """m = ceil(2/nu), eps = 1 - log(m-1)/log m, delta the midpoint of
    (1/(1+eps), 1); guarantees delta < 1 and delta*(1+eps) > 1."""
    nu = _as_rational(nu)
    if not (0 < nu < 1):
        raise ValueError("nu must lie in (0, 1)")
    m = math.ceil(Fraction(2) / nu)
    eps = 1.0 - math.log(m - 1) / math.log(m)
    delta = (1.0 / (1.0 + eps) + 1.0) / 2.0
    if not (delta < 1.0 and delta * (1.0 + eps) > 1.0):
        raise AssertionError("delta selection failed its defining inequalities")
    return ThetaWeight(delta=delta, m=m, epsilon=eps)


@dataclass(frozen=True)
class BandCover:
    k: int
    length: float          # covering interval length 2^k theta(2^k)
    intervals: tuple[tuple[float, float], ...]

    @property
    def count(self) -> int:
        return len(self.intervals)


@dataclass(frozen=True)
class CoveringReport:
    K: int
    theta: ThetaWeight
    bands: tuple[BandCover, ...]
    epsilon: float
    slope_fit: float
    C_fit: float

    @property
    def counts(self) -> list[int]:
        return [b.count for b in self.bands]


def _greedy_cover(pieces: list[tuple[Fraction, Fraction]],
                  length: Fraction,
                  mirrored: bool = False) -> list[tuple[float, float]]:
    """Minimal covering of a union of intervals by fixed-length intervals:
    place each cover with its left edge at the leftmost uncovered point.

    Negative-axis bands use the mirrored sweep (right edge at the rightmost
    uncovered point) so symmetric sets receive symmetric coverings.
    """
    if mirrored:
        flipped = [(-hi, -lo) for lo, hi in reversed(pieces)]
        return [(-b, -a) for a, b in reversed(_greedy_cover(flipped, length))]
    out = []
    i = 0
    covered_to: Optional[Fraction] = None
    while i < len(pieces):
        lo, hi = pieces[i]
        if covered_to is None or lo > covered_to:
            start = lo
        elif hi > covered_to:
            start = covered_to
        else:
            i += 1
            continue
        out.append((float(start), float(start + length)))
        covered_to = start + length
        if hi <= covered_to:
            i += 1
    return out


def band_intervals(k: int) -> list[tuple[Fraction, Fraction]]:
    """J_0 = [-1, 1]; J_k = [-2^k, -2^(k-1)] u [2^(k-1), 2^k] for k >= 1."""
    if k == 0:
        return [(Fraction(-1), Fraction(1))]
    return [(Fraction(-(2 ** k)), Fraction(-(2 ** (k - 1)))),
            (Fraction(2 ** (k - 1)), Fraction(2 ** k))]


def cover_bands(ytilde: IntervalSet, K: int, theta: ThetaWeight) -> CoveringReport:
    """Greedy minimal covering of ytilde inside each dyadic band.

    Covering intervals in band k have length 2^k theta(2^k); counts N_k are
    fitted as log N_k against -log theta(2^k), the slope to be compared with
    1 - eps.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    bands = []
    for k in range(K + 1):
        length = Fraction(2 ** k) * Fraction(float(theta(2 ** k)))
        covers: list[tuple[float, float]] = []
        for b_lo, b_hi in band_intervals(k):
            part = ytilde.intersect(IntervalSet([(b_lo, b_hi)]))
            covers.extend(_greedy_cover(list(part.intervals), length,
                                        mirrored=b_hi <= 0))
        bands.append(BandCover(k=k, length=float(length),
                               intervals=tuple(covers)))
    xs, ys = [], []
    for b in bands:
        if b.count >= 1:
            xs.append(-math.log(float(theta(2 ** b.k))))
            ys.append(math.log(b.count))
    if len(xs) >= 2 and max(xs) > min(xs):
        slope, intercept = np.polyfit(np.array(xs), np.array(ys), 1)
    else:
        slope, intercept = 0.0, (ys[0] if ys else 0.0)
    eps = theta.epsilon if theta.epsilon is not None else math.nan
    return CoveringReport(K=K, theta=theta, bands=tuple(bands), epsilon=eps,
                          slope_fit=float(slope), C_fit=math.exp(float(intercept)))


@dataclass(frozen=True)
class WeightFunction:
    pieces: PiecewiseLinear
    theta: ThetaWeight
    slope_bound: float

    def __call__(self, xi) -> np.ndarray:
        return self.pieces(xi)


def _lipschitz_upper(theta: ThetaWeight, halfwidth: float,
                     spacing: float = 0.125) -> PiecewiseLinear:
    """Piecewise-linear upper bound of |xi| theta(xi) on [-hw, hw].

    |d/dxi (xi theta)| <= theta(0) < 1, so f(x) <= f(node) + |x - node| on
    each cell; the bound tapers linearly (slope 1) to zero outside so the
    composite weight keeps a finite slope.
    """
    nodes = np.arange(-halfwidth, halfwidth + spacing / 2, spacing)
    vals = theta.xi_theta(nodes)
    xs, ys = [], []
    peak_l = vals[0]
    xs.append(nodes[0] - peak_l)
    ys.append(0.0)
    for i in range(nodes.size - 1):
        a, b = nodes[i], nodes[i + 1]
        fa, fb = vals[i] + 0.0, vals[i + 1] + 0.0
        # apex of min(fa + (x-a), fb + (b-x)) in [a, b]
        x_star = (fb - fa + a + b) / 2.0
        y_star = fa + (x_star - a)
        xs.extend([a, x_star])
        ys.extend([fa, y_star])
    xs.append(nodes[-1])
    ys.append(vals[-1])
    xs.append(nodes[-1] + vals[-1])
    ys.append(0.0)
    keep_x, keep_y = [xs[0]], [ys[0]]
    for x, y in zip(xs[1:], ys[1:]):
        if x > keep_x[-1]:
            keep_x.append(x)
            keep_y.append(y)
    return PiecewiseLinear(keep_x, keep_y)


def build_weight(
    report: CoveringReport,
    ramp_fraction: float = 1.0,
    patch_halfwidth: float = 32.0,
) -> WeightFunction:
    """w = 10 * sum of trapezoid bumps, patched at low frequency.

    Each bump plateaus at 2^k theta(2^k) on its covering interval and ramps
    to zero across ramp_fraction of the same length (slope 1/ramp_fraction
    per bump, <= 100 for ramp_fraction >= 0.01); the patch takes the
    pointwise max with a Lipschitz-1 upper bound of |xi| theta(xi) on
    [-patch_halfwidth, patch_halfwidth].
    """
    if not (0.01 <= ramp_fraction <= 1.0):
        raise ValueError("ramp_fraction must lie in [0.01, 1]")
    bumps = []
    for band in report.bands:
        height = band.length
        ramp = ramp_fraction * band.length
        for lo, hi in band.intervals:
            bumps.append(PiecewiseLinear.trapezoid(lo, hi, height, ramp))
    base = sum_functions(bumps).scale(10.0)
    patch = _lipschitz_upper(report.theta, patch_halfwidth)
    w = base.maximum(patch)
    return WeightFunction(pieces=w, theta=report.theta,
                          slope_bound=w.max_abs_slope())


def check_weight(w: WeightFunction, ytilde: IntervalSet,
                 grid_per_interval: int = 64) -> tuple[bool, Optional[float]]:
    """Verify w(xi) >= |xi| theta(xi) on ytilde; returns (ok, failing xi)."""
    for lo, hi in ytilde.intervals:
        lo_f, hi_f = float(lo), float(hi)
        pts = [lo_f, hi_f]
        inside = (w.pieces.xs >= lo_f) & (w.pieces.xs <= hi_f)
        pts.extend(w.pieces.xs[inside].tolist())
        if hi_f > lo_f:
            pts.extend(np.linspace(lo_f, hi_f, grid_per_interval).tolist())
        pts_arr = np.array(sorted(set(pts)))
        target = w.theta.xi_theta(pts_arr)
        got = w(pts_arr)
        bad = got < target - 1e-12
        if np.any(bad):
            return False, float(pts_arr[np.argmax(bad)])
    return True, None


def poisson_integral(w: WeightFunction) -> float:
    """Closed-form integral of w(xi)/(1+xi^2) over the line."""
    return w.pieces.poisson_integral()


def surrogate_sum(report: CoveringReport) -> float:
    """sum_k N_k theta(2^k)^2, the covering surrogate for the Poisson mass."""
    return float(sum(
        b.count * float(report.theta(2 ** b.k)) ** 2 for b in report.bands
    ))
