"""Harmonic measure on the slit strip and subharmonic interpolation checks.

The domain is {|Im z| < r} minus a slit I' on the real axis.  The chance
that Brownian motion from t in I \\ I' exits through the slit is estimated
by walk-on-spheres: jump uniformly on the largest disk inside the domain
(closed-form radius: distance to the lines vs. distance to the segment),
absorb within a shell of either boundary piece.  That probability drives
the interpolation exponent kappa in the sup-norm bound
sup_I |g| <= (sup_I' |g|)^kappa (sup_lines |g|)^(1-kappa) for band-limited g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .weights import ThetaWeight


class HarmonicError(RuntimeError):
    pass


@dataclass(frozen=True)
class SlitStrip:
    r: float
    hole: tuple[float, float]
    context: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not (0 < self.r):
            raise ValueError("strip half-height must be positive")
        a, b = self.hole
        lo, hi = self.context
        if not (lo <= a < b <= hi):
            raise ValueError("hole must be a nondegenerate subinterval of the context")
        if abs((hi - lo) - 1.0) > 1e-12:
            raise ValueError("context interval must have unit length")


@dataclass(frozen=True)
class WalkConfig:
    walks: int = 100_000
    shell: float = 1e-3
    max_steps: int = 10_000
    seed: int = 0

    def validate_for(self, domain: SlitStrip) -> None:
        if self.walks < 1:
            raise ValueError("need at least one walk")
        limit = min(domain.r, domain.hole[1] - domain.hole[0]) / 10.0
        if self.shell > limit:
            raise ValueError(
                f"shell {self.shell} too coarse; must be <= {limit:g}"
            )


@dataclass(frozen=True)
class MeasureEstimate:
    p_hat: float
    ci95: float
    walks_used: int
    n_slit: int
    n_top: int
    n_bottom: int
    timeouts: int


# counter-based uniforms: SplitMix64 of (seed, walk, step) -- vectorizable
# and schedule-independent, so batching cannot change any walk's path.

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK
    return x ^ (x >> np.uint64(31))


def _uniform(seed: int, walk_ids: np.ndarray, step: int) -> np.ndarray:
    x = np.full(walk_ids.shape, np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    x = _splitmix(x ^ (walk_ids.astype(np.uint64) << np.uint64(20)))
    x = _splitmix(x ^ np.uint64(step))
    return (x >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def estimate_harmonic_measure(
    domain: SlitStrip, t: float, cfg: WalkConfig
) -> MeasureEstimate:
    """Walk-on-spheres estimate of the slit's harmonic measure from t.

    Deterministic in cfg.seed; walks run in lockstep but each derives its
    angles from its own counter stream.  Walks hitting max_steps are
    excluded and reported; more than 0.1% of them rejects the estimate.
    """
    cfg.validate_for(domain)
    a, b = domain.hole
    lo, hi = domain.context
    if not (lo <= t <= hi) or (a < t < b):
        raise ValueError("start must lie in the context outside the hole")
    r, shell = domain.r, cfg.shell

    ids = np.arange(cfg.walks, dtype=np.uint64)
    x = np.full(cfg.walks, float(t))
    y = np.zeros(cfg.walks)
    status = np.zeros(cfg.walks, dtype=np.int8)  # 0 active, 1 slit, 2 top, 3 bottom
    active = np.arange(cfg.walks)

    for step in range(cfg.max_steps):
        if active.size == 0:
            break
        ax, ay = x[active], y[active]
        d_line = r - np.abs(ay)
        dx = np.maximum(np.maximum(a - ax, ax - b), 0.0)
        d_slit = np.hypot(dx, ay)
        hit_slit = d_slit <= shell
        hit_line = (~hit_slit) & (d_line <= shell)
        if np.any(hit_slit) or np.any(hit_line):
            idx = active[hit_slit]
            status[idx] = 1
            idx = active[hit_line]
            status[idx] = np.where(y[idx] > 0, 2, 3).astype(np.int8)
            keep = ~(hit_slit | hit_line)
            active = active[keep]
            if active.size == 0:
                break
            ax, ay = x[active], y[active]
            d_line = d_line[keep]
            d_slit = d_slit[keep]
        rad = np.minimum(d_line, d_slit)
        angle = 2.0 * math.pi * _uniform(cfg.seed, ids[active], step)
        x[active] = ax + rad * np.cos(angle)
        y[active] = ay + rad * np.sin(angle)

    timeouts = int(active.size)
    if timeouts > max(1e-3 * cfg.walks, 0):
        raise HarmonicError(
            f"{timeouts} of {cfg.walks} walks timed out (> 0.1%); raise "
            "max_steps or loosen the shell"
        )
    n_slit = int(np.sum(status == 1))
    n_top = int(np.sum(status == 2))
    n_bottom = int(np.sum(status == 3))
    used = cfg.walks - timeouts
    p = n_slit / used if used else 0.0
    ci = 1.96 * math.sqrt(p * (1.0 - p) / used) if used else 1.0
    return MeasureEstimate(p_hat=p, ci95=ci, walks_used=used, n_slit=n_slit,
                           n_top=n_top, n_bottom=n_bottom, timeouts=timeouts)


@dataclass(frozen=True)
class KappaFit:
    C_fit: float
    intercept: float
    rs: tuple[float, ...]
    p_hats: tuple[float, ...]
    lower_bound_ok: bool


def fit_kappa(
    rs: Sequence[float],
    hole: tuple[float, float],
    t: float,
    cfg: WalkConfig,
    context: tuple[float, float] = (0.0, 1.0),
    p_hats: Optional[Sequence[float]] = None,
) -> KappaFit:
    """Fit p(r) ~ e^(-C/r - b): least squares of log(1/p_hat) against 1/r.

    Verifies that inflating the fitted decay constant by 10% lower-bounds
    every sample: p_hat(r) >= e^(-1.1 C_fit / r - b).  Pass p_hats to fit
    externally computed estimates (e.g. the synthetic-model tests).
    """
    rs = list(rs)
    if len(rs) < 4:
        raise ValueError("need at least 4 strip heights")
    if p_hats is None:
        p_hats = [
            estimate_harmonic_measure(SlitStrip(r, hole, context), t, cfg).p_hat
            for r in rs
        ]
    p_hats = list(p_hats)
    if any(p <= 0 for p in p_hats):
        raise HarmonicError("vanishing measure estimate; increase walks")
    xs = np.array([1.0 / r for r in rs])
    ys = np.array([math.log(1.0 / p) for p in p_hats])
    slope, intercept = np.polyfit(xs, ys, 1)
    ok = all(
        p >= math.exp(-1.1 * slope / r - intercept) - 1e-12
        if slope >= 0 else True
        for r, p in zip(rs, p_hats)
    )
    return KappaFit(C_fit=float(slope), intercept=float(intercept),
                    rs=tuple(float(r) for r in rs),
                    p_hats=tuple(float(p) for p in p_hats),
                    lower_bound_ok=bool(ok))


# ---------------------------------------------------------------------------
# band-limited evaluation and the interpolation bounds
# ---------------------------------------------------------------------------

def eval_trig(freqs: np.ndarray, coeffs: np.ndarray, xs: np.ndarray,
              im: float = 0.0) -> np.ndarray:
    """g(x + i*im) = sum c_xi e^{i xi (x + i im)} for integer frequencies."""
    phase = np.exp(1j * np.outer(xs, freqs))
    decay = np.exp(-im * freqs.astype(float))
    return phase @ (coeffs * decay)


@dataclass(frozen=True)
class SubharmonicReport:
    lhs: float          # sup over I of |g|
    sup_hole: float
    sup_lines: float
    kappa: float
    rhs: float
    slack: float


def check_subharmonic_bound(
    freqs: np.ndarray,
    coeffs: np.ndarray,
    interval: tuple[float, float],
    hole: tuple[float, float],
    r: float,
    kappa: float,
    samples: int = 2 ** 14,
) -> SubharmonicReport:
    """sup_I |g| against (sup_I' |g|)^kappa (sup_lines |g|)^(1-kappa).

    g extends entirely from its finite frequency content; the three sups are
    taken by dense sampling (the lines over a full 2*pi period, which
    contains their true sup for integer frequencies).
    """
    freqs = np.asarray(freqs)
    coeffs = np.asarray(coeffs, dtype=complex)
    if not np.any(np.abs(coeffs) > 0):
        raise ValueError("g must not vanish identically")
    xs_i = np.linspace(interval[0], interval[1], samples)
    xs_h = np.linspace(hole[0], hole[1], samples)
    xs_p = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    sup_i = float(np.max(np.abs(eval_trig(freqs, coeffs, xs_i))))
    sup_hole = float(np.max(np.abs(eval_trig(freqs, coeffs, xs_h))))
    sup_plus = np.max(np.abs(eval_trig(freqs, coeffs, xs_p, im=r)))
    sup_minus = np.max(np.abs(eval_trig(freqs, coeffs, xs_p, im=-r)))
    sup_lines = float(max(sup_plus, sup_minus))
    rhs = sup_hole ** kappa * sup_lines ** (1.0 - kappa)
    return SubharmonicReport(lhs=sup_i, sup_hole=sup_hole,
                             sup_lines=sup_lines, kappa=kappa, rhs=rhs,
                             slack=rhs - sup_i)


def conservative_kappa(
    domain: SlitStrip, cfg: WalkConfig, t_count: int = 9
) -> float:
    """min over a t-grid of (p_hat - ci95): a lower confidence bound on the
    harmonic measure of the slit, suitable for the interpolation bound."""
    a, b = domain.hole
    lo, hi = domain.context
    ts = []
    if a - lo > 2 * cfg.shell:
        ts.extend(np.linspace(lo, a - 2 * cfg.shell, max(t_count // 2, 2)))
    if hi - b > 2 * cfg.shell:
        ts.extend(np.linspace(b + 2 * cfg.shell, hi, max(t_count // 2, 2)))
    best = 1.0
    for i, t in enumerate(ts):
        est = estimate_harmonic_measure(
            domain, float(t),
            WalkConfig(cfg.walks, cfg.shell, cfg.max_steps, cfg.seed + i),
        )
        best = min(best, est.p_hat - est.ci95)
    return max(best, 1e-6)


# ---------------------------------------------------------------------------
# the L2 interpolation inequality on the grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LemmaReport:
    lhs: float
    rhs: float
    kappa: float
    C: float
    term_interp: float
    term_tail: float
    holds: bool


def check_harmonic_lemma(
    g: np.ndarray,
    hole_cells: np.ndarray,
    kfreq: int,
    theta: ThetaWeight,
    c_candidate: float,
) -> LemmaReport:
    """Evaluate |g| <= C/theta(K) |g on U'|^kappa R^(1-kappa)
    + C e^(-kappa K theta(K))/theta(K) R with kappa = e^(-C/theta(K)).

    Norms are grid L2 norms; R is the weighted coefficient norm of g.
    """
    n = g.size
    ghat = np.fft.fft(g) / math.sqrt(n)
    freqs = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    mags = np.abs(ghat)
    nz = mags > 0
    if not np.any(nz):
        return LemmaReport(0.0, 0.0, 0.0, c_candidate, 0.0, 0.0, True)
    logs = theta.xi_theta(freqs[nz]) + np.log(mags[nz])
    peak = float(np.max(logs))
    r_weighted = math.exp(peak) * math.sqrt(
        float(np.sum(np.exp(2.0 * (logs - peak))))
    )
    th = float(theta(kfreq))
    kappa = math.exp(-c_candidate / th)
    lhs = float(np.linalg.norm(g)) / math.sqrt(n)
    mass_hole = float(np.linalg.norm(g[hole_cells])) / math.sqrt(n)
    term_interp = (c_candidate / th) * mass_hole ** kappa * r_weighted ** (1 - kappa)
    term_tail = (c_candidate / th) * math.exp(-kappa * kfreq * th) * r_weighted
    rhs = term_interp + term_tail
    return LemmaReport(lhs=lhs, rhs=rhs, kappa=kappa, C=c_candidate,
                       term_interp=term_interp, term_tail=term_tail,
                       holds=bool(lhs <= rhs * (1 + 1e-12)))


def search_harmonic_constant(
    corpus: Sequence[np.ndarray],
    hole_cells: np.ndarray,
    kfreq: int,
    theta: ThetaWeight,
) -> float:
    """Smallest C in {1, 2, 4, ..., 2^10} validating the inequality on the
    whole corpus; the constant is existential, so this is an empirical
    record, not an assertion about its true value."""
    for exp in range(11):
        c_cand = float(2 ** exp)
        if all(
            check_harmonic_lemma(g, hole_cells, kfreq, theta, c_cand).holds
            for g in corpus
        ):
            return c_cand
    raise HarmonicError("no C up to 2^10 validates the corpus")


def condition_theta_values(theta_fn, C: float,
                           k_list: Sequence[float]) -> list[float]:
    """e^(-C/theta(K)) K theta(K) + log theta(K) along increasing K.

    This is the negated logarithm of the tail factor e^{-kappa K theta}/theta
    with kappa = e^{-C/theta}; divergence to +infinity is exactly what kills
    the tail term in the interpolation inequality as K grows.  It diverges
    for theta == 1 and theta = (log K)^-delta with delta < 1, and diverges
    to -infinity for theta = K^-eps.
    """
    out = []
    for k in k_list:
        th = float(theta_fn(k))
        out.append(math.exp(-C / th) * k * th + math.log(th))
    return out
