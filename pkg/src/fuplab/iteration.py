"""Dyadic hole decompositions, band-limited mollifiers, and the contraction chain.

For a set X porous at scale 2^-k, every dyadic interval I of that scale
admits a hole I' subset I of length nu 2^-k disjoint from X; the shrunk
concentric halves I'' keep a nu 2^-k-2 buffer around X.  Multiplying a
band-limited f by mollified complements chi_k = 1 * jackson-kernel contracts
the norm by sqrt(1 - c^2/10) per step whenever chi_k <= 1/2 on the holes and
f keeps at least c of its mass there; the chain records norms, ratios, and
flags any ratio exceeding the theorem bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .intervals import IntervalSet, _as_rational
from .weights import ThetaWeight

WORK_BOX = (Fraction(-1), Fraction(2))


class IterationError(RuntimeError):
    pass


class PorosityViolation(IterationError):
    """Some dyadic interval admits no hole; carries the offending interval."""

    def __init__(self, interval: tuple[Fraction, Fraction]):
        super().__init__(
            f"no admissible hole inside [{interval[0]}, {interval[1]}]"
        )
        self.interval = interval


class BandTooLargeError(IterationError):
    pass


class SupportLeakError(IterationError):
    pass


@dataclass(frozen=True)
class MollifierSpec:
    """Kernel scale rule: level-k kernel has frequency halfwidth 2^(k+k0-1)."""

    k0: int

    def __post_init__(self):
        if self.k0 < 1:
            raise ValueError("k0 must be >= 1")


@dataclass(frozen=True)
class HoleDecomposition:
    level: int
    nu: Fraction
    set_x: IntervalSet
    holes: IntervalSet           # union of the chosen I'
    shrunk_holes: IntervalSet    # concentric halves I''
    complement: IntervalSet      # box minus shrunk holes
    chosen: dict
    box: tuple[Fraction, Fraction]


def build_holes(x: IntervalSet, k: int, nu,
                box: tuple = WORK_BOX) -> HoleDecomposition:
    """Choose a hole I' in every dyadic level-k interval meeting the box.

    Scans the complement gaps of X left to right and takes the first that
    admits a closed hole of length nu 2^-k strictly avoiding X; the hole
    sits at the left end of the admissible overlap when that end is
    attainable (not an X endpoint), else centered.  Fails loudly with the
    offending interval when X is not porous enough at this scale.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    nu = _as_rational(nu)
    if not (0 < nu < 1):
        raise ValueError("nu must lie in (0, 1)")
    box_lo, box_hi = _as_rational(box[0]), _as_rational(box[1])
    d = Fraction(1, 2 ** k)
    hole_len = nu * d

    # complement gaps as (lo, hi, lo_attainable, hi_attainable); None = ray
    gaps: list[tuple[Optional[Fraction], Optional[Fraction]]] = []
    if x.is_empty:
        gaps.append((None, None))
    else:
        gaps.append((None, x.intervals[0][0]))
        gaps.extend(x.gaps())
        gaps.append((x.intervals[-1][1], None))

    chosen = {}
    holes = []
    shrunk = []
    j_lo = math.floor(box_lo / d)
    j_hi = math.ceil(box_hi / d) - 1
    gi = 0
    for j in range(j_lo, j_hi + 1):
        i_lo, i_hi = j * d, (j + 1) * d
        while gi < len(gaps) and gaps[gi][1] is not None and gaps[gi][1] <= i_lo:
            gi += 1
        placed = None
        for gj in range(gi, len(gaps)):
            u, v = gaps[gj]
            if u is not None and u >= i_hi:
                break
            w_lo = i_lo if u is None else max(u, i_lo)
            w_hi = i_hi if v is None else min(v, i_hi)
            cap = w_hi - w_lo
            left_ok = u is None or u < i_lo
            right_ok = v is None or v > i_hi
            if cap > hole_len:
                a = w_lo if left_ok else w_lo + (cap - hole_len) / 2
            elif cap == hole_len and left_ok and right_ok:
                a = w_lo
            else:
                continue
            placed = (a, a + hole_len)
            break
        if placed is None:
            raise PorosityViolation((i_lo, i_hi))
        chosen[(i_lo, i_hi)] = placed
        holes.append(placed)
        c = (placed[0] + placed[1]) / 2
        shrunk.append((c - hole_len / 4, c + hole_len / 4))

    u_prime = IntervalSet(holes)
    u_second = IntervalSet(shrunk)
    complement = IntervalSet([(box_lo, box_hi)]).subtract_open(u_second.intervals)
    return HoleDecomposition(
        level=k, nu=nu, set_x=x, holes=u_prime, shrunk_holes=u_second,
        complement=complement, chosen=chosen, box=(box_lo, box_hi),
    )


# ---------------------------------------------------------------------------
# mollifiers
# ---------------------------------------------------------------------------

def jackson_coefficients(band_halfwidth: int) -> np.ndarray:
    """DFT coefficients of the squared-Fejer (Jackson) kernel.

    Autocorrelation of the triangle of halfwidth m-1 with m = b//2 + 1,
    normalized to 1 at frequency zero; support [-2(m-1), 2(m-1)] lies
    inside [-b, b] exactly.  The kernel is nonnegative with unit mass as
    the square of a Fejer kernel.
    """
    if band_halfwidth < 1:
        raise ValueError("band halfwidth must be >= 1")
    m = band_halfwidth // 2 + 1
    eta = np.arange(-(m - 1), m)
    tri = (m - np.abs(eta)).astype(float)
    if tri.size > 4096:
        from scipy.signal import fftconvolve
        acf = fftconvolve(tri, tri)
    else:
        acf = np.convolve(tri, tri)
    return acf / acf[acf.size // 2]


@dataclass(frozen=True)
class Mollifier:
    level: int
    k0: int
    n: int
    band_halfwidth: int
    values: np.ndarray       # real samples on the N-grid over [0, 1)
    coeffs: np.ndarray       # DFT of values; exactly zero outside the band
    inside_cells: np.ndarray  # grid cells strictly inside the shrunk holes
    set_cells: np.ndarray     # grid cells meeting X

    def outside_band_mass(self) -> float:
        n = self.n
        freqs = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        outside = np.abs(freqs) > self.band_halfwidth
        return float(np.sum(np.abs(self.coeffs[outside]) ** 2))

    @property
    def max_on_shrunk(self) -> float:
        if self.inside_cells.size == 0:
            return 0.0
        return float(np.max(self.values[self.inside_cells]))

    @property
    def min_on_set(self) -> float:
        if self.set_cells.size == 0:
            return 1.0
        return float(np.min(self.values[self.set_cells]))


def _cells_inside(sets: IntervalSet, n: int) -> np.ndarray:
    """Grid cells [j/N, (j+1)/N] contained in the given union, j in [0, N)."""
    out = []
    for a, b in sets.intervals:
        j_lo = max(math.ceil(a * n), 0)
        j_hi = min(math.floor(b * n) - 1, n - 1)
        out.extend(range(j_lo, j_hi + 1))
    return np.array(sorted(set(out)), dtype=np.int64)


def _cells_meeting(sets: IntervalSet, n: int) -> np.ndarray:
    out = []
    for a, b in sets.intervals:
        j_lo = max(math.floor(n * a - 1) + 1, 0)
        j_hi = min(math.ceil(n * b) - 1, n - 1)
        out.extend(range(j_lo, j_hi + 1))
    return np.array(sorted(set(out)), dtype=np.int64)


def mollify_mask(mask: np.ndarray, band_halfwidth: int) -> tuple[np.ndarray, np.ndarray]:
    """Circular convolution of a 0/1 mask with the Jackson kernel.

    Built in frequency space: coefficients outside the band are exact
    zeros, and the values are the inverse transform (real up to roundoff).
    """
    n = mask.size
    jk = jackson_coefficients(band_halfwidth)
    half = jk.size // 2
    kernel_hat = np.zeros(n, dtype=float)
    for off in range(-half, half + 1):
        kernel_hat[off % n] = jk[half + off]
    coeffs = np.fft.fft(mask.astype(float)) * kernel_hat
    values = np.fft.ifft(coeffs).real
    return values, coeffs


def build_mollifier(decomp: HoleDecomposition, spec: MollifierSpec,
                    n: int) -> Mollifier:
    """Sampled chi_k: the shrunk-hole complement convolved with the kernel.

    Frequency support is exactly [-2^(k+k0-1), 2^(k+k0-1)]; 0 <= chi <= 1
    up to roundoff.  The masked-out region is the shrunk holes dilated by a
    guard band of ~1/8 kernel width: exactly at the edge of a masked region
    the mollified value is 1/2 plus far tails, so the guard band is what
    pushes chi strictly below 1/2 on every cell meeting the shrunk holes,
    while costing only a 2^-k0-1/nu fraction of the buffer that protects
    the chi >= 1 - 2^-k0 bound on X.
    """
    k, k0 = decomp.level, spec.k0
    if 2 ** (k + k0) > n // 4:
        raise BandTooLargeError(
            f"band 2^{k + k0} exceeds N/4 = {n // 4}; enlarge the grid"
        )
    band = 2 ** (k + k0 - 1)
    guard_cells = 2 + (n // band) // 8
    guard = Fraction(guard_cells, n)
    unit = IntervalSet([(Fraction(0), Fraction(1))])
    shrunk_unit = decomp.shrunk_holes.intersect(unit)
    dilated = IntervalSet(
        (a - guard, b + guard) for a, b in shrunk_unit.intervals
    )
    masked = _cells_inside(dilated.intersect(unit), n)
    mask = np.ones(n, dtype=float)
    if masked.size:
        mask[masked] = 0.0
    values, coeffs = mollify_mask(mask, band)
    inside = _cells_meeting(shrunk_unit, n)
    set_cells = _cells_meeting(decomp.set_x.intersect(unit), n)
    return Mollifier(level=k, k0=k0, n=n, band_halfwidth=band,
                     values=values, coeffs=coeffs, inside_cells=inside,
                     set_cells=set_cells)


@dataclass(frozen=True)
class ChainPlan:
    k0: int
    K: int
    n: int
    mollifiers: dict
    checks: dict  # level -> (max_on_shrunk, min_on_set)


def plan_chain(x: IntervalSet, nu, steps: int = 2, n_cap: int = 2 ** 21,
               k0_range: Sequence[int] = range(2, 9)) -> ChainPlan:
    """Smallest self-consistent (k0, K = steps*k0, N = 2^(K+k0+2)) whose
    mollifier checks pass at every chain level.

    Each candidate k0 is probed at its own grid, so the search stays cheap
    for small candidates and stops at the first configuration where
    chi <= 1/2 on the shrunk holes and chi >= 1 - 2^-k0 on X hold at all of
    k = 0, k0, ..., K.
    """
    nu = _as_rational(nu)
    last_error = None
    for k0 in k0_range:
        big_k = steps * k0
        n = 2 ** (big_k + k0 + 2)
        if n > n_cap:
            break
        levels = list(range(0, big_k + 1, k0))
        try:
            mols = {
                k: build_mollifier(build_holes(x, k, nu), MollifierSpec(k0), n)
                for k in levels
            }
        except (PorosityViolation, BandTooLargeError) as exc:
            last_error = exc
            continue
        checks = {k: (mols[k].max_on_shrunk, mols[k].min_on_set)
                  for k in levels}
        if all(ms <= 0.5 and mn >= 1.0 - 2.0 ** (-k0)
               for ms, mn in checks.values()):
            return ChainPlan(k0=k0, K=big_k, n=n, mollifiers=mols,
                             checks=checks)
    raise IterationError(
        f"no k0 in {list(k0_range)} yields a passing chain plan under "
        f"grid cap {n_cap}" + (f" (last: {last_error})" if last_error else "")
    )


def find_k0(x: IntervalSet, nu, levels: Sequence[int], n: int,
            k0_range: Sequence[int] = range(1, 21),
            box: tuple = WORK_BOX) -> int:
    """Smallest k0 making every level pass chi <= 1/2 on the shrunk holes
    and chi >= 1 - 2^-k0 on X."""
    decomps = {k: build_holes(x, k, nu, box=box) for k in levels}
    for k0 in k0_range:
        spec = MollifierSpec(k0)
        ok = True
        for k in levels:
            if 2 ** (k + k0) > n // 4:
                ok = False
                break
            m = build_mollifier(decomps[k], spec, n)
            if m.max_on_shrunk > 0.5 or m.min_on_set < 1.0 - 2.0 ** (-k0):
                ok = False
                break
        if ok:
            return k0
    raise IterationError(
        f"no k0 in {list(k0_range)} passes the mollifier checks at N={n}"
    )


# ---------------------------------------------------------------------------
# the contraction chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainState:
    levels: tuple[int, ...]
    norms: tuple[float, ...]
    ratios: tuple[float, ...]
    c_used: float
    k0: int
    final_bound: float
    flags: tuple[int, ...]
    input_norm: float


def grid_norm(values: np.ndarray) -> float:
    """l2 norm with cell weight 1/N, the Riemann approximation of L2[0,1]."""
    return float(np.linalg.norm(values) / math.sqrt(values.size))


def run_chain(
    f0: np.ndarray,
    x: IntervalSet,
    nu,
    k0: int,
    K: int,
    c: float,
    y_band: np.ndarray,
    mollifiers: Optional[dict[int, Mollifier]] = None,
    leak_tol: float = 1e-12,
    flag_slack: float = 1e-9,
) -> ChainState:
    """f_k = chi_k chi_(k-k0) ... chi_0 f for k = 0, k0, ..., K (K padded up
    to a multiple of k0).

    Checks the Fourier-support precondition on f0 (relative mass outside
    y_band above leak_tol raises), records norms and consecutive ratios,
    and flags every level whose ratio exceeds sqrt(1 - c^2/10) + slack —
    the inequality is a theorem for admissible inputs, so a flag indicates
    an inadmissible support or an implementation fault.
    """
    n = f0.size
    k_eff = k0 * math.ceil(K / k0) if K > 0 else 0
    levels = list(range(0, k_eff + 1, k0)) if k_eff > 0 else [0]

    fhat = np.fft.fft(f0)
    total = float(np.sum(np.abs(fhat) ** 2))
    if total > 0.0:
        outside = np.ones(n, dtype=bool)
        outside[np.asarray(y_band, dtype=np.int64)] = False
        leak = float(np.sum(np.abs(fhat[outside]) ** 2)) / total
        if leak > leak_tol:
            raise SupportLeakError(
                f"f0 has relative Fourier mass {leak:.3e} outside the band"
            )

    if mollifiers is None:
        spec = MollifierSpec(k0)
        mollifiers = {
            k: build_mollifier(build_holes(x, k, nu), spec, n) for k in levels
        }

    input_norm = grid_norm(f0)
    f = f0.astype(complex)
    norms = []
    for k in levels:
        f = mollifiers[k].values * f
        norms.append(grid_norm(f))

    ratios = []
    flags = []
    threshold = math.sqrt(max(1.0 - c * c / 10.0, 0.0)) + flag_slack
    prev = norms[0]
    for i in range(1, len(norms)):
        ratio = norms[i] / prev if prev > 0 else 0.0
        ratios.append(ratio)
        if ratio > threshold:
            flags.append(levels[i])
        prev = norms[i]

    contraction = math.sqrt(max(1.0 - c * c / 10.0, 0.0))
    shrink = 1.0 - 2.0 ** (-k0)
    steps = k_eff // k0 if k0 > 0 else 0
    final_bound = 2.0 * (contraction / shrink) ** steps * input_norm
    return ChainState(
        levels=tuple(levels), norms=tuple(norms), ratios=tuple(ratios),
        c_used=c, k0=k0, final_bound=final_bound, flags=tuple(flags),
        input_norm=input_norm,
    )


# ---------------------------------------------------------------------------
# sharp frequency splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitResult:
    g_low: np.ndarray
    g_high: np.ndarray
    r_weighted: float
    high_norm: float
    bound: float   # e^(-K theta(K)) * R
    slack: float   # bound - high_norm


def split_frequencies(g: np.ndarray, kfreq: int,
                      theta: ThetaWeight) -> SplitResult:
    """Sharp cutoff at |xi| = kfreq plus the weighted-coefficient norm.

    R = |e^{|xi| theta(xi)} ghat|_2 over the signed grid frequencies; since
    xi theta(xi) increases, every high coefficient obeys |ghat(xi)| <=
    e^{-K theta(K)} (weighted coefficient), which makes the high-frequency
    bound an identity up to roundoff; it is asserted here.
    """
    n = g.size
    if not (0 <= kfreq <= n // 2):
        raise ValueError("kfreq must lie within the grid band")
    ghat = np.fft.fft(g) / math.sqrt(n)
    freqs = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    low = np.abs(freqs) <= kfreq
    g_low = np.fft.ifft(np.where(low, ghat, 0)) * math.sqrt(n)
    g_high = np.fft.ifft(np.where(low, 0, ghat)) * math.sqrt(n)

    mags = np.abs(ghat)
    nz = mags > 0.0
    log_terms = theta.xi_theta(freqs[nz]) + np.log(mags[nz])
    if log_terms.size:
        peak = float(np.max(log_terms))
        r = math.exp(peak) * math.sqrt(
            float(np.sum(np.exp(2.0 * (log_terms - peak))))
        ) if peak < 700 else math.inf
    else:
        r = 0.0
    high_norm = float(np.linalg.norm(ghat[~low]))
    bound = math.exp(-kfreq * float(theta(kfreq))) * r if r != math.inf else math.inf
    slack = bound - high_norm
    if slack < -1e-10 * max(r, 1.0):
        raise IterationError(
            f"high-frequency bound violated: |g_high| = {high_norm:.3e} "
            f"> bound {bound:.3e}"
        )
    return SplitResult(g_low=g_low, g_high=g_high, r_weighted=r,
                       high_norm=high_norm, bound=bound, slack=slack)
