"""Exact interval-set arithmetic and porosity certification.

All sets here are finite unions of closed intervals with rational endpoints,
kept normalized (sorted, pairwise disjoint, touching intervals merged).  A set
is nu-porous on scales alpha0..alpha1 when every window I with |I| in
[alpha0, alpha1] contains a subinterval of length nu*|I| disjoint from the
set.  The certifier decides this exactly over a geometric grid of window
sizes and is deliberately three-valued: it never certifies from a float.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

Rational = Fraction

#: Interval-count guard for generators (configurable per call).
DEFAULT_INTERVAL_CAP = 2 ** 24

#: Rational stand-in for the 2**(1/8) size-grid ratio (slightly above it,
#: which keeps the certificate conservative).
DEFAULT_SIZE_RATIO = Fraction(1091, 1000)

#: Resolution of the max_porosity search grid.
POROSITY_GRID = Fraction(1, 1024)


class SetError(ValueError):
    """Invalid interval-set construction or parameters."""


class ResourceCapError(SetError):
    """A generator would exceed the configured interval-count cap."""


def _as_rational(x) -> Fraction:
    """Coerce ints, Fractions and decimal strings; floats go via str."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        # decimal reading of the float's repr, not its binary expansion
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class IntervalSet:
    """Normalized finite union of closed rational intervals."""

    intervals: tuple[tuple[Fraction, Fraction], ...]

    def __init__(self, intervals: Iterable[Sequence] = ()):
        pairs = []
        for iv in intervals:
            lo, hi = _as_rational(iv[0]), _as_rational(iv[1])
            if lo > hi:
                raise SetError(f"interval with lo > hi: [{lo}, {hi}]")
            pairs.append((lo, hi))
        pairs.sort()
        merged: list[tuple[Fraction, Fraction]] = []
        for lo, hi in pairs:
            if merged and lo <= merged[-1][1]:
                last_lo, last_hi = merged[-1]
                merged[-1] = (last_lo, max(last_hi, hi))
            else:
                merged.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(merged))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def bounding_box(self) -> Optional[tuple[Fraction, Fraction]]:
        if not self.intervals:
            return None
        return (self.intervals[0][0], self.intervals[-1][1])

    @property
    def measure(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.intervals), Fraction(0))

    def __len__(self) -> int:
        return len(self.intervals)

    def gaps(self) -> list[tuple[Fraction, Fraction]]:
        """Bounded open complement intervals between consecutive members."""
        out = []
        for (_, hi), (lo2, _) in zip(self.intervals, self.intervals[1:]):
            if lo2 > hi:
                out.append((hi, lo2))
        return out

    def contains_point(self, x) -> bool:
        x = _as_rational(x)
        return any(lo <= x <= hi for lo, hi in self.intervals)

    def dilate(self, factor) -> "IntervalSet":
        factor = _as_rational(factor)
        if factor <= 0:
            raise SetError("dilation factor must be positive")
        return IntervalSet((lo * factor, hi * factor) for lo, hi in self.intervals)

    def translate(self, shift) -> "IntervalSet":
        shift = _as_rational(shift)
        return IntervalSet((lo + shift, hi + shift) for lo, hi in self.intervals)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(list(self.intervals) + list(other.intervals))

    def subtract_open(self, holes: Iterable[Sequence]) -> "IntervalSet":
        """Remove open intervals; zero-length leftover points are dropped.

        Touching holes are merged before subtraction, which also drops the
        isolated points between them (consistent with dropping zero-length
        leftovers).  Linear two-pointer sweep over both sorted families.
        """
        hs = (holes if isinstance(holes, IntervalSet)
              else IntervalSet(holes)).intervals
        out = []
        j = 0
        for lo, hi in self.intervals:
            while j < len(hs) and hs[j][1] <= lo:
                j += 1
            cur = lo
            jj = j
            while jj < len(hs) and hs[jj][0] < hi:
                u, v = hs[jj]
                if u > cur:
                    out.append((cur, u))
                cur = max(cur, v)
                if v >= hi:
                    break
                jj += 1
            if cur < hi:
                out.append((cur, hi))
        return IntervalSet(p for p in out if p[1] > p[0])

    # -- serialization: "intervalset v1", one "num/den num/den" line each --

    def to_text(self) -> str:
        lines = ["intervalset v1"]
        for lo, hi in self.intervals:
            lines.append(
                f"{lo.numerator}/{lo.denominator} {hi.numerator}/{hi.denominator}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "IntervalSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "intervalset v1":
            raise SetError("missing 'intervalset v1' header")
        pairs = []
        for ln in lines[1:]:
            a, b = ln.split()
            pairs.append((Fraction(a), Fraction(b)))
        return cls(pairs)


@dataclass(frozen=True)
class PorosityParams:
    nu: Fraction
    alpha0: Fraction
    alpha1: Fraction

    def __init__(self, nu, alpha0, alpha1):
        nu, alpha0, alpha1 = map(_as_rational, (nu, alpha0, alpha1))
        if not (0 < nu < 1):
            raise SetError("nu must lie in (0, 1)")
        if not (0 < alpha0 <= alpha1):
            raise SetError("need 0 < alpha0 <= alpha1")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "alpha0", alpha0)
        object.__setattr__(self, "alpha1", alpha1)


@dataclass(frozen=True)
class CantorSpec:
    base: int
    digits: tuple[int, ...]
    depth: int

    def __init__(self, base: int, digits: Iterable[int], depth: int):
        digits = tuple(sorted(set(int(d) for d in digits)))
        if base < 2:
            raise SetError("base must be >= 2")
        if not digits or len(digits) >= base:
            raise SetError("digits must be a nonempty proper subset of 0..base-1")
        if any(d < 0 or d >= base for d in digits):
            raise SetError("digit out of range")
        if depth < 0:
            raise SetError("depth must be >= 0")
        object.__setattr__(self, "base", int(base))
        object.__setattr__(self, "digits", digits)
        object.__setattr__(self, "depth", int(depth))


class PorosityStatus(enum.Enum):
    CERTIFIED_POROUS = "CERTIFIED_POROUS"
    CERTIFIED_NOT_POROUS = "CERTIFIED_NOT_POROUS"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class PorosityVerdict:
    status: PorosityStatus
    witness: Optional[tuple[Fraction, Fraction]] = None
    margin: Fraction = Fraction(0)

    def __post_init__(self):
        has_witness = self.witness is not None
        if has_witness != (self.status is PorosityStatus.CERTIFIED_NOT_POROUS):
            raise SetError("witness present iff CERTIFIED_NOT_POROUS")
        if self.margin < 0:
            raise SetError("margin must be nonnegative")


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def make_cantor(spec: CantorSpec, cap: int = DEFAULT_INTERVAL_CAP) -> IntervalSet:
    """Depth-K digit-restricted Cantor iterate in [0, 1].

    Union over digit strings (d_1..d_K) of [sum d_i M^-i, sum d_i M^-i + M^-K];
    |digits|^K cells before normalization merges touching ones.
    """
    count = len(spec.digits) ** spec.depth
    if count > cap:
        raise ResourceCapError(
            f"{count} intervals exceed the cap of {cap}; lower the depth"
        )
    width = Fraction(1, spec.base ** spec.depth)
    starts = [Fraction(0)]
    for level in range(1, spec.depth + 1):
        unit = Fraction(1, spec.base ** level)
        starts = [s + d * unit for s in starts for d in spec.digits]
    return IntervalSet((s, s + width) for s in starts)


def _porous_draw(nu, depth: int, rng: random.Random,
                 inflate: Optional[Fraction]) -> IntervalSet:
    """One construction pass: a hole per dyadic half at every level.

    inflate=None places holes of relative length 2*nu uniformly at random in
    their half; otherwise holes are inflated by that factor (capped at 31/32
    of the half) and jittered around the half center by up to 1/8 of the
    hole length.  The centered family has worst-window porosity bounded
    below by ~inflate*nu, which the uniform family lacks.
    """
    holes = []
    for k in range(1, depth + 1):
        d = Fraction(1, 2 ** k)
        if inflate is None:
            hole_len = 2 * nu * d
        else:
            hole_len = min(2 * nu * inflate * d, d * Fraction(31, 32))
        span = d - hole_len
        for j in range(2 ** k):
            u = Fraction(rng.getrandbits(24), 2 ** 24)
            if inflate is None:
                offset = u * span
            else:
                offset = span / 2 + (u - Fraction(1, 2)) * hole_len / 4
            lo = j * d + offset
            holes.append((lo, lo + hole_len))
    return IntervalSet([(Fraction(0), Fraction(1))]).subtract_open(holes)


def make_random_porous(
    nu, depth: int, seed: int, max_attempts: int = 16, certify: bool = True
) -> IntervalSet:
    """Seeded random porous subset of [0, 1].

    Level k = 1..depth removes, from each dyadic half of length 2^-k, an
    open hole of relative length 2*nu at a pseudorandom offset.  A uniform
    placement of holes of exactly that length generically falls short of
    certified nu-porosity (a window straddling two halves sees only about
    half a hole), so with certify=True the draw is retried on a
    deterministic ladder: attempt 0 is the literal construction, attempt
    a >= 1 recenters the holes and inflates them by 1 + a/4 until
    check_porosity(output, nu, 2^-depth, 1) certifies.  Output is a pure
    function of the seed either way; certify=False returns the literal
    attempt-0 construction unchecked.
    """
    nu = _as_rational(nu)
    if not (0 < nu <= Fraction(1, 3)):
        raise SetError("nu must lie in (0, 1/3]")
    if depth < 1:
        raise SetError("depth must be >= 1")
    if not certify:
        return _porous_draw(nu, depth, random.Random(int(seed) * 1_000_003),
                            None)
    params = PorosityParams(nu, Fraction(1, 2 ** depth), 1)
    for attempt in range(max_attempts):
        rng = random.Random(int(seed) * 1_000_003 + attempt)
        inflate = None if attempt == 0 else 1 + Fraction(attempt, 4)
        out = _porous_draw(nu, depth, rng, inflate)
        verdict = check_porosity(out, params, margin_steps=0)
        if verdict.status is PorosityStatus.CERTIFIED_POROUS:
            return out
    raise SetError(
        f"no attempt out of {max_attempts} certified nu={nu} at depth {depth}"
    )


# ---------------------------------------------------------------------------
# porosity certification
# ---------------------------------------------------------------------------

def _coverage_uncovered(
    box: tuple[Fraction, Fraction],
    gaps: list[tuple[Fraction, Fraction]],
    window: Fraction,
    threshold: Fraction,
) -> Optional[Fraction]:
    """Position of a window [x, x+L] all of whose gaps are < threshold.

    Every window of size L contains a complement stretch of length >= t iff
    the per-gap admissible position intervals cover [lo - L, hi]; rays beyond
    the bounding box count as gaps.  Returns None when covered, else a
    position strictly outside every (closed) admissible interval, i.e. an
    exact refutation point.
    """
    lo, hi = box
    if threshold > window:
        return (lo - window + hi) / 2
    # closed admissible intervals [a, b] sorted by a; left ray first
    covered_until = lo - threshold  # from the left ray (-inf, lo)
    for u, v in gaps:
        if v - u < threshold:
            continue
        a = u + threshold - window
        b = v - threshold
        if b < a:
            continue
        if a > covered_until:
            return (covered_until + a) / 2
        covered_until = max(covered_until, b)
    right_a = hi + threshold - window  # from the right ray (hi, inf)
    if right_a > covered_until:
        return (covered_until + right_a) / 2
    return None


def _largest_gap_in(s: IntervalSet, x: Fraction, window: Fraction) -> Fraction:
    """Exact largest complement overlap with [x, x + window]."""
    lo, hi = s.bounding_box
    best = max(Fraction(0), min(lo, x + window) - x)  # left ray
    best = max(best, x + window - max(hi, x))         # right ray
    for u, v in s.gaps():
        best = max(best, max(Fraction(0), min(v, x + window) - max(u, x)))
    return best


def _size_grid(alpha0: Fraction, alpha1: Fraction, ratio: Fraction) -> list[Fraction]:
    sizes = []
    size = alpha0
    while size <= alpha1:
        sizes.append(size)
        size = size * ratio
    if not sizes:
        sizes.append(alpha0)
    return sizes


def check_porosity(
    s: IntervalSet,
    params: PorosityParams,
    ratio: Fraction = DEFAULT_SIZE_RATIO,
    margin_steps: int = 8,
) -> PorosityVerdict:
    """Three-valued porosity certificate over window sizes [alpha0, alpha1].

    Certifying nu*ratio at every grid size L_j = alpha0*ratio^j certifies nu
    at every intermediate size (a window of size L in [L_j, ratio*L_j]
    contains one of size L_j whose hole of length >= nu*ratio*L_j >= nu*L
    fits strictly).  A grid size whose best window-gap falls below nu*L_j is
    a refutation at that very size; between the two thresholds the verdict is
    UNKNOWN and a finer ratio may settle it.
    """
    if ratio <= 1:
        raise SetError("size-grid ratio must exceed 1")
    if s.is_empty:
        return PorosityVerdict(PorosityStatus.CERTIFIED_POROUS,
                               margin=1 - params.nu)
    sizes = _size_grid(params.alpha0, params.alpha1, ratio)
    certify_nu = params.nu * ratio
    box, gaps = s.bounding_box, s.gaps()
    unknown = False
    for size in sizes:
        if _coverage_uncovered(box, gaps, size, certify_nu * size) is None:
            continue
        x_bad = _coverage_uncovered(box, gaps, size, params.nu * size)
        if x_bad is not None:
            gap = _largest_gap_in(s, x_bad, size)
            return PorosityVerdict(
                PorosityStatus.CERTIFIED_NOT_POROUS,
                witness=(x_bad, x_bad + size),
                margin=params.nu - gap / size,
            )
        unknown = True
    if unknown:
        return PorosityVerdict(PorosityStatus.UNKNOWN)
    # certified; bisect a lower bound on the slack above certify_nu
    slack_lo, slack_hi = Fraction(0), 1 - certify_nu
    if slack_hi > 0:
        for _ in range(margin_steps):
            mid = (slack_lo + slack_hi) / 2
            if mid == slack_lo:
                break
            t = certify_nu + mid
            if all(
                _coverage_uncovered(box, gaps, size, t * size) is None
                for size in sizes
            ):
                slack_lo = mid
            else:
                slack_hi = mid
    return PorosityVerdict(PorosityStatus.CERTIFIED_POROUS, margin=slack_lo)


def max_porosity(
    s: IntervalSet,
    alpha0,
    alpha1,
    ratio: Fraction = DEFAULT_SIZE_RATIO,
    grid: Fraction = POROSITY_GRID,
) -> Fraction:
    """Largest nu on the dyadic search grid that check_porosity certifies."""
    alpha0, alpha1 = _as_rational(alpha0), _as_rational(alpha1)
    if alpha0 > alpha1:
        raise SetError("alpha0 must not exceed alpha1")

    def certified(k: int) -> bool:
        nu = k * grid
        params = PorosityParams(nu, alpha0, alpha1)
        v = check_porosity(s, params, ratio=ratio, margin_steps=0)
        return v.status is PorosityStatus.CERTIFIED_POROUS

    top = int(1 / grid) - 1
    lo, hi = 0, top
    if not certified(1):
        return Fraction(0)
    lo = 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if certified(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo * grid


# ---------------------------------------------------------------------------
# scale decomposition
# ---------------------------------------------------------------------------

def _rational_root(x: Fraction, q: int) -> Fraction:
    """Exact q-th root of a positive rational, or raise."""
    def iroot(n: int) -> int:
        r = round(n ** (1.0 / q))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand ** q == n:
                return cand
        raise SetError(f"{n} is not a perfect {q}-th power")

    return Fraction(iroot(x.numerator), iroot(x.denominator))


def rational_power(x: Fraction, p: Fraction) -> Fraction:
    """x**p exactly for rational x > 0 and rational p, or raise."""
    x, p = _as_rational(x), _as_rational(p)
    if x <= 0:
        raise SetError("base must be positive")
    num = x ** p.numerator if p >= 0 else (1 / x) ** (-p.numerator)
    return _rational_root(num, p.denominator)


def decompose_scales(s: IntervalSet, h, rho) -> list[IntervalSet]:
    """Split a set porous on scales h^rho..1 into pieces porous on h..1.

    Piece l is the intersection with the union over j of
    [h^rho*j + (h/2)*l, h^rho*j + (h/2)*(l+1)], blocks clipped to their
    period, for l = 0..ceil(2*h^(rho-1)).  Pieces are disjoint up to shared
    endpoints and their union is the input.
    """
    h, rho = _as_rational(h), _as_rational(rho)
    if not (0 < h < 1):
        raise SetError("need 0 < h < 1")
    if not (0 < rho <= 1):
        raise SetError("need 0 < rho <= 1")
    period = rational_power(h, rho)
    if period == h:
        return [s]
    step = h / 2
    count = math.ceil(2 * period / h)
    if s.is_empty:
        return [IntervalSet() for _ in range(count + 1)]
    lo, hi = s.bounding_box
    j_lo = math.floor(lo / period)
    j_hi = math.ceil(hi / period)
    pieces = []
    for ell in range(count + 1):
        if step * ell >= period:
            pieces.append(IntervalSet())
            continue
        blocks = []
        for j in range(j_lo, j_hi + 1):
            b_lo = period * j + step * ell
            b_hi = min(period * j + step * (ell + 1), period * (j + 1))
            if b_hi > b_lo:
                blocks.append((b_lo, b_hi))
        pieces.append(s.intersect(IntervalSet(blocks)))
    return pieces
