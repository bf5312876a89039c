"""fuplab: a numerical laboratory for fractal uncertainty.

Builds porous subsets of the line with exact rational arithmetic, measures
the decay of restricted discrete Fourier operator norms, runs the
band-limited mollifier contraction chain, estimates harmonic measure on slit
strips, and constructs the covering-based admissible weights.
"""

__version__ = "0.1.0"

from .intervals import (
    CantorSpec,
    IntervalSet,
    PorosityParams,
    PorosityStatus,
    PorosityVerdict,
    check_porosity,
    decompose_scales,
    make_cantor,
    make_random_porous,
    max_porosity,
)
from .operator import (
    ExponentFit,
    Grid,
    GridSet,
    NormResult,
    SweepResult,
    discretize,
    estimate_c,
    fit_exponent,
    fup_norm,
    norm_sweep,
)

__all__ = [
    "__version__",
    "CantorSpec",
    "IntervalSet",
    "PorosityParams",
    "PorosityStatus",
    "PorosityVerdict",
    "check_porosity",
    "decompose_scales",
    "make_cantor",
    "make_random_porous",
    "max_porosity",
    "ExponentFit",
    "Grid",
    "GridSet",
    "NormResult",
    "SweepResult",
    "discretize",
    "estimate_c",
    "fit_exponent",
    "fup_norm",
    "norm_sweep",
]
