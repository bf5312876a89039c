import math
from fractions import Fraction as F

import numpy as np
import pytest

from fuplab.intervals import CantorSpec, IntervalSet, make_cantor, \
    make_random_porous
from fuplab.operator import (
    Grid,
    GridSet,
    NoAdmissibleSupportError,
    SweepEntry,
    SweepResult,
    discretize,
    estimate_c,
    fattened_support,
    fit_exponent,
    fup_norm,
    max_restricted_mass,
    min_restricted_mass,
    norm_sweep,
)
from oracles import dense_restricted_sigma, scan_discretize


class TestDiscretize:
    def test_unit_interval_full_grid(self):
        assert discretize(IntervalSet([(0, 1)]), 8).indices == tuple(range(8))

    def test_cantor_depth_two_on_nine(self):
        s = make_cantor(CantorSpec(3, (0, 2), 2))
        assert discretize(s, 9).indices == (0, 2, 6, 8)

    def test_touching_cell_edge_excluded(self):
        s = IntervalSet([(0, F(1, 8))])
        assert discretize(s, 8).indices == (0,)

    def test_against_rational_scan(self, porous8):
        got = discretize(porous8, 256).indices
        assert got == scan_discretize(porous8, 256)

    def test_gridset_validation(self):
        with pytest.raises(ValueError):
            GridSet(Grid(8), (3, 3))
        with pytest.raises(ValueError):
            GridSet(Grid(8), (8,))


class TestFupNorm:
    def test_full_grid_is_unitary(self):
        g = discretize(IntervalSet([(0, 1)]), 8)
        r = fup_norm(g, g, 1e-10)
        assert abs(r.sigma - 1.0) <= 1e-10

    def test_singletons(self):
        x = GridSet(Grid(64), (3,))
        y = GridSet(Grid(64), (17,))
        r = fup_norm(x, y, 1e-12)
        assert abs(r.sigma - 64 ** -0.5) <= 1e-12

    def test_empty_side_gives_zero(self):
        g = discretize(IntervalSet([(0, 1)]), 8)
        e = GridSet(Grid(8), ())
        r = fup_norm(g, e)
        assert r.sigma == 0.0 and r.iterations == 0

    def test_grid_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fup_norm(GridSet(Grid(8), (0,)), GridSet(Grid(16), (0,)))

    def test_power_matches_dense_on_cantor(self):
        s = make_cantor(CantorSpec(3, (0, 2), 3))
        g = discretize(s, 27)
        power = fup_norm(g, g, 1e-10)
        dense = fup_norm(g, g, method="dense")
        assert abs(power.sigma - dense.sigma) <= 1e-8
        assert dense.method == "DENSE" and power.method == "POWER"
        assert power.residual <= 1e-10

    def test_power_matches_independent_dense_oracle(self):
        rng = np.random.default_rng(5)
        for n in (64, 128):
            xi = tuple(sorted(rng.choice(n, size=n // 3, replace=False)))
            yi = tuple(sorted(rng.choice(n, size=n // 4, replace=False)))
            got = fup_norm(GridSet(Grid(n), xi), GridSet(Grid(n), yi),
                           1e-10).sigma
            want = dense_restricted_sigma(xi, yi, n)
            assert abs(got - want) <= 1e-8

    def test_monotone_in_set_enlargement(self):
        rng = np.random.default_rng(6)
        n = 128
        yi = tuple(sorted(rng.choice(n, size=20, replace=False)))
        xi_small = tuple(sorted(rng.choice(n, size=15, replace=False)))
        extra = tuple(j for j in range(0, n, 7) if j not in xi_small)
        xi_big = tuple(sorted(xi_small + extra))
        y = GridSet(Grid(n), yi)
        small = fup_norm(GridSet(Grid(n), xi_small), y, 1e-11).sigma
        big = fup_norm(GridSet(Grid(n), xi_big), y, 1e-11).sigma
        assert big >= small - 1e-9

    def test_nonconvergence_carries_best_estimate(self):
        rng = np.random.default_rng(11)
        n = 256
        xi = tuple(sorted(rng.choice(n, size=60, replace=False)))
        yi = tuple(sorted(rng.choice(n, size=60, replace=False)))
        from fuplab.operator import NonConvergenceError
        with pytest.raises(NonConvergenceError) as err:
            fup_norm(GridSet(Grid(n), xi), GridSet(Grid(n), yi),
                     tol=1e-14, max_iter=2)
        assert 0.0 < err.value.best_sigma <= 1.0 + 1e-9
        assert err.value.iterations == 4  # two starts, two iterations each

    def test_adjoint_symmetry(self):
        rng = np.random.default_rng(7)
        n = 96
        xi = tuple(sorted(rng.choice(n, size=30, replace=False)))
        yi = tuple(sorted(rng.choice(n, size=11, replace=False)))
        fwd = fup_norm(GridSet(Grid(n), xi), GridSet(Grid(n), yi),
                       method="dense").sigma
        rev = fup_norm(GridSet(Grid(n), yi), GridSet(Grid(n), xi),
                       method="dense").sigma
        assert abs(fwd - rev) <= 1e-12


class TestSweepAndFit:
    def test_unit_box_sweep_all_ones(self):
        box = IntervalSet([(0, 1)])
        sweep = norm_sweep(box, box, [8, 16, 32])
        assert all(abs(e.sigma - 1.0) <= 1e-10 for e in sweep.entries)

    def test_point_like_sets_trend(self):
        entries = []
        for n in (16, 32, 64):
            s = IntervalSet([(0, F(1, n))])
            e = norm_sweep(s, s, [n]).entries[0]
            entries.append(e)
            assert abs(e.sigma - n ** -0.5) <= 1e-10

    def test_sweep_requires_increasing(self):
        box = IntervalSet([(0, 1)])
        with pytest.raises(ValueError):
            norm_sweep(box, box, [16, 8])

    def test_sweep_records_per_entry_errors_without_aborting(self, cantor9):
        sweep = norm_sweep(cantor9, cantor9, [27, 81], tol=1e-14, max_iter=2)
        assert len(sweep.entries) == 2
        assert all(e.error for e in sweep.entries)
        assert all(0.0 < e.sigma <= 1.0 + 1e-9 for e in sweep.entries)

    def test_cantor_sweep_strictly_decreasing(self, cantor9):
        sweep = norm_sweep(cantor9, cantor9, [3 ** k for k in range(4, 8)],
                           tol=1e-10)
        sigmas = [e.sigma for e in sweep.entries]
        assert all(b < a for a, b in zip(sigmas, sigmas[1:]))
        dense = fup_norm(discretize(cantor9, 729), discretize(cantor9, 729),
                         method="dense").sigma
        assert abs(sigmas[2] - dense) <= 1e-8

    def test_fit_exact_power_law(self):
        sweep = SweepResult(tuple(
            SweepEntry(n, n ** -0.5, 0, 0.0, "DENSE")
            for n in (8, 16, 32, 64)))
        fit = fit_exponent(sweep)
        assert abs(fit.beta - 0.5) <= 1e-12
        assert fit.r_squared == 1.0

    def test_fit_constant(self):
        sweep = SweepResult(tuple(
            SweepEntry(n, 1.0, 0, 0.0, "DENSE") for n in (8, 16, 32)))
        fit = fit_exponent(sweep)
        assert abs(fit.beta) <= 1e-12 and fit.r_squared == 1.0

    def test_fit_rejects_degenerate(self):
        two = SweepResult(tuple(
            SweepEntry(n, 0.5, 0, 0.0, "DENSE") for n in (8, 16)))
        with pytest.raises(ValueError):
            fit_exponent(two)
        zero = SweepResult(tuple(
            SweepEntry(n, 0.0, 0, 0.0, "DENSE") for n in (8, 16, 32)))
        with pytest.raises(ValueError):
            fit_exponent(zero)


class TestEstimateC:
    def test_full_space_is_one(self):
        c = estimate_c(IntervalSet([(0, 1)]), IntervalSet([(0, F(1, 4))]),
                       64, 0)
        assert abs(c - 1.0) <= 1e-12

    def test_empty_holes_zero(self):
        c = estimate_c(IntervalSet(), IntervalSet([(0, F(1, 4))]), 64, 0)
        assert c == 0.0

    def test_empty_support_rejected(self):
        with pytest.raises(NoAdmissibleSupportError):
            estimate_c(IntervalSet([(0, 1)]), IntervalSet(), 64, 0)

    def test_depth_six_holes_against_dense_oracle(self):
        s = make_random_porous(F(1, 10), 6, 7)
        holes = IntervalSet([(0, 1)]).subtract_open(s.intervals)
        n = 256
        c = estimate_c(holes, s, n, 0)
        assert 0.0 < c < 1.0
        # independent dense check through the explicit Gram matrix
        sup = fattened_support(discretize(s, n), 0)
        ind = discretize(holes, n).mask().astype(float)
        gram = np.zeros((sup.size, sup.size), dtype=complex)
        for a, sa in enumerate(sup):
            for b, sb in enumerate(sup):
                js = np.nonzero(ind)[0]
                gram[a, b] = np.sum(
                    np.exp(2j * np.pi * js * (sa - sb) / n)) / n
        lam_min = float(np.linalg.eigvalsh(gram)[0])
        assert abs(c - math.sqrt(max(lam_min, 0.0))) <= 1e-8

    def test_complement_identity(self):
        s = make_random_porous(F(1, 10), 5, 3)
        n = 128
        sup = fattened_support(discretize(s, n), 1)
        ind = discretize(s, n).mask().astype(float)
        c = min_restricted_mass(ind, sup)
        sigma_c = max_restricted_mass(1.0 - ind, sup)
        assert abs(c * c + sigma_c * sigma_c - 1.0) <= 1e-8

    def test_iterative_matches_dense(self):
        s = make_random_porous(F(1, 8), 6, 9)
        n = 512
        sup = fattened_support(discretize(s, n), 2)
        ind = discretize(s, n).mask().astype(float)
        dense = min_restricted_mass(ind, sup, dense_limit=4096)
        iterative = min_restricted_mass(ind, sup, dense_limit=8)
        assert abs(dense - iterative) <= 1e-4
