"""Command-line experiment runner.

Every subcommand reads a strict YAML config, writes CSV outputs plus a
manifest.json recording each constant used, and (by default) renders a
figure alongside.  Identical config and seed give byte-identical CSVs.

Exit codes: 0 success, 2 validation failure, 3 computation failure,
4 certification-negative (e.g. porosity refuted or unknown).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .configio import (
    Manifest,
    build_set,
    load_config,
    parse_rational,
    validate_config,
)
from .harmonic import (
    HarmonicError,
    SlitStrip,
    WalkConfig,
    check_harmonic_lemma,
    check_subharmonic_bound,
    conservative_kappa,
    estimate_harmonic_measure,
    fit_kappa,
    search_harmonic_constant,
)
from .intervals import (
    PorosityParams,
    PorosityStatus,
    SetError,
    check_porosity,
    max_porosity,
)
from .iteration import (
    IterationError,
    MollifierSpec,
    PorosityViolation,
    build_holes,
    build_mollifier,
    find_k0,
)
from .iteration import run_chain as run_chain_engine
from .operator import (
    NonConvergenceError,
    OperatorError,
    discretize,
    fit_exponent,
    fup_norm,
    min_restricted_mass,
    norm_sweep,
)
from .weights import build_weight, check_weight, choose_delta, cover_bands, \
    poisson_integral, surrogate_sum

RUN_COMMANDS = ("porosity", "norm", "sweep", "holes", "chain", "harmonic",
                "cover", "weight")


def _f(x) -> str:
    """Shortest round-trip float formatting; deterministic per binary."""
    return repr(float(x))


def _q(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _write_csv(path: Path, header: str, rows: list[list[str]],
               comments: list[str] = ()) -> Path:
    lines = [header]
    lines.extend(",".join(row) for row in rows)
    lines.extend(comments)
    path.write_text("\n".join(lines) + "\n")
    return path


def _seed_of(cfg, args) -> int:
    if args.seed is not None:
        return args.seed
    return cfg.get("seed", 0)


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def run_porosity(cfg, out: Path, seed: int, figures: bool, man: Manifest) -> int:
    s = build_set(cfg["set"])
    params = PorosityParams(parse_rational(cfg["nu"]),
                            parse_rational(cfg["alpha0"]),
                            parse_rational(cfg["alpha1"]))
    man.stage("build")
    verdict = check_porosity(s, params)
    man.stage("certify")
    wit = verdict.witness
    row = [verdict.status.value, _q(params.nu), _q(params.alpha0),
           _q(params.alpha1),
           _q(wit[0]) if wit else "", _q(wit[1]) if wit else "",
           _q(verdict.margin)]
    man.outputs.append(str(_write_csv(
        out / "porosity.csv",
        "status,nu,alpha0,alpha1,witness_lo,witness_hi,margin", [row])))
    man.constants.update(nu=_q(params.nu), alpha0=_q(params.alpha0),
                         alpha1=_q(params.alpha1),
                         status=verdict.status.value,
                         margin=_q(verdict.margin),
                         size_ratio="1091/1000")
    if figures:
        from .figures import render_intervals
        man.outputs.append(str(render_intervals(
            {"set": s}, f"porosity: {verdict.status.value}",
            out / "porosity.png", witness=wit)))
    return 0 if verdict.status is PorosityStatus.CERTIFIED_POROUS else 4


def run_norm(cfg, out: Path, seed: int, figures: bool, man: Manifest) -> int:
    sx, sy = build_set(cfg["set_x"]), build_set(cfg["set_y"])
    n = cfg["n"]
    tol = cfg.get("tol", 1e-10)
    gx, gy = discretize(sx, n), discretize(sy, n)
    man.stage("discretize")
    r = fup_norm(gx, gy, tol=tol, seed=seed)
    man.stage("power")
    man.outputs.append(str(_write_csv(
        out / "norm.csv", "N,sigma,iterations,residual,method",
        [[str(n), _f(r.sigma), str(r.iterations), _f(r.residual), r.method]])))
    man.constants.update(n=n, tol=tol, sizes={"X": len(gx), "Y": len(gy)},
                         sigma=r.sigma)
    return 0


def run_sweep(cfg, out: Path, seed: int, figures: bool, man: Manifest,
              threads: int = 0) -> int:
    sx, sy = build_set(cfg["set_x"]), build_set(cfg["set_y"])
    ns = cfg["ns"]
    tol = cfg.get("tol", 1e-10)
    man.stage("build")
    if threads > 1:
        def one(n):
            return norm_sweep(sx, sy, [n], tol=tol, seed=seed).entries[0]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(one, ns))
        from .operator import SweepResult
        sweep = SweepResult(tuple(entries))
    else:
        sweep = norm_sweep(sx, sy, ns, tol=tol, seed=seed)
    man.stage("sweep")
    rows = [[str(e.n), _f(e.sigma), str(e.iterations), _f(e.residual),
             e.method] for e in sweep.entries]
    comments = []
    fit = None
    try:
        fit = fit_exponent(sweep)
        comments.append(f"# beta={_f(fit.beta)},logC={_f(fit.logC)},"
                        f"r2={_f(fit.r_squared)}")
        man.constants.update(beta=fit.beta, logC=fit.logC,
                             r_squared=fit.r_squared)
    except ValueError as exc:
        comments.append(f"# fit unavailable: {exc}")
    man.outputs.append(str(_write_csv(
        out / "sweep.csv", "N,sigma,iterations,residual,method", rows,
        comments)))
    man.constants.update(tol=tol, ns=list(ns))
    if figures:
        from .figures import render_sweep
        man.outputs.append(str(render_sweep(sweep.entries, fit,
                                            out / "sweep.png")))
    return 0


def run_holes(cfg, out: Path, seed: int, figures: bool, man: Manifest) -> int:
    s = build_set(cfg["set"])
    nu = parse_rational(cfg["nu"])
    k, n = cfg["k"], cfg["n"]
    decomp = build_holes(s, k, nu)
    man.stage("holes")
    k0 = cfg.get("k0")
    if k0 is None:
        k0 = find_k0(s, nu, [k], n)
    mol = build_mollifier(decomp, MollifierSpec(k0), n)
    man.stage("mollifier")
    rows = []
    for (i_lo, i_hi), (h_lo, h_hi) in sorted(decomp.chosen.items()):
        c = (h_lo + h_hi) / 2
        quarter = (h_hi - h_lo) / 4
        rows.append([_q(i_lo), _q(i_hi), _q(h_lo), _q(h_hi),
                     _q(c - quarter), _q(c + quarter)])
    man.outputs.append(str(_write_csv(
        out / "holes.csv",
        "interval_lo,interval_hi,hole_lo,hole_hi,shrunk_lo,shrunk_hi", rows)))
    man.outputs.append(str(_write_csv(
        out / "mollifier.csv",
        "k,k0,band_halfwidth,max_on_shrunk,min_on_set,outside_band_mass",
        [[str(k), str(k0), str(mol.band_halfwidth), _f(mol.max_on_shrunk),
          _f(mol.min_on_set), _f(mol.outside_band_mass())]])))
    man.constants.update(k=k, k0=k0, n=n, nu=_q(nu),
                         max_on_shrunk=mol.max_on_shrunk,
                         min_on_set=mol.min_on_set)
    if figures:
        from .figures import render_intervals
        man.outputs.append(str(render_intervals(
            {"set": s, "holes": decomp.holes, "shrunk": decomp.shrunk_holes},
            f"holes at level {k}", out / "holes.png")))
    return 0


def run_chain(cfg, out: Path, seed: int, figures: bool, man: Manifest) -> int:
    sx, sy = build_set(cfg["set_x"]), build_set(cfg["set_y"])
    k0, steps, corpus = cfg["k0"], cfg["steps"], cfg["corpus"]
    big_k = steps * k0
    n = 2 ** (big_k + k0 + 2)
    if "nu" in cfg:
        nu = parse_rational(cfg["nu"])
    else:
        nu = max_porosity(sx, Fraction(1, 2 ** big_k), 1)
        if nu == 0:
            raise PorosityViolation((Fraction(0), Fraction(1)))
    man.stage("certify")
    levels = list(range(0, big_k + 1, k0))
    spec = MollifierSpec(k0)
    mols = {k: build_mollifier(build_holes(sx, k, nu), spec, n)
            for k in levels}
    man.stage("mollifiers")
    y_bins = np.asarray(discretize(sy, 2 ** big_k).indices, dtype=np.int64)
    if y_bins.size == 0:
        raise IterationError("Y discretizes to an empty frequency band")
    cs = {}
    for k in levels[1:]:
        pad = 2 ** k
        sup = np.unique(
            (y_bins[:, None] + np.arange(-pad, pad + 1)[None, :]).ravel() % n
        )
        ind = np.zeros(n)
        ind[mols[k].inside_cells] = 1.0
        cs[k] = min_restricted_mass(ind, sup)
    c = min(cs.values())
    man.stage("contraction_constant")
    threshold = math.sqrt(1.0 - c * c / 10.0)
    rng = np.random.default_rng(seed)
    rows = []
    fig_rows = []
    total_flags = 0
    for fn in range(corpus):
        coef = np.zeros(n, dtype=complex)
        coef[y_bins] = (rng.standard_normal(y_bins.size)
                        + 1j * rng.standard_normal(y_bins.size))
        f0 = np.fft.ifft(coef)
        st = run_chain_engine(f0, sx, nu, k0, big_k, c, y_bins, mols)
        total_flags += len(st.flags)
        for i, k in enumerate(st.levels):
            ratio = st.ratios[i - 1] if i >= 1 else math.nan
            flag = 1 if (i >= 1 and k in st.flags) else 0
            rows.append([str(k), _f(st.norms[i]), _f(ratio), _f(threshold),
                         str(flag)])
            fig_rows.append((fn, k, st.norms[i], ratio))
    man.stage("chains")
    man.outputs.append(str(_write_csv(
        out / "chain.csv", "k,norm,ratio,bound,flag", rows)))
    man.constants.update(k0=k0, K=big_k, n=n, nu=_q(nu), corpus=corpus,
                         c_per_level={str(k): v for k, v in cs.items()},
                         c_used=c, threshold=threshold, flags=total_flags)
    if figures:
        from .figures import render_chain
        man.outputs.append(str(render_chain(fig_rows, threshold,
                                            out / "chain.png")))
    return 0


def run_harmonic(cfg, out: Path, seed: int, figures: bool,
                 man: Manifest, threads: int = 0) -> int:
    rs = [float(r) for r in cfg["r_values"]]
    hole = (float(cfg["hole"][0]), float(cfg["hole"][1]))
    t = float(cfg["t"])
    wcfg = WalkConfig(walks=cfg["walks"], shell=cfg.get("shell", 1e-3),
                      max_steps=cfg.get("max_steps", 10_000), seed=seed)

    def one(r):
        return estimate_harmonic_measure(SlitStrip(r, hole), t, wcfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            ests = list(pool.map(one, rs))
    else:
        ests = [one(r) for r in rs]
    man.stage("walks")
    rows = [[_f(r), _f(t), _f(e.p_hat), _f(e.ci95), str(e.walks_used),
             str(e.timeouts)] for r, e in zip(rs, ests)]
    man.outputs.append(str(_write_csv(
        out / "harmonic.csv", "r,t,p_hat,ci95,walks,timeouts", rows)))
    fit = None
    if len(rs) >= 4 and all(e.p_hat > 0 for e in ests):
        fit = fit_kappa(rs, hole, t, wcfg, p_hats=[e.p_hat for e in ests])
        man.constants.update(C_fit=fit.C_fit, intercept=fit.intercept,
                             lower_bound_ok=fit.lower_bound_ok)
    elif len(rs) >= 4:
        man.constants.update(C_fit="unavailable: vanishing estimate")
    corpus = cfg.get("corpus", 0)
    if corpus > 0:
        r_min = min(rs)
        kappa = conservative_kappa(SlitStrip(r_min, hole),
                                   WalkConfig(wcfg.walks, wcfg.shell,
                                              wcfg.max_steps, seed + 1))
        rng = np.random.default_rng(seed + 2)
        srows = []
        for i in range(corpus):
            freqs = np.arange(-64, 65)
            coeffs = ((rng.standard_normal(freqs.size)
                       + 1j * rng.standard_normal(freqs.size))
                      * np.exp(-np.abs(freqs) * 0.05))
            rep = check_subharmonic_bound(freqs, coeffs, (0.0, 1.0), hole,
                                          r_min, kappa, samples=2 ** 12)
            srows.append([str(i), _f(rep.lhs), _f(rep.rhs), _f(rep.slack),
                          _f(kappa)])
        man.outputs.append(str(_write_csv(
            out / "subharmonic.csv", "index,lhs,rhs,slack,kappa", srows)))
        man.constants.update(kappa_conservative=kappa, corpus=corpus)
        # L2 interpolation inequality on the grid, holes = the configured
        # slit per unit cell; records the empirical minimal constant
        n_grid = 1024
        hole_cells = np.arange(int(math.ceil(hole[0] * n_grid)),
                               int(hole[1] * n_grid))
        rng2 = np.random.default_rng(seed + 3)
        theta = choose_delta(Fraction(str(hole[1] - hole[0])))
        corpus_g = []
        for _ in range(corpus):
            coef = np.zeros(n_grid, dtype=complex)
            band = int(rng2.integers(8, 64))
            coef[:band] = rng2.standard_normal(band) \
                + 1j * rng2.standard_normal(band)
            corpus_g.append(np.fft.ifft(coef))
        c_min = search_harmonic_constant(corpus_g, hole_cells, 64, theta)
        lrows = []
        for i, g in enumerate(corpus_g):
            rep = check_harmonic_lemma(g, hole_cells, 64, theta, c_min)
            lrows.append([str(i), _f(rep.lhs), _f(rep.rhs), _f(rep.kappa),
                          _f(rep.C), str(int(rep.holds))])
        man.outputs.append(str(_write_csv(
            out / "lemma.csv", "index,lhs,rhs,kappa,C,holds", lrows)))
        man.constants.update(lemma_C_empirical=c_min)
    man.stage("checks")
    man.constants.update(walks=wcfg.walks, shell=wcfg.shell,
                         max_steps=wcfg.max_steps, t=t, hole=list(hole))
    if figures:
        from .figures import render_harmonic
        man.outputs.append(str(render_harmonic(
            rs, [e.p_hat for e in ests], [e.ci95 for e in ests], fit,
            out / "harmonic.png")))
    return 0


def run_cover(cfg, out: Path, seed: int, figures: bool, man: Manifest) -> int:
    s = build_set(cfg["set"])
    big_k = cfg["K"]
    nu = parse_rational(cfg["nu"])
    theta = choose_delta(nu)
    ytilde = s.dilate(2 ** big_k)
    report = cover_bands(ytilde, big_k, theta)
    man.stage("cover")
    rows = []
    for b in report.bands:
        bound = float(theta(2 ** b.k)) ** (-(1.0 - theta.epsilon))
        rows.append([str(b.k), _f(theta(2 ** b.k)), str(b.count), _f(bound)])
    man.outputs.append(str(_write_csv(
        out / "cover.csv", "k,theta,Nk,bound", rows)))
    man.constants.update(K=big_k, nu=_q(nu), delta=theta.delta, m=theta.m,
                         epsilon=theta.epsilon, slope_fit=report.slope_fit,
                         C_fit=report.C_fit,
                         slope_bound=1.0 - theta.epsilon + 0.05)
    if figures:
        from .figures import render_cover
        man.outputs.append(str(render_cover(report.bands, theta,
                                            theta.epsilon,
                                            out / "cover.png")))
    return 0


def run_weight(cfg, out: Path, seed: int, figures: bool, man: Manifest) -> int:
    s = build_set(cfg["set"])
    big_k = cfg["K"]
    nu = parse_rational(cfg["nu"])
    theta = choose_delta(nu)
    ytilde = s.dilate(2 ** big_k)
    report = cover_bands(ytilde, big_k, theta)
    man.stage("cover")
    w = build_weight(report, ramp_fraction=cfg.get("ramp_fraction", 1.0),
                     patch_halfwidth=cfg.get("patch_halfwidth", 32.0))
    ok, witness = check_weight(w, ytilde)
    pintegral = poisson_integral(w)
    ssum = surrogate_sum(report)
    man.stage("weight")
    lines = ["# weight breakpoints v1"]
    lines.extend(f"{_f(x)} {_f(y)}"
                 for x, y in zip(w.pieces.xs, w.pieces.ys))
    (out / "weight.txt").write_text("\n".join(lines) + "\n")
    man.outputs.append(str(out / "weight.txt"))
    rows = [
        ["delta", _f(theta.delta)],
        ["epsilon", _f(theta.epsilon)],
        ["m", str(theta.m)],
        ["slope_fit", _f(report.slope_fit)],
        ["C_fit", _f(report.C_fit)],
        ["poisson_integral", _f(pintegral)],
        ["surrogate_sum", _f(ssum)],
        ["check_weight_ok", str(int(ok))],
        ["check_weight_witness", _f(witness) if witness is not None else ""],
        ["slope_realized", _f(w.slope_bound)],
    ]
    man.outputs.append(str(_write_csv(out / "weight_summary.csv",
                                      "key,value", rows)))
    man.constants.update(K=big_k, nu=_q(nu), delta=theta.delta,
                         epsilon=theta.epsilon, m=theta.m,
                         poisson_integral=pintegral, surrogate_sum=ssum,
                         check_weight_ok=bool(ok),
                         slope_realized=w.slope_bound)
    if figures:
        from .figures import render_weight
        man.outputs.append(str(render_weight(w, out / "weight.png")))
    return 0 if ok else 4


RUNNERS = {
    "porosity": run_porosity,
    "norm": run_norm,
    "sweep": run_sweep,
    "holes": run_holes,
    "chain": run_chain,
    "harmonic": run_harmonic,
    "cover": run_cover,
    "weight": run_weight,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuplab",
        description="fractal-uncertainty numerical laboratory",
    )
    parser.add_argument("--version", action="version",
                        version=f"fuplab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path,
                       help="YAML experiment config")
        p.add_argument("--out", type=Path, default=Path("."),
                       help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads for independent entries (0 = auto)")
        p.add_argument("--figures", dest="figures", action="store_true",
                       default=True, help="render PNG figures (default)")
        p.add_argument("--no-figures", dest="figures", action="store_false",
                       help="skip figure rendering")

    for name in RUN_COMMANDS:
        common(sub.add_parser(name, help=f"run the {name} experiment"))
    vp = sub.add_parser("validate", help="check a config without running")
    vp.add_argument("target", choices=RUN_COMMANDS,
                    help="subcommand the config is for")
    vp.add_argument("--config", required=True, type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.subcommand == "validate":
        try:
            cfg, _ = load_config(args.config)
        except Exception as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return 2
        diags = validate_config(args.target, cfg)
        for d in diags:
            print(d, file=sys.stderr)
        return 2 if diags else 0

    try:
        cfg, raw = load_config(args.config)
    except Exception as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    diags = validate_config(args.subcommand, cfg)
    if diags:
        for d in diags:
            print(d, file=sys.stderr)
        return 2

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    seed = _seed_of(cfg, args)
    man = Manifest.start(args.subcommand, raw, seed, __version__)
    runner = RUNNERS[args.subcommand]
    try:
        if args.subcommand in ("sweep", "harmonic"):
            code = runner(cfg, out, seed, args.figures, man,
                          threads=args.threads)
        else:
            code = runner(cfg, out, seed, args.figures, man)
    except PorosityViolation as exc:
        _error_report(out, man, exc)
        return 4
    except (SetError, OperatorError, IterationError, HarmonicError,
            NonConvergenceError, ValueError) as exc:
        _error_report(out, man, exc)
        return 3
    man.write(out)
    return code


def _error_report(out: Path, man: Manifest, exc: Exception) -> None:
    report = {"error": type(exc).__name__, "message": str(exc),
              "partial_outputs": man.outputs}
    (out / "error.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
    man.constants["error"] = type(exc).__name__
    man.write(out)


if __name__ == "__main__":
    sys.exit(main())
