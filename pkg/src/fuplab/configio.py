"""YAML experiment configs: strict schema, rational parsing, manifests.

Configs are flat YAML mappings per subcommand; unknown keys are rejected and
validation reports every violation, not just the first.  Rationals are
written as strings like "1/10" (plain ints allowed); set specifications are
one-of cantor/random/intervals/file mappings.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional

import yaml

from .intervals import CantorSpec, IntervalSet, make_cantor, make_random_porous


class ConfigError(ValueError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


def parse_rational(value) -> Fraction:
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value)
    raise ValueError(f"cannot read {value!r} as a rational")


SET_KEYS = {"cantor", "random", "intervals", "file"}


def validate_set_spec(spec, where: str, out: list[str]) -> None:
    if not isinstance(spec, dict) or len(spec) != 1:
        out.append(f"{where}: set spec must be a mapping with exactly one of "
                   f"{sorted(SET_KEYS)}")
        return
    kind, body = next(iter(spec.items()))
    if kind not in SET_KEYS:
        out.append(f"{where}: unknown set kind {kind!r}")
        return
    if kind == "cantor":
        _check_keys(body, {"base", "digits", "depth"}, set(), f"{where}.cantor", out)
        if isinstance(body, dict):
            if not isinstance(body.get("base"), int):
                out.append(f"{where}.cantor.base: integer required")
            if not isinstance(body.get("digits"), list):
                out.append(f"{where}.cantor.digits: list of integers required")
            if not isinstance(body.get("depth"), int):
                out.append(f"{where}.cantor.depth: integer required")
    elif kind == "random":
        _check_keys(body, {"nu", "depth", "seed"}, set(), f"{where}.random", out)
        if isinstance(body, dict):
            _try(lambda: parse_rational(body.get("nu")),
                 f"{where}.random.nu: rational required", out)
            if not isinstance(body.get("depth"), int):
                out.append(f"{where}.random.depth: integer required")
            if not isinstance(body.get("seed"), int):
                out.append(f"{where}.random.seed: integer required")
    elif kind == "intervals":
        if not isinstance(body, list):
            out.append(f"{where}.intervals: list of [lo, hi] pairs required")
        else:
            for i, pair in enumerate(body):
                if not (isinstance(pair, list) and len(pair) == 2):
                    out.append(f"{where}.intervals[{i}]: [lo, hi] pair required")
                else:
                    _try(lambda: [parse_rational(p) for p in pair],
                         f"{where}.intervals[{i}]: rational endpoints required",
                         out)
    elif kind == "file":
        if not isinstance(body, str):
            out.append(f"{where}.file: path string required")


def build_set(spec) -> IntervalSet:
    kind, body = next(iter(spec.items()))
    if kind == "cantor":
        return make_cantor(CantorSpec(body["base"], body["digits"],
                                      body["depth"]))
    if kind == "random":
        return make_random_porous(parse_rational(body["nu"]), body["depth"],
                                  body["seed"])
    if kind == "intervals":
        return IntervalSet([(parse_rational(a), parse_rational(b))
                            for a, b in body])
    if kind == "file":
        return IntervalSet.from_text(Path(body).read_text())
    raise ValueError(f"unknown set kind {kind!r}")


def _check_keys(body, required: set, optional: set, where: str,
                out: list[str]) -> None:
    if not isinstance(body, dict):
        out.append(f"{where}: mapping required")
        return
    unknown = set(body) - required - optional
    for key in sorted(unknown):
        out.append(f"{where}: unknown key {key!r}")
    for key in sorted(required - set(body)):
        out.append(f"{where}: missing key {key!r}")


def _try(fn: Callable, message: str, out: list[str]) -> None:
    try:
        fn()
    except Exception:
        out.append(message)


def _is_rat(body, key, where, out, lo=None, hi=None):
    try:
        v = parse_rational(body[key])
    except Exception:
        out.append(f"{where}.{key}: rational required")
        return
    if lo is not None and v < lo:
        out.append(f"{where}.{key}: must be >= {lo}")
    if hi is not None and v > hi:
        out.append(f"{where}.{key}: must be <= {hi}")


def _is_int(body, key, where, out, lo=None, hi=None):
    v = body.get(key)
    if not isinstance(v, int) or isinstance(v, bool):
        out.append(f"{where}.{key}: integer required")
        return
    if lo is not None and v < lo:
        out.append(f"{where}.{key}: must be >= {lo}")
    if hi is not None and v > hi:
        out.append(f"{where}.{key}: must be <= {hi}")


def _is_num(body, key, where, out, lo=None):
    v = body.get(key)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        out.append(f"{where}.{key}: number required")
        return
    if lo is not None and v <= lo:
        out.append(f"{where}.{key}: must be > {lo}")


def validate_config(subcommand: str, cfg: Any) -> list[str]:
    """Schema and cross-field diagnostics; empty list means valid."""
    out: list[str] = []
    if not isinstance(cfg, dict):
        return [f"{subcommand}: config must be a YAML mapping"]
    c = subcommand
    if c == "porosity":
        _check_keys(cfg, {"set", "nu", "alpha0", "alpha1"}, {"seed"}, c, out)
        if "set" in cfg:
            validate_set_spec(cfg["set"], f"{c}.set", out)
        for key in ("nu", "alpha0", "alpha1"):
            if key in cfg:
                _is_rat(cfg, key, c, out)
        if not out:
            a0, a1 = parse_rational(cfg["alpha0"]), parse_rational(cfg["alpha1"])
            if not (0 < a0 <= a1):
                out.append(f"{c}: need 0 < alpha0 <= alpha1")
            nu = parse_rational(cfg["nu"])
            if not (0 < nu < 1):
                out.append(f"{c}.nu: must lie in (0, 1)")
    elif c == "norm":
        _check_keys(cfg, {"set_x", "set_y", "n"}, {"tol", "seed"}, c, out)
        for key in ("set_x", "set_y"):
            if key in cfg:
                validate_set_spec(cfg[key], f"{c}.{key}", out)
        _is_int(cfg, "n", c, out, lo=1) if "n" in cfg else None
        if "tol" in cfg:
            _is_num(cfg, "tol", c, out, lo=0.0)
    elif c == "sweep":
        _check_keys(cfg, {"set_x", "set_y", "ns"}, {"tol", "seed"}, c, out)
        for key in ("set_x", "set_y"):
            if key in cfg:
                validate_set_spec(cfg[key], f"{c}.{key}", out)
        ns = cfg.get("ns")
        if not (isinstance(ns, list) and ns
                and all(isinstance(v, int) for v in ns)):
            out.append(f"{c}.ns: nonempty list of integers required")
        elif any(ns[i] >= ns[i + 1] for i in range(len(ns) - 1)):
            out.append(f"{c}.ns: must be strictly increasing")
        if "tol" in cfg:
            _is_num(cfg, "tol", c, out, lo=0.0)
    elif c == "holes":
        _check_keys(cfg, {"set", "nu", "k", "n"}, {"k0", "seed"}, c, out)
        if "set" in cfg:
            validate_set_spec(cfg["set"], f"{c}.set", out)
        if "nu" in cfg:
            _is_rat(cfg, "nu", c, out)
        _is_int(cfg, "k", c, out, lo=0) if "k" in cfg else None
        _is_int(cfg, "n", c, out, lo=16) if "n" in cfg else None
        if "k0" in cfg:
            _is_int(cfg, "k0", c, out, lo=1)
        if not out and "k0" in cfg:
            if 2 ** (cfg["k"] + cfg["k0"]) > cfg["n"] // 4:
                out.append(
                    f"{c}: band constraint violated: 2^(k+k0) = "
                    f"{2 ** (cfg['k'] + cfg['k0'])} exceeds n/4 = {cfg['n'] // 4}"
                )
    elif c == "chain":
        _check_keys(cfg, {"set_x", "set_y", "k0", "steps", "corpus"},
                    {"seed", "nu"}, c, out)
        for key in ("set_x", "set_y"):
            if key in cfg:
                validate_set_spec(cfg[key], f"{c}.{key}", out)
        _is_int(cfg, "k0", c, out, lo=1, hi=8) if "k0" in cfg else None
        _is_int(cfg, "steps", c, out, lo=1, hi=4) if "steps" in cfg else None
        _is_int(cfg, "corpus", c, out, lo=1) if "corpus" in cfg else None
        if "nu" in cfg:
            _is_rat(cfg, "nu", c, out)
        if not out:
            k0, steps = cfg["k0"], cfg["steps"]
            n = 2 ** (steps * k0 + k0 + 2)
            if n > 2 ** 22:
                out.append(
                    f"{c}: band constraint: grid 2^(k0*(steps+1)+2) = {n} "
                    f"exceeds 2^22; lower k0 or steps"
                )
    elif c == "harmonic":
        _check_keys(cfg, {"r_values", "hole", "t", "walks"},
                    {"shell", "max_steps", "seed", "corpus"}, c, out)
        rv = cfg.get("r_values")
        if not (isinstance(rv, list) and rv
                and all(isinstance(v, (int, float)) for v in rv)):
            out.append(f"{c}.r_values: nonempty list of numbers required")
        hole = cfg.get("hole")
        if not (isinstance(hole, list) and len(hole) == 2):
            out.append(f"{c}.hole: [lo, hi] pair required")
        elif not (0 <= hole[0] < hole[1] <= 1):
            out.append(f"{c}.hole: need 0 <= lo < hi <= 1")
        if "t" in cfg and not isinstance(cfg["t"], (int, float)):
            out.append(f"{c}.t: number required")
        _is_int(cfg, "walks", c, out, lo=1) if "walks" in cfg else None
        if "shell" in cfg:
            _is_num(cfg, "shell", c, out, lo=0.0)
        if "max_steps" in cfg:
            _is_int(cfg, "max_steps", c, out, lo=1)
        if "corpus" in cfg:
            _is_int(cfg, "corpus", c, out, lo=0)
    elif c == "cover":
        _check_keys(cfg, {"set", "K", "nu"}, {"seed"}, c, out)
        if "set" in cfg:
            validate_set_spec(cfg["set"], f"{c}.set", out)
        _is_int(cfg, "K", c, out, lo=0, hi=30) if "K" in cfg else None
        if "nu" in cfg:
            _is_rat(cfg, "nu", c, out)
    elif c == "weight":
        _check_keys(cfg, {"set", "K", "nu"},
                    {"ramp_fraction", "patch_halfwidth", "seed"}, c, out)
        if "set" in cfg:
            validate_set_spec(cfg["set"], f"{c}.set", out)
        _is_int(cfg, "K", c, out, lo=0, hi=30) if "K" in cfg else None
        if "nu" in cfg:
            _is_rat(cfg, "nu", c, out)
        if "ramp_fraction" in cfg:
            v = cfg["ramp_fraction"]
            if not isinstance(v, (int, float)) or not (0.01 <= v <= 1.0):
                out.append(f"{c}.ramp_fraction: number in [0.01, 1] required")
        if "patch_halfwidth" in cfg:
            _is_num(cfg, "patch_halfwidth", c, out, lo=0.0)
    else:
        out.append(f"unknown subcommand {subcommand!r}")
    if "seed" in (cfg or {}) and not isinstance(cfg.get("seed"), int):
        out.append(f"{c}.seed: integer required")
    return out


def load_config(path: Path) -> tuple[Any, str]:
    raw = Path(path).read_text()
    return yaml.safe_load(raw), raw


@dataclass
class Manifest:
    """Per-run record of every constant used; no silent defaults."""

    subcommand: str
    config_sha256: str
    seed: Optional[int]
    version: str
    constants: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    timings_s: dict = field(default_factory=dict)
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    @classmethod
    def start(cls, subcommand: str, raw_config: str, seed: Optional[int],
              version: str) -> "Manifest":
        digest = hashlib.sha256(raw_config.encode()).hexdigest()
        return cls(subcommand=subcommand, config_sha256=digest, seed=seed,
                   version=version)

    def stage(self, name: str) -> None:
        now = time.perf_counter()
        self.timings_s[name] = round(now - self._t0, 6)
        self._t0 = now

    def write(self, out_dir: Path) -> Path:
        payload = {
            "tool": "fuplab",
            "version": self.version,
            "subcommand": self.subcommand,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "constants": self.constants,
            "outputs": self.outputs,
            "timings_s": self.timings_s,
        }
        path = Path(out_dir) / "manifest.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                                   default=str) + "\n")
        return path
