"""Flat key = value run configuration with unit suffixes.

Values are written like ``a = 3 um``, ``B1 = 2 kG``, ``temperature = 11 uK``;
everything is converted to SI at the parsing boundary and validated before
any computation starts.  Unknown keys are rejected.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field

import numpy as np

from .constants import CONSTANTS
from .dynamics import (AtomSpecies, CESIUM, ExactStripes, FullExpansion,
                       PotentialModel, PureExponential, TwoTerm)
from .ensemble import EnsembleSpec
from .errors import ConfigError
from .field import MirrorSpec, harmonic_coefficients, m0_for_surface_field

_LENGTH = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9}
_FIELD = {"T": 1.0, "mT": 1e-3, "uT": 1e-6, "µT": 1e-6,
          "G": 1e-4, "mG": 1e-7, "kG": 1e-1}
_TEMPERATURE = {"K": 1.0, "mK": 1e-3, "uK": 1e-6, "µK": 1e-6, "nK": 1e-9}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}
_VELOCITY = {"m/s": 1.0, "cm/s": 1e-2, "mm/s": 1e-3, "um/s": 1e-6}
_MAGNETIZATION = {"A/m": 1.0, "kA/m": 1e3, "MA/m": 1e6}
_MASS = {"kg": 1.0, "u": 1.6605e-27}
_MOMENT = {"J/T": 1.0, "mu_B": CONSTANTS.mu_B}
_NONE = {"": 1.0}

_NUM_RE = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?[0-9]+)?)\s*([^\s]*)\s*$")


def _quantity(text: str, units: dict, key: str) -> float:
    m = _NUM_RE.match(text)
    if not m:
        raise ConfigError(f"{key}: cannot parse quantity {text!r}")
    value, unit = m.group(1), m.group(2)
    if unit not in units:
        raise ConfigError(
            f"{key}: unknown unit {unit!r} (expected one of {sorted(units)})")
    try:
        return float(value) * units[unit]
    except ValueError as exc:
        raise ConfigError(f"{key}: bad number {value!r}") from exc


def _integer(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from exc


def _number(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from exc


def _time_list(text: str, key: str):
    """Parse '0.5 ms, 2.5 ms, ...' or 'start:stop:step ms' into seconds."""
    text = text.strip()
    if ":" in text:
        m = _NUM_RE.match(text)
        parts = text.split()
        unit = parts[-1] if len(parts) > 1 else "s"
        if unit not in _TIME:
            raise ConfigError(f"{key}: unknown time unit {unit!r}")
        rng = parts[0].split(":")
        if len(rng) != 3:
            raise ConfigError(f"{key}: ranges are start:stop:step, got {text!r}")
        start, stop, step = (_number(v, key) * _TIME[unit] for v in rng)
        if step <= 0.0 or stop < start:
            raise ConfigError(f"{key}: bad range {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(n))
    return tuple(_quantity(tok, _TIME, key) for tok in text.split(","))


def _window(text: str, key: str):
    vals = _time_list(text, key)
    if len(vals) != 2:
        raise ConfigError(f"{key}: expected two times 'lo:hi unit' or 'lo unit, hi unit'")
    return (vals[0], vals[1])


_MODEL_NAMES = ("two-term", "full-expansion", "exact-stripes", "pure-exponential")


@dataclass
class RunConfig:
    """All run parameters in SI units; defaults mirror the reference device."""

    # mirror geometry and magnetization
    a: float = 3e-6
    c: float = 1e-6
    b: float = 30e-9
    B1: float = 0.2            # target first-harmonic amplitude [T]
    M0: float = 0.0            # explicit magnetization [A/m]; 0 means derive from B1
    n_stripes: float = math.inf
    bias: float = 1e-5         # 100 mG along the stripes

    # atom
    atom: str = "Cs"
    mass: float = 0.0          # custom species when both mass and moment set
    moment: float = 0.0

    # model and run controls
    model: str = "two-term"
    drop: float = 3e-3
    t_end: float = 0.15
    tol: float = 1e-9
    epsilon: float = 0.01

    # ensemble
    n_atoms: int = 10000
    temperature: float = 11e-6
    sigma_x: float = 2e-4
    sigma_y: float = 2e-4
    mean_vx: float = 0.0
    mean_vy: float = 0.0
    seed: int = 1
    snapshots: tuple = dc_field(default_factory=lambda: tuple(
        0.0025 * i for i in range(1, 45)))
    kick: float = 1.0

    # field-map grid
    x_min: float = -3e-6
    x_max: float = 3e-6
    nx: int = 61
    y_min: float = 0.5e-6
    y_max: float = 9e-6
    ny: int = 35

    # analysis windows
    fit_window: tuple = (0.0, 0.015)
    post_window: tuple = ()     # empty: derive from drop height and guard
    guard: float = 0.005
    threshold_sigma: float = 3.0

    # execution
    threads: int = 0            # 0: resolve from env / default 1
    out: str = "."


_PARSERS = {
    "a": ("a", lambda v: _quantity(v, _LENGTH, "a")),
    "c": ("c", lambda v: _quantity(v, _LENGTH, "c")),
    "b": ("b", lambda v: _quantity(v, _LENGTH, "b")),
    "B1": ("B1", lambda v: _quantity(v, _FIELD, "B1")),
    "M0": ("M0", lambda v: _quantity(v, _MAGNETIZATION, "M0")),
    "n_stripes": ("n_stripes", lambda v: math.inf if v.strip() in ("inf", "infinite")
                  else float(_integer(v, "n_stripes"))),
    "bias": ("bias", lambda v: _quantity(v, _FIELD, "bias")),
    "atom": ("atom", lambda v: v.strip()),
    "mass": ("mass", lambda v: _quantity(v, _MASS, "mass")),
    "moment": ("moment", lambda v: _quantity(v, _MOMENT, "moment")),
    "model": ("model", lambda v: v.strip()),
    "drop": ("drop", lambda v: _quantity(v, _LENGTH, "drop")),
    "t_end": ("t_end", lambda v: _quantity(v, _TIME, "t_end")),
    "tol": ("tol", lambda v: _number(v, "tol")),
    "epsilon": ("epsilon", lambda v: _number(v, "epsilon")),
    "n_atoms": ("n_atoms", lambda v: _integer(v, "n_atoms")),
    "temperature": ("temperature", lambda v: _quantity(v, _TEMPERATURE, "temperature")),
    "sigma_x": ("sigma_x", lambda v: _quantity(v, _LENGTH, "sigma_x")),
    "sigma_y": ("sigma_y", lambda v: _quantity(v, _LENGTH, "sigma_y")),
    "mean_vx": ("mean_vx", lambda v: _quantity(v, _VELOCITY, "mean_vx")),
    "mean_vy": ("mean_vy", lambda v: _quantity(v, _VELOCITY, "mean_vy")),
    "seed": ("seed", lambda v: _integer(v, "seed")),
    "snapshots": ("snapshots", lambda v: _time_list(v, "snapshots")),
    "kick": ("kick", lambda v: _number(v, "kick")),
    "x_min": ("x_min", lambda v: _quantity(v, _LENGTH, "x_min")),
    "x_max": ("x_max", lambda v: _quantity(v, _LENGTH, "x_max")),
    "nx": ("nx", lambda v: _integer(v, "nx")),
    "y_min": ("y_min", lambda v: _quantity(v, _LENGTH, "y_min")),
    "y_max": ("y_max", lambda v: _quantity(v, _LENGTH, "y_max")),
    "ny": ("ny", lambda v: _integer(v, "ny")),
    "fit_window": ("fit_window", lambda v: _window(v, "fit_window")),
    "post_window": ("post_window", lambda v: _window(v, "post_window")),
    "guard": ("guard", lambda v: _quantity(v, _TIME, "guard")),
    "threshold_sigma": ("threshold_sigma", lambda v: _number(v, "threshold_sigma")),
    "threads": ("threads", lambda v: _integer(v, "threads")),
    "out": ("out", lambda v: v.strip()),
}


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse key = value lines into a RunConfig; unknown keys are rejected."""
    cfg = base if base is not None else RunConfig()
    explicit_m0 = cfg.M0 > 0.0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, parser = _PARSERS[key]
        setattr(cfg, attr, parser(value))
        if key == "M0":
            explicit_m0 = True
        if key == "B1":
            explicit_m0 = False
    if not explicit_m0:
        cfg.M0 = 0.0  # derive from B1
    _validate(cfg)
    return cfg


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base=base)


def _validate(cfg: RunConfig) -> None:
    if cfg.model not in _MODEL_NAMES:
        raise ConfigError(f"model must be one of {_MODEL_NAMES}, got {cfg.model!r}")
    if cfg.tol <= 0.0:
        raise ConfigError("tol must be positive")
    if not 0.0 < cfg.epsilon <= 1.0:
        raise ConfigError("epsilon must be in (0, 1]")
    if cfg.atom != "Cs" and not (cfg.mass > 0.0 and cfg.moment > 0.0):
        raise ConfigError(
            f"unknown atom {cfg.atom!r}: either use 'Cs' or give mass and moment")
    # construction of the domain objects performs the remaining validation
    mirror_spec(cfg)
    species(cfg)


def mirror_spec(cfg: RunConfig) -> MirrorSpec:
    """MirrorSpec from the config; M0 is back-solved from B1 unless given."""
    if cfg.M0 > 0.0:
        m0 = cfg.M0
    else:
        m0 = m0_for_surface_field(cfg.B1, cfg.a, cfg.c, cfg.b)
    return MirrorSpec(period_a=cfg.a, stripe_width_c=cfg.c, layer_thickness_b=cfg.b,
                      magnetization_M0=m0, n_stripes=cfg.n_stripes,
                      bias_field_Bz=cfg.bias)


def species(cfg: RunConfig) -> AtomSpecies:
    if cfg.atom == "Cs" and not (cfg.mass > 0.0 and cfg.moment > 0.0):
        return CESIUM
    return AtomSpecies(name=cfg.atom, mass=cfg.mass, moment_mu=cfg.moment)


def potential_model(cfg: RunConfig) -> PotentialModel:
    spec = mirror_spec(cfg)
    if cfg.model == "two-term":
        return TwoTerm(spec)
    if cfg.model == "full-expansion":
        return FullExpansion(spec)
    if cfg.model == "exact-stripes":
        if math.isinf(spec.n_stripes):
            raise ConfigError("exact-stripes needs a finite odd n_stripes")
        return ExactStripes(spec)
    # pure exponential wall with the mirror's first harmonic as surface field
    co = harmonic_coefficients(spec)
    sp = species(cfg)
    return PureExponential(U0=sp.moment_mu * co.B1, k=co.k)


def ensemble_spec(cfg: RunConfig) -> EnsembleSpec:
    return EnsembleSpec(n_atoms=cfg.n_atoms, temperature=cfg.temperature,
                        release_height=cfg.drop, sigma_x=cfg.sigma_x,
                        sigma_y=cfg.sigma_y,
                        mean_velocity=(cfg.mean_vx, cfg.mean_vy),
                        seed=cfg.seed, snapshot_times=tuple(cfg.snapshots))


def default_post_window(cfg: RunConfig) -> tuple:
    """Post-reflection window: guard past the first impact, 15 ms long,
    ending before the second impact's guard."""
    if cfg.post_window:
        return cfg.post_window
    t1 = math.sqrt(2.0 * cfg.drop / CONSTANTS.g_grav)
    lo = t1 + cfg.guard
    hi = min(lo + 0.015, 3.0 * t1 - cfg.guard, float(np.max(cfg.snapshots)))
    if hi <= lo:
        raise ConfigError("cannot derive a post window; set post_window explicitly")
    return (lo, hi)
