"""Experiment configuration (TOML, explicit sections)."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .nse_solver import SolverConfig, beltrami_field, random_solenoidal_field
from .observers import max_modal_index
from .spectral_core import SpectralField, TorusConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OUT_ENV = "OBSREG_OUT"

_SCHEMA = {
    "torus": {"L", "n_spec"},
    "solver": {"nu", "dt", "t_end", "dealias", "snapshot_every"},
    "initial": {"kind", "amplitude", "wavenumber", "decay"},
    "forcing": {"kind", "amplitude", "wavenumber"},
    "observer": {"kind", "n_cubes", "N", "compare_collocation"},
    "monitor": {"c", "t0", "variant", "h"},
    "nudge": {"mu", "project"},
    "output": {"dir"},
}
_TOP = {"seed"}


@dataclass(frozen=True)
class FieldSpec:
    kind: str = "zero"  # zero | beltrami | random
    amplitude: float = 1.0
    wavenumber: int = 1
    decay: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    L: float = 2 * np.pi
    n_spec: int = 16
    nu: float = 0.1
    dt: float = 1e-3
    t_end: float = 0.1
    dealias: bool = True
    snapshot_every: int = 10
    initial: FieldSpec = field(default_factory=FieldSpec)
    forcing: FieldSpec = field(default_factory=lambda: FieldSpec(kind="none"))
    observer_kind: str = "nodal"
    n_cubes: int = 8
    N: int = 10
    compare_collocation: bool = False
    c: float = 1.0
    t0: float = 0.0
    variant: str = "sufficient"
    h: float | None = None
    mu: float | None = None
    project: bool = True
    out: str = "obsreg-out"
    seed: int = 0

    def __post_init__(self):
        self.validate()

    @property
    def torus(self) -> TorusConfig:
        return TorusConfig(self.L, self.n_spec)

    def validate(self):
        try:
            torus = self.torus
        except ValueError as e:
            raise ConfigError(f"[torus] {e}") from e
        if not self.nu > 0:
            raise ConfigError(f"[solver] nu must be positive, got {self.nu}")
        if not self.dt > 0:
            raise ConfigError(f"[solver] dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ConfigError(f"[solver] t_end must be nonnegative, got {self.t_end}")
        if self.snapshot_every < 1:
            raise ConfigError(f"[solver] snapshot_every must be >= 1, got {self.snapshot_every}")
        if self.initial.kind not in ("zero", "beltrami", "random"):
            raise ConfigError(f"[initial] kind must be zero, beltrami or random, got {self.initial.kind!r}")
        if self.forcing.kind not in ("none", "beltrami"):
            raise ConfigError(f"[forcing] kind must be none or beltrami, got {self.forcing.kind!r}")
        for sec, spec in (("initial", self.initial), ("forcing", self.forcing)):
            if spec.kind == "beltrami" and not 1 <= spec.wavenumber < self.n_spec // 2:
                raise ConfigError(
                    f"[{sec}] wavenumber={spec.wavenumber} must lie in [1, n_spec/2) with [torus] n_spec={self.n_spec}"
                )
        if self.observer_kind not in ("modal", "nodal"):
            raise ConfigError(f"[observer] kind must be modal or nodal, got {self.observer_kind!r}")
        if self.n_cubes < 2:
            raise ConfigError(f"[observer] n_cubes must be >= 2, got {self.n_cubes}")
        if self.compare_collocation and self.n_spec % self.n_cubes:
            raise ConfigError(
                f"[observer] n_cubes={self.n_cubes} must divide [torus] n_spec={self.n_spec} "
                "when compare_collocation is set"
            )
        nmax = max_modal_index(torus)
        if not 1 <= self.N <= nmax:
            raise ConfigError(f"[observer] N={self.N} must lie in [1, {nmax}] for [torus] n_spec={self.n_spec}")
        if not self.c > 0:
            raise ConfigError(f"[monitor] c must be positive, got {self.c}")
        if self.variant not in ("sufficient", "iff"):
            raise ConfigError(f"[monitor] variant must be sufficient or iff, got {self.variant!r}")
        if not 0 <= self.t0 <= self.t_end:
            raise ConfigError(f"[monitor] t0={self.t0} must lie in [0, [solver] t_end={self.t_end}]")
        if self.h is not None and not self.h > 0:
            raise ConfigError(f"[monitor] h must be positive, got {self.h}")
        if self.mu is not None and self.mu < 0:
            raise ConfigError(f"[nudge] mu must be >= 0, got {self.mu}")

    @property
    def resolution(self) -> int:
        return self.N if self.observer_kind == "modal" else self.n_cubes

    def forcing_field(self) -> SpectralField | None:
        f = self.forcing
        if f.kind == "none":
            return None
        return beltrami_field(self.torus, f.wavenumber, f.amplitude)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.nu, self.dt, self.t_end, self.dealias, self.forcing_field())

    def initial_field(self) -> SpectralField:
        s, torus = self.initial, self.torus
        if s.kind == "zero":
            return SpectralField.zeros(torus)
        if s.kind == "beltrami":
            return beltrami_field(torus, s.wavenumber, s.amplitude)
        rng = np.random.default_rng(self.seed)
        return random_solenoidal_field(torus, rng, l2=s.amplitude, decay=s.decay, dealias=self.dealias)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def from_dict(d: dict) -> ExperimentConfig:
    unknown = [k for k in d if k not in _SCHEMA and k not in _TOP]
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    for sec, keys in _SCHEMA.items():
        body = d.get(sec, {})
        if not isinstance(body, dict):
            raise ConfigError(f"[{sec}] must be a table")
        bad = sorted(set(body) - keys)
        if bad:
            raise ConfigError(f"[{sec}] unknown key(s): {', '.join(bad)}")

    def g(sec, key, default):
        return d.get(sec, {}).get(key, default)

    base = ExperimentConfig.__dataclass_fields__
    try:
        kw = dict(
            L=float(g("torus", "L", base["L"].default)),
            n_spec=int(g("torus", "n_spec", base["n_spec"].default)),
            nu=float(g("solver", "nu", base["nu"].default)),
            dt=float(g("solver", "dt", base["dt"].default)),
            t_end=float(g("solver", "t_end", base["t_end"].default)),
            dealias=bool(g("solver", "dealias", True)),
            snapshot_every=int(g("solver", "snapshot_every", base["snapshot_every"].default)),
            initial=FieldSpec(
                str(g("initial", "kind", "zero")),
                float(g("initial", "amplitude", 1.0)),
                int(g("initial", "wavenumber", 1)),
                float(g("initial", "decay", 1.0)),
            ),
            forcing=FieldSpec(
                str(g("forcing", "kind", "none")),
                float(g("forcing", "amplitude", 1.0)),
                int(g("forcing", "wavenumber", 1)),
            ),
            observer_kind=str(g("observer", "kind", "nodal")),
            n_cubes=int(g("observer", "n_cubes", base["n_cubes"].default)),
            N=int(g("observer", "N", base["N"].default)),
            compare_collocation=bool(g("observer", "compare_collocation", False)),
            c=float(g("monitor", "c", 1.0)),
            t0=float(g("monitor", "t0", 0.0)),
            variant=str(g("monitor", "variant", "sufficient")),
            h=None if g("monitor", "h", None) is None else float(g("monitor", "h", None)),
            mu=None if g("nudge", "mu", None) is None else float(g("nudge", "mu", None)),
            project=bool(g("nudge", "project", True)),
            out=str(os.environ.get(OUT_ENV) or g("output", "dir", base["out"].default)),
            seed=int(d.get("seed", 0)),
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"bad config value: {e}") from e
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            d = tomllib.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    return from_dict(d)
