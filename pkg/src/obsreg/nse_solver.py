"""
Pseudo-spectral integrator for the projected 3D Navier-Stokes equations

    du/dt + P((u.grad)u) + nu A u = f

on the periodic torus. The viscous term is integrated exactly through the
factor exp(-nu lambda(k) dt); the nonlinear and forcing terms are advanced
with the classical four-stage Runge-Kutta scheme in integrating-factor
(Lawson) form. Pressure is never formed; every stage is Leray-projected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import BlowUpError
from .spectral_core import PhysicalField, SpectralField, TorusConfig, project_coeffs, to_spectral


@dataclass(frozen=True)
class SolverConfig:
    nu: float
    dt: float
    t_end: float
    dealias: bool = True
    forcing: SpectralField | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.forcing is not None:
            f = self.forcing
            scale = max(np.abs(f.coeffs).max(), 1e-300)
            if f.divergence_defect() > 1e-10 * scale or np.abs(f.coeffs[:, 0, 0, 0]).max() > 0:
                raise ValueError("forcing must be solenoidal and zero-mean")


@dataclass(frozen=True)
class Trajectory:
    times: tuple[float, ...]
    fields: tuple[SpectralField, ...]
    solver: SolverConfig
    torus: TorusConfig

    def __post_init__(self):
        if len(self.times) != len(self.fields):
            raise ValueError("times and fields differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("snapshot times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.fields))

    def at_or_before(self, t: float, slack: float = 1e-12) -> SpectralField:
        """Latest snapshot with time <= t (piecewise-constant hold)."""
        i = int(np.searchsorted(self.times, t + slack, side="right")) - 1
        return self.fields[max(i, 0)]

    def window(self, t0: float, t1: float | None = None) -> "Trajectory":
        t1 = self.times[-1] if t1 is None else t1
        keep = [i for i, t in enumerate(self.times) if t0 - 1e-12 <= t <= t1 + 1e-12]
        return Trajectory(
            tuple(self.times[i] for i in keep), tuple(self.fields[i] for i in keep), self.solver, self.torus
        )


# -- nonlinear term ----------------------------------------------------------


def _advect(u: np.ndarray, w: np.ndarray, config: TorusConfig, dealias: bool) -> np.ndarray:
    """P((u.grad) w) on raw coefficient arrays."""
    if dealias:
        mask = config.dealias_mask
        u = u * mask
        w = w * mask
    ikappa = 1j * config.kappa * config.k_index
    up = sfft.ifftn(u, axes=(1, 2, 3), norm="forward").real
    # gradients[i, j] = d_j w_i
    grads = sfft.ifftn(w[:, None] * ikappa[None], axes=(2, 3, 4), norm="forward").real
    prod = np.einsum("j...,ij...->i...", up, grads)
    out = sfft.fftn(prod, axes=(1, 2, 3), norm="forward")
    if dealias:
        out *= mask
    return project_coeffs(out, config)


def nonlinear_term(u: SpectralField, w: SpectralField | None = None, dealias: bool = True) -> SpectralField:
    """Projected advection P((u.grad) w); w defaults to u."""
    w = u if w is None else w
    u._check(w)
    return SpectralField(_advect(u.coeffs, w.coeffs, u.config, dealias), u.config)


# -- time stepping -----------------------------------------------------------


def _rk4_if(
    c: np.ndarray,
    dt: float,
    nu: float,
    config: TorusConfig,
    dealias: bool,
    forcing: np.ndarray | None,
    extra: Callable[[np.ndarray], np.ndarray] | None,
) -> np.ndarray:
    lam = config.eigenvalues
    e_full = np.exp(-nu * lam * dt)
    e_half = np.exp(-nu * lam * dt / 2)

    def rhs(v):
        r = -_advect(v, v, config, dealias)
        if forcing is not None:
            r += forcing
        if extra is not None:
            r += extra(v)
        return r

    k1 = rhs(c)
    k2 = rhs(e_half * (c + 0.5 * dt * k1))
    k3 = rhs(e_half * c + 0.5 * dt * k2)
    k4 = rhs(e_full * c + dt * e_half * k3)
    out = e_full * c + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
    out[:, 0, 0, 0] = 0.0
    return out


def step(
    u: SpectralField,
    cfg: SolverConfig,
    dt: float | None = None,
    extra: Callable[[np.ndarray], np.ndarray] | None = None,
    t: float = 0.0,
) -> SpectralField:
    """Advance u by one step.

    ``extra`` maps a stage coefficient array to an additional (already
    projected) forcing; the nudging system uses it for its feedback term.
    ``t`` only labels a blow-up error.
    """
    dt = cfg.dt if dt is None else dt
    f = None if cfg.forcing is None else np.asarray(cfg.forcing.coeffs)
    out = _rk4_if(np.asarray(u.coeffs), dt, cfg.nu, u.config, cfg.dealias, f, extra)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(t + dt)
    return SpectralField(out, u.config)


def step_schedule(t_end: float, dt: float) -> list[float]:
    """Step sizes covering [0, t_end]; the last step is shortened if needed."""
    n_full = math.floor(t_end / dt + 1e-9)
    steps = [dt] * n_full
    rest = t_end - n_full * dt
    if rest > 1e-9 * dt:
        steps.append(rest)
    return steps


def run(u0: SpectralField, cfg: SolverConfig, snapshot_every: int = 1) -> Trajectory:
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    steps = step_schedule(cfg.t_end, cfg.dt)
    times, fields = [0.0], [u0]
    u = u0
    for n, h in enumerate(steps, start=1):
        t_prev = (n - 1) * cfg.dt
        u = step(u, cfg, dt=h, t=t_prev)
        if n % snapshot_every == 0 or n == len(steps):
            times.append(cfg.t_end if n == len(steps) else n * cfg.dt)
            fields.append(u)
    return Trajectory(tuple(times), tuple(fields), cfg, u0.config)


# -- initial data and forcing ------------------------------------------------


def beltrami_field(config: TorusConfig, m: int = 1, amplitude: float = 1.0, abc=(1.0, 1.0, 1.0)) -> SpectralField:
    """ABC flow at integer wavenumber m: curl u = (2*pi*m/L) u.

    Every mode sits on the shell |k| = m, so u is a Stokes eigenfield with
    eigenvalue (2*pi*m/L)^2 and (u.grad)u is a pure gradient.
    """
    if not 1 <= m < config.n_spec // 2:
        raise ValueError(f"Beltrami wavenumber must lie in [1, {config.n_spec // 2}), got {m}")
    a, b, c = abc
    x, y, z = config.grid * (config.kappa * m)
    vals = amplitude * np.stack(
        [
            a * np.sin(z) + c * np.cos(y),
            b * np.sin(x) + a * np.cos(z),
            c * np.sin(y) + b * np.cos(x),
        ]
    )
    f = to_spectral(PhysicalField(vals, config), remove_mean=True)
    # Remove roundoff outside the shell.
    coeffs = np.where(config.k_squared == m * m, f.coeffs, 0.0)
    return SpectralField(coeffs, config)


def random_solenoidal_field(
    config: TorusConfig,
    rng: np.random.Generator,
    l2: float = 1.0,
    decay: float = 1.0,
    dealias: bool = True,
) -> SpectralField:
    """Smooth random field with spectrum ~ exp(-decay |k|), scaled to a given L^2 norm."""
    n = config.n_spec
    noise = rng.standard_normal((3, n, n, n))
    c = sfft.fftn(noise, axes=(1, 2, 3), norm="forward")
    c *= np.exp(-decay * np.sqrt(config.k_squared))
    if dealias:
        c *= config.dealias_mask
    c = project_coeffs(c, config)
    norm = np.sqrt(config.L**3 * np.sum(np.abs(c) ** 2))
    if norm == 0:
        return SpectralField(c, config)
    return SpectralField(c * (l2 / norm), config)
