"""
Nudged (data-assimilated) system

    dw/dt + P((w.grad)w) + nu A w = f + mu P(I u - I w),    w(0) = 0,

driven by modal or nodal observations of a reference trajectory u. The
observations of u are held piecewise constant between reference snapshots;
I w is recomputed from the current stage of w at every Runge-Kutta stage.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Literal

import numpy as np
import scipy.fft as sfft

from .errors import ResolutionMismatchError
from .nse_solver import SolverConfig, Trajectory, step, step_schedule
from .observers import ModalData, NodalData, modal_scale, observe_modal, observe_nodal, retained_mask
from .spectral_core import SpectralField, TorusConfig, norms, project_coeffs
from .tetra_interpolant import barycentric_local, default_basis, mean_correct


def default_gain(nu: float, lambda1: float, h: float, c: float = 1.0) -> float:
    """min(nu / (c h^2), 10 max(nu lambda_1, 1)): below the resolution limit, well above the slowest decay rate."""
    return min(nu / (c * h**2), 10.0 * max(nu * lambda1, 1.0))


@dataclass(frozen=True)
class NudgeConfig:
    kind: Literal["modal", "nodal"]
    resolution: int  # N (modal) or n_cubes (nodal)
    mu: float | None = None  # None -> default_gain
    c: float = 1.0
    project: bool = True

    def __post_init__(self):
        if self.kind not in ("modal", "nodal"):
            raise ValueError(f"unknown observer kind {self.kind!r}")
        if self.mu is not None and self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")

    def scale(self, torus: TorusConfig) -> float:
        if self.kind == "modal":
            return modal_scale(torus, self.resolution)
        return torus.L / self.resolution

    def gain(self, torus: TorusConfig, nu: float) -> float:
        if self.mu is not None:
            return self.mu
        return default_gain(nu, torus.lambda1, self.scale(torus), self.c)


@dataclass(frozen=True)
class SyncSeries:
    """(t, |u - w|, ||u - w||) at the snapshot cadence."""

    rows: tuple[tuple[float, float, float], ...]
    mu: float

    @property
    def times(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def l2(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def h1(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])


# -- nodal interpolant on the collocation grid -------------------------------


@lru_cache(maxsize=16)
def _collocation_stencil(torus: TorusConfig, n_cubes: int):
    """For each collocation point: vertex indices (4, 3, n, n, n) and weights (4, n, n, n)."""
    n = torus.n_spec
    s = np.arange(n) * (n_cubes / n)
    alpha = np.floor(s + 1e-12).astype(np.int64) % n_cubes
    xi = s - np.floor(s + 1e-12)
    xi = np.where(xi < 0, 0.0, xi)
    pts = np.stack(np.meshgrid(xi, xi, xi, indexing="ij"), axis=-1).reshape(-1, 3)
    tet, bary = barycentric_local(pts)
    off = default_basis().topology.offsets[tet]  # (m, 4, 3)
    A = np.stack(np.meshgrid(alpha, alpha, alpha, indexing="ij"), axis=-1).reshape(-1, 1, 3)
    idx = (A + off).reshape(n, n, n, 4, 3)
    return idx, bary.reshape(n, n, n, 4)


def interpolant_to_spectral(nodal: NodalData, torus: TorusConfig) -> np.ndarray:
    """Mean-corrected interpolant sampled on the collocation grid and transformed."""
    if abs(nodal.L - torus.L) > 1e-12 * torus.L:
        raise ResolutionMismatchError("nodal data and torus have different L")
    idx, w = _collocation_stencil(torus, nodal.n_cubes)
    P = nodal.padded()
    vals = np.einsum("abck,abckd->dabc", w, P[idx[..., 0], idx[..., 1], idx[..., 2]])
    vals -= mean_correct(nodal).mean_offset[:, None, None, None]
    return sfft.fftn(vals, axes=(1, 2, 3), norm="forward")


def _nodal_from_coeffs(c: np.ndarray, torus: TorusConfig, n_cubes: int) -> NodalData:
    return observe_nodal(SpectralField(c, torus), n_cubes)


# -- feedback ----------------------------------------------------------------


def _modal_feedback_raw(u_obs: ModalData, w: np.ndarray, torus: TorusConfig, mu: float) -> np.ndarray:
    mask = retained_mask(torus, u_obs.N)
    return mu * (u_obs.reconstruct().coeffs - w * mask)


def feedback(u_obs: ModalData | NodalData, w: SpectralField, cfg: NudgeConfig, nu: float = 1.0, dealias: bool = True) -> SpectralField:
    """mu P(I u - I w) as a spectral field.

    ``nu`` only matters when the gain is the default rule.
    """
    torus = w.config
    mu = cfg.gain(torus, nu)
    return SpectralField(_feedback_raw(u_obs, np.asarray(w.coeffs), torus, cfg, mu, dealias), torus)


def _check_resolution(u_obs, cfg: NudgeConfig):
    if isinstance(u_obs, ModalData):
        if cfg.kind != "modal" or u_obs.N != cfg.resolution:
            raise ResolutionMismatchError(f"modal data with N={u_obs.N} fed to a {cfg.kind} observer of resolution {cfg.resolution}")
    elif isinstance(u_obs, NodalData):
        if cfg.kind != "nodal" or u_obs.n_cubes != cfg.resolution:
            raise ResolutionMismatchError(
                f"nodal data with n_cubes={u_obs.n_cubes} fed to a {cfg.kind} observer of resolution {cfg.resolution}"
            )
    else:
        raise TypeError(f"unsupported observation type {type(u_obs).__name__}")


def _feedback_raw(u_obs, w: np.ndarray, torus: TorusConfig, cfg: NudgeConfig, mu: float, dealias: bool) -> np.ndarray:
    _check_resolution(u_obs, cfg)
    if mu == 0:
        return np.zeros_like(w)
    if cfg.kind == "modal":
        out = _modal_feedback_raw(u_obs, w, torus, mu)
    else:
        iu = interpolant_to_spectral(u_obs, torus)
        iw = interpolant_to_spectral(_nodal_from_coeffs(w, torus, cfg.resolution), torus)
        out = mu * (iu - iw)
        if dealias:
            out *= torus.dealias_mask
    if cfg.project:
        out = project_coeffs(out, torus)
    return out


def _observe(u: SpectralField, cfg: NudgeConfig):
    if cfg.kind == "modal":
        return observe_modal(u, cfg.resolution)
    return observe_nodal(u, cfg.resolution)


def run_nudged(reference: Trajectory, cfg: NudgeConfig, solver: SolverConfig | None = None) -> tuple[Trajectory, SyncSeries]:
    """Integrate w from zero alongside the reference snapshots.

    The solver settings (nu, dt, forcing, dealiasing) default to those of
    the reference; t_end is the last reference time.
    """
    torus = reference.torus
    solver = reference.solver if solver is None else solver
    solver = replace(solver, t_end=reference.times[-1])
    mu = cfg.gain(torus, solver.nu)

    obs_cache: dict[int, object] = {}

    def observation_at(t: float):
        i = int(np.searchsorted(reference.times, t + 1e-12, side="right")) - 1
        i = max(i, 0)
        if i not in obs_cache:
            obs_cache.clear()
            obs_cache[i] = _observe(reference.fields[i], cfg)
        return obs_cache[i]

    def sync_row(t, u, w):
        l2, h1 = norms(u - w)
        return (t, l2, h1)

    w = SpectralField.zeros(torus)
    times, fields = [0.0], [w]
    rows = [sync_row(0.0, reference.fields[0], w)]
    snap_times = set(np.round(reference.times, 12))
    t = 0.0
    steps = step_schedule(solver.t_end, solver.dt)
    for n, dt in enumerate(steps, start=1):
        u_obs = observation_at(t)
        extra = (lambda v, u_obs=u_obs: _feedback_raw(u_obs, v, torus, cfg, mu, solver.dealias)) if mu > 0 else None
        w = step(w, solver, dt=dt, extra=extra, t=t)
        t = solver.t_end if n == len(steps) else n * solver.dt
        if round(t, 12) in snap_times:
            times.append(t)
            fields.append(w)
            rows.append(sync_row(t, reference.at_or_before(t), w))
    return Trajectory(tuple(times), tuple(fields), solver, torus), SyncSeries(tuple(rows), mu)
