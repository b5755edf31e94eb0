"""Modal (low Fourier modes) and nodal (cube-vertex point values) observations."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral_core import SpectralField, TorusConfig, evaluate_tensor


@lru_cache(maxsize=32)
def _sorted_spectrum(config: TorusConfig) -> np.ndarray:
    avail = ~config.nyquist
    avail[0, 0, 0] = False
    lam = np.sort(config.eigenvalues[avail])
    # two solenoidal polarizations per wavevector
    return np.repeat(lam, 2)


def stokes_spectrum(config: TorusConfig) -> np.ndarray:
    """Stokes eigenvalues lambda_1 <= lambda_2 <= ... repeated by multiplicity."""
    return _sorted_spectrum(config).copy()


def max_modal_index(config: TorusConfig) -> int:
    return len(_sorted_spectrum(config))


def eigenvalue(config: TorusConfig, N: int) -> float:
    """lambda_N, the N-th Stokes eigenvalue (1-based)."""
    spec = _sorted_spectrum(config)
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if N > len(spec):
        raise ValueError(f"N={N} exceeds the {len(spec)} eigenvalues resolved at n_spec={config.n_spec}")
    return float(spec[N - 1])


def modal_scale(config: TorusConfig, N: int) -> float:
    """Observation scale h = lambda_N^{-1/2} of the modal observer."""
    return eigenvalue(config, N) ** -0.5


def retained_mask(config: TorusConfig, N: int) -> np.ndarray:
    lam_n = eigenvalue(config, N)
    mask = (config.eigenvalues <= lam_n * (1 + 1e-12)) & ~config.nyquist
    mask[0, 0, 0] = False
    return mask


@dataclass(frozen=True, eq=False)
class ModalData:
    """Retained Fourier coefficients {k != 0 : lambda(k) <= lambda_N}, both k and -k."""

    N: int
    lambda_N: float
    wavevectors: np.ndarray  # (m, 3) int
    coeffs: np.ndarray  # (m, 3) complex
    config: TorusConfig

    @property
    def h(self) -> float:
        return self.lambda_N**-0.5

    def __len__(self):
        return len(self.wavevectors)

    def eigenvalues(self) -> np.ndarray:
        return self.config.lambda1 * np.sum(self.wavevectors**2, axis=1)

    def reconstruct(self) -> SpectralField:
        """P_N u as a spectral field."""
        n = self.config.n_spec
        c = np.zeros((3, n, n, n), dtype=np.complex128)
        idx = np.mod(self.wavevectors, n)
        c[:, idx[:, 0], idx[:, 1], idx[:, 2]] = self.coeffs.T
        return SpectralField(c, self.config)


def observe_modal(u: SpectralField, N: int) -> ModalData:
    cfg = u.config
    mask = retained_mask(cfg, N)
    k = cfg.k_index[:, mask].T.copy()
    coeffs = u.coeffs[:, mask].T.copy()
    return ModalData(N, eigenvalue(cfg, N), k, coeffs, cfg)


@dataclass(frozen=True, eq=False)
class NodalData:
    """Velocity samples on the cube-vertex grid of spacing h = L / n_cubes.

    ``samples`` has shape (n, n, n, 3) for periodic data (vertex index n is
    vertex 0), or (n + 1, n + 1, n + 1, 3) when the far-face vertices are
    given explicitly (non-periodic data, e.g. affine test fields).
    """

    n_cubes: int
    L: float
    samples: np.ndarray

    def __post_init__(self):
        n = self.n_cubes
        if n < 1:
            raise ValueError(f"n_cubes must be >= 1, got {n}")
        s = np.asarray(self.samples, dtype=np.float64)
        if s.shape not in ((n, n, n, 3), (n + 1, n + 1, n + 1, 3)):
            raise ValueError(f"samples must have shape {(n, n, n, 3)} or {(n + 1,) * 3 + (3,)}, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("nodal samples contain non-finite entries")
        s = s.copy()
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def h(self) -> float:
        return self.L / self.n_cubes

    @property
    def periodic(self) -> bool:
        return self.samples.shape[0] == self.n_cubes

    def padded(self) -> np.ndarray:
        """Samples on the (n+1)^3 vertex lattice, wrapping periodic data."""
        if not self.periodic:
            return np.asarray(self.samples)
        return np.pad(self.samples, ((0, 1), (0, 1), (0, 1), (0, 0)), mode="wrap")


def observe_nodal(u: SpectralField, n_cubes: int) -> NodalData:
    """Point values u(j h, k h, l h) by exact trigonometric summation."""
    if n_cubes < 2:
        raise ValueError(f"n_cubes must be >= 2, got {n_cubes}")
    cfg = u.config
    x = np.arange(n_cubes) * (cfg.L / n_cubes)
    vals = evaluate_tensor(u, x, x, x)
    return NodalData(n_cubes, cfg.L, np.moveaxis(vals, 0, -1))
