"""
Discrete function spaces on the periodic torus [0, L]^3.

Fields are stored as full complex Fourier coefficient arrays of shape
``(3, n, n, n)`` in FFT index order, so that

    u(x) = sum_k  c(k) exp(2*pi*i k.x / L),      k in [-n/2, n/2)^3.

With this normalization (forward transform divides by n^3) Parseval reads

    |u|_{L^2}^2 = L^3 sum_k |c(k)|^2,
    ||u||^2     = L^3 sum_k lambda(k) |c(k)|^2,   lambda(k) = (2*pi/L)^2 |k|^2,

and every norm in the package goes through :func:`norms`.

Modes on the Nyquist planes (some |k_d| = n/2) have no sign-symmetric
wavevector on a real grid, so solenoidal fields keep them at zero and
:func:`leray_project` removes them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class TorusConfig:
    L: float
    n_spec: int

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L}")
        if self.n_spec < 4 or self.n_spec % 2:
            raise ValueError(f"n_spec must be even and >= 4, got {self.n_spec}")

    @property
    def dx(self) -> float:
        return self.L / self.n_spec

    @property
    def kappa(self) -> float:
        """Fundamental wavenumber 2*pi/L."""
        return 2.0 * np.pi / self.L

    @property
    def lambda1(self) -> float:
        """Smallest Stokes eigenvalue."""
        return self.kappa**2

    @cached_property
    def k_index(self) -> np.ndarray:
        """Integer wavevectors, shape (3, n, n, n)."""
        k = np.fft.fftfreq(self.n_spec, 1.0 / self.n_spec).astype(np.int64)
        return np.stack(np.meshgrid(k, k, k, indexing="ij"))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return np.sum(self.k_index**2, axis=0)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Stokes eigenvalue of every grid mode (0 for k = 0)."""
        return self.lambda1 * self.k_squared

    @cached_property
    def nyquist(self) -> np.ndarray:
        return np.any(np.abs(self.k_index) == self.n_spec // 2, axis=0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3 rule: keep |k_d| < n/3 in every direction."""
        return np.all(3 * np.abs(self.k_index) < self.n_spec, axis=0)

    @cached_property
    def grid(self) -> np.ndarray:
        """Collocation points, shape (3, n, n, n)."""
        x = np.arange(self.n_spec) * self.dx
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Velocity field as Fourier coefficients; immutable."""

    coeffs: np.ndarray
    config: TorusConfig

    def __post_init__(self):
        n = self.config.n_spec
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (3, n, n, n):
            raise ValueError(f"coeffs must have shape {(3, n, n, n)}, got {c.shape}")
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def zeros(cls, config: TorusConfig) -> "SpectralField":
        n = config.n_spec
        return cls(np.zeros((3, n, n, n), dtype=np.complex128), config)

    def _check(self, other: "SpectralField"):
        if other.config != self.config:
            raise ValueError("fields live on different tori")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.coeffs + other.coeffs, self.config)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.coeffs - other.coeffs, self.config)

    def __mul__(self, s: float) -> "SpectralField":
        return SpectralField(s * self.coeffs, self.config)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(-self.coeffs, self.config)

    def mean(self) -> np.ndarray:
        return self.coeffs[:, 0, 0, 0].real.copy()

    def divergence_defect(self) -> float:
        """max_k |k . c(k)| with integer k."""
        kc = np.einsum("d...,d...->...", self.config.k_index, self.coeffs)
        return float(np.abs(kc).max())

    def hermitian_defect(self) -> float:
        """max_k |c(-k) - conj(c(k))|."""
        c = self.coeffs
        flipped = np.roll(c[:, ::-1, ::-1, ::-1], 1, axis=(1, 2, 3))
        return float(np.abs(flipped - np.conj(c)).max())


@dataclass(frozen=True, eq=False)
class PhysicalField:
    values: np.ndarray
    config: TorusConfig = field()

    def __post_init__(self):
        n = self.config.n_spec
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (3, n, n, n):
            raise ValueError(f"values must have shape {(3, n, n, n)}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("physical field has non-finite entries")
        object.__setattr__(self, "values", _readonly(v))


def to_physical(f: SpectralField) -> PhysicalField:
    v = sfft.ifftn(f.coeffs, axes=(1, 2, 3), norm="forward")
    return PhysicalField(v.real, f.config)


def to_spectral(f: PhysicalField, remove_mean: bool = False) -> SpectralField:
    c = sfft.fftn(f.values, axes=(1, 2, 3), norm="forward")
    if remove_mean:
        c[:, 0, 0, 0] = 0.0
    return SpectralField(c, f.config)


def project_coeffs(c: np.ndarray, config: TorusConfig) -> np.ndarray:
    """Leray projection on a raw coefficient array (returns a new array)."""
    k = config.k_index
    k2 = config.k_squared.astype(np.float64)
    k2[0, 0, 0] = 1.0
    kc = np.einsum("d...,d...->...", k, c)
    out = c - k * (kc / k2)
    out[:, 0, 0, 0] = 0.0
    out[:, config.nyquist] = 0.0
    return out


def leray_project(f: SpectralField) -> SpectralField:
    """Remove the gradient part mode by mode: c <- c - k (k.c)/|k|^2."""
    return SpectralField(project_coeffs(f.coeffs, f.config), f.config)


def stokes_eigenvalue(k, config: TorusConfig) -> float:
    k = np.asarray(k, dtype=np.int64)
    if k.shape != (3,):
        raise ValueError(f"wavevector must have 3 components, got shape {k.shape}")
    if not np.any(k):
        raise ValueError("k = 0 is not an eigenmode on zero-mean fields")
    half = config.n_spec // 2
    if np.any(k < -half) or np.any(k >= half):
        raise ValueError(f"wavevector {k.tolist()} outside [-{half}, {half})^3")
    return config.lambda1 * float(k @ k)


def norms(f: SpectralField) -> tuple[float, float]:
    """(L^2 norm, H^1 seminorm) via Parseval."""
    L3 = f.config.L**3
    power = np.sum(np.abs(f.coeffs) ** 2, axis=0)
    l2 = np.sqrt(L3 * power.sum())
    h1 = np.sqrt(L3 * np.sum(f.config.eigenvalues * power))
    return float(l2), float(h1)


def inner(f: SpectralField, g: SpectralField) -> float:
    """L^2 inner product (f, g)."""
    f._check(g)
    return float(f.config.L**3 * np.real(np.vdot(g.coeffs, f.coeffs)))


def evaluate_tensor(f: SpectralField, xs, ys, zs) -> np.ndarray:
    """Exact trigonometric evaluation on the tensor grid xs x ys x zs.

    Returns an array of shape (3, len(xs), len(ys), len(zs)).
    """
    cfg = f.config
    k = np.fft.fftfreq(cfg.n_spec, 1.0 / cfg.n_spec)
    ex, ey, ez = (
        np.exp(1j * cfg.kappa * np.outer(np.asarray(p, dtype=np.float64), k)) for p in (xs, ys, zs)
    )
    out = np.einsum("dabc,ia->dibc", f.coeffs, ex, optimize=True)
    out = np.einsum("dibc,jb->dijc", out, ey, optimize=True)
    out = np.einsum("dijc,lc->dijl", out, ez, optimize=True)
    return out.real
