"""Shared generators and independent oracles for the test-suite."""

import numpy as np

from obsreg.spectral_core import SpectralField, TorusConfig, to_spectral, PhysicalField


def random_hermitian(config: TorusConfig, rng, zero_mean=True) -> SpectralField:
    """Generic real field (not solenoidal), via a random physical grid."""
    vals = rng.standard_normal((3,) + (config.n_spec,) * 3)
    return to_spectral(PhysicalField(vals, config), remove_mean=zero_mean)


def convolution_advection(u: np.ndarray, w: np.ndarray, config: TorusConfig, mask: np.ndarray) -> np.ndarray:
    """(u.grad)w by explicit triadic sum over the masked modes (brute force).

    Output mode k collects every pair p + q = k with p, q in the mask; modes
    outside the mask are dropped.
    """
    n = config.n_spec
    kap = config.kappa
    idx = np.argwhere(mask)
    kvec = config.k_index[:, mask].T
    out = np.zeros_like(u)
    for (pi, pvec) in zip(idx, kvec):
        up = u[:, pi[0], pi[1], pi[2]]
        for (qi, qvec) in zip(idx, kvec):
            wq = w[:, qi[0], qi[1], qi[2]]
            k = pvec + qvec
            if np.any(np.abs(k) >= n / 2):
                continue
            if not mask[tuple(np.mod(k, n))]:
                continue
            out[(slice(None),) + tuple(np.mod(k, n))] += (1j * kap * (up @ qvec)) * wq
    return out


def project_oracle(c: np.ndarray, config: TorusConfig) -> np.ndarray:
    """Pointwise (I - k k^T/|k|^2) with an explicit loop over modes."""
    out = np.zeros_like(c)
    n = config.n_spec
    for i in range(n):
        for j in range(n):
            for l in range(n):
                k = config.k_index[:, i, j, l].astype(float)
                if not k.any() or np.any(np.abs(k) == n // 2):
                    continue
                P = np.eye(3) - np.outer(k, k) / (k @ k)
                out[:, i, j, l] = P @ c[:, i, j, l]
    return out
