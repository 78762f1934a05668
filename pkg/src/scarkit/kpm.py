"""Kernel-polynomial spectral functions.

Expands the spectral weight of a probe state over the eigenbasis of a
(large, sparse) Hamiltonian in Chebyshev moments with Jackson damping.
Used to map eigenstates of the gapped embedding onto the scar-model
spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.sparse.linalg as spla

from .dynamics import NumericalAbort

__all__ = ["KpmConfig", "jackson_kernel", "spectral_function", "PRESETS"]

PRESETS = {
    "desk-3x4": {"n_moments": 2**12},
    "paper-6x4": {"n_moments": 2**17},
}


@dataclass
class KpmConfig:
    n_moments: int = 2**12
    n_omega: int | None = None        # defaults to n_moments
    kernel: str = "jackson"
    bounds: tuple[float, float] | None = None   # estimated when omitted
    bounds_padding: float = 0.05

    def __post_init__(self):
        if self.n_moments < 64:
            raise ValueError("need at least 64 moments")
        if self.kernel != "jackson":
            raise ValueError("only the Jackson kernel is implemented")

    @classmethod
    def preset(cls, name: str) -> "KpmConfig":
        return cls(**PRESETS[name])


def jackson_kernel(n_moments: int) -> np.ndarray:
    m = n_moments
    k = np.arange(m)
    q = np.pi / (m + 1)
    return ((m - k + 1) * np.cos(q * k) + np.sin(q * k) / np.tan(q)) / (m + 1)


def _estimate_bounds(h, padding: float) -> tuple[float, float]:
    e_hi = spla.eigsh(h, k=1, which="LA", return_eigenvectors=False, tol=1e-6)[0]
    e_lo = spla.eigsh(h, k=1, which="SA", return_eigenvectors=False, tol=1e-6)[0]
    pad = padding * max(e_hi - e_lo, 1e-12)
    return float(e_lo - pad), float(e_hi + pad)


def spectral_function(
    h,
    probe: np.ndarray,
    cfg: KpmConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Spectral density of `probe` over the spectrum of `h`.

    Returns (omega, g) sampled on a Chebyshev grid; g integrates to one and
    is bounded below by the small Jackson undershoot.  Moments exceeding
    the zeroth signal eigenvalues outside the rescaling bounds.
    """
    cfg = cfg or KpmConfig()
    nrm = np.linalg.norm(probe)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("probe state must be normalized")
    bounds = cfg.bounds or _estimate_bounds(h, cfg.bounds_padding)
    e_lo, e_hi = bounds
    a = 0.5 * (e_hi - e_lo)
    b = 0.5 * (e_hi + e_lo)

    m = cfg.n_moments
    mu = np.empty(m)
    phi0 = probe.astype(np.complex128 if np.iscomplexobj(h) else np.float64)
    phi1 = (h @ phi0 - b * phi0) / a
    mu[0] = 1.0
    mu[1] = np.real(np.vdot(phi0, phi1))
    # doubling: mu_2k and mu_2k+1 from the k-th pair of recurrence vectors
    for k in range(1, (m + 1) // 2):
        if 2 * k < m:
            mu[2 * k] = 2.0 * np.real(np.vdot(phi1, phi1)) - mu[0]
        phi2 = 2.0 * (h @ phi1 - b * phi1) / a - phi0
        if 2 * k + 1 < m:
            mu[2 * k + 1] = 2.0 * np.real(np.vdot(phi2, phi1)) - mu[1]
        phi0, phi1 = phi1, phi2
        if np.max(np.abs(mu[: 2 * k + 1])) > 1.05:
            raise NumericalAbort("KPM moments exceed unity: bounds violated")

    n_omega = cfg.n_omega or m
    if n_omega < m:
        raise ValueError("omega grid must have at least n_moments points")
    damped = mu * jackson_kernel(m)
    coef = np.zeros(n_omega)
    coef[:m] = damped
    theta = np.pi * (np.arange(n_omega) + 0.5) / n_omega
    # DCT-III evaluates coef_0 + 2 sum_{k>=1} coef_k cos(k theta_i)
    series = scipy.fft.dct(coef, type=3)
    omega_t = np.cos(theta)
    g = series / (np.pi * np.sqrt(1.0 - omega_t**2))
    omega = a * omega_t + b
    order = np.argsort(omega)
    return omega[order], (g / a)[order]
