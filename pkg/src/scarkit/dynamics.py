"""Time evolution under slow parameter ramps.

The propagator is piecewise-constant in time: the Hamiltonian is frozen at
the midpoint deformation of each segment and the segment exponential is
expanded in Chebyshev polynomials with Bessel-function coefficients,
truncated at machine precision.  All observables of a run are collected in
an EvolutionRecord.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla
from scipy.special import jv

from .operators import ParamOperator
from .spectra import EigenDecomposition

__all__ = [
    "RampProtocol",
    "PropagatorConfig",
    "EvolutionRecord",
    "NumericalAbort",
    "chebyshev_exp_apply",
    "spectral_bounds",
    "propagate",
    "adiabatic_fidelity",
    "populations_and_entropy",
    "adiabatic_velocity",
    "VelocityScan",
]


class NumericalAbort(RuntimeError):
    """Spectral bounds violated or expansion diverged mid-run."""


@dataclass(frozen=True)
class RampProtocol:
    """Schedule s(t) on [0, T] with T = 1/speed.

    linear:      s = s_start + span * (t/T)
    sinusoidal:  s = s_start + span * sin^2(pi t / (2T))
    """

    kind: str = "linear"
    speed: float = 1e-3
    s_start: float = 0.0
    s_end: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "sinusoidal"):
            raise ValueError(f"unknown ramp kind {self.kind!r}")
        if self.speed <= 0:
            raise ValueError("ramp speed must be positive")

    @property
    def duration(self) -> float:
        return 1.0 / self.speed

    def s_of_t(self, t) -> np.ndarray:
        x = np.clip(np.asarray(t) * self.speed, 0.0, 1.0)
        if self.kind == "linear":
            g = x
        else:
            g = np.sin(0.5 * np.pi * x) ** 2
        return self.s_start + (self.s_end - self.s_start) * g


@dataclass
class PropagatorConfig:
    ds: float = 1e-3                  # target mean |s| change per segment
    cheb_tol: float = 1e-14           # coefficient cutoff
    bounds_padding: float = 0.05
    bounds_samples: tuple[float, ...] = (0.0, 0.5, 1.0)   # fractions of the span
    n_checkpoints: int = 200
    checkpoint_path: str | None = None
    checkpoint_every: int = 10000     # segments between state dumps


@dataclass
class EvolutionRecord:
    times: np.ndarray
    s_values: np.ndarray
    fidelities: np.ndarray | None
    norms: np.ndarray
    final_state: np.ndarray
    max_order: int = 0
    populations: list | None = None

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - 1.0)))


def spectral_bounds(op: ParamOperator, ramp: RampProtocol, cfg: PropagatorConfig):
    """Enveloped (padded) extremal eigenvalues over sampled deformations."""
    lo, hi = np.inf, -np.inf
    span = ramp.s_end - ramp.s_start
    for frac in cfg.bounds_samples:
        s = ramp.s_start + span * frac
        h = op.value(s)
        if h.shape[0] <= 2:
            import numpy.linalg as nla

            w = nla.eigvalsh(h.toarray())
            e_lo, e_hi = w[0], w[-1]
        else:
            e_hi = spla.eigsh(h, k=1, which="LA", return_eigenvectors=False, tol=1e-6)[0]
            e_lo = spla.eigsh(h, k=1, which="SA", return_eigenvectors=False, tol=1e-6)[0]
        lo, hi = min(lo, e_lo), max(hi, e_hi)
    pad = cfg.bounds_padding * max(hi - lo, 1e-12)
    return lo - pad, hi + pad


def chebyshev_exp_apply(
    h,
    psi: np.ndarray,
    dt: float,
    bounds: tuple[float, float],
    tol: float = 1e-14,
) -> tuple[np.ndarray, int]:
    """exp(-i H dt) psi via the Chebyshev expansion on rescaled H.

    Returns (state, expansion order).  Raises NumericalAbort when the
    recurrence grows, which signals eigenvalues outside `bounds`.
    """
    e_lo, e_hi = bounds
    a = 0.5 * (e_hi - e_lo)
    b = 0.5 * (e_hi + e_lo)
    x = a * dt
    # Coefficients 2*J_k(x) decay superexponentially past k ~ x.
    k_max = int(x + 60 + 12 * x**0.5)
    ks = np.arange(k_max + 1)
    coef = jv(ks, x)
    keep = np.nonzero(np.abs(2 * coef) > tol)[0]
    order = int(keep[-1]) + 1 if len(keep) else 1
    coef = coef[:order]

    phi_prev = psi
    acc = coef[0] * psi
    if order > 1:
        phi = (h @ psi - b * psi) / a
        acc = acc + 2 * coef[1] * (-1j) * phi
        norm0 = np.linalg.norm(psi)
        for k in range(2, order):
            phi_next = 2 * ((h @ phi) - b * phi) / a - phi_prev
            acc = acc + 2 * coef[k] * (-1j) ** k * phi_next
            phi_prev, phi = phi, phi_next
            if np.linalg.norm(phi) > 4.0 * norm0:
                raise NumericalAbort(
                    "Chebyshev recurrence diverging: spectral bounds violated"
                )
    return np.exp(-1j * b * dt) * acc, order


def propagate(
    op: ParamOperator,
    psi0: np.ndarray,
    ramp: RampProtocol,
    cfg: PropagatorConfig | None = None,
    reference_fn=None,
    observer=None,
) -> EvolutionRecord:
    """Evolve psi0 under H(s(t)) from t=0 to t=T.

    reference_fn(s) may supply the instantaneous target state, in which
    case the squared overlap is recorded at every checkpoint.  observer, if
    given, is called as observer(t, s, psi) at checkpoints.
    """
    cfg = cfg or PropagatorConfig()
    span = abs(ramp.s_end - ramp.s_start)
    n_seg = max(1, int(np.ceil(span / cfg.ds)))
    t_total = ramp.duration
    dt = t_total / n_seg
    bounds = spectral_bounds(op, ramp, cfg)

    check_every = max(1, n_seg // max(1, cfg.n_checkpoints))
    psi = psi0.astype(np.complex128)
    nrm0 = np.linalg.norm(psi)
    if abs(nrm0 - 1.0) > 1e-9:
        raise ValueError("initial state must be normalized")

    start_seg = 0
    if cfg.checkpoint_path is not None:
        import os

        if os.path.exists(cfg.checkpoint_path):
            data = np.load(cfg.checkpoint_path)
            if int(data["n_seg"]) == n_seg and data["psi"].shape == psi.shape:
                start_seg = int(data["segment"])
                psi = data["psi"]

    times, svals, fids, norms = [], [], [], []
    max_order = 0

    def record(t, s):
        times.append(t)
        svals.append(s)
        norms.append(np.linalg.norm(psi))
        if reference_fn is not None:
            target = reference_fn(s)
            fids.append(float(np.abs(np.vdot(target, psi)) ** 2))
        if observer is not None:
            observer(t, s, psi)

    record(start_seg * dt, ramp.s_of_t(start_seg * dt))
    for seg in range(start_seg, n_seg):
        t_mid = (seg + 0.5) * dt
        h = op.value(float(ramp.s_of_t(t_mid)))
        psi, order = chebyshev_exp_apply(h, psi, dt, bounds, cfg.cheb_tol)
        max_order = max(max_order, order)
        t_next = (seg + 1) * dt
        if (seg + 1) % check_every == 0 or seg == n_seg - 1:
            record(t_next, float(ramp.s_of_t(t_next)))
        if (
            cfg.checkpoint_path is not None
            and (seg + 1) % cfg.checkpoint_every == 0
            and seg + 1 < n_seg
        ):
            np.savez(cfg.checkpoint_path, psi=psi, segment=seg + 1, n_seg=n_seg)

    return EvolutionRecord(
        times=np.asarray(times),
        s_values=np.asarray(svals),
        fidelities=np.asarray(fids) if fids else None,
        norms=np.asarray(norms),
        final_state=psi,
        max_order=max_order,
    )


def adiabatic_fidelity(record: EvolutionRecord, target: np.ndarray) -> float:
    """Squared overlap of the final state with the instantaneous target."""
    return float(np.abs(np.vdot(target, record.final_state)) ** 2)


def populations_and_entropy(
    psi: np.ndarray,
    dec: EigenDecomposition,
) -> tuple[np.ndarray, float]:
    """Diagonal populations in the instantaneous eigenbasis and their entropy."""
    if dec.states is None:
        raise ValueError("eigenvectors required")
    rho = np.abs(dec.states.conj().T @ psi) ** 2
    total = rho.sum()
    if dec.complete and abs(total - 1.0) > 1e-9:
        raise RuntimeError(f"populations sum to {total}, expected 1")
    p = rho[rho > 1e-300]
    s_diag = float(-np.sum(p * np.log(p)))
    return rho, s_diag


@dataclass
class VelocityScan:
    speeds: np.ndarray
    fidelities: np.ndarray
    threshold: float
    v_threshold: float
    bracket: tuple[float, float]
    monotone: bool


def adiabatic_velocity(
    fidelity_fn,
    threshold: float,
    v_low: float,
    v_high: float,
    points_per_decade: int = 24,
    rel_width: float = 0.05,
) -> VelocityScan:
    """Ramp speed at which the adiabatic fidelity first drops below threshold.

    fidelity_fn(v) -> F.  A log-spaced scan brackets the crossing, which is
    then refined by bisection on log v to the requested relative width.
    The scan is expected to be monotone; violations are flagged, not fatal.
    """
    n_pts = max(2, int(np.ceil(np.log10(v_high / v_low) * points_per_decade)) + 1)
    speeds = np.logspace(np.log10(v_low), np.log10(v_high), n_pts)
    fids = np.array([fidelity_fn(v) for v in speeds])
    monotone = bool(np.all(np.diff(fids) <= 1e-9))
    below = np.nonzero(fids < threshold)[0]
    if len(below) == 0 or below[0] == 0:
        raise ValueError(
            f"threshold {threshold} not bracketed by scan range "
            f"[{v_low:g}, {v_high:g}]"
        )
    hi_idx = below[0]
    lo, hi = speeds[hi_idx - 1], speeds[hi_idx]
    while hi / lo > 1.0 + rel_width:
        mid = np.sqrt(lo * hi)
        if fidelity_fn(mid) >= threshold:
            lo = mid
        else:
            hi = mid
    return VelocityScan(
        speeds=speeds,
        fidelities=fids,
        threshold=threshold,
        v_threshold=float(np.sqrt(lo * hi)),
        bracket=(float(lo), float(hi)),
        monotone=monotone,
    )
