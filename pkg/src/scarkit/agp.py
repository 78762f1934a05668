"""Adiabatic gauge potential, fidelity susceptibility, leakage estimates.

Gauge convention: with eigenvector phases fixed so consecutive-s overlaps
are real positive, the gauge-potential matrix elements are purely
imaginary; everything downstream consumes magnitudes |A_n0|, computed from
the generalized force via first-order perturbation theory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import ParamOperator
from .spectra import EigenDecomposition, full_diagonalize

__all__ = [
    "AgpRow",
    "agp_elements",
    "state_susceptibility",
    "fidelity_susceptibility_stencil",
    "RegularizedReport",
    "regularized_susceptibility",
    "apt_prediction",
    "AptPrediction",
    "Crossing",
    "CrossingLeakage",
    "crossing_leakage",
    "power_law_fit",
]

_DEG_TOL = 1e-10


@dataclass
class AgpRow:
    """Gauge-potential elements between one reference state and the rest."""

    s: float
    energies: np.ndarray          # all eigenenergies, ascending
    ref_index: int
    elements: np.ndarray          # |A_n0| for every n (0 at the reference)
    flagged: np.ndarray           # degenerate rows without resolution

    @property
    def ref_energy(self) -> float:
        return float(self.energies[self.ref_index])

    def susceptibility(self) -> float:
        return float(np.sum(self.elements**2))


def agp_elements(
    op: ParamOperator,
    s: float,
    reference: np.ndarray,
    dec: EigenDecomposition | None = None,
) -> AgpRow:
    """|<n| d_s |ref>| for all eigenstates n, via the force matrix elements.

    The reference eigenstate is located by maximal overlap.  Pairs within
    the degeneracy tolerance of the reference are flagged (the in-subspace
    rotation in identify_scar resolves exact scar degeneracies)."""
    if dec is None:
        dec = full_diagonalize(op.value(s))
    idx = dec.identify_scar(reference)
    v = op.deriv(s)
    force = dec.states.conj().T @ (v @ dec.states[:, idx])
    gaps = dec.energies[idx] - dec.energies
    flagged = (np.abs(gaps) < _DEG_TOL)
    flagged[idx] = False
    elements = np.zeros(dec.dim)
    ok = ~flagged & (np.arange(dec.dim) != idx)
    elements[ok] = np.abs(force[ok] / gaps[ok])
    return AgpRow(
        s=s, energies=dec.energies, ref_index=idx, elements=elements, flagged=flagged
    )


def state_susceptibility(vec: np.ndarray, dvec: np.ndarray) -> float:
    """chi_0 from an (unnormalized) state and its s-derivative.

    chi_0 = <d phi|d phi> - |<phi|d phi>|^2 for the normalized state; equals
    the sum over |A_n0|^2 independent of which Hamiltonian embeds the state.
    """
    n2 = np.real(np.vdot(vec, vec))
    cross = np.vdot(vec, dvec)
    return float(np.real(np.vdot(dvec, dvec)) / n2 - np.abs(cross) ** 2 / n2**2)


def fidelity_susceptibility_stencil(
    state_fn,
    s: float,
    step: float = 1e-4,
) -> float:
    """chi_0 by a 5-point derivative stencil on a normalized state family.

    Phases of the sampled states are aligned to the central one, so the
    result is gauge invariant.
    """
    center = state_fn(s)
    samples = []
    for k in (-2, -1, 1, 2):
        v = state_fn(s + k * step)
        ov = np.vdot(center, v)
        if abs(ov) > 0:
            v = v * (np.conj(ov) / abs(ov))
        samples.append(v)
    m2, m1, p1, p2 = samples
    dv = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * step)
    return state_susceptibility(center, dv)


@dataclass
class RegularizedReport:
    s: float
    mu: float
    ref_index: int
    energies: np.ndarray
    chi_ref: float                 # regularized susceptibility of the reference
    chi_all: np.ndarray            # per-eigenstate values
    gauge_norm: float              # sector average

    def chi_thermal(self) -> float:
        """Regularized susceptibility of the thermal state closest in energy
        to the reference (smallest |E - E_ref| excluding the reference)."""
        gaps = np.abs(self.energies - self.energies[self.ref_index])
        gaps[self.ref_index] = np.inf
        return float(self.chi_all[int(np.argmin(gaps))])


def regularized_susceptibility(
    op: ParamOperator,
    s: float,
    reference: np.ndarray,
    mu: float | None = None,
    dec: EigenDecomposition | None = None,
    block: int = 256,
) -> RegularizedReport:
    """Regularized fidelity susceptibilities of every eigenstate.

    chi~_m = sum_{n != m} |<n|dH|m>|^2 / (mu^2 + (E_n - E_m)^2), with
    mu = N_sites / D by default.  The gauge norm is the sector average.
    Eigenvector blocks keep memory at O(D * block).
    """
    if dec is None:
        dec = full_diagonalize(op.value(s))
    idx = dec.identify_scar(reference)
    if mu is None:
        mu = op.basis.n_sites / dec.dim
    v = op.deriv(s)
    d = dec.dim
    chi = np.zeros(d)
    u = dec.states
    for lo in range(0, d, block):
        hi = min(lo + block, d)
        m_block = u.conj().T @ (v @ u[:, lo:hi])        # (d, hi-lo)
        w2 = np.abs(m_block) ** 2
        gaps = dec.energies[:, None] - dec.energies[None, lo:hi]
        contrib = w2 / (mu**2 + gaps**2)
        contrib[np.arange(lo, hi), np.arange(hi - lo)] = 0.0
        chi[lo:hi] = contrib.sum(axis=0)
    return RegularizedReport(
        s=s,
        mu=float(mu),
        ref_index=idx,
        energies=dec.energies,
        chi_ref=float(chi[idx]),
        chi_all=chi,
        gauge_norm=float(np.mean(chi)),
    )


@dataclass
class AptPrediction:
    v_grid: np.ndarray
    fidelity: np.ndarray
    v_099: float
    sum_coefficient: float       # F = 1 - v^2 * sum_coefficient
    tail_bound: float | None = None


def apt_prediction(
    row_start: AgpRow,
    row_end: AgpRow,
    v_grid: np.ndarray | None = None,
    min_gap: float = 1e-8,
) -> AptPrediction:
    """Leading-order adiabatic perturbation theory for a gapped reference.

    Populations transferred to state n scale as v^2 |A_n0|^2 / gap^2 summed
    over the two ramp endpoints; the adiabatic velocity at F = 0.99 follows
    in closed form.  Gapless references are rejected.
    """
    coeff = 0.0
    for row in (row_start, row_end):
        gaps = row.energies - row.ref_energy
        mask = np.arange(len(gaps)) != row.ref_index
        if np.any(np.abs(gaps[mask]) < min_gap):
            raise ValueError("reference is not gapped; use crossing_leakage")
        coeff += float(np.sum((row.elements[mask] / gaps[mask]) ** 2))
    v99 = np.sqrt(0.01 / coeff)
    if v_grid is None:
        v_grid = np.logspace(np.log10(v99) - 2, np.log10(v99) + 1, 49)
    fid = 1.0 - v_grid**2 * coeff
    return AptPrediction(
        v_grid=v_grid, fidelity=fid, v_099=float(v99), sum_coefficient=coeff
    )


@dataclass
class Crossing:
    s_n: float
    agp: float                   # |A_n0| at the crossing (two-sided average)
    slope: float                 # dE_n/ds at the crossing
    leak: float                  # 2 pi |A|^2 v / |slope|
    tangential: bool


@dataclass
class CrossingLeakage:
    speed: float
    crossings: list[Crossing]
    total: float


def crossing_leakage(
    op: ParamOperator,
    reference_fn,
    speed: float,
    s_start: float = 0.0,
    s_end: float = 1.0,
    grid_step: float = 1e-3,
    refine_tol: float = 1e-6,
    eval_offset: float = 5e-3,
    slope_tol: float = 1e-6,
) -> CrossingLeakage:
    """Fresnel-integral estimate of the population leaked at scar crossings.

    Thermal levels crossing the zero-energy scar are located by sign
    changes of the below-zero eigenvalue count on an s grid, refined by
    bisection.  Each crossing contributes 2 pi |A_n0(s_n)|^2 v / |dE_n/ds|;
    tangential crossings (slope below slope_tol) are flagged and excluded.
    """
    energy_tol = 1e-9

    def count_below(s: float) -> int:
        dec = full_diagonalize(op.value(s), compute_vectors=False)
        return int(np.sum(dec.energies < -energy_tol))

    grid = np.arange(s_start, s_end + 0.5 * grid_step, grid_step)
    counts = [count_below(s) for s in grid]

    crossings: list[Crossing] = []
    for i in range(len(grid) - 1):
        n_cross = abs(counts[i + 1] - counts[i])
        if n_cross == 0:
            continue
        intervals = [(grid[i], counts[i], grid[i + 1], counts[i + 1])]
        located: list[float] = []
        while intervals:
            lo, clo, hi, chi_ = intervals.pop()
            if abs(chi_ - clo) == 0:
                continue
            if hi - lo < refine_tol:
                located.extend([0.5 * (lo + hi)] * abs(chi_ - clo))
                continue
            mid = 0.5 * (lo + hi)
            cmid = count_below(mid)
            intervals.append((lo, clo, mid, cmid))
            intervals.append((mid, cmid, hi, chi_))
        for s_n in located:
            crossings.append(_evaluate_crossing(
                op, reference_fn, s_n, speed, eval_offset, slope_tol
            ))

    total = float(sum(c.leak for c in crossings if not c.tangential))
    return CrossingLeakage(speed=speed, crossings=crossings, total=total)


def _evaluate_crossing(op, reference_fn, s_n, speed, offset, slope_tol) -> Crossing:
    vals = []
    energies = []
    for sgn in (-1.0, 1.0):
        s = s_n + sgn * offset
        s = min(max(s, 0.0), 1.0)
        dec = full_diagonalize(op.value(s))
        ref = reference_fn(s)
        idx = dec.identify_scar(ref)
        others = np.arange(dec.dim) != idx
        # the crossing state is the non-scar level nearest zero energy
        cand = np.nonzero(others)[0]
        n_idx = cand[np.argmin(np.abs(dec.energies[cand]))]
        vmat = op.deriv(s)
        force = np.vdot(dec.states[:, n_idx], vmat @ dec.states[:, idx])
        gap = dec.energies[idx] - dec.energies[n_idx]
        vals.append(abs(force / gap) if abs(gap) > 1e-12 else np.nan)
        energies.append(dec.energies[n_idx])
    agp = float(np.nanmean(vals))
    slope = float((energies[1] - energies[0]) / (2 * offset))
    tangential = abs(slope) < slope_tol
    leak = 0.0 if tangential else 2 * np.pi * agp**2 * speed / abs(slope)
    return Crossing(
        s_n=float(s_n), agp=agp, slope=slope, leak=float(leak), tangential=tangential
    )


def power_law_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Unweighted least squares of log y on log x: (exponent, prefactor, R^2)."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    a = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(a, ly, rcond=None)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    ss_res = float(res[0]) if len(res) else float(np.sum((ly - a @ [slope, intercept]) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(np.exp(intercept)), float(r2)
