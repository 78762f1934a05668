"""Deformed-AKLT scar chain: MPS state, local projector terms, Hamiltonians.

The model lives on a periodic spin-1 chain.  A one-parameter deformation
s in [0,1] of the AKLT matrices defines the state; a set of two-site
projectors annihilates it for every s, and sign choices of the projector
couplings embed the state either as a gapped ground state, as a scar in
the middle of a thermal spectrum, or as the root of an equally spaced
scar tower.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import (
    SectorBasis,
    SymmetrySector,
    enumerate_spin_sector,
    spin_configs_with_sz,
    spin_digits,
)
from .operators import LinearParamOperator, diagonal_matrix, two_site_matrix

__all__ = [
    "J_GROUND",
    "J_SCAR",
    "LocalTermSpec",
    "PerturbationSpec",
    "mps_tensors",
    "mps_tensors_deriv",
    "deformation_weight",
    "deformation_weight_deriv",
    "k0_vector",
    "k0_vector_deriv",
    "j2_vectors",
    "local_term",
    "local_term_deriv",
    "mps_amplitudes",
    "mps_amplitude_derivs",
    "mps_state_vector",
    "mps_state_deriv",
    "scar_sector",
    "ground_sector",
    "assemble_hamiltonian",
    "tower_state",
    "tower_sector",
]

# Fixed random projector couplings of the ground-state embedding, one draw
# kept forever so that spectra are reproducible.
J_GROUND = {
    -2: 0.97545513805816,
    -1: 0.84883205409987,
    0: 0.40823209824201,
    +1: 0.32544692707096,
    +2: 0.55079799361114,
}
# Alternating signs put the annihilated state in the middle of the spectrum.
J_SCAR = {m: float((-1) ** m) for m in (-2, -1, 0, 1, 2)}

_SQ23 = np.sqrt(2.0 / 3.0)
_SQ3 = np.sqrt(3.0)


def mps_tensors(s: float) -> np.ndarray:
    """Per-level 2x2 matrices, indexed by digit d (0:+, 1:0, 2:-)."""
    a = np.zeros((3, 2, 2))
    a[0, 0, 1] = (1 - s / 2) * _SQ23          # A^+ =  (1-s/2) sqrt(2/3) sigma^+
    a[2, 1, 0] = -(1 - s / 2) * _SQ23         # A^- = -(1-s/2) sqrt(2/3) sigma^-
    a[1, 0, 0] = -(1 + s / 2) / _SQ3          # A^0 = -(1+s/2) sigma^z / sqrt3
    a[1, 1, 1] = (1 + s / 2) / _SQ3
    return a


def mps_tensors_deriv(s: float) -> np.ndarray:
    a = np.zeros((3, 2, 2))
    a[0, 0, 1] = -0.5 * _SQ23
    a[2, 1, 0] = 0.5 * _SQ23
    a[1, 0, 0] = -0.5 / _SQ3
    a[1, 1, 1] = 0.5 / _SQ3
    return a


def deformation_weight(s: float) -> float:
    """Weight lambda(s) of the planar component of the s-dependent projector."""
    u = (s + 2.0) ** 4
    w = (s - 2.0) ** 4
    return u / (4.0 * w + 2.0 * u)


def deformation_weight_deriv(s: float) -> float:
    den = 4.0 * (s - 2.0) ** 4 + 2.0 * (s + 2.0) ** 4
    return -64.0 * (s + 2.0) ** 3 * (s - 2.0) ** 3 / den**2


# Two-site basis index p = d_first + 3*d_second.
_P_PM = 0 + 3 * 2   # |+ ->
_P_MP = 2 + 3 * 0   # |- +>
_P_OO = 1 + 3 * 1   # |0 0>
_P_PP = 0
_P_MM = 8
_P_PO = 0 + 3 * 1   # |+ 0>
_P_OP = 1 + 3 * 0   # |0 +>
_P_MO = 2 + 3 * 1   # |- 0>
_P_OM = 1 + 3 * 2   # |0 ->

_U_PLANAR = np.zeros(9)
_U_PLANAR[[_P_PM, _P_MP]] = 1.0
_W_AXIAL = np.zeros(9)
_W_AXIAL[_P_OO] = 1.0


def k0_vector(s: float) -> np.ndarray:
    """s-dependent two-site vector annihilating the state, positive roots."""
    lam = deformation_weight(s)
    if lam < 0 or 1 - 2 * lam < 0:
        raise ValueError("radicands must stay nonnegative on s in [0,1]")
    return np.sqrt(lam) * _U_PLANAR + np.sqrt(1 - 2 * lam) * _W_AXIAL


def k0_vector_deriv(s: float) -> np.ndarray:
    lam = deformation_weight(s)
    dlam = deformation_weight_deriv(s)
    return (dlam / (2 * np.sqrt(lam))) * _U_PLANAR - (dlam / np.sqrt(1 - 2 * lam)) * _W_AXIAL


def j2_vectors() -> dict[int, np.ndarray]:
    """Total-spin-2 eigenvectors of two coupled spin-1, by magnetization m."""
    v = {m: np.zeros(9) for m in (-2, -1, 1, 2)}
    v[2][_P_PP] = 1.0
    v[-2][_P_MM] = 1.0
    v[1][[_P_PO, _P_OP]] = 1 / np.sqrt(2)
    v[-1][[_P_MO, _P_OM]] = 1 / np.sqrt(2)
    return v


@dataclass
class LocalTermSpec:
    """Couplings of one two-site term.

    couplings: J_m for m in {0,+-1,+-2} (single-scar variant, real).
    coeff_matrix/omega0: optional Hermitian 3x3 matrix over m,m' in
    {-2,-1,0} plus level spacing, for the tower variant.
    """

    couplings: dict[int, float] = field(default_factory=lambda: dict(J_SCAR))
    coeff_matrix: np.ndarray | None = None   # order (m=-2, m=-1, m=0)
    omega0: float = 1.0

    def validate(self):
        if self.coeff_matrix is not None:
            cm = np.asarray(self.coeff_matrix)
            if cm.shape != (3, 3) or not np.allclose(cm, cm.conj().T):
                raise ValueError("coeff_matrix must be 3x3 Hermitian")


def local_term(s: float, spec: LocalTermSpec) -> np.ndarray:
    """Two-site 9x9 Hermitian term at deformation s."""
    spec.validate()
    pieces = local_term_pieces(spec)
    lam = deformation_weight(s)
    alpha, beta = np.sqrt(lam), np.sqrt(1 - 2 * lam)
    coeffs = _piece_coeffs(alpha, beta)
    out = sum(coeffs[name] * mat for name, mat in pieces.items())
    return out


def local_term_deriv(s: float, spec: LocalTermSpec) -> np.ndarray:
    spec.validate()
    pieces = local_term_pieces(spec)
    dcoeffs = _piece_coeffs_deriv(s)
    return sum(dcoeffs[name] * mat for name, mat in pieces.items())


def _piece_coeffs(alpha: float, beta: float) -> dict[str, float]:
    return {
        "const": 1.0,
        "alpha": alpha,
        "beta": beta,
        "alpha2": alpha**2,
        "beta2": beta**2,
        "alphabeta": alpha * beta,
    }


def _alpha_beta(s: float) -> tuple[float, float, float, float]:
    lam = deformation_weight(s)
    dlam = deformation_weight_deriv(s)
    alpha = np.sqrt(lam)
    beta = np.sqrt(1 - 2 * lam)
    return alpha, beta, dlam / (2 * alpha), -dlam / beta


def _piece_coeffs_deriv(s: float) -> dict[str, float]:
    alpha, beta, da, db = _alpha_beta(s)
    return {
        "const": 0.0,
        "alpha": da,
        "beta": db,
        "alpha2": 2 * alpha * da,
        "beta2": 2 * beta * db,
        "alphabeta": da * beta + alpha * db,
    }


def local_term_pieces(spec: LocalTermSpec) -> dict[str, np.ndarray]:
    """Decompose the term into s-independent matrices with coefficients
    from {1, alpha, beta, alpha^2, beta^2, alpha*beta}, alpha=sqrt(lambda),
    beta=sqrt(1-2 lambda).  Used for fast re-evaluation along ramps."""
    spec.validate()
    j2 = j2_vectors()
    u, w = _U_PLANAR, _W_AXIAL
    pieces = {
        "const": np.zeros((9, 9)),
        "alpha": np.zeros((9, 9)),
        "beta": np.zeros((9, 9)),
        "alpha2": np.zeros((9, 9)),
        "beta2": np.zeros((9, 9)),
        "alphabeta": np.zeros((9, 9)),
    }
    if spec.coeff_matrix is None:
        j0 = spec.couplings[0]
        for m in (-2, -1, 1, 2):
            jm = spec.couplings[m]
            pieces["const"] += jm * np.outer(j2[m], j2[m])
        pieces["alpha2"] += j0 * np.outer(u, u)
        pieces["beta2"] += j0 * np.outer(w, w)
        pieces["alphabeta"] += j0 * (np.outer(u, w) + np.outer(w, u))
    else:
        cm = np.asarray(spec.coeff_matrix)
        if np.iscomplexobj(cm):
            pieces = {k: v.astype(complex) for k, v in pieces.items()}
        omega = spec.omega0
        pieces["const"] += (omega / 2) * (
            np.outer(j2[1], j2[1]) + np.outer(j2[2], j2[2])
        )
        kvecs = {-2: j2[-2], -1: j2[-1]}       # K_m = J_{2,m} for m != 0
        order = (-2, -1, 0)
        for a, ma in enumerate(order):
            for b, mb in enumerate(order):
                c = cm[a, b]
                if c == 0:
                    continue
                if ma != 0 and mb != 0:
                    pieces["const"] += c * np.outer(kvecs[ma], kvecs[mb])
                elif ma == 0 and mb == 0:
                    pieces["alpha2"] += c * np.outer(u, u)
                    pieces["beta2"] += c * np.outer(w, w)
                    pieces["alphabeta"] += c * (np.outer(u, w) + np.outer(w, u))
                elif ma == 0:
                    pieces["alpha"] += c * np.outer(u, kvecs[mb])
                    pieces["beta"] += c * np.outer(w, kvecs[mb])
                else:
                    pieces["alpha"] += c * np.outer(kvecs[ma], u)
                    pieces["beta"] += c * np.outer(kvecs[ma], w)
    return pieces


@dataclass
class PerturbationSpec:
    """Perturbation added to the chain Hamiltonian.

    clean_zz:       -eps * sum_i Sz_i Sz_{i+1}   (symmetry preserving)
    disordered_zz:  +sum_i eps_i Sz_i Sz_{i+1},  eps_i ~ N(0, eps^2)
    disordered_z:   +sum_i eps_i Sz_i,           eps_i ~ N(0, eps^2)
    """

    kind: str = "clean_zz"
    strength: float = 0.0
    seed: int = 0

    def validate(self, sector: SymmetrySector):
        if self.kind not in ("clean_zz", "disordered_zz", "disordered_z"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.strength < 0:
            raise ValueError("perturbation strength must be >= 0")
        if self.kind in ("disordered_zz", "disordered_z"):
            if sector.momentum is not None or sector.reflection is not None:
                raise ValueError(
                    f"{self.kind} breaks translation/reflection; build the basis "
                    "without those symmetries"
                )
        if self.kind == "disordered_z" and sector.spin_inversion is not None:
            raise ValueError("disordered_z breaks spin inversion")

    def site_values(self, n_sites: int) -> np.ndarray:
        if self.kind == "clean_zz":
            return np.full(n_sites, self.strength)
        rng = np.random.default_rng(self.seed)
        return rng.normal(0.0, self.strength, n_sites)


def scar_sector(n_sites: int) -> SymmetrySector:
    return SymmetrySector(0, 0, 1, 1)


def ground_sector(n_sites: int) -> SymmetrySector:
    return SymmetrySector(0, 0, 1, None)


def tower_sector(n_sites: int, ell: int) -> SymmetrySector:
    q = 0 if ell % 2 == 0 else n_sites // 2
    return SymmetrySector(2 * ell, q, (-1) ** ell, None)


def assemble_hamiltonian(
    n_sites: int,
    variant: str,
    basis: SectorBasis,
    perturbation: PerturbationSpec | None = None,
    couplings: dict[int, float] | None = None,
    omega0: float = 1.0,
    coeff_matrix: np.ndarray | None = None,
) -> LinearParamOperator:
    """Chain Hamiltonian family H(s) in a sector basis.

    variant: "ground" (nonnegative couplings, state is the ground state),
    "scar" (alternating couplings, state is a mid-spectrum scar), or
    "tower" (equally spaced scar tower with level spacing omega0).
    """
    if basis.kind != "spin" or basis.n_sites != n_sites:
        raise ValueError("basis does not match the requested chain")
    if variant == "ground":
        spec = LocalTermSpec(couplings=dict(couplings or J_GROUND))
    elif variant == "scar":
        spec = LocalTermSpec(couplings=dict(couplings or J_SCAR))
    elif variant == "tower":
        cm = coeff_matrix
        if cm is None:
            cm = np.diag([(-1.0) ** m for m in (-2, -1, 0)])
        spec = LocalTermSpec(coeff_matrix=cm, omega0=omega0)
    else:
        raise ValueError(f"unknown variant {variant!r}")

    pieces = local_term_pieces(spec)
    coeff_fns = {
        "const": (lambda s: 1.0, lambda s: 0.0),
        "alpha": (
            lambda s: _alpha_beta(s)[0],
            lambda s: _alpha_beta(s)[2],
        ),
        "beta": (
            lambda s: _alpha_beta(s)[1],
            lambda s: _alpha_beta(s)[3],
        ),
        "alpha2": (
            lambda s: _alpha_beta(s)[0] ** 2,
            lambda s: 2 * _alpha_beta(s)[0] * _alpha_beta(s)[2],
        ),
        "beta2": (
            lambda s: _alpha_beta(s)[1] ** 2,
            lambda s: 2 * _alpha_beta(s)[1] * _alpha_beta(s)[3],
        ),
        "alphabeta": (
            lambda s: _alpha_beta(s)[0] * _alpha_beta(s)[1],
            lambda s: _alpha_beta(s)[0] * _alpha_beta(s)[3]
            + _alpha_beta(s)[1] * _alpha_beta(s)[2],
        ),
    }
    components = []
    for name, mat in pieces.items():
        if not np.any(mat):
            continue
        bond_ops = {i: mat for i in range(n_sites)}
        comp = two_site_matrix(basis, bond_ops)
        fn, dfn = coeff_fns[name]
        components.append((fn, dfn, comp))

    meta = {
        "model": "mps_chain",
        "variant": variant,
        "n_sites": n_sites,
        "couplings": {str(k): v for k, v in (spec.couplings or {}).items()}
        if spec.coeff_matrix is None
        else None,
        "omega0": omega0 if variant == "tower" else None,
        "sector": {
            "total_sz": basis.sector.total_sz,
            "momentum": basis.sector.momentum,
            "reflection": basis.sector.reflection,
            "spin_inversion": basis.sector.spin_inversion,
        },
    }

    if perturbation is not None and perturbation.strength != 0.0:
        perturbation.validate(basis.sector)
        eps = perturbation.site_values(n_sites)
        digits = spin_digits(basis.representatives, n_sites)
        sz = (1 - digits).astype(np.float64)
        if perturbation.kind == "clean_zz":
            diag = -np.sum(eps * sz * np.roll(sz, -1, axis=1), axis=1)
        elif perturbation.kind == "disordered_zz":
            diag = np.sum(eps * sz * np.roll(sz, -1, axis=1), axis=1)
        else:
            diag = sz @ eps
        comp = diagonal_matrix(basis, diag)
        components.append((lambda s: 1.0, lambda s: 0.0, comp))
        meta["perturbation"] = {
            "kind": perturbation.kind,
            "strength": perturbation.strength,
            "seed": perturbation.seed,
        }

    return LinearParamOperator(basis=basis, components=components, metadata=meta)


def mps_amplitudes(n_sites: int, s: float, codes: np.ndarray) -> np.ndarray:
    """Unnormalized trace amplitudes of the deformed state for given configs."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("deformation s must lie in [0, 1]")
    a = mps_tensors(s)
    digits = spin_digits(codes, n_sites)
    mat = a[digits[:, 0]]
    for j in range(1, n_sites):
        mat = mat @ a[digits[:, j]]
    return mat[:, 0, 0] + mat[:, 1, 1]


def mps_amplitude_derivs(n_sites: int, s: float, codes: np.ndarray) -> np.ndarray:
    """d/ds of the unnormalized trace amplitudes."""
    a = mps_tensors(s)
    da = mps_tensors_deriv(s)
    digits = spin_digits(codes, n_sites)
    n_cfg = len(codes)
    prefix = np.empty((n_sites + 1, n_cfg, 2, 2))
    prefix[0] = np.eye(2)
    for j in range(n_sites):
        prefix[j + 1] = prefix[j] @ a[digits[:, j]]
    suffix = np.empty((n_sites + 1, n_cfg, 2, 2))
    suffix[n_sites] = np.eye(2)
    for j in range(n_sites - 1, -1, -1):
        suffix[j] = a[digits[:, j]] @ suffix[j + 1]
    out = np.zeros(n_cfg)
    for j in range(n_sites):
        mats = prefix[j] @ da[digits[:, j]] @ suffix[j + 1]
        out += mats[:, 0, 0] + mats[:, 1, 1]
    return out


def mps_state_vector(n_sites: int, s: float, basis: SectorBasis) -> np.ndarray:
    """Normalized deformed-AKLT state in the given sector basis.

    The overall sign is the raw trace-formula sign (normalization is by a
    positive scalar only).
    """
    if n_sites > 20:
        raise ValueError("dense contraction supported for n_sites <= 20")
    amps = mps_amplitudes(n_sites, s, basis.representatives)
    vec = amps * np.sqrt(basis.orbit_sizes)
    nrm = np.linalg.norm(vec)
    # Confirm the state lies in the sector: in-sector norm must reproduce
    # the full-space norm.
    full = mps_amplitudes(n_sites, s, basis.configs)
    full_nrm = np.linalg.norm(full)
    if not np.isclose(nrm, full_nrm, rtol=1e-8):
        raise ValueError("state does not lie in the requested sector")
    return vec / nrm


def mps_state_deriv(
    n_sites: int, s: float, basis: SectorBasis
) -> tuple[np.ndarray, np.ndarray]:
    """(state, d state/ds), both for the normalized state, in the sector basis."""
    amps = mps_amplitudes(n_sites, s, basis.representatives)
    damps = mps_amplitude_derivs(n_sites, s, basis.representatives)
    w = np.sqrt(basis.orbit_sizes)
    vec, dvec = amps * w, damps * w
    nrm = np.linalg.norm(vec)
    vhat = vec / nrm
    dvhat = dvec / nrm - vhat * (vhat @ dvec) / nrm
    return vhat, dvhat


def tower_state(
    n_sites: int,
    s: float,
    ell: int,
    basis: SectorBasis | None = None,
) -> tuple[np.ndarray | None, SectorBasis]:
    """Normalized ell-quasiparticle scar state, or None when it vanishes.

    The state is built by repeated application of the staggered two-step
    raising operator sum_j (-1)^j (S+_j)^2 (sites numbered from 1) to the
    deformed-AKLT root state.
    """
    if not 0 <= ell <= n_sites // 2:
        raise ValueError("quasiparticle count must be in 0..N/2")
    if basis is None:
        basis = enumerate_spin_sector(n_sites, tower_sector(n_sites, ell))
    codes = spin_configs_with_sz(n_sites, 0)
    amps = mps_amplitudes(n_sites, s, codes)
    scale = np.linalg.norm(amps)
    pows = 3 ** np.arange(n_sites, dtype=np.int64)
    for step in range(ell):
        codes_next = spin_configs_with_sz(n_sites, 2 * (step + 1))
        new_amps = np.zeros(len(codes_next))
        digits = spin_digits(codes, n_sites)
        for j in range(n_sites):
            mask = digits[:, j] == 2
            if not np.any(mask):
                continue
            tgt = codes[mask] - 2 * pows[j]
            idx = np.searchsorted(codes_next, tgt)
            sign = 2.0 * (-1.0) ** (j + 1)
            np.add.at(new_amps, idx, sign * amps[mask])
        codes, amps = codes_next, new_amps
        scale = max(scale, np.linalg.norm(amps))
    nrm = np.linalg.norm(amps)
    if nrm < 1e-12 * scale:
        return None, basis
    # Project onto the symmetry-adapted basis and verify nothing is lost.
    rep_idx = np.searchsorted(codes, basis.representatives)
    if not np.all(codes[np.clip(rep_idx, 0, len(codes) - 1)] == basis.representatives):
        raise ValueError("basis does not match the state's magnetization sector")
    vec = amps[rep_idx] * np.sqrt(basis.orbit_sizes)
    sec_nrm = np.linalg.norm(vec)
    if not np.isclose(sec_nrm, nrm, rtol=1e-8):
        raise ValueError("state does not lie in the requested sector")
    return vec / sec_nrm, basis
