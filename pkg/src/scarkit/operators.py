"""Sparse operators in symmetry-adapted sector bases.

A ParamOperator is a Hermitian operator family H(s) represented in a
SectorBasis.  The common case (chain models) is a fixed set of sparse
components combined with scalar coefficient functions of s; the FQH model
rebuilds its matrix per s and uses the callable variant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .hilbert import SectorBasis, spin_digits

__all__ = [
    "two_site_matrix",
    "diagonal_matrix",
    "apply_two_site_dense",
    "ParamOperator",
    "LinearParamOperator",
    "CallableParamOperator",
]


def _bond_sites(n_sites: int, bond: int) -> tuple[int, int]:
    return bond, (bond + 1) % n_sites


def two_site_matrix(basis: SectorBasis, bond_ops: dict[int, np.ndarray]) -> sp.csr_matrix:
    """Assemble sum_i O_i acting on sites (i, i+1 mod N) in the sector basis.

    bond_ops maps bond index -> 9x9 matrix in the two-site basis
    p = d_i + 3*d_{i+1}.  Operators must conserve total magnetization.
    The result is exactly Hermitian (symmetrized).
    """
    n = basis.n_sites
    reps = basis.representatives
    digits = spin_digits(reps, n)
    orbit = basis.orbit_sizes.astype(np.float64)
    pows = 3 ** np.arange(n, dtype=np.int64)

    complex_out = any(np.iscomplexobj(op) for op in bond_ops.values()) or np.iscomplexobj(
        basis.phases
    )
    rows, cols, vals = [], [], []
    col_idx = np.arange(len(reps), dtype=np.int64)
    for bond, op in bond_ops.items():
        i, j = _bond_sites(n, bond)
        pat = digits[:, i].astype(np.int64) + 3 * digits[:, j].astype(np.int64)
        nz_out, nz_in = np.nonzero(op)
        for p_in in np.unique(nz_in):
            mask = pat == p_in
            if not np.any(mask):
                continue
            src_codes = reps[mask]
            src_cols = col_idx[mask]
            src_orbit = orbit[mask]
            di_in, dj_in = p_in % 3, p_in // 3
            for p_out in nz_out[nz_in == p_in]:
                coeff = op[p_out, p_in]
                di_out, dj_out = p_out % 3, p_out // 3
                tgt = src_codes + (di_out - di_in) * pows[i] + (dj_out - dj_in) * pows[j]
                rpos, phase = basis.lookup(tgt)
                ok = rpos >= 0
                if not np.any(ok):
                    continue
                weight = np.sqrt(src_orbit[ok] / orbit[rpos[ok]])
                rows.append(rpos[ok])
                cols.append(src_cols[ok])
                vals.append(coeff * np.conj(phase[ok]) * weight)
    dim = basis.dim
    if rows:
        dtype = np.complex128 if complex_out else np.float64
        data = np.concatenate(vals).astype(dtype)
        mat = sp.coo_matrix(
            (data, (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
        ).tocsr()
    else:
        mat = sp.csr_matrix((dim, dim))
    mat = (mat + mat.conj().T) * 0.5
    mat.sum_duplicates()
    return mat


def diagonal_matrix(basis: SectorBasis, diag_per_rep: np.ndarray) -> sp.csr_matrix:
    """Diagonal operator from its value at each representative.

    Valid only for operators that are constant on symmetry orbits; callers
    enforce that by construction (symmetry-compatible perturbations).
    """
    return sp.diags(diag_per_rep).tocsr()


def apply_two_site_dense(
    codes: np.ndarray,
    amps: np.ndarray,
    op: np.ndarray,
    bond: int,
    n_sites: int,
) -> np.ndarray:
    """Apply a 9x9 two-site operator at one bond to amplitudes over a config list.

    codes must be sorted and closed under the operator (magnetization
    conserving); used by small-N oracles and frustration-freeness checks.
    """
    i, j = _bond_sites(n_sites, bond)
    digits = spin_digits(codes, n_sites)
    pat = digits[:, i].astype(np.int64) + 3 * digits[:, j].astype(np.int64)
    pows = 3 ** np.arange(n_sites, dtype=np.int64)
    out = np.zeros(len(codes), dtype=np.result_type(amps, op))
    nz_out, nz_in = np.nonzero(op)
    for p_in in np.unique(nz_in):
        mask = pat == p_in
        if not np.any(mask):
            continue
        src_codes = codes[mask]
        src_amps = amps[mask]
        di_in, dj_in = p_in % 3, p_in // 3
        for p_out in nz_out[nz_in == p_in]:
            di_out, dj_out = p_out % 3, p_out // 3
            tgt = src_codes + (di_out - di_in) * pows[i] + (dj_out - dj_in) * pows[j]
            idx = np.searchsorted(codes, tgt)
            if not np.all(codes[np.clip(idx, 0, len(codes) - 1)] == tgt):
                raise ValueError("operator leaves the configuration list")
            np.add.at(out, idx, op[p_out, p_in] * src_amps)
    return out


class ParamOperator:
    """Hermitian operator valued at a ramp parameter s."""

    basis: SectorBasis

    def value(self, s: float) -> sp.csr_matrix:
        raise NotImplementedError

    def deriv(self, s: float) -> sp.csr_matrix:
        raise NotImplementedError

    def matvec(self, s: float, x: np.ndarray) -> np.ndarray:
        return self.value(s) @ x

    @property
    def dim(self) -> int:
        return self.basis.dim

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass
class LinearParamOperator(ParamOperator):
    """H(s) = sum_k c_k(s) * H_k with analytic coefficient derivatives."""

    basis: SectorBasis
    components: Sequence[tuple[Callable[[float], float], Callable[[float], float], sp.csr_matrix]]
    metadata: dict | None = None

    def __post_init__(self):
        self._cache_s = None
        self._cache_val = None

    def value(self, s: float) -> sp.csr_matrix:
        if self._cache_s is not None and s == self._cache_s:
            return self._cache_val
        mat = None
        for coeff, _dcoeff, comp in self.components:
            c = coeff(s)
            if c == 0.0:
                continue
            mat = c * comp if mat is None else mat + c * comp
        if mat is None:
            mat = sp.csr_matrix((self.basis.dim, self.basis.dim))
        self._cache_s, self._cache_val = s, mat
        return mat

    def deriv(self, s: float) -> sp.csr_matrix:
        mat = None
        for _coeff, dcoeff, comp in self.components:
            c = dcoeff(s)
            if c == 0.0:
                continue
            mat = c * comp if mat is None else mat + c * comp
        if mat is None:
            mat = sp.csr_matrix((self.basis.dim, self.basis.dim))
        return mat

    def to_config(self) -> dict:
        return dict(self.metadata or {})


@dataclass
class CallableParamOperator(ParamOperator):
    basis: SectorBasis
    value_fn: Callable[[float], sp.csr_matrix]
    deriv_fn: Callable[[float], sp.csr_matrix] | None = None
    metadata: dict | None = None

    def __post_init__(self):
        self._cache_s = None
        self._cache_val = None

    def value(self, s: float) -> sp.csr_matrix:
        if self._cache_s is not None and s == self._cache_s:
            return self._cache_val
        mat = self.value_fn(s)
        self._cache_s, self._cache_val = s, mat
        return mat

    def deriv(self, s: float) -> sp.csr_matrix:
        if self.deriv_fn is None:
            raise NotImplementedError("no analytic derivative available")
        return self.deriv_fn(s)

    def to_config(self) -> dict:
        return dict(self.metadata or {})
