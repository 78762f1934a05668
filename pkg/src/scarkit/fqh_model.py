"""Lattice Laughlin two-quasihole scar model on a rectangular lattice.

Hardcore bosons at half filling minus one particle, with two pinned
quasiholes at w1 (fixed, lattice center) and w2 (moved along a rectangular
loop).  The parent Hamiltonian is built from single- and double-annihilation
operators that kill the state, either operator-by-operator (oracle path) or
through precomputed coefficient tables (production path).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .hilbert import SectorBasis, enumerate_boson_sector, occupations
from .operators import CallableParamOperator

__all__ = [
    "LatticeGeometry",
    "QuasiholePath",
    "laughlin_state",
    "annihilation_operators",
    "CoefficientTables",
    "coefficient_tables",
    "assemble_fqh_hamiltonian",
    "fqh_operator",
]

_POLE_TOL = 1e-9


@dataclass(frozen=True)
class LatticeGeometry:
    """Rectangular lattice of l_x * l_y sites at unit spacing.

    Site j sits at z_j = x + i y with j = x + l_x * y (row-major, x fastest).
    """

    l_x: int
    l_y: int

    def __post_init__(self):
        if (self.l_x * self.l_y) % 2:
            raise ValueError("site count must be even")

    @property
    def n_sites(self) -> int:
        return self.l_x * self.l_y

    @property
    def positions(self) -> np.ndarray:
        x = np.arange(self.l_x)
        y = np.arange(self.l_y)
        return (x[None, :] + 1j * y[:, None]).ravel()

    @property
    def center(self) -> complex:
        return complex((self.l_x - 1) / 2, (self.l_y - 1) / 2)

    @property
    def particles(self) -> int:
        return self.n_sites // 2 - 1


@dataclass(frozen=True)
class QuasiholePath:
    """Rectangular loop of the mobile quasihole, parameterized by s in [0, 4].

    The loop is centered on the fixed quasihole; its width (height) is two
    lattice spacings when l_x (l_y) is even and one when odd, which keeps
    w2 off the lattice sites.  Corners sit at integer s; both coordinates
    of w2 change linearly on each edge.
    """

    geometry: LatticeGeometry

    @property
    def w1(self) -> complex:
        return self.geometry.center

    @property
    def corners(self) -> tuple[complex, ...]:
        hw = 1.0 if self.geometry.l_x % 2 == 0 else 0.5
        hh = 1.0 if self.geometry.l_y % 2 == 0 else 0.5
        c = self.w1
        return (
            c + hw - 1j * hh,
            c + hw + 1j * hh,
            c - hw + 1j * hh,
            c - hw - 1j * hh,
        )

    def w2(self, s: float) -> complex:
        if not 0.0 <= s <= 4.0:
            raise ValueError("path parameter s must lie in [0, 4]")
        seg = min(int(np.floor(s)), 3)
        t = s - seg
        c = self.corners
        return c[seg] + t * (c[(seg + 1) % 4] - c[seg])

    def dw2(self, s: float) -> complex:
        seg = min(int(np.floor(s)), 3)
        c = self.corners
        return c[(seg + 1) % 4] - c[seg]


def _check_poles(z: np.ndarray, ws) -> None:
    for w in ws:
        if np.min(np.abs(z - w)) < _POLE_TOL:
            raise ValueError(f"quasihole coordinate {w} coincides with a lattice site")


def laughlin_state(
    geometry: LatticeGeometry,
    w1: complex,
    w2: complex,
    basis: SectorBasis,
) -> np.ndarray:
    """Normalized two-quasihole state vector in the fixed-number basis.

    Amplitudes are accumulated as log magnitude plus phase (the Jastrow
    products overflow doubles beyond ~20 sites); the global phase makes the
    largest-magnitude amplitude real positive.
    """
    n = geometry.n_sites
    if basis.kind != "boson" or basis.n_sites != n:
        raise ValueError("basis does not match the lattice")
    if basis.particles != geometry.particles:
        raise ValueError("state requires the N/2 - 1 particle sector")
    z = geometry.positions
    _check_poles(z, (w1, w2))

    occ = occupations(basis.configs, n).astype(np.float64)
    site_log = np.log((z - w1) * (z - w2))
    pair_log = np.zeros((n, n), dtype=complex)
    for j in range(n):
        for k in range(j + 1, n):
            pair_log[j, k] = pair_log[k, j] = np.log(z[j] - z[k])
    row_sum = pair_log.sum(axis=1)

    sign_phase = 1j * np.pi * (occ @ np.arange(n))
    quad = np.einsum("ci,ij,cj->c", occ, pair_log, occ)
    log_amp = occ @ site_log + quad - occ @ row_sum + sign_phase

    re = np.real(log_amp)
    amp = np.exp(log_amp - np.max(re))
    amp /= np.linalg.norm(amp)
    k_max = int(np.argmax(np.abs(amp)))
    amp *= np.conj(amp[k_max]) / np.abs(amp[k_max])
    return amp


def _inverse_distances(geometry: LatticeGeometry, w1, w2):
    z = geometry.positions
    n = geometry.n_sites
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    c = 1.0 / diff
    np.fill_diagonal(c, 0.0)
    ct = np.stack([1.0 / (z - w1), 1.0 / (z - w2)], axis=1)   # (n, 2)
    return c, ct


def annihilation_operators(
    geometry: LatticeGeometry,
    w1: complex,
    w2: complex,
    basis: SectorBasis,
) -> tuple[list[sp.csr_matrix], list[sp.csr_matrix]]:
    """Per-site single- and double-annihilation operators killing the state.

    Lambda_j removes one particle, Gamma_j removes two; both are returned as
    sparse maps from `basis` into the corresponding lower-number sectors.
    """
    n = geometry.n_sites
    z = geometry.positions
    _check_poles(z, (w1, w2))
    c, ct = _inverse_distances(geometry, w1, w2)
    p = basis.particles
    basis_m1 = enumerate_boson_sector(n, p - 1)
    basis_m2 = enumerate_boson_sector(n, p - 2) if p >= 2 else None
    occ = occupations(basis.configs, n)
    codes = basis.configs
    dim = basis.dim

    lambdas, gammas = [], []
    for j in range(n):
        rows, cols, vals = [], [], []
        # c_jk d_k for k != j
        for k in range(n):
            if k == j:
                continue
            mask = occ[:, k] == 1
            if not np.any(mask):
                continue
            tgt = codes[mask] - (1 << k)
            idx = np.searchsorted(basis_m1.configs, tgt)
            rows.append(idx)
            cols.append(np.nonzero(mask)[0])
            vals.append(np.full(mask.sum(), c[j, k]))
        # [-sum_k c_jk (2 n_k - 1) - sum_l ct_jl] d_j
        mask = occ[:, j] == 1
        if np.any(mask):
            sel = np.nonzero(mask)[0]
            coeff = -(occ[sel] * 2.0 - 1.0) @ c[j] - ct[j].sum()
            # n_j itself contributes c_jj = 0, so no self-term correction
            tgt = codes[sel] - (1 << j)
            idx = np.searchsorted(basis_m1.configs, tgt)
            rows.append(idx)
            cols.append(sel)
            vals.append(coeff)
        lam = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(basis_m1.dim, dim),
        ).tocsr()
        lambdas.append(lam)

        if basis_m2 is not None:
            rows, cols, vals = [], [], []
            for k in range(n):
                if k == j:
                    continue
                mask = (occ[:, j] == 1) & (occ[:, k] == 1)
                if not np.any(mask):
                    continue
                sel = np.nonzero(mask)[0]
                tgt = codes[sel] - (1 << j) - (1 << k)
                idx = np.searchsorted(basis_m2.configs, tgt)
                rows.append(idx)
                cols.append(sel)
                vals.append(np.full(len(sel), c[j, k]))
            if rows:
                gam = sp.coo_matrix(
                    (
                        np.concatenate(vals),
                        (np.concatenate(rows), np.concatenate(cols)),
                    ),
                    shape=(basis_m2.dim, dim),
                ).tocsr()
            else:
                gam = sp.csr_matrix((basis_m2.dim, dim))
            gammas.append(gam)
        else:
            gammas.append(sp.csr_matrix((1, dim)))
    return lambdas, gammas


@dataclass
class CoefficientTables:
    """Expansion coefficients of the parent Hamiltonian.

    f_a, f_b: (n, n) hopping / density-density tables (s-dependent);
    f_c: (n, n, n) correlated hopping (s-independent, beta-dependent);
    f_d: (n, n, n) three-density (independent of s and beta);
    f_e: (n,) on-site (s-dependent).  d-tables of the s-derivative are
    stored in df_a/df_b/df_e when requested.
    """

    beta: float
    f_a: np.ndarray
    f_b: np.ndarray
    f_c: np.ndarray
    f_d: np.ndarray
    f_e: np.ndarray
    df_a: np.ndarray | None = None
    df_b: np.ndarray | None = None
    df_e: np.ndarray | None = None


def coefficient_tables(
    geometry: LatticeGeometry,
    w1: complex,
    w2: complex,
    beta: float,
    dw2: complex | None = None,
) -> CoefficientTables:
    n = geometry.n_sites
    z = geometry.positions
    _check_poles(z, (w1, w2))
    c, ct = _inverse_distances(geometry, w1, w2)
    cc = c.conj()
    ct_sum = ct.sum(axis=1)                       # sum_l ct_jl

    # f_a[i,j] = 2|c_ij|^2 + sum_{k != i,j} (c_ik* c_ij + c_ji* c_jk + c_ki* c_kj)
    #            - sum_l (c_ij ct_il* + c_ji* ct_jl)
    # k = i or j terms of the full-row sums vanish through c_ii = 0, except
    # the k = j (k = i) term subtracted explicitly in the first (second) sum.
    abs2 = np.abs(c) ** 2
    sum_cik_conj = cc.sum(axis=1)
    sum_cjk = c.sum(axis=1)
    cross = cc.T @ c                              # sum_k c_ki* c_kj
    f_a = 2.0 * abs2
    f_a = f_a + (sum_cik_conj[:, None] - cc) * c
    f_a = f_a + cc.T * (sum_cjk[None, :] - c.T)
    f_a = f_a + cross
    f_a = f_a - (c * np.conj(ct_sum)[:, None] + cc.T * ct_sum[None, :])
    np.fill_diagonal(f_a, 0.0)

    # f_b[i,j] = beta |c_ij|^2 - 2 sum_{k != i,j} (c_ij* c_ik + c.c.)
    #            + 2 sum_l (c_ij ct_il* + c.c.)
    row_sum_c = c.sum(axis=1)
    inner = cc * (row_sum_c[:, None] - c)        # c_ij* sum_{k != j} c_ik (k=i drops)
    f_b = beta * abs2 - 2.0 * (inner + inner.conj()) + 2.0 * (
        c * np.conj(ct_sum)[:, None] + np.conj(c * np.conj(ct_sum)[:, None])
    )
    f_b = np.real(f_b)
    np.fill_diagonal(f_b, 0.0)

    # f_c[i,j,k] = -2 (c_ik* c_ij + c_ji* c_jk) + beta c_ki* c_kj, all distinct
    f_c = (
        -2.0 * np.einsum("ik,ij->ijk", cc, c)
        - 2.0 * np.einsum("ji,jk->ijk", cc, c)
        + beta * np.einsum("ki,kj->ijk", cc, c)
    )
    _zero_repeated(f_c)

    # f_d[i,j,k] = 4 c_ij* c_ik, all distinct
    f_d = 4.0 * np.einsum("ij,ik->ijk", cc, c)
    _zero_repeated(f_d)

    # f_e[i] = sum_{j != i} |c_ij|^2 + sum_{j,k != i} c_ij* c_ik
    #          - sum_{j != i} sum_l (c_ij ct_il* + c.c.) + sum_{l,m} ct_il* ct_im
    f_e = (
        abs2.sum(axis=1)
        + np.abs(row_sum_c) ** 2
        - 2.0 * np.real(row_sum_c * np.conj(ct_sum))
        + np.abs(ct_sum) ** 2
    )
    f_e = np.real(f_e)

    tables = CoefficientTables(
        beta=beta, f_a=f_a, f_b=f_b, f_c=f_c, f_d=f_d, f_e=f_e
    )

    if dw2 is not None:
        dct2 = dw2 / (z - w2) ** 2                # d/ds of 1/(z_j - w2(s))
        dct_sum = dct2                            # only l = 2 moves
        df_a = -(c * np.conj(dct_sum)[:, None] + cc.T * dct_sum[None, :])
        np.fill_diagonal(df_a, 0.0)
        db = 2.0 * (c * np.conj(dct_sum)[:, None])
        df_b = np.real(db + db.conj())
        np.fill_diagonal(df_b, 0.0)
        df_e = np.real(
            -2.0 * np.real(row_sum_c * np.conj(dct_sum))
            + 2.0 * np.real(np.conj(dct_sum) * ct_sum)
        )
        tables.df_a, tables.df_b, tables.df_e = df_a, df_b, df_e
    return tables


def _zero_repeated(t: np.ndarray) -> None:
    """Zero entries of a 3-index table with any repeated index."""
    n = t.shape[0]
    idx = np.arange(n)
    t[idx, idx, :] = 0.0
    t[idx, :, idx] = 0.0
    t[:, idx, idx] = 0.0


def _assemble_from_tables(
    basis: SectorBasis,
    f_a: np.ndarray,
    f_b: np.ndarray | None,
    f_c: np.ndarray | None,
    f_d: np.ndarray | None,
    f_e: np.ndarray | None,
) -> sp.csr_matrix:
    """Sparse matrix of the table Hamiltonian in the fixed-number basis."""
    n = basis.n_sites
    occ = occupations(basis.configs, n).astype(np.float64)
    codes = basis.configs
    dim = basis.dim
    dtype = np.complex128

    diag = np.zeros(dim)
    if f_b is not None:
        diag += np.einsum("ci,ij,cj->c", occ, f_b, occ)
    if f_d is not None:
        diag += np.real(
            np.einsum("ci,cj,ck,ijk->c", occ, occ, occ, f_d, optimize=True)
        )
    if f_e is not None:
        diag += occ @ f_e

    rows, cols, vals = [], [], []
    col_idx = np.arange(dim)
    if f_c is not None:
        # per-config effective hop table: f_a[i,j] + sum_k f_c[i,j,k] n_k
        heff = np.einsum("ijk,ck->cij", f_c, occ, optimize=True)
        heff += f_a[None, :, :]
    else:
        heff = np.broadcast_to(f_a, (dim,) + f_a.shape)
    for j in range(n):
        occ_j = occ[:, j] == 1
        for i in range(n):
            if i == j:
                continue
            mask = occ_j & (occ[:, i] == 0)
            if not np.any(mask):
                continue
            sel = np.nonzero(mask)[0]
            tgt = codes[sel] - (1 << j) + (1 << i)
            idx = np.searchsorted(codes, tgt)
            rows.append(idx)
            cols.append(sel)
            vals.append(np.asarray(heff[sel, i, j], dtype=dtype))
    mats = [sp.diags(diag.astype(dtype))]
    if rows:
        mats.append(
            sp.coo_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(dim, dim),
            )
        )
    h = sum(m.tocsr() for m in mats)
    h = (h + h.conj().T) * 0.5
    h.sum_duplicates()
    return h


class _FqhAssembler:
    """Ramp-ready assembler: sparsity pattern and the three-index table
    contractions are s-independent, so they are precomputed once and every
    H(s) evaluation only fills table values (ms instead of tens of ms)."""

    def __init__(self, geometry, path, beta, basis):
        self.geometry = geometry
        self.path = path
        self.beta = beta
        self.basis = basis
        n = geometry.n_sites
        occ = occupations(basis.configs, n).astype(np.float64)
        self.occ = occ
        codes = basis.configs
        dim = basis.dim
        t0 = coefficient_tables(geometry, path.w1, path.w2(0.0), beta)
        self.heff_const = np.einsum("ijk,ck->cij", t0.f_c, occ, optimize=True)
        self.diag_const = np.real(
            np.einsum("ci,cj,ck,ijk->c", occ, occ, occ, t0.f_d, optimize=True)
        )
        rows, cols, gat_i, gat_j = [], [], [], []
        for j in range(n):
            occ_j = occ[:, j] == 1
            for i in range(n):
                if i == j:
                    continue
                sel = np.nonzero(occ_j & (occ[:, i] == 0))[0]
                if not len(sel):
                    continue
                tgt = codes[sel] - (1 << j) + (1 << i)
                rows.append(np.searchsorted(codes, tgt))
                cols.append(sel)
                gat_i.append(np.full(len(sel), i))
                gat_j.append(np.full(len(sel), j))
        self.rows = np.concatenate(rows)
        self.cols = np.concatenate(cols)
        gi, gj = np.concatenate(gat_i), np.concatenate(gat_j)
        self.hop_flat = (self.cols * n + gi) * n + gj    # index into (D, n, n)
        self.fa_flat = gi * n + gj                       # index into (n, n)
        self.dim = dim

    def _build(self, f_a, f_b, f_e, include_const: bool) -> sp.csr_matrix:
        occ = self.occ
        diag = np.einsum("ci,ij,cj->c", occ, f_b, occ) + occ @ f_e
        if include_const:
            diag = diag + self.diag_const
            hop = self.heff_const.reshape(-1)[self.hop_flat] + f_a.reshape(-1)[
                self.fa_flat
            ]
        else:
            hop = f_a.reshape(-1)[self.fa_flat]
        mat = sp.coo_matrix(
            (hop.astype(np.complex128), (self.rows, self.cols)),
            shape=(self.dim, self.dim),
        ).tocsr()
        mat = mat + sp.diags(diag.astype(np.complex128))
        mat = (mat + mat.conj().T) * 0.5
        return mat.tocsr()

    def value(self, s: float) -> sp.csr_matrix:
        t = coefficient_tables(self.geometry, self.path.w1, self.path.w2(s), self.beta)
        return self._build(t.f_a, t.f_b, t.f_e, include_const=True)

    def deriv(self, s: float) -> sp.csr_matrix:
        t = coefficient_tables(
            self.geometry, self.path.w1, self.path.w2(s), self.beta,
            dw2=self.path.dw2(s),
        )
        return self._build(t.df_a, t.df_b, t.df_e, include_const=False)


def assemble_fqh_hamiltonian(
    geometry: LatticeGeometry,
    path: QuasiholePath,
    s: float,
    beta: float,
    basis: SectorBasis,
) -> sp.csr_matrix:
    """Parent Hamiltonian at path parameter s, from coefficient tables."""
    t = coefficient_tables(geometry, path.w1, path.w2(s), beta)
    return _assemble_from_tables(basis, t.f_a, t.f_b, t.f_c, t.f_d, t.f_e)


def fqh_operator(
    geometry: LatticeGeometry,
    path: QuasiholePath,
    beta: float,
    basis: SectorBasis,
) -> CallableParamOperator:
    """ParamOperator wrapper with analytic s-derivative via table derivatives."""
    assembler = _FqhAssembler(geometry, path, beta, basis)
    meta = {
        "model": "fqh_lattice",
        "l_x": geometry.l_x,
        "l_y": geometry.l_y,
        "beta": beta,
        "particles": geometry.particles,
    }
    return CallableParamOperator(
        basis=basis,
        value_fn=assembler.value,
        deriv_fn=assembler.deriv,
        metadata=meta,
    )
