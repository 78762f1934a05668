"""Diagonalization and static diagnostics.

Dense eigendecompositions, iterative lowest-eigenpair solves, level-spacing
statistics and bipartite entanglement entropies, plus scar identification
by overlap with an analytic reference state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import SectorBasis

__all__ = [
    "EigenDecomposition",
    "full_diagonalize",
    "lanczos_lowest",
    "level_statistics",
    "LevelStatistics",
    "entanglement_entropy",
    "schmidt_values",
    "R_POISSON",
    "R_GOE",
    "R_GUE",
    "DENSE_DIM_LIMIT",
]

# Reference mean gap-ratio values for the standard ensembles.
R_POISSON = 0.386
R_GOE = 0.536
R_GUE = 0.603

DENSE_DIM_LIMIT = 20000
_DEGENERACY_TOL = 1e-10


@dataclass
class EigenDecomposition:
    energies: np.ndarray             # ascending
    states: np.ndarray | None        # columns are eigenvectors (sector basis)
    scar_index: int | None = None
    scar_overlap: float | None = None
    complete: bool = True            # False for partial (iterative) solves
    residuals: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.energies)

    def identify_scar(self, reference: np.ndarray) -> int:
        """Index of the eigenstate with maximal overlap with a reference state.

        Within a numerically degenerate cluster, the cluster is rotated so
        that one member absorbs the full reference overlap; the rotated
        vector replaces that column.
        """
        if self.states is None:
            raise ValueError("eigenvectors required to identify the scar state")
        ov = np.abs(self.states.conj().T @ reference)
        idx = int(np.argmax(ov))
        e0 = self.energies[idx]
        cluster = np.nonzero(np.abs(self.energies - e0) < _DEGENERACY_TOL)[0]
        if len(cluster) > 1:
            block = self.states[:, cluster]
            coef = block.conj().T @ reference
            nrm = np.linalg.norm(coef)
            if nrm > 0:
                rotated = block @ (coef / nrm)
                idx = int(cluster[np.argmax(np.abs(coef))])
                self.states[:, idx] = rotated
        self.scar_index = idx
        self.scar_overlap = float(np.abs(self.states[:, idx].conj() @ reference) ** 2)
        return idx


def full_diagonalize(
    matrix,
    reference: np.ndarray | None = None,
    compute_vectors: bool = True,
) -> EigenDecomposition:
    """Complete spectrum of a Hermitian sparse/dense matrix (dense solver).

    Raises for dimensions beyond DENSE_DIM_LIMIT; use lanczos_lowest there.
    """
    if sp.issparse(matrix):
        dim = matrix.shape[0]
        if dim > DENSE_DIM_LIMIT:
            raise ValueError(
                f"dimension {dim} too large for dense diagonalization; "
                "use lanczos_lowest"
            )
        dense = matrix.toarray()
    else:
        dense = np.asarray(matrix)
        dim = dense.shape[0]
        if dim > DENSE_DIM_LIMIT:
            raise ValueError(
                f"dimension {dim} too large for dense diagonalization; "
                "use lanczos_lowest"
            )
    if compute_vectors:
        energies, states = la.eigh(dense)
    else:
        energies, states = la.eigvalsh(dense), None
    dec = EigenDecomposition(energies=energies, states=states)
    if reference is not None and compute_vectors:
        dec.identify_scar(reference)
    return dec


def lanczos_lowest(
    matrix,
    k: int,
    tol: float = 0.0,
    maxiter: int | None = None,
    residual_tol: float = 1e-8,
) -> EigenDecomposition:
    """k lowest eigenpairs of a sparse Hermitian matrix (implicitly restarted
    Lanczos with reorthogonalization, via ARPACK).

    Non-convergence is reported together with the achieved residuals.
    """
    dim = matrix.shape[0]
    if k >= dim - 1:
        return full_diagonalize(matrix)
    try:
        energies, states = spla.eigsh(matrix, k=k, which="SA", tol=tol, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        energies, states = exc.eigenvalues, exc.eigenvectors
        if len(energies) == 0:
            raise RuntimeError("Lanczos did not converge any eigenpairs") from exc
    order = np.argsort(energies)
    energies, states = energies[order], states[:, order]
    resid = np.linalg.norm(matrix @ states - states * energies, axis=0)
    if np.any(resid > residual_tol):
        raise RuntimeError(
            f"Lanczos residuals above {residual_tol}: max {resid.max():.2e} "
            f"for {np.sum(resid > residual_tol)} of {len(resid)} pairs"
        )
    return EigenDecomposition(
        energies=energies, states=states, complete=False, residuals=resid
    )


@dataclass
class LevelStatistics:
    r_values: np.ndarray
    r_ave: float
    histogram: tuple[np.ndarray, np.ndarray]   # (counts, bin edges)
    n_degenerate: int


def level_statistics(
    energies: np.ndarray,
    exclude: np.ndarray | None = None,
    bins: int = 50,
) -> LevelStatistics:
    """Consecutive-gap ratios r_n = min(d_n, d_n+1)/max(d_n, d_n+1).

    energies must be sorted ascending.  exclude drops the given indices
    (e.g. the scar state) before forming gaps; by default every state is
    kept.  Exact degeneracies produce r = 0 entries, which are counted and
    flagged rather than silently dropped.
    """
    e = np.asarray(energies, dtype=float)
    if np.any(np.diff(e) < 0):
        raise ValueError("energies must be sorted ascending")
    if exclude is not None and len(exclude):
        keep = np.ones(len(e), dtype=bool)
        keep[np.asarray(exclude)] = False
        e = e[keep]
    gaps = np.diff(e)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.minimum(gaps[:-1], gaps[1:]) / np.maximum(gaps[:-1], gaps[1:])
    r = np.nan_to_num(r, nan=0.0)
    n_deg = int(np.sum((gaps[:-1] == 0) | (gaps[1:] == 0)))
    counts, edges = np.histogram(r, bins=bins, range=(0.0, 1.0))
    return LevelStatistics(
        r_values=r,
        r_ave=float(np.mean(r)) if len(r) else np.nan,
        histogram=(counts, edges),
        n_degenerate=n_deg,
    )


def schmidt_values(
    state: np.ndarray,
    basis: SectorBasis,
    n_a: int | None = None,
) -> np.ndarray:
    """Schmidt spectrum across a contiguous cut after expanding symmetries.

    The cut keeps sites 0..n_a-1 (chain: first half; FQH lattice in
    row-major order: lower half of the rows).
    """
    if n_a is None:
        n_a = basis.n_sites // 2
    amps = basis.expand(state) if len(state) == basis.dim else np.asarray(state)
    local = 3 if basis.kind == "spin" else 2
    dim_a = local**n_a
    codes = basis.configs
    left = (codes % dim_a).astype(np.int64)
    right = (codes // dim_a).astype(np.int64)
    dim_b = int(right.max()) + 1 if len(right) else 1
    mat = sp.coo_matrix((amps, (left, right)), shape=(dim_a, dim_b)).toarray()
    return la.svdvals(mat)


def entanglement_entropy(
    state: np.ndarray,
    basis: SectorBasis,
    n_a: int | None = None,
) -> float:
    """Bipartite von Neumann entropy (natural log) of a sector-basis state."""
    sv = schmidt_values(state, basis, n_a)
    p = sv**2
    p = p[p > 1e-300]
    p = p / p.sum()
    return float(-np.sum(p * np.log(p)))
