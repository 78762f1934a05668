"""Configuration spaces and symmetry-adapted sector bases.

Two kinds of local degrees of freedom are supported:

* spin-1 chains with periodic boundaries, reduced by total magnetization,
  translation (momentum), spatial reflection and global spin inversion;
* hardcore bosons on a lattice, reduced by total particle number only.

Conventions (fixed once, relied on by everything downstream):

* spin configurations are encoded as base-3 integers with site 0 as the
  least significant digit; digit d encodes the local level m = 1 - d,
  i.e. d=0 is m=+1, d=1 is m=0, d=2 is m=-1;
* boson configurations are bitmasks, bit j = occupation of site j, with
  row-major site order j = x + Lx*y on rectangular lattices;
* the representative of a symmetry orbit is its numerically smallest
  encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import comb

__all__ = [
    "SymmetrySector",
    "SectorBasis",
    "spin_configs_with_sz",
    "enumerate_spin_sector",
    "enumerate_boson_sector",
    "translate_code",
    "translate_code_inv",
    "reflect_code",
    "invert_code",
    "spin_digits",
]


@dataclass(frozen=True)
class SymmetrySector:
    """Labels of a symmetry sector of the spin chain.

    momentum is the integer q of k = 2*pi*q/n_sites, or None when
    translation symmetry is not used.  reflection and spin_inversion are
    +1/-1 or None.  Reflection may only be combined with momentum 0 or
    pi (q = 0 or n/2), where the combined characters are real.
    """

    total_sz: int
    momentum: int | None = None
    reflection: int | None = None
    spin_inversion: int | None = None

    def validate(self, n_sites: int) -> None:
        if self.momentum is not None and not 0 <= self.momentum < n_sites:
            raise ValueError(f"momentum index {self.momentum} not in 0..{n_sites - 1}")
        if self.reflection not in (None, 1, -1):
            raise ValueError("reflection must be +1, -1 or None")
        if self.spin_inversion not in (None, 1, -1):
            raise ValueError("spin_inversion must be +1, -1 or None")
        if self.reflection is not None:
            if self.momentum is None or self.momentum not in (0, n_sites // 2):
                raise ValueError(
                    "reflection requires momentum 0 or pi (real characters)"
                )
        if self.spin_inversion is not None and self.total_sz != 0:
            raise ValueError("spin inversion only commutes with the S^z_tot=0 sector")


def spin_digits(codes: np.ndarray, n_sites: int) -> np.ndarray:
    """Base-3 digit matrix, shape (len(codes), n_sites), site 0 first."""
    codes = np.asarray(codes, dtype=np.int64)
    out = np.empty(codes.shape + (n_sites,), dtype=np.int8)
    rem = codes.copy()
    for j in range(n_sites):
        out[..., j] = rem % 3
        rem //= 3
    return out


def translate_code(codes, n_sites):
    """Shift every spin one site up (site j -> j+1, cyclic)."""
    base = 3 ** (n_sites - 1)
    return (codes % base) * 3 + codes // base


def translate_code_inv(codes, n_sites):
    base = 3 ** (n_sites - 1)
    return codes // 3 + (codes % 3) * base


def reflect_code(codes, n_sites):
    """Reverse the site order (site j -> n-1-j)."""
    digits = spin_digits(codes, n_sites)
    pows = 3 ** np.arange(n_sites - 1, -1, -1, dtype=np.int64)
    return digits.astype(np.int64) @ pows


def invert_code(codes, n_sites):
    """Flip every spin, m -> -m (digit d -> 2-d)."""
    return (3**n_sites - 1) - codes


def spin_configs_with_sz(n_sites: int, total_sz: int) -> np.ndarray:
    """Sorted codes of all spin-1 configurations with given total S^z.

    Built site by site, pruning branches that cannot reach the target
    magnetization; memory stays O(result size).
    """
    codes = np.zeros(1, dtype=np.int64)
    mags = np.zeros(1, dtype=np.int64)
    for j in range(n_sites):
        remaining = n_sites - j - 1
        parts_c, parts_m = [], []
        for digit, dm in ((0, 1), (1, 0), (2, -1)):
            m = mags + dm
            keep = np.abs(total_sz - m) <= remaining
            if np.any(keep):
                parts_c.append(codes[keep] + digit * 3**j)
                parts_m.append(m[keep])
        codes = np.concatenate(parts_c) if parts_c else np.empty(0, dtype=np.int64)
        mags = np.concatenate(parts_m) if parts_m else np.empty(0, dtype=np.int64)
    codes.sort()
    return codes


@dataclass
class SectorBasis:
    """Orthonormal symmetry-adapted basis of one sector.

    The basis vector attached to representative a is
    ``|a~> = (1/sqrt(orbit_size_a)) * sum_{b in orbit(a)} phase_b |b>``,
    and ``lookup`` maps any configuration b of the restricted space to
    (position of rep(b) in ``representatives``, phase_b); position is -1
    for configurations whose orbit is annihilated by the projector.
    """

    kind: str                      # "spin" or "boson"
    n_sites: int
    sector: SymmetrySector | None
    configs: np.ndarray            # all configs of the restricted space, sorted
    representatives: np.ndarray    # orbit representatives, sorted
    orbit_sizes: np.ndarray        # per-representative orbit length
    rep_pos: np.ndarray            # per-config position of its representative
    phases: np.ndarray             # per-config phase (+-1 or complex)
    group_order: int = 1
    particles: int | None = None   # boson sectors only

    @property
    def dim(self) -> int:
        return len(self.representatives)

    @property
    def norms(self) -> np.ndarray:
        """Normalization 1/sqrt(orbit size) of each representative vector."""
        return 1.0 / np.sqrt(self.orbit_sizes)

    def config_index(self, codes) -> np.ndarray:
        """Positions of configuration codes in the restricted space."""
        idx = np.searchsorted(self.configs, codes)
        idx = np.clip(idx, 0, len(self.configs) - 1)
        if not np.all(self.configs[idx] == codes):
            raise KeyError("configuration outside the restricted space")
        return idx

    def lookup(self, codes):
        """(representative position, phase) for configuration codes."""
        idx = self.config_index(codes)
        return self.rep_pos[idx], self.phases[idx]

    def expand(self, vec: np.ndarray) -> np.ndarray:
        """Amplitudes of a sector vector on the full restricted config list."""
        if len(vec) != self.dim:
            raise ValueError("vector length does not match sector dimension")
        amps = np.zeros(len(self.configs), dtype=np.result_type(vec, self.phases))
        valid = self.rep_pos >= 0
        rp = self.rep_pos[valid]
        amps[valid] = vec[rp] * self.phases[valid] / np.sqrt(self.orbit_sizes[rp])
        return amps

    def project(self, amps: np.ndarray) -> np.ndarray:
        """Sector components of amplitudes given on the restricted config list.

        Exact (equals <a~|psi>) only when psi lies in the sector; used with a
        norm check by callers that rely on that.
        """
        is_rep = np.zeros(len(self.configs), dtype=bool)
        rep_idx = self.config_index(self.representatives)
        is_rep[rep_idx] = True
        return amps[rep_idx] * np.sqrt(self.orbit_sizes)


def enumerate_spin_sector(n_sites: int, sector: SymmetrySector) -> SectorBasis:
    """Symmetry-adapted orthonormal basis of a spin-1 chain sector.

    Parameters
    ----------
    n_sites : even chain length, 2 <= n_sites <= 20
    sector : magnetization plus optional momentum/reflection/inversion labels
    """
    if n_sites % 2 != 0:
        raise ValueError("only even chain lengths are supported")
    if not 2 <= n_sites <= 20:
        raise ValueError("n_sites must be in 2..20")
    sector.validate(n_sites)

    configs = spin_configs_with_sz(n_sites, sector.total_sz)
    n_cfg = len(configs)

    use_t = sector.momentum is not None
    use_i = sector.reflection is not None
    use_z = sector.spin_inversion is not None
    n_trans = n_sites if use_t else 1
    group_order = n_trans * (2 if use_i else 1) * (2 if use_z else 1)

    # Momentum character chi(T) = exp(-i k); real (+-1) whenever reflection
    # is on (sector.validate enforces q in {0, n/2} in that case).
    if use_t:
        q = sector.momentum
        if 2 * q % n_sites == 0:
            chi_t = 1.0 if q == 0 else -1.0
        else:
            chi_t = np.exp(-2j * np.pi * q / n_sites)
    else:
        chi_t = 1.0
    complex_chars = isinstance(chi_t, complex)
    char_dtype = np.complex128 if complex_chars else np.float64

    mn = configs.copy()
    best_char = np.ones(n_cfg, dtype=char_dtype)
    stab_sum = np.zeros(n_cfg, dtype=char_dtype)

    def visit(gc, char):
        nonlocal mn, best_char
        better = gc < mn
        if np.any(better):
            mn[better] = gc[better]
            best_char[better] = char
        stab_sum[gc == configs] += char

    c_t = configs.copy()                      # T^r applied to configs
    c_it = reflect_code(configs, n_sites) if use_i else None   # T^-r I
    char_r = 1.0 + 0j if complex_chars else 1.0
    for _ in range(n_trans):
        variants = [(c_t, char_r)]
        if use_i:
            variants.append((c_it, sector.reflection * char_r))
        for arr, char in variants:
            visit(arr, char)
            if use_z:
                visit(invert_code(arr, n_sites), sector.spin_inversion * char)
        if use_t:
            c_t = translate_code(c_t, n_sites)
            if use_i:
                c_it = translate_code_inv(c_it, n_sites)
            char_r = char_r * chi_t

    # Valid representatives: own orbit minimum with nonvanishing projector.
    w = stab_sum.real
    is_rep = (mn == configs) & (w > 0.5)
    representatives = configs[is_rep]
    orbit_sizes_rep = np.round(group_order / w[is_rep]).astype(np.int64)

    pos = np.searchsorted(representatives, mn)
    pos = np.clip(pos, 0, max(len(representatives) - 1, 0))
    if len(representatives):
        valid = representatives[pos] == mn
    else:
        valid = np.zeros(n_cfg, dtype=bool)
    rep_pos = np.where(valid, pos, -1).astype(np.int64)

    # phase_b = chi(g0) with g0(rep) = b; the stored g maps b -> rep, so
    # the phase is the conjugate character.
    phases = np.conj(best_char) if complex_chars else best_char.copy()
    phases[~valid] = 0

    return SectorBasis(
        kind="spin",
        n_sites=n_sites,
        sector=sector,
        configs=configs,
        representatives=representatives,
        orbit_sizes=orbit_sizes_rep,
        rep_pos=rep_pos,
        phases=phases,
        group_order=group_order,
    )


def enumerate_boson_sector(n_sites: int, particles: int) -> SectorBasis:
    """Basis of all hardcore-boson occupation configs with fixed particle count."""
    if not 0 <= particles <= n_sites:
        raise ValueError(f"particle count {particles} out of range 0..{n_sites}")
    dim = int(round(comb(n_sites, particles)))
    # Gosper's hack-style enumeration, vectorized via DP over sites.
    codes = np.zeros(1, dtype=np.int64)
    counts = np.zeros(1, dtype=np.int64)
    for j in range(n_sites):
        remaining = n_sites - j - 1
        parts_c, parts_n = [], []
        for bit in (0, 1):
            n = counts + bit
            keep = (n <= particles) & (particles - n <= remaining)
            if np.any(keep):
                parts_c.append(codes[keep] + (bit << j))
                parts_n.append(n[keep])
        codes = np.concatenate(parts_c)
        counts = np.concatenate(parts_n)
    codes.sort()
    assert len(codes) == dim
    return SectorBasis(
        kind="boson",
        n_sites=n_sites,
        sector=None,
        configs=codes,
        representatives=codes,
        orbit_sizes=np.ones(dim, dtype=np.int64),
        rep_pos=np.arange(dim, dtype=np.int64),
        phases=np.ones(dim, dtype=np.float64),
        group_order=1,
        particles=particles,
    )


def occupations(codes: np.ndarray, n_sites: int) -> np.ndarray:
    """Occupation-number matrix of boson codes, shape (len(codes), n_sites)."""
    codes = np.asarray(codes, dtype=np.int64)
    bits = (codes[..., None] >> np.arange(n_sites)) & 1
    return bits.astype(np.int8)
