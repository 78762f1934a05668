import numpy as np
import pytest

from scarkit.hilbert import SymmetrySector, enumerate_spin_sector
from scarkit.mps_model import (
    assemble_hamiltonian,
    mps_state_vector,
    scar_sector,
)
from scarkit.spectra import (
    R_GOE,
    R_POISSON,
    EigenDecomposition,
    entanglement_entropy,
    full_diagonalize,
    lanczos_lowest,
    level_statistics,
)


@pytest.fixture(scope="module")
def chain12():
    basis = enumerate_spin_sector(12, scar_sector(12))
    op = assemble_hamiltonian(12, "scar", basis)
    return basis, op


def test_zero_mode_is_the_scar(chain12):
    basis, op = chain12
    s = 0.5
    ref = mps_state_vector(12, s, basis)
    dec = full_diagonalize(op.value(s), reference=ref)
    assert dec.scar_overlap > 1 - 1e-10
    assert abs(dec.energies[dec.scar_index]) < 1e-9
    # residual invariant
    h = op.value(s)
    v = dec.states[:, dec.scar_index]
    assert np.linalg.norm(h @ v - dec.energies[dec.scar_index] * v) < 1e-9


def test_scar_identification_stable_over_ramp(chain12):
    basis, op = chain12
    for s in np.linspace(0, 1, 6):
        ref = mps_state_vector(12, s, basis)
        dec = full_diagonalize(op.value(s), reference=ref)
        assert dec.scar_overlap > 0.99


def test_dense_limit_guard():
    big = np.zeros((2, 2))
    dec = full_diagonalize(big)
    assert dec.dim == 2
    import scipy.sparse as sp

    with pytest.raises(ValueError, match="lanczos_lowest"):
        full_diagonalize(sp.eye(30001).tocsr())


def test_lanczos_against_dense(chain12):
    basis, op = chain12
    h = op.value(0.3)
    dec_dense = full_diagonalize(h)
    dec_lan = lanczos_lowest(h, k=50)
    assert np.allclose(dec_lan.energies, dec_dense.energies[:50], atol=1e-8)
    assert np.all(dec_lan.residuals < 1e-8)


def test_lanczos_ground_state_of_psd_model():
    basis = enumerate_spin_sector(10, SymmetrySector(0, 0, 1, None))
    op = assemble_hamiltonian(10, "ground", basis)
    dec = lanczos_lowest(op.value(0.5), k=1)
    assert abs(dec.energies[0]) < 1e-8


def test_level_statistics_constant_spacing():
    st = level_statistics(np.arange(100, dtype=float))
    assert np.allclose(st.r_values, 1.0)
    assert st.r_ave == pytest.approx(1.0)
    assert st.n_degenerate == 0


def test_level_statistics_flags_degeneracies():
    e = np.sort(np.array([0.0, 1.0, 1.0, 2.5, 3.0]))
    st = level_statistics(e)
    assert st.n_degenerate > 0
    assert np.min(st.r_values) == 0.0


def test_poisson_calibration():
    rng = np.random.default_rng(7)
    e = np.sort(np.cumsum(rng.exponential(size=100_000)))
    st = level_statistics(e)
    assert abs(st.r_ave - R_POISSON) < 0.01


def test_goe_calibration():
    rng = np.random.default_rng(11)
    n = 100_000
    mats = rng.normal(size=(n, 3, 3))
    mats = (mats + mats.transpose(0, 2, 1)) / 2.0
    evs = np.linalg.eigvalsh(mats)
    gaps = np.diff(evs, axis=1)
    r = np.min(gaps, axis=1) / np.max(gaps, axis=1)
    assert abs(np.mean(r) - R_GOE) < 0.01


def test_entropy_product_and_singlet():
    basis = enumerate_spin_sector(2, SymmetrySector(0))
    # product state |0 0> lives at digit pattern (1, 1) -> code 4
    amps = np.zeros(basis.dim)
    amps[basis.config_index(np.array([4]))[0]] = 1.0
    assert entanglement_entropy(amps, basis, n_a=1) < 1e-12
    # two-level singlet (|+ -> - |- +>)/sqrt(2): max entangled pair -> ln 2
    amps = np.zeros(basis.dim)
    amps[basis.config_index(np.array([0 + 3 * 2]))[0]] = 1 / np.sqrt(2)
    amps[basis.config_index(np.array([2 + 3 * 0]))[0]] = -1 / np.sqrt(2)
    assert entanglement_entropy(amps, basis, n_a=1) == pytest.approx(np.log(2), abs=1e-12)


def test_entropy_symmetric_under_complement(chain12):
    from scarkit.hilbert import reflect_code

    basis, op = chain12
    vec = mps_state_vector(12, 0.5, basis)
    amps = basis.expand(vec)
    # site-reversed state: S(first 4 sites) equals S of the original state's
    # last 4 sites, which is the complement entropy of the 8-site cut
    reflected = np.empty_like(amps)
    reflected[basis.config_index(reflect_code(basis.configs, 12))] = amps
    s_four = entanglement_entropy(reflected, basis, n_a=4)
    s_complement = entanglement_entropy(amps, basis, n_a=8)
    assert s_four == pytest.approx(s_complement, abs=1e-9)


def test_aklt_entropy_far_below_page(chain12):
    basis, _ = chain12
    vec = mps_state_vector(12, 0.0, basis)
    page = 6 * np.log(3) - 0.5
    assert entanglement_entropy(vec, basis) < 0.4 * page


def test_degenerate_rotation_recovers_reference():
    # two exactly degenerate states; reference is a rotation of them
    e = np.array([0.0, 0.0, 1.0])
    u = np.eye(3)
    dec = EigenDecomposition(energies=e, states=u.copy())
    ref = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
    idx = dec.identify_scar(ref)
    assert dec.scar_overlap == pytest.approx(1.0, abs=1e-12)
    assert idx in (0, 1)
