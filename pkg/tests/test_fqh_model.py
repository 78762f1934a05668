import numpy as np
import pytest

from scarkit.fqh_model import (
    LatticeGeometry,
    QuasiholePath,
    annihilation_operators,
    assemble_fqh_hamiltonian,
    coefficient_tables,
    fqh_operator,
    laughlin_state,
)
from scarkit.hilbert import enumerate_boson_sector
from scarkit.spectra import (
    entanglement_entropy,
    full_diagonalize,
    level_statistics,
)


@pytest.fixture(scope="module")
def lattice34():
    g = LatticeGeometry(3, 4)
    path = QuasiholePath(g)
    basis = enumerate_boson_sector(g.n_sites, g.particles)
    return g, path, basis


def test_geometry_conventions():
    g = LatticeGeometry(3, 4)
    z = g.positions
    assert z[0] == 0 and z[1] == 1 and z[3] == 1j   # row-major, x fastest
    assert g.center == 1 + 1.5j
    assert g.particles == 5
    with pytest.raises(ValueError):
        LatticeGeometry(3, 3)


def test_path_geometry(lattice34):
    g, path, _ = lattice34
    assert path.w2(0.0) == path.w2(4.0)
    # piecewise linearity: midpoints of edges
    for seg in range(4):
        a, b = path.w2(float(seg)), path.w2(float((seg + 1) % 4) or 4.0)
        assert np.isclose(path.w2(seg + 0.5), (a + b) / 2)
    # parity rule: 3 wide (odd) -> width 1, 4 tall (even) -> height 2
    xs = [path.w2(s).real for s in np.linspace(0, 4, 161)]
    ys = [path.w2(s).imag for s in np.linspace(0, 4, 161)]
    assert np.isclose(max(xs) - min(xs), 1.0)
    assert np.isclose(max(ys) - min(ys), 2.0)
    # never touches a lattice site
    dmin = min(
        np.min(np.abs(g.positions - path.w2(s))) for s in np.linspace(0, 4, 401)
    )
    assert dmin > 0.4


def test_even_lattice_path_is_two_wide():
    g = LatticeGeometry(4, 4)
    path = QuasiholePath(g)
    xs = [path.w2(s).real for s in np.linspace(0, 4, 161)]
    assert np.isclose(max(xs) - min(xs), 2.0)


def test_state_amplitudes_finite_nonzero(lattice34):
    g, path, basis = lattice34
    for s in (0.0, 1.3, 2.7):
        amp = laughlin_state(g, path.w1, path.w2(s), basis)
        assert np.all(np.isfinite(amp))
        assert np.min(np.abs(amp)) > 0
        # global phase: largest amplitude real positive
        k = np.argmax(np.abs(amp))
        assert abs(np.imag(amp[k])) < 1e-14 and np.real(amp[k]) > 0


def test_pole_rejected(lattice34):
    g, path, basis = lattice34
    with pytest.raises(ValueError, match="coincides"):
        laughlin_state(g, complex(1, 1), path.w2(0.0), basis)


def test_swap_of_quasiholes_is_symmetric(lattice34):
    g, path, basis = lattice34
    a = laughlin_state(g, path.w1, path.w2(0.7), basis)
    b = laughlin_state(g, path.w2(0.7), path.w1, basis)
    assert abs(abs(np.vdot(a, b)) - 1.0) < 1e-12


def test_annihilators_kill_the_state(lattice34):
    g, path, basis = lattice34
    s = 0.7
    lams, gams = annihilation_operators(g, path.w1, path.w2(s), basis)
    phi = laughlin_state(g, path.w1, path.w2(s), basis)
    for op in lams:
        assert np.linalg.norm(op @ phi) < 1e-8
        assert abs(np.vdot(op @ phi, op @ phi)) < 1e-16
    for op in gams:
        assert np.linalg.norm(op @ phi) < 1e-8


def test_gamma_on_single_particle_sector():
    g = LatticeGeometry(2, 2)
    basis = enumerate_boson_sector(4, 1)
    path = QuasiholePath(g)
    lams, gams = annihilation_operators(g, path.w1, path.w2(0.3), basis)
    vec = np.zeros(basis.dim)
    vec[0] = 1.0
    for gam in gams:
        assert np.linalg.norm(gam @ vec) == 0.0


@pytest.mark.parametrize("beta", [5.0, -5.0])
def test_tables_match_operator_products(beta):
    g = LatticeGeometry(2, 2)
    path = QuasiholePath(g)
    basis = enumerate_boson_sector(4, 1)
    for s in (0.0, 1.7, 3.2):
        lams, gams = annihilation_operators(g, path.w1, path.w2(s), basis)
        direct = sum(op.conj().T @ op for op in lams) + beta * sum(
            op.conj().T @ op for op in gams
        )
        tables = assemble_fqh_hamiltonian(g, path, s, beta, basis)
        assert abs(direct - tables).max() < 1e-10


def test_tables_match_operator_products_3x4(lattice34):
    g, path, basis = lattice34
    s, beta = 0.4, -5.0
    lams, gams = annihilation_operators(g, path.w1, path.w2(s), basis)
    direct = sum(op.conj().T @ op for op in lams) + beta * sum(
        op.conj().T @ op for op in gams
    )
    tables = assemble_fqh_hamiltonian(g, path, s, beta, basis)
    assert abs(direct - tables).max() < 1e-10


def test_table_structure_flags(lattice34):
    g, path, _ = lattice34
    t0 = coefficient_tables(g, path.w1, path.w2(0.2), beta=-5.0)
    t1 = coefficient_tables(g, path.w1, path.w2(1.9), beta=-5.0)
    assert np.allclose(t0.f_d, t1.f_d)           # independent of s
    assert np.allclose(t0.f_c, t1.f_c)
    tb = coefficient_tables(g, path.w1, path.w2(0.2), beta=3.0)
    assert np.allclose(tb.f_d, t0.f_d)           # f_d independent of beta too


def test_zero_mode_and_hermiticity(lattice34):
    g, path, basis = lattice34
    for beta in (5.0, -5.0):
        for s in np.linspace(0, 4, 9):
            h = assemble_fqh_hamiltonian(g, path, float(s), beta, basis)
            assert abs(h - h.conj().T).max() == 0.0
            phi = laughlin_state(g, path.w1, path.w2(float(s)), basis)
            assert np.linalg.norm(h @ phi) < 1e-8


def test_ground_state_embedding(lattice34):
    g, path, basis = lattice34
    h = assemble_fqh_hamiltonian(g, path, 0.7, 5.0, basis)
    dec = full_diagonalize(h)
    assert abs(dec.energies[0]) < 1e-9
    phi = laughlin_state(g, path.w1, path.w2(0.7), basis)
    assert abs(np.vdot(dec.states[:, 0], phi)) ** 2 > 1 - 1e-9


def test_scar_embedding_mid_spectrum(lattice34):
    g, path, basis = lattice34
    h = assemble_fqh_hamiltonian(g, path, 0.7, -5.0, basis)
    phi = laughlin_state(g, path.w1, path.w2(0.7), basis)
    dec = full_diagonalize(h, reference=phi)
    assert dec.scar_overlap > 1 - 1e-9
    below = np.sum(dec.energies < dec.energies[dec.scar_index] - 1e-9)
    assert 0.2 < below / dec.dim < 0.8           # genuinely mid-spectrum


def test_level_statistics_gue_and_goe(lattice34):
    g, path, basis = lattice34
    h = assemble_fqh_hamiltonian(g, path, 0.7, -5.0, basis)
    st = level_statistics(full_diagonalize(h, compute_vectors=False).energies)
    assert 0.59 <= st.r_ave <= 0.615              # generic position: unitary class
    h = assemble_fqh_hamiltonian(g, path, 0.5, -5.0, basis)
    st = level_statistics(full_diagonalize(h, compute_vectors=False).energies)
    assert 0.52 <= st.r_ave <= 0.55               # mirror-symmetric midpoint


def test_scar_entropy_low(lattice34):
    g, path, basis = lattice34
    phi = laughlin_state(g, path.w1, path.w2(0.7), basis)
    page = (12 * np.log(2) - 1) / 2
    assert entanglement_entropy(phi, basis) < 0.4 * page


def test_operator_derivative_matches_finite_difference(lattice34):
    g, path, basis = lattice34
    op = fqh_operator(g, path, -5.0, basis)
    s, h = 0.6, 1e-6
    fd = (op.value(s + h) - op.value(s - h)) / (2 * h)
    an = op.deriv(s)
    assert abs(fd - an).max() < 1e-5


def test_particle_number_is_conserved_blockwise():
    # the Hamiltonian acts within a fixed-number basis; stitching two sectors
    # together and applying the table assembly must not mix them
    g = LatticeGeometry(2, 2)
    path = QuasiholePath(g)
    b1 = enumerate_boson_sector(4, 1)
    b2 = enumerate_boson_sector(4, 2)
    h1 = assemble_fqh_hamiltonian(g, path, 0.3, -5.0, b1)
    h2 = assemble_fqh_hamiltonian(g, path, 0.3, -5.0, b2)
    assert h1.shape == (4, 4) and h2.shape == (6, 6)
