import numpy as np
import pytest
import scipy.fft

from scarkit.dynamics import NumericalAbort
from scarkit.fqh_model import (
    LatticeGeometry,
    QuasiholePath,
    assemble_fqh_hamiltonian,
    laughlin_state,
)
from scarkit.hilbert import enumerate_boson_sector
from scarkit.kpm import KpmConfig, jackson_kernel, spectral_function
from scarkit.spectra import full_diagonalize


@pytest.fixture(scope="module")
def setup34():
    g = LatticeGeometry(3, 4)
    path = QuasiholePath(g)
    basis = enumerate_boson_sector(g.n_sites, g.particles)
    h_minus = assemble_fqh_hamiltonian(g, path, 0.0, -5.0, basis)
    h_plus = assemble_fqh_hamiltonian(g, path, 0.0, 5.0, basis)
    dec_plus = full_diagonalize(h_plus)
    dec_minus = full_diagonalize(h_minus)
    phi = laughlin_state(g, path.w1, path.w2(0.0), basis)
    return h_minus, dec_plus, dec_minus, phi


def _oracle_curve(dec_minus, probe, bounds, n_moments, n_omega):
    """Jackson-broadened exact spectral function from the dense spectrum."""
    e_lo, e_hi = bounds
    a, b = 0.5 * (e_hi - e_lo), 0.5 * (e_hi + e_lo)
    weights = np.abs(dec_minus.states.conj().T @ probe) ** 2
    e_scaled = (dec_minus.energies - b) / a
    ks = np.arange(n_moments)
    mu = np.array([np.sum(weights * np.cos(k * np.arccos(e_scaled))) for k in ks])
    coef = np.zeros(n_omega)
    coef[:n_moments] = mu * jackson_kernel(n_moments)
    theta = np.pi * (np.arange(n_omega) + 0.5) / n_omega
    series = scipy.fft.dct(coef, type=3)
    omega_t = np.cos(theta)
    g = series / (np.pi * np.sqrt(1 - omega_t**2)) / a
    omega = a * omega_t + b
    order = np.argsort(omega)
    return omega[order], g[order]


def test_jackson_kernel_properties():
    g = jackson_kernel(256)
    assert g[0] == pytest.approx(1.0)
    assert np.all(np.diff(g) < 0)
    assert g[-1] < 1e-2


def test_config_guards():
    with pytest.raises(ValueError):
        KpmConfig(n_moments=32)
    with pytest.raises(ValueError):
        KpmConfig(kernel="lorentz")
    assert KpmConfig.preset("desk-3x4").n_moments == 2**12
    assert KpmConfig.preset("paper-6x4").n_moments == 2**17


def test_probe_normalization_guard(setup34):
    h_minus, dec_plus, _, _ = setup34
    with pytest.raises(ValueError):
        spectral_function(h_minus, 2.0 * dec_plus.states[:, 0], KpmConfig(n_moments=64))


def test_moment_blowup_detected(setup34):
    h_minus, dec_plus, _, _ = setup34
    cfg = KpmConfig(n_moments=256, bounds=(-1.0, 1.0))    # far too narrow
    with pytest.raises(NumericalAbort):
        spectral_function(h_minus, dec_plus.states[:, 0].astype(complex), cfg)


def test_scar_probe_peaks_at_zero(setup34):
    h_minus, _, _, phi = setup34
    cfg = KpmConfig(n_moments=2**12)
    om, g = spectral_function(h_minus, phi, cfg)
    peak = om[np.argmax(g)]
    cell = np.median(np.diff(om))
    assert abs(peak) < 8 * cell     # scar pinned at zero energy
    # integral normalization
    integral = np.trapezoid(g, om)
    assert abs(integral - 1.0) < 1e-3
    assert g.min() > -1e-8


def test_peaks_match_dense_oracle(setup34):
    h_minus, dec_plus, dec_minus, _ = setup34
    m = 2**12
    span = dec_minus.energies[-1] - dec_minus.energies[0]
    bounds = (
        float(dec_minus.energies[0] - 0.05 * span),
        float(dec_minus.energies[-1] + 0.05 * span),
    )
    cfg = KpmConfig(n_moments=m, bounds=bounds)
    for n in range(0, 7):
        probe = dec_plus.states[:, n].astype(complex)
        om, g = spectral_function(h_minus, probe, cfg)
        om_o, g_o = _oracle_curve(dec_minus, probe, bounds, m, len(om))
        assert np.allclose(om, om_o)
        cell = np.median(np.diff(om))
        assert abs(om[np.argmax(g)] - om_o[np.argmax(g_o)]) < 2 * cell
        # whole curves agree, not just peaks (same moments in exact arithmetic)
        assert np.max(np.abs(g - g_o)) < 1e-6 * np.max(g_o)


def test_moment_doubling_moves_peaks_less_than_cell(setup34):
    h_minus, dec_plus, _, _ = setup34
    probe = dec_plus.states[:, 3].astype(complex)
    om1, g1 = spectral_function(h_minus, probe, KpmConfig(n_moments=2**12))
    om2, g2 = spectral_function(h_minus, probe, KpmConfig(n_moments=2**13))
    cell = np.median(np.diff(om1))
    assert abs(om1[np.argmax(g1)] - om2[np.argmax(g2)]) < cell
