import math
import warnings

import numpy as np
import pytest

from ringpump.basis import enumerate_basis, enumerate_two_species, index_of
from ringpump.observables import (
    DensityTrace,
    Fidelity,
    TransmissionCurve,
    arrival_time,
    bell_fidelity,
    centroid_positions,
    flux_quantum,
    noon_fidelity,
    pumped_displacement,
    site_densities,
    write_density_csv,
    write_transmission_csv,
)


def test_site_densities_fock_state():
    basis = enumerate_basis(3, 3)
    psi = np.zeros(basis.dim, dtype=complex)
    psi[index_of(basis, (3, 0, 0))] = 1.0
    assert np.allclose(site_densities(psi, basis), [3, 0, 0])


def test_site_densities_superposition():
    basis = enumerate_basis(2, 1)
    psi = np.zeros(basis.dim, dtype=complex)
    psi[index_of(basis, (1, 0))] = 1 / math.sqrt(2)
    psi[index_of(basis, (0, 1))] = 1 / math.sqrt(2)
    assert np.allclose(site_densities(psi, basis), [0.5, 0.5])


def test_site_densities_sum_to_n():
    rng = np.random.default_rng(1)
    basis = enumerate_basis(5, 3)
    psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    psi /= np.linalg.norm(psi)
    assert site_densities(psi, basis).sum() == pytest.approx(3.0, abs=1e-12)


def test_arrival_time_examples():
    # ring of 8, one-site leads: 6 hops at 3 sites per period
    assert arrival_time(8, "+1", 0.01) == pytest.approx(2 * 2 * math.pi / 0.01)
    assert arrival_time(8, "-1", 0.01) == pytest.approx(1256.6, rel=1e-3)
    # central band moves twice as fast
    assert arrival_time(8, "0+", 0.01) == pytest.approx(628.3, rel=1e-3)
    # ring of 6: five hops
    assert arrival_time(6, "-1", 0.01) == pytest.approx(1047.2, rel=1e-3)


def _uniform_curve(values):
    n = len(values)
    return TransmissionCurve(flux_grid=np.arange(n) / n,
                             transmitted=np.asarray(values, dtype=float),
                             fitted_period=None, n_particles=3,
                             arrival_time=0.0)


def test_flux_quantum_fractional():
    phis = np.arange(24) / 24
    curve = _uniform_curve(3 - 1 + np.cos(np.pi * phis * 3) ** 2)
    assert flux_quantum(curve) == pytest.approx(1 / 3)


def test_flux_quantum_single_particle_period():
    phis = np.arange(16) / 16
    curve = _uniform_curve(np.cos(np.pi * phis) ** 2)
    assert flux_quantum(curve) == pytest.approx(1.0)


def test_flux_quantum_flat_returns_none():
    curve = _uniform_curve(np.full(16, 4.0))
    assert flux_quantum(curve) is None


def test_flux_quantum_rejects_bad_grid():
    curve = TransmissionCurve(flux_grid=np.array([0.0, 0.3, 0.5]),
                              transmitted=np.array([1.0, 0.5, 0.0]),
                              fitted_period=None, n_particles=1,
                              arrival_time=0.0)
    with pytest.raises(ValueError):
        flux_quantum(curve)


def test_pumped_displacement_synthetic():
    # density hops one site every quarter period: 4 sites per period
    times = np.linspace(0.0, 1.0, 5)
    densities = np.zeros((5, 6))
    for k in range(5):
        densities[k, k] = 1.0
    trace = DensityTrace(times=times, densities=densities)
    assert pumped_displacement(trace, 1.0) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        pumped_displacement(trace, 2.0)


def test_centroid_positions_custom_coordinates():
    trace = DensityTrace(times=np.array([0.0, 1.0]),
                         densities=np.array([[1.0, 0.0], [0.0, 1.0]]))
    x = centroid_positions(trace, [5.0, 9.0])
    assert np.allclose(x, [5.0, 9.0])


def test_noon_fidelity_trivials():
    basis = enumerate_basis(3, 4)
    target = np.zeros(basis.dim, dtype=complex)
    target[index_of(basis, (0, 4, 0))] = 1 / math.sqrt(2)
    target[index_of(basis, (0, 0, 4))] = 1 / math.sqrt(2)
    fid = noon_fidelity(target, basis, (1, 2), 4)
    assert fid.raw == pytest.approx(1.0)
    assert fid.phase_max == pytest.approx(1.0)

    one_sided = np.zeros(basis.dim, dtype=complex)
    one_sided[index_of(basis, (0, 4, 0))] = 1.0
    fid = noon_fidelity(one_sided, basis, (1, 2), 4)
    assert fid.raw == pytest.approx(0.5)
    assert fid.phase_max == pytest.approx(0.5)


def test_noon_fidelity_phase_maximization():
    basis = enumerate_basis(3, 2)
    psi = np.zeros(basis.dim, dtype=complex)
    psi[index_of(basis, (0, 2, 0))] = 1 / math.sqrt(2)
    psi[index_of(basis, (0, 0, 2))] = 1j / math.sqrt(2)    # quarter-turn branch
    fid = noon_fidelity(psi, basis, (1, 2), 2)
    assert fid.raw == pytest.approx(0.5)
    assert fid.phase_max == pytest.approx(1.0)


def test_bell_fidelity_trivials():
    basis = enumerate_two_species(4, 1, 1)
    up_site, low_site = 1, 3

    def pair_state(site_up, site_down):
        occ_up = [0] * 4
        occ_dn = [0] * 4
        occ_up[site_up] = 1
        occ_dn[site_down] = 1
        return basis.index_of_pair(occ_up, occ_dn)

    bell = np.zeros(basis.dim, dtype=complex)
    bell[pair_state(up_site, low_site)] = 1 / math.sqrt(2)
    bell[pair_state(low_site, up_site)] = 1 / math.sqrt(2)
    fid = bell_fidelity(bell, basis, (up_site,), (low_site,))
    assert fid.raw == pytest.approx(1.0)
    assert fid.phase_max == pytest.approx(1.0)

    product = np.zeros(basis.dim, dtype=complex)
    product[pair_state(up_site, low_site)] = 1.0
    fid = bell_fidelity(product, basis, (up_site,), (low_site,))
    assert fid.phase_max == pytest.approx(0.5)

    both_up = np.zeros(basis.dim, dtype=complex)
    both_up[pair_state(up_site, up_site)] = 1.0
    fid = bell_fidelity(both_up, basis, (up_site,), (low_site,))
    assert fid.phase_max == pytest.approx(0.0)


def test_bell_fidelity_u0_factorized_split():
    # each species independently split over both arms gives 1/2
    basis = enumerate_two_species(2, 1, 1)
    up = np.full(2, 1 / math.sqrt(2), dtype=complex)
    psi = np.kron(up, up)
    fid = bell_fidelity(psi, basis, (0,), (1,))
    assert fid.phase_max == pytest.approx(0.5)


def test_bell_fidelity_requires_single_pairs():
    basis = enumerate_two_species(2, 2, 1)
    with pytest.raises(ValueError):
        bell_fidelity(np.zeros(basis.dim, dtype=complex), basis, (0,), (1,))


def test_csv_schemas(tmp_path):
    trace = DensityTrace(times=np.array([0.0, 0.5]),
                         densities=np.array([[1.0, 0.0], [0.25, 0.75]]))
    path = tmp_path / "densities.csv"
    write_density_csv(path, trace)
    lines = path.read_text().splitlines()
    assert lines[0] == "time,n_site0,n_site1"
    assert lines[1] == "0,1,0"

    curve = _uniform_curve(np.cos(np.pi * np.arange(16) / 16) ** 2)
    curve.fitted_period = 1.0
    cpath = tmp_path / "curve.csv"
    write_transmission_csv(cpath, curve)
    lines = cpath.read_text().splitlines()
    assert lines[0] == "flux,transmitted,fitted_period"
    assert lines[1].endswith(",1")

    curve.fitted_period = None
    write_transmission_csv(cpath, curve)
    assert write_and_read_last_column(cpath) == "none"


def write_and_read_last_column(path):
    lines = path.read_text().splitlines()
    return lines[1].rsplit(",", 1)[1]
