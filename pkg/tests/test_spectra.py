import math
import warnings

import numpy as np
import pytest

from ringpump.basis import enumerate_basis
from ringpump.hamiltonian import ModelParams, assemble
from ringpump.lattice import build_chain
from ringpump.spectra import (
    SpectralFlow,
    fit_gap_scaling,
    instantaneous_spectrum,
    levels_at_phase,
    track_branch,
    two_site_gap,
    write_flow_csv,
)


def quiet_params(**kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ModelParams(**kwargs)


def test_three_band_structure_gap_2j():
    # closed period-3 cell: three levels, adjacent minimal gaps 2J
    graph = build_chain(3, periodic=True)
    basis = enumerate_basis(3, 1)
    flow = instantaneous_spectrum(graph, basis, quiet_params(P0=60.0),
                                  np.linspace(0, 2 * math.pi, 361))
    assert flow.levels.shape == (361, 3)
    lower = (flow.levels[:, 1] - flow.levels[:, 0]).min()
    upper = (flow.levels[:, 2] - flow.levels[:, 1]).min()
    assert lower == pytest.approx(2.0, rel=0.05)
    assert upper == pytest.approx(2.0, rel=0.05)


def test_two_site_single_particle_gap_exactly_2j():
    report = two_site_gap(1, 0.0, "bottom", P0=60.0)
    assert report.min_gap == pytest.approx(2.0, abs=1e-6)
    report = two_site_gap(1, 7.0, "top", P0=120.0)
    assert report.min_gap == pytest.approx(2.0, abs=1e-6)


def test_drive_shift_relabels_loop_spectrum():
    # advancing the drive by a third of a cycle is a lattice translation of
    # the closed loop: the eigenvalue sets match
    graph = build_chain(6, periodic=True)
    basis = enumerate_basis(6, 1)
    ham = assemble(graph, basis, quiet_params(P0=45.0))
    for phi in (0.3, 1.1, 2.0):
        a = levels_at_phase(ham, phi)
        b = levels_at_phase(ham, phi + 2 * math.pi / 3)
        assert np.abs(a - b).max() < 1e-10


def test_bottom_gap_matches_sqrt_law():
    report = two_site_gap(4, 5.0, "bottom", P0=80.0)
    assert report.min_gap == pytest.approx(4.0, rel=0.05)


def test_bottom_gap_monotone_in_n():
    gaps = [two_site_gap(n, 10.0, "bottom").min_gap for n in range(1, 6)]
    assert all(g1 < g2 for g1, g2 in zip(gaps, gaps[1:]))


def test_top_gap_monotone_decreasing_in_u():
    gaps = [two_site_gap(3, u, "top", P0=200.0).min_gap for u in (4.0, 8.0, 16.0)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_top_gap_power_law_slopes():
    fit = fit_gap_scaling((2, 3), np.geomspace(6, 30, 5), "top")
    assert fit.slope[2] == pytest.approx(-1.0, abs=0.2)
    assert fit.slope[3] == pytest.approx(-2.0, abs=0.2)
    assert fit.exponent_u[3] == pytest.approx(2.0, abs=0.2)
    assert fit.exponent_j[3] == pytest.approx(3.0, abs=0.2)


def test_bottom_scaling_flat_in_u():
    fit = fit_gap_scaling((2, 4), np.geomspace(6, 30, 5), "bottom")
    assert abs(fit.slope[2]) < 0.05
    assert abs(fit.slope[4]) < 0.05
    assert fit.gaps[4][-1] == pytest.approx(4.0, rel=0.05)


def test_fit_needs_three_points():
    with pytest.raises(ValueError):
        fit_gap_scaling((2,), [5.0, 10.0], "top")


def test_eigenvalues_match_dense_oracle():
    rng = np.random.default_rng(0)
    graph = build_chain(3)
    basis = enumerate_basis(3, 3)          # dimension 10
    params = quiet_params(U=1.2, P0=50.0)
    ham = assemble(graph, basis, params)
    for phi in rng.uniform(0, 2 * math.pi, 5):
        potentials = 50.0 * np.cos(2 * np.pi * np.arange(3) / 3 - phi)
        dense = ham.static_offdiag.toarray()
        dense[np.diag_indices(basis.dim)] += (
            ham.static_diag + basis.occupations @ potentials)
        expected = np.linalg.eigvalsh(dense)
        assert np.abs(levels_at_phase(ham, phi) - expected).max() < 1e-9


def test_lowest_k_levels():
    graph = build_chain(3)
    basis = enumerate_basis(3, 4)
    ham = assemble(graph, basis, quiet_params(U=0.5, P0=40.0))
    full = levels_at_phase(ham, 1.0)
    partial = levels_at_phase(ham, 1.0, n_levels=4)
    assert np.abs(partial - full[:4]).max() < 1e-8


def test_track_branch_follows_overlap():
    # two uncoupled levels crossing: index sorting would swap them,
    # overlap tracking follows the diabatic branch through the crossing
    phis = np.linspace(-1, 1, 21)
    levels = np.stack([np.sort([p, -p]) for p in phis])
    flow = SpectralFlow(phi_grid=phis, levels=levels)
    vecs = []
    for p in phis:
        if p < 0:
            vecs.append(np.array([[1, 0], [0, 1.0]]).T)
        else:
            vecs.append(np.array([[0, 1], [1, 0.0]]).T)
    # branch starting as the lower level at phi<0 is state [1,0]: energy p
    energies = track_branch(flow, vecs, 0)
    assert energies[0] == pytest.approx(-1.0)
    assert energies[-1] == pytest.approx(1.0)


def test_flow_csv(tmp_path):
    flow = SpectralFlow(phi_grid=np.array([0.0, 1.0]),
                        levels=np.array([[0.0, 2.0], [0.5, 1.5]]))
    path = tmp_path / "flow.csv"
    write_flow_csv(path, flow)
    lines = path.read_text().splitlines()
    assert lines[0] == "phi,E_0,E_1"
    assert lines[2] == "1,0.5,1.5"
