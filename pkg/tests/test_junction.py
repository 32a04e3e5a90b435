import numpy as np
import pytest

from ringpump.junction import (
    JunctionConfig,
    fidelity_grid,
    run_bell_generation,
    run_fork_interference,
    run_junction,
    run_noon_generation,
    run_two_site_transfer,
    write_fidelity_csv,
)
from ringpump.oracle import dark_state_reflection


def test_single_particle_splitter_is_perfect():
    fid = run_noon_generation(1, 0.0)
    assert fid.raw == pytest.approx(1.0, abs=5e-3)
    assert fid.phase_max == pytest.approx(1.0, abs=5e-3)


def test_noon_fidelity_high_at_moderate_interaction():
    fid = run_noon_generation(4, 0.5)
    assert fid.phase_max >= 0.95


def test_noon_fidelity_degrades_for_many_strongly_coupled_particles():
    fid = run_noon_generation(6, 2.0)
    assert fid.phase_max < 0.9


def test_noon_curve_peaks_below_j():
    # fidelity against U is smooth and peaks inside 0 < U <= 1
    u_grid = (0.1, 0.3, 0.6, 1.0, 1.5, 2.5)
    values = [run_noon_generation(3, u).phase_max for u in u_grid]
    best = u_grid[int(np.argmax(values))]
    assert 0.0 < best <= 1.0
    steps = np.abs(np.diff(values))
    assert steps.max() < 0.5          # no jumps: the curve is continuous


def test_fork_interference_bright_and_dark():
    transmitted, reflected = run_fork_interference(0.0, 0.0)
    assert transmitted == pytest.approx(1.0, abs=0.01)
    transmitted, reflected = run_fork_interference(0.5, 0.0)
    assert transmitted == pytest.approx(0.0, abs=0.01)
    transmitted, reflected = run_fork_interference(0.25, 0.0)
    assert transmitted == pytest.approx(0.5, abs=0.01)


def test_fork_interference_matches_dark_state_law():
    for phase in np.linspace(0.0, 1.0, 5):
        _, reflected = run_fork_interference(float(phase), 0.0)
        assert reflected == pytest.approx(dark_state_reflection(phase), abs=0.01)


def test_two_site_single_particle_both_branches():
    for branch in ("top", "bottom"):
        result = run_two_site_transfer(1, 0.0, branch)
        assert result.transfer_fidelity > 0.99
        assert result.adiabatic


def test_two_site_bottom_branch_sequential_resonances():
    result = run_two_site_transfer(3, 5.0, "bottom")
    assert result.transfer_fidelity > 0.95
    assert result.max_intermediate > 0.5
    # the sequence |30> -> |21> -> |12> -> |03> appears in order
    states = list(result.states)
    peaks = [result.state_probs[:, states.index(s)].argmax()
             for s in [(3, 0), (2, 1), (1, 2), (0, 3)]]
    assert peaks == sorted(peaks)
    assert all(result.state_probs[:, states.index(s)].max() > 0.5
               for s in [(2, 1), (1, 2)])


def test_two_site_top_branch_transfer():
    result = run_two_site_transfer(3, 0.5, "top")
    assert result.transfer_fidelity >= 0.95


def test_two_site_top_branch_off_resonant_intermediates():
    # the intermediates stay nearly empty once U is large against J (their
    # admixture scales as (2J/U)^2); the drive must then be slow against
    # the shrunken gap
    result = run_two_site_transfer(2, 6.0, "top", omega=0.001, dt=0.05)
    assert result.transfer_fidelity >= 0.95
    assert result.max_intermediate < 0.1


def test_two_site_number_conserved():
    result = run_two_site_transfer(3, 1.0, "top")
    totals = result.state_probs.sum(axis=1)
    assert np.abs(totals - 1.0).max() < 1e-8


def test_nonadiabatic_run_flagged_not_fatal():
    # strong interaction collapses the top-branch gap: the jump is flagged
    result = run_two_site_transfer(3, 5.0, "top")
    assert not result.adiabatic
    assert result.transfer_fidelity < 0.9


def test_bell_factorizes_without_interaction():
    fid = run_bell_generation(0.0)
    assert fid.phase_max == pytest.approx(0.5, abs=0.01)


def test_bell_generation_with_interaction():
    fid = run_bell_generation(0.5)
    assert fid.phase_max > 0.9


def test_bell_attractive_mirror():
    # attractive interaction with the top branch behaves like the
    # repulsive bottom branch
    fid = run_bell_generation(-0.5, branch="top")
    assert fid.phase_max > 0.9


def test_run_junction_dispatch_and_grid(tmp_path):
    fid = run_junction(JunctionConfig(experiment="noon", n_particles=2, U=0.5))
    assert fid.phase_max > 0.9
    result = run_junction(JunctionConfig(experiment="interference",
                                         input_phase=0.25, U=0.0))
    assert result[0] == pytest.approx(0.5, abs=0.01)
    with pytest.raises(ValueError):
        run_junction(JunctionConfig(experiment="mystery"))

    rows = fidelity_grid((1, 2), (0.2, 0.5))
    assert len(rows) == 4
    path = tmp_path / "grid.csv"
    write_fidelity_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,U,fidelity_raw,fidelity_phase_max"
    assert len(lines) == 5
