"""Exact time-evolution toolkit for interacting bosons pumped through
flux-pierced ring-lead lattices.

Modules: basis (Fock enumeration), lattice (graphs, flux phases, driving
offsets), hamiltonian (sparse assembly), propagator (Krylov stepping),
spectra (gap laws), observables (transmission, displacement, fidelities),
oracle (closed-form transmission laws), junction (reduced-model runs),
cli (batch harness).
"""

__version__ = "0.1.0"
