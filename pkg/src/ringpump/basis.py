"""Occupation-number bases for bosons on a finite lattice.

A basis enumerates every way of distributing a fixed number of bosons over
the lattice sites, in ascending lexicographic order of the occupation
vector, so state indices are reproducible across runs.  The two-species
variant is the outer product of two single-species bases (each species
conserves its own particle number).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


class BasisLookupError(KeyError):
    """An occupation vector does not belong to the basis it was looked up in."""


def _occupation_vectors(n_sites: int, n_particles: int) -> Iterator[tuple[int, ...]]:
    if n_sites == 1:
        yield (n_particles,)
        return
    for head in range(n_particles + 1):
        for tail in _occupation_vectors(n_sites - 1, n_particles - head):
            yield (head,) + tail


@dataclass(frozen=True)
class FockBasis:
    """All bosonic occupation vectors for ``n_sites`` sites and ``n_particles`` particles.

    ``states[k]`` is the k-th occupation tuple, ``index[states[k]] == k``,
    and ``occupations[k, j]`` is the particle count of state k on site j.
    Instances are immutable after construction and safe to share between
    worker processes or threads.
    """

    n_sites: int
    n_particles: int
    states: tuple[tuple[int, ...], ...]
    index: dict[tuple[int, ...], int]
    occupations: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.states)

    def __repr__(self) -> str:
        return f"FockBasis(L={self.n_sites}, N={self.n_particles}, dim={self.dim})"


def basis_dimension(n_sites: int, n_particles: int) -> int:
    """Number of bosonic Fock states: binomial(N + L - 1, N)."""
    return math.comb(n_particles + n_sites - 1, n_particles)


def enumerate_basis(n_sites: int, n_particles: int) -> FockBasis:
    """Build the fixed-number bosonic basis for ``n_sites`` sites.

    States are ordered ascending-lexicographically; the ordering carries no
    physics but must stay byte-stable because result files index into it.
    """
    if n_sites < 1:
        raise ValueError(f"need at least one site, got n_sites={n_sites}")
    if n_particles < 0:
        raise ValueError(f"particle number must be non-negative, got {n_particles}")
    states = tuple(_occupation_vectors(n_sites, n_particles))
    assert len(states) == basis_dimension(n_sites, n_particles)
    occupations = np.array(states, dtype=np.float64).reshape(len(states), n_sites)
    occupations.flags.writeable = False
    index = {state: k for k, state in enumerate(states)}
    return FockBasis(n_sites, n_particles, states, index, occupations)


def index_of(basis: FockBasis, state: Sequence[int]) -> int:
    """Index of an occupation vector, with explicit errors for foreign states."""
    key = tuple(int(n) for n in state)
    if len(key) != basis.n_sites:
        raise BasisLookupError(
            f"state has {len(key)} sites, basis has {basis.n_sites}"
        )
    if sum(key) != basis.n_particles:
        raise BasisLookupError(
            f"state holds {sum(key)} particles, basis holds {basis.n_particles}"
        )
    try:
        return basis.index[key]
    except KeyError:
        raise BasisLookupError(f"state {key} not in basis") from None


@dataclass(frozen=True)
class TwoSpeciesBasis:
    """Product basis for two distinguishable boson species on the same lattice.

    Ordered up-major: pair (i_up, i_down) sits at index ``i_up * down.dim + i_down``.
    """

    n_sites: int
    n_up: int
    n_down: int
    up: FockBasis
    down: FockBasis

    @property
    def dim(self) -> int:
        return self.up.dim * self.down.dim

    def pair_index(self, i_up: int, i_down: int) -> int:
        return i_up * self.down.dim + i_down

    def state_pair(self, k: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        i_up, i_down = divmod(k, self.down.dim)
        return self.up.states[i_up], self.down.states[i_down]

    def index_of_pair(self, state_up: Sequence[int], state_down: Sequence[int]) -> int:
        return self.pair_index(index_of(self.up, state_up), index_of(self.down, state_down))

    def __repr__(self) -> str:
        return (
            f"TwoSpeciesBasis(L={self.n_sites}, N_up={self.n_up}, "
            f"N_down={self.n_down}, dim={self.dim})"
        )


def enumerate_two_species(n_sites: int, n_up: int, n_down: int) -> TwoSpeciesBasis:
    """Product-structured basis, up-major order."""
    up = enumerate_basis(n_sites, n_up)
    down = enumerate_basis(n_sites, n_down)
    return TwoSpeciesBasis(n_sites, n_up, n_down, up, down)
