"""Sparse many-body Hamiltonian in the Fock basis.

The operator splits into a static part (hopping with flux phases plus
on-site interaction) and a time-dependent diagonal from the traveling
period-3 potential.  The time-dependent diagonal is never re-assembled:
evaluating H(t) costs one cosine per site plus a matrix-free product.

Site j with driving offset j_eff feels

    V_j(t) = P0 * cos(2*pi*j_eff/3 - phi0 - omega*t)

and a bond (a -> b, phase p) contributes the hopping term
-J * exp(2i*pi*p) * a^dag_a a_b plus its Hermitian conjugate.  Bosonic
matrix elements carry the usual sqrt(n (m+1)) factors.  All energies are
in units of J; J itself defaults to 1 and is the declared energy unit.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse

from .basis import FockBasis, TwoSpeciesBasis
from .lattice import LatticeGraph

# P0 must dominate both the hopping and the interaction for the pumped
# particles to stay site-localized; warn (not reject) below this ratio.
_LOCALIZED_REGIME_FACTOR = 10.0


@dataclass(frozen=True)
class ModelParams:
    """Energy and driving parameters, all in units of the hopping J.

    ``omega`` is signed: its sign selects the transport direction together
    with the initial driving phase ``phi0``.  ``flux`` mirrors the value in
    GeometrySpec for convenience when records are written.
    """

    J: float = 1.0
    U: float = 0.0
    P0: float = 60.0
    omega: float = 0.01
    phi0: float = 0.0
    flux: float = 0.0

    def __post_init__(self):
        scale = max(abs(self.J), abs(self.U))
        if self.P0 != 0.0 and self.P0 < _LOCALIZED_REGIME_FACTOR * scale:
            warnings.warn(
                f"P0={self.P0} is not large against J={self.J}, U={self.U}; "
                "particles may delocalize during the pump cycle",
                stacklevel=2,
            )

    @property
    def period(self) -> float:
        """Driving period T = 2*pi/|omega|."""
        return 2.0 * math.pi / abs(self.omega)


@dataclass(frozen=True)
class BandPreset:
    """Initial driving phase and frequency sign that select a pumped band."""

    band: str
    phi0: float
    omega_sign: int
    chern: int


BAND_PRESETS = {
    "+1": BandPreset("+1", 0.0, +1, -1),
    "-1": BandPreset("-1", math.pi, +1, -1),
    "0+": BandPreset("0+", math.pi / 2, -1, 2),
    "0-": BandPreset("0-", -math.pi / 2, -1, 2),
}


def params_for_band(band: str, *, U: float = 0.0, P0: float = 60.0,
                    omega_mag: float = 0.01, flux: float = 0.0,
                    J: float = 1.0) -> ModelParams:
    """ModelParams with phi0 and the sign of omega fixed by a band preset."""
    preset = BAND_PRESETS[band]
    return ModelParams(J=J, U=U, P0=P0, omega=preset.omega_sign * omega_mag,
                       phi0=preset.phi0, flux=flux)


def potential_at(t: float, j_eff: int, params: ModelParams) -> float:
    """Driving potential on a site with offset j_eff at time t."""
    return params.P0 * math.cos(2.0 * math.pi * j_eff / 3.0 - params.phi0
                                - params.omega * t)


@dataclass
class SparseHamiltonian:
    """H(t) = static_offdiag + diag(static_diag + drive_occupations @ V(t)).

    ``drive_occupations[k, j]`` is the occupation of site j in Fock state k,
    so the driving diagonal at time t is a single mat-vec against the
    per-site potential vector.  Instances are immutable in practice and
    apply() is reentrant.
    """

    static_offdiag: sparse.csr_matrix
    static_diag: np.ndarray
    drive_occupations: np.ndarray
    driving_offset: np.ndarray
    params: ModelParams

    @property
    def dim(self) -> int:
        return self.static_diag.shape[0]

    @property
    def n_sites(self) -> int:
        return self.drive_occupations.shape[1]

    def site_potentials(self, t: float) -> np.ndarray:
        p = self.params
        return p.P0 * np.cos(2.0 * np.pi * self.driving_offset / 3.0
                             - p.phi0 - p.omega * t)

    def diag_at(self, t: float) -> np.ndarray:
        return self.static_diag + self.drive_occupations @ self.site_potentials(t)

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        """H(t) @ psi without materializing a dense matrix."""
        if psi.shape[0] != self.dim:
            raise ValueError(f"state has dim {psi.shape[0]}, H has dim {self.dim}")
        return self.static_offdiag @ psi + self.diag_at(t) * psi

    def dense_at(self, t: float) -> np.ndarray:
        """Dense H(t); a test and small-system oracle, capped at dim 2000."""
        if self.dim > 2000:
            raise ValueError(f"dense oracle capped at dim 2000, have {self.dim}")
        h = self.static_offdiag.toarray()
        h[np.diag_indices(self.dim)] += self.diag_at(t)
        return h


def _hopping_matrix(graph: LatticeGraph, basis: FockBasis, J: float) -> sparse.csr_matrix:
    """Assemble -J sum_bonds exp(2i pi p) a^dag_from a_to + H.C. in the basis.

    Both directions of every bond are generated from the same sqrt product,
    so the matrix is Hermitian to the last bit.
    """
    rows, cols, vals = [], [], []
    index = basis.index
    for a, state in enumerate(basis.states):
        for bond in graph.bonds:
            i, j = bond.from_site, bond.to_site
            amp = -J * cmath.exp(2j * math.pi * bond.phase)
            if state[j] > 0:
                # a^dag_i a_j moves one particle j -> i
                factor = math.sqrt(state[j] * (state[i] + 1))
                target = list(state)
                target[j] -= 1
                target[i] += 1
                b = index[tuple(target)]
                rows.append(b)
                cols.append(a)
                vals.append(amp * factor)
            if state[i] > 0:
                factor = math.sqrt(state[i] * (state[j] + 1))
                target = list(state)
                target[i] -= 1
                target[j] += 1
                b = index[tuple(target)]
                rows.append(b)
                cols.append(a)
                vals.append(amp.conjugate() * factor)
    dim = basis.dim
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=np.complex128)
    return mat.tocsr()


def assemble(graph: LatticeGraph, basis: FockBasis,
             params: ModelParams) -> SparseHamiltonian:
    """Hamiltonian of a single boson species on the given graph."""
    if basis.n_sites != graph.n_sites:
        raise ValueError(
            f"basis has {basis.n_sites} sites, graph has {graph.n_sites}"
        )
    offdiag = _hopping_matrix(graph, basis, params.J)
    occ = basis.occupations
    static_diag = 0.5 * params.U * ((occ * occ - occ).sum(axis=1))
    return SparseHamiltonian(
        static_offdiag=offdiag,
        static_diag=np.asarray(static_diag, dtype=np.float64),
        drive_occupations=occ,
        driving_offset=np.asarray(graph.driving_offset, dtype=np.float64),
        params=params,
    )


def assemble_two_species(graph: LatticeGraph, basis: TwoSpeciesBasis,
                         params: ModelParams) -> SparseHamiltonian:
    """Two distinguishable species: each hops independently, U couples their
    densities site by site, and the driving acts on the total density."""
    if basis.n_sites != graph.n_sites:
        raise ValueError(
            f"basis has {basis.n_sites} sites, graph has {graph.n_sites}"
        )
    hop_up = _hopping_matrix(graph, basis.up, params.J)
    hop_down = _hopping_matrix(graph, basis.down, params.J)
    eye_up = sparse.identity(basis.up.dim, dtype=np.complex128, format="csr")
    eye_down = sparse.identity(basis.down.dim, dtype=np.complex128, format="csr")
    offdiag = (sparse.kron(hop_up, eye_down, format="csr")
               + sparse.kron(eye_up, hop_down, format="csr"))

    occ_up, occ_down = basis.up.occupations, basis.down.occupations
    static_diag = params.U * (occ_up @ occ_down.T).ravel()
    total_occ = (occ_up[:, None, :] + occ_down[None, :, :]).reshape(basis.dim,
                                                                    basis.n_sites)
    return SparseHamiltonian(
        static_offdiag=offdiag,
        static_diag=np.asarray(static_diag, dtype=np.float64),
        drive_occupations=total_occ,
        driving_offset=np.asarray(graph.driving_offset, dtype=np.float64),
        params=params,
    )


def with_params(ham: SparseHamiltonian, params: ModelParams) -> SparseHamiltonian:
    """Same static structure under different driving parameters.

    Valid only when J is unchanged (J is baked into the hopping matrix) and
    U is unchanged (baked into the static diagonal).
    """
    if params.J != ham.params.J or params.U != ham.params.U:
        raise ValueError("with_params can only change driving parameters")
    return replace(ham, params=params)
