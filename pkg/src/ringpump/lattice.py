"""Ring-lead lattice graphs: bonds with flux phases and period-3 driving offsets.

The main geometry is a ring of ``L_R`` sites with a source lead attached to
ring site 0 and a drain lead attached to ring site ``L_R/2``.  Each site
carries an integer driving offset ``j_eff`` that places it in the traveling
period-3 potential: the offset counts graph distance from the source site
along the source-to-drain path, identically on both ring arms, so the
potential wave transports particles through both arms in the same
direction.  Reduced models (open chain, closed loop, three-site fork) share
the same graph type.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Bond:
    """Directed bond; ``phase`` is the fraction of 2*pi carried by the hopping
    term a^dag(from_site) a(to_site).  The conjugate direction is implied."""

    from_site: int
    to_site: int
    phase: float = 0.0


@dataclass(frozen=True)
class GeometrySpec:
    """Ring-lead geometry parameters.

    ``flux`` is the total dimensionless flux through the ring, in units of
    the single-particle flux quantum.  ``gauge`` controls how that flux is
    distributed over the ring bonds: "uniform" puts flux/L_R on every bond,
    "single-bond" concentrates it on the last ring bond.  Only the loop sum
    is physical; both choices must give identical observables.
    """

    ring_length: int
    source_length: int = 1
    drain_length: int = 1
    flux: float = 0.0
    gauge: str = "uniform"


@dataclass(frozen=True)
class LatticeGraph:
    n_sites: int
    bonds: tuple[Bond, ...]
    driving_offset: tuple[int, ...]
    source_site: int
    drain_site: int
    ring_sites: tuple[int, ...] = ()
    source_sites: tuple[int, ...] = ()
    drain_sites: tuple[int, ...] = ()
    labels: tuple[str, ...] = ()

    def degree(self, site: int) -> int:
        return sum(1 for b in self.bonds if site in (b.from_site, b.to_site))


_SUBLATTICE = "ABC"


def _labels_from_offsets(offsets) -> tuple[str, ...]:
    return tuple(_SUBLATTICE[j % 3] for j in offsets)


def build_ring_lead(spec: GeometrySpec) -> LatticeGraph:
    """Ring with source and drain leads, Fig-of-eight free: one loop, two stubs.

    Sites are numbered source lead first (far end inward), then the ring
    counterclockwise starting at the source junction, then the drain lead
    (junction outward).  The drain attaches half way around the ring, which
    is why ``ring_length`` must be even.
    """
    L_R, L_S, L_D = spec.ring_length, spec.source_length, spec.drain_length
    if L_R % 2 != 0:
        raise ValueError(
            f"ring_length={L_R} is odd: the drain attaches at ring position "
            "L_R/2 opposite the source junction, which requires an even ring"
        )
    if L_R < 4:
        raise ValueError(f"ring_length must be at least 4, got {L_R}")
    if L_S < 1 or L_D < 1:
        raise ValueError("both leads need at least one site")
    if spec.gauge not in ("uniform", "single-bond"):
        raise ValueError(f"unknown gauge {spec.gauge!r}")

    n_sites = L_S + L_R + L_D
    source_ids = tuple(range(L_S))
    ring_ids = tuple(range(L_S, L_S + L_R))
    drain_ids = tuple(range(L_S + L_R, n_sites))
    source_site = source_ids[-1]          # lead site touching the ring
    drain_site = drain_ids[0]

    bonds = []
    for i in range(L_S - 1):
        bonds.append(Bond(source_ids[i], source_ids[i + 1]))
    bonds.append(Bond(source_site, ring_ids[0]))
    for k in range(L_R):
        if spec.gauge == "uniform":
            phase = spec.flux / L_R
        else:
            phase = spec.flux if k == L_R - 1 else 0.0
        bonds.append(Bond(ring_ids[k], ring_ids[(k + 1) % L_R], phase))
    bonds.append(Bond(ring_ids[L_R // 2], drain_site))
    for i in range(L_D - 1):
        bonds.append(Bond(drain_ids[i], drain_ids[i + 1]))

    offsets = [0] * n_sites
    for i, site in enumerate(source_ids):
        offsets[site] = i - (L_S - 1)             # 0 at the junction, negative behind
    for k, site in enumerate(ring_ids):
        arm_position = min(k, L_R - k)            # same on both arms (mirror rule)
        offsets[site] = arm_position + 1
    for i, site in enumerate(drain_ids):
        offsets[site] = L_R // 2 + 2 + i

    offsets = tuple(offsets)
    return LatticeGraph(
        n_sites=n_sites,
        bonds=tuple(bonds),
        driving_offset=offsets,
        source_site=source_site,
        drain_site=drain_site,
        ring_sites=ring_ids,
        source_sites=source_ids,
        drain_sites=drain_ids,
        labels=_labels_from_offsets(offsets),
    )


def build_chain(n_sites: int, periodic: bool = False) -> LatticeGraph:
    """Open chain (or closed loop) with zero bond phases and offsets 0..L-1.

    The closed loop is only sensible for lengths divisible by 3, where the
    period-3 offset pattern wraps seamlessly; it exists for symmetry checks.
    """
    if n_sites < 2:
        raise ValueError(f"chain needs at least 2 sites, got {n_sites}")
    bonds = [Bond(i, i + 1) for i in range(n_sites - 1)]
    if periodic:
        bonds.append(Bond(n_sites - 1, 0))
    offsets = tuple(range(n_sites))
    return LatticeGraph(
        n_sites=n_sites,
        bonds=tuple(bonds),
        driving_offset=offsets,
        source_site=0,
        drain_site=n_sites - 1,
        labels=_labels_from_offsets(offsets),
    )


def build_fork(direction: str = "split") -> LatticeGraph:
    """Three-site junction: site 0 bonded to sites 1 and 2, no 1-2 bond.

    direction="split": site 0 is the input (offset 0), the outer pair share
    offset 1, so one transfer window moves particles 0 -> {1, 2}.
    direction="merge": the outer pair are the inputs (offset 0) and site 0
    is the output (offset 1), the interference configuration.
    """
    if direction == "split":
        offsets = (0, 1, 1)
        source, drain = 0, 1
    elif direction == "merge":
        offsets = (1, 0, 0)
        source, drain = 1, 0
    else:
        raise ValueError(f"direction must be 'split' or 'merge', got {direction!r}")
    return LatticeGraph(
        n_sites=3,
        bonds=(Bond(0, 1), Bond(0, 2)),
        driving_offset=offsets,
        source_site=source,
        drain_site=drain,
        labels=_labels_from_offsets(offsets),
    )


def driving_offsets(graph: LatticeGraph) -> list[int]:
    """Per-site driving offsets j_eff, as assigned by the graph builder."""
    return list(graph.driving_offset)


def arm_sites(graph: LatticeGraph) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Interior sites of the two ring arms, ordered by arm position.

    Element k of the first tuple mirrors element k of the second across the
    source-drain axis (both carry the same driving offset).
    """
    ring = graph.ring_sites
    if not ring:
        raise ValueError("graph has no ring")
    half = len(ring) // 2
    upper = tuple(ring[1:half])
    lower = tuple(ring[-1:half:-1])
    return upper, lower


def loop_phase_sum(graph: LatticeGraph) -> float:
    """Oriented sum of bond phases around the ring, mod 1."""
    ring = set(graph.ring_sites)
    total = sum(b.phase for b in graph.bonds
                if b.from_site in ring and b.to_site in ring)
    return total % 1.0


def format_graph(graph: LatticeGraph) -> str:
    """Plain-text dump: site table then bond table, fixed column order."""
    lines = ["site  j_eff  label  role"]
    roles = {}
    for s in graph.source_sites:
        roles[s] = "source"
    for s in graph.ring_sites:
        roles[s] = "ring"
    for s in graph.drain_sites:
        roles[s] = "drain"
    roles.setdefault(graph.source_site, "source")
    roles.setdefault(graph.drain_site, "drain")
    for site in range(graph.n_sites):
        label = graph.labels[site] if graph.labels else "-"
        lines.append(
            f"{site:4d}  {graph.driving_offset[site]:5d}  {label:>5s}  "
            f"{roles.get(site, 'chain')}"
        )
    lines.append("")
    lines.append("from    to  phase")
    for b in graph.bonds:
        lines.append(f"{b.from_site:4d}  {b.to_site:4d}  {b.phase:.12g}")
    return "\n".join(lines)
