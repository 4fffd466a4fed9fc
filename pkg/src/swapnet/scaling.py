"""Replication of trained two-qubit controls to larger pairwise systems.

Every even-index qubit copies source qubit 0's controls, every odd-index
qubit copies source qubit 1's, and each pair (2k, 2k+1) copies the source
coupling. With cross-pair couplings at zero the joint Hamiltonian is a sum
of commuting per-pair blocks, so the replicated system evolves as the tensor
product of independent copies of the trained pair; that block structure is
what makes transfer work without retraining.
"""

from __future__ import annotations

from dataclasses import dataclass

from .hamiltonian import ControlParameters, FourierSeries, all_pairs

CROSS_COUPLING_MODES = ("zero", "copied_from_intra")


@dataclass(frozen=True)
class ReplicationSpec:
    source: ControlParameters
    n_pairs: int
    cross_pair_coupling: str = "zero"

    def __post_init__(self):
        if self.source.n_qubits != 2:
            raise ValueError("replication source must be a two-qubit parameter set")
        nonzero = [p for p, s in self.source.coupling.items() if not s.is_zero()]
        if nonzero not in ([], [(0, 1)]):
            raise ValueError("source must carry a single (0,1) coupling series")
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be at least 1")
        if 2 * self.n_pairs > 8:
            raise ValueError("replication beyond 8 qubits is unsupported")
        if self.cross_pair_coupling not in CROSS_COUPLING_MODES:
            raise ValueError(f"cross_pair_coupling must be one of {CROSS_COUPLING_MODES}")


def replicate(spec: ReplicationSpec) -> ControlParameters:
    """Copy the trained pair's controls onto 2*n_pairs qubits."""
    src = spec.source
    n = 2 * spec.n_pairs
    intra = src.coupling.get((0, 1),
                             FourierSeries.zero(src.harmonics, src.base_frequency))
    zero = FourierSeries.zero(src.harmonics, src.base_frequency)
    cross = intra if spec.cross_pair_coupling == "copied_from_intra" else zero
    coupling = {}
    for i, j in all_pairs(n):
        is_intra = j == i + 1 and i % 2 == 0
        coupling[(i, j)] = intra if is_intra else cross
    return ControlParameters(
        n_qubits=n,
        tunneling=tuple(src.tunneling[q % 2] for q in range(n)),
        bias=tuple(src.bias[q % 2] for q in range(n)),
        coupling=coupling,
    )
